"""Batched successive-cancellation decoding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import CodeSpec, DimensionError
from .kernels import LLR_CLIP, check_node, check_node_minsum, variable_node


@dataclass
class ScTrace:
    """Decisions and decision LLRs of one SC pass.

    Arrays carry a leading batch axis when the decoder was given a batch.
    ``decision_llrs`` is recorded at every position, frozen ones included.
    """

    u_hat: np.ndarray
    decision_llrs: np.ndarray


def _as_batch(llr: np.ndarray, N: int) -> tuple[np.ndarray, bool]:
    llr = np.asarray(llr, dtype=np.float64)
    single = llr.ndim == 1
    if single:
        llr = llr[None, :]
    if llr.ndim != 2 or llr.shape[1] != N:
        raise DimensionError(f"expected LLRs of length N={N}, got shape {llr.shape}")
    return np.clip(llr, -LLR_CLIP, LLR_CLIP), single


class _ScPass:
    def __init__(self, info_mask, u_hat, dec_llr, genie, flip, fnode):
        self.info = info_mask
        self.u_hat = u_hat
        self.dec_llr = dec_llr
        self.genie = genie
        self.flip = flip
        self.f = fnode

    def run(self, llr: np.ndarray, offset: int) -> np.ndarray:
        n = llr.shape[1]
        if n == 1:
            i = offset
            L = llr[:, 0]
            self.dec_llr[:, i] = L
            if self.info[i]:
                d = (L < 0).astype(np.uint8)
                if self.flip is not None:
                    d ^= (self.flip == i).astype(np.uint8)
            else:
                d = np.zeros(L.shape[0], dtype=np.uint8)
            self.u_hat[:, i] = d
            fb = self.genie[:, i] if self.genie is not None else d
            return fb[:, None]
        h = n // 2
        left, right = llr[:, :h], llr[:, h:]
        xa = self.run(self.f(left, right), offset)
        xb = self.run(variable_node(left, right, xa), offset + h)
        return np.concatenate([xa ^ xb, xb], axis=1)


def sc_decode(llr: np.ndarray, spec: CodeSpec, genie: np.ndarray | None = None, *,
              flip: np.ndarray | None = None, min_sum: bool = False) -> ScTrace:
    """Successive-cancellation decoding of one frame or a batch of frames.

    ``genie`` (same shape as the decisions) makes the partial sums use the
    true bits instead of the decisions; the recorded decision LLRs are then
    the genie-aided ones. ``flip`` gives, per frame, a 0-based information
    position whose hard decision is inverted (-1 for none).
    """
    N = spec.N
    batch, single = _as_batch(llr, N)
    B = batch.shape[0]
    if genie is not None:
        genie = np.asarray(genie, dtype=np.uint8).reshape(B, N)
    if flip is not None:
        flip = np.broadcast_to(np.asarray(flip, dtype=np.int64), (B,))
    u_hat = np.zeros((B, N), dtype=np.uint8)
    dec = np.zeros((B, N), dtype=np.float64)
    fnode = check_node_minsum if min_sum else check_node
    _ScPass(spec.info_mask, u_hat, dec, genie, flip, fnode).run(batch, 0)
    if single:
        return ScTrace(u_hat[0], dec[0])
    return ScTrace(u_hat, dec)
