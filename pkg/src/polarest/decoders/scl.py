"""Batched LLR-based successive-cancellation list decoding."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import BatchCrc, CodeSpec
from .kernels import check_node, check_node_minsum, softplus, variable_node
from .sc import _as_batch

# Clip applied to stage reliabilities and sample terms.
RELIABILITY_MAX = 30.0


def stage_reliability(surviving_pms, discarded_pms=None, *, clip: float | None = RELIABILITY_MAX,
                      l_max: float = RELIABILITY_MAX) -> np.ndarray:
    """Log-ratio of surviving to discarded likelihood mass at one pruning stage.

    Works along the last axis. With no discarded paths the denominator is
    ``eps * exp(-min PM)`` with ``eps = exp(-l_max)``, i.e. eps relative to
    the best surviving path.
    """
    s = -np.asarray(surviving_pms, dtype=np.float64)
    num = np.logaddexp.reduce(s, axis=-1)
    if discarded_pms is None or np.size(discarded_pms) == 0:
        den = np.max(s, axis=-1) - l_max
    else:
        den = np.logaddexp.reduce(-np.asarray(discarded_pms, dtype=np.float64), axis=-1)
    out = num - den
    if clip is not None:
        out = np.clip(out, -clip, clip)
    return out


@dataclass
class SclTrace:
    """Outcome of SCL decoding, batch axis first when decoding a batch.

    ``paths`` is (B, L, N); ``path_metrics`` (B, L). ``stage_reliability`` is
    aligned with ``spec.info_set`` (B, K_total); entries before the list fills
    use the eps rule. ``stage_metrics`` (B, K_total, 2L), when recorded, holds
    the sorted candidate metrics of each pruning stage (NaN elsewhere); the
    first L columns survived.
    """

    paths: np.ndarray
    path_metrics: np.ndarray
    selected: np.ndarray
    stage_reliability: np.ndarray
    stage_metrics: np.ndarray | None
    list_size: int
    crc_pass: np.ndarray | None = None

    @property
    def u_hat(self) -> np.ndarray:
        idx = np.arange(self.paths.shape[0])
        return self.paths[idx, self.selected]


def _check_list_size(L: int) -> None:
    if L < 1 or L & (L - 1):
        raise ValueError(f"list size {L} is not a power of two")


def scl_decode(llr: np.ndarray, spec: CodeSpec, list_size: int, crc_aided: bool = False, *,
               record_metrics: bool = False, min_sum: bool = False,
               l_max: float = RELIABILITY_MAX) -> SclTrace:
    """SCL decoding with path metrics ln(1 + exp(-(1-2u) L)).

    Pruning keeps the ``list_size`` smallest candidate metrics, ties resolved
    by (parent path, bit 0 before 1). Batch input gives batch output; a 1-D
    input returns a trace with a batch axis of one.
    """
    _check_list_size(list_size)
    if crc_aided and spec.crc is None:
        raise ValueError("CRC-aided selection needs a CRC in the code spec")
    N, n = spec.N, spec.n
    batch, _ = _as_batch(llr, N)
    B = batch.shape[0]
    info = spec.info_mask
    info_rank = np.cumsum(info) - 1
    Kt = spec.K_total
    fnode = check_node_minsum if min_sum else check_node
    Lmax = list_size

    # llrs[lam]: (B, P, 2**lam) LLRs of the current node at level lam
    llrs = [None] * (n + 1)
    llrs[n] = batch[:, None, :]
    # left[lam]: encoded bits of the left child of the current level-lam node
    left = [None] * (n + 1)
    paths = np.zeros((B, 1, N), dtype=np.uint8)
    pm = np.zeros((B, 1))
    rel = np.full((B, Kt), np.nan)
    metrics = np.full((B, Kt, 2 * Lmax), np.nan) if record_metrics else None
    rows = np.arange(B)[:, None]

    for i in range(N):
        top = n if i == 0 else (i ^ (i - 1)).bit_length()
        for lam in range(top, 0, -1):
            node = llrs[lam]
            h = node.shape[2] // 2
            a, b = node[:, :, :h], node[:, :, h:]
            if (i >> (lam - 1)) & 1:
                llrs[lam - 1] = variable_node(a, b, left[lam])
            else:
                llrs[lam - 1] = fnode(a, b)
        Li = llrs[0][:, :, 0]  # (B, P)
        P = Li.shape[1]
        if not info[i]:
            bit = np.zeros((B, P, 1), dtype=np.uint8)
            pm = pm + softplus(-Li)
        else:
            cand = np.stack([pm + softplus(-Li), pm + softplus(Li)], axis=2).reshape(B, 2 * P)
            k = info_rank[i]
            if 2 * P <= Lmax:
                order = np.broadcast_to(np.arange(2 * P), (B, 2 * P))
                keep = cand
                rel[:, k] = stage_reliability(cand, None, l_max=l_max)
            else:
                srt = np.argsort(cand, axis=1, kind="stable")
                sorted_m = np.take_along_axis(cand, srt, axis=1)
                order = srt[:, :Lmax]
                keep = sorted_m[:, :Lmax]
                rel[:, k] = stage_reliability(sorted_m[:, :Lmax], sorted_m[:, Lmax:], l_max=l_max)
                if metrics is not None:
                    metrics[:, k, :] = sorted_m
            parent = order // 2
            bit = (order % 2).astype(np.uint8)[:, :, None]
            pm = np.array(keep)
            paths = paths[rows, parent]
            for lam in range(n + 1):
                if llrs[lam] is not None and lam >= 1:
                    llrs[lam] = llrs[lam][rows, parent]
                if left[lam] is not None:
                    left[lam] = left[lam][rows, parent]
        paths[:, :, i] = bit[:, :, 0]
        cur = bit
        for lam in range(1, n + 1):
            if (i >> (lam - 1)) & 1:
                cur = np.concatenate([left[lam] ^ cur, cur], axis=2)
            else:
                left[lam] = cur
                break

    crc_pass = None
    if crc_aided:
        crc_pass = BatchCrc(spec.crc, spec.K).check(paths[:, :, spec.info_positions])
        masked = np.where(crc_pass, pm, np.inf)
        any_pass = crc_pass.any(axis=1)
        selected = np.where(any_pass, np.argmin(masked, axis=1), np.argmin(pm, axis=1))
    else:
        selected = np.argmin(pm, axis=1)
    return SclTrace(paths=paths, path_metrics=pm, selected=selected, stage_reliability=rel,
                    stage_metrics=metrics, list_size=Lmax, crc_pass=crc_pass)


def list_contains(trace: SclTrace, u: np.ndarray) -> np.ndarray:
    """Per frame, whether ``u`` is one of the final list paths."""
    u = np.asarray(u, dtype=np.uint8)
    if u.ndim == 1:
        u = np.broadcast_to(u, (trace.paths.shape[0], u.shape[0]))
    return np.all(trace.paths == u[:, None, :], axis=2).any(axis=1)


def reliability_floor(l_max: float = RELIABILITY_MAX) -> float:
    """Largest sample term a pre-saturation stage can produce."""
    return 1.0 / (1.0 + math.exp(l_max))
