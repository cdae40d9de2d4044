"""Dynamic SC-flip decoding (flip order one) with optional candidate restriction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import BatchCrc, CodeSpec
from .kernels import softplus
from .sc import ScTrace, _as_batch, sc_decode

DEFAULT_ALPHA = 0.3367


class DscfConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DscfConfig:
    """Flip-decoder settings.

    ``candidate_set`` holds 1-based indices; when given, only those
    information positions are eligible for flipping. ``gamma`` is kept for
    provenance of a candidate set built by :func:`flip_candidate_set`.
    """

    max_attempts: int = 10
    alpha: float = DEFAULT_ALPHA
    order: int = 1
    gamma: float | None = None
    candidate_set: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.max_attempts < 0:
            raise DscfConfigError("max_attempts must be >= 0")
        if self.order != 1:
            raise DscfConfigError("only flip order 1 is supported")
        if self.gamma is not None and not 0.0 <= self.gamma:
            raise DscfConfigError("gamma must be non-negative")


def flip_metric(decision_llrs: np.ndarray, spec: CodeSpec, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Per information bit, exp(-a|L_i|) prod_{j<=i} 1/(1+exp(-a|L_j|)).

    Returns (..., K_total) aligned with ``spec.info_set``.
    """
    a = alpha * np.abs(np.asarray(decision_llrs)[..., spec.info_positions])
    log_m = -a - np.cumsum(softplus(-a), axis=-1)
    return np.exp(log_m)


def _rank_candidates(metric: np.ndarray, eligible: np.ndarray) -> np.ndarray:
    """0-based info-rank order, best first, ties to the smaller index."""
    m = np.where(eligible, metric, -np.inf)
    return np.argsort(-m, axis=-1, kind="stable")


def dscf_decode(llr: np.ndarray, spec: CodeSpec, config: DscfConfig) -> tuple[ScTrace, np.ndarray]:
    """Run SC, then up to ``max_attempts`` single-flip re-decodes on CRC failure.

    Each re-decode reruns SC with the decision at the next-ranked position
    inverted; everything before that position is unchanged, so the result
    equals resuming from it. Returns the trace of the first CRC-passing
    attempt (the initial SC trace when none passes) and the number of extra
    attempts spent per frame.
    """
    if spec.crc is None:
        raise DscfConfigError("DSCF decoding needs a CRC in the code spec")
    batch, single = _as_batch(llr, spec.N)
    B = batch.shape[0]
    checker = BatchCrc(spec.crc, spec.K)
    pos = spec.info_positions

    first = sc_decode(batch, spec)
    u_hat = first.u_hat.copy()
    dec = first.decision_llrs.copy()
    ok = checker.check(u_hat[:, pos])
    attempts = np.zeros(B, dtype=np.int64)

    eligible = np.ones(spec.K_total, dtype=bool)
    if config.candidate_set is not None:
        eligible = np.isin(spec.info_set, np.asarray(config.candidate_set, dtype=np.int64))
    n_elig = int(eligible.sum())
    T = min(config.max_attempts, n_elig)

    pending = np.flatnonzero(~ok)
    if T and pending.size:
        metric = flip_metric(first.decision_llrs[pending], spec, config.alpha)
        ranked = _rank_candidates(metric, eligible)[:, :T]
        for t in range(T):
            if pending.size == 0:
                break
            flips = pos[ranked[:, t]]
            tr = sc_decode(batch[pending], spec, flip=flips)
            attempts[pending] = t + 1
            good = checker.check(tr.u_hat[:, pos])
            done = pending[good]
            u_hat[done] = tr.u_hat[good]
            dec[done] = tr.decision_llrs[good]
            ok[done] = True
            pending = pending[~good]
            ranked = ranked[~good]
    trace = ScTrace(u_hat, dec)
    if single:
        return ScTrace(u_hat[0], dec[0]), attempts[0]
    return trace, attempts


def flip_candidate_set(profile, gamma: float) -> tuple[int, ...]:
    """Information indices whose estimated error probability is at least ``gamma``.

    ``profile`` is anything with aligned ``info_set`` and ``estimates``
    attributes, normally a :class:`~polarest.estimators.BitErrorProfile`.
    """
    est = np.asarray(profile.estimates, dtype=np.float64)
    info = np.asarray(profile.info_set, dtype=np.int64)
    if est.shape != info.shape:
        raise ValueError("estimates must align with the information set")
    return tuple(int(i) for i in info[est >= gamma])
