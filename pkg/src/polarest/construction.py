"""Information-set constructions.

The incremental constructions start from the rate-one code and repeatedly
freeze the information bit with the largest estimated error contribution.
The benchmark constructions (Bhattacharyya, Gaussian approximation,
RM-polar, imported reliability sequences) rank bit-channels directly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import erfc

from .channels import AWGN, BEC, BSC, ChannelModel, channel_to_dict
from .core import CodeSpec, CrcSpec, SpecError
from .estimators import DEFAULT_CHUNK, DecoderSpec, StopRule, estimate

log = logging.getLogger(__name__)

METHODS = ("sc_opt", "scl_opt", "bhattacharyya", "ga", "rm_polar", "sequence_import")


class ConstructionError(RuntimeError):
    """Raised when an incremental construction cannot finish.

    ``audit`` holds the per-iteration records collected so far.
    """

    def __init__(self, msg: str, audit: list[dict]):
        super().__init__(msg)
        self.audit = audit


class UnsupportedChannelError(ValueError):
    pass


@dataclass(frozen=True)
class ConstructionConfig:
    N: int
    K: int
    channel: ChannelModel
    method: str = "sc_opt"
    crc: CrcSpec | None = None
    list_size: int = 1
    stop: StopRule = field(default_factory=lambda: StopRule(100, 1_000_000))
    seed: int = 0
    chunk_size: int = DEFAULT_CHUNK
    workers: int | None = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise SpecError(f"unknown construction method {self.method!r}")
        if self.N < 1 or self.N & (self.N - 1):
            raise SpecError(f"N={self.N} is not a power of two")
        if not 1 <= self.K_total <= self.N:
            raise SpecError(f"K_total={self.K_total} outside [1, {self.N}]")
        if self.list_size < 1 or self.list_size & (self.list_size - 1):
            raise SpecError(f"list size {self.list_size} is not a power of two")

    @property
    def K_total(self) -> int:
        return self.K + (self.crc.width if self.crc else 0)


def _finish(cfg: ConstructionConfig, info: Sequence[int], method: str, params: dict) -> CodeSpec:
    return CodeSpec.from_info_set(
        cfg.N, sorted(int(i) for i in info), cfg.crc,
        design_point=channel_to_dict(cfg.channel),
        construction_method=method,
        construction_params=params,
    )


# ---------------------------------------------------------------------------
# Incremental constructions


def _incremental(cfg: ConstructionConfig, decoder: DecoderSpec, method: str,
                 strict: bool = True) -> CodeSpec:
    N = cfg.N
    info = list(range(1, N + 1))
    audit: list[dict] = []
    t = 0
    while len(info) > cfg.K_total:
        partial = CodeSpec.from_info_set(N, info)
        res = estimate(partial, cfg.channel, decoder, "practical", cfg.stop, cfg.seed,
                       stream_path=(t,), chunk_size=cfg.chunk_size, workers=cfg.workers)
        est = res.profile.estimates
        # argmax takes the first maximum, i.e. the smallest index
        k = int(np.argmax(est))
        record = {
            "iteration": t,
            "K_t": len(info),
            "frozen_index": info[k],
            "estimate": float(est[k]),
            "samples": res.n,
            "errors": res.errors,
            "converged": res.converged,
        }
        audit.append(record)
        log.debug("iteration %d: froze %d (%.3e) after %d samples", t, info[k], est[k], res.n)
        if strict and not res.converged:
            raise ConstructionError(
                f"estimator did not reach {cfg.stop.target_errors} errors within "
                f"{cfg.stop.max_samples} samples at K_t={len(info)}", audit)
        del info[k]
        t += 1
    params = {
        "list_size": decoder.list_size,
        "target_errors": cfg.stop.target_errors,
        "max_samples": cfg.stop.max_samples,
        "seed": cfg.seed,
        "chunk_size": cfg.chunk_size,
        "freeze_order": [r["frozen_index"] for r in audit],
        "audit": audit,
    }
    return _finish(cfg, info, method, params)


def construct_sc_optimized(cfg: ConstructionConfig, strict: bool = True) -> CodeSpec:
    """Freeze, one index per iteration, the bit with the largest SC term mean."""
    return _incremental(cfg, DecoderSpec("sc"), "sc_opt", strict)


def construct_scl_optimized(cfg: ConstructionConfig, list_size: int | None = None,
                            strict: bool = True) -> CodeSpec:
    """Same loop as the SC construction, driven by SCL path-loss terms."""
    L = cfg.list_size if list_size is None else list_size
    return _incremental(cfg, DecoderSpec("scl", L), "scl_opt", strict)


# ---------------------------------------------------------------------------
# Bhattacharyya


def initial_bhattacharyya(channel: ChannelModel) -> float:
    if isinstance(channel, BEC):
        return channel.erasure_prob
    if isinstance(channel, BSC):
        return 2.0 * math.sqrt(channel.p * (1.0 - channel.p))
    if isinstance(channel, AWGN):
        return math.exp(-(10.0 ** (channel.esn0_db / 10.0)))
    raise UnsupportedChannelError(f"no Bhattacharyya parameter for {channel!r}")


def bhattacharyya_parameters(N: int, z0: float) -> np.ndarray:
    """Z of every bit-channel in natural index order (index 1 first).

    Uses Z- = 2Z - Z^2 for the first half of each node and Z+ = Z^2 for the
    second; exact on the BEC, an upper-bound recursion elsewhere.
    """
    z = np.array([z0], dtype=np.float64)
    while z.size < N:
        z = np.stack([2.0 * z - z * z, z * z], axis=1).reshape(-1)
    return z


def _best(scores: np.ndarray, count: int) -> list[int]:
    """1-based indices of the ``count`` smallest scores; ties favor larger indices."""
    idx = np.arange(scores.size)
    order = np.lexsort((-idx, scores))
    return sorted(int(i) + 1 for i in order[:count])


def construct_bhattacharyya(cfg: ConstructionConfig) -> CodeSpec:
    z0 = initial_bhattacharyya(cfg.channel)
    z = bhattacharyya_parameters(cfg.N, z0)
    return _finish(cfg, _best(z, cfg.K_total), "bhattacharyya", {"z0": z0})


# ---------------------------------------------------------------------------
# Gaussian approximation

_PHI_SPLIT = 10.0


def _log_phi(x: np.ndarray) -> np.ndarray:
    """ln phi(x) for the two-segment approximation of the GA phi-function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    lo = x < _PHI_SPLIT
    xl = x[lo]
    out[lo] = -0.4527 * np.power(xl, 0.86) + 0.0218
    xh = x[~lo]
    out[~lo] = 0.5 * np.log(np.pi / xh) - xh / 4.0 + np.log1p(-10.0 / (7.0 * xh))
    return out


def phi(x):
    return np.exp(_log_phi(np.atleast_1d(x)))


def _phi_inverse_log(target: np.ndarray, hi: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Solve ln phi(x) = target by bisection on [0, hi]."""
    lo = np.zeros_like(target)
    hi = np.array(hi, dtype=np.float64)
    while np.any(hi - lo > tol):
        mid = 0.5 * (lo + hi)
        # phi is decreasing: too large a phi means x is still too small
        big = _log_phi(mid) > target
        lo = np.where(big, mid, lo)
        hi = np.where(big, hi, mid)
    return 0.5 * (lo + hi)


def ga_check_mean(m: np.ndarray) -> np.ndarray:
    """Mean after a check node: phi^-1(1 - (1 - phi(m))^2), in log domain."""
    m = np.asarray(m, dtype=np.float64)
    lp = _log_phi(m)
    p = np.exp(lp)
    target = lp + np.log(2.0 - p)           # ln(2 phi - phi^2)
    return _phi_inverse_log(target, np.maximum(m, 1e-12))


def ga_means(N: int, sigma2: float) -> np.ndarray:
    """Mean LLR of every bit-channel in natural index order."""
    m = np.array([2.0 / sigma2])
    while m.size < N:
        m = np.stack([ga_check_mean(m), 2.0 * m], axis=1).reshape(-1)
    return m


def ga_error_proxy(means: np.ndarray) -> np.ndarray:
    """Q(sqrt(m/2))."""
    return 0.5 * erfc(np.sqrt(np.asarray(means) / 2.0) / math.sqrt(2.0))


def construct_ga(cfg: ConstructionConfig) -> CodeSpec:
    if not isinstance(cfg.channel, AWGN):
        raise UnsupportedChannelError("Gaussian-approximation construction needs an AWGN channel")
    m = ga_means(cfg.N, cfg.channel.sigma2)
    return _finish(cfg, _best(-m, cfg.K_total), "ga", {"sigma2": cfg.channel.sigma2})


# ---------------------------------------------------------------------------
# RM-polar


def row_weights(N: int) -> np.ndarray:
    """Hamming weight of each generator row, 2^popcount(i-1) for 1-based i."""
    return np.array([1 << bin(i).count("1") for i in range(N)], dtype=np.int64)


def _channel_scores(N: int, channel: ChannelModel) -> np.ndarray:
    """Smaller is more reliable."""
    if isinstance(channel, AWGN):
        return -ga_means(N, channel.sigma2)
    return bhattacharyya_parameters(N, initial_bhattacharyya(channel))


def construct_rm_polar(cfg: ConstructionConfig) -> CodeSpec:
    """Highest-weight rows first; the boundary weight class is split by reliability."""
    w = row_weights(cfg.N)
    classes = sorted(set(w.tolist()), reverse=True)
    chosen: list[int] = []
    boundary = None
    for c in classes:
        members = np.flatnonzero(w == c)
        if len(chosen) + members.size <= cfg.K_total:
            chosen.extend(int(i) + 1 for i in members)
            if len(chosen) == cfg.K_total:
                break
        else:
            boundary = c
            scores = _channel_scores(cfg.N, cfg.channel)
            need = cfg.K_total - len(chosen)
            masked = np.where(w == c, scores, np.inf)
            chosen.extend(_best(masked, need))
            break
    return _finish(cfg, chosen, "rm_polar", {"boundary_weight": boundary})


# ---------------------------------------------------------------------------
# Imported sequences and sets


def read_index_file(path: str | Path) -> list[int]:
    """One 1-based index per line; blank lines and '#' comments ignored."""
    out = []
    for ln, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        for tok in line.replace(",", " ").split():
            try:
                out.append(int(tok))
            except ValueError:
                raise SpecError(f"{path}:{ln}: not an integer: {tok!r}") from None
    if not out:
        raise SpecError(f"{path}: no indices found")
    return out


def nr5g_sequence_path() -> Path:
    return Path(str(resources.files("polarest") / "data" / "nr5g_reliability_1024.txt"))


def nr5g_sequence() -> list[int]:
    """5G NR polar reliability sequence for N=1024, 1-based, least reliable first."""
    return read_index_file(nr5g_sequence_path())


def info_set_from_sequence(sequence: Sequence[int], N: int, K_total: int) -> list[int]:
    seq = [int(i) for i in sequence if int(i) <= N]
    if len(seq) != N:
        raise SpecError(f"sequence does not cover every index of [1, {N}]")
    if K_total > N:
        raise SpecError("K_total exceeds N")
    return sorted(seq[len(seq) - K_total:])


def import_sequence(source: str | Path | Sequence[int], N: int, K_total: int,
                    crc: CrcSpec | None = None) -> CodeSpec:
    """Wrap a reliability sequence or an explicit information set as a CodeSpec.

    ``source`` may be a path, the name '5g' for the shipped sequence, or a
    list of indices. A permutation of [1, N'] with N' >= N is read as a
    reliability sequence (least reliable first); anything else must be an
    explicit information set of size ``K_total``.
    """
    label = str(source) if not isinstance(source, (list, tuple)) else "inline"
    if isinstance(source, str) and source.lower() in ("5g", "nr5g"):
        values = nr5g_sequence()
        label = "5g"
    elif isinstance(source, (str, Path)):
        values = read_index_file(source)
    else:
        values = [int(v) for v in source]
    if len(set(values)) != len(values):
        raise SpecError("index list contains duplicates")
    if min(values) < 1:
        raise SpecError("indices are 1-based and must be positive")
    top = max(values)
    is_sequence = top >= N and sorted(values) == list(range(1, top + 1))
    if is_sequence:
        info = info_set_from_sequence(values, N, K_total)
        kind = "sequence"
    else:
        if top > N:
            raise SpecError(f"index {top} out of range for N={N}")
        if len(values) != K_total:
            raise SpecError(f"explicit set has {len(values)} entries, expected {K_total}")
        info = sorted(values)
        kind = "set"
    width = crc.width if crc else 0
    return CodeSpec.from_info_set(N, info, crc, construction_method="sequence_import",
                                  construction_params={"source": label, "kind": kind,
                                                       "K_total": K_total, "K": K_total - width})


def construct(cfg: ConstructionConfig, source: str | Path | None = None) -> CodeSpec:
    """Dispatch on ``cfg.method``."""
    if cfg.method == "sc_opt":
        return construct_sc_optimized(cfg)
    if cfg.method == "scl_opt":
        return construct_scl_optimized(cfg)
    if cfg.method == "bhattacharyya":
        return construct_bhattacharyya(cfg)
    if cfg.method == "ga":
        return construct_ga(cfg)
    if cfg.method == "rm_polar":
        return construct_rm_polar(cfg)
    if source is None:
        raise SpecError("sequence_import needs a source file")
    return import_sequence(source, cfg.N, cfg.K_total, cfg.crc)
