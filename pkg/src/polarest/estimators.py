"""Semi-analytical per-bit error estimators for SC and SCL decoding.

For every channel sample the decoder's soft output is turned into per-bit
terms; their empirical means estimate each bit's error contribution and
their sum estimates the block error rate.

SC terms, per information index i (frozen positions never err)::

    1/(1 + e^{|L_i|}) * prod_{j in I, j < i} 1/(1 + e^{-|L_j|})

SCL path-loss terms use the stage reliabilities R_j instead of |L_j|, with
the product starting at the m-th information index for L = 2^m.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .channels import AWGN, ChannelModel, channel_to_dict, output_alphabet, sample_llrs
from .core import CodeSpec, message_to_uvector, polar_encode
from .decoders.kernels import softplus
from .decoders.sc import ScTrace, sc_decode
from .decoders.scl import RELIABILITY_MAX, SclTrace, list_contains, scl_decode
from .rng import RNG_ALGORITHM, stream

DEFAULT_CHUNK = 1000


# ---------------------------------------------------------------------------
# Per-sample terms


def _terms_from_reliability(rel: np.ndarray, l_max: float, start: int = 0) -> np.ndarray:
    r = np.clip(rel, -l_max, l_max)
    log_err = -softplus(r)           # ln 1/(1+e^{r})
    log_ok = -softplus(-r)           # ln 1/(1+e^{-r})
    if start:
        log_ok = log_ok.copy()
        log_ok[..., :start] = 0.0
    prior = np.cumsum(log_ok, axis=-1) - log_ok
    return np.exp(log_err + prior)


def sc_sample_terms(trace: ScTrace | np.ndarray, spec: CodeSpec, mode: str = "practical",
                    l_max: float = RELIABILITY_MAX) -> np.ndarray:
    """Per-information-bit terms of one SC pass, aligned with ``spec.info_set``.

    ``mode`` must match how the trace was produced (genie traces come from
    ``sc_decode(..., genie=u)``); the formula is the same for both.
    """
    if mode not in ("genie", "practical"):
        raise ValueError(f"unknown mode {mode!r}")
    llrs = trace.decision_llrs if isinstance(trace, ScTrace) else np.asarray(trace)
    return _terms_from_reliability(np.abs(llrs[..., spec.info_positions]), l_max)


def scl_sample_terms(trace: SclTrace, spec: CodeSpec, l_max: float = RELIABILITY_MAX) -> np.ndarray:
    """Path-loss terms of one SCL pass, aligned with ``spec.info_set``."""
    L = trace.list_size
    if L < 1 or L & (L - 1):
        raise ValueError(f"list size {L} is not a power of two")
    m = L.bit_length() - 1
    # product over i_m <= j < i; i_m is the m-th information index (rank m-1)
    return _terms_from_reliability(trace.stage_reliability, l_max, start=max(m - 1, 0))


# ---------------------------------------------------------------------------
# Accumulation


@dataclass(frozen=True)
class StopRule:
    target_errors: int | None = 100
    max_samples: int | None = 1_000_000

    def __post_init__(self):
        if self.target_errors is None and self.max_samples is None:
            raise ValueError("a stop rule needs at least one finite bound")


@dataclass
class _Chunk:
    count: int
    errors: int
    sums: np.ndarray
    sumsq: np.ndarray
    block_sum: float
    block_sumsq: float
    extra: dict = field(default_factory=dict)


def _fsum_columns(arrays: Sequence[np.ndarray]) -> np.ndarray:
    if not arrays:
        return np.zeros(0)
    stacked = np.stack(arrays)
    return np.array([math.fsum(col) for col in stacked.T])


@dataclass
class BitErrorProfile:
    """Running per-bit sums of sample terms.

    Partial sums are kept per chunk and totals are exactly-rounded sums over
    chunks (``math.fsum``), so merging profiles in any grouping gives the
    same bits as accumulating the chunks in one pass.
    """

    info_set: tuple[int, ...]
    chunks: list[_Chunk] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, chunk: _Chunk) -> None:
        self.chunks.append(chunk)

    def merge(self, other: "BitErrorProfile") -> "BitErrorProfile":
        if tuple(other.info_set) != tuple(self.info_set):
            raise ValueError("cannot merge profiles of different information sets")
        return BitErrorProfile(self.info_set, self.chunks + other.chunks, dict(self.metadata))

    @property
    def n(self) -> int:
        return sum(c.count for c in self.chunks)

    @property
    def errors(self) -> int:
        return sum(c.errors for c in self.chunks)

    @property
    def sums(self) -> np.ndarray:
        return _fsum_columns([c.sums for c in self.chunks]) if self.chunks else np.zeros(len(self.info_set))

    @property
    def estimates(self) -> np.ndarray:
        n = self.n
        return self.sums / n if n else np.zeros(len(self.info_set))

    @property
    def variances(self) -> np.ndarray:
        """Sample variance of each bit's per-sample term."""
        n = self.n
        if n < 2:
            return np.zeros(len(self.info_set))
        sq = _fsum_columns([c.sumsq for c in self.chunks])
        mean = self.sums / n
        return np.maximum(sq / n - mean ** 2, 0.0) * n / (n - 1)

    @property
    def bler_estimate(self) -> float:
        return math.fsum(self.estimates)

    @property
    def bler_std_error(self) -> float:
        """Standard error of the block estimate from per-sample block sums."""
        n = self.n
        if n < 2:
            return float("nan")
        s = math.fsum(c.block_sum for c in self.chunks)
        sq = math.fsum(c.block_sumsq for c in self.chunks)
        var = max(sq / n - (s / n) ** 2, 0.0) * n / (n - 1)
        return math.sqrt(var / n)

    def extra_total(self, key: str) -> int:
        return sum(int(c.extra.get(key, 0)) for c in self.chunks)

    def to_rows(self) -> list[dict]:
        n = self.n
        return [
            {"index": int(i), "estimate": float(e), "variance": float(v), "n": n}
            for i, e, v in zip(self.info_set, self.estimates, self.variances)
        ]


def _make_chunk(terms: np.ndarray, errors: np.ndarray, **extra) -> _Chunk:
    block = terms.sum(axis=1)
    return _Chunk(
        count=int(terms.shape[0]),
        errors=int(errors.sum()),
        sums=terms.sum(axis=0),
        sumsq=(terms ** 2).sum(axis=0),
        block_sum=math.fsum(block),
        block_sumsq=math.fsum(block ** 2),
        extra={k: int(v) for k, v in extra.items()},
    )


# ---------------------------------------------------------------------------
# Sampling


@dataclass(frozen=True)
class DecoderSpec:
    """Decoder used during estimation: SC (list_size 1 via 'sc') or SCL."""

    kind: str = "sc"
    list_size: int = 1
    crc_aided: bool = False

    def __post_init__(self):
        if self.kind not in ("sc", "scl"):
            raise ValueError(f"estimation supports sc and scl decoders, not {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "list_size": self.list_size, "crc_aided": self.crc_aided}


def draw_frames(spec: CodeSpec, channel: ChannelModel, rng: np.random.Generator, count: int,
                payload: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    """(u, channel LLRs) for ``count`` frames.

    ``payload`` is 'zero', 'random', or 'auto'. 'auto' is random on the BSC
    and BEC, whose decision LLRs can be exactly zero and would then always
    favor the all-zero word, and all-zero on the AWGN channel.
    """
    if payload == "auto":
        payload = "zero" if isinstance(channel, AWGN) else "random"
    if payload == "zero":
        u = np.zeros((count, spec.N), dtype=np.uint8)
        x = u
    elif payload == "random":
        msg = rng.integers(0, 2, size=(count, spec.K), dtype=np.uint8)
        u = message_to_uvector(msg, spec)
        x = polar_encode(u, spec)
    else:
        raise ValueError(f"unknown payload mode {payload!r}")
    return u, sample_llrs(x, channel, rng)


def chunk_samples(spec: CodeSpec, channel: ChannelModel, decoder: DecoderSpec, mode: str,
                  seed: int, path: tuple[int, ...], count: int, payload: str = "auto",
                  l_max: float = RELIABILITY_MAX) -> tuple[np.ndarray, np.ndarray, dict]:
    """Per-sample terms (count, K_total), block-error flags and extra flags for one chunk."""
    rng = stream(seed, *path)
    u, llr = draw_frames(spec, channel, rng, count, payload)
    pos = spec.info_positions
    extra = {}
    if decoder.kind == "sc":
        prac = sc_decode(llr, spec)
        err = np.any(prac.u_hat[:, pos] != u[:, pos], axis=1)
        if mode == "genie":
            terms = sc_sample_terms(sc_decode(llr, spec, genie=u), spec, "genie", l_max)
        else:
            terms = sc_sample_terms(prac, spec, "practical", l_max)
    else:
        if mode != "practical":
            raise ValueError("SCL estimation is practical-mode only")
        tr = scl_decode(llr, spec, decoder.list_size, decoder.crc_aided, l_max=l_max)
        err = np.any(tr.u_hat[:, pos] != u[:, pos], axis=1)
        terms = scl_sample_terms(tr, spec, l_max)
        extra["path_loss"] = ~list_contains(tr, u)
    return terms, err, extra


def _chunk_job(args):
    spec, channel, decoder, mode, seed, path, count, payload, l_max = args
    return chunk_samples(spec, channel, decoder, mode, seed, path, count, payload, l_max)


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("POLAREST_WORKERS", "1"))
    return max(1, int(workers))


def _iter_chunks(jobs: Iterable[tuple], workers: int, fn=_chunk_job):
    """Yield ``fn(job)`` in job order, computing up to ``workers`` at a time."""
    jobs = iter(jobs)
    if workers <= 1:
        for job in jobs:
            yield fn(job)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        while True:
            wave = list(itertools.islice(jobs, workers))
            if not wave:
                return
            for res in pool.map(fn, wave):
                yield res


@dataclass
class EstimateResult:
    profile: BitErrorProfile
    n: int
    errors: int
    converged: bool
    wall_s: float
    path_loss: int | None = None

    @property
    def bler_estimate(self) -> float:
        return self.profile.bler_estimate

    @property
    def bler_mc(self) -> float:
        return self.errors / self.n if self.n else float("nan")


def estimate(spec: CodeSpec, channel: ChannelModel, decoder: DecoderSpec | str = "sc",
             mode: str = "practical", stop: StopRule = StopRule(), seed: int = 0, *,
             stream_path: tuple[int, ...] = (), chunk_size: int = DEFAULT_CHUNK,
             workers: int | None = 1, payload: str = "auto",
             l_max: float = RELIABILITY_MAX) -> EstimateResult:
    """Accumulate per-bit terms until the stop rule fires.

    Sampling stops after the sample on which the decoding-error count
    reaches ``stop.target_errors`` or when ``stop.max_samples`` samples were
    used, whichever comes first. The plain Monte-Carlo block error rate on
    the same samples is returned alongside.
    """
    if isinstance(decoder, str):
        decoder = DecoderSpec(decoder)
    workers = resolve_workers(workers)
    target = stop.target_errors
    cap = stop.max_samples
    t0 = time.perf_counter()
    profile = BitErrorProfile(spec.info_set, metadata={
        "spec_hash": spec.digest(),
        "channel": channel_to_dict(channel),
        "decoder": decoder.to_dict(),
        "mode": mode,
        "seed": seed,
        "stream_path": list(stream_path),
        "chunk_size": chunk_size,
        "rng": RNG_ALGORITHM,
    })

    def jobs():
        c = 0
        while True:
            yield (spec, channel, decoder, mode, seed, stream_path + (c,), chunk_size, payload, l_max)
            c += 1

    n = errors = 0
    done = False
    for terms, err, extra in _iter_chunks(jobs(), workers):
        take = terms.shape[0]
        if cap is not None:
            take = min(take, cap - n)
        if target is not None:
            cum = np.cumsum(err[:take])
            hit = np.flatnonzero(cum >= target - errors)
            if hit.size:
                take = int(hit[0]) + 1
                done = True
        if cap is not None and n + take >= cap:
            done = True
        sl = slice(0, take)
        profile.add(_make_chunk(terms[sl], err[sl], **{k: v[sl].sum() for k, v in extra.items()}))
        n += take
        errors += int(err[sl].sum())
        if done:
            break
    converged = target is None or errors >= target
    pl = profile.extra_total("path_loss") if decoder.kind == "scl" else None
    return EstimateResult(profile, n, errors, converged, time.perf_counter() - t0, pl)


# ---------------------------------------------------------------------------
# Convergence


@dataclass
class ConvergencePoint:
    n: int
    estimator_mean: float
    estimator_std: float | None
    mc_mean: float
    mc_std: float | None


def convergence_runs(spec: CodeSpec, channel: ChannelModel, decoder: DecoderSpec | str,
                     sample_grid: Sequence[int], runs: int, seed: int, *,
                     chunk_size: int = DEFAULT_CHUNK, workers: int | None = 1,
                     stream_path: tuple[int, ...] = ()) -> tuple[np.ndarray, np.ndarray]:
    """Per-run running estimates at each grid size: two arrays (runs, len(grid))."""
    if isinstance(decoder, str):
        decoder = DecoderSpec(decoder)
    grid = sorted(int(g) for g in sample_grid)
    total = grid[-1]
    workers = resolve_workers(workers)
    est = np.zeros((runs, len(grid)))
    mc = np.zeros((runs, len(grid)))
    for r in range(runs):
        sizes = [min(chunk_size, total - s) for s in range(0, total, chunk_size)]
        jobs = [(spec, channel, decoder, "practical", seed, stream_path + (r, c), sz, "auto",
                 RELIABILITY_MAX) for c, sz in enumerate(sizes)]
        block = []
        errs = []
        for terms, err, _ in _iter_chunks(jobs, workers):
            block.append(terms.sum(axis=1))
            errs.append(err)
        block = np.concatenate(block)
        errs = np.concatenate(errs).astype(np.float64)
        cb = np.cumsum(block)
        ce = np.cumsum(errs)
        for k, g in enumerate(grid):
            est[r, k] = cb[g - 1] / g
            mc[r, k] = ce[g - 1] / g
    return est, mc


def convergence_report(spec: CodeSpec, channel: ChannelModel, decoder: DecoderSpec | str,
                       sample_grid: Sequence[int], runs: int, seed: int, **kw) -> list[ConvergencePoint]:
    """Mean and spread across independent runs of both estimates at each grid size."""
    if runs < 1:
        raise ValueError("runs must be positive")
    est, mc = convergence_runs(spec, channel, decoder, sample_grid, runs, seed, **kw)
    grid = sorted(int(g) for g in sample_grid)
    out = []
    for k, g in enumerate(grid):
        out.append(ConvergencePoint(
            n=g,
            estimator_mean=float(est[:, k].mean()),
            estimator_std=float(est[:, k].std(ddof=1)) if runs > 1 else None,
            mc_mean=float(mc[:, k].mean()),
            mc_std=float(mc[:, k].std(ddof=1)) if runs > 1 else None,
        ))
    return out


# ---------------------------------------------------------------------------
# Exhaustive evaluation on finite-output channels


def enumerate_outputs(channel: ChannelModel, N: int) -> tuple[np.ndarray, np.ndarray]:
    """All outputs with non-zero probability under all-zero transmission.

    Returns (weights, channel LLRs). For the BEC only unerased-zero and
    erased symbols can occur, so 2^N patterns cover the whole mass.
    """
    alphabet = output_alphabet(channel, 0)
    probs = np.array([p for p, _ in alphabet])
    llrs = np.array([v for _, v in alphabet])
    idx = np.array(list(itertools.product(range(len(alphabet)), repeat=N)), dtype=np.int64)
    keep = np.all(probs[idx] > 0, axis=1)
    idx = idx[keep]
    return np.prod(probs[idx], axis=1), llrs[idx]


def _symbol_table(channel: ChannelModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(LLR, P(.|0), P(.|1)) for every output symbol of a finite channel."""
    a0 = output_alphabet(channel, 0)
    a1 = output_alphabet(channel, 1)
    llrs = sorted({v for _, v in a0} | {v for _, v in a1})
    p0 = [sum(p for p, v in a0 if v == s) for s in llrs]
    p1 = [sum(p for p, v in a1 if v == s) for s in llrs]
    return np.array(llrs), np.array(p0), np.array(p1)


def _codebook_outputs(spec: CodeSpec, channel: ChannelModel) -> tuple[np.ndarray, np.ndarray]:
    """Every output pattern weighted by its probability under a uniform message."""
    llrs, q0, q1 = _symbol_table(channel)
    idx = np.array(list(itertools.product(range(llrs.size), repeat=spec.N)), dtype=np.int64)
    p0, p1 = q0[idx], q1[idx]
    msgs = np.array(list(itertools.product((0, 1), repeat=spec.K)), dtype=np.uint8)
    words = polar_encode(message_to_uvector(msgs, spec), spec).astype(bool)
    w = np.zeros(idx.shape[0])
    for x in words:
        w += np.prod(np.where(x, p1, p0), axis=1)
    w /= words.shape[0]
    keep = w > 0
    return w[keep], llrs[idx[keep]]


def exhaustive_estimates(spec: CodeSpec, channel: ChannelModel, mode: str = "practical",
                         payload: str = "zero") -> np.ndarray:
    """Per-bit expectations of the SC terms by full enumeration (no sampling).

    ``payload='zero'`` weights outputs by the all-zero codeword;
    ``payload='uniform'`` by the uniform mixture over all messages, which is
    the distribution under which practical-mode sums equal the exact BLER
    (the decoder's tie rule is not sign-symmetric). Genie mode is all-zero only.
    """
    if payload == "zero":
        w, llr = enumerate_outputs(channel, spec.N)
    elif payload == "uniform":
        if mode == "genie":
            raise ValueError("genie enumeration is defined for the all-zero word")
        w, llr = _codebook_outputs(spec, channel)
    else:
        raise ValueError(f"unknown payload {payload!r}")
    genie = np.zeros_like(llr, dtype=np.uint8) if mode == "genie" else None
    terms = sc_sample_terms(sc_decode(llr, spec, genie=genie), spec, mode)
    return np.array([math.fsum(col) for col in (w[:, None] * terms).T])


# Decision LLRs within this distance of zero are ties; the exact check node
# can leave rounding residue of a few ulps where the true value is zero.
TIE_TOLERANCE = 1e-9


def exact_sc_bler(spec: CodeSpec, channel: ChannelModel) -> float:
    """Exact SC block error rate by enumeration, ties decided by a fair coin.

    With all-zero transmission a zero decision LLR means the decoder guesses;
    the guess is right with probability 1/2. Averaging over uniformly drawn
    messages gives the same number, which is what makes this the BLER of the
    code rather than of the all-zero codeword.
    """
    w, llr = enumerate_outputs(channel, spec.N)
    L = sc_decode(llr, spec, genie=np.zeros_like(llr, dtype=np.uint8)).decision_llrs[:, spec.info_positions]
    ok = np.where(np.abs(L) <= TIE_TOLERANCE, 0.5, np.where(L > 0, 1.0, 0.0))
    p_correct = np.prod(ok, axis=1)
    return math.fsum(w * (1.0 - p_correct))


# ---------------------------------------------------------------------------
# Profile files


@dataclass(frozen=True)
class ProfileTable:
    """A profile read back from disk: aligned indices, estimates, variances."""

    info_set: tuple[int, ...]
    estimates: np.ndarray
    variances: np.ndarray
    n: int
    header: dict


def profile_to_csv(profile: BitErrorProfile) -> str:
    """CSV text preceded by one '# {json}' header line."""
    buf = io.StringIO()
    buf.write("# " + json.dumps(profile.metadata, sort_keys=True) + "\n")
    w = csv.DictWriter(buf, fieldnames=["index", "estimate", "variance", "n"], lineterminator="\n")
    w.writeheader()
    for row in profile.to_rows():
        w.writerow({**row, "estimate": repr(row["estimate"]), "variance": repr(row["variance"])})
    return buf.getvalue()


def save_profile(profile: BitErrorProfile, path: str | Path) -> None:
    Path(path).write_text(profile_to_csv(profile))


def load_profile(path: str | Path) -> ProfileTable:
    lines = Path(path).read_text().splitlines()
    header = {}
    if lines and lines[0].startswith("#"):
        header = json.loads(lines[0][1:])
        lines = lines[1:]
    rows = list(csv.DictReader(lines))
    if not rows:
        raise ValueError(f"{path}: empty profile")
    return ProfileTable(
        info_set=tuple(int(r["index"]) for r in rows),
        estimates=np.array([float(r["estimate"]) for r in rows]),
        variances=np.array([float(r["variance"]) for r in rows]),
        n=int(rows[0]["n"]),
        header=header,
    )
