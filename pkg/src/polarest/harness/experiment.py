"""Experiment orchestration: BLER sweeps, estimator comparisons, bitmaps.

Random streams are derived as root seed -> spec index -> channel point ->
chunk. In paired mode the spec index is dropped so every spec sees the
same channel samples at a given point.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .. import __version__
from ..channels import BEC, BSC, ChannelModel, make_channel
from ..core import CodeSpec
from ..decoders.dscf import DscfConfig, dscf_decode, flip_candidate_set
from ..decoders.sc import sc_decode
from ..decoders.scl import scl_decode
from ..estimators import (DEFAULT_CHUNK, DecoderSpec, StopRule, _iter_chunks, convergence_report,
                          draw_frames, estimate, exact_sc_bler, exhaustive_estimates,
                          load_profile, resolve_workers, save_profile)
from ..rng import RNG_ALGORITHM, stream

CSV_COLUMNS = ("spec_id", "channel_type", "design_point", "decoder", "list_size", "samples",
               "errors", "bler_mc", "bler_estimator", "wall_s")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2

# Fields that may differ between otherwise identical runs.
VOLATILE_KEYS = ("wall_s", "created", "workers")

Z99 = 2.5758293035489004


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class DecoderConfig:
    """Decoder used for Monte-Carlo runs.

    For MDSCF set ``gamma`` together with ``profile`` (a profile CSV) or an
    explicit ``dscf.candidate_set``.
    """

    kind: str = "sc"
    list_size: int = 1
    crc_aided: bool = False
    dscf: DscfConfig = field(default_factory=DscfConfig)
    gamma: float | None = None
    profile: str | None = None

    def __post_init__(self):
        if self.kind not in ("sc", "scl", "dscf"):
            raise ConfigError(f"unknown decoder {self.kind!r}")
        if self.list_size < 1 or self.list_size & (self.list_size - 1):
            raise ConfigError(f"list size {self.list_size} is not a power of two")
        if self.gamma is not None and self.profile is None and self.dscf.candidate_set is None:
            raise ConfigError("gamma needs a flip profile to select candidates from")

    @property
    def label(self) -> str:
        if self.kind == "dscf":
            return "mdscf" if self.gamma is not None or self.dscf.candidate_set else "dscf"
        return self.kind

    def estimator(self) -> DecoderSpec | None:
        if self.kind == "dscf":
            return None
        return DecoderSpec(self.kind, self.list_size if self.kind == "scl" else 1, self.crc_aided)

    def resolve(self) -> "DecoderConfig":
        """Fill ``dscf.candidate_set`` from the profile file when needed."""
        if self.kind != "dscf" or self.gamma is None or self.dscf.candidate_set is not None:
            return self
        cand = flip_candidate_set(load_profile(self.profile), self.gamma)
        dscf = DscfConfig(self.dscf.max_attempts, self.dscf.alpha, self.dscf.order,
                          self.gamma, cand)
        return DecoderConfig(self.kind, self.list_size, self.crc_aided, dscf, self.gamma, self.profile)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "list_size": self.list_size, "crc_aided": self.crc_aided}
        if self.kind == "dscf":
            d["dscf"] = {
                "max_attempts": self.dscf.max_attempts,
                "alpha": self.dscf.alpha,
                "gamma": self.gamma,
                "profile": self.profile,
                "candidate_set": list(self.dscf.candidate_set) if self.dscf.candidate_set else None,
            }
        return d


@dataclass
class ExperimentConfig:
    specs: Sequence[str | Path | CodeSpec]
    channel: str
    points: Sequence[float]
    seed: int
    decoder: DecoderConfig = field(default_factory=DecoderConfig)
    stop: StopRule = field(default_factory=StopRule)
    workers: int | None = None
    chunk_size: int = DEFAULT_CHUNK
    paired: bool = False
    payload: str = "auto"
    mode: str = "practical"
    runs: int = 1
    grid: Sequence[int] = ()
    exhaustive: bool = False
    csv_path: str | None = None
    json_path: str | None = None
    profile_dir: str | None = None

    def __post_init__(self):
        if not self.specs:
            raise ConfigError("at least one spec is required")
        if not self.points:
            raise ConfigError("at least one channel point is required")
        if self.seed is None:
            raise ConfigError("a seed is required")
        if self.channel not in ("awgn", "bsc", "bec"):
            raise ConfigError(f"unknown channel {self.channel!r}")
        if self.runs < 1:
            raise ConfigError("runs must be positive")

    def loaded_specs(self) -> list[tuple[str, CodeSpec]]:
        out = []
        for i, s in enumerate(self.specs):
            if isinstance(s, CodeSpec):
                out.append((f"spec{i}", s))
            else:
                out.append((Path(s).stem, CodeSpec.load(s)))
        return out

    def channels(self) -> list[ChannelModel]:
        return [make_channel(self.channel, float(p)) for p in self.points]

    def to_dict(self) -> dict:
        specs = [s.digest() if isinstance(s, CodeSpec) else str(s) for s in self.specs]
        return {
            "specs": specs,
            "channel": self.channel,
            "points": [float(p) for p in self.points],
            "seed": int(self.seed),
            "decoder": self.decoder.to_dict(),
            "stop": {"target_errors": self.stop.target_errors, "max_samples": self.stop.max_samples},
            "chunk_size": self.chunk_size,
            "paired": self.paired,
            "payload": self.payload,
            "mode": self.mode,
            "runs": self.runs,
            "grid": [int(g) for g in self.grid],
            "exhaustive": self.exhaustive,
        }


@dataclass
class ExperimentReport:
    rows: list[dict]
    config: dict
    environment: dict
    series: list[dict] = field(default_factory=list)
    created: float = field(default_factory=time.time)

    @property
    def partial(self) -> bool:
        return any(not r["converged"] for r in self.rows)

    @property
    def exit_code(self) -> int:
        return EXIT_PARTIAL if self.partial else EXIT_OK

    def to_dict(self) -> dict:
        return {"config": self.config, "environment": self.environment, "rows": self.rows,
                "series": self.series, "created": self.created}

    def canonical(self) -> dict:
        """The report without wall times, timestamps and worker counts."""
        return _strip(self.to_dict())

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([_cell(r.get(c), c) for c in CSV_COLUMNS])
        return buf.getvalue()

    def write(self, csv_path: str | None = None, json_path: str | None = None) -> None:
        if csv_path:
            Path(csv_path).write_text(self.to_csv())
        if json_path:
            Path(json_path).write_text(self.to_json())


def _strip(obj):
    if isinstance(obj, dict):
        return {k: _strip(v) for k, v in obj.items() if k not in VOLATILE_KEYS}
    if isinstance(obj, list):
        return [_strip(v) for v in obj]
    return obj


def _cell(v, column: str) -> str:
    if v is None:
        return ""
    if column == "wall_s":
        return f"{v:.3f}"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _environment(workers: int) -> dict:
    return {"version": __version__, "rng": RNG_ALGORITHM, "workers": workers,
            "numpy": np.__version__}


# ---------------------------------------------------------------------------
# Monte-Carlo decoding


def decode_errors(spec: CodeSpec, llr: np.ndarray, u: np.ndarray, decoder: DecoderConfig) -> np.ndarray:
    """Block-error flags of ``decoder`` on a batch of frames."""
    pos = spec.info_positions
    if decoder.kind == "sc":
        u_hat = sc_decode(llr, spec).u_hat
    elif decoder.kind == "scl":
        u_hat = scl_decode(llr, spec, decoder.list_size, decoder.crc_aided).u_hat
    else:
        u_hat = dscf_decode(llr, spec, decoder.dscf)[0].u_hat
    return np.any(u_hat[:, pos] != u[:, pos], axis=1)


def _mc_job(args):
    specs, channel, decoders, seed, path, count, payload = args
    rng = stream(seed, *path)
    # every spec restarts from the same stream state, so all see the same noise
    flags = []
    noise_state = rng.bit_generator.state
    for spec, dec in zip(specs, decoders):
        rng.bit_generator.state = noise_state
        u, llr = draw_frames(spec, channel, rng, count, payload)
        flags.append(decode_errors(spec, llr, u, dec))
    return np.stack(flags)


def monte_carlo(spec: CodeSpec, channel: ChannelModel, decoder: DecoderConfig, stop: StopRule,
                seed: int, path: tuple[int, ...] = (), *, chunk_size: int = DEFAULT_CHUNK,
                workers: int | None = 1, payload: str = "auto") -> tuple[int, int, bool]:
    """(samples, errors, converged) under the same stop rule as the estimators."""
    res = paired_errors([spec], channel, [decoder], stop, seed, path, chunk_size=chunk_size,
                        workers=workers, payload=payload)
    n = res.shape[1]
    e = int(res[0].sum())
    return n, e, _converged(e, stop)


def paired_errors(specs: Sequence[CodeSpec], channel: ChannelModel, decoders: Sequence[DecoderConfig],
                  stop: StopRule, seed: int, path: tuple[int, ...] = (), *,
                  chunk_size: int = DEFAULT_CHUNK, workers: int | None = 1,
                  payload: str = "auto") -> np.ndarray:
    """Error flags (S, n) of several decoders on shared channel samples.

    Sampling stops on the sample where every row has reached
    ``stop.target_errors`` or at ``stop.max_samples``.
    """
    workers = resolve_workers(workers)
    if len({s.N for s in specs}) != 1:
        raise ConfigError("paired runs need a common block length")
    decoders = [d.resolve() for d in decoders]
    target, cap = stop.target_errors, stop.max_samples

    def jobs():
        c = 0
        while True:
            yield (list(specs), channel, decoders, seed, path + (c,), chunk_size, payload)
            c += 1

    out = []
    n = 0
    counts = np.zeros(len(specs), dtype=np.int64)
    for flags in _iter_chunks(jobs(), workers, _mc_job):
        take = flags.shape[1]
        done = False
        if cap is not None and n + take >= cap:
            take = cap - n
            done = True
        if target is not None:
            cum = counts[:, None] + np.cumsum(flags[:, :take], axis=1)
            reached = np.all(cum >= target, axis=0)
            hit = np.flatnonzero(reached)
            if hit.size:
                take = int(hit[0]) + 1
                done = True
        out.append(flags[:, :take])
        counts += flags[:, :take].sum(axis=1)
        n += take
        if done:
            break
    return np.concatenate(out, axis=1) if out else np.zeros((len(specs), 0), dtype=bool)


@dataclass(frozen=True)
class PairedComparison:
    """BLER difference a - b on shared samples with a normal-approximation interval."""

    n: int
    errors_a: int
    errors_b: int
    only_a: int
    only_b: int
    diff: float
    half_width: float

    @property
    def low(self) -> float:
        return self.diff - self.half_width

    @property
    def high(self) -> float:
        return self.diff + self.half_width

    def to_dict(self) -> dict:
        return {**asdict(self), "low": self.low, "high": self.high}


def paired_comparison(flags_a: np.ndarray, flags_b: np.ndarray, z: float = Z99) -> PairedComparison:
    a = np.asarray(flags_a, dtype=np.int64)
    b = np.asarray(flags_b, dtype=np.int64)
    n = a.size
    d = a - b
    mean = d.mean() if n else 0.0
    sd = d.std(ddof=1) if n > 1 else 0.0
    return PairedComparison(n, int(a.sum()), int(b.sum()), int(np.sum((a == 1) & (b == 0))),
                            int(np.sum((a == 0) & (b == 1))), float(mean), float(z * sd / math.sqrt(n)) if n else math.inf)


def binomial_half_width(errors: int, n: int, z: float = Z99) -> float:
    """Normal-approximation half-width of a binomial proportion interval."""
    p = errors / n
    return z * math.sqrt(p * (1.0 - p) / n)


# ---------------------------------------------------------------------------
# Operations


def _row(label: str, spec: CodeSpec, channel: ChannelModel, decoder: DecoderConfig, n: int,
         errors: int, converged: bool, bler_est: float | None, wall: float, **extra) -> dict:
    row = {
        "spec_id": label,
        "spec_hash": spec.digest(),
        "channel_type": channel.kind,
        "design_point": float(channel.parameter),
        "decoder": decoder.label,
        "list_size": decoder.list_size if decoder.kind == "scl" else 1,
        "samples": int(n),
        "errors": int(errors),
        "bler_mc": errors / n if n else None,
        "bler_estimator": bler_est,
        "wall_s": wall,
        "converged": bool(converged),
        "status": "target" if converged else "cap",
    }
    row.update(extra)
    return row


def run_bler_sweep(cfg: ExperimentConfig) -> ExperimentReport:
    """Monte-Carlo BLER for every (spec, channel point).

    SC and SCL rows also carry the estimator on the same samples. In paired
    mode all specs share the noise of each point and are decoded together,
    each row stopping at its own stop-rule sample.
    """
    workers = resolve_workers(cfg.workers)
    specs = cfg.loaded_specs()
    decoder = cfg.decoder.resolve()
    rows = []
    for p, ch in enumerate(cfg.channels()):
        if cfg.paired:
            t0 = time.perf_counter()
            flags = paired_errors([s for _, s in specs], ch, [decoder] * len(specs), cfg.stop,
                                  cfg.seed, (p,), chunk_size=cfg.chunk_size, workers=workers,
                                  payload=cfg.payload)
            wall = time.perf_counter() - t0
            for f, (label, spec) in zip(flags, specs):
                n, e = _stop_prefix(f, cfg.stop)
                rows.append(_row(label, spec, ch, decoder, n, e, _converged(e, cfg.stop), None, wall))
            continue
        for s, (label, spec) in enumerate(specs):
            est_dec = decoder.estimator()
            t0 = time.perf_counter()
            if est_dec is not None:
                res = estimate(spec, ch, est_dec, "practical", cfg.stop, cfg.seed,
                               stream_path=(s, p), chunk_size=cfg.chunk_size, workers=workers,
                               payload=cfg.payload)
                extra = {"path_loss": res.path_loss} if res.path_loss is not None else {}
                rows.append(_row(label, spec, ch, decoder, res.n, res.errors, res.converged,
                                 res.bler_estimate, time.perf_counter() - t0, **extra))
            else:
                n, e, conv = monte_carlo(spec, ch, decoder, cfg.stop, cfg.seed, (s, p),
                                         chunk_size=cfg.chunk_size, workers=workers,
                                         payload=cfg.payload)
                rows.append(_row(label, spec, ch, decoder, n, e, conv, None, time.perf_counter() - t0))
    report = ExperimentReport(rows, cfg.to_dict(), _environment(workers))
    report.write(cfg.csv_path, cfg.json_path)
    return report


def _stop_prefix(flags: np.ndarray, stop: StopRule) -> tuple[int, int]:
    """Samples and errors a single run would have used on this flag stream."""
    n = flags.size
    if stop.target_errors is not None:
        hit = np.flatnonzero(np.cumsum(flags) >= stop.target_errors)
        if hit.size:
            n = int(hit[0]) + 1
    return n, int(flags[:n].sum())


def _converged(errors: int, stop: StopRule) -> bool:
    return stop.target_errors is None or errors >= stop.target_errors


def run_estimator_comparison(cfg: ExperimentConfig) -> ExperimentReport:
    """Estimator against Monte Carlo on shared samples, or against exact values.

    With ``cfg.exhaustive`` (SC on BSC/BEC, N <= 16) the Monte-Carlo column
    holds the exact BLER and rows report estimator-minus-exact deltas. With
    ``cfg.runs > 1`` and a sample grid a convergence series is added.
    """
    workers = resolve_workers(cfg.workers)
    decoder = cfg.decoder
    est_dec = decoder.estimator()
    if est_dec is None:
        raise ConfigError("estimator comparison supports the sc and scl decoders")
    specs = cfg.loaded_specs()
    rows, series = [], []
    for p, ch in enumerate(cfg.channels()):
        for s, (label, spec) in enumerate(specs):
            t0 = time.perf_counter()
            if cfg.exhaustive:
                if decoder.kind != "sc" or not isinstance(ch, (BSC, BEC)) or spec.N > 16:
                    raise ConfigError("exhaustive mode needs SC, a BSC or BEC, and N <= 16")
                exact = exact_sc_bler(spec, ch)
                per_bit = exhaustive_estimates(spec, ch, cfg.mode)
                est = math.fsum(per_bit)
                rows.append(_row(label, spec, ch, decoder, 0, 0, True, est,
                                 time.perf_counter() - t0, bler_exact=exact, delta=est - exact,
                                 per_bit=[float(v) for v in per_bit]))
                rows[-1]["bler_mc"] = exact
                continue
            res = estimate(spec, ch, est_dec, cfg.mode, cfg.stop, cfg.seed, stream_path=(s, p),
                           chunk_size=cfg.chunk_size, workers=workers, payload=cfg.payload)
            extra = {"bler_std_error": res.profile.bler_std_error}
            if res.path_loss is not None:
                extra["path_loss"] = res.path_loss
            if cfg.profile_dir:
                out = Path(cfg.profile_dir) / f"{label}_p{p}.profile.csv"
                out.parent.mkdir(parents=True, exist_ok=True)
                save_profile(res.profile, out)
                extra["profile"] = str(out)
            rows.append(_row(label, spec, ch, decoder, res.n, res.errors, res.converged,
                             res.bler_estimate, time.perf_counter() - t0, **extra))
            if cfg.grid:
                pts = convergence_report(spec, ch, est_dec, cfg.grid, cfg.runs, cfg.seed,
                                         chunk_size=cfg.chunk_size, workers=workers,
                                         stream_path=(s, p, 1))
                series.append({"spec_id": label, "design_point": float(ch.parameter),
                               "points": [asdict(x) for x in pts]})
    report = ExperimentReport(rows, cfg.to_dict(), _environment(workers), series)
    report.write(cfg.csv_path, cfg.json_path)
    return report


def bit_matrix(spec: CodeSpec, d: int, b: int) -> np.ndarray:
    """d x b matrix, 1 for information bits, column c holding channels c*d+1 .. c*d+d."""
    if d * b != spec.N or d < 1 or b < 1:
        raise ConfigError(f"layout {d}x{b} does not match N={spec.N}")
    return spec.info_mask.astype(np.uint8).reshape(b, d).T


def export_bit_distribution(specs: Sequence[str | Path | CodeSpec], d: int, b: int,
                            out_dir: str | Path | None = None) -> dict:
    """Per-spec information-bit matrices plus pairwise set differences."""
    loaded = ExperimentConfig(specs, "bsc", [0.5], 0).loaded_specs()
    if len({s.N for _, s in loaded}) != 1:
        raise ConfigError("all specs must share N")
    mats = {label: bit_matrix(spec, d, b) for label, spec in loaded}
    diffs = []
    for i in range(len(loaded)):
        for j in range(i + 1, len(loaded)):
            (la, a), (lb, sb) = loaded[i], loaded[j]
            ia, ib = set(a.info_set), set(sb.info_set)
            diffs.append({
                "a": la, "b": lb,
                "only_a": sorted(ia - ib), "only_b": sorted(ib - ia),
                "count_only_a": len(ia - ib), "count_only_b": len(ib - ia),
            })
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for label, m in mats.items():
            np.savetxt(out / f"{label}_{d}x{b}.csv", m, fmt="%d", delimiter=",")
        (out / "differences.json").write_text(json.dumps(diffs, indent=2))
    return {"matrices": mats, "differences": diffs}


def flip_profile(spec: CodeSpec, channel: ChannelModel, gammas: Sequence[float], stop: StopRule,
                 seed: int, *, chunk_size: int = DEFAULT_CHUNK, workers: int | None = 1):
    """SC profile at one point and the MDSCF candidate set for each gamma."""
    res = estimate(spec, channel, "sc", "practical", stop, seed, chunk_size=chunk_size,
                   workers=workers)
    sets = {float(g): list(flip_candidate_set(res.profile, g)) for g in gammas}
    return res, sets
