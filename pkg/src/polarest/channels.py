"""Binary-input symmetric channels with BPSK mapping for the AWGN case."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

# Marker for an erased BEC position in an observation array.
ERASED = -1

# Finite stand-in for an infinite LLR on unerased BEC positions.
LLR_CHANNEL_MAX = 300.0


class ChannelModelError(ValueError):
    pass


@dataclass(frozen=True)
class AWGN:
    esn0_db: float

    def __post_init__(self):
        if not math.isfinite(self.esn0_db):
            raise ChannelModelError("esn0_db must be finite")

    @property
    def sigma2(self) -> float:
        return 1.0 / (2.0 * 10.0 ** (self.esn0_db / 10.0))

    @property
    def kind(self) -> str:
        return "awgn"

    @property
    def parameter(self) -> float:
        return self.esn0_db

    def with_parameter(self, value: float) -> "AWGN":
        return AWGN(float(value))


@dataclass(frozen=True)
class BSC:
    p: float

    def __post_init__(self):
        if not 0.0 < self.p <= 0.5:
            raise ChannelModelError(f"BSC crossover {self.p} outside (0, 0.5]")

    @property
    def kind(self) -> str:
        return "bsc"

    @property
    def parameter(self) -> float:
        return self.p

    @property
    def llr_magnitude(self) -> float:
        return math.log((1.0 - self.p) / self.p)

    def with_parameter(self, value: float) -> "BSC":
        return BSC(float(value))


@dataclass(frozen=True)
class BEC:
    erasure_prob: float

    def __post_init__(self):
        if not 0.0 < self.erasure_prob <= 1.0:
            raise ChannelModelError(f"BEC erasure probability {self.erasure_prob} outside (0, 1]")

    @property
    def kind(self) -> str:
        return "bec"

    @property
    def parameter(self) -> float:
        return self.erasure_prob

    def with_parameter(self, value: float) -> "BEC":
        return BEC(float(value))


ChannelModel = Union[AWGN, BSC, BEC]

_PARAM_KEYS = {"awgn": "esn0_db", "bsc": "p", "bec": "erasure_prob"}


def channel_from_dict(d: dict) -> ChannelModel:
    kind = str(d.get("type", "")).lower()
    if kind == "awgn":
        return AWGN(float(d["esn0_db"]))
    if kind == "bsc":
        return BSC(float(d["p"]))
    if kind == "bec":
        return BEC(float(d["erasure_prob"]))
    raise ChannelModelError(f"unknown channel type {d.get('type')!r}")


def channel_to_dict(ch: ChannelModel) -> dict:
    d = {"type": ch.kind, _PARAM_KEYS[ch.kind]: ch.parameter}
    if isinstance(ch, AWGN):
        d["sigma2"] = ch.sigma2
    return d


def make_channel(kind: str, value: float) -> ChannelModel:
    return channel_from_dict({"type": kind, _PARAM_KEYS[kind.lower()]: value})


def transmit(x: np.ndarray, channel: ChannelModel, rng: np.random.Generator | None,
             noise: np.ndarray | None = None) -> np.ndarray:
    """Channel output for codeword bits ``x`` (any leading batch shape).

    ``noise`` bypasses the random stream for the AWGN case; passing zeros
    yields the noiseless BPSK symbols.
    """
    x = np.asarray(x, dtype=np.uint8)
    if isinstance(channel, AWGN):
        s = 1.0 - 2.0 * x
        if noise is None:
            noise = rng.standard_normal(x.shape) * math.sqrt(channel.sigma2)
        return s + noise
    if isinstance(channel, BSC):
        flips = rng.random(x.shape) < channel.p
        return (x ^ flips).astype(np.int8)
    if isinstance(channel, BEC):
        erased = rng.random(x.shape) < channel.erasure_prob
        y = x.astype(np.int8)
        y[erased] = ERASED
        return y
    raise ChannelModelError(f"unsupported channel {channel!r}")


def channel_llr(y: np.ndarray, channel: ChannelModel) -> np.ndarray:
    """Channel LLRs ln P(y|0)/P(y|1); positive values favor bit 0."""
    y = np.asarray(y)
    if isinstance(channel, AWGN):
        if not np.issubdtype(y.dtype, np.floating):
            raise ChannelModelError("AWGN observation must be real-valued")
        return 2.0 * y / channel.sigma2
    if isinstance(channel, BSC):
        if np.issubdtype(y.dtype, np.floating) or np.any(y == ERASED):
            raise ChannelModelError("BSC observation must be binary")
        return (1.0 - 2.0 * y) * channel.llr_magnitude
    if isinstance(channel, BEC):
        if np.issubdtype(y.dtype, np.floating):
            raise ChannelModelError("BEC observation must be 0, 1 or ERASED")
        out = (1.0 - 2.0 * y.astype(np.float64)) * LLR_CHANNEL_MAX
        out[y == ERASED] = 0.0
        return out
    raise ChannelModelError(f"unsupported channel {channel!r}")


def sample_llrs(x: np.ndarray, channel: ChannelModel, rng: np.random.Generator) -> np.ndarray:
    return channel_llr(transmit(x, channel, rng), channel)


def output_alphabet(channel: ChannelModel, sent: int = 0) -> list[tuple[float, float]]:
    """(probability, LLR) pairs of every output symbol given input ``sent``.

    Only defined for the finite-output channels.
    """
    if isinstance(channel, BSC):
        a = channel.llr_magnitude
        good = a if sent == 0 else -a
        return [(1.0 - channel.p, good), (channel.p, -good)]
    if isinstance(channel, BEC):
        v = LLR_CHANNEL_MAX if sent == 0 else -LLR_CHANNEL_MAX
        return [(1.0 - channel.erasure_prob, v), (channel.erasure_prob, 0.0)]
    raise ChannelModelError("output alphabet is only enumerable for BSC and BEC")
