"""Code description, polar transform and CRC handling.

Indices exposed by :class:`CodeSpec` are 1-based. Arrays handed to the
decoders are 0-based numpy arrays; ``CodeSpec.info_mask`` bridges the two.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np


class DimensionError(ValueError):
    """Raised when a vector length does not match the code parameters."""


class SpecError(ValueError):
    """Raised for an invalid code or CRC description."""


# ---------------------------------------------------------------------------
# CRC


@dataclass(frozen=True)
class CrcSpec:
    """Bitwise CRC parameterization.

    ``generator`` holds the full polynomial including the leading x^width
    term, so ``generator.bit_length() == width + 1``.
    """

    width: int
    generator: int
    init: int = 0
    final_xor: int = 0
    # display label only; not serialized and not part of equality
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.width < 1:
            raise SpecError("CRC width must be positive")
        if self.generator.bit_length() != self.width + 1:
            raise SpecError(
                f"generator 0x{self.generator:X} does not have degree {self.width}"
            )
        if not 0 <= self.init < (1 << self.width):
            raise SpecError("CRC init does not fit the register")
        if not 0 <= self.final_xor < (1 << self.width):
            raise SpecError("CRC final_xor does not fit the register")

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "generator_hex": f"0x{self.generator:X}",
            "init_hex": f"0x{self.init:X}",
            "final_xor_hex": f"0x{self.final_xor:X}",
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CrcSpec":
        return cls(
            width=int(d["width"]),
            generator=int(d["generator_hex"], 16),
            init=int(d.get("init_hex", "0x0"), 16),
            final_xor=int(d.get("final_xor_hex", "0x0"), 16),
        )


# x^16 + x^12 + x^5 + 1
CRC16 = CrcSpec(width=16, generator=0x11021, name="crc16")
# 5G NR CRC24C
CRC24 = CrcSpec(width=24, generator=0x1B2B117, name="crc24")

CRC_PRESETS = {"crc16": CRC16, "crc24": CRC24}


def crc_by_name(name: str | None) -> CrcSpec | None:
    if name is None or name == "none":
        return None
    try:
        return CRC_PRESETS[name]
    except KeyError:
        raise SpecError(f"unknown CRC {name!r}; expected one of none, crc16, crc24")


def crc_compute(msg: Sequence[int] | np.ndarray, crc: CrcSpec) -> np.ndarray:
    """Remainder of ``msg * x^width`` divided by the generator, MSB first.

    The register starts at ``crc.init`` and the result is XORed with
    ``crc.final_xor``.
    """
    w = crc.width
    top = 1 << w
    mask = top - 1
    poly = crc.generator & mask
    reg = crc.init
    for bit in np.asarray(msg, dtype=np.uint8).ravel():
        fb = ((reg >> (w - 1)) & 1) ^ int(bit)
        reg = (reg << 1) & mask
        if fb:
            reg ^= poly
    reg ^= crc.final_xor
    return np.array([(reg >> (w - 1 - k)) & 1 for k in range(w)], dtype=np.uint8)


def crc_check(block: Sequence[int] | np.ndarray, crc: CrcSpec) -> bool:
    """True when the trailing ``crc.width`` bits are the CRC of the rest."""
    block = np.asarray(block, dtype=np.uint8)
    msg, tail = block[: -crc.width], block[-crc.width :]
    return bool(np.array_equal(crc_compute(msg, crc), tail))


class BatchCrc:
    """Affine GF(2) form of a CRC over fixed-length messages.

    ``crc(m) = m @ P xor c0``, which lets a whole batch of candidate paths
    be checked with one matrix product.
    """

    def __init__(self, crc: CrcSpec, msg_len: int):
        self.crc = crc
        self.msg_len = msg_len
        self.offset = crc_compute(np.zeros(msg_len, np.uint8), crc)
        rows = np.zeros((msg_len, crc.width), dtype=np.uint8)
        for k in range(msg_len):
            e = np.zeros(msg_len, np.uint8)
            e[k] = 1
            rows[k] = crc_compute(e, crc) ^ self.offset
        self.matrix = rows

    def remainder(self, msgs: np.ndarray) -> np.ndarray:
        msgs = np.asarray(msgs, dtype=np.int64)
        return ((msgs @ self.matrix) & 1).astype(np.uint8) ^ self.offset

    def check(self, blocks: np.ndarray) -> np.ndarray:
        """Boolean CRC verdict over the last axis of ``blocks``."""
        blocks = np.asarray(blocks, dtype=np.uint8)
        msgs = blocks[..., : self.msg_len]
        tails = blocks[..., self.msg_len :]
        return np.all(self.remainder(msgs) == tails, axis=-1)


# ---------------------------------------------------------------------------
# Code description


@dataclass(frozen=True)
class CodeSpec:
    """An (N, K, info_set) polar code, optionally with an attached CRC.

    ``K`` counts payload bits only; the information set hosts
    ``K + crc.width`` positions and the CRC occupies its last entries.
    """

    n: int
    K: int
    info_set: tuple[int, ...]
    crc: CrcSpec | None = None
    design_point: Any = None
    construction_method: str | None = None
    construction_params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "info_set", tuple(int(i) for i in self.info_set))
        N = self.N
        if self.n < 0:
            raise SpecError("n must be non-negative")
        info = self.info_set
        if not 1 <= len(info) <= N:
            raise SpecError(f"need 1 <= |info_set| <= N, got {len(info)} for N={N}")
        if any(b <= a for a, b in zip(info, info[1:])):
            raise SpecError("info_set must be strictly increasing")
        if info[0] < 1 or info[-1] > N:
            raise SpecError(f"info_set entries must lie in [1, {N}]")
        width = self.crc.width if self.crc else 0
        if self.K < 1 or self.K + width != len(info):
            raise SpecError(
                f"K={self.K} plus CRC width {width} must equal |info_set|={len(info)}"
            )

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def K_total(self) -> int:
        return len(self.info_set)

    @property
    def rate(self) -> float:
        return self.K / self.N

    @property
    def frozen_set(self) -> tuple[int, ...]:
        s = set(self.info_set)
        return tuple(i for i in range(1, self.N + 1) if i not in s)

    @property
    def info_mask(self) -> np.ndarray:
        m = np.zeros(self.N, dtype=bool)
        m[np.asarray(self.info_set) - 1] = True
        return m

    @property
    def info_positions(self) -> np.ndarray:
        """0-based information positions, ascending."""
        return np.asarray(self.info_set, dtype=np.int64) - 1

    @classmethod
    def from_info_set(cls, N: int, info_set: Sequence[int], crc: CrcSpec | None = None,
                      **kw) -> "CodeSpec":
        n = int(N).bit_length() - 1
        if N < 1 or (1 << n) != N:
            raise SpecError(f"N={N} is not a power of two")
        info = sorted(int(i) for i in info_set)
        if len(set(info)) != len(info):
            raise SpecError("info_set contains duplicates")
        width = crc.width if crc else 0
        if width and width >= len(info):
            raise SpecError("CRC width exceeds the information-set capacity")
        return cls(n=n, K=len(info) - width, info_set=tuple(info), crc=crc, **kw)

    def with_info_set(self, info_set: Sequence[int]) -> "CodeSpec":
        return CodeSpec.from_info_set(self.N, info_set, self.crc,
                                      design_point=self.design_point,
                                      construction_method=self.construction_method,
                                      construction_params=dict(self.construction_params))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "N": self.N,
            "K": self.K,
            "info_set": list(self.info_set),
            "crc": self.crc.to_dict() if self.crc else None,
            "design_point": self.design_point,
            "construction_method": self.construction_method,
            "construction_params": self.construction_params,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CodeSpec":
        crc = CrcSpec.from_dict(d["crc"]) if d.get("crc") else None
        spec = cls(
            n=int(d["n"]),
            K=int(d["K"]),
            info_set=tuple(d["info_set"]),
            crc=crc,
            design_point=d.get("design_point"),
            construction_method=d.get("construction_method"),
            construction_params=d.get("construction_params") or {},
        )
        if "N" in d and int(d["N"]) != spec.N:
            raise SpecError(f"N={d['N']} inconsistent with n={spec.n}")
        return spec

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "CodeSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def digest(self) -> str:
        """Short hash over the code-defining fields only."""
        key = json.dumps({"n": self.n, "info_set": list(self.info_set),
                          "crc": self.crc.to_dict() if self.crc else None})
        return hashlib.sha256(key.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Encoding


def polar_transform(u: np.ndarray) -> np.ndarray:
    """x = u G_N over GF(2) along the last axis, G_N = F^{(x)n}, natural order."""
    x = np.array(u, dtype=np.uint8, copy=True)
    N = x.shape[-1]
    if N & (N - 1):
        raise DimensionError(f"length {N} is not a power of two")
    lead = x.shape[:-1]
    h = 1
    while h < N:
        # blocks of 2h: first half ^= second half
        v = x.reshape(*lead, N // (2 * h), 2, h)
        v[..., 0, :] ^= v[..., 1, :]
        h *= 2
    return x


def polar_encode(u: Sequence[int] | np.ndarray, spec: CodeSpec) -> np.ndarray:
    u = np.asarray(u, dtype=np.uint8)
    if u.shape[-1] != spec.N:
        raise DimensionError(f"u has length {u.shape[-1]}, expected N={spec.N}")
    return polar_transform(u)


def message_to_uvector(payload: Sequence[int] | np.ndarray, spec: CodeSpec) -> np.ndarray:
    """Place payload (then its CRC) on the information positions."""
    payload = np.asarray(payload, dtype=np.uint8)
    if payload.shape[-1] != spec.K:
        raise DimensionError(f"payload has length {payload.shape[-1]}, expected K={spec.K}")
    if spec.crc is not None:
        if payload.ndim == 1:
            block = np.concatenate([payload, crc_compute(payload, spec.crc)])
        else:
            block = np.concatenate(
                [payload, BatchCrc(spec.crc, spec.K).remainder(payload)], axis=-1)
    else:
        block = payload
    u = np.zeros(payload.shape[:-1] + (spec.N,), dtype=np.uint8)
    u[..., spec.info_positions] = block
    return u


def uvector_to_block(u: np.ndarray, spec: CodeSpec) -> np.ndarray:
    """Information-position bits (payload followed by CRC) of ``u``."""
    return np.asarray(u, dtype=np.uint8)[..., spec.info_positions]
