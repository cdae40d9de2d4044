import binascii
import json

import numpy as np
import pytest

from oracles import crc_long_division, encode_matrix
from polarest.core import (CRC16, CRC24, BatchCrc, CodeSpec, CrcSpec, DimensionError, SpecError,
                           crc_by_name, crc_check, crc_compute, message_to_uvector, polar_encode,
                           polar_transform)


def bits_of(data: bytes) -> list[int]:
    return [(byte >> (7 - k)) & 1 for byte in data for k in range(8)]


def to_int(bits) -> int:
    v = 0
    for b in bits:
        v = (v << 1) | int(b)
    return v


# --- encoding ---------------------------------------------------------------

def test_encode_examples():
    spec2 = CodeSpec.from_info_set(2, [1, 2])
    assert polar_encode([1, 1], spec2).tolist() == [0, 1]
    spec4 = CodeSpec.from_info_set(4, [1, 2, 3, 4])
    assert polar_encode([1, 0, 1, 1], spec4).tolist() == [1, 1, 0, 1]
    spec8 = CodeSpec.from_info_set(8, [8])
    assert not polar_encode(np.zeros(8, dtype=np.uint8), spec8).any()


@pytest.mark.parametrize("n", range(1, 11))
def test_encode_matches_generator_matrix(n):
    rng = np.random.default_rng(n)
    u = rng.integers(0, 2, size=(20, 1 << n), dtype=np.uint8)
    assert np.array_equal(polar_transform(u), encode_matrix(u))


@pytest.mark.parametrize("n", range(1, 11))
def test_encode_involution_and_linearity(n):
    rng = np.random.default_rng(100 + n)
    N = 1 << n
    u = rng.integers(0, 2, size=(50, N), dtype=np.uint8)
    v = rng.integers(0, 2, size=(50, N), dtype=np.uint8)
    assert np.array_equal(polar_transform(polar_transform(u)), u)
    assert np.array_equal(polar_transform(u ^ v), polar_transform(u) ^ polar_transform(v))


def test_encode_length_mismatch():
    spec = CodeSpec.from_info_set(4, [4])
    with pytest.raises(DimensionError):
        polar_encode([1, 0, 1], spec)


def test_transform_does_not_modify_input():
    u = np.array([1, 0, 1, 1], dtype=np.uint8)
    polar_transform(u)
    assert u.tolist() == [1, 0, 1, 1]


# --- message placement --------------------------------------------------------

def test_message_placement_examples():
    assert message_to_uvector([1, 0], CodeSpec.from_info_set(4, [3, 4])).tolist() == [0, 0, 1, 0]
    spec = CodeSpec.from_info_set(8, [4, 6, 7, 8])
    assert message_to_uvector([1, 1, 0, 1], spec).tolist() == [0, 0, 0, 1, 0, 1, 0, 1]


def test_zero_payload_with_crc_is_zero():
    spec = CodeSpec.from_info_set(64, list(range(33, 65)), CRC16)
    assert spec.K == 16
    assert not message_to_uvector(np.zeros(16, dtype=np.uint8), spec).any()


def test_crc_occupies_last_info_positions():
    spec = CodeSpec.from_info_set(64, list(range(29, 65)), CRC16)
    msg = np.random.default_rng(1).integers(0, 2, spec.K, dtype=np.uint8)
    u = message_to_uvector(msg, spec)
    block = u[spec.info_positions]
    assert np.array_equal(block[:spec.K], msg)
    assert np.array_equal(block[spec.K:], crc_compute(msg, CRC16))
    assert crc_check(block, CRC16)


def test_message_placement_errors():
    spec = CodeSpec.from_info_set(8, [5, 6, 7, 8])
    with pytest.raises(DimensionError):
        message_to_uvector([1, 0, 1], spec)
    with pytest.raises(SpecError):
        CodeSpec.from_info_set(16, [15, 16], CRC16)


def test_batched_placement_matches_single():
    spec = CodeSpec.from_info_set(32, list(range(9, 33)), CRC16)
    msgs = np.random.default_rng(2).integers(0, 2, (5, spec.K), dtype=np.uint8)
    batch = message_to_uvector(msgs, spec)
    for row, m in zip(batch, msgs):
        assert np.array_equal(row, message_to_uvector(m, spec))


# --- CRC --------------------------------------------------------------------------

def test_crc16_check_value():
    rem = crc_compute(bits_of(b"123456789"), CRC16)
    assert to_int(rem) == 0x31C3
    assert to_int(rem) == binascii.crc_hqx(b"123456789", 0)


def test_crc_zero_message():
    assert not crc_compute(np.zeros(40, dtype=np.uint8), CRC24).any()


@pytest.mark.parametrize("crc", [CRC16, CRC24])
def test_single_bit_message(crc):
    # x^width mod g(x)
    expected = crc.generator ^ (1 << crc.width)
    assert to_int(crc_compute([1], crc)) == expected


@pytest.mark.parametrize("crc", [CRC16, CRC24])
def test_crc_matches_long_division_oracle(crc):
    rng = np.random.default_rng(3)
    for length in (1, 7, 64, 200):
        msg = rng.integers(0, 2, length, dtype=np.uint8)
        assert crc_compute(msg, crc).tolist() == crc_long_division(msg, crc.generator, crc.width)


def test_crc16_matches_binascii_on_random_bytes():
    rng = np.random.default_rng(4)
    for _ in range(20):
        data = bytes(rng.integers(0, 256, rng.integers(1, 40)).tolist())
        assert to_int(crc_compute(bits_of(data), CRC16)) == binascii.crc_hqx(data, 0)


def test_crc_init_and_final_xor():
    crc = CrcSpec(16, 0x11021, init=0xFFFF, final_xor=0)
    # CRC-16/CCITT-FALSE check value
    assert to_int(crc_compute(bits_of(b"123456789"), crc)) == 0x29B1
    spec = CrcSpec(16, 0x11021, init=0, final_xor=0xFFFF)
    assert to_int(crc_compute(bits_of(b"123456789"), spec)) == 0x31C3 ^ 0xFFFF


@pytest.mark.parametrize("crc", [CRC16, CRC24, CrcSpec(16, 0x11021, 0x1D0F, 0xFFFF)])
def test_crc_roundtrip_and_single_bit_detection(crc):
    rng = np.random.default_rng(5)
    for _ in range(30):
        msg = rng.integers(0, 2, 48, dtype=np.uint8)
        block = np.concatenate([msg, crc_compute(msg, crc)])
        assert crc_check(block, crc)
        for k in range(block.size):
            bad = block.copy()
            bad[k] ^= 1
            assert not crc_check(bad, crc)


@pytest.mark.parametrize("crc", [CRC16, CRC24, CrcSpec(16, 0x11021, 0x1D0F, 0xFFFF)])
def test_batch_crc_matches_bitwise(crc):
    rng = np.random.default_rng(6)
    msgs = rng.integers(0, 2, (40, 30), dtype=np.uint8)
    checker = BatchCrc(crc, 30)
    rem = checker.remainder(msgs)
    for m, r in zip(msgs, rem):
        assert np.array_equal(r, crc_compute(m, crc))
    blocks = np.concatenate([msgs, rem], axis=1)
    assert checker.check(blocks).all()
    blocks[:, 3] ^= 1
    assert not checker.check(blocks).any()


def test_crc_spec_validation():
    with pytest.raises(SpecError):
        CrcSpec(16, 0x1021)
    with pytest.raises(SpecError):
        CrcSpec(16, 0x11021, init=1 << 16)
    assert crc_by_name("none") is None
    assert crc_by_name("crc24") == CRC24
    with pytest.raises(SpecError):
        crc_by_name("crc7")


# --- CodeSpec ------------------------------------------------------------------

def test_codespec_invariants():
    spec = CodeSpec.from_info_set(8, [4, 6, 7, 8])
    assert spec.n == 3 and spec.N == 8 and spec.K == 4 and spec.K_total == 4
    assert spec.frozen_set == (1, 2, 3, 5)
    assert spec.info_positions.tolist() == [3, 5, 6, 7]
    assert spec.rate == 0.5
    for bad in ([0, 1], [1, 9], [3, 3], []):
        with pytest.raises(SpecError):
            CodeSpec.from_info_set(8, bad)
    with pytest.raises(SpecError):
        CodeSpec(n=3, K=2, info_set=(4, 2))
    with pytest.raises(SpecError):
        CodeSpec.from_info_set(6, [1])


def test_codespec_json_roundtrip(tmp_path):
    spec = CodeSpec.from_info_set(64, list(range(25, 65)), CRC24,
                                  design_point={"type": "awgn", "esn0_db": 1.0},
                                  construction_method="ga",
                                  construction_params={"sigma2": 0.4})
    d = json.loads(spec.to_json())
    assert set(d) == {"n", "N", "K", "info_set", "crc", "design_point", "construction_method",
                      "construction_params"}
    assert d["crc"] == {"width": 24, "generator_hex": "0x1B2B117", "init_hex": "0x0",
                        "final_xor_hex": "0x0"}
    path = tmp_path / "spec.json"
    spec.save(path)
    back = CodeSpec.load(path)
    assert back == spec
    assert back.digest() == spec.digest()


def test_codespec_from_dict_rejects_inconsistent():
    d = CodeSpec.from_info_set(8, [5, 6, 7, 8]).to_dict()
    d["N"] = 16
    with pytest.raises(SpecError):
        CodeSpec.from_dict(d)
