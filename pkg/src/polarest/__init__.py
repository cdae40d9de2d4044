"""Polar-code construction and semi-analytical BLER estimation."""

__version__ = "0.1.0"

from .channels import AWGN, BEC, BSC, channel_llr, make_channel, transmit  # noqa: E402
from .core import (CRC16, CRC24, CodeSpec, CrcSpec, crc_check, crc_compute,  # noqa: E402
                   message_to_uvector, polar_encode, polar_transform)
from .estimators import BitErrorProfile, StopRule, estimate  # noqa: E402

__all__ = [
    "__version__",
    "AWGN", "BEC", "BSC", "channel_llr", "make_channel", "transmit",
    "CRC16", "CRC24", "CodeSpec", "CrcSpec", "crc_check", "crc_compute",
    "message_to_uvector", "polar_encode", "polar_transform",
    "BitErrorProfile", "StopRule", "estimate",
]
