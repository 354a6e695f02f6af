"""
Bit-level helpers for comparing bus payloads.
"""

import numpy as np


def hamming_distance(a: bytes, b: bytes) -> int:
    """
    Count the differing bit positions between two equal-length payloads.

    Args:
        a: First payload
        b: Second payload

    Returns:
        Number of bits that differ

    Raises:
        ValueError: If the payloads differ in length
    """
    if len(a) != len(b):
        raise ValueError(f"payload lengths differ: {len(a)} != {len(b)}")
    if not a:
        return 0
    xor = np.bitwise_xor(np.frombuffer(a, dtype=np.uint8), np.frombuffer(b, dtype=np.uint8))
    return int(np.unpackbits(xor).sum())


def to_hex(data: bytes) -> str:
    """Lowercase hex encoding used in every file format."""
    return bytes(data).hex()


def from_hex(text: str) -> bytes:
    return bytes.fromhex(text)
