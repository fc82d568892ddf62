"""Small shared helpers: hashing, seed derivation, exact rate arithmetic."""

from __future__ import annotations

import hashlib
from fractions import Fraction

HASH_BYTES = 32


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from a list of labels/values.

    Labels keep independent random streams independent: adding a new
    consumer never perturbs an existing one.
    """
    h = hashlib.sha256()
    for p in parts:
        h.update(str(p).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "little")


def as_rate(value) -> Fraction:
    """Coerce a coding ratio to an exact Fraction in (0, 1].

    Accepts Fraction, int, "1/4"-style strings, and floats that are exact
    binary fractions (0.25, 0.5).
    """
    if isinstance(value, Fraction):
        frac = value
    elif isinstance(value, str):
        frac = Fraction(value)
    elif isinstance(value, int):
        frac = Fraction(value)
    else:
        frac = Fraction(value).limit_denominator(1 << 20)
        if float(frac) != float(value):
            raise ValueError(f"rate {value!r} is not an exact fraction")
    if not 0 < frac <= 1:
        raise ValueError(f"rate must lie in (0, 1], got {frac}")
    return frac


def exact_int(value) -> int:
    """Convert a Fraction/float product to int, requiring exactness."""
    frac = Fraction(value)
    if frac.denominator != 1:
        raise ValueError(f"{value} is not integral")
    return int(frac)
