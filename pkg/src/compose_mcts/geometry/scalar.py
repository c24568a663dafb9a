"""Exact numbers of the form (p + q*sqrt(2)) / 2**e.

The ring is closed under the 45-degree rotations the tangram pieces use, so
every coordinate, midpoint and rotated vertex stays exact and every sign test
reduces to integer comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..lib.exceptions import ScalarOverflowError

SQRT2 = math.sqrt(2.0)

# Numerators are checked against the signed 64-bit range; squares are formed
# with unbounded integers so the comparison in ``scalar_sign`` cannot wrap.
INT64_MAX = 2**63 - 1


def _checked(value: int) -> int:
    if value > INT64_MAX or value < -INT64_MAX:
        raise ScalarOverflowError(f"Scalar numerator {value} exceeds 64-bit range")
    return value


@dataclass(frozen=True, slots=True)
class Scalar:
    """Value ``(p + q*sqrt(2)) / 2**e`` kept in unique normal form."""

    p: int
    q: int = 0
    e: int = 0

    def __post_init__(self) -> None:
        if self.e < 0:
            raise ValueError("Scalar exponent must be non-negative")
        p, q, e = _checked(self.p), _checked(self.q), self.e
        while e > 0 and p % 2 == 0 and q % 2 == 0:
            p //= 2
            q //= 2
            e -= 1
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "e", e)

    @classmethod
    def from_int(cls, value: int) -> Scalar:
        return cls(int(value), 0, 0)

    @classmethod
    def from_dyadic(cls, numerator: int, exponent: int) -> Scalar:
        return cls(int(numerator), 0, int(exponent))

    @classmethod
    def snap(cls, value: float, max_exponent: int = 8, tol: float = 1e-9) -> Scalar:
        """Nearest ring element with a small denominator, within ``tol``.

        Fallback for values that arrive as doubles. Raises ``ValueError`` when
        no ring element with exponent up to ``max_exponent`` lies within ``tol``.
        """
        for e in range(max_exponent + 1):
            scale = 2**e
            target = value * scale
            q_limit = int(abs(target) / SQRT2) + 2
            for q in range(-q_limit, q_limit + 1):
                p = round(target - q * SQRT2)
                if abs((p + q * SQRT2) / scale - value) <= tol:
                    return cls(p, q, e)
        raise ValueError(f"{value!r} is not within {tol} of a ring element")

    def _aligned(self, other: Scalar) -> tuple[int, int, int, int, int]:
        e = max(self.e, other.e)
        s1 = 1 << (e - self.e)
        s2 = 1 << (e - other.e)
        return self.p * s1, self.q * s1, other.p * s2, other.q * s2, e

    def __add__(self, other: Scalar) -> Scalar:
        p1, q1, p2, q2, e = self._aligned(other)
        return Scalar(p1 + p2, q1 + q2, e)

    def __sub__(self, other: Scalar) -> Scalar:
        p1, q1, p2, q2, e = self._aligned(other)
        return Scalar(p1 - p2, q1 - q2, e)

    def __neg__(self) -> Scalar:
        return Scalar(-self.p, -self.q, self.e)

    def __mul__(self, other: Scalar) -> Scalar:
        return Scalar(
            self.p * other.p + 2 * self.q * other.q,
            self.p * other.q + self.q * other.p,
            self.e + other.e,
        )

    def mul_half_sqrt2(self) -> Scalar:
        """Multiply by sqrt(2)/2, i.e. cos(45 degrees)."""
        return Scalar(2 * self.q, self.p, self.e + 1)

    def half(self) -> Scalar:
        return Scalar(self.p, self.q, self.e + 1)

    def sign(self) -> int:
        return scalar_sign(self)

    def __lt__(self, other: Scalar) -> bool:
        return scalar_sign(self - other) < 0

    def __le__(self, other: Scalar) -> bool:
        return scalar_sign(self - other) <= 0

    def __gt__(self, other: Scalar) -> bool:
        return scalar_sign(self - other) > 0

    def __ge__(self, other: Scalar) -> bool:
        return scalar_sign(self - other) >= 0

    def is_zero(self) -> bool:
        return self.p == 0 and self.q == 0

    def __float__(self) -> float:
        return (self.p + self.q * SQRT2) / (1 << self.e)

    def key(self) -> tuple[int, int, int]:
        """Hashable canonical triple."""
        return (self.p, self.q, self.e)

    def __repr__(self) -> str:
        return f"Scalar(p={self.p}, q={self.q}, e={self.e})"


ZERO = Scalar(0)
ONE = Scalar(1)


def scalar_sign(s: Scalar) -> int:
    """Exact sign of ``(p + q*sqrt(2)) / 2**e`` using integer arithmetic only."""
    p, q = _checked(s.p), _checked(s.q)
    if p >= 0 and q >= 0:
        return 0 if p == 0 and q == 0 else 1
    if p <= 0 and q <= 0:
        return -1
    # Mixed signs: the larger magnitude between |p| and |q|*sqrt(2) wins.
    # They are never equal because sqrt(2) is irrational.
    if p * p > 2 * q * q:
        return 1 if p > 0 else -1
    return 1 if q > 0 else -1
