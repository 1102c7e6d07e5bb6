"""Exact rational arithmetic for Farey computations.

Rationals are stdlib fractions.Fraction values: always stored reduced,
positive denominator, arbitrary-precision, exact comparison and
arithmetic. This module adds the Farey-specific operations (mediant,
unimodularity) and the brute-force enumeration oracle that every faster
generator is validated against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

Rational = Fraction

DEFAULT_ENUMERATION_CAP = 10_000_000


class EnumerationCapError(RuntimeError):
    """Denominator range exceeds the configured resource guard."""


def mediant(a: Rational, b: Rational) -> Rational:
    """Farey mediant (a.num + b.num) / (a.den + b.den), reduced."""
    if not a < b:
        raise ValueError(f"mediant needs a < b, got {a} >= {b}")
    return Fraction(a.numerator + b.numerator, a.denominator + b.denominator)


def is_unimodular(a: Rational, b: Rational) -> bool:
    """True iff b.num*a.den - a.num*b.den == 1 (for a < b)."""
    if not a < b:
        raise ValueError(f"unimodularity is defined for a < b, got {a}, {b}")
    return b.numerator * a.denominator - a.numerator * b.denominator == 1


@dataclass(frozen=True)
class UnimodularPair:
    """An ordered pair of consecutive-in-some-Farey-sequence rationals;
    the 2x2 matrix of numerators/denominators has determinant 1."""

    left: Rational
    right: Rational

    def __post_init__(self):
        if not self.left < self.right:
            raise ValueError("left must be smaller than right")
        if not is_unimodular(self.left, self.right):
            raise ValueError(f"pair ({self.left}, {self.right}) is not unimodular")

    def gap(self) -> Rational:
        return Fraction(1, self.left.denominator * self.right.denominator)


def phi_sieve(n: int) -> list[int]:
    """Euler phi for 0..n by sieve."""
    phi = list(range(n + 1))
    for p in range(2, n + 1):
        if phi[p] == p:  # p prime
            for k in range(p, n + 1, p):
                phi[k] -= phi[k] // p
    return phi


def totient_count_oracle(Q: int) -> int:
    """Independent cardinality oracle for the unweighted sequence:
    1 + sum of phi(q) for q = 2..Q."""
    if Q < 1:
        raise ValueError("Q must be >= 1")
    phi = phi_sieve(Q)
    return 1 + sum(phi[2:])


def enumerate_farey_terms(
    unit,
    Q,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> tuple[list[int], list[int]]:
    """All reduced p/q in [0,1) with u(p/q)*q <= Q, as sorted (nums, dens).

    Enumerates q = 1..floor(Q/min(u)) and tests membership exactly
    (integer arithmetic only), so boundary cases u(s)*q == Q are decided
    without any rounding.
    """
    Q = Fraction(Q)
    q_max = int(Q / unit_min_lower(unit))
    if q_max > cap:
        raise EnumerationCapError(
            f"enumeration would scan {q_max} denominators, above the cap {cap}"
        )
    member = unit.membership_tester(Q)
    items: list[tuple[int, int]] = []
    if member(0, 1):
        items.append((0, 1))
    gcd = math.gcd
    for q in range(2, q_max + 1):
        for p in range(1, q):
            if gcd(p, q) == 1 and member(p, q):
                items.append((p, q))
    if q_max < 1 << 26:
        # float keys resolve distinct fractions up to q ~ 2^26; the
        # sequence constructor re-verifies strict order exactly
        items.sort(key=lambda t: t[0] / t[1])
    else:
        items.sort(key=lambda t: Fraction(t[0], t[1]))
    nums = [p for p, _ in items]
    dens = [q for _, q in items]
    return nums, dens


def unit_min_lower(unit) -> Fraction:
    """Certified rational lower bound for min(u), cached on the unit."""
    cached = getattr(unit, "_min_lower_cache", None)
    if cached is not None:
        return cached
    from .unitfn import derive

    bound = derive(unit, tol=1e-6).min_u_lower
    object.__setattr__(unit, "_min_lower_cache", bound)
    return bound


def brute_force_farey(unit, Q, cap: int = DEFAULT_ENUMERATION_CAP):
    """Brute-force construction of the weighted Farey sequence of order Q.

    The independent oracle: direct enumeration with exact membership tests.
    """
    from .fareygen import FareySequence

    nums, dens = enumerate_farey_terms(unit, Q, cap=cap)
    return FareySequence.from_lists(unit, Fraction(Q), nums, dens, method="brute_force")
