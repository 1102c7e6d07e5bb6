"""Fast generation of weighted Farey sequences and their gap statistics.

The workhorse is the next-term recurrence: once consecutive elements are
unimodular, the successor of (prev, curr) is (k*curr - prev) for the
largest feasible integer k, found by exact membership tests. Below the
unimodularity threshold the brute-force oracle is used instead; the two
paths must agree exactly wherever both apply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import rationals
from .rationals import EnumerationCapError, is_unimodular
from .unitfn import Unit, UnitDerived, derive

_INT64_GUARD = 1 << 31  # keeps all int64 cross-products exact


class RecurrenceBreakdown(RuntimeError):
    """No unimodular successor found; order is below the threshold."""


@dataclass(frozen=True)
class FareySequence:
    """Sorted weighted Farey sequence of order Q.

    Numerators and denominators are stored as int64 arrays (exact for
    every order this package targets; construction refuses denominators
    at or above 2^31 so cross-products cannot overflow).
    """

    unit: Unit
    Q: Fraction
    nums: np.ndarray
    dens: np.ndarray
    method: str  # "brute_force" or "recurrence"

    @classmethod
    def from_lists(cls, unit, Q, nums, dens, method) -> "FareySequence":
        dens_list = list(dens)
        if dens_list and max(dens_list) >= _INT64_GUARD:
            raise OverflowError("denominators at or above 2^31 are unsupported")
        seq = cls(
            unit=unit,
            Q=Fraction(Q),
            nums=np.asarray(list(nums), dtype=np.int64),
            dens=np.asarray(dens_list, dtype=np.int64),
            method=method,
        )
        seq._validate()
        return seq

    def _validate(self) -> None:
        if len(self.nums) != len(self.dens):
            raise ValueError("numerator/denominator length mismatch")
        if len(self.nums) == 0:
            return
        if self.nums[0] != 0 or self.dens[0] != 1:
            raise ValueError("sequence must start at 0/1")
        # strictly increasing, checked by exact cross-multiplication
        p, q = self.nums, self.dens
        if not np.all(p[:-1] * q[1:] < p[1:] * q[:-1]):
            raise ValueError("sequence is not strictly increasing")

    def __len__(self) -> int:
        return len(self.nums)

    def fraction(self, i: int) -> Fraction:
        return Fraction(int(self.nums[i]), int(self.dens[i]))

    def fractions(self) -> list[Fraction]:
        return [Fraction(int(p), int(q)) for p, q in zip(self.nums, self.dens)]

    def as_floats(self) -> np.ndarray:
        return self.nums.astype(float) / self.dens.astype(float)

    def same_points(self, other: "FareySequence") -> bool:
        return (
            len(self) == len(other)
            and bool(np.array_equal(self.nums, other.nums))
            and bool(np.array_equal(self.dens, other.dens))
        )


@dataclass(frozen=True)
class GapSample:
    """Normalized gaps n(Q)*(s_{i+1} - s_i), with s_n = 1 appended."""

    gaps: np.ndarray
    n: int

    def mean(self) -> float:
        return float(self.gaps.mean())


# ---------------------------------------------------------------------------
# Next-term recurrence
# ---------------------------------------------------------------------------

def _successor(member, q_max_int: int, p_prev: int, q_prev: int, p: int, q: int):
    """Largest-k successor of (prev, curr): candidates (k*p - p_prev)/(k*q - q_prev).

    Candidate values decrease as k grows, so scanning k downward from the
    resource bound returns the immediate successor at unimodular orders.
    Returns None when no candidate in (curr, 1] is a member.
    """
    k = (q_max_int + q_prev) // q
    while k >= 1:
        b = k * q - q_prev
        if b < 1:
            return None
        a = k * p - p_prev
        if a > b:  # candidate above 1; smaller k only increases it
            return None
        if a == b:  # the appended endpoint 1/1
            return (1, 1)
        if member(a, b):
            return (a, b)
        k -= 1
    return None


def next_term(unit: Unit, Q, prev: Fraction, curr: Fraction) -> Fraction:
    """Successor of curr in F_u(Q) + {1}, given its unimodular predecessor."""
    Q = Fraction(Q)
    if not is_unimodular(prev, curr) if prev < curr else True:
        raise ValueError("(prev, curr) must be an increasing unimodular pair")
    member = unit.membership_tester(Q)
    q_max = int(Q / rationals.unit_min_lower(unit))
    found = _successor(
        member, q_max, prev.numerator, prev.denominator, curr.numerator, curr.denominator
    )
    if found is None:
        raise RecurrenceBreakdown(
            f"no unimodular successor of {curr} at order {Q}; "
            "the order is below the unimodularity threshold"
        )
    return Fraction(*found)


def generate_farey(
    unit: Unit,
    Q,
    cap: int = rationals.DEFAULT_ENUMERATION_CAP,
    force_method: str | None = None,
) -> FareySequence:
    """Weighted Farey sequence of order Q.

    Uses the next-term recurrence when Q clears the certified
    unimodularity bound, brute force otherwise; any recurrence breakdown
    falls back to brute force. Output is identical either way.
    """
    Q = Fraction(Q)
    method = force_method
    if method is None:
        method = "recurrence" if Q >= qprime_bound(unit) else "brute_force"
    if method == "recurrence":
        try:
            return _generate_by_recurrence(unit, Q, cap)
        except RecurrenceBreakdown:
            method = "brute_force"
    return rationals.brute_force_farey(unit, Q, cap=cap)


def _generate_by_recurrence(unit: Unit, Q: Fraction, cap: int) -> FareySequence:
    member = unit.membership_tester(Q)
    if not member(0, 1):
        return FareySequence.from_lists(unit, Q, [], [], "recurrence")
    q_max = int(Q / rationals.unit_min_lower(unit))
    if q_max > cap:
        raise EnumerationCapError(
            f"order with denominators up to {q_max} is above the cap {cap}"
        )
    nums = [0]
    dens = [1]
    # seed: the successor of 0/1, using the virtual predecessor -1/1
    p_prev, q_prev = -1, 1
    p, q = 0, 1
    while True:
        found = _successor(member, q_max, p_prev, q_prev, p, q)
        if found is None:
            raise RecurrenceBreakdown(
                f"recurrence broke after {len(nums)} terms at order {Q}"
            )
        a, b = found
        if a == b:  # reached the appended endpoint 1/1
            break
        nums.append(a)
        dens.append(b)
        p_prev, q_prev, p, q = p, q, a, b
    return FareySequence.from_lists(unit, Q, nums, dens, "recurrence")


# ---------------------------------------------------------------------------
# Unimodularity thresholds
# ---------------------------------------------------------------------------

def qprime_bound(unit: Unit, derived: UnitDerived | None = None) -> Fraction:
    """Certified order beyond which all consecutive gaps are unimodular.

    A non-unimodular gap at order Q forces a divided difference of u^2
    exceeding Q*min(u), so ceil(sup|d(u^2)/ds| / min(u)) is safe. The sup
    and min are certified rational bounds (sup from above, min from below).
    """
    d = derived if derived is not None else derive(unit, tol=1e-6)
    if d.u_sq_sup_slope == 0:
        return Fraction(1)
    bound = d.u_sq_sup_slope / d.min_u_lower
    return Fraction(math.ceil(bound))


def all_gaps_unimodular(seq: FareySequence) -> bool:
    """Every consecutive pair of the sequence + {1} unimodular (exact)."""
    if len(seq) == 0:
        return True
    p = np.concatenate([seq.nums, [1]])
    q = np.concatenate([seq.dens, [1]])
    det = p[1:] * q[:-1] - p[:-1] * q[1:]
    return bool(np.all(det == 1))


def min_unimodular_Q(unit: Unit, Q_max: int, cap: int = rationals.DEFAULT_ENUMERATION_CAP):
    """Smallest integer order from which unimodularity holds up to Q_max.

    Brute-force scan over integer orders (the theorem is non-constructive;
    this measures the actual threshold). Returns None when even Q_max has
    a non-unimodular gap.
    """
    Q_max = int(Q_max)
    last_bad = 0
    for Qi in range(1, Q_max + 1):
        seq = rationals.brute_force_farey(unit, Qi, cap=cap)
        if not all_gaps_unimodular(seq):
            last_bad = Qi
    if last_bad == Q_max:
        return None
    return last_bad + 1


# ---------------------------------------------------------------------------
# Gap statistics
# ---------------------------------------------------------------------------

def normalized_gaps(seq: FareySequence) -> GapSample:
    """Exact rational gaps (with 1 appended), scaled by n(Q), as floats."""
    n = len(seq)
    if n == 0:
        raise ValueError("empty sequence has no gaps")
    p = np.concatenate([seq.nums, [1]])
    q = np.concatenate([seq.dens, [1]])
    num = p[1:] * q[:-1] - p[:-1] * q[1:]  # exact within the int64 guard
    den = q[1:] * q[:-1]
    gaps = float(n) * (num.astype(float) / den.astype(float))
    return GapSample(gaps=gaps, n=n)


def ecdf(sample: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sorted sample and the empirical CDF heights i/n."""
    xs = np.sort(np.asarray(sample, dtype=float))
    return xs, np.arange(1, len(xs) + 1) / len(xs)


def ks_statistic(sample: np.ndarray, cdf) -> float:
    """Kolmogorov-Smirnov distance between a sample and a continuous CDF.

    cdf may be a callable or a (grid, values) pair to interpolate.
    """
    xs = np.sort(np.asarray(sample, dtype=float))
    n = len(xs)
    if callable(cdf):
        fx = np.asarray(cdf(xs), dtype=float)
    else:
        grid, values = cdf
        fx = np.interp(xs, grid, values, left=0.0, right=float(values[-1]))
    upper = np.arange(1, n + 1) / n - fx
    lower = fx - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def bin_masses(seq: FareySequence, bins: int = 20) -> np.ndarray:
    """Empirical measure of the sequence on equal bins of [0,1)."""
    hist, _ = np.histogram(seq.as_floats(), bins=bins, range=(0.0, 1.0))
    return hist / len(seq)


# ---------------------------------------------------------------------------
# Ford-circle verification
# ---------------------------------------------------------------------------

@dataclass
class FordReport:
    pairs_checked: int
    tangent_pairs: int
    external_pairs: int
    violations: list[tuple[int, Fraction, Fraction]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def ford_tangency_check(seq: FareySequence) -> FordReport:
    """Exact Ford-circle geometry over all consecutive pairs (+ appended 1).

    The circle at p/q has center (p/q, 1/(2q^2)) and radius 1/(2q^2).
    dist^2 - (r1+r2)^2 = (det^2 - 1)/(q1 q2)^2 with det = p'q - pq', so
    consecutive pairs must be tangent exactly when unimodular and wholly
    external otherwise; anything else is a violation.
    """
    p = list(map(int, seq.nums)) + [1]
    q = list(map(int, seq.dens)) + [1]
    report = FordReport(0, 0, 0)
    for i in range(len(p) - 1):
        det = p[i + 1] * q[i] - p[i] * q[i + 1]
        # sign of dist^2 - (r1+r2)^2 is the sign of det^2 - 1
        gap_sq_excess = det * det - 1
        report.pairs_checked += 1
        if gap_sq_excess == 0:
            report.tangent_pairs += 1
        elif gap_sq_excess > 0:
            report.external_pairs += 1
        else:  # det == 0: coincident points, impossible for a valid sequence
            report.violations.append(
                (i, Fraction(p[i], q[i]), Fraction(p[i + 1], q[i + 1]))
            )
        if det != 1 and is_unimodular(Fraction(p[i], q[i]), Fraction(p[i + 1], q[i + 1])):
            report.violations.append(
                (i, Fraction(p[i], q[i]), Fraction(p[i + 1], q[i + 1]))
            )
    return report


def count_ratio_to_asymptotic(seq: FareySequence, C: float) -> float:
    """n(Q) * 2*zeta(2) / (C Q^2); tends to 1 as Q grows."""
    from .numerics import TWO_ZETA_2

    Qf = float(seq.Q)
    return len(seq) * TWO_ZETA_2 / (C * Qf * Qf)
