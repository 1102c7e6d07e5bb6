"""Shared numerical kernels: adaptive quadrature with forced knots, exact
polynomial root isolation, and monotone inversion by bisection.

Polynomials are coefficient lists in the monomial basis, index = degree.
Root isolation works over exact rationals (Fraction coefficients); the
quadrature and inversion kernels work in floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

DEFAULT_QUAD_TOL = 1e-10
DEFAULT_BISECT_TOL = 1e-12
DEFAULT_MAX_SUBDIVISIONS = 10_000


class QuadratureError(RuntimeError):
    """Requested tolerance unreachable within the subdivision budget."""


# ---------------------------------------------------------------------------
# Polynomial helpers (exact where the coefficients are exact)
# ---------------------------------------------------------------------------

def poly_eval(coeffs: Sequence, x):
    """Horner evaluation; exact for Fraction coefficients and Fraction x."""
    acc = 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def poly_eval_array(coeffs: Sequence[float], x: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(x, dtype=float)
    for c in reversed(coeffs):
        acc = acc * x + float(c)
    return acc


def poly_derivative(coeffs: Sequence) -> list:
    return [i * c for i, c in enumerate(coeffs)][1:]


def poly_trim(coeffs: Sequence) -> list:
    out = list(coeffs)
    while out and out[-1] == 0:
        out.pop()
    return out


def poly_degree(coeffs: Sequence) -> int:
    return len(poly_trim(coeffs)) - 1


def _poly_rem(num: list, den: list) -> list:
    """Remainder of exact polynomial division."""
    num = list(num)
    dd = len(den) - 1
    lc = den[-1]
    while len(num) - 1 >= dd and any(c != 0 for c in num):
        shift = len(num) - 1 - dd
        factor = num[-1] / lc
        for i, c in enumerate(den):
            num[i + shift] -= factor * c
        num.pop()
        num = poly_trim(num)
        if not num:
            break
    return num


def _poly_gcd(a: list, b: list) -> list:
    a, b = poly_trim(a), poly_trim(b)
    while b:
        a, b = b, _poly_rem(a, b)
    return a


def sturm_sequence(coeffs: Sequence[Fraction]) -> list[list[Fraction]]:
    """Sturm chain of the square-free part of the polynomial."""
    p = poly_trim([Fraction(c) for c in coeffs])
    if len(p) <= 1:
        return [p] if p else []
    d = poly_derivative(p)
    g = _poly_gcd(p, d)
    if len(g) > 1:  # square-free reduction
        p = _poly_rem_quotient(p, g)
        d = poly_derivative(p)
    chain = [p, poly_trim(d)]
    while chain[-1]:
        r = _poly_rem(chain[-2], chain[-1])
        chain.append([-c for c in r])
    chain.pop()
    return chain


def _poly_rem_quotient(num: list, den: list) -> list:
    """Exact quotient num/den (den must divide num)."""
    num = list(num)
    out = [Fraction(0)] * (len(num) - len(den) + 1)
    lc = den[-1]
    while len(num) >= len(den) and any(c != 0 for c in num):
        shift = len(num) - len(den)
        factor = num[-1] / lc
        out[shift] = factor
        for i, c in enumerate(den):
            num[i + shift] -= factor * c
        num.pop()
        num = poly_trim(num)
        if not num:
            break
    return poly_trim(out)


def _sign_variations(chain: list[list[Fraction]], x: Fraction) -> int:
    signs = []
    for p in chain:
        v = poly_eval(p, x)
        if v != 0:
            signs.append(1 if v > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_roots(coeffs: Sequence[Fraction], lo: Fraction, hi: Fraction) -> int:
    """Number of distinct real roots in the half-open interval (lo, hi]."""
    chain = sturm_sequence(coeffs)
    if not chain or len(chain[0]) <= 1:
        return 0
    return _sign_variations(chain, lo) - _sign_variations(chain, hi)


def isolate_roots(
    coeffs: Sequence[Fraction],
    interval: tuple[Fraction, Fraction],
) -> list[tuple[Fraction, Fraction]]:
    """Isolate the distinct real roots of a nonzero polynomial in a closed
    rational interval.

    Returns disjoint rational intervals, each containing exactly one root;
    an exactly-known root comes back as a degenerate pair (r, r).
    """
    coeffs = poly_trim([Fraction(c) for c in coeffs])
    if not coeffs:
        raise ValueError("zero polynomial has no isolated roots")
    lo, hi = Fraction(interval[0]), Fraction(interval[1])
    if lo > hi:
        raise ValueError("empty interval")
    out: list[tuple[Fraction, Fraction]] = []
    if poly_eval(coeffs, lo) == 0:
        out.append((lo, lo))
    if lo == hi:
        return out
    if len(coeffs) == 2:  # linear: solve exactly
        r = -coeffs[0] / coeffs[1]
        if lo < r <= hi and (r, r) not in out:
            out.append((r, r))
        return sorted(out)

    chain = sturm_sequence(coeffs)

    def recurse(a: Fraction, b: Fraction, n: int) -> None:
        if n == 0:
            return
        if n == 1:
            out.append((a, b))
            return
        mid = (a + b) / 2
        if poly_eval(coeffs, mid) == 0:
            out.append((mid, mid))
            # shrink around the exact root so the sub-counts exclude it
            eps = (b - a) / 2**20
            left, right = mid - eps, mid + eps
            recurse(a, left, _sign_variations(chain, a) - _sign_variations(chain, left))
            recurse(right, b, _sign_variations(chain, right) - _sign_variations(chain, b))
        else:
            nl = _sign_variations(chain, a) - _sign_variations(chain, mid)
            recurse(a, mid, nl)
            recurse(mid, b, n - nl)

    recurse(lo, hi, count_roots(coeffs, lo, hi))
    return sorted(out)


def refine_root(
    coeffs: Sequence[Fraction],
    interval: tuple[Fraction, Fraction],
    width: Fraction = Fraction(1, 10**13),
) -> tuple[Fraction, Fraction]:
    """Shrink an isolating interval below the given width by Sturm bisection."""
    lo, hi = Fraction(interval[0]), Fraction(interval[1])
    if lo == hi:
        return lo, hi
    coeffs = [Fraction(c) for c in coeffs]
    chain = sturm_sequence(coeffs)
    while hi - lo > width:
        mid = (lo + hi) / 2
        if poly_eval(coeffs, mid) == 0:
            return mid, mid
        if _sign_variations(chain, lo) - _sign_variations(chain, mid) >= 1:
            hi = mid
        else:
            lo = mid
    return lo, hi


# ---------------------------------------------------------------------------
# Adaptive Gauss-Legendre quadrature with forced knots
# ---------------------------------------------------------------------------

_GL_LO_N = 7
_GL_HI_N = 15
_GL_LO = np.polynomial.legendre.leggauss(_GL_LO_N)
_GL_HI = np.polynomial.legendre.leggauss(_GL_HI_N)


@dataclass
class QuadratureRequest:
    """Integration job: integrand over [a, b] with interior forced knots.

    The integrand is called with a numpy array of nodes unless
    ``vectorized`` is False, in which case it is looped pointwise.
    """

    integrand: Callable
    interval: tuple[float, float]
    forced_knots: Sequence[float] = field(default_factory=tuple)
    tol: float = DEFAULT_QUAD_TOL
    max_subdivisions: int = DEFAULT_MAX_SUBDIVISIONS
    vectorized: bool = True


def _panel_estimates(f, a: float, b: float) -> tuple[float, float]:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    hi = half * float(np.dot(_GL_HI[1], f(mid + half * _GL_HI[0])))
    lo = half * float(np.dot(_GL_LO[1], f(mid + half * _GL_LO[0])))
    return hi, abs(hi - lo)


def integrate(req: QuadratureRequest) -> tuple[float, float]:
    """Integrate adaptively; returns (value, error_bound).

    Each knot-delimited panel is integrated by a 15-point Gauss-Legendre
    rule with the 7-point rule as error reference, bisecting until the
    local budget (tol scaled by panel length) is met.

    Raises QuadratureError after max_subdivisions panel splits.
    """
    a, b = req.interval
    if not b > a:
        return 0.0, 0.0
    f = req.integrand
    if not req.vectorized:
        g = f
        f = lambda xs: np.array([g(x) for x in xs], dtype=float)
    knots = sorted({float(k) for k in req.forced_knots if a < float(k) < b})
    edges = [a, *knots, b]
    total = 0.0
    err = 0.0
    splits = 0
    scale = req.tol / (b - a)
    stack = list(zip(edges, edges[1:]))
    while stack:
        lo, hi = stack.pop()
        val, e = _panel_estimates(f, lo, hi)
        if e <= scale * (hi - lo) or hi - lo < 1e-14 * (b - a):
            total += val
            err += e
            continue
        splits += 1
        if splits > req.max_subdivisions:
            raise QuadratureError(
                f"tolerance {req.tol:g} unreachable within "
                f"{req.max_subdivisions} subdivisions"
            )
        mid = 0.5 * (lo + hi)
        stack.append((lo, mid))
        stack.append((mid, hi))
    return total, err


def integrate_function(
    f: Callable,
    a: float,
    b: float,
    *,
    knots: Sequence[float] = (),
    tol: float = DEFAULT_QUAD_TOL,
    vectorized: bool = True,
) -> float:
    """Convenience wrapper returning just the value."""
    val, _ = integrate(
        QuadratureRequest(f, (a, b), forced_knots=knots, tol=tol, vectorized=vectorized)
    )
    return val


def invert_monotone(
    f: Callable[[float], float],
    interval: tuple[float, float],
    target: float,
    tol: float = DEFAULT_BISECT_TOL,
) -> float:
    """Solve f(s) = target for strictly monotone f on [a, b] by bisection."""
    a, b = float(interval[0]), float(interval[1])
    fa, fb = f(a), f(b)
    increasing = fb >= fa
    lo_v, hi_v = (fa, fb) if increasing else (fb, fa)
    if not (lo_v <= target <= hi_v):
        raise ValueError(f"target {target!r} outside range [{lo_v!r}, {hi_v!r}]")
    lo, hi = a, b
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        v = f(mid)
        if (v < target) == increasing:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bisect_array(
    f: Callable[[np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    target: np.ndarray,
    increasing: bool,
    iterations: int = 46,
) -> np.ndarray:
    """Vectorized bisection of a monotone function on per-element brackets."""
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        below = (f(mid) < target) == increasing
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def pi_squared() -> float:
    return math.pi * math.pi


# shared constant: 2*zeta(2) = pi^2/3, entered in working precision
TWO_ZETA_2 = math.pi * math.pi / 3.0
