"""Blowup-ansatz numerology and the regularity-iteration exponent ledger.

The frequency-cascade ansatz N_j ~ N_{j-1}^(alpha+1) with amplitude N_j^alpha
is self-consistent iff

    (alpha - (d-5)/4)^2 <= (d^2 - 10d - 7)/16,

so the optimal exponent is alpha = (d-5)/4 and feasibility means the
discriminant on the right is nonnegative: false through d = 10, true from
d = 11 on.  The regularity side tabulates the interpolation exponent

    c(p) = min(7/p - 5/2, 11/p - 7/2)          (nine dimensions)

against the iteration requirement c(2s) > 1 - s; in ten dimensions both the
printed variant of c and its pattern-matched correction produce a failure
window, which is the gap the whole story hinges on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class ExponentLedger:
    """Exact rational bookkeeping of the cascade ansatz for dimension d."""

    d: int
    alpha: Fraction
    discriminant: Fraction
    feasible: bool
    step_exponent: Fraction

    def quadratic_slack(self) -> Fraction:
        """discriminant - (alpha - (d-5)/4)^2 with the optimal alpha (exact)."""
        return self.discriminant - (self.alpha - Fraction(self.d - 5, 4)) ** 2


def ansatz_feasibility(d: int) -> ExponentLedger:
    """Exact ledger: alpha = (d-5)/4, feasible iff (d^2-10d-7)/16 >= 0."""
    if d < 2:
        raise ConfigurationError("dimension must be at least 2")
    alpha = Fraction(d - 5, 4)
    disc = Fraction(d * d - 10 * d - 7, 16)
    return ExponentLedger(
        d=d,
        alpha=alpha,
        discriminant=disc,
        feasible=disc >= 0,
        step_exponent=alpha + 1,
    )


_D9_LINES = ((Fraction(7), Fraction(-5, 2)), (Fraction(11), Fraction(-7, 2)))
_D10_PRINTED = ((Fraction(4), Fraction(-3)), (Fraction(12), Fraction(-4)))
_D10_CORRECTED = ((Fraction(8), Fraction(-3)), (Fraction(12), Fraction(-4)))

VARIANTS = ("printed", "corrected")


def _lines(d: int, variant: str):
    if d == 9:
        return _D9_LINES
    if d == 10:
        if variant == "printed":
            return _D10_PRINTED
        if variant == "corrected":
            return _D10_CORRECTED
        raise ConfigurationError(f"unknown d=10 variant {variant!r}")
    raise ConfigurationError("regularity ledger supports d = 9 or 10 only")


def c_of_p(d: int, p: float, variant: str = "printed") -> float:
    """Interpolation exponent c(p) = min over the two Strichartz lines."""
    if p < 2:
        raise ConfigurationError("p must be at least 2")
    lines = _lines(d, variant)
    return min(float(a) / p + float(b) for a, b in lines)


@dataclass
class RegularityCurve:
    """Tabulated c(2s) versus 1-s with the failure intervals of c(2s) > 1-s."""

    d: int
    variant: str
    rows: list = field(default_factory=list)  # (s, c2s, 1-s, feasible)
    gap_intervals: list = field(default_factory=list)

    def feasible_everywhere(self) -> bool:
        return not self.gap_intervals


def _margin(d: int, variant: str):
    lines = _lines(d, variant)

    def h(s: float) -> float:
        return min(float(a) / (2.0 * s) + float(b) for a, b in lines) - (1.0 - s)

    return h


def regularity_scan(
    d: int, s_lo: float, s_hi: float, step: float = 1e-3, variant: str = "printed"
) -> RegularityCurve:
    """Tabulate the iteration condition and extract failure intervals.

    Failure means c(2s) <= 1-s; interval endpoints are refined by bisection
    to width 1e-9.
    """
    if not 1.0 <= s_lo < s_hi:
        raise ConfigurationError("need 1 <= s_lo < s_hi")
    h = _margin(d, variant)
    n = int(round((s_hi - s_lo) / step)) + 1
    ss = np.linspace(s_lo, s_hi, n)
    rows = []
    for s in ss:
        c2s = c_of_p(d, 2.0 * float(s), variant)
        rows.append((float(s), c2s, 1.0 - float(s), bool(c2s > 1.0 - float(s))))

    def refine(a: float, b: float) -> float:
        # sign change of h in (a, b); bisect to 1e-9
        fa = h(a)
        for _ in range(64):
            m = 0.5 * (a + b)
            fm = h(m)
            if (fa <= 0.0) == (fm <= 0.0):
                a, fa = m, fm
            else:
                b = m
            if b - a < 1e-9:
                break
        return 0.5 * (a + b)

    gaps = []
    inside = not rows[0][3]
    start = rows[0][0] if inside else None
    for (s0, _, _, ok0), (s1, _, _, ok1) in zip(rows[:-1], rows[1:]):
        if ok0 and not ok1:
            start = refine(s0, s1)
        elif not ok0 and ok1:
            gaps.append((start, refine(s0, s1)))
            start = None
    if start is not None:
        gaps.append((start, rows[-1][0]))
    return RegularityCurve(d=d, variant=variant, rows=rows, gap_intervals=gaps)


def base_exponent_table(d: int = 9) -> dict:
    """The four dyadic estimate exponents and their interpolation check.

    Offsets are the powers of N in the four endpoint bounds (energy, the
    L2L4 Strichartz consequence, the L-infinity Bernstein bound, and the
    L1L2 energy integral): c(p) must be the min of the two straight lines
    through these endpoints in the variable 1/p.
    """
    if d != 9:
        raise ConfigurationError("the endpoint table is specific to d = 9")
    offsets = {
        "energy": Fraction(-1),
        "L2L4": Fraction(3, 4),
        "LinfLinf": Fraction(7, 2),
        "L1L2": Fraction(-1),
    }
    # endpoints as (1/p, c) pairs; c = -offset
    pts = {
        "L1L2": (Fraction(1, 2), Fraction(1)),
        "L2L4": (Fraction(1, 4), Fraction(3, 4) * -1),
        "LinfLinf": (Fraction(0), Fraction(-7, 2)),
    }

    def line(p1, p2):
        (x1, y1), (x2, y2) = p1, p2
        slope = (y1 - y2) / (x1 - x2)
        return slope, y1 - slope * x1

    l1 = line(pts["L1L2"], pts["L2L4"])
    l2 = line(pts["L2L4"], pts["LinfLinf"])
    checks = {}
    for p in (2, 4, 8, 16):
        interp = min(l1[0] / p + l1[1], l2[0] / p + l2[1])
        checks[p] = (float(interp), c_of_p(9, float(p)))
    return {
        "offsets": offsets,
        "line_low_p": l1,  # (slope in 1/p, intercept) = (7, -5/2)
        "line_high_p": l2,  # (11, -7/2)
        "interpolation_checks": checks,
        "matches": all(abs(a - b) < 1e-14 for a, b in checks.values()),
    }
