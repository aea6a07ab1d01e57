"""Smooth scalar building blocks: cutoff, blend, and the radial profile.

Everything here is a piecewise-smooth function of one variable exposing
jet evaluation to essentially arbitrary order.  The profile ``g`` is built so
that

* ``g'(x) = P(x) + x**k R(x)`` on ``[0, 1]`` with ``P(x) = (-1)**k x**(k-1)``,
* ``R`' top derivative ``R^(k-1)(x) = (k-1)! * psi(x)**-k`` is positive, equal
  to ``(k-1)!/x**k`` for ``x >= 1`` so that ``g'`` vanishes identically on
  ``[1, oo)``,
* ``g`` is compactly supported in ``[-2, 1]``.

Values of the antiderivative chain live on Chebyshev series (integration of
a Chebyshev fit is stable); every *derivative* is produced in closed form by
jet arithmetic, never by differentiating a fitted series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.chebyshev import Chebyshev
from scipy.integrate import quad

from .errors import ConfigurationError, QuadratureError
from .jets import (
    Jet,
    factorial,
    taylor_exp,
    taylor_mul,
    taylor_of_poly,
    taylor_pow_int,
)

_CHEB_DEG = 420


# ---------------------------------------------------------------------------
# SmoothFn: jets plus support metadata
# ---------------------------------------------------------------------------


@dataclass
class SmoothFn:
    """A smooth function with jet evaluation and support metadata.

    ``support=None`` means all of R.  Outside the support the jet is
    identically zero by construction, giving exact Huygens pruning downstream.
    """

    taylor_fn: Callable[[float, int], np.ndarray] = field(repr=False)
    support: tuple[float, float] | None = None
    smoothness_class: str = "C^inf"

    def taylor(self, x: float, order: int) -> np.ndarray:
        if self.support is not None:
            lo, hi = self.support
            if x < lo or x > hi:
                return np.zeros(order + 1)
        return self.taylor_fn(x, order)

    def eval(self, x: float, order: int) -> Jet:
        return Jet.from_taylor(x, self.taylor(x, order))

    def __call__(self, x: float) -> float:
        return float(self.taylor(x, 0)[0])

    def deriv(self, x: float, n: int) -> float:
        return float(self.taylor(x, n)[n] * factorial(n))


# ---------------------------------------------------------------------------
# The exponential bridge exp(-1/(s(1-s))) and its normalized integral
# ---------------------------------------------------------------------------


def _bump01(s):
    """exp(-1/(s(1-s))) on (0,1), zero outside; numpy-vectorized."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = (s > 0.0) & (s < 1.0)
    si = s[inside]
    out[inside] = np.exp(-1.0 / (si * (1.0 - si)))
    return out


def sanitize_taylor(arr: np.ndarray) -> np.ndarray:
    """Zero out everything from the first non-finite coefficient on.

    High-order Taylor coefficients of the bridge pieces overflow float range
    near their flat points; callers treat the truncated tail as unavailable.
    """
    bad = ~np.isfinite(arr)
    if bad.any():
        arr = arr.copy()
        arr[int(np.argmax(bad)):] = 0.0
    return arr


def _bump01_taylor(s: float, order: int) -> np.ndarray:
    """Taylor coefficients of the bridge at s; zero (flat) off (0,1)."""
    if s <= 0.0 or s >= 1.0:
        return np.zeros(order + 1)
    m = np.arange(order + 1, dtype=float)
    with np.errstate(over="ignore"):
        u = -np.power(-1.0, m) / s ** (m + 1) - 1.0 / (1.0 - s) ** (m + 1)
    if not np.all(np.isfinite(u)):
        # truncate at the last representable order; callers treat the tail
        # as unavailable
        bad = int(np.argmax(~np.isfinite(u)))
        u = u[:bad]
        if len(u) == 0:
            return np.zeros(order + 1)
        e = taylor_exp(u, len(u) - 1)
        out = np.zeros(order + 1)
        out[: len(e)] = e
        return out
    return taylor_exp(u, order)


class _Bridge:
    """Normalized integral B(x) = int_0^x bridge / Z: a smooth 0->1 step."""

    def __init__(self):
        self._cheb = Chebyshev.interpolate(_bump01, _CHEB_DEG, domain=[0.0, 1.0])
        self._anti = self._cheb.integ(lbnd=0.0)
        self.total = float(self._anti(1.0))
        ref, _ = quad(lambda s: float(_bump01(s)), 0.0, 1.0, epsabs=1e-15, limit=200)
        if abs(self.total - ref) > 1e-11 * ref:
            raise QuadratureError(
                f"bridge normalization mismatch: cheb={self.total!r} quad={ref!r}"
            )

    def value(self, x: float) -> float:
        if x <= 0.0:
            return 0.0
        if x >= 1.0:
            return 1.0
        return float(self._anti(x)) / self.total

    def taylor(self, x: float, order: int) -> np.ndarray:
        out = np.zeros(order + 1)
        if x >= 1.0:
            out[0] = 1.0
            return out
        if x <= 0.0:
            return out
        out[0] = self.value(x)
        if order >= 1:
            b = _bump01_taylor(x, order - 1) / self.total
            # B' = bridge/Z: coefficient shift
            out[1:] = b / np.arange(1, order + 1)
        return out


_BRIDGE: _Bridge | None = None


def _bridge() -> _Bridge:
    global _BRIDGE
    if _BRIDGE is None:
        _BRIDGE = _Bridge()
    return _BRIDGE


# ---------------------------------------------------------------------------
# Cutoff eta: 1 on [-1,1], 0 outside [-2,2]
# ---------------------------------------------------------------------------


def make_cutoff() -> SmoothFn:
    """Even cutoff: identically 1 on [-1,1], 0 outside [-2,2].

    The transition is the normalized integral of exp(-1/(s(1-s))) rescaled to
    bridge [1,2]: eta(x) = B(2-|x|) there.
    """
    br = _bridge()

    def tay(x: float, order: int) -> np.ndarray:
        ax = abs(x)
        out = np.zeros(order + 1)
        if ax <= 1.0:
            out[0] = 1.0
            return out
        if ax >= 2.0:
            return out
        t = br.taylor(2.0 - ax, order)
        # inner map x -> 2-|x| has derivative -sign(x)
        signs = np.power(-math.copysign(1.0, x), np.arange(order + 1))
        return t * signs

    return SmoothFn(taylor_fn=tay, support=(-2.0, 2.0), smoothness_class="C^inf, 0<=eta<=1")


# ---------------------------------------------------------------------------
# Blend psi: prescribed jet at 0, identity for x >= 1
# ---------------------------------------------------------------------------


def make_blend(
    k: int,
    targets: tuple[float, float, float] = (1.0, 0.1, 1.0),
    bridge_start: float = 0.45,
) -> SmoothFn:
    """Smooth positive psi with psi(x)=x for x>=1.

    ``targets = (value, first, second derivative at 0)``; higher targets are
    zero.  The sign conditions downstream need
    ``psi(0)*psi''(0) > (k+1)*psi'(0)**2``, checked here.

    psi equals the target polynomial exactly on ``[., bridge_start]`` and
    blends into the identity over ``[bridge_start, 1]``; keeping the bridge
    away from 0 leaves the profile real-analytic near the origin, which the
    small-radius wave evaluators rely on.  The polynomial branch extends to
    negative arguments (needed by the profile's left extension).
    """
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    if not 0.0 < bridge_start < 1.0:
        raise ConfigurationError("bridge_start must lie in (0,1)")
    t0, t1, t2 = targets
    if t0 <= 0.0:
        raise ConfigurationError("psi(0) must be positive")
    if t1 <= 0.0:
        raise ConfigurationError("psi'(0) must be positive")
    if not t0 * t2 > (k + 1) * t1 * t1:
        raise ConfigurationError(
            f"blend jet targets violate psi(0)*psi''(0) > (k+1)*psi'(0)^2: "
            f"{t0 * t2} <= {(k + 1) * t1 * t1}"
        )
    br = _bridge()
    tpoly = np.array([t0, t1, t2 / 2.0])
    x0 = bridge_start
    width = 1.0 - x0

    def tay(x: float, order: int) -> np.ndarray:
        if x >= 1.0:
            out = np.zeros(order + 1)
            out[0] = x
            if order >= 1:
                out[1] = 1.0
            return out
        if x <= x0:
            return taylor_of_poly(tpoly, x, order)
        # bridge zone: psi = (1-B(u)) T + B(u) x with u = (x-x0)/width
        with np.errstate(over="ignore", invalid="ignore"):
            b = br.taylor((x - x0) / width, order)
            b = sanitize_taylor(b * np.power(1.0 / width, np.arange(order + 1)))
        tp = taylor_of_poly(tpoly, x, order)
        ident = np.zeros(order + 1)
        ident[0] = x
        if order >= 1:
            ident[1] = 1.0
        one_minus_b = -b.copy()
        one_minus_b[0] += 1.0
        return taylor_mul(one_minus_b, tp, order) + taylor_mul(b, ident, order)

    fn = SmoothFn(taylor_fn=tay, support=None, smoothness_class="C^inf, positive")
    grid = np.linspace(0.0, 1.0, 2001)
    vals = np.array([fn(float(s)) for s in grid])
    fn.psi_min = float(vals.min())  # type: ignore[attr-defined]
    if fn.psi_min <= 0.0:
        raise ConfigurationError("blend is not positive on [0,1]")
    fn.targets = (t0, t1, t2)  # type: ignore[attr-defined]
    fn.bridge_start = x0  # type: ignore[attr-defined]
    return fn


# ---------------------------------------------------------------------------
# Profile: g' = P + x^k R with the antiderivative chain for R
# ---------------------------------------------------------------------------


@dataclass
class Profile:
    """The scalar profile g with its derivative and exact origin jet."""

    k: int
    g: SmoothFn
    gprime: SmoothFn
    taylor_at_zero: Jet
    support: tuple[float, float]
    blend: SmoothFn = field(repr=False)
    r_lower_cheb: list = field(repr=False)  # Chebyshev series of R^(j), j<=k-2
    analytic_window: tuple[float, float] = (-1.0, 0.45)

    def g_taylor(self, x: float, order: int) -> np.ndarray:
        return self.g.taylor(x, order)

    # R and its derivatives (certificate surface) -------------------------

    def r_top_taylor(self, x: float, order: int) -> np.ndarray:
        """Taylor coefficients of R^(k-1) at x (closed form via the blend)."""
        if x >= 1.0:
            # (k-1)!/x^k
            inv = taylor_of_poly(np.array([0.0, 1.0]), x, order)
            return factorial(self.k - 1) * taylor_pow_int(inv, -self.k, order)
        psi_t = self.blend.taylor(x, order)
        return factorial(self.k - 1) * taylor_pow_int(psi_t, -self.k, order)

    def r_taylor(self, x: float, order: int) -> np.ndarray:
        """Taylor coefficients of R at x."""
        k = self.k
        if x >= 1.0:
            inv = taylor_of_poly(np.array([0.0, 1.0]), x, order)
            return (-1.0) ** (k - 1) * taylor_pow_int(inv, -1, order)
        out = np.zeros(order + 1)
        for j in range(min(k - 1, order + 1)):
            out[j] = float(self.r_lower_cheb[j](x)) / factorial(j)
        if order >= k - 1:
            top = self.r_top_taylor(x, order - (k - 1))
            for m in range(k - 1, order + 1):
                j = m - (k - 1)
                out[m] = top[j] * _fact_ratio(j, m)
        return out

    def r_deriv(self, x: float, n: int) -> float:
        t = self.r_taylor(x, n)
        return float(t[n] * factorial(n))


def _fact_ratio(j: int, m: int) -> float:
    """j!/m! without overflow at high orders."""
    if m <= 170:
        return factorial(j) / factorial(m)
    return math.exp(math.lgamma(j + 1) - math.lgamma(m + 1))


def make_profile(k: int, blend: SmoothFn | None = None) -> Profile:
    """Build the profile g for the given ladder index k = (d-1)/2.

    g' follows the analytic formula P + x^k R on (-1, 1) (the blend's target
    polynomial keeps psi positive on the whole range), tapers to zero over
    [-2, -1] under the cutoff, and carries a mass-matching hump on [-2, -1]
    so g itself is compactly supported in [-2, 1].
    """
    if k < 2:
        raise ConfigurationError("profile construction expects k >= 2")
    psi = blend if blend is not None else make_blend(k)
    kf = factorial(k - 1)
    bridge_start = getattr(psi, "bridge_start", 0.45)

    # --- R's antiderivative chain on [-2,1], anchored to the closed form at 1
    def r_top_val(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.array([kf * psi(float(s)) ** (-k) for s in x])

    top_cheb = Chebyshev.interpolate(lambda s: r_top_val(s), _CHEB_DEG, domain=[-2.0, 1.0])
    chain = [None] * (k - 1)
    cur = top_cheb
    for j in range(k - 2, -1, -1):
        anti = cur.integ(lbnd=1.0)
        anchor = (-1.0) ** (k - 1 + j) * factorial(j)  # R^(j)(1) from R = (-1)^(k-1)/x
        chain[j] = anti + anchor
        cur = chain[j]

    # temporary profile shell so r_taylor is usable while building g'
    shell = Profile(
        k=k,
        g=None,  # type: ignore[arg-type]
        gprime=None,  # type: ignore[arg-type]
        taylor_at_zero=None,  # type: ignore[arg-type]
        support=(-2.0, 1.0),
        blend=psi,
        r_lower_cheb=chain,
        analytic_window=(-1.0, bridge_start),
    )

    p_sign = (-1.0) ** k
    p_poly = np.zeros(k)
    p_poly[k - 1] = p_sign  # P(x) = (-1)^k x^(k-1)

    def formula_taylor(x: float, order: int) -> np.ndarray:
        # g' = P + x^k R; exact cancellation for x >= 1
        if x >= 1.0:
            return np.zeros(order + 1)
        pt = taylor_of_poly(p_poly, x, order)
        xk_coeffs = np.zeros(k + 1)
        xk_coeffs[k] = 1.0
        xk = taylor_of_poly(xk_coeffs, x, order)
        rt = shell.r_taylor(x, order)
        return pt + taylor_mul(xk, rt, order)

    eta = make_cutoff()

    def hump_taylor(x: float, order: int) -> np.ndarray:
        # bump supported on (-2,-1), arg mapped to (0,1)
        return _bump01_taylor(x + 2.0, order)

    def gprime_taylor_unmatched(x: float, order: int) -> np.ndarray:
        if x >= 1.0 or x <= -2.0:
            return np.zeros(order + 1)
        f = formula_taylor(x, order)
        if x >= -1.0:
            return f
        return taylor_mul(f, eta.taylor(x, order), order)

    def _vals(fn):
        def call(s):
            return np.array([float(fn(float(x), 0)[0]) for x in np.atleast_1d(s)])

        return call

    base_cheb = Chebyshev.interpolate(_vals(gprime_taylor_unmatched), _CHEB_DEG, domain=[-2.0, 1.0])
    hump_cheb = Chebyshev.interpolate(_vals(hump_taylor), _CHEB_DEG, domain=[-2.0, -1.0])
    int_base = float(base_cheb.integ(lbnd=-2.0)(1.0))
    int_hump = float(hump_cheb.integ(lbnd=-2.0)(-1.0))
    # total integral of g' over [-2,1] must vanish for g to be compactly
    # supported on both sides
    lam = -int_base / int_hump

    def gprime_taylor(x: float, order: int) -> np.ndarray:
        base = gprime_taylor_unmatched(x, order)
        if -2.0 < x < -1.0:
            base = base + lam * hump_taylor(x, order)
        return base

    gprime = SmoothFn(taylor_fn=gprime_taylor, support=(-2.0, 1.0), smoothness_class="C^inf compact")

    gp_cheb = Chebyshev.interpolate(_vals(gprime_taylor), _CHEB_DEG, domain=[-2.0, 1.0])
    g_cheb = gp_cheb.integ(lbnd=1.0)  # g(x) = int_1^x g' selects g(1) = 0

    def g_taylor(x: float, order: int) -> np.ndarray:
        out = np.zeros(order + 1)
        if x >= 1.0 or x <= -2.0:
            return out
        out[0] = float(g_cheb(x))
        if order >= 1:
            gp = gprime_taylor(x, order - 1)
            out[1:] = gp / np.arange(1, order + 1)
        return out

    g = SmoothFn(taylor_fn=g_taylor, support=(-2.0, 1.0), smoothness_class="C^inf compact")

    tz = Jet.from_taylor(0.0, g_taylor(0.0, 2 * k + 2))

    prof = Profile(
        k=k,
        g=g,
        gprime=gprime,
        taylor_at_zero=tz,
        support=(-2.0, 1.0),
        blend=psi,
        r_lower_cheb=chain,
        analytic_window=(-1.0, bridge_start),
    )

    # construction sanity checks: the exact origin derivative and two-sided
    # compact support
    gk0 = tz.deriv(k)
    want = (-1.0) ** k * kf
    if abs(gk0 - want) > 1e-10 * abs(want):
        raise QuadratureError(f"profile construction drifted: g^({k})(0) = {gk0}, want {want}")
    if abs(float(g_cheb(-2.0))) > 1e-12:
        raise QuadratureError(f"profile mass match failed: g(-2) = {float(g_cheb(-2.0))}")
    return prof


def profile_certificates(p: Profile) -> dict:
    """Numerical certificate record for the profile's sign structure."""
    k = p.k
    grid = np.linspace(0.0, 4.0, 401)
    rtop_vals = np.array([float(p.r_top_taylor(float(x), 0)[0]) for x in grid])
    rk0 = p.r_deriv(0.0, k)
    rk10 = p.r_deriv(0.0, k + 1)
    rec = {
        "k": k,
        "rtop_grid_min": float(rtop_vals.min()),
        "rtop_positive": bool(rtop_vals.min() > 0.0),
        "r_k_at_0": rk0,
        "r_k1_at_0": rk10,
        "r_k_negative": bool(rk0 < 0.0),
        "r_k1_negative": bool(rk10 < 0.0),
        "dt_v1_origin": 2.0 ** (k + 1) * rk0,
        "dtt_v1_origin": 2.0 ** (k + 1) * (2 * k + 1) / (k + 1) * rk10,
        "drr_v1_origin": 2.0 ** (k + 1) / (k + 1) * rk10,
    }
    rec["pass"] = bool(rec["rtop_positive"] and rec["r_k_negative"] and rec["r_k1_negative"])
    return rec
