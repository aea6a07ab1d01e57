"""Truncated Taylor-series (jet) arithmetic.

A jet is a value plus derivatives up to a requested order at a point; it is
the currency every smooth building block trades in.  Internally everything is
computed on *Taylor coefficient* arrays ``c[m] = f^(m)(x)/m!`` because raw
derivatives of the analytic pieces grow like ``m! * rho**-m`` and overflow
float64 near order 170, while the coefficients stay representable.  The
public :class:`Jet` exposes raw derivatives as the rest of the package (and
its tests) expect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# ---------------------------------------------------------------------------
# Taylor-coefficient kernels.  All take/return 1-D float arrays c[0..n].
# ---------------------------------------------------------------------------


def taylor_mul(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    n = order + 1
    out = np.convolve(a[:n], b[:n])[:n]
    if len(out) < n:
        out = np.pad(out, (0, n - len(out)))
    return out


def taylor_reciprocal(a: np.ndarray, order: int) -> np.ndarray:
    if a[0] == 0.0:
        raise ZeroDivisionError("reciprocal of a jet with zero value")
    n = order + 1
    c = np.zeros(n)
    c[0] = 1.0 / a[0]
    for m in range(1, n):
        s = np.dot(a[1 : m + 1], c[m - 1 :: -1][: m])
        c[m] = -s / a[0]
    return c


def taylor_pow_int(a: np.ndarray, p: int, order: int) -> np.ndarray:
    """a(x)**p for integer p (negative allowed when a[0] != 0)."""
    if p == 0:
        out = np.zeros(order + 1)
        out[0] = 1.0
        return out
    if p < 0:
        return taylor_pow_int(taylor_reciprocal(a, order), -p, order)
    result = None
    base = a[: order + 1].copy()
    while p:
        if p & 1:
            result = base.copy() if result is None else taylor_mul(result, base, order)
        p >>= 1
        if p:
            base = taylor_mul(base, base, order)
    return result


def taylor_compose(outer: np.ndarray, inner: np.ndarray, order: int) -> np.ndarray:
    """Coefficients of f(g(x)) where ``outer`` is the jet of f at g(x0).

    ``inner[0]`` is ignored (the expansion point of ``outer`` must already be
    g(x0)); composition runs on the fluctuation h = g - g(x0).
    """
    n = order + 1
    h = np.zeros(n)
    h[: min(n, len(inner))] = inner[:n]
    h[0] = 0.0
    # Horner on the outer series; h**j has valuation j so truncation at
    # `order` needs outer coefficients up to `order` only
    top = min(len(outer) - 1, order)
    res = np.zeros(n)
    res[0] = outer[top]
    for j in range(top - 1, -1, -1):
        res = taylor_mul(res, h, order)
        res[0] += outer[j]
    return res


def taylor_exp(a: np.ndarray, order: int) -> np.ndarray:
    """exp(a(x)) via the E' = a' E recurrence (stable, no factorials)."""
    n = order + 1
    e = np.zeros(n)
    e[0] = math.exp(a[0])
    for m in range(1, n):
        s = 0.0
        for j in range(1, m + 1):
            s += j * a[j] * e[m - j]
        e[m] = s / m
    return e


def taylor_sqrt(a: np.ndarray, order: int) -> np.ndarray:
    if a[0] <= 0.0:
        raise ValueError("sqrt jet needs a positive value")
    n = order + 1
    s = np.zeros(n)
    s[0] = math.sqrt(a[0])
    for m in range(1, n):
        acc = a[m] if m < len(a) else 0.0
        for j in range(1, m):
            acc -= s[j] * s[m - j]
        s[m] = acc / (2.0 * s[0])
    return s


def taylor_sin_cos(a: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    n = order + 1
    s = np.zeros(n)
    c = np.zeros(n)
    s[0] = math.sin(a[0])
    c[0] = math.cos(a[0])
    for m in range(1, n):
        ss = cc = 0.0
        for j in range(1, m + 1):
            ss += j * a[j] * c[m - j]
            cc -= j * a[j] * s[m - j]
        s[m] = ss / m
        c[m] = cc / m
    return s, c


def taylor_of_poly(coeffs: np.ndarray, x: float, order: int) -> np.ndarray:
    """Taylor coefficients at x of the polynomial sum(coeffs[j] * x**j)."""
    c = np.asarray(coeffs, dtype=float)
    out = np.zeros(order + 1)
    top = min(order, len(c) - 1)
    # repeated synthetic division (Horner shift), exact for polynomials
    work = c.copy()
    for m in range(top + 1):
        # evaluate and deflate by (X - x)
        acc = 0.0
        for j in range(len(work) - 1, -1, -1):
            acc = acc * x + work[j]
        out[m] = acc
        new = np.zeros(max(len(work) - 1, 1))
        carry = 0.0
        for j in range(len(work) - 1, 0, -1):
            carry = carry * x + work[j]
            new[j - 1] = carry
        work = new
        if not work.any():
            break
    return out


_FACTORIALS = [math.factorial(i) for i in range(171)]


def factorial(n: int) -> float:
    return float(_FACTORIALS[n]) if n < len(_FACTORIALS) else math.inf


def derivs_to_taylor(d: np.ndarray) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    return d / np.array([factorial(m) for m in range(len(d))])


def taylor_to_derivs(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    return c * np.array([factorial(m) for m in range(len(c))])


# ---------------------------------------------------------------------------
# Public jet type (raw-derivative view).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Jet:
    """Value plus raw derivatives ``coeffs[n] = f^(n)(center)``."""

    center: float
    order: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.order + 1,):
            raise ValueError("coeffs must have order+1 entries")
        if not np.all(np.isfinite(c)):
            raise ValueError("jet coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    # -- constructors -----------------------------------------------------

    @staticmethod
    def constant(value: float, center: float, order: int) -> "Jet":
        c = np.zeros(order + 1)
        c[0] = value
        return Jet(center, order, c)

    @staticmethod
    def variable(center: float, order: int) -> "Jet":
        c = np.zeros(order + 1)
        c[0] = center
        if order >= 1:
            c[1] = 1.0
        return Jet(center, order, c)

    @staticmethod
    def from_taylor(center: float, taylor: np.ndarray) -> "Jet":
        return Jet(center, len(taylor) - 1, taylor_to_derivs(taylor))

    # -- views --------------------------------------------------------------

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    def deriv(self, n: int) -> float:
        return float(self.coeffs[n])

    def taylor(self) -> np.ndarray:
        return derivs_to_taylor(self.coeffs)

    def truncated(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot extend a jet by truncation")
        return Jet(self.center, order, self.coeffs[: order + 1])

    # -- algebra ------------------------------------------------------------

    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.center != self.center or other.order != self.order:
                raise ValueError("jet center/order mismatch")
            return other
        return Jet.constant(float(other), self.center, self.order)

    def __add__(self, other) -> "Jet":
        o = self._coerce(other)
        return Jet(self.center, self.order, self.coeffs + o.coeffs)

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        o = self._coerce(other)
        return Jet(self.center, self.order, self.coeffs - o.coeffs)

    def __rsub__(self, other) -> "Jet":
        o = self._coerce(other)
        return Jet(self.center, self.order, o.coeffs - self.coeffs)

    def __neg__(self) -> "Jet":
        return Jet(self.center, self.order, -self.coeffs)

    def __mul__(self, other) -> "Jet":
        if isinstance(other, (int, float)):
            return Jet(self.center, self.order, self.coeffs * float(other))
        o = self._coerce(other)
        t = taylor_mul(self.taylor(), o.taylor(), self.order)
        return Jet.from_taylor(self.center, t)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        return Jet.from_taylor(self.center, taylor_reciprocal(self.taylor(), self.order))

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, (int, float)):
            return self * (1.0 / float(other))
        return self * self._coerce(other).reciprocal()

    def compose(self, inner: "Jet") -> "Jet":
        """Jet of self∘g at inner.center; self must be expanded at g's value."""
        if self.center != inner.value:
            raise ValueError("outer jet must be centered at inner jet's value")
        t = taylor_compose(self.taylor(), inner.taylor(), inner.order)
        return Jet.from_taylor(inner.center, t)

    def shifted_eval(self, x: float) -> float:
        """Taylor-propagate the jet to evaluate at x."""
        h = x - self.center
        t = self.taylor()
        acc = 0.0
        for c in t[::-1]:
            acc = acc * h + c
        return acc


# ---------------------------------------------------------------------------
# Bivariate raw-derivative jets, small orders only (blowup certification).
# ---------------------------------------------------------------------------


def jet2_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """2-D Leibniz product of raw mixed-derivative tables D[i,j] = d_t^i d_y^j."""
    na, ma = a.shape[:2]
    out_shape = (na, ma) + a.shape[2:]
    out = np.zeros(out_shape)
    binom = _binom_table(max(na, ma))
    for i in range(na):
        for j in range(ma):
            acc = 0.0 * out[i, j]
            for p in range(i + 1):
                for q in range(j + 1):
                    acc = acc + binom[i][p] * binom[j][q] * a[p, q] * b[i - p, j - q]
            out[i, j] = acc
    return out


_BINOM_CACHE: dict[int, list[list[float]]] = {}


def _binom_table(n: int) -> list[list[float]]:
    if n not in _BINOM_CACHE:
        tab = [[math.comb(i, j) for j in range(i + 1)] for i in range(n)]
        _BINOM_CACHE[n] = tab
    return _BINOM_CACHE[n]
