"""Log-domain arithmetic for the doubly-exponential frequency ladder.

The construction multiplies amplitudes of size N0**((5/2)**i * 3/2) across
scales; by i = 5 these overflow any fixed-width float exponent.  A
``ScaledReal`` stores ``mantissa * N0**q`` with the exponent ``q`` kept as an
exact :class:`fractions.Fraction`, so products track exponents exactly and
only the mantissas live in float64.  Sums of terms whose exponents differ by
more than ``ABSORB_BITS`` bits fold the smaller term into a running relative
error bound ``err`` instead of perturbing the mantissa.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

# Absorption threshold: terms smaller than 2**-ABSORB_BITS relative to the
# dominant one are folded into the error field (relative ~9.1e-13).
ABSORB_BITS = 40.0

Rational = Union[int, Fraction]


def _as_fraction(q: Rational) -> Fraction:
    return q if isinstance(q, Fraction) else Fraction(q)


@dataclass(frozen=True)
class ScaledReal:
    """A real number ``mantissa * base**q`` with exact rational exponent.

    Invariant: ``mantissa == 0`` or ``1 <= |mantissa| < base``.  ``err`` is a
    non-negative relative error bound accumulated by absorption.
    """

    mantissa: float
    q: Fraction
    base: float
    err: float = 0.0

    # -- construction -----------------------------------------------------

    @staticmethod
    def from_float(x: float, base: float, err: float = 0.0) -> "ScaledReal":
        if base <= 1.0:
            raise ValueError("base must exceed 1")
        if x == 0.0:
            return ScaledReal(0.0, Fraction(0), base, err)
        e = math.log(abs(x)) / math.log(base)
        k = math.floor(e)
        m = x / base**k
        # float rounding can leave m marginally outside [1, base)
        while abs(m) >= base:
            m /= base
            k += 1
        while abs(m) < 1.0:
            m *= base
            k -= 1
        return ScaledReal(m, Fraction(k), base, err)

    @staticmethod
    def power_of_base(base: float, q: Rational) -> "ScaledReal":
        return ScaledReal(1.0, _as_fraction(q), base)

    @staticmethod
    def zero(base: float) -> "ScaledReal":
        return ScaledReal(0.0, Fraction(0), base)

    def _normalized(self) -> "ScaledReal":
        m, q = self.mantissa, self.q
        if m == 0.0:
            return ScaledReal(0.0, Fraction(0), self.base, self.err)
        if 1.0 <= abs(m) < self.base:
            return self
        shift = math.floor(math.log(abs(m)) / math.log(self.base))
        m = m / self.base**shift
        q = q + shift
        while abs(m) >= self.base:
            m /= self.base
            q += 1
        while abs(m) < 1.0:
            m *= self.base
            q -= 1
        return ScaledReal(m, q, self.base, self.err)

    # -- queries -----------------------------------------------------------

    def is_zero(self) -> bool:
        return self.mantissa == 0.0

    def sign(self) -> int:
        return 0 if self.mantissa == 0.0 else (1 if self.mantissa > 0 else -1)

    def log10(self) -> float:
        """log10 of the absolute value (requires nonzero)."""
        if self.mantissa == 0.0:
            raise ValueError("log10 of zero ScaledReal")
        return math.log10(abs(self.mantissa)) + float(self.q) * math.log10(self.base)

    def to_float(self) -> float:
        """Collapse to a plain float; overflows to inf for huge exponents."""
        if self.mantissa == 0.0:
            return 0.0
        lg = self.log10()
        if lg > 307.0:
            return math.copysign(math.inf, self.mantissa)
        if lg < -320.0:
            return math.copysign(0.0, self.mantissa)
        return self.mantissa * self.base ** float(self.q)

    def mantissa_at(self, q: Rational) -> float:
        """Mantissa re-expressed at a forced exponent ``q`` (may over/underflow)."""
        dq = float(self.q - _as_fraction(q))
        if self.mantissa == 0.0:
            return 0.0
        lg = math.log10(abs(self.mantissa)) + dq * math.log10(self.base)
        if lg > 307.0:
            return math.copysign(math.inf, self.mantissa)
        if lg < -320.0:
            return 0.0
        return self.mantissa * self.base**dq

    # -- arithmetic ---------------------------------------------------------

    def _check_base(self, other: "ScaledReal") -> None:
        if self.base != other.base:
            raise ValueError("ScaledReal base mismatch")

    def __mul__(self, other: "ScaledReal | float | int") -> "ScaledReal":
        if isinstance(other, (int, float)):
            return ScaledReal(
                self.mantissa * other, self.q, self.base, self.err
            )._normalized()
        self._check_base(other)
        return ScaledReal(
            self.mantissa * other.mantissa,
            self.q + other.q,
            self.base,
            self.err + other.err,
        )._normalized()

    __rmul__ = __mul__

    def __neg__(self) -> "ScaledReal":
        return ScaledReal(-self.mantissa, self.q, self.base, self.err)

    def __abs__(self) -> "ScaledReal":
        return ScaledReal(abs(self.mantissa), self.q, self.base, self.err)

    def reciprocal(self) -> "ScaledReal":
        if self.mantissa == 0.0:
            raise ZeroDivisionError("reciprocal of zero ScaledReal")
        return ScaledReal(
            1.0 / self.mantissa, -self.q, self.base, self.err
        )._normalized()

    def __truediv__(self, other: "ScaledReal | float | int") -> "ScaledReal":
        if isinstance(other, (int, float)):
            return ScaledReal(
                self.mantissa / other, self.q, self.base, self.err
            )._normalized()
        return self * other.reciprocal()

    def powi(self, n: int) -> "ScaledReal":
        if n == 0:
            return ScaledReal(1.0, Fraction(0), self.base, 0.0)
        if n < 0:
            return self.reciprocal().powi(-n)
        return ScaledReal(
            self.mantissa**n, self.q * n, self.base, self.err * n
        )._normalized()

    def __add__(self, other: "ScaledReal") -> "ScaledReal":
        self._check_base(other)
        if other.mantissa == 0.0:
            return ScaledReal(self.mantissa, self.q, self.base, max(self.err, other.err))
        if self.mantissa == 0.0:
            return ScaledReal(other.mantissa, other.q, other.base, max(self.err, other.err))
        big, small = (self, other) if self.q >= other.q else (other, self)
        gap_bits = float(big.q - small.q) * math.log2(big.base)
        # exponent gap can still be bridged by a small big-mantissa; use the
        # true magnitude ratio for the absorption decision
        mag_gap = gap_bits + math.log2(abs(big.mantissa) / abs(small.mantissa))
        if mag_gap < 0:
            big, small = small, big
            mag_gap = -mag_gap
        if mag_gap > ABSORB_BITS:
            return ScaledReal(
                big.mantissa,
                big.q,
                big.base,
                max(big.err, small.err) + 2.0**-mag_gap,
            )
        shifted = small.mantissa * big.base ** float(small.q - big.q)
        return ScaledReal(
            big.mantissa + shifted, big.q, big.base, max(big.err, small.err)
        )._normalized()

    def __sub__(self, other: "ScaledReal") -> "ScaledReal":
        return self + (-other)

    # -- comparisons on magnitude -------------------------------------------

    def abs_cmp(self, other: "ScaledReal") -> int:
        """-1, 0, 1 comparing |self| with |other|."""
        self._check_base(other)
        if self.mantissa == 0.0 and other.mantissa == 0.0:
            return 0
        if self.mantissa == 0.0:
            return -1
        if other.mantissa == 0.0:
            return 1
        da = self.log10()
        db = other.log10()
        if da == db:
            return 0
        return -1 if da < db else 1

    def __repr__(self) -> str:
        return f"ScaledReal({self.mantissa!r} * {self.base:g}**({self.q}), err={self.err:.2e})"


class ScaledJet2:
    """Two-component bivariate jet at a common exponent.

    ``coeffs`` has shape (jt+1, jy+1, 2) holding raw mixed derivatives of a
    two-component map, all sharing the scale factor ``base**q``.  Used by the
    blowup assembly where every per-scale contribution is O(1) in its own
    units but carries an enormous exact-rational exponent.
    """

    __slots__ = ("q", "coeffs", "base", "err")

    def __init__(self, q: Rational, coeffs: np.ndarray, base: float, err: float = 0.0):
        self.q = _as_fraction(q)
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.base = float(base)
        self.err = float(err)

    @staticmethod
    def zeros(shape, base: float) -> "ScaledJet2":
        return ScaledJet2(Fraction(0), np.zeros(shape), base)

    def copy(self) -> "ScaledJet2":
        return ScaledJet2(self.q, self.coeffs.copy(), self.base, self.err)

    def scaled(self, mantissa: float, dq: Rational) -> "ScaledJet2":
        return ScaledJet2(self.q + _as_fraction(dq), self.coeffs * mantissa, self.base, self.err)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def add(self, other: "ScaledJet2") -> "ScaledJet2":
        if self.base != other.base:
            raise ValueError("base mismatch")
        a, b = self, other
        if not a.coeffs.any():
            return ScaledJet2(b.q, b.coeffs.copy(), b.base, max(a.err, b.err))
        if not b.coeffs.any():
            return ScaledJet2(a.q, a.coeffs.copy(), a.base, max(a.err, b.err))
        if a.q < b.q:
            a, b = b, a
        gap_bits = float(a.q - b.q) * math.log2(a.base)
        ratio_bits = gap_bits + math.log2(max(a.max_abs(), 1e-300) / max(b.max_abs(), 1e-300))
        if ratio_bits > ABSORB_BITS:
            return ScaledJet2(a.q, a.coeffs.copy(), a.base, max(a.err, b.err) + 2.0**-ratio_bits)
        if ratio_bits < -ABSORB_BITS:
            return ScaledJet2(b.q, b.coeffs.copy(), b.base, max(a.err, b.err) + 2.0**ratio_bits)
        shift = a.base ** float(b.q - a.q)
        return ScaledJet2(a.q, a.coeffs + b.coeffs * shift, a.base, max(a.err, b.err))

    def component(self, a: int, b: int, comp: int) -> ScaledReal:
        return ScaledReal.from_float(float(self.coeffs[a, b, comp]), self.base, self.err) * ScaledReal.power_of_base(self.base, self.q)

    def __repr__(self) -> str:
        return f"ScaledJet2(q={self.q}, shape={self.coeffs.shape}, err={self.err:.2e})"
