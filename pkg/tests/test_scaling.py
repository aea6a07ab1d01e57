"""ScaledReal algebra: exact exponent bookkeeping and absorption semantics."""

import math
from fractions import Fraction

import numpy as np
import pytest

from waveblowup.scaling import ABSORB_BITS, ScaledJet2, ScaledReal

BASE = 2.0**10


def test_from_float_normalization():
    rng = np.random.default_rng(7)
    for _ in range(200):
        x = float(rng.uniform(-1, 1)) * 10.0 ** float(rng.uniform(-30, 30))
        if x == 0.0:
            continue
        s = ScaledReal.from_float(x, BASE)
        assert 1.0 <= abs(s.mantissa) < BASE
        assert s.to_float() == pytest.approx(x, rel=1e-15)


def test_mul_adds_exponents_exactly():
    a = ScaledReal(1.5, Fraction(5, 2), BASE)
    b = ScaledReal(-2.0, Fraction(7, 3), BASE)
    c = a * b
    assert c.q + Fraction(0) == Fraction(5, 2) + Fraction(7, 3) or abs(c.mantissa) < BASE
    # normalization may shift q by an integer; value must match in log space
    assert c.log10() == pytest.approx(a.log10() + b.log10(), abs=1e-12)
    assert c.sign() == -1


def test_mul_associative_in_q():
    qs = [Fraction(5, 2) ** k for k in range(6)]
    vals = [ScaledReal(1.0 + 0.1 * k, q, BASE) for k, q in enumerate(qs)]
    left = ((vals[0] * vals[1]) * vals[2]) * vals[3]
    right = vals[0] * ((vals[1] * vals[2]) * vals[3])
    assert left.q == right.q
    assert left.mantissa == pytest.approx(right.mantissa, rel=1e-15)


def test_add_same_scale():
    a = ScaledReal.from_float(3.0, BASE)
    b = ScaledReal.from_float(4.0, BASE)
    assert (a + b).to_float() == pytest.approx(7.0)


def test_add_absorbs_small_term_into_err():
    big = ScaledReal(1.0, Fraction(100), BASE)
    small = ScaledReal(1.0, Fraction(50), BASE)
    s = big + small
    assert s.mantissa == big.mantissa and s.q == big.q
    gap = float(big.q - small.q) * math.log2(BASE)
    assert s.err == pytest.approx(2.0**-gap)
    assert gap > ABSORB_BITS


def test_add_keeps_terms_within_threshold():
    big = ScaledReal(1.0, Fraction(3), BASE)
    small = ScaledReal(1.0, Fraction(0), BASE)  # gap 30 bits < 40
    s = big + small
    assert s.err == 0.0
    assert s.to_float() == pytest.approx(big.to_float() + small.to_float(), rel=1e-15)


def test_huge_ladder_values_representable():
    # N_i = N0**((5/2)**i) for i=6 overflows float64 but not ScaledReal
    q = Fraction(5, 2) ** 6
    n6 = ScaledReal.power_of_base(BASE, q)
    assert n6.log10() == pytest.approx(float(q) * 10 * math.log10(2))
    assert math.isinf(n6.to_float())
    amp = n6.powi(3)  # q multiplication is exact
    assert amp.q == 3 * q


def test_mantissa_at_forced_exponent():
    s = ScaledReal(2.0, Fraction(5), BASE)
    assert s.mantissa_at(Fraction(4)) == pytest.approx(2.0 * BASE)
    assert s.mantissa_at(Fraction(5)) == pytest.approx(2.0)


def test_scaled_jet2_add_and_absorb():
    a = ScaledJet2(Fraction(10), np.ones((2, 2, 2)), BASE)
    b = ScaledJet2(Fraction(10), np.ones((2, 2, 2)), BASE)
    c = a.add(b)
    assert np.allclose(c.coeffs, 2.0)
    tiny = ScaledJet2(Fraction(0), np.ones((2, 2, 2)), BASE)
    d = c.add(tiny)
    assert np.allclose(d.coeffs, 2.0)
    assert d.err > 0.0
