"""Jet engine versus symbolic differentiation of polynomial test cases."""

import math

import numpy as np
import pytest
import sympy as sp

from waveblowup.jets import (
    Jet,
    jet2_mul,
    taylor_compose,
    taylor_exp,
    taylor_mul,
    taylor_of_poly,
    taylor_reciprocal,
    taylor_sin_cos,
    taylor_sqrt,
)

X = sp.Symbol("x")


def _random_poly(rng, deg):
    coeffs = rng.integers(-4, 5, size=deg + 1)
    if coeffs[deg] == 0:
        coeffs[deg] = 1
    return sum(int(c) * X**j for j, c in enumerate(coeffs))


def _sym_jet(expr, x0, order):
    return np.array(
        [float(sp.diff(expr, X, n).subs(X, x0)) for n in range(order + 1)]
    )


def _poly_jet(expr, x0, order):
    coeffs = np.array([float(c) for c in sp.Poly(expr, X).all_coeffs()[::-1]])
    return Jet.from_taylor(x0, taylor_of_poly(coeffs, x0, order))


def test_products_match_symbolic_oracle():
    rng = np.random.default_rng(42)
    for _ in range(20):
        deg = int(rng.integers(2, 13))
        order = int(rng.integers(2, 13))
        p, q = _random_poly(rng, deg), _random_poly(rng, max(1, deg // 2))
        x0 = float(rng.uniform(-2, 2))
        jp, jq = _poly_jet(p, x0, order), _poly_jet(q, x0, order)
        got = (jp * jq).coeffs
        want = _sym_jet(p * q, x0, order)
        scale = np.maximum(np.abs(want), 1.0)
        assert np.max(np.abs(got - want) / scale) < 1e-12


def test_compositions_match_symbolic_oracle():
    rng = np.random.default_rng(43)
    for _ in range(20):
        order = int(rng.integers(2, 13))
        p = _random_poly(rng, int(rng.integers(2, 7)))
        q = _random_poly(rng, int(rng.integers(2, 5)))
        x0 = float(rng.uniform(-1.5, 1.5))
        inner = _poly_jet(q, x0, order)
        outer = _poly_jet(p, inner.value, order)
        got = outer.compose(inner).coeffs
        want = _sym_jet(p.subs(X, q), x0, order)
        scale = np.maximum(np.abs(want), 1.0)
        assert np.max(np.abs(got - want) / scale) < 1e-12


def test_reciprocal_matches_symbolic_oracle():
    rng = np.random.default_rng(44)
    for _ in range(10):
        order = int(rng.integers(2, 12))
        p = _random_poly(rng, int(rng.integers(1, 6))) + 9  # keep away from zero
        x0 = float(rng.uniform(-1, 1))
        jp = _poly_jet(p, x0, order)
        got = jp.reciprocal().coeffs
        want = _sym_jet(1 / p, x0, order)
        scale = np.maximum(np.abs(want), 1e-30)
        assert np.max(np.abs(got - want) / scale) < 1e-11


def test_leibniz_sum_rules_exact():
    rng = np.random.default_rng(45)
    order = 8
    p = _random_poly(rng, 6)
    q = _random_poly(rng, 6)
    x0 = 0.37
    jp, jq = _poly_jet(p, x0, order), _poly_jet(q, x0, order)
    s = jp + jq
    assert np.allclose(s.coeffs, jp.coeffs + jq.coeffs)
    d = jp - jq
    assert np.allclose(d.coeffs, jp.coeffs - jq.coeffs)


def test_exp_sin_cos_sqrt_kernels():
    order = 12
    x0 = 0.6
    t = np.zeros(order + 1)
    t[0], t[1] = x0, 1.0  # the identity jet
    e = taylor_exp(t, order)
    want = np.array([math.exp(x0) / math.factorial(m) for m in range(order + 1)])
    assert np.allclose(e, want, rtol=1e-13)
    s, c = taylor_sin_cos(t, order)
    sj = Jet.from_taylor(x0, s)
    cj = Jet.from_taylor(x0, c)
    for n in range(order + 1):
        ref_s = math.sin(x0 + n * math.pi / 2)
        ref_c = math.cos(x0 + n * math.pi / 2)
        assert sj.deriv(n) == pytest.approx(ref_s, abs=1e-12)
        assert cj.deriv(n) == pytest.approx(ref_c, abs=1e-12)
    r = taylor_sqrt(t, order)
    sq = Jet.from_taylor(x0, r)
    assert sq.value == pytest.approx(math.sqrt(x0))
    assert sq.deriv(1) == pytest.approx(0.5 / math.sqrt(x0))
    assert sq.deriv(2) == pytest.approx(-0.25 * x0**-1.5)


def test_jet_invariants_rejected():
    with pytest.raises(ValueError):
        Jet(0.0, 2, np.array([1.0, np.inf, 0.0]))
    with pytest.raises(ValueError):
        Jet(0.0, 3, np.array([1.0, 0.0]))


def test_taylor_propagation_consistency():
    # second-order convergence of one-step Taylor transport under refinement
    p = (X**5 - 3 * X**3 + X - 2) * (X**2 + 1)
    x0 = 0.4
    errs = []
    for h in (0.2, 0.1, 0.05):
        j = _poly_jet(p, x0, 4)
        moved = j.shifted_eval(x0 + h)
        exact = float(p.subs(X, x0 + h))
        errs.append(abs(moved - exact))
    # order-4 jet => error ~ h^5; ratio >= 2^4 conservatively
    assert errs[0] / max(errs[1], 1e-300) > 16
    assert errs[1] / max(errs[2], 1e-300) > 16


def test_jet2_mul_against_sympy():
    tt, yy = sp.symbols("t y")
    f = tt**2 * yy + 3 * tt - yy**2
    g = tt * yy**2 - 2 * yy + 1
    t0, y0 = 0.3, -0.7
    J = 3
    def table(expr):
        return np.array(
            [
                [float(sp.diff(expr, tt, i, yy, j).subs({tt: t0, yy: y0})) for j in range(J)]
                for i in range(J)
            ]
        )
    got = jet2_mul(table(f), table(g))
    want = table(f * g)
    assert np.allclose(got, want, rtol=1e-12, atol=1e-12)
