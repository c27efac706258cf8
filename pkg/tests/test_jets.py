"""Jet arithmetic against an independent finite-difference oracle.

The oracle side evaluates plain-float callables with central differences;
the implementation side propagates exact jets.  Agreement bounds follow the
usual FD error model (step 1e-5, relative tolerance 1e-5).
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from legendre_dual.jets import (
    Jet2,
    JetDomainError,
    canonical_third,
    jet_cos,
    jet_exp,
    jet_log,
    jet_pow,
    jet_sin,
    jet_sqrt,
    pushforward_jet,
)

# ---------------------------------------------------------------------- #
# Oracle: central finite differences on float callables.

_STEP = 1e-5


def fd_gradient(f, x: np.ndarray, step: float = _STEP) -> np.ndarray:
    n = len(x)
    g = np.zeros(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        g[i] = (f(x + e) - f(x - e)) / (2.0 * step)
    return g


def fd_hessian(f, x: np.ndarray, step: float = _STEP) -> np.ndarray:
    n = len(x)
    h = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = step
            ej[j] = step
            h[i, j] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * step * step)
    return (h + h.T) / 2.0


def fd_third(f, x: np.ndarray, step: float = 1e-3) -> np.ndarray:
    n = len(x)
    t = np.zeros((n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = step

        def fk(z, _e=e, _s=step):
            return (f(z + _e) - f(z - _e)) / (2.0 * _s)

        t[:, :, k] = fd_hessian(fk, x, step)
    return t


def _rel(err: float, scale: float) -> float:
    return err / max(1.0, scale)


# ---------------------------------------------------------------------- #
# The polynomial example: x1 * y1^2 at (2, 3).
# Derived once with the FD oracle and frozen: value 18, grad (9, 12),
# hess [[0, 6], [6, 4]].


def test_polynomial_jet_frozen_values():
    x = Jet2.variable(2.0, 0, 2)
    y = Jet2.variable(3.0, 1, 2)
    j = x * (y ** 2)
    assert j.value == 18.0
    assert np.allclose(j.grad, [9.0, 12.0], atol=1e-14)
    assert np.allclose(j.hess, [[0.0, 6.0], [6.0, 4.0]], atol=1e-14)

    def f(z):
        return z[0] * z[1] ** 2

    pt = np.array([2.0, 3.0])
    assert _rel(abs(f(pt) - j.value), abs(j.value)) < 1e-12
    assert np.max(np.abs(fd_gradient(f, pt) - j.grad)) < 1e-5 * 13.0
    assert np.max(np.abs(fd_hessian(f, pt) - j.hess)) < 1e-4


_CASES = [
    ("sum/product", lambda z: (z[0] + 2.0 * z[1]) * (z[0] - z[1]) + z[1] ** 3,
     np.array([0.7, -1.2])),
    ("rational", lambda z: (z[0] ** 2 + 1.0) / (z[1] ** 2 + 2.0),
     np.array([1.3, 0.4])),
    ("exp/log", lambda z: math.exp(z[0] * z[1]) + math.log(z[0] ** 2 + 1.5),
     np.array([0.5, -0.8])),
    ("trig", lambda z: math.sin(z[0]) * math.cos(2.0 * z[1]) + math.sin(z[0] * z[1]),
     np.array([1.1, 0.6])),
    ("sqrt/pow", lambda z: math.sqrt(z[0] ** 2 + z[1] ** 2 + 1.0) + (z[0] ** 2 + 1.0) ** 1.5,
     np.array([-0.9, 1.7])),
]


def _jet_version(name: str, seeds: list[Jet2]) -> Jet2:
    a, b = seeds
    if name == "sum/product":
        return (a + b * 2.0) * (a - b) + b ** 3
    if name == "rational":
        return (a ** 2 + 1.0) / (b ** 2 + 2.0)
    if name == "exp/log":
        return jet_exp(a * b) + jet_log(a ** 2 + 1.5)
    if name == "trig":
        return jet_sin(a) * jet_cos(b * 2.0) + jet_sin(a * b)
    if name == "sqrt/pow":
        return jet_sqrt(a ** 2 + b ** 2 + 1.0) + jet_pow(a ** 2 + 1.0, 1.5)
    raise AssertionError(name)


@pytest.mark.parametrize("name,f,pt", _CASES, ids=[c[0] for c in _CASES])
def test_jet_matches_fd_oracle(name, f, pt):
    seeds = Jet2.seed_variables(list(pt), order=2)
    j = _jet_version(name, seeds)
    assert abs(f(pt) - j.value) < 1e-12 * max(1.0, abs(j.value))
    g_oracle = fd_gradient(f, pt)
    h_oracle = fd_hessian(f, pt)
    gscale = max(1.0, float(np.max(np.abs(g_oracle))))
    hscale = max(1.0, float(np.max(np.abs(h_oracle))))
    assert np.max(np.abs(g_oracle - j.grad)) < 1e-5 * gscale
    assert np.max(np.abs(h_oracle - j.hess)) < 1e-4 * hscale


@pytest.mark.parametrize("name,f,pt", _CASES, ids=[c[0] for c in _CASES])
def test_third_order_matches_fd_oracle(name, f, pt):
    seeds = Jet2.seed_variables(list(pt), order=3)
    j = _jet_version(name, seeds)
    assert j.order == 3
    t_oracle = fd_third(f, pt)
    scale = max(1.0, float(np.max(np.abs(t_oracle))))
    assert np.max(np.abs(t_oracle - j.third)) < 5e-4 * scale


def test_hessian_bitwise_symmetric():
    seeds = Jet2.seed_variables([0.3, 0.7, -1.1], order=3)
    j = jet_exp(seeds[0] * seeds[1]) * jet_sin(seeds[2]) + seeds[1] / (seeds[2] ** 2 + 2.0)
    assert np.array_equal(j.hess, j.hess.T)
    t = j.third
    for perm in [(0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]:
        assert np.array_equal(t, np.transpose(t, perm))


def test_canonical_third_is_idempotent():
    rng = np.random.default_rng(5)
    t = rng.normal(size=(4, 4, 4))
    c = canonical_third(t)
    assert np.array_equal(c, canonical_third(c))
    assert np.array_equal(c, np.transpose(c, (2, 1, 0)))


def test_integer_powers_at_zero_and_negative_base():
    z = Jet2.variable(0.0, 0, 1)
    j = z ** 3
    assert j.value == 0.0 and j.grad[0] == 0.0 and j.hess[0, 0] == 0.0
    neg = Jet2.variable(-2.0, 0, 1)
    j2 = neg ** 2
    assert j2.value == 4.0 and j2.grad[0] == -4.0 and j2.hess[0, 0] == 2.0
    j3 = neg ** -1
    assert j3.value == -0.5
    assert abs(j3.grad[0] - (-0.25)) < 1e-15


def test_jet_exponent():
    a = Jet2.variable(2.0, 0, 2)
    b = Jet2.variable(3.0, 1, 2)
    j = jet_pow(a, b)

    def f(z):
        return z[0] ** z[1]

    pt = np.array([2.0, 3.0])
    assert abs(j.value - 8.0) < 1e-12
    assert np.max(np.abs(fd_gradient(f, pt) - j.grad)) < 1e-4
    assert np.max(np.abs(fd_hessian(f, pt) - j.hess)) < 1e-3


def test_domain_errors():
    z = Jet2.variable(-1.0, 0, 1)
    with pytest.raises(JetDomainError):
        jet_log(z)
    with pytest.raises(JetDomainError):
        jet_sqrt(z)
    with pytest.raises(JetDomainError):
        jet_pow(z, 0.5)
    zero = Jet2.variable(0.0, 0, 1)
    with pytest.raises(JetDomainError):
        _ = Jet2.variable(1.0, 0, 1) / zero
    with pytest.raises(JetDomainError):
        _ = zero ** -2


def test_order_truncation_rules():
    a = Jet2.variable(1.5, 0, 2, order=2)
    b = Jet2.variable(0.5, 1, 2, order=1)
    assert (a * b).order == 1
    assert (a + 3.0).order == 2
    assert a.truncated(0).order == 0


def test_pushforward_chain_rule():
    # f(u, v) = u^2 * v at the image of phi(s, t) = (s + t^2, s*t)
    def phi(q):
        return np.array([q[0] + q[1] ** 2, q[0] * q[1]])

    def f_of_phi(q):
        u, v = phi(q)
        return u * u * v

    q = np.array([0.8, -0.6])
    u, v = phi(q)
    outer = Jet2.variable(u, 0, 2) ** 2 * Jet2.variable(v, 1, 2)
    jac = np.array([[1.0, 2.0 * q[1]], [q[1], q[0]]])
    second = np.zeros((2, 2, 2))
    second[0, 1, 1] = 2.0
    second[1, 0, 1] = second[1, 1, 0] = 1.0
    j = pushforward_jet(outer, jac, second, order=2)
    assert abs(j.value - f_of_phi(q)) < 1e-12
    assert np.max(np.abs(fd_gradient(f_of_phi, q) - j.grad)) < 1e-5
    assert np.max(np.abs(fd_hessian(f_of_phi, q) - j.hess)) < 1e-4
