"""Fiberwise Legendre transform: point maps, conjugate values, duality."""

from __future__ import annotations

import math

import numpy as np
import pytest

from legendre_dual import (
    LegendrePair,
    SIDE_E,
    SIDE_ESTAR,
    fixture_model,
    hamiltonian_from_lagrangian,
    lagrangian_from_hamiltonian,
    phi_H,
    phi_L,
)
from legendre_dual.sampling import SplitMix64
from legendre_dual.scenario import parse_scenario_text

HAMILTONIAN_ONLY = """
[meta]
name = "hamiltonian-only"
description = "Quartic momentum potential; velocity side materialized."

[bundle]
mode = "classical"
m = 1
p = 1
r = 1

[hamiltonian]
H = "p1^4/4 + x1*p1"
"""


def pair_for(name: str) -> LegendrePair:
    return LegendrePair.from_model(fixture_model(name))


def test_quadratic_point_maps_frozen_values():
    pair = pair_for("quadratic-coupled")
    u = np.array([0.3, -0.2, 0.5, 1.5])
    w = phi_L(pair, u)
    assert np.allclose(w, [0.3, -0.2, 2.5, 3.5], atol=1e-12)
    assert np.allclose(phi_H(pair, w), u, atol=1e-12)
    assert pair.round_trip_residual(u, SIDE_E) <= 1e-12
    assert pair.round_trip_residual(w, SIDE_ESTAR) <= 1e-12


def test_exponential_conjugate_frozen_value():
    pair = pair_for("exponential-1d")
    w = np.array([0.0, 5.0])
    assert pair.hamiltonian_value(w) == pytest.approx(
        5 * math.log(5) - 5, abs=1e-10
    )
    # the gradient maps invert each other through the log
    u = phi_H(pair, w)
    assert u[1] == pytest.approx(math.log(5), abs=1e-10)


@pytest.mark.parametrize(
    "name", ["quadratic-coupled", "exponential-1d", "quartic-metric"]
)
def test_hessian_duality_and_conjugate_defect(name):
    pair = pair_for(name)
    geom = pair.geom
    rng = SplitMix64(3)
    dim = geom.space(SIDE_E).dim
    for _ in range(10):
        u = np.array([rng.next_in(-0.8, 0.8) for _ in range(dim)])
        u[geom.m :] = np.abs(u[geom.m :]) + 0.2
        w = phi_L(pair, u)
        assert pair.hessian_duality_residual(w) <= 1e-9, name
        assert pair.conjugate_defect(u) <= 1e-10, name


def test_conjugate_from_lagrangian_matches_stored_dual():
    # the dual-pair fixture stores exact conjugates on both sides, so the
    # recomputed conjugate must agree with the stored expression.
    pair = pair_for("dual-pair")
    rng = SplitMix64(9)
    for _ in range(10):
        w = np.array([rng.next_in(-1, 1) for _ in range(4)])
        assert hamiltonian_from_lagrangian(pair, w) == pytest.approx(
            pair.hamiltonian_value(w), abs=1e-10
        )
        u = np.array([rng.next_in(-1, 1) for _ in range(4)])
        assert lagrangian_from_hamiltonian(pair, u) == pytest.approx(
            pair.lagrangian_value(u), abs=1e-10
        )


def test_conjugate_ops_reduce_to_materialized_side_when_single_potential():
    pair = pair_for("quadratic-coupled")  # Lagrangian only
    w = np.array([0.0, 0.0, 1.0, 2.0])
    assert hamiltonian_from_lagrangian(pair, w) == pytest.approx(1.0, abs=1e-12)
    u = np.array([0.3, -0.2, 0.5, 1.5])
    assert lagrangian_from_hamiltonian(pair, u) == pytest.approx(
        pair.lagrangian_value(u), abs=1e-12
    )


def test_hamiltonian_only_scenario_frozen_values():
    pair = LegendrePair.from_model(parse_scenario_text(HAMILTONIAN_ONLY))
    w = np.array([0.5, 1.2])
    u = phi_H(pair, w)
    assert u[1] == pytest.approx(1.2**3 + 0.5, abs=1e-10)
    assert lagrangian_from_hamiltonian(pair, u) == pytest.approx(
        1.5552, abs=1e-9
    )
    assert np.allclose(phi_L(pair, u), w, atol=1e-9)


def test_brute_force_conjugate_agrees_on_grid():
    # coarse fiber grid check of the conjugate value (the fine-grained
    # version runs in the acceptance suite)
    pair = pair_for("exponential-1d")
    ys = np.linspace(-5.0, 5.0, 2001)
    for p in (0.7, 1.3, 2.2):
        w = np.array([0.0, p])
        brute = float(np.max(p * ys - np.exp(ys)))
        assert hamiltonian_from_lagrangian(pair, w) == pytest.approx(
            brute, abs=1e-4
        )
