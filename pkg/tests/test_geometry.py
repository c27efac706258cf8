"""Geometry accessors: fiber maps, Hessian blocks, derived connections."""

from __future__ import annotations

import math

import numpy as np
import pytest

from legendre_dual import SIDE_E, SIDE_ESTAR, Geometry, fixture_model
from legendre_dual.scenario import parse_scenario_text

QUAD_GAMMA_ONLY = """
[meta]
name = "quad-gamma-only"
description = "Coupled quadratic potential with one velocity-side connection coefficient."

[bundle]
mode = "classical"
m = 2
p = 2
r = 2

[lagrangian]
L = "y1^2 + y1*y2 + y2^2"

[connection_e]
Gamma.1.2 = "x1*y2"
"""

QUAD_GAMMASTAR_ONLY = QUAD_GAMMA_ONLY.replace(
    '[connection_e]\nGamma.1.2 = "x1*y2"',
    "[connection_estar]\n"
    'Gammastar.1.2 = "x1*(2*p1 - 4*p2)/3"\n'
    'Gammastar.2.2 = "x1*(p1 - 2*p2)/3"',
).replace('name = "quad-gamma-only"', 'name = "quad-gammastar-only"')

HAMILTONIAN_ONLY = """
[meta]
name = "hamiltonian-only"
description = "Quartic momentum potential; the velocity side is materialized."

[bundle]
mode = "classical"
m = 1
p = 1
r = 1

[hamiltonian]
H = "p1^4/4 + x1*p1"
"""


def geom_for(text: str) -> Geometry:
    return Geometry(parse_scenario_text(text))


# ---------------------------------------------------------------------- #
# fiber maps and potential values (frozen closed-form numbers)


def test_quadratic_fiber_maps_round_trip():
    geom = Geometry(fixture_model("quadratic-coupled"))
    u = np.array([0.3, -0.2, 0.5, 1.5])
    w = geom.to_other(SIDE_E, u)
    assert np.allclose(w, [0.3, -0.2, 2.5, 3.5], atol=1e-12)
    back = geom.to_other(SIDE_ESTAR, w)
    assert np.allclose(back, u, atol=1e-12)


def test_quadratic_materialized_hamiltonian_value():
    geom = Geometry(fixture_model("quadratic-coupled"))
    w = np.array([0.0, 0.0, 1.0, 2.0])
    # conjugate of y1^2 + y1*y2 + y2^2 is (p1^2 - p1*p2 + p2^2)/3
    assert geom.hamiltonian_field().value(geom.session, w) == pytest.approx(
        1.0, abs=1e-12
    )


def test_exponential_conjugate_values():
    geom = Geometry(fixture_model("exponential-1d"))
    w = np.array([0.0, 5.0])
    h = geom.hamiltonian_field().value(geom.session, w)
    assert h == pytest.approx(5 * math.log(5) - 5, abs=1e-10)
    # second fiber derivative of the conjugate is 1/p
    assert geom.H_fiber2(0, 0).value(geom.session, w) == pytest.approx(
        0.2, rel=1e-9
    )


def test_hamiltonian_only_scenario_materializes_lagrangian():
    geom = geom_for(HAMILTONIAN_ONLY)
    w = np.array([0.5, 1.2])
    u = geom.to_other(SIDE_ESTAR, w)
    assert u[1] == pytest.approx(1.2**3 + 0.5, abs=1e-10)  # y = H_p = p^3 + x
    L = geom.lagrangian_field().value(geom.session, u)
    assert L == pytest.approx(1.5552, abs=1e-9)  # <p,y> - H
    assert geom.L_fiber(0).value(geom.session, u) == pytest.approx(1.2, abs=1e-9)
    assert geom.L_fiber2(0, 0).value(geom.session, u) == pytest.approx(
        1.0 / (3 * 1.44), rel=1e-8
    )
    assert geom.L_base(0).value(geom.session, u) == pytest.approx(-1.2, abs=1e-9)


# ---------------------------------------------------------------------- #
# pulled-back Hessian blocks


def test_hessian_blocks_are_mutual_inverses():
    geom = Geometry(fixture_model("quadratic-coupled"))
    w = np.array([0.1, 0.4, 0.7, -0.3])
    b_on_estar = np.array(
        [
            [geom.B_field(SIDE_ESTAR, b, c).value(geom.session, w) for c in range(2)]
            for b in range(2)
        ]
    )
    assert np.allclose(b_on_estar, [[2.0, 1.0], [1.0, 2.0]], atol=1e-10)
    u = geom.to_other(SIDE_ESTAR, w)
    b_on_e = np.array(
        [
            [geom.B_field(SIDE_E, b, c).value(geom.session, u) for c in range(2)]
            for b in range(2)
        ]
    )
    assert np.allclose(b_on_e @ b_on_estar, np.eye(2), atol=1e-9)


def test_a_blocks_vanish_for_base_independent_potential():
    geom = Geometry(fixture_model("quadratic-coupled"))
    w = np.array([0.1, 0.4, 0.7, -0.3])
    for alpha in range(2):
        for b in range(2):
            assert geom.A_field(SIDE_ESTAR, alpha, b).value(
                geom.session, w
            ) == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------- #
# connection coefficients: each side derived from the other


def test_dual_connection_derived_from_velocity_side():
    geom = geom_for(QUAD_GAMMA_ONLY)
    assert geom.connection_available()
    assert not geom.gammastar_supplied
    w = np.array([0.8, -0.6, 0.9, 0.2])
    x1, p1, p2 = w[0], w[2], w[3]
    expected = {
        (0, 1): x1 * (2 * p1 - 4 * p2) / 3,
        (1, 1): x1 * (p1 - 2 * p2) / 3,
        (0, 0): 0.0,
        (1, 0): 0.0,
    }
    for (b, alpha), value in expected.items():
        got = geom.gammastar_field(b, alpha).value(geom.session, w)
        assert got == pytest.approx(value, abs=1e-10), (b, alpha)


def test_velocity_connection_derived_from_dual_side():
    geom = geom_for(QUAD_GAMMASTAR_ONLY)
    assert not geom.gamma_supplied and geom.gammastar_supplied
    u = np.array([0.8, -0.6, 0.3, 1.1])
    x1, y2 = u[0], u[3]
    expected = {(0, 1): x1 * y2, (1, 1): 0.0, (0, 0): 0.0, (1, 0): 0.0}
    for (a, alpha), value in expected.items():
        got = geom.gamma_field(a, alpha).value(geom.session, u)
        assert got == pytest.approx(value, abs=1e-10), (a, alpha)


def test_missing_connection_raises():
    geom = Geometry(fixture_model("quadratic-coupled"))
    assert not geom.connection_available()
    with pytest.raises(ValueError, match="no connection data"):
        geom.gamma_field(0, 0)


# ---------------------------------------------------------------------- #
# base maps in generalized mode


def test_generalized_base_maps_invert_each_other():
    geom = Geometry(fixture_model("generalized-cubic"))
    x = np.array([0.4, -0.7])
    chi = geom.h_map_on_base().image(geom.session, x)
    assert np.allclose(chi, [0.4, -0.7 + 0.4**3], atol=1e-14)
    back = geom.eta_map().image(geom.session, chi)
    assert np.allclose(back, x, atol=1e-12)


def test_classical_base_map_is_identity():
    geom = Geometry(fixture_model("quadratic-coupled"))
    x = np.array([0.3, -0.9])
    assert np.array_equal(geom.h_map_on_base().image(geom.session, x), x)


# ---------------------------------------------------------------------- #
# mechanics-derived scalars


def test_theta_coefficients_reduce_to_fiber_gradient_for_identity_morphism():
    geom = Geometry(fixture_model("euclidean-flat"))
    u = np.array([0.2, 0.1, 0.7, -0.4])
    for a in range(2):
        assert geom.theta_coefficient(SIDE_E, a).value(
            geom.session, u
        ) == pytest.approx(u[2 + a], abs=1e-12)


def test_curved_metric_dual_is_inverse_scaled():
    geom = Geometry(fixture_model("curved-metric-mechanics"))
    w = np.array([0.6, -0.2, 0.5, 0.3])
    scale = 1.0 / (1.0 + 0.6**2 / 2.0)
    for a in range(2):
        for b in range(2):
            want = scale if a == b else 0.0
            assert geom.g_entry(SIDE_ESTAR, a, b).value(
                geom.session, w
            ) == pytest.approx(want, abs=1e-12)


def test_semispray_transport_only_when_one_side_supplies():
    # curved-metric fixture: dual side supplies the coefficients, so the
    # velocity side is derived from them (and only that side).
    geom = Geometry(fixture_model("curved-metric-mechanics"))
    assert geom.semispray_derived(SIDE_E)
    assert not geom.semispray_derived(SIDE_ESTAR)
    # euclidean fixture supplies neither; nothing is derived and the
    # vertical parts default to zero.
    geom2 = Geometry(fixture_model("euclidean-flat"))
    assert not geom2.semispray_derived(SIDE_E)
    u = np.array([0.2, 0.1, 0.7, -0.4])
    assert geom2.semispray_vertical(SIDE_E, 0).value(
        geom2.session, u
    ) == pytest.approx(0.0, abs=1e-14)
