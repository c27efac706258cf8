"""Anchored-bracket layer: axioms, basis brackets, prolongation anchor.

Property tests draw random polynomial sections (degree <= 2 in every
coordinate, coefficients uniform in [-1, 1]) from a SplitMix64 stream with
seed 2026, so failures reproduce byte-for-byte.
"""

from __future__ import annotations

import numpy as np
import pytest

from legendre_dual import Geometry, SIDE_E, fixture_model
from legendre_dual.algebroid import (
    ProlongSection,
    anchor_derivation,
    anchored_map_residual,
    basis_horizontal,
    basis_vertical,
    check_gla,
    check_structure,
    prolong_anchor,
    prolong_bracket,
    section_max_abs_diff,
    section_values,
)
from legendre_dual.fields import f_mul, f_sub, f_sum, partial
from legendre_dual.sampling import SplitMix64

SEED = 2026


def geometry(name: str) -> Geometry:
    return Geometry(fixture_model(name))


def sample_box_points(geom, side, rng, count):
    dim = geom.space(side).dim
    return [
        np.array([rng.next_in(-1.0, 1.0) for _ in range(dim)])
        for _ in range(count)
    ]


def random_poly(geom, side, rng):
    space = geom.space(side)
    terms = [geom.const(side, rng.next_in(-1, 1))]
    for i in range(space.dim):
        terms.append(
            f_mul(geom.const(side, rng.next_in(-1, 1)), geom.coord(side, i))
        )
    for i in range(space.dim):
        for j in range(i, space.dim):
            terms.append(
                f_mul(
                    geom.const(side, rng.next_in(-1, 1)),
                    geom.coord(side, i),
                    geom.coord(side, j),
                )
            )
    return f_sum(space, terms)


def random_section(geom, side, rng) -> ProlongSection:
    z = tuple(random_poly(geom, side, rng) for _ in range(geom.p))
    v = tuple(random_poly(geom, side, rng) for _ in range(geom.r))
    return ProlongSection(side, z, v)


# ---------------------------------------------------------------------- #
# structure-axiom check


def test_check_gla_is_the_structure_check():
    assert check_gla is check_structure


@pytest.mark.parametrize(
    "name,compat_bound",
    [
        ("euclidean-flat", 0.0),
        ("so3-rigid-body", 0.0),
        ("action-solvable", 1e-12),
    ],
)
def test_structure_axioms_on_fixtures(name, compat_bound):
    geom = geometry(name)
    rng = SplitMix64(SEED)
    chi_points = [
        np.array([rng.next_in(-1, 1) for _ in range(geom.m)]) for _ in range(50)
    ]
    x_points = [
        np.array([rng.next_in(-1, 1) for _ in range(geom.m)]) for _ in range(50)
    ]
    report = check_gla(geom, chi_points, x_points)
    assert report.antisymmetry == 0.0
    assert report.compatibility <= compat_bound


def test_anchored_base_maps_commute_on_action_fixture():
    geom = geometry("action-solvable")
    rng = SplitMix64(SEED)
    x_points = [
        np.array([rng.next_in(-1, 1) for _ in range(geom.m)]) for _ in range(50)
    ]
    assert anchored_map_residual(geom, x_points) <= 1e-12


# ---------------------------------------------------------------------- #
# specific bracket values


def test_horizontal_basis_brackets_vanish_on_flat_fixture():
    geom = geometry("euclidean-flat")
    pt = np.array([0.3, -0.8, 0.5, 0.9])
    for alpha in range(2):
        for beta in range(2):
            br = prolong_bracket(
                geom,
                basis_horizontal(geom, SIDE_E, alpha),
                basis_horizontal(geom, SIDE_E, beta),
            )
            assert np.array_equal(
                section_values(geom, br, pt), np.zeros(4)
            )


def test_so3_basis_bracket_reproduces_third_generator():
    geom = geometry("so3-rigid-body")
    br = prolong_bracket(
        geom,
        basis_horizontal(geom, SIDE_E, 0),
        basis_horizontal(geom, SIDE_E, 1),
    )
    expected = basis_horizontal(geom, SIDE_E, 2)
    pt = np.array([0.2, 0.3, -0.4, 0.6])
    assert section_max_abs_diff(geom, br, expected, pt) == 0.0


def test_scaled_horizontal_against_vertical_bracket():
    # [y1 * H_1, V_1] = -H_1 : the vertical direction differentiates the
    # fiber-linear coefficient.
    geom = geometry("euclidean-flat")
    y1 = geom.coord(SIDE_E, 2)
    h1 = basis_horizontal(geom, SIDE_E, 0)
    scaled = ProlongSection(
        SIDE_E,
        tuple(f_mul(y1, z) for z in h1.z),
        tuple(f_mul(y1, v) for v in h1.v),
    )
    br = prolong_bracket(geom, scaled, basis_vertical(geom, SIDE_E, 0))
    pt = np.array([0.7, -0.1, 0.4, 0.9])
    values = section_values(geom, br, pt)
    assert np.allclose(values, [-1.0, 0.0, 0.0, 0.0], atol=1e-14)


# ---------------------------------------------------------------------- #
# prolongation anchor values


def test_prolong_anchor_of_vertical_basis():
    geom = geometry("euclidean-flat")
    vec = prolong_anchor(geom, basis_vertical(geom, SIDE_E, 0))
    pt = np.array([0.3, 0.1, -0.2, 0.8])
    values = [f.value(geom.session, pt) for f in vec]
    assert values == [0.0, 0.0, 1.0, 0.0]


def test_prolong_anchor_of_horizontal_basis_flat():
    geom = geometry("euclidean-flat")
    vec = prolong_anchor(geom, basis_horizontal(geom, SIDE_E, 0))
    pt = np.array([0.3, 0.1, -0.2, 0.8])
    values = [f.value(geom.session, pt) for f in vec]
    assert values == [1.0, 0.0, 0.0, 0.0]


def test_prolong_anchor_of_second_column_on_action_fixture():
    geom = geometry("action-solvable")
    vec = prolong_anchor(geom, basis_horizontal(geom, SIDE_E, 1))
    pt = np.array([3.0, 0.0, 0.2, -0.5])
    values = [f.value(geom.session, pt) for f in vec]
    assert values == pytest.approx([3.0, 1.0, 0.0, 0.0], abs=1e-14)


def test_anchored_derivation_values():
    geom = geometry("action-solvable")
    f = geom.coord(SIDE_E, 0)  # first base coordinate
    sec = basis_horizontal(geom, SIDE_E, 1)
    pt = np.array([2.0, 5.0, 0.0, 0.0])
    assert anchor_derivation(geom, sec, f).value(geom.session, pt) == 2.0

    geom_so3 = geometry("so3-rigid-body")
    f0 = geom_so3.coord(SIDE_E, 0)
    sec0 = basis_horizontal(geom_so3, SIDE_E, 1)
    pt0 = np.array([0.4, 0.1, 0.2, 0.3])
    # the rotation algebra anchors to zero, so nothing moves the base
    assert anchor_derivation(geom_so3, sec0, f0).value(geom_so3.session, pt0) == 0.0


# ---------------------------------------------------------------------- #
# bracket laws on random polynomial sections


@pytest.mark.parametrize(
    "name", ["euclidean-flat", "so3-rigid-body", "action-solvable"]
)
def test_bracket_antisymmetry(name):
    geom = geometry(name)
    rng = SplitMix64(SEED)
    points = sample_box_points(geom, SIDE_E, rng, 5)
    worst = 0.0
    for _ in range(8):
        x = random_section(geom, SIDE_E, rng)
        y = random_section(geom, SIDE_E, rng)
        forward = prolong_bracket(geom, x, y)
        backward = prolong_bracket(geom, y, x)
        for pt in points:
            total = section_values(geom, forward, pt) + section_values(
                geom, backward, pt
            )
            worst = max(worst, float(np.max(np.abs(total))))
    assert worst <= 1e-13


@pytest.mark.parametrize(
    "name", ["euclidean-flat", "so3-rigid-body", "action-solvable"]
)
def test_bracket_leibniz_rule(name):
    geom = geometry(name)
    rng = SplitMix64(SEED + 1)
    points = sample_box_points(geom, SIDE_E, rng, 5)
    worst = 0.0
    for _ in range(6):
        x = random_section(geom, SIDE_E, rng)
        y = random_section(geom, SIDE_E, rng)
        f = random_poly(geom, SIDE_E, rng)
        scaled = ProlongSection(
            SIDE_E,
            tuple(f_mul(f, z) for z in y.z),
            tuple(f_mul(f, v) for v in y.v),
        )
        lhs = prolong_bracket(geom, x, scaled)
        base = prolong_bracket(geom, x, y)
        df = anchor_derivation(geom, x, f)
        rhs = ProlongSection(
            SIDE_E,
            tuple(
                f_sum(geom.space(SIDE_E), [f_mul(f, z), f_mul(df, w)])
                for z, w in zip(base.z, y.z)
            ),
            tuple(
                f_sum(geom.space(SIDE_E), [f_mul(f, v), f_mul(df, w)])
                for v, w in zip(base.v, y.v)
            ),
        )
        for pt in points:
            worst = max(worst, section_max_abs_diff(geom, lhs, rhs, pt))
    assert worst <= 1e-8


@pytest.mark.parametrize(
    "name", ["euclidean-flat", "so3-rigid-body", "action-solvable"]
)
def test_bracket_jacobi_identity(name):
    geom = geometry(name)
    rng = SplitMix64(SEED + 2)
    points = sample_box_points(geom, SIDE_E, rng, 4)
    worst = 0.0
    for _ in range(4):
        x = random_section(geom, SIDE_E, rng)
        y = random_section(geom, SIDE_E, rng)
        z = random_section(geom, SIDE_E, rng)
        cyc = [
            prolong_bracket(geom, x, prolong_bracket(geom, y, z)),
            prolong_bracket(geom, y, prolong_bracket(geom, z, x)),
            prolong_bracket(geom, z, prolong_bracket(geom, x, y)),
        ]
        for pt in points:
            total = sum(section_values(geom, b, pt) for b in cyc)
            worst = max(worst, float(np.max(np.abs(total))))
    assert worst <= 1e-7


@pytest.mark.parametrize(
    "name", ["euclidean-flat", "so3-rigid-body", "action-solvable"]
)
def test_anchor_is_a_bracket_homomorphism(name):
    # anchor of the bracket equals the commutator of the anchored vector
    # fields on the total space.
    geom = geometry(name)
    space = geom.space(SIDE_E)
    dim = space.dim
    rng = SplitMix64(SEED + 3)
    points = sample_box_points(geom, SIDE_E, rng, 4)
    worst = 0.0
    for _ in range(4):
        x = random_section(geom, SIDE_E, rng)
        y = random_section(geom, SIDE_E, rng)
        ax = prolong_anchor(geom, x)
        ay = prolong_anchor(geom, y)
        abr = prolong_anchor(geom, prolong_bracket(geom, x, y))
        for k in range(dim):
            commutator = f_sub(
                f_sum(space, [f_mul(ax[j], partial(ay[k], j)) for j in range(dim)]),
                f_sum(space, [f_mul(ay[j], partial(ax[k], j)) for j in range(dim)]),
            )
            diff = f_sub(abr[k], commutator)
            for pt in points:
                worst = max(worst, abs(diff.value(geom.session, pt)))
    assert worst <= 1e-7
