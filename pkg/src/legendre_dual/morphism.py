"""Pushforward of prolongation sections along the fiber coordinate change.

The tangent prolongation of the fiber map sends a section on one side to a
section on the other:

* horizontal coefficients transport by plain composition with the inverse
  fiber map (the base is untouched);
* vertical coefficients pick up both blocks of the fiber map's tangent:
  the anchor-weighted mixed Hessian and the fiber Hessian of the potential
  generating the map.

Concretely, pushing X = (z, v) from the velocity side to the momentum side,

    z*^alpha = z^alpha ∘ (inverse fiber map)
    v*_b     = [ sum_{alpha,i} z^alpha rho^i_alpha(h(x)) d2L/dx_i dy_b
               + sum_a v^a d2L/dy_a dy_b ] ∘ (inverse fiber map)

and mirrored with the momentum-side potential for the other direction.

A one-form on a side is a pair of coefficient stacks dual to the natural
frame; its pullback along the pushforward is computed so that pairing the
pullback with any section equals pairing the form with the pushed section
at the mapped point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebroid import (
    ProlongSection,
    basis_horizontal,
    basis_vertical,
    prolong_bracket,
    section_max_abs_diff,
)
from .fields import Field, compose, f_mul, f_sum
from .geometry import Geometry, other_side

__all__ = [
    "pushforward",
    "OneForm",
    "pairing_field",
    "pullback_one_form",
    "bracket_morphism_residual",
    "frame_transport_residual",
]


def pushforward(geom: Geometry, sec: ProlongSection) -> ProlongSection:
    """Transport a section to the other side along the fiber map's tangent
    prolongation."""
    side = sec.side
    target = other_side(side)
    space = geom.space(side)
    back = geom.map_to(side)  # the map from target coordinates into side
    m, p, r = geom.m, geom.p, geom.r

    z_out = tuple(compose(sec.z[alpha], back) for alpha in range(p))
    v_out = []
    for b in range(r):
        terms = [
            f_mul(
                sec.z[alpha],
                geom.rho_lift(side, i, alpha),
                geom.mixed_partial(side, i, b),
            )
            for alpha in range(p)
            for i in range(m)
        ]
        terms += [
            f_mul(sec.v[a], geom.fiber_hessian(side, a, b)) for a in range(r)
        ]
        v_out.append(compose(f_sum(space, terms), back))
    return ProlongSection(target, z_out, tuple(v_out))


@dataclass(frozen=True)
class OneForm:
    """A one-form on a side, as coefficients dual to the natural frame."""

    side: str
    zcoef: tuple[Field, ...]
    vcoef: tuple[Field, ...]


def pairing_field(geom: Geometry, form: OneForm, sec: ProlongSection) -> Field:
    if form.side != sec.side:
        raise ValueError("form and section live on different sides")
    space = geom.space(form.side)
    terms = [f_mul(form.zcoef[a], sec.z[a]) for a in range(geom.p)]
    terms += [f_mul(form.vcoef[b], sec.v[b]) for b in range(geom.r)]
    return f_sum(space, terms)


def pullback_one_form(geom: Geometry, form: OneForm, to_side: str) -> OneForm:
    """Pull a form back to the other side through the pushforward: the
    result pairs with a basis section exactly as the form pairs with that
    section's pushforward (composed with the fiber map)."""
    if form.side == to_side:
        raise ValueError("pullback target must be the opposite side")
    fwd = geom.map_to(form.side)  # map from to_side into the form's side
    zcoef = []
    for alpha in range(geom.p):
        pushed = pushforward(geom, basis_horizontal(geom, to_side, alpha))
        zcoef.append(compose(pairing_field(geom, form, pushed), fwd))
    vcoef = []
    for a in range(geom.r):
        pushed = pushforward(geom, basis_vertical(geom, to_side, a))
        vcoef.append(compose(pairing_field(geom, form, pushed), fwd))
    return OneForm(to_side, tuple(zcoef), tuple(vcoef))


def _basis_pairs(geom: Geometry, side: str):
    p, r = geom.p, geom.r
    secs = [("h", alpha, basis_horizontal(geom, side, alpha)) for alpha in range(p)]
    secs += [("v", a, basis_vertical(geom, side, a)) for a in range(r)]
    for i in range(len(secs)):
        for j in range(i + 1, len(secs)):
            yield secs[i], secs[j]


def bracket_morphism_residual(
    geom: Geometry, side: str, points: list[np.ndarray]
) -> float:
    """Worst mismatch, over natural basis pairs and target-side sample
    points, between pushing a bracket forward and bracketing the
    pushforwards."""
    worst = 0.0
    for (_, _, x), (_, _, y) in _basis_pairs(geom, side):
        lhs = pushforward(geom, prolong_bracket(geom, x, y))
        rhs = prolong_bracket(geom, pushforward(geom, x), pushforward(geom, y))
        for w in points:
            worst = max(worst, section_max_abs_diff(geom, lhs, rhs, w))
    return worst


def frame_transport_residual(
    geom: Geometry,
    side: str,
    frames: list[ProlongSection],
    images: list[ProlongSection],
    points: list[np.ndarray],
) -> float:
    """Worst mismatch between pushforwards of given frame sections and the
    expected image sections, over target-side sample points."""
    worst = 0.0
    for sec, expected in zip(frames, images):
        pushed = pushforward(geom, sec)
        for w in points:
            worst = max(worst, section_max_abs_diff(geom, pushed, expected, w))
    return worst
