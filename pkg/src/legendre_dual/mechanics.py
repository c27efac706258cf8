"""Mechanical structures on the prolongation: vertical endomorphism,
Liouville section, semisprays, and the canonical one- and two-forms.

The vertical endomorphism twists horizontal coefficients into the vertical
directions through the inverse of the side's bundle morphism (so that
applying it to a semispray returns the Liouville section).  The canonical
one-form pairs only with horizontal coefficients; its exterior derivative is
never formed as a coefficient array — instead the two-form is evaluated on
explicit section pairs through the invariant formula

    omega(U, V) = (anchor U)(theta(V)) − (anchor V)(theta(U)) − theta([U, V])

which only needs the anchored derivation and the bracket.

Mechanics requires the structure rank and fiber rank to agree (square
morphism matrices); scenario validation enforces this before a geometry is
built.
"""

from __future__ import annotations

from .algebroid import ProlongSection, anchor_derivation, prolong_bracket
from .fields import Field, f_mul, f_neg, f_sum, f_sub
from .geometry import Geometry
from .morphism import OneForm, pairing_field

__all__ = [
    "vertical_twist",
    "liouville_section",
    "semispray_section",
    "theta_form",
    "omega_pair_field",
]


def vertical_twist(geom: Geometry, sec: ProlongSection) -> ProlongSection:
    """Vertical endomorphism: kill verticals, send the horizontal
    coefficients into the vertical slots through the inverse morphism."""
    side = sec.side
    space = geom.space(side)
    ginv = geom.g_inverse_bundle(side, side)
    z = tuple(geom.const(side, 0.0) for _ in range(geom.p))
    v = tuple(
        f_sum(
            space,
            [f_mul(ginv.entry(b, a), sec.z[a]) for a in range(geom.p)],
        )
        for b in range(geom.r)
    )
    return ProlongSection(side, z, v)


def liouville_section(geom: Geometry, side: str) -> ProlongSection:
    z = tuple(geom.const(side, 0.0) for _ in range(geom.p))
    v = tuple(geom.coord(side, geom.m + a) for a in range(geom.r))
    return ProlongSection(side, z, v)


def semispray_section(geom: Geometry, side: str) -> ProlongSection:
    """The side's semispray: morphism-weighted fiber coordinates
    horizontally, minus twice the (force-corrected) coefficient vertically."""
    space = geom.space(side)
    z = tuple(
        f_sum(
            space,
            [
                f_mul(geom.g_entry(side, a, c), geom.coord(side, geom.m + c))
                for c in range(geom.r)
            ],
        )
        for a in range(geom.p)
    )
    v = tuple(
        f_neg(geom.semispray_vertical(side, a)) for a in range(geom.r)
    )
    return ProlongSection(side, z, v)


def theta_form(geom: Geometry, side: str) -> OneForm:
    zcoef = tuple(geom.theta_coefficient(side, a) for a in range(geom.p))
    vcoef = tuple(geom.const(side, 0.0) for _ in range(geom.r))
    return OneForm(side, zcoef, vcoef)


def omega_pair_field(
    geom: Geometry, form: OneForm, u: ProlongSection, v: ProlongSection
) -> Field:
    """Value field of the exterior derivative of a one-form on a section
    pair, via the invariant (anchor/bracket) formula."""
    t_uv = pairing_field(geom, form, v)
    t_vu = pairing_field(geom, form, u)
    bracket = prolong_bracket(geom, u, v)
    return f_sub(
        f_sub(
            anchor_derivation(geom, u, t_uv),
            anchor_derivation(geom, v, t_vu),
        ),
        pairing_field(geom, form, bracket),
    )
