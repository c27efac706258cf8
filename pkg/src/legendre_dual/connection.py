"""Adapted frames, curvature, and second-order transport.

Given connection coefficients on a side, the adapted horizontal frame is

    velocity side:   (adapted)_alpha = (horizontal)_alpha − Gamma^a_alpha (vertical)_a
    momentum side:   (adapted)_alpha = (horizontal)_alpha + Gstar_{b alpha} (vertical)^b

Curvature coefficients are extracted as the vertical defect of the adapted
frame's bracket against the transported structure functions; they are
antisymmetrized exactly by computing each unordered pair once and negating
for the reversed order.

The covariant derivative implements the side-specific transport patterns of
the second-order (block) connection: on the velocity side all four blocks
act on upper-index coefficients, while on the momentum side the
vertical-coefficient blocks act with the transposed/lowered patterns that
match the scenario key layouts documented in the scenario module.
"""

from __future__ import annotations

from .algebroid import ProlongSection, anchor_derivation, prolong_bracket
from .fields import Field, f_mul, f_neg, f_sub, f_sum, partial
from .geometry import Geometry, SIDE_E
from .morphism import OneForm

__all__ = [
    "adapted_horizontal",
    "adapted_vertical_coform",
    "curvature_fields",
    "covariant_derivative",
]


def adapted_horizontal(geom: Geometry, side: str, alpha: int) -> ProlongSection:
    def build():
        z = tuple(
            geom.const(side, 1.0 if b == alpha else 0.0) for b in range(geom.p)
        )
        if side == SIDE_E:
            v = tuple(
                f_neg(geom.connection_coefficient(side, a, alpha))
                for a in range(geom.r)
            )
        else:
            v = tuple(
                geom.connection_coefficient(side, a, alpha) for a in range(geom.r)
            )
        return ProlongSection(side, z, v)

    return geom._get(("adapted", side, alpha), build)  # type: ignore[return-value]


def adapted_vertical_coform(geom: Geometry, side: str, a: int) -> OneForm:
    """The coframe element dual to the a-th vertical basis section in the
    adapted frame (it annihilates the adapted horizontal frame)."""

    def build():
        if side == SIDE_E:
            zcoef = tuple(
                geom.connection_coefficient(side, a, beta) for beta in range(geom.p)
            )
        else:
            zcoef = tuple(
                f_neg(geom.connection_coefficient(side, a, beta))
                for beta in range(geom.p)
            )
        vcoef = tuple(
            geom.const(side, 1.0 if b == a else 0.0) for b in range(geom.r)
        )
        return OneForm(side, zcoef, vcoef)

    return geom._get(("vcoform", side, a), build)  # type: ignore[return-value]


def curvature_fields(
    geom: Geometry, side: str, alpha: int, beta: int
) -> tuple[Field, ...]:
    """Curvature coefficients R_{alpha beta} (one field per fiber index),
    exactly antisymmetric in (alpha, beta)."""
    if alpha == beta:
        return tuple(geom.const(side, 0.0) for _ in range(geom.r))
    if alpha > beta:
        return tuple(
            f_neg(f) for f in curvature_fields(geom, side, beta, alpha)
        )

    def build():
        space = geom.space(side)
        br = prolong_bracket(
            geom,
            adapted_horizontal(geom, side, alpha),
            adapted_horizontal(geom, side, beta),
        )
        sign = 1.0 if side == SIDE_E else -1.0
        out = []
        for a in range(geom.r):
            transport = f_sum(
                space,
                [
                    f_mul(
                        geom.lstruct_lift(side, g, alpha, beta),
                        geom.connection_coefficient(side, a, g),
                    )
                    for g in range(geom.p)
                ],
            )
            if sign > 0:
                out.append(f_sum(space, [br.v[a], transport]))
            else:
                out.append(f_sub(br.v[a], transport))
        return tuple(out)

    return geom._get(("curv", side, alpha, beta), build)  # type: ignore[return-value]


def covariant_derivative(
    geom: Geometry, side: str, x: ProlongSection, t: ProlongSection
) -> ProlongSection:
    """Second-order covariant derivative of section t along direction x,
    in the natural frame."""
    if x.side != side or t.side != side:
        raise ValueError("sections live on the wrong side")
    space = geom.space(side)
    m, p, r = geom.m, geom.p, geom.r
    sign = 1.0 if side == SIDE_E else -1.0

    def adapted_h(sec: ProlongSection, beta: int) -> Field:
        return sec.z[beta]

    def adapted_v(sec: ProlongSection, b: int) -> Field:
        # natural vertical = adapted vertical ± Gamma · horizontal
        correction = f_sum(
            space,
            [
                f_mul(geom.connection_coefficient(side, b, beta), sec.z[beta])
                for beta in range(p)
            ],
        )
        if side == SIDE_E:
            return f_sum(space, [sec.v[b], correction])
        return f_sub(sec.v[b], correction)

    def horizontal_derive(gamma: int, f: Field) -> Field:
        return anchor_derivation(geom, adapted_horizontal(geom, side, gamma), f)

    t_h = [adapted_h(t, beta) for beta in range(p)]
    t_v = [adapted_v(t, b) for b in range(r)]
    x_h = [adapted_h(x, gamma) for gamma in range(p)]
    x_v = [adapted_v(x, c) for c in range(r)]

    w_h = []
    for alpha in range(p):
        terms = []
        for gamma in range(p):
            inner = [horizontal_derive(gamma, t_h[alpha])]
            inner += [
                f_mul(geom.dconn_block(side, "hc", alpha, beta, gamma), t_h[beta])
                for beta in range(p)
            ]
            terms.append(f_mul(x_h[gamma], f_sum(space, inner)))
        for c in range(r):
            inner = [partial(t_h[alpha], m + c)]
            if side == SIDE_E:
                inner += [
                    f_mul(geom.dconn_block(side, "vc", alpha, beta, c), t_h[beta])
                    for beta in range(p)
                ]
            else:
                inner += [
                    f_mul(geom.dconn_block(side, "vc", alpha, c, beta), t_h[beta])
                    for beta in range(p)
                ]
            terms.append(f_mul(x_v[c], f_sum(space, inner)))
        w_h.append(f_sum(space, terms))

    w_v = []
    for a in range(r):
        terms = []
        for gamma in range(p):
            inner = [horizontal_derive(gamma, t_v[a])]
            if side == SIDE_E:
                inner += [
                    f_mul(geom.dconn_block(side, "hv", a, b, gamma), t_v[b])
                    for b in range(r)
                ]
            else:
                inner += [
                    f_mul(geom.dconn_block(side, "hv", b, a, gamma), t_v[b])
                    for b in range(r)
                ]
            terms.append(f_mul(x_h[gamma], f_sum(space, inner)))
        for c in range(r):
            inner = [partial(t_v[a], m + c)]
            if side == SIDE_E:
                inner += [
                    f_mul(geom.dconn_block(side, "vv", a, b, c), t_v[b])
                    for b in range(r)
                ]
            else:
                inner += [
                    f_mul(geom.dconn_block(side, "vv", b, c, a), t_v[b])
                    for b in range(r)
                ]
            terms.append(f_mul(x_v[c], f_sum(space, inner)))
        w_v.append(f_sum(space, terms))

    z_out = tuple(w_h)
    v_out = []
    for a in range(r):
        correction = f_sum(
            space,
            [
                f_mul(geom.connection_coefficient(side, a, alpha), w_h[alpha])
                for alpha in range(p)
            ],
        )
        if sign > 0:
            v_out.append(f_sub(w_v[a], correction))
        else:
            v_out.append(f_sum(space, [w_v[a], correction]))
    return ProlongSection(side, z_out, tuple(v_out))
