"""Residual evaluators for every catalogued duality check.

Each evaluator receives an :class:`EvalContext` (one scenario, one geometry,
one evaluation session, one deterministic sample set) and returns an
:class:`Outcome` with the worst absolute residual over its sample points.

Sampling policy
---------------
* The *primary* side is the one whose potential the scenario supplies (the
  velocity side when both are given).  Its points are drawn from the
  scenario's sampling box; the other side is evaluated at the images of
  those points under the fiber coordinate change, so paired identities see
  corresponding points.
* The two round-trip checks instead draw *independent* boxes on each side,
  so the inverse map is exercised away from the forward map's image.
* Base-level checks draw from the base coordinates' boxes.

Every residual is built as a scalar field and evaluated through exact jets;
no finite differences appear anywhere in these evaluators.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .algebroid import (
    anchored_map_residual,
    basis_horizontal,
    basis_vertical,
    check_structure,
    prolong_bracket,
    section_values,
)
from .connection import (
    adapted_horizontal,
    adapted_vertical_coform,
    covariant_derivative,
    curvature_fields,
)
from .fields import Field, compose, f_mul, f_neg, f_sub, f_sum, partial
from .geometry import Geometry, SIDE_E, SIDE_ESTAR, other_side
from .mechanics import (
    omega_pair_field,
    semispray_section,
    theta_form,
)
from .morphism import (
    bracket_morphism_residual,
    pullback_one_form,
    pushforward,
)
from .sampling import SamplePlan, sample_points
from .scenario import ScenarioModel

__all__ = ["EvalContext", "Outcome", "EVALUATORS", "GATE_EVALUATORS"]


@dataclass
class Outcome:
    residual: float
    points: int
    note: str = ""


class EvalContext:
    """One scenario's evaluation state for a single check job."""

    def __init__(self, model: ScenarioModel, count: int, seed: int) -> None:
        self.model = model
        self.count = count
        self.seed = seed
        self.geom = Geometry(model)

    # -- sampling ------------------------------------------------------- #

    def _box_for(self, coords: tuple[str, ...]) -> tuple[tuple[float, float], ...]:
        return tuple(self.model.box_for(c) for c in coords)

    def _samples(self, coords: tuple[str, ...], seed: int) -> list[np.ndarray]:
        plan = SamplePlan(self.count, seed, self._box_for(coords))
        return sample_points(plan)

    @cached_property
    def points_E_box(self) -> list[np.ndarray]:
        return self._samples(self.geom.E.coords, self.seed)

    @cached_property
    def points_Estar_box(self) -> list[np.ndarray]:
        return self._samples(self.geom.Estar.coords, self.seed + 1)

    @cached_property
    def points_M(self) -> list[np.ndarray]:
        return self._samples(self.geom.M.coords, self.seed + 2)

    @cached_property
    def points_N(self) -> list[np.ndarray]:
        return self._samples(self.geom.N.coords, self.seed + 3)

    @cached_property
    def primary_side(self) -> str:
        return SIDE_E if self.model.lagrangian is not None else SIDE_ESTAR

    @cached_property
    def _primary_points(self) -> list[np.ndarray]:
        if self.primary_side == SIDE_E:
            return self.points_E_box
        return self.points_Estar_box

    @cached_property
    def _mapped_points(self) -> list[np.ndarray]:
        return [
            self.geom.to_other(self.primary_side, pt)
            for pt in self._primary_points
        ]

    def eval_points(self, side: str) -> list[np.ndarray]:
        if side == self.primary_side:
            return self._primary_points
        return self._mapped_points

    # -- generic field-residual evaluation -------------------------------- #

    def max_abs(self, side: str, fields: list[Field]) -> Outcome:
        pts = self.eval_points(side)
        session = self.geom.session
        worst = 0.0
        for f in fields:
            for pt in pts:
                worst = max(worst, abs(f.value(session, pt)))
        return Outcome(worst, len(pts))


# ---------------------------------------------------------------------- #
# small helpers shared by the evaluators


def _dx(f: Field, i: int) -> Field:
    return partial(f, i)


def _dfib(geom: Geometry, f: Field, a: int) -> Field:
    return partial(f, geom.m + a)


def _kron(geom: Geometry, side: str, i: int, j: int) -> Field:
    return geom.const(side, 1.0 if i == j else 0.0)


# ---------------------------------------------------------------------- #
# base-map and round-trip checks


def eval_2_4(ctx: EvalContext) -> Outcome:
    res = anchored_map_residual(ctx.geom, ctx.points_M)
    return Outcome(res, len(ctx.points_M))


def eval_2_5(ctx: EvalContext) -> Outcome:
    rep = check_structure(ctx.geom, ctx.points_N, ctx.points_M)
    res = max(rep.antisymmetry, rep.compatibility)
    note = ""
    if rep.antisymmetry > rep.compatibility:
        note = "worst residual is in the antisymmetry of the structure grid"
    return Outcome(res, len(ctx.points_M), note)


def eval_3_6(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    worst = 0.0
    for u in ctx.points_E_box:
        w = g.phi_L_map().image(g.session, u)
        back = g.phi_H_map().image(g.session, w)
        worst = max(worst, float(np.max(np.abs(back - u))))
    return Outcome(worst, len(ctx.points_E_box))


def eval_3_7(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    worst = 0.0
    for w in ctx.points_Estar_box:
        u = g.phi_H_map().image(g.session, w)
        back = g.phi_L_map().image(g.session, u)
        worst = max(worst, float(np.max(np.abs(back - w))))
    return Outcome(worst, len(ctx.points_Estar_box))


# ---------------------------------------------------------------------- #
# prolongation bracket structure (section 4 family)


def _struct_fields(ctx: EvalContext, side: str) -> list[Field]:
    g = ctx.geom
    out: list[Field] = []
    for al in range(g.p):
        for be in range(al + 1, g.p):
            br = prolong_bracket(
                g, basis_horizontal(g, side, al), basis_horizontal(g, side, be)
            )
            for gam in range(g.p):
                out.append(f_sub(br.z[gam], g.lstruct_lift(side, gam, al, be)))
            out.extend(br.v)
    return out


def eval_4_8(ctx: EvalContext) -> Outcome:
    return ctx.max_abs(SIDE_E, _struct_fields(ctx, SIDE_E))


def eval_4_12(ctx: EvalContext) -> Outcome:
    return ctx.max_abs(SIDE_ESTAR, _struct_fields(ctx, SIDE_ESTAR))


def _mixed_block_fields(ctx: EvalContext, side: str) -> list[Field]:
    """Horizontal-horizontal relation for the transported tangent blocks."""
    g = ctx.geom
    sp = g.space(side)
    A = lambda al, b: g.A_field(side, al, b)
    out: list[Field] = []
    for al in range(g.p):
        for be in range(al + 1, g.p):
            for b in range(g.r):
                lhs = f_sum(
                    sp,
                    [
                        f_mul(g.lstruct_lift(side, gam, al, be), A(gam, b))
                        for gam in range(g.p)
                    ],
                )
                rhs_terms = [
                    f_mul(g.rho_lift(side, i, al), _dx(A(be, b), i))
                    for i in range(g.m)
                ]
                rhs_terms += [
                    f_neg(f_mul(g.rho_lift(side, i, be), _dx(A(al, b), i)))
                    for i in range(g.m)
                ]
                rhs_terms += [
                    f_mul(A(al, a), _dfib(g, A(be, b), a)) for a in range(g.r)
                ]
                rhs_terms += [
                    f_neg(f_mul(A(be, a), _dfib(g, A(al, b), a)))
                    for a in range(g.r)
                ]
                out.append(f_sub(lhs, f_sum(sp, rhs_terms)))
    return out


def eval_4_9(ctx: EvalContext) -> Outcome:
    return ctx.max_abs(SIDE_ESTAR, _mixed_block_fields(ctx, SIDE_ESTAR))


def eval_4_13(ctx: EvalContext) -> Outcome:
    return ctx.max_abs(SIDE_E, _mixed_block_fields(ctx, SIDE_E))


def _hv_block_fields(ctx: EvalContext, side: str) -> list[Field]:
    g = ctx.geom
    sp = g.space(side)
    A = lambda al, b: g.A_field(side, al, b)
    B = lambda b, c: g.B_field(side, b, c)
    out: list[Field] = []
    for al in range(g.p):
        for b in range(g.r):
            for c in range(g.r):
                terms = [
                    f_mul(g.rho_lift(side, i, al), _dx(B(b, c), i))
                    for i in range(g.m)
                ]
                terms += [
                    f_mul(A(al, a), _dfib(g, B(b, c), a)) for a in range(g.r)
                ]
                terms += [
                    f_neg(f_mul(B(b, a), _dfib(g, A(al, c), a)))
                    for a in range(g.r)
                ]
                out.append(f_sum(sp, terms))
    return out


def eval_4_10(ctx: EvalContext) -> Outcome:
    return ctx.max_abs(SIDE_ESTAR, _hv_block_fields(ctx, SIDE_ESTAR))


def eval_4_14(ctx: EvalContext) -> Outcome:
    return ctx.max_abs(SIDE_E, _hv_block_fields(ctx, SIDE_E))


def _vv_block_fields(ctx: EvalContext, side: str) -> list[Field]:
    g = ctx.geom
    sp = g.space(side)
    B = lambda b, c: g.B_field(side, b, c)
    out: list[Field] = []
    for a in range(g.r):
        for b in range(a + 1, g.r):
            for d in range(g.r):
                terms = [
                    f_mul(B(a, c), _dfib(g, B(b, d), c)) for c in range(g.r)
                ]
                terms += [
                    f_neg(f_mul(B(b, c), _dfib(g, B(a, d), c)))
                    for c in range(g.r)
                ]
                out.append(f_sum(sp, terms))
    return out


def eval_4_11(ctx: EvalContext) -> Outcome:
    return ctx.max_abs(SIDE_ESTAR, _vv_block_fields(ctx, SIDE_ESTAR))


def eval_4_15(ctx: EvalContext) -> Outcome:
    return ctx.max_abs(SIDE_E, _vv_block_fields(ctx, SIDE_E))


# ---------------------------------------------------------------------- #
# connection coefficient duality (section 5 family)


def eval_5_2(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    out = []
    for b in range(g.r):
        for al in range(g.p):
            inner = f_sub(
                f_sum(
                    g.E,
                    [
                        f_mul(g.rho_lift(SIDE_E, i, al), g.L_mixed(i, b))
                        for i in range(g.m)
                    ],
                ),
                f_sum(
                    g.E,
                    [
                        f_mul(g.gamma_field(a, al), g.L_fiber2(a, b))
                        for a in range(g.r)
                    ],
                ),
            )
            out.append(
                f_sub(g.gammastar_field(b, al), compose(inner, g.phi_H_map()))
            )
    res = ctx.max_abs(SIDE_ESTAR, out)
    if not ctx.geom.gammastar_supplied:
        res.note = "dual coefficients are constructed from this relation"
    return res


def eval_5_3(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    out = []
    for a in range(g.r):
        for al in range(g.p):
            inner = f_sum(
                g.Estar,
                [
                    f_mul(g.rho_lift(SIDE_ESTAR, i, al), g.H_mixed(i, a))
                    for i in range(g.m)
                ]
                + [
                    f_mul(g.gammastar_field(b, al), g.H_fiber2(b, a))
                    for b in range(g.r)
                ],
            )
            out.append(
                f_sum(
                    g.E,
                    [g.gamma_field(a, al), compose(inner, g.phi_L_map())],
                )
            )
    res = ctx.max_abs(SIDE_E, out)
    if not ctx.geom.gamma_supplied:
        res.note = "primal coefficients are constructed from this relation"
    return res


def eval_5_4(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    out = []
    for a in range(g.r):
        for b in range(g.r):
            prod = f_sum(
                g.Estar,
                [
                    f_mul(g.H_fiber2(a, c), g.B_field(SIDE_ESTAR, c, b))
                    for c in range(g.r)
                ],
            )
            out.append(f_sub(prod, _kron(g, SIDE_ESTAR, a, b)))
    return ctx.max_abs(SIDE_ESTAR, out)


def eval_5_5(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    out = []
    for al in range(g.p):
        for a in range(g.r):
            w_fields = [
                f_sum(
                    g.Estar,
                    [
                        f_mul(g.rho_lift(SIDE_ESTAR, i, al), g.H_mixed(i, b))
                        for i in range(g.m)
                    ],
                )
                for b in range(g.r)
            ]
            out.append(
                f_sum(
                    g.Estar,
                    [g.A_field(SIDE_ESTAR, al, a)]
                    + [
                        f_mul(w_fields[b], g.B_field(SIDE_ESTAR, b, a))
                        for b in range(g.r)
                    ],
                )
            )
    return ctx.max_abs(SIDE_ESTAR, out)


def eval_5_7(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    out = []
    for al in range(g.p):
        for be in range(al + 1, g.p):
            r_e = curvature_fields(g, SIDE_E, al, be)
            r_s = curvature_fields(g, SIDE_ESTAR, al, be)
            for b in range(g.r):
                transported = compose(
                    f_sum(
                        g.E,
                        [
                            f_mul(r_e[a], g.L_fiber2(a, b))
                            for a in range(g.r)
                        ],
                    ),
                    g.phi_H_map(),
                )
                out.append(f_sub(r_s[b], transported))
    return ctx.max_abs(SIDE_ESTAR, out)


def eval_5_8(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    out = []
    for al in range(g.p):
        for be in range(al + 1, g.p):
            r_e = curvature_fields(g, SIDE_E, al, be)
            r_s = curvature_fields(g, SIDE_ESTAR, al, be)
            for a in range(g.r):
                transported = compose(
                    f_sum(
                        g.Estar,
                        [
                            f_mul(r_s[b], g.H_fiber2(b, a))
                            for b in range(g.r)
                        ],
                    ),
                    g.phi_L_map(),
                )
                out.append(f_sub(r_e[a], transported))
    return ctx.max_abs(SIDE_E, out)


def eval_5_9(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    B = lambda b, c: g.B_field(SIDE_ESTAR, b, c)
    out = []
    for al in range(g.p):
        for b in range(g.r):
            for c in range(g.r):
                lhs = compose(
                    f_sum(
                        g.E,
                        [
                            f_mul(
                                _dfib(g, g.gamma_field(a, al), b),
                                g.L_fiber2(a, c),
                            )
                            for a in range(g.r)
                        ],
                    ),
                    g.phi_H_map(),
                )
                rhs_terms = [
                    f_mul(g.rho_lift(SIDE_ESTAR, i, al), _dx(B(b, c), i))
                    for i in range(g.m)
                ]
                rhs_terms += [
                    f_mul(g.gammastar_field(e, al), _dfib(g, B(b, c), e))
                    for e in range(g.r)
                ]
                rhs_terms += [
                    f_neg(
                        f_mul(B(b, e), _dfib(g, g.gammastar_field(c, al), e))
                    )
                    for e in range(g.r)
                ]
                out.append(f_sub(lhs, f_sum(g.Estar, rhs_terms)))
    return ctx.max_abs(SIDE_ESTAR, out)


def eval_5_10(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    Bs = lambda b, c: g.B_field(SIDE_E, b, c)
    out = []
    for al in range(g.p):
        for b in range(g.r):
            for c in range(g.r):
                lhs = compose(
                    f_sum(
                        g.Estar,
                        [
                            f_mul(
                                _dfib(g, g.gammastar_field(e, al), b),
                                g.H_fiber2(e, c),
                            )
                            for e in range(g.r)
                        ],
                    ),
                    g.phi_L_map(),
                )
                rhs_terms = [
                    f_mul(g.rho_lift(SIDE_E, i, al), _dx(Bs(b, c), i))
                    for i in range(g.m)
                ]
                rhs_terms += [
                    f_neg(
                        f_mul(g.gamma_field(e, al), _dfib(g, Bs(b, c), e))
                    )
                    for e in range(g.r)
                ]
                rhs_terms += [
                    f_mul(Bs(b, e), _dfib(g, g.gamma_field(c, al), e))
                    for e in range(g.r)
                ]
                # lhs appears negated in the relation
                out.append(f_sum(g.E, [lhs, f_sum(g.E, rhs_terms)]))
    return ctx.max_abs(SIDE_E, out)


def eval_5_12(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    out = []
    for a in range(g.r):
        pb = pullback_one_form(
            g, adapted_vertical_coform(g, SIDE_ESTAR, a), SIDE_E
        )
        for be in range(g.p):
            direct = f_sum(
                g.E,
                [
                    f_mul(g.L_fiber2(a, b), g.gamma_field(b, be))
                    for b in range(g.r)
                ],
            )
            out.append(f_sub(pb.zcoef[be], direct))
        for c in range(g.r):
            out.append(f_sub(pb.vcoef[c], g.L_fiber2(a, c)))
    return ctx.max_abs(SIDE_E, out)


def eval_5_12d(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    out = []
    for a in range(g.r):
        pb = pullback_one_form(
            g, adapted_vertical_coform(g, SIDE_E, a), SIDE_ESTAR
        )
        for be in range(g.p):
            direct = f_sum(
                g.Estar,
                [
                    f_mul(g.H_fiber2(a, b), g.gammastar_field(b, be))
                    for b in range(g.r)
                ],
            )
            out.append(f_sum(g.Estar, [pb.zcoef[be], direct]))
        for c in range(g.r):
            out.append(f_sub(pb.vcoef[c], g.H_fiber2(a, c)))
    return ctx.max_abs(SIDE_ESTAR, out)


# ---------------------------------------------------------------------- #
# second-order transport duality (section 6 family)


def _dconn_constructed_note(ctx: EvalContext) -> str:
    if not ctx.geom.dconn_estar_supplied:
        return "dual transport blocks are constructed from this relation family"
    return ""


def eval_6_3(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    out = []
    for al in range(g.p):
        for be in range(g.p):
            for gam in range(g.p):
                out.append(
                    f_sub(
                        compose(
                            g.dconn_block(SIDE_E, "hc", al, be, gam),
                            g.phi_H_map(),
                        ),
                        g.dconn_block(SIDE_ESTAR, "hc", al, be, gam),
                    )
                )
    res = ctx.max_abs(SIDE_ESTAR, out)
    res.note = _dconn_constructed_note(ctx)
    return res


def eval_6_4(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    B = lambda b, c: g.B_field(SIDE_ESTAR, b, c)
    out = []
    for b in range(g.r):
        for c in range(g.r):
            for gam in range(g.p):
                lhs = compose(
                    f_sum(
                        g.E,
                        [
                            f_mul(
                                g.dconn_block(SIDE_E, "hv", a, b, gam),
                                g.L_fiber2(a, c),
                            )
                            for a in range(g.r)
                        ],
                    ),
                    g.phi_H_map(),
                )
                rhs_terms = [
                    f_mul(g.rho_lift(SIDE_ESTAR, k, gam), _dx(B(b, c), k))
                    for k in range(g.m)
                ]
                rhs_terms += [
                    f_mul(g.gammastar_field(e, gam), _dfib(g, B(b, c), e))
                    for e in range(g.r)
                ]
                rhs_terms += [
                    f_mul(B(b, e), g.dconn_block(SIDE_ESTAR, "hv", e, c, gam))
                    for e in range(g.r)
                ]
                out.append(f_sub(lhs, f_sum(g.Estar, rhs_terms)))
    res = ctx.max_abs(SIDE_ESTAR, out)
    res.note = _dconn_constructed_note(ctx)
    return res


def eval_6_5(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    B = lambda b, c: g.B_field(SIDE_ESTAR, b, c)
    out = []
    for al in range(g.p):
        for be in range(g.p):
            for c in range(g.r):
                lhs = compose(
                    g.dconn_block(SIDE_E, "vc", al, be, c), g.phi_H_map()
                )
                rhs = f_sum(
                    g.Estar,
                    [
                        f_mul(
                            B(c, e),
                            g.dconn_block(SIDE_ESTAR, "vc", al, e, be),
                        )
                        for e in range(g.r)
                    ],
                )
                out.append(f_sub(lhs, rhs))
    res = ctx.max_abs(SIDE_ESTAR, out)
    res.note = _dconn_constructed_note(ctx)
    return res


def eval_6_6(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    B = lambda b, c: g.B_field(SIDE_ESTAR, b, c)
    out = []
    for b in range(g.r):
        for c in range(g.r):
            for d in range(g.r):
                lhs = compose(
                    f_sum(
                        g.E,
                        [
                            f_mul(
                                g.dconn_block(SIDE_E, "vv", a, b, c),
                                g.L_fiber2(a, d),
                            )
                            for a in range(g.r)
                        ],
                    ),
                    g.phi_H_map(),
                )
                rhs_terms = [
                    f_mul(B(c, e), _dfib(g, B(b, d), e)) for e in range(g.r)
                ]
                rhs_terms += [
                    f_mul(
                        B(c, e),
                        B(b, f),
                        g.dconn_block(SIDE_ESTAR, "vv", f, e, d),
                    )
                    for e in range(g.r)
                    for f in range(g.r)
                ]
                out.append(f_sub(lhs, f_sum(g.Estar, rhs_terms)))
    res = ctx.max_abs(SIDE_ESTAR, out)
    res.note = _dconn_constructed_note(ctx)
    return res


def eval_6_7(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    out = []
    for al in range(g.p):
        for be in range(g.p):
            for gam in range(g.p):
                out.append(
                    f_sub(
                        compose(
                            g.dconn_block(SIDE_ESTAR, "hc", al, be, gam),
                            g.phi_L_map(),
                        ),
                        g.dconn_block(SIDE_E, "hc", al, be, gam),
                    )
                )
    return ctx.max_abs(SIDE_E, out)


def eval_6_8(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    Bs = lambda b, c: g.B_field(SIDE_E, b, c)
    out = []
    for a in range(g.r):
        for c in range(g.r):
            for gam in range(g.p):
                lhs = compose(
                    f_sum(
                        g.Estar,
                        [
                            f_mul(
                                g.dconn_block(SIDE_ESTAR, "hv", a, b, gam),
                                g.H_fiber2(b, c),
                            )
                            for b in range(g.r)
                        ],
                    ),
                    g.phi_L_map(),
                )
                rhs_terms = [
                    f_mul(g.rho_lift(SIDE_E, k, gam), _dx(Bs(a, c), k))
                    for k in range(g.m)
                ]
                rhs_terms += [
                    f_neg(
                        f_mul(g.gamma_field(e, gam), _dfib(g, Bs(a, c), e))
                    )
                    for e in range(g.r)
                ]
                rhs_terms += [
                    f_mul(Bs(a, e), g.dconn_block(SIDE_E, "hv", c, e, gam))
                    for e in range(g.r)
                ]
                out.append(f_sub(lhs, f_sum(g.E, rhs_terms)))
    return ctx.max_abs(SIDE_E, out)


def eval_6_9(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    Bs = lambda b, c: g.B_field(SIDE_E, b, c)
    out = []
    for al in range(g.p):
        for c in range(g.r):
            for be in range(g.p):
                lhs = compose(
                    g.dconn_block(SIDE_ESTAR, "vc", al, c, be), g.phi_L_map()
                )
                rhs = f_sum(
                    g.E,
                    [
                        f_mul(Bs(c, e), g.dconn_block(SIDE_E, "vc", al, be, e))
                        for e in range(g.r)
                    ],
                )
                out.append(f_sub(lhs, rhs))
    return ctx.max_abs(SIDE_E, out)


def eval_6_10(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    Bs = lambda b, c: g.B_field(SIDE_E, b, c)
    out = []
    for b in range(g.r):
        for c in range(g.r):
            for d in range(g.r):
                lhs = compose(
                    f_sum(
                        g.Estar,
                        [
                            f_mul(
                                g.dconn_block(SIDE_ESTAR, "vv", b, c, a),
                                g.H_fiber2(a, d),
                            )
                            for a in range(g.r)
                        ],
                    ),
                    g.phi_L_map(),
                )
                rhs_terms = [
                    f_mul(Bs(c, e), _dfib(g, Bs(b, d), e)) for e in range(g.r)
                ]
                rhs_terms += [
                    f_mul(
                        Bs(c, e),
                        Bs(b, f),
                        g.dconn_block(SIDE_E, "vv", d, f, e),
                    )
                    for e in range(g.r)
                    for f in range(g.r)
                ]
                out.append(f_sub(lhs, f_sum(g.E, rhs_terms)))
    return ctx.max_abs(SIDE_E, out)


# ---------------------------------------------------------------------- #
# mechanics transports (section 7 family)


def eval_7_4(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    out = []
    for a in range(g.r):
        lhs = compose(
            f_sum(
                g.E,
                [
                    f_mul(g.coord(SIDE_E, g.m + b), g.g_entry(SIDE_E, a, b))
                    for b in range(g.r)
                ],
            ),
            g.phi_H_map(),
        )
        rhs = f_sum(
            g.Estar,
            [
                f_mul(g.coord(SIDE_ESTAR, g.m + b), g.g_entry(SIDE_ESTAR, a, b))
                for b in range(g.r)
            ],
        )
        out.append(f_sub(lhs, rhs))
    return ctx.max_abs(SIDE_ESTAR, out)


def eval_7_6(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    out = []
    for a in range(g.r):
        lhs = compose(
            f_sum(
                g.Estar,
                [
                    f_mul(g.coord(SIDE_ESTAR, g.m + b), g.g_entry(SIDE_ESTAR, a, b))
                    for b in range(g.r)
                ],
            ),
            g.phi_L_map(),
        )
        rhs = f_sum(
            g.E,
            [
                f_mul(g.coord(SIDE_E, g.m + b), g.g_entry(SIDE_E, a, b))
                for b in range(g.r)
            ],
        )
        out.append(f_sub(lhs, rhs))
    return ctx.max_abs(SIDE_E, out)


def _semispray_transport_fields(ctx: EvalContext, target: str) -> list[Field]:
    """Residuals of the semispray coefficient transport onto ``target``."""
    g = ctx.geom
    src = other_side(target)
    sp_src = g.space(src)
    out = []
    for b in range(g.r):
        transported = f_sum(
            sp_src,
            [
                f_mul(g.semispray_vertical(src, a), g.fiber_hessian(src, a, b))
                for a in range(g.r)
            ],
        )
        coupling = f_sum(
            sp_src,
            [
                f_mul(
                    g.coord(src, g.m + c),
                    g.g_entry(src, a, c),
                    g.rho_lift(src, i, a),
                    g.mixed_partial(src, i, b),
                )
                for c in range(g.r)
                for a in range(g.r)
                for i in range(g.m)
            ],
        )
        rhs = compose(f_sub(transported, coupling), g.map_to(src))
        out.append(f_sub(g.semispray_vertical(target, b), rhs))
    return out


def eval_7_5(ctx: EvalContext) -> Outcome:
    res = ctx.max_abs(
        SIDE_ESTAR, _semispray_transport_fields(ctx, SIDE_ESTAR)
    )
    if ctx.geom.semispray_derived(SIDE_ESTAR):
        res.note = "momentum-side semispray is constructed from this relation"
    return res


def eval_7_7(ctx: EvalContext) -> Outcome:
    res = ctx.max_abs(SIDE_E, _semispray_transport_fields(ctx, SIDE_E))
    if ctx.geom.semispray_derived(SIDE_E):
        res.note = "velocity-side semispray is constructed from this relation"
    return res


# ---------------------------------------------------------------------- #
# canonical one-form transports (section 8 family)


def eval_8_3(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    out = [
        f_sub(
            compose(g.theta_coefficient(SIDE_ESTAR, a), g.phi_L_map()),
            g.theta_coefficient(SIDE_E, a),
        )
        for a in range(g.r)
    ]
    return ctx.max_abs(SIDE_E, out)


def eval_8_3d(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    out = [
        f_sub(
            compose(g.theta_coefficient(SIDE_E, a), g.phi_H_map()),
            g.theta_coefficient(SIDE_ESTAR, a),
        )
        for a in range(g.r)
    ]
    return ctx.max_abs(SIDE_ESTAR, out)


def _theta_horizontal_fields(
    ctx: EvalContext, side: str, with_mixed: bool
) -> list[Field]:
    """The antisymmetrized horizontal derivative expression of the canonical
    one-form coefficients on one side (per index pair a<b)."""
    g = ctx.geom
    sp = g.space(side)
    th = lambda c: g.theta_coefficient(side, c)
    out = []
    for a in range(g.r):
        for b in range(a + 1, g.r):
            terms = [
                f_mul(g.rho_lift(side, i, a), _dx(th(b), i))
                for i in range(g.m)
            ]
            terms += [
                f_neg(f_mul(g.rho_lift(side, i, b), _dx(th(a), i)))
                for i in range(g.m)
            ]
            if with_mixed:
                terms += [
                    f_mul(g.A_field(side, a, d), _dfib(g, th(b), d))
                    for d in range(g.r)
                ]
                terms += [
                    f_neg(f_mul(g.A_field(side, b, d), _dfib(g, th(a), d)))
                    for d in range(g.r)
                ]
            terms += [
                f_neg(f_mul(g.lstruct_lift(side, c, a, b), th(c)))
                for c in range(g.p)
            ]
            out.append(f_sum(sp, terms))
    return out


def eval_8_6(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    lhs = _theta_horizontal_fields(ctx, SIDE_ESTAR, with_mixed=True)
    rhs = _theta_horizontal_fields(ctx, SIDE_E, with_mixed=False)
    out = [
        f_sub(compose(l, g.phi_L_map()), r) for l, r in zip(lhs, rhs)
    ]
    return ctx.max_abs(SIDE_E, out)


def eval_8_8(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    lhs = _theta_horizontal_fields(ctx, SIDE_E, with_mixed=True)
    rhs = _theta_horizontal_fields(ctx, SIDE_ESTAR, with_mixed=False)
    out = [
        f_sub(compose(l, g.phi_H_map()), r) for l, r in zip(lhs, rhs)
    ]
    return ctx.max_abs(SIDE_ESTAR, out)


def eval_8_7(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    out = []
    for a in range(g.r):
        for b in range(g.r):
            inner = f_sum(
                g.Estar,
                [
                    f_mul(
                        g.B_field(SIDE_ESTAR, b, c),
                        _dfib(g, g.theta_coefficient(SIDE_ESTAR, a), c),
                    )
                    for c in range(g.r)
                ],
            )
            out.append(
                f_sub(
                    compose(inner, g.phi_L_map()),
                    _dfib(g, g.theta_coefficient(SIDE_E, a), b),
                )
            )
    return ctx.max_abs(SIDE_E, out)


def eval_8_9(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    out = []
    for a in range(g.r):
        for b in range(g.r):
            inner = f_sum(
                g.E,
                [
                    f_mul(
                        g.B_field(SIDE_E, b, c),
                        _dfib(g, g.theta_coefficient(SIDE_E, a), c),
                    )
                    for c in range(g.r)
                ],
            )
            out.append(
                f_sub(
                    compose(inner, g.phi_H_map()),
                    _dfib(g, g.theta_coefficient(SIDE_ESTAR, a), b),
                )
            )
    return ctx.max_abs(SIDE_ESTAR, out)


# ---------------------------------------------------------------------- #
# gates


def _gate_morphism(ctx: EvalContext, side: str) -> Outcome:
    pts = ctx.eval_points(other_side(side))
    res = bracket_morphism_residual(ctx.geom, side, pts)
    return Outcome(res, len(pts))


def gate_morph_l(ctx: EvalContext) -> Outcome:
    return _gate_morphism(ctx, SIDE_E)


def gate_morph_h(ctx: EvalContext) -> Outcome:
    return _gate_morphism(ctx, SIDE_ESTAR)


def _gate_adapted_frames(ctx: EvalContext, side: str) -> Outcome:
    g = ctx.geom
    target = other_side(side)
    pts = ctx.eval_points(target)
    worst = 0.0
    for al in range(g.p):
        pushed = pushforward(g, adapted_horizontal(g, side, al))
        expected = adapted_horizontal(g, target, al)
        for pt in pts:
            va = section_values(g, pushed, pt)
            vb = section_values(g, expected, pt)
            worst = max(worst, float(np.max(np.abs(va - vb))))
    return Outcome(worst, len(pts))


def gate_hl_l(ctx: EvalContext) -> Outcome:
    return _gate_adapted_frames(ctx, SIDE_E)


def gate_hl_h(ctx: EvalContext) -> Outcome:
    return _gate_adapted_frames(ctx, SIDE_ESTAR)


def gate_dconn_l(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    pts = ctx.eval_points(SIDE_ESTAR)
    frames = [adapted_horizontal(g, SIDE_E, al) for al in range(g.p)] + [
        basis_vertical(g, SIDE_E, c) for c in range(g.r)
    ]
    worst = 0.0
    for udir in frames:
        for tsec in frames:
            lhs = pushforward(g, covariant_derivative(g, SIDE_E, udir, tsec))
            rhs = covariant_derivative(
                g, SIDE_ESTAR, pushforward(g, udir), pushforward(g, tsec)
            )
            for pt in pts:
                va = section_values(g, lhs, pt)
                vb = section_values(g, rhs, pt)
                worst = max(worst, float(np.max(np.abs(va - vb))))
    return Outcome(worst, len(pts))


def _gate_semispray(ctx: EvalContext, side: str) -> Outcome:
    g = ctx.geom
    target = other_side(side)
    pts = ctx.eval_points(target)
    pushed = pushforward(g, semispray_section(g, side))
    expected = semispray_section(g, target)
    worst = 0.0
    for pt in pts:
        va = section_values(g, pushed, pt)
        vb = section_values(g, expected, pt)
        worst = max(worst, float(np.max(np.abs(va - vb))))
    return Outcome(worst, len(pts))


def gate_semi_l(ctx: EvalContext) -> Outcome:
    return _gate_semispray(ctx, SIDE_E)


def gate_semi_h(ctx: EvalContext) -> Outcome:
    return _gate_semispray(ctx, SIDE_ESTAR)


def gate_theta(ctx: EvalContext) -> Outcome:
    g = ctx.geom
    worst = 0.0
    n = 0
    for form_side in (SIDE_ESTAR, SIDE_E):
        to = other_side(form_side)
        pb = pullback_one_form(g, theta_form(g, form_side), to)
        expected = theta_form(g, to)
        pts = ctx.eval_points(to)
        n = max(n, len(pts))
        for coefs in (
            zip(pb.zcoef, expected.zcoef),
            zip(pb.vcoef, expected.vcoef),
        ):
            for got, want in coefs:
                diff = f_sub(got, want)
                for pt in pts:
                    worst = max(worst, abs(diff.value(g.session, pt)))
    return Outcome(worst, n)


def _gate_omega(ctx: EvalContext, side: str) -> Outcome:
    g = ctx.geom
    target = other_side(side)
    th_here = theta_form(g, side)
    th_there = theta_form(g, target)
    basis = [basis_horizontal(g, side, al) for al in range(g.p)] + [
        basis_vertical(g, side, a) for a in range(g.r)
    ]
    pts = ctx.eval_points(side)
    worst = 0.0
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            here = omega_pair_field(g, th_here, basis[i], basis[j])
            there = omega_pair_field(
                g,
                th_there,
                pushforward(g, basis[i]),
                pushforward(g, basis[j]),
            )
            diff = f_sub(here, compose(there, g.map_to(target)))
            for pt in pts:
                worst = max(worst, abs(diff.value(g.session, pt)))
    return Outcome(worst, len(pts))


def gate_omega_l(ctx: EvalContext) -> Outcome:
    return _gate_omega(ctx, SIDE_E)


def gate_omega_h(ctx: EvalContext) -> Outcome:
    return _gate_omega(ctx, SIDE_ESTAR)


# ---------------------------------------------------------------------- #
# dispatch tables

EVALUATORS = {
    "ID-2.4": eval_2_4,
    "ID-2.5": eval_2_5,
    "ID-3.6": eval_3_6,
    "ID-3.7": eval_3_7,
    "ID-4.8": eval_4_8,
    "ID-4.9": eval_4_9,
    "ID-4.10": eval_4_10,
    "ID-4.11": eval_4_11,
    "ID-4.12": eval_4_12,
    "ID-4.13": eval_4_13,
    "ID-4.14": eval_4_14,
    "ID-4.15": eval_4_15,
    "ID-5.2": eval_5_2,
    "ID-5.3": eval_5_3,
    "ID-5.4": eval_5_4,
    "ID-5.5": eval_5_5,
    "ID-5.7": eval_5_7,
    "ID-5.8": eval_5_8,
    "ID-5.9": eval_5_9,
    "ID-5.10": eval_5_10,
    "ID-5.12": eval_5_12,
    "ID-5.12D": eval_5_12d,
    "ID-6.3": eval_6_3,
    "ID-6.4": eval_6_4,
    "ID-6.5": eval_6_5,
    "ID-6.6": eval_6_6,
    "ID-6.7": eval_6_7,
    "ID-6.8": eval_6_8,
    "ID-6.9": eval_6_9,
    "ID-6.10": eval_6_10,
    "ID-7.4": eval_7_4,
    "ID-7.5": eval_7_5,
    "ID-7.6": eval_7_6,
    "ID-7.7": eval_7_7,
    "ID-8.3": eval_8_3,
    "ID-8.3D": eval_8_3d,
    "ID-8.6": eval_8_6,
    "ID-8.7": eval_8_7,
    "ID-8.8": eval_8_8,
    "ID-8.9": eval_8_9,
}

GATE_EVALUATORS = {
    "GATE-MORPH-L": gate_morph_l,
    "GATE-MORPH-H": gate_morph_h,
    "GATE-HL-L": gate_hl_l,
    "GATE-HL-H": gate_hl_h,
    "GATE-DCONN-L": gate_dconn_l,
    "GATE-SEMI-L": gate_semi_l,
    "GATE-SEMI-H": gate_semi_h,
    "GATE-THETA": gate_theta,
    "GATE-OMEGA-L": gate_omega_l,
    "GATE-OMEGA-H": gate_omega_h,
}
