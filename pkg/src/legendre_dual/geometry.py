"""Scenario geometry: the field graphs every check is built from.

A :class:`Geometry` instance owns, for one scenario:

* the four coordinate spaces — velocity side ``E`` (x, y), momentum side
  ``Estar`` (x, p), base ``M`` (x), target base ``N`` (chi);
* the fiber-coordinate changes in both directions (``phi_L``: velocities to
  momenta, ``phi_H``: momenta to velocities), each either closed-form (from
  the supplied potential's fiber gradient) or Newton-solved against the
  other side's potential;
* uniform derivative tables for both potentials — base partials, fiber
  partials, fiber Hessians, mixed base/fiber second derivatives — valid
  whether the potential was supplied or materialized through the solver;
* composite lifts of the base-level data (anchor columns, structure
  functions, metric-like morphism entries) onto either side;
* connection coefficients and second-order transport blocks, with the dual
  side derived from the primal one when absent;
* mechanical ingredients (morphism entries, semispray vertical parts,
  canonical one-form coefficients).

Everything is memoized so that any two checks asking for "the same" derived
field receive the same object, letting the evaluation session share cached
jets.  A Geometry and its session are single-job state: concurrent checks
each build their own (construction is object allocation, evaluation is the
real cost), which makes results independent of scheduling.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .dsl import Ast, Num
from .fields import (
    ComponentwiseMap,
    ConstField,
    CoordField,
    EvalSession,
    ExprField,
    Field,
    FieldMap,
    FiberComponentField,
    MatrixInverseBundle,
    SolvedFiberMap,
    Space,
    compose,
    f_mul,
    f_neg,
    f_scale,
    f_sub,
    f_sum,
    partial,
)
from .scenario import ScenarioModel

__all__ = ["Geometry", "SIDE_E", "SIDE_ESTAR", "other_side"]

SIDE_E = "E"
SIDE_ESTAR = "Estar"


def other_side(side: str) -> str:
    return SIDE_ESTAR if side == SIDE_E else SIDE_E


class Geometry:
    """Field-graph factory for one scenario (single evaluation job)."""

    def __init__(self, model: ScenarioModel) -> None:
        self.model = model
        m, p, r = model.m, model.p, model.r
        self.m, self.p, self.r = m, p, r
        self.E = Space("E", model.x_names + model.y_names)
        self.Estar = Space("Estar", model.x_names + model.p_names)
        self.M = Space("M", model.x_names)
        self.N = Space("N", model.chi_names)
        self.session = EvalSession()
        self._memo: dict[tuple, object] = {}
        # which ingredients are derived rather than supplied
        self.lagrangian_supplied = model.lagrangian is not None
        self.hamiltonian_supplied = model.hamiltonian is not None
        self.gamma_supplied = model.gamma is not None
        self.gammastar_supplied = model.gammastar is not None
        self.dconn_estar_supplied = model.dconn_estar is not None
        self.mech_estar_semispray_supplied = (
            model.mech_estar is not None
            and (model.mech_estar.big_g_supplied or model.mech_estar.big_f_supplied)
        )
        self.mech_e_semispray_supplied = (
            model.mech_e is not None
            and (model.mech_e.big_g_supplied or model.mech_e.big_f_supplied)
        )

    # ------------------------------------------------------------------ #
    # memo helper

    def _get(self, key: tuple, build: Callable[[], object]):
        hit = self._memo.get(key)
        if hit is None:
            hit = build()
            self._memo[key] = hit
        return hit

    def space(self, side: str) -> Space:
        return self.E if side == SIDE_E else self.Estar

    def fiber_offset(self, side: str) -> int:
        return self.m

    def _expr(self, space: Space, ast: Ast) -> Field:
        if isinstance(ast, Num):
            return ConstField(space, ast.value)
        return ExprField(space, ast)

    def const(self, side: str, value: float) -> Field:
        return ConstField(self.space(side), value)

    def coord(self, side: str, index: int) -> Field:
        return CoordField(self.space(side), index)

    # ------------------------------------------------------------------ #
    # base maps and composite lifts

    def h_component(self, space: Space, k: int) -> Field:
        return self._get(
            ("h", space.name, k), lambda: self._expr(space, self.model.h[k])
        )

    def base_to_target_map(self, side: str) -> FieldMap:
        """The composite base map (x, fiber) -> chi = h(x)."""

        def build():
            space = self.space(side)
            comps = [self.h_component(space, k) for k in range(self.m)]
            return ComponentwiseMap(space, self.N, comps)

        return self._get(("hpi", side), build)

    def base_image_map(self, side: str) -> FieldMap:
        """(x, fiber) -> h(x) expressed in the base chart (for x-declared data)."""

        def build():
            space = self.space(side)
            comps = [self.h_component(space, k) for k in range(self.m)]
            return ComponentwiseMap(space, self.M, comps)

        return self._get(("h_as_M", side), build)

    def h_map_on_base(self) -> FieldMap:
        def build():
            comps = [self._expr(self.M, self.model.h[k]) for k in range(self.m)]
            return ComponentwiseMap(self.M, self.N, comps)

        return self._get(("h_on_M",), build)

    def eta_map(self) -> FieldMap:
        def build():
            comps = [self._expr(self.N, self.model.eta[k]) for k in range(self.m)]
            return ComponentwiseMap(self.N, self.M, comps)

        return self._get(("eta",), build)

    def rho_on_target(self, i: int, alpha: int) -> Field:
        return self._get(
            ("rhoN", i, alpha),
            lambda: self._expr(self.N, self.model.rho[i][alpha]),
        )

    def rho_lift(self, side: str, i: int, alpha: int) -> Field:
        """Anchor entry composed with the base map: a field on E or Estar."""
        return self._get(
            ("rho", side, i, alpha),
            lambda: compose(
                self.rho_on_target(i, alpha), self.base_to_target_map(side)
            ),
        )

    def rho_on_base(self, i: int, alpha: int) -> Field:
        return self._get(
            ("rhoM", i, alpha),
            lambda: compose(self.rho_on_target(i, alpha), self.h_map_on_base()),
        )

    def lstruct_on_target(self, g: int, a: int, b: int) -> Field:
        return self._get(
            ("lsN", g, a, b),
            lambda: self._expr(self.N, self.model.lstruct[g][a][b]),
        )

    def lstruct_lift(self, side: str, g: int, a: int, b: int) -> Field:
        return self._get(
            ("ls", side, g, a, b),
            lambda: compose(
                self.lstruct_on_target(g, a, b), self.base_to_target_map(side)
            ),
        )

    # ------------------------------------------------------------------ #
    # potentials and coordinate changes

    def lagrangian_field(self) -> Field:
        """The velocity-side potential L(x, y) — supplied or materialized."""

        def build():
            if self.model.lagrangian is not None:
                return self._expr(self.E, self.model.lagrangian)
            # materialized: L = sum_a y_a * p_a(x, y) − H(x, p(x, y))
            terms = [
                f_mul(
                    CoordField(self.E, self.m + a),
                    FiberComponentField(self.phi_L_map(), self.m + a),
                )
                for a in range(self.r)
            ]
            pulled = compose(self.hamiltonian_field(), self.phi_L_map())
            return f_sub(f_sum(self.E, terms), pulled)

        return self._get(("Lval",), build)

    def hamiltonian_field(self) -> Field:
        """The momentum-side potential H(x, p) — supplied or materialized."""

        def build():
            if self.model.hamiltonian is not None:
                return self._expr(self.Estar, self.model.hamiltonian)
            terms = [
                f_mul(
                    CoordField(self.Estar, self.m + a),
                    FiberComponentField(self.phi_H_map(), self.m + a),
                )
                for a in range(self.r)
            ]
            pulled = compose(self.lagrangian_field(), self.phi_H_map())
            return f_sub(f_sum(self.Estar, terms), pulled)

        return self._get(("Hval",), build)

    def phi_L_map(self) -> FieldMap:
        """Velocities to momenta: p_a = (fiber gradient of L)_a."""

        def build():
            if self.model.lagrangian is not None:
                comps = [CoordField(self.E, i) for i in range(self.m)]
                comps += [self.L_fiber(a) for a in range(self.r)]
                return ComponentwiseMap(self.E, self.Estar, comps)
            return SolvedFiberMap(
                self.E,
                self.Estar,
                self.hamiltonian_field(),
                self.m,
                self.r,
                "phi_L",
            )

        return self._get(("phiL",), build)

    def phi_H_map(self) -> FieldMap:
        """Momenta to velocities: y_a = (fiber gradient of H)_a."""

        def build():
            if self.model.hamiltonian is not None:
                comps = [CoordField(self.Estar, i) for i in range(self.m)]
                comps += [self.H_fiber(a) for a in range(self.r)]
                return ComponentwiseMap(self.Estar, self.E, comps)
            return SolvedFiberMap(
                self.Estar,
                self.E,
                self.lagrangian_field(),
                self.m,
                self.r,
                "phi_H",
            )

        return self._get(("phiH",), build)

    def map_to(self, side: str) -> FieldMap:
        """The coordinate change INTO the given side."""
        return self.phi_H_map() if side == SIDE_E else self.phi_L_map()

    def to_other(self, side: str, point: np.ndarray) -> np.ndarray:
        """Image of a point under the side's outgoing coordinate change."""
        fmap = self.phi_L_map() if side == SIDE_E else self.phi_H_map()
        return fmap.image(self.session, point)

    # ------------------------------------------------------------------ #
    # derivative tables (uniform over supplied/materialized potentials)

    def L_fiber(self, a: int) -> Field:
        def build():
            if self.model.lagrangian is not None:
                return partial(self.lagrangian_field(), self.m + a)
            return FiberComponentField(self.phi_L_map(), self.m + a)

        return self._get(("L_fib", a), build)

    def L_base(self, i: int) -> Field:
        def build():
            if self.model.lagrangian is not None:
                return partial(self.lagrangian_field(), i)
            return f_neg(compose(self.H_base(i), self.phi_L_map()))

        return self._get(("L_base", i), build)

    def L_fiber2(self, a: int, b: int) -> Field:
        def build():
            return partial(self.L_fiber(a), self.m + b)

        return self._get(("L_fib2", a, b), build)

    def L_mixed(self, i: int, b: int) -> Field:
        def build():
            if self.model.lagrangian is not None:
                return partial(partial(self.lagrangian_field(), i), self.m + b)
            return partial(self.L_fiber(b), i)

        return self._get(("L_mix", i, b), build)

    def H_fiber(self, a: int) -> Field:
        def build():
            if self.model.hamiltonian is not None:
                return partial(self.hamiltonian_field(), self.m + a)
            return FiberComponentField(self.phi_H_map(), self.m + a)

        return self._get(("H_fib", a), build)

    def H_base(self, i: int) -> Field:
        def build():
            if self.model.hamiltonian is not None:
                return partial(self.hamiltonian_field(), i)
            return f_neg(compose(self.L_base(i), self.phi_H_map()))

        return self._get(("H_base", i), build)

    def H_fiber2(self, a: int, b: int) -> Field:
        def build():
            return partial(self.H_fiber(a), self.m + b)

        return self._get(("H_fib2", a, b), build)

    def H_mixed(self, i: int, b: int) -> Field:
        def build():
            if self.model.hamiltonian is not None:
                return partial(partial(self.hamiltonian_field(), i), self.m + b)
            return partial(self.H_fiber(b), i)

        return self._get(("H_mix", i, b), build)

    def fiber_partial(self, side: str, a: int) -> Field:
        return self.L_fiber(a) if side == SIDE_E else self.H_fiber(a)

    def base_partial(self, side: str, i: int) -> Field:
        return self.L_base(i) if side == SIDE_E else self.H_base(i)

    def fiber_hessian(self, side: str, a: int, b: int) -> Field:
        return self.L_fiber2(a, b) if side == SIDE_E else self.H_fiber2(a, b)

    def mixed_partial(self, side: str, i: int, b: int) -> Field:
        return self.L_mixed(i, b) if side == SIDE_E else self.H_mixed(i, b)

    # composed fiber Hessians: the recurring "B" matrices ------------------ #

    def B_field(self, side: str, b: int, c: int) -> Field:
        """Other side's fiber Hessian pulled back: on Estar this is the
        L-Hessian composed with phi_H; on E the H-Hessian composed with
        phi_L."""

        def build():
            other = other_side(side)
            return compose(self.fiber_hessian(other, b, c), self.map_to(other))

        return self._get(("Bmat", side, b, c), build)

    def B_inverse_bundle(self, side: str) -> MatrixInverseBundle:
        def build():
            entries = [
                [self.B_field(side, b, c) for c in range(self.r)]
                for b in range(self.r)
            ]
            return MatrixInverseBundle(self.space(side), entries)

        return self._get(("Binv", side), build)  # type: ignore[return-value]

    def A_field(self, side: str, alpha: int, b: int) -> Field:
        """Anchor-weighted mixed Hessian pulled back from the other side:
        on Estar, [sum_i rho^i_alpha-lift * L_{i b}] ∘ phi_H (and mirrored
        on E).  These are the off-diagonal blocks of the coordinate-change
        tangent map."""

        def build():
            other = other_side(side)
            w = f_sum(
                self.space(other),
                [
                    f_mul(
                        self.rho_lift(other, i, alpha),
                        self.mixed_partial(other, i, b),
                    )
                    for i in range(self.m)
                ],
            )
            return compose(w, self.map_to(other))

        return self._get(("Amat", side, alpha, b), build)

    # ------------------------------------------------------------------ #
    # connections

    def connection_available(self) -> bool:
        return self.model.gamma is not None or self.model.gammastar is not None

    def gamma_field(self, a: int, alpha: int) -> Field:
        """Primal connection coefficient (velocity side), derived from the
        dual one when absent."""

        def build():
            if self.model.gamma is not None:
                return self._expr(self.E, self.model.gamma[a][alpha])
            if self.model.gammastar is None:
                raise ValueError("no connection data in scenario")
            inner = f_sum(
                self.Estar,
                [
                    f_mul(
                        self.rho_lift(SIDE_ESTAR, i, alpha),
                        self.H_mixed(i, a),
                    )
                    for i in range(self.m)
                ]
                + [
                    f_mul(self.gammastar_field(b, alpha), self.H_fiber2(b, a))
                    for b in range(self.r)
                ],
            )
            return f_neg(compose(inner, self.phi_L_map()))

        return self._get(("Gamma", a, alpha), build)

    def gammastar_field(self, b: int, alpha: int) -> Field:
        """Dual connection coefficient (momentum side), derived from the
        primal one when absent."""

        def build():
            if self.model.gammastar is not None:
                return self._expr(self.Estar, self.model.gammastar[b][alpha])
            if self.model.gamma is None:
                raise ValueError("no connection data in scenario")
            inner = f_sub(
                f_sum(
                    self.E,
                    [
                        f_mul(self.rho_lift(SIDE_E, i, alpha), self.L_mixed(i, b))
                        for i in range(self.m)
                    ],
                ),
                f_sum(
                    self.E,
                    [
                        f_mul(self.gamma_field(a, alpha), self.L_fiber2(a, b))
                        for a in range(self.r)
                    ],
                ),
            )
            return compose(inner, self.phi_H_map())

        return self._get(("Gammastar", b, alpha), build)

    def connection_coefficient(self, side: str, a: int, alpha: int) -> Field:
        return (
            self.gamma_field(a, alpha)
            if side == SIDE_E
            else self.gammastar_field(a, alpha)
        )

    # ------------------------------------------------------------------ #
    # second-order transport blocks

    def dconn_available(self) -> bool:
        return self.model.dconn_e is not None and self.connection_available()

    def dconn_block(self, side: str, block: str, i: int, j: int, k: int) -> Field:
        """Transport coefficient of the requested block.

        Primal blocks come straight from the scenario.  Dual blocks are the
        supplied ones when present, otherwise derived from the primal blocks
        through the duality relations (inverting the composed fiber
        Hessian).
        """
        if side == SIDE_E:
            data = self.model.dconn_e
            if data is None:
                raise ValueError("no second-order connection in scenario")
            grid = getattr(data, block)
            return self._get(
                ("dconnE", block, i, j, k),
                lambda: self._expr(self.E, grid[i][j][k]),
            )
        if self.model.dconn_estar is not None:
            grid = getattr(self.model.dconn_estar, block)
            return self._get(
                ("dconnS", block, i, j, k),
                lambda: self._expr(self.Estar, grid[i][j][k]),
            )
        return self._derived_dual_block(block, i, j, k)

    def _derived_dual_block(self, block: str, i: int, j: int, k: int) -> Field:
        m, p, r = self.m, self.p, self.r
        phi_h = self.phi_H_map()

        def d_x(field: Field, idx: int) -> Field:
            return partial(field, idx)

        def d_p(field: Field, idx: int) -> Field:
            return partial(field, m + idx)

        if block == "hc":
            # horizontal/horizontal transport agrees across sides
            return self._get(
                ("dconnS", "hc", i, j, k),
                lambda: compose(self.dconn_block(SIDE_E, "hc", i, j, k), phi_h),
            )
        if block == "vc":
            # vcs[alpha][c][beta] = sum_d Binv[c][d] * (vc[alpha][beta][d] ∘ phi_H)
            alpha, c, beta = i, j, k

            def build_vc():
                binv = self.B_inverse_bundle(SIDE_ESTAR)
                terms = [
                    f_mul(
                        binv.entry(c, d),
                        compose(self.dconn_block(SIDE_E, "vc", alpha, beta, d), phi_h),
                    )
                    for d in range(r)
                ]
                return f_sum(self.Estar, terms)

            return self._get(("dconnS", "vc", alpha, c, beta), build_vc)
        if block == "hv":
            # hvs[e][c][gamma] from the horizontal/vertical duality relation
            e, c, gamma = i, j, k

            def build_hv():
                binv = self.B_inverse_bundle(SIDE_ESTAR)
                outer_terms = []
                for b in range(r):
                    lhs = compose(
                        f_sum(
                            self.E,
                            [
                                f_mul(
                                    self.dconn_block(SIDE_E, "hv", a, b, gamma),
                                    self.L_fiber2(a, c),
                                )
                                for a in range(r)
                            ],
                        ),
                        phi_h,
                    )
                    transport = f_sum(
                        self.Estar,
                        [
                            f_mul(
                                self.rho_lift(SIDE_ESTAR, kk, gamma),
                                d_x(self.B_field(SIDE_ESTAR, b, c), kk),
                            )
                            for kk in range(m)
                        ]
                        + [
                            f_mul(
                                self.gammastar_field(ee, gamma),
                                d_p(self.B_field(SIDE_ESTAR, b, c), ee),
                            )
                            for ee in range(r)
                        ],
                    )
                    outer_terms.append(
                        f_mul(binv.entry(e, b), f_sub(lhs, transport))
                    )
                return f_sum(self.Estar, outer_terms)

            return self._get(("dconnS", "hv", e, c, gamma), build_hv)
        if block == "vv":
            # vvs[f][e][d] from the vertical/vertical duality relation
            f_idx, e_idx, d_idx = i, j, k

            def build_vv():
                binv = self.B_inverse_bundle(SIDE_ESTAR)
                outer_terms = []
                for b in range(r):
                    for c in range(r):
                        lhs = compose(
                            f_sum(
                                self.E,
                                [
                                    f_mul(
                                        self.dconn_block(SIDE_E, "vv", a, b, c),
                                        self.L_fiber2(a, d_idx),
                                    )
                                    for a in range(r)
                                ],
                            ),
                            phi_h,
                        )
                        deriv = f_sum(
                            self.Estar,
                            [
                                f_mul(
                                    self.B_field(SIDE_ESTAR, c, ee),
                                    d_p(self.B_field(SIDE_ESTAR, b, d_idx), ee),
                                )
                                for ee in range(r)
                            ],
                        )
                        outer_terms.append(
                            f_mul(
                                binv.entry(e_idx, c),
                                binv.entry(f_idx, b),
                                f_sub(lhs, deriv),
                            )
                        )
                return f_sum(self.Estar, outer_terms)

            return self._get(("dconnS", "vv", f_idx, e_idx, d_idx), build_vv)
        raise ValueError(f"unknown transport block {block!r}")

    # ------------------------------------------------------------------ #
    # mechanics

    def mech_available(self, side: str) -> bool:
        mech = self.model.mech_e if side == SIDE_E else self.model.mech_estar
        return mech is not None

    def g_entry(self, side: str, a: int, b: int) -> Field:
        """Morphism entry g (or gstar) evaluated at the base-map image."""

        def build():
            mech = self.model.mech_e if side == SIDE_E else self.model.mech_estar
            owner = "g" if side == SIDE_E else "gstar"
            if mech is None:
                raise ValueError(f"no {owner} data in scenario")
            ast = mech.g[a][b]
            if isinstance(ast, Num):
                return ConstField(self.space(side), ast.value)
            inner = self._expr(self.M, ast)
            return compose(inner, self.base_image_map(side))

        return self._get(("gent", side, a, b), build)

    def g_entry_on(self, owner_side: str, eval_side: str, a: int, b: int) -> Field:
        """Same as :meth:`g_entry` but evaluated on the other side's space."""

        def build():
            mech = (
                self.model.mech_e if owner_side == SIDE_E else self.model.mech_estar
            )
            if mech is None:
                raise ValueError("missing mechanics data")
            ast = mech.g[a][b]
            if isinstance(ast, Num):
                return ConstField(self.space(eval_side), ast.value)
            inner = self._expr(self.M, ast)
            return compose(inner, self.base_image_map(eval_side))

        return self._get(("gentOn", owner_side, eval_side, a, b), build)

    def g_inverse_bundle(self, owner_side: str, eval_side: str) -> MatrixInverseBundle:
        def build():
            entries = [
                [self.g_entry_on(owner_side, eval_side, a, b) for b in range(self.r)]
                for a in range(self.r)
            ]
            return MatrixInverseBundle(self.space(eval_side), entries)

        return self._get(("ginv", owner_side, eval_side), build)  # type: ignore[return-value]

    def semispray_vertical(self, side: str, a: int) -> Field:
        """The combination 2·(G_a − F_a/4): the (negated) vertical part of
        the side's semispray.  Derived through the Legendre change when the
        side's coefficients were not supplied."""

        def build():
            if self.semispray_derived(side):
                return self._derived_semispray_vertical(side, a)
            mech = self.model.mech_e if side == SIDE_E else self.model.mech_estar
            if mech is None:
                raise ValueError("missing mechanics data")
            space = self.space(side)
            gg = self._expr(space, mech.big_g[a])
            ff = self._expr(space, mech.big_f[a])
            return f_scale(2.0, f_sub(gg, f_scale(0.25, ff)))

        return self._get(("semiv", side, a), build)

    def semispray_derived(self, side: str) -> bool:
        """True when this side's semispray coefficients are transported from
        the other side instead of read from the scenario."""
        mech = self.model.mech_e if side == SIDE_E else self.model.mech_estar
        other = (
            self.model.mech_estar if side == SIDE_E else self.model.mech_e
        )
        if mech is None:
            return False
        own = mech.big_g_supplied or mech.big_f_supplied
        other_supplied = other is not None and (
            other.big_g_supplied or other.big_f_supplied
        )
        return (not own) and other_supplied

    def _derived_semispray_vertical(self, side: str, b: int) -> Field:
        """Transport of the other side's semispray vertical part."""
        other = other_side(side)
        space_o = self.space(other)
        m, r = self.m, self.r
        transported = f_sum(
            space_o,
            [
                f_mul(self.semispray_vertical(other, a), self.fiber_hessian(other, a, b))
                for a in range(r)
            ],
        )
        coupling_terms = []
        for c in range(r):
            anchor_mix = f_sum(
                space_o,
                [
                    f_mul(
                        self.g_entry(other, a, c),
                        self.rho_lift(other, i, a),
                        self.mixed_partial(other, i, b),
                    )
                    for a in range(r)
                    for i in range(m)
                ],
            )
            coupling_terms.append(
                f_mul(CoordField(space_o, m + c), anchor_mix)
            )
        coupling = f_sum(space_o, coupling_terms)
        return compose(f_sub(transported, coupling), self.map_to(other))

    def theta_coefficient(self, side: str, a: int) -> Field:
        """Coefficient of the canonical one-form on the horizontal coframe."""

        def build():
            if side == SIDE_E:
                ginv = self.g_inverse_bundle(SIDE_E, SIDE_E)
                terms = [
                    f_mul(ginv.entry(e, a), self.L_fiber(e)) for e in range(self.r)
                ]
                return f_sum(self.E, terms)
            ginv = self.g_inverse_bundle(SIDE_ESTAR, SIDE_ESTAR)
            terms = [
                f_mul(ginv.entry(a, e), self.H_fiber(e)) for e in range(self.r)
            ]
            return f_sum(self.Estar, terms)

        return self._get(("theta", side, a), build)
