"""Acceptance suite: one test per documented acceptance criterion.

Each test drives the public API end to end at the stated sample counts and
tolerances and prints a single summary line on success.  Oracles are kept
independent of the code paths they certify: conjugation is checked against
a brute-force grid supremum, derivatives against central finite differences
of plain field values, and curvature against a finite-difference bracket.
"""

from __future__ import annotations

import time

import numpy as np

from legendre_dual import (
    CATALOG,
    Geometry,
    LegendrePair,
    SIDE_E,
    SIDE_ESTAR,
    check_gla,
    fixture_model,
    hamiltonian_from_lagrangian,
    parse_scenario_text,
    run_checks,
)
from legendre_dual.algebroid import (
    ProlongSection,
    anchor_derivation,
    prolong_anchor,
    prolong_bracket,
    section_max_abs_diff,
    section_values,
)
from legendre_dual.connection import adapted_horizontal, curvature_fields
from legendre_dual.dsl import evaluate, parse
from legendre_dual.fields import f_mul, f_sum
from legendre_dual.identities import EVALUATORS, EvalContext
from legendre_dual.jets import Jet2
from legendre_dual.sampling import SplitMix64


ROUND_TRIP_FIXTURES = (
    "euclidean-flat",
    "quadratic-coupled",
    "exponential-1d",
    "quartic-metric",
)


def _ok(number: int, name: str, detail: str) -> None:
    print(f"[criterion {number:02d}] {name}: PASS ({detail})")


# ---------------------------------------------------------------------- #
# 1. Legendre round trip


def test_criterion_01_legendre_round_trip_residual_and_runtime():
    started = time.perf_counter()
    worst = 0.0
    for name in ROUND_TRIP_FIXTURES:
        model = fixture_model(name)
        ctx = EvalContext(model, 1000, model.sample_seed)
        for code in ("ID-3.6", "ID-3.7"):
            outcome = EVALUATORS[code](ctx)
            assert outcome.points == 1000
            assert outcome.residual <= 1e-9, (
                f"{name} {code}: round-trip residual {outcome.residual:.3e}"
            )
            worst = max(worst, outcome.residual)
    elapsed = time.perf_counter() - started
    assert elapsed <= 5.0, f"round-trip sweep took {elapsed:.2f}s (budget 5s)"
    _ok(1, "legendre round trip", f"worst {worst:.2e}, {elapsed:.2f}s")


# ---------------------------------------------------------------------- #
# 2. Conjugate oracle (brute-force grid supremum)

_CONVEX_EXTRA = {
    "quartic-well": (
        """
[meta]
name = "quartic-well"
description = "Strictly convex quartic single-fiber potential."

[bundle]
mode = "classical"
m = 1
p = 1
r = 1

[lagrangian]
L = "y1^4/4 + y1^2/2"

[sampling]
count = 100
seed = 11
box.x1.lo = -1.0
box.x1.hi = 1.0
box.y1.lo = -1.5
box.y1.hi = 1.5
box.p1.lo = -2.0
box.p1.hi = 2.0
""",
        lambda x, y: y**4 / 4 + y**2 / 2,
    ),
    "cosh-well": (
        """
[meta]
name = "cosh-well"
description = "Symmetric exponential single-fiber potential."

[bundle]
mode = "classical"
m = 1
p = 1
r = 1

[lagrangian]
L = "(exp(y1) + exp(-y1))/2"

[sampling]
count = 100
seed = 12
box.x1.lo = -1.0
box.x1.hi = 1.0
box.y1.lo = -1.2
box.y1.hi = 1.2
box.p1.lo = -1.5
box.p1.hi = 1.5
""",
        lambda x, y: (np.exp(y) + np.exp(-y)) / 2,
    ),
    "coupled-quadratic-well": (
        """
[meta]
name = "coupled-quadratic-well"
description = "Convex quadratic fiber potential with a base coupling."

[bundle]
mode = "classical"
m = 1
p = 1
r = 1

[lagrangian]
L = "y1^2/2 + x1*y1"

[sampling]
count = 100
seed = 13
box.x1.lo = -1.0
box.x1.hi = 1.0
box.y1.lo = -2.0
box.y1.hi = 2.0
box.p1.lo = -1.5
box.p1.hi = 1.5
""",
        lambda x, y: y**2 / 2 + x * y,
    ),
}


def test_criterion_02_conjugate_matches_brute_force_grid():
    grid = np.linspace(-5.0, 5.0, 10001)  # fiber grid with step 1e-3
    cases = [("exponential-1d", fixture_model("exponential-1d"), lambda x, y: np.exp(y))]
    cases += [
        (label, parse_scenario_text(text), lag)
        for label, (text, lag) in _CONVEX_EXTRA.items()
    ]
    worst = 0.0
    for label, model, lagrangian in cases:
        pair = LegendrePair.from_model(model)
        points = EvalContext(model, 100, model.sample_seed).points_Estar_box
        assert len(points) == 100
        for at in points:
            x, w = at[0], at[1]
            engine = hamiltonian_from_lagrangian(pair, at)
            brute = float(np.max(w * grid - lagrangian(x, grid)))
            diff = abs(engine - brute)
            assert diff <= 1e-4, f"{label} at {at}: |engine-grid| = {diff:.3e}"
            worst = max(worst, diff)
    _ok(2, "conjugate vs grid supremum", f"worst {worst:.2e} over 4 convex cases")


# ---------------------------------------------------------------------- #
# 3. Hessian duality


def test_criterion_03_fiber_hessians_are_mutually_inverse():
    worst = 0.0
    for name in ("quadratic-coupled", "exponential-1d"):
        model = fixture_model(name)
        pair = LegendrePair.from_model(model)
        points = EvalContext(model, 1000, model.sample_seed).points_Estar_box
        assert len(points) == 1000
        for w in points:
            residual = pair.hessian_duality_residual(w)
            assert residual <= 1e-8, f"{name} at {w}: residual {residual:.3e}"
            worst = max(worst, residual)
    _ok(3, "fiber-Hessian duality", f"worst {worst:.2e} at 2000 points")


# ---------------------------------------------------------------------- #
# 4. Derivative correctness against central finite differences

_BUILTIN_EXPRESSIONS = {
    "exp": "exp(0.4*u1 - 0.6*u2)",
    "log": "log(3 + 0.5*u1 + 0.3*u2)",
    "sin": "sin(0.7*u1 + 0.2*u2)",
    "cos": "cos(0.3*u1 - 0.8*u2)",
    "sqrt": "sqrt(4 + 0.6*u1 - 0.5*u2)",
    "pow-fractional": "(2.5 + 0.5*u1 + 0.2*u2)^1.7",
    "pow-varying-exponent": "(2 + 0.4*u1)^(1.5 + 0.5*u2)",
}


def _fd_gradient(value_at, point, h=1e-5):
    grad = np.empty(point.shape[0])
    for i in range(point.shape[0]):
        plus, minus = point.copy(), point.copy()
        plus[i] += h
        minus[i] -= h
        grad[i] = (value_at(plus) - value_at(minus)) / (2 * h)
    return grad


def _fd_hessian(value_at, point, h=1e-4):
    dim = point.shape[0]
    hess = np.empty((dim, dim))
    for i in range(dim):
        for j in range(dim):
            pp, pm, mp, mm = (point.copy() for _ in range(4))
            pp[i] += h
            pp[j] += h
            pm[i] += h
            pm[j] -= h
            mp[i] -= h
            mp[j] += h
            mm[i] -= h
            mm[j] -= h
            hess[i, j] = (
                value_at(pp) - value_at(pm) - value_at(mp) + value_at(mm)
            ) / (4 * h * h)
    return hess


def _relative_gap(exact, approx):
    exact = np.asarray(exact, dtype=float)
    approx = np.asarray(approx, dtype=float)
    return float(np.max(np.abs(exact - approx) / np.maximum(1.0, np.abs(exact))))


def test_criterion_04_jet_derivatives_match_finite_differences():
    worst = 0.0
    rng = SplitMix64(404)
    for label, source in _BUILTIN_EXPRESSIONS.items():
        ast = parse(source)

        def value_at(pt, ast=ast):
            env = dict(zip(("u1", "u2"), Jet2.seed_variables(list(pt), 0)))
            return evaluate(ast, env).value

        for _ in range(100):
            pt = np.array([rng.next_in(-1, 1), rng.next_in(-1, 1)])
            env = dict(zip(("u1", "u2"), Jet2.seed_variables(list(pt), 2)))
            jet = evaluate(ast, env)
            gap = max(
                _relative_gap(jet.grad, _fd_gradient(value_at, pt)),
                _relative_gap(jet.hess, _fd_hessian(value_at, pt)),
            )
            assert gap <= 1e-5, f"builtin {label} at {pt}: relative gap {gap:.3e}"
            worst = max(worst, gap)

    from legendre_dual import fixture_names

    checked = 0
    for name in fixture_names():
        model = fixture_model(name)
        if model.lagrangian is None:
            continue
        geom = Geometry(model)
        field = geom.lagrangian_field()

        def value_at(pt, geom=geom, field=field):
            return field.value(geom.session, pt)

        for pt in EvalContext(model, 100, model.sample_seed).points_E_box:
            jet = field.jet(geom.session, pt, 2)
            gap = max(
                _relative_gap(jet.grad, _fd_gradient(value_at, pt)),
                _relative_gap(jet.hess, _fd_hessian(value_at, pt)),
            )
            assert gap <= 1e-5, f"{name} at {pt}: relative gap {gap:.3e}"
            worst = max(worst, gap)
        checked += 1
    assert checked >= 4
    _ok(
        4,
        "exact jets vs finite differences",
        f"worst {worst:.2e} over {len(_BUILTIN_EXPRESSIONS)} builtins"
        f" and {checked} fixture potentials",
    )


# ---------------------------------------------------------------------- #
# 5. Algebroid structure axioms and bracket laws

_BRACKET_FIXTURES = ("euclidean-flat", "so3-rigid-body", "action-solvable")


def _random_poly(geom, side, rng):
    space = geom.space(side)
    terms = [geom.const(side, rng.next_in(-1, 1))]
    for i in range(space.dim):
        terms.append(f_mul(geom.const(side, rng.next_in(-1, 1)), geom.coord(side, i)))
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


def _random_section(geom, side, rng):
    z = tuple(_random_poly(geom, side, rng) for _ in range(geom.p))
    v = tuple(_random_poly(geom, side, rng) for _ in range(geom.r))
    return ProlongSection(side, z, v)


def _box_points(geom, side, rng, count):
    dim = geom.space(side).dim
    return [
        np.array([rng.next_in(-1.0, 1.0) for _ in range(dim)])
        for _ in range(count)
    ]


def test_criterion_05_structure_axioms_and_bracket_laws():
    for name in ("so3-rigid-body", "action-solvable"):
        geom = Geometry(fixture_model(name))
        rng = SplitMix64(505)
        chi_points = [
            np.array([rng.next_in(-1, 1) for _ in range(geom.m)]) for _ in range(50)
        ]
        x_points = [
            np.array([rng.next_in(-1, 1) for _ in range(geom.m)]) for _ in range(50)
        ]
        report = check_gla(geom, chi_points, x_points)
        assert report.antisymmetry <= 1e-12, name
        assert report.compatibility <= 1e-12, name

    # 200 random polynomial draws: 67 antisymmetry pairs, 67 Leibniz pairs,
    # 66 Jacobi triples, spread over three structurally distinct fixtures.
    split = {"euclidean-flat": (23, 23, 22), "so3-rigid-body": (22, 22, 22),
             "action-solvable": (22, 22, 22)}
    worst_anti = worst_leibniz = worst_jacobi = 0.0
    for name, (n_anti, n_leib, n_jac) in split.items():
        geom = Geometry(fixture_model(name))
        space = geom.space(SIDE_E)
        rng = SplitMix64(506)
        for _ in range(n_anti):
            x = _random_section(geom, SIDE_E, rng)
            y = _random_section(geom, SIDE_E, rng)
            forward = prolong_bracket(geom, x, y)
            backward = prolong_bracket(geom, y, x)
            for pt in _box_points(geom, SIDE_E, rng, 2):
                total = section_values(geom, forward, pt) + section_values(
                    geom, backward, pt
                )
                worst_anti = max(worst_anti, float(np.max(np.abs(total))))
        for _ in range(n_leib):
            x = _random_section(geom, SIDE_E, rng)
            y = _random_section(geom, SIDE_E, rng)
            f = _random_poly(geom, SIDE_E, rng)
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
                    f_sum(space, [f_mul(f, z), f_mul(df, w)])
                    for z, w in zip(base.z, y.z)
                ),
                tuple(
                    f_sum(space, [f_mul(f, v), f_mul(df, w)])
                    for v, w in zip(base.v, y.v)
                ),
            )
            for pt in _box_points(geom, SIDE_E, rng, 2):
                worst_leibniz = max(
                    worst_leibniz, section_max_abs_diff(geom, lhs, rhs, pt)
                )
        for _ in range(n_jac):
            x = _random_section(geom, SIDE_E, rng)
            y = _random_section(geom, SIDE_E, rng)
            z = _random_section(geom, SIDE_E, rng)
            cyc = [
                prolong_bracket(geom, x, prolong_bracket(geom, y, z)),
                prolong_bracket(geom, y, prolong_bracket(geom, z, x)),
                prolong_bracket(geom, z, prolong_bracket(geom, x, y)),
            ]
            for pt in _box_points(geom, SIDE_E, rng, 1):
                total = sum(section_values(geom, b, pt) for b in cyc)
                worst_jacobi = max(worst_jacobi, float(np.max(np.abs(total))))
    assert worst_anti <= 1e-7, f"antisymmetry {worst_anti:.3e}"
    assert worst_leibniz <= 1e-7, f"Leibniz {worst_leibniz:.3e}"
    assert worst_jacobi <= 1e-7, f"Jacobi {worst_jacobi:.3e}"
    _ok(
        5,
        "structure axioms and bracket laws",
        f"axioms <= 1e-12; anti {worst_anti:.1e}, Leibniz {worst_leibniz:.1e},"
        f" Jacobi {worst_jacobi:.1e}",
    )


# ---------------------------------------------------------------------- #
# 6. Classical corollary suite

_CLASSICAL_IDS = (
    "ID-4.9", "ID-4.10", "ID-4.11",
    "ID-5.2", "ID-5.3",
    "ID-5.7", "ID-5.8",
    "ID-6.3", "ID-6.4", "ID-6.5", "ID-6.6",
    "ID-7.5",
)


def test_criterion_06_classical_corollaries_at_500_samples():
    started = time.perf_counter()
    reports = {
        name: run_checks(
            fixture_model(name), count=500, tol=1e-6, ids=list(_CLASSICAL_IDS)
        )
        for name in ("quadratic-coupled", "connection-full")
    }
    elapsed = time.perf_counter() - started
    for name, report in reports.items():
        assert report.counts["FAIL"] == 0, report.to_text()
        assert report.counts["ERROR"] == 0, report.to_text()
        assert report.counts["GATED"] == 0, report.to_text()
    for code in _CLASSICAL_IDS:
        passed = []
        for name, report in reports.items():
            row = report.row(code)
            assert row.status in ("PASS", "SKIP"), f"{name} {code}: {row.status}"
            if row.status == "PASS":
                assert row.residual <= 1e-6, f"{name} {code}: {row.residual:.3e}"
                passed.append(name)
        assert passed, f"{code} did not run on any classical fixture"
    assert elapsed <= 30.0, f"classical suite took {elapsed:.2f}s (budget 30s)"
    _ok(6, "classical corollary suite", f"{len(_CLASSICAL_IDS)} ids, {elapsed:.2f}s")


# ---------------------------------------------------------------------- #
# 7. Gate-implication sweep

_GATE_IMPLIES = {
    "GATE-MORPH-H": ("ID-4.8", "ID-4.9", "ID-4.10", "ID-4.11"),
    "GATE-MORPH-L": ("ID-4.12", "ID-4.13", "ID-4.14", "ID-4.15"),
    "GATE-HL-L": ("ID-5.9", "ID-5.12"),
    "GATE-HL-H": ("ID-5.10", "ID-5.12D"),
    "GATE-THETA": ("ID-8.3", "ID-8.6", "ID-8.7"),
}


def test_criterion_07_passing_gates_imply_passing_identities():
    from legendre_dual import fixture_names

    triggered = {gate: 0 for gate in _GATE_IMPLIES}
    for name in fixture_names():
        report = run_checks(fixture_model(name))
        rows = {row.code: row for row in report.rows}
        for gate, dependents in _GATE_IMPLIES.items():
            gate_row = rows.get(gate)
            if gate_row is None or gate_row.status != "PASS":
                continue
            if gate_row.residual is None or gate_row.residual > 1e-8:
                continue
            triggered[gate] += 1
            for code in dependents:
                row = rows.get(code)
                assert row is not None and row.status == "PASS", (
                    f"{name}: {gate} holds but {code} is "
                    f"{row.status if row else 'missing'}"
                )
                assert row.residual <= 1e-6, (
                    f"{name}: {code} residual {row.residual:.3e}"
                )
    assert all(count > 0 for count in triggered.values()), triggered
    _ok(
        7,
        "gate-implication sweep",
        ", ".join(f"{g}x{c}" for g, c in sorted(triggered.items())),
    )


# ---------------------------------------------------------------------- #
# 8. Curvature against a finite-difference bracket


def _fd_directional(session, field, point, direction, h=1e-5):
    total = 0.0
    for k in range(point.shape[0]):
        weight = direction[k]
        if weight == 0.0:
            continue
        plus, minus = point.copy(), point.copy()
        plus[k] += h
        minus[k] -= h
        total += weight * (
            field.value(session, plus) - field.value(session, minus)
        ) / (2 * h)
    return total


def test_criterion_08_curvature_matches_finite_difference_bracket():
    model = fixture_model("connection-full")
    geom = Geometry(model)
    session = geom.session
    worst = 0.0
    for side in (SIDE_E, SIDE_ESTAR):
        points = (
            EvalContext(model, 200, model.sample_seed).points_E_box
            if side == SIDE_E
            else EvalContext(model, 200, model.sample_seed + 1).points_Estar_box
        )
        assert len(points) == 200
        sign = 1.0 if side == SIDE_E else -1.0
        for alpha in range(geom.p):
            for beta in range(alpha + 1, geom.p):
                sec_a = adapted_horizontal(geom, side, alpha)
                sec_b = adapted_horizontal(geom, side, beta)
                anchor_a = prolong_anchor(geom, sec_a)
                anchor_b = prolong_anchor(geom, sec_b)
                engine = curvature_fields(geom, side, alpha, beta)
                mirrored = curvature_fields(geom, side, beta, alpha)
                for pt in points:
                    dir_a = np.array(
                        [f.value(session, pt) for f in anchor_a]
                    )
                    dir_b = np.array(
                        [f.value(session, pt) for f in anchor_b]
                    )
                    for a in range(geom.r):
                        bracket_v = _fd_directional(
                            session, sec_b.v[a], pt, dir_a
                        ) - _fd_directional(session, sec_a.v[a], pt, dir_b)
                        transport = sum(
                            geom.lstruct_lift(side, g, alpha, beta).value(session, pt)
                            * geom.connection_coefficient(side, a, g).value(session, pt)
                            for g in range(geom.p)
                        )
                        oracle = bracket_v + sign * transport
                        got = engine[a].value(session, pt)
                        gap = abs(got - oracle)
                        assert gap <= 1e-5, (
                            f"{side} R[{a}]_{alpha}{beta} at {pt}: gap {gap:.3e}"
                        )
                        worst = max(worst, gap)
                        # antisymmetry must be exact, not just within tolerance
                        assert mirrored[a].value(session, pt) == -got
    _ok(8, "curvature vs finite-difference bracket", f"worst gap {worst:.2e}")


# ---------------------------------------------------------------------- #
# 9. Negative control: a perturbed dual connection must be detected

_PERTURBED_DUAL = """
[meta]
name = "perturbed-dual"
description = "Dual connection offset by a constant: transport must fail."

[bundle]
mode = "classical"
m = 2
p = 2
r = 2

[lagrangian]
L = "y1^2 + y1*y2 + y2^2"

[connection_e]
Gamma.1.2 = "x1*y2"

[connection_estar]
Gammastar.1.1 = "0.1"
Gammastar.1.2 = "x1*(2*p1 - 4*p2)/3 + 0.1"
Gammastar.2.1 = "0.1"
Gammastar.2.2 = "x1*(p1 - 2*p2)/3 + 0.1"

[sampling]
count = 40
seed = 0
"""


def test_criterion_09_negative_control_flags_perturbed_dual_connection():
    report = run_checks(parse_scenario_text(_PERTURBED_DUAL))
    row = report.row("ID-5.3")
    assert row.status == "FAIL"
    assert row.residual >= 1e-3, f"perturbation residual only {row.residual:.3e}"

    failed = {r.code for r in report.rows if r.status == "FAIL"}
    assert failed == {"ID-5.2", "ID-5.3", "GATE-HL-L", "GATE-HL-H"}, failed
    assert all(
        r.status in ("PASS", "GATED", "SKIP") for r in report.rows
        if r.code not in failed
    )

    # every identity that does not hinge on a gate (and does not consume the
    # perturbed ingredient itself) must keep passing
    gate_free = {
        spec.code
        for spec in CATALOG
        if spec.kind == "identity" and not spec.gates
    } - {"ID-5.2", "ID-5.3"}
    for code in sorted(gate_free):
        row = report.row(code)
        assert row.status in ("PASS", "SKIP"), f"{code}: {row.status}"
    assert report.exit_code == 1
    _ok(
        9,
        "negative control",
        f"ID-5.3 residual {report.row('ID-5.3').residual:.2e}, fail set exact",
    )


# ---------------------------------------------------------------------- #
# 10. Deterministic reports


def test_criterion_10_reports_are_byte_identical_across_runs_and_threads():
    model = fixture_model("connection-full")
    first = run_checks(model, count=40, threads=1).to_json()
    second = run_checks(model, count=40, threads=1).to_json()
    threaded = run_checks(model, count=40, threads=8).to_json()
    assert first == second
    assert first == threaded
    _ok(10, "deterministic reports", f"{len(first)} bytes, threads 1 and 8")
