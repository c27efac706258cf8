"""Catalog of duality checks and the deterministic check runner.

Every check is identified by a stable registry code (``ID-…`` for the
duality relations themselves, ``GATE-…`` for the transport hypotheses that
the conditional relations rest on).  A relation whose hypothesis gate fails
is reported as ``GATED`` rather than ``FAIL``: its residual is still shown,
but it does not count against the exit code, because the scenario's data
already broke the premise the relation depends on.

Statuses
--------
``PASS``   residual within tolerance.
``FAIL``   residual above tolerance with all hypothesis gates passing.
``GATED``  residual above tolerance, but a hypothesis gate did not pass.
``SKIP``   scenario lacks the optional data the check needs.
``ERROR``  evaluation raised (singular matrix, solver failure, domain error).

The runner evaluates every job in an isolated evaluation context (own
geometry, own caches, own sample draw), so results are bitwise identical
whether jobs run sequentially or on a thread pool
(``LEGENDRE_DUAL_THREADS``).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .identities import EVALUATORS, GATE_EVALUATORS, EvalContext, Outcome
from .report import CheckRow, Report
from .scenario import ScenarioModel

__all__ = ["CheckSpec", "CATALOG", "catalog_codes", "run_checks"]

GATE_DEFAULT_THRESHOLD = 1e-8

REQ_ALWAYS = "always"
REQ_CONNECTION = "connection"
REQ_DCONNECTION = "dconnection"
REQ_MECHANICS = "mechanics"

_SKIP_REASONS = {
    REQ_CONNECTION: "no connection coefficients in scenario",
    REQ_DCONNECTION: "no second-order transport blocks in scenario",
    REQ_MECHANICS: "mechanics data missing on one or both sides",
}


@dataclass(frozen=True)
class CheckSpec:
    code: str
    kind: str  # "gate" | "identity"
    summary: str
    requires: str = REQ_ALWAYS
    gates: tuple[str, ...] = ()


def _gate(code: str, summary: str, requires: str = REQ_ALWAYS) -> CheckSpec:
    return CheckSpec(code, "gate", summary, requires)


def _ident(
    code: str,
    summary: str,
    requires: str = REQ_ALWAYS,
    gates: tuple[str, ...] = (),
) -> CheckSpec:
    return CheckSpec(code, "identity", summary, requires, gates)


CATALOG: tuple[CheckSpec, ...] = (
    # hypothesis gates -------------------------------------------------- #
    _gate(
        "GATE-MORPH-L",
        "velocity-side prolongation bracket transports onto the momentum side",
    ),
    _gate(
        "GATE-MORPH-H",
        "momentum-side prolongation bracket transports onto the velocity side",
    ),
    _gate(
        "GATE-HL-L",
        "velocity-side adapted horizontal frame transports onto the momentum-side frame",
        REQ_CONNECTION,
    ),
    _gate(
        "GATE-HL-H",
        "momentum-side adapted horizontal frame transports onto the velocity-side frame",
        REQ_CONNECTION,
    ),
    _gate(
        "GATE-DCONN-L",
        "covariant derivative commutes with the transport of frame sections",
        REQ_DCONNECTION,
    ),
    _gate(
        "GATE-SEMI-L",
        "velocity-side semispray transports onto the momentum-side semispray",
        REQ_MECHANICS,
    ),
    _gate(
        "GATE-SEMI-H",
        "momentum-side semispray transports onto the velocity-side semispray",
        REQ_MECHANICS,
    ),
    _gate(
        "GATE-THETA",
        "canonical one-forms correspond under pullback through the fiber change",
        REQ_MECHANICS,
    ),
    _gate(
        "GATE-OMEGA-L",
        "exterior-derivative pairings of velocity frame sections agree after transport",
        REQ_MECHANICS,
    ),
    _gate(
        "GATE-OMEGA-H",
        "exterior-derivative pairings of momentum frame sections agree after transport",
        REQ_MECHANICS,
    ),
    # base map and round trips ------------------------------------------ #
    _ident("ID-2.4", "base-map tangent intertwines the two anchor maps"),
    _ident("ID-2.5", "structure functions transport through the base map"),
    _ident(
        "ID-3.6",
        "velocity-to-momentum map followed by its inverse returns the velocity sample",
    ),
    _ident(
        "ID-3.7",
        "momentum-to-velocity map followed by its inverse returns the momentum sample",
    ),
    # prolongation bracket structure ------------------------------------- #
    _ident(
        "ID-4.8",
        "velocity-side horizontal bracket reproduces the lifted structure functions",
    ),
    _ident(
        "ID-4.9",
        "momentum-side mixed tangent blocks satisfy the bracket compatibility relation",
        gates=("GATE-MORPH-H",),
    ),
    _ident(
        "ID-4.10",
        "momentum-side fiber blocks satisfy the horizontal-vertical compatibility relation",
        gates=("GATE-MORPH-H",),
    ),
    _ident(
        "ID-4.11",
        "momentum-side fiber blocks commute under vertical differentiation",
        gates=("GATE-MORPH-H",),
    ),
    _ident(
        "ID-4.12",
        "momentum-side horizontal bracket reproduces the lifted structure functions",
    ),
    _ident(
        "ID-4.13",
        "velocity-side mixed tangent blocks satisfy the bracket compatibility relation",
        gates=("GATE-MORPH-L",),
    ),
    _ident(
        "ID-4.14",
        "velocity-side fiber blocks satisfy the horizontal-vertical compatibility relation",
        gates=("GATE-MORPH-L",),
    ),
    _ident(
        "ID-4.15",
        "velocity-side fiber blocks commute under vertical differentiation",
        gates=("GATE-MORPH-L",),
    ),
    # connection duality -------------------------------------------------- #
    _ident(
        "ID-5.2",
        "dual connection coefficients arise from the primal ones through the fiber change",
        REQ_CONNECTION,
    ),
    _ident(
        "ID-5.3",
        "primal connection coefficients arise from the dual ones through the fiber change",
        REQ_CONNECTION,
    ),
    _ident(
        "ID-5.4",
        "momentum fiber Hessian inverts the transported velocity fiber Hessian",
    ),
    _ident(
        "ID-5.5",
        "momentum-side mixed tangent block cancels the contracted base-fiber derivatives",
    ),
    _ident(
        "ID-5.7",
        "curvature transports from the velocity side through the fiber Hessian",
        REQ_CONNECTION,
        gates=("GATE-HL-L",),
    ),
    _ident(
        "ID-5.8",
        "curvature transports from the momentum side through the fiber Hessian",
        REQ_CONNECTION,
        gates=("GATE-HL-H",),
    ),
    _ident(
        "ID-5.9",
        "fiber derivative of the primal connection transports onto momentum fiber-block derivatives",
        REQ_CONNECTION,
        gates=("GATE-HL-L",),
    ),
    _ident(
        "ID-5.10",
        "fiber derivative of the dual connection transports onto velocity fiber-block derivatives",
        REQ_CONNECTION,
        gates=("GATE-HL-H",),
    ),
    _ident(
        "ID-5.12",
        "pulled-back momentum vertical coframe expands in the velocity Hessian and connection",
        REQ_CONNECTION,
        gates=("GATE-HL-L",),
    ),
    _ident(
        "ID-5.12D",
        "pulled-back velocity vertical coframe expands in the momentum Hessian and connection",
        REQ_CONNECTION,
        gates=("GATE-HL-H",),
    ),
    # second-order transport duality -------------------------------------- #
    _ident(
        "ID-6.3",
        "horizontal-horizontal transport block maps directly onto its dual",
        REQ_DCONNECTION,
        gates=("GATE-DCONN-L",),
    ),
    _ident(
        "ID-6.4",
        "horizontal-vertical transport block maps onto its dual through the fiber Hessian",
        REQ_DCONNECTION,
        gates=("GATE-DCONN-L",),
    ),
    _ident(
        "ID-6.5",
        "vertical-horizontal transport block maps onto its dual through the fiber block",
        REQ_DCONNECTION,
        gates=("GATE-DCONN-L",),
    ),
    _ident(
        "ID-6.6",
        "vertical-vertical transport block maps onto its dual through two fiber blocks",
        REQ_DCONNECTION,
        gates=("GATE-DCONN-L",),
    ),
    _ident(
        "ID-6.7",
        "dual horizontal-horizontal transport block maps back directly",
        REQ_DCONNECTION,
        gates=("GATE-DCONN-L",),
    ),
    _ident(
        "ID-6.8",
        "dual horizontal-vertical transport block maps back through the fiber Hessian",
        REQ_DCONNECTION,
        gates=("GATE-DCONN-L",),
    ),
    _ident(
        "ID-6.9",
        "dual vertical-horizontal transport block maps back through the fiber block",
        REQ_DCONNECTION,
        gates=("GATE-DCONN-L",),
    ),
    _ident(
        "ID-6.10",
        "dual vertical-vertical transport block maps back through two fiber blocks",
        REQ_DCONNECTION,
        gates=("GATE-DCONN-L",),
    ),
    # mechanics ------------------------------------------------------------ #
    _ident(
        "ID-7.4",
        "metric pairing of the velocity fiber transports onto the momentum side",
        REQ_MECHANICS,
    ),
    _ident(
        "ID-7.5",
        "semispray vertical coefficients transport onto the momentum side",
        REQ_MECHANICS,
        gates=("GATE-SEMI-L",),
    ),
    _ident(
        "ID-7.6",
        "metric pairing of the momentum fiber transports onto the velocity side",
        REQ_MECHANICS,
    ),
    _ident(
        "ID-7.7",
        "semispray vertical coefficients transport onto the velocity side",
        REQ_MECHANICS,
        gates=("GATE-SEMI-H",),
    ),
    # canonical one-form ----------------------------------------------------#
    _ident(
        "ID-8.3",
        "momentum one-form coefficients compose back to the velocity-side coefficients",
        REQ_MECHANICS,
        gates=("GATE-THETA",),
    ),
    _ident(
        "ID-8.3D",
        "velocity one-form coefficients compose forward to the momentum-side coefficients",
        REQ_MECHANICS,
        gates=("GATE-THETA",),
    ),
    _ident(
        "ID-8.6",
        "antisymmetrized horizontal derivatives of the one-form coefficients transport back",
        REQ_MECHANICS,
        gates=("GATE-THETA",),
    ),
    _ident(
        "ID-8.7",
        "vertical derivatives of the momentum one-form transport through the fiber block",
        REQ_MECHANICS,
        gates=("GATE-THETA",),
    ),
    _ident(
        "ID-8.8",
        "antisymmetrized horizontal derivatives of the one-form coefficients transport forward",
        REQ_MECHANICS,
        gates=("GATE-THETA",),
    ),
    _ident(
        "ID-8.9",
        "vertical derivatives of the velocity one-form transport through the fiber block",
        REQ_MECHANICS,
        gates=("GATE-THETA",),
    ),
)

_BY_CODE = {spec.code: spec for spec in CATALOG}


def catalog_codes() -> list[str]:
    return [spec.code for spec in CATALOG]


def _requirement_gap(model: ScenarioModel, requires: str) -> str | None:
    if requires == REQ_ALWAYS:
        return None
    if requires == REQ_CONNECTION:
        ok = model.gamma is not None or model.gammastar is not None
    elif requires == REQ_DCONNECTION:
        ok = model.dconn_e is not None and (
            model.gamma is not None or model.gammastar is not None
        )
    elif requires == REQ_MECHANICS:
        ok = model.mech_e is not None and model.mech_estar is not None
    else:  # pragma: no cover - catalog is static
        raise ValueError(f"unknown requirement {requires!r}")
    return None if ok else _SKIP_REASONS[requires]


def _tolerance_for(
    model: ScenarioModel, spec: CheckSpec, tol_override: float | None
) -> float:
    if spec.code in model.tolerances:
        return model.tolerances[spec.code]
    if spec.kind == "gate":
        return GATE_DEFAULT_THRESHOLD
    if tol_override is not None:
        return tol_override
    return model.tolerance_default


def _resolve_selection(model: ScenarioModel, ids) -> list[CheckSpec]:
    requested = list(ids) if ids else list(model.check_ids or [])
    if not requested:
        return list(CATALOG)
    unknown = [code for code in requested if code not in _BY_CODE]
    if unknown:
        raise ValueError(
            "unknown check id(s): "
            + ", ".join(unknown)
            + "; valid ids: "
            + ", ".join(catalog_codes())
        )
    wanted = set(requested)
    for code in requested:
        wanted.update(_BY_CODE[code].gates)
    return [spec for spec in CATALOG if spec.code in wanted]


def _thread_count(threads) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("LEGENDRE_DUAL_THREADS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _run_one(
    model: ScenarioModel,
    spec: CheckSpec,
    count: int,
    seed: int,
    tol_override: float | None,
) -> CheckRow:
    gap = _requirement_gap(model, spec.requires)
    tolerance = _tolerance_for(model, spec, tol_override)
    if gap is not None:
        return CheckRow(
            code=spec.code,
            summary=spec.summary,
            status="SKIP",
            residual=None,
            tolerance=tolerance,
            points=0,
            note=gap,
        )
    evaluator = (
        GATE_EVALUATORS[spec.code]
        if spec.kind == "gate"
        else EVALUATORS[spec.code]
    )
    ctx = EvalContext(model, count, seed)
    try:
        outcome: Outcome = evaluator(ctx)
    except Exception as exc:  # noqa: BLE001 - reported, not swallowed
        return CheckRow(
            code=spec.code,
            summary=spec.summary,
            status="ERROR",
            residual=None,
            tolerance=tolerance,
            points=0,
            note=f"{type(exc).__name__}: {exc}",
        )
    status = "PASS" if outcome.residual <= tolerance else "FAIL"
    return CheckRow(
        code=spec.code,
        summary=spec.summary,
        status=status,
        residual=outcome.residual,
        tolerance=tolerance,
        points=outcome.points,
        note=outcome.note,
    )


def run_checks(
    model: ScenarioModel,
    *,
    count: int | None = None,
    seed: int | None = None,
    tol: float | None = None,
    ids=None,
    threads: int | None = None,
) -> Report:
    """Evaluate the selected checks and assemble a report.

    ``count``/``seed``/``tol`` override the scenario's sampling block;
    ``ids`` restricts the run to the given registry codes (hypothesis gates
    of selected relations are pulled in automatically); ``threads`` overrides
    the ``LEGENDRE_DUAL_THREADS`` environment variable.
    """
    specs = _resolve_selection(model, ids)
    eff_count = model.sample_count if count is None else count
    eff_seed = model.sample_seed if seed is None else seed
    workers = _thread_count(threads)

    def job(spec: CheckSpec) -> CheckRow:
        return _run_one(model, spec, eff_count, eff_seed, tol)

    if workers > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(job, specs))
    else:
        rows = [job(spec) for spec in specs]

    gate_passed = {
        row.code: row.status == "PASS"
        for row, spec in zip(rows, specs)
        if spec.kind == "gate"
    }
    for row, spec in zip(rows, specs):
        if spec.kind != "identity" or row.status != "FAIL":
            continue
        broken = [g for g in spec.gates if not gate_passed.get(g, True)]
        if broken:
            row.status = "GATED"
            gate_note = "hypothesis not established: " + ", ".join(broken)
            row.note = f"{row.note}; {gate_note}" if row.note else gate_note

    # Structure-axiom failures do not gate other rows (they still run and
    # report), but the report carries a prominent warning.
    banners = []
    for row in rows:
        if row.code == "ID-2.5" and row.status == "FAIL":
            banners.append(
                "not a Lie algebroid: the structure functions fail the "
                "axiom check, so bracket-based relations are unreliable "
                "on this scenario"
            )

    return Report(
        scenario=model.name,
        digest=model.digest(),
        mode=model.mode,
        dims={"m": model.m, "p": model.p, "r": model.r},
        count=eff_count,
        seed=eff_seed,
        rows=rows,
        banners=banners,
    )
