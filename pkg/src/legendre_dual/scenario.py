"""Scenario files: the verifier's input format.

A scenario is a plain-text, INI-style description of one geometric setup:
bundle dimensions, the base-manifold maps, the anchored-bracket structure,
a Lagrangian and/or Hamiltonian, and optionally connections, second-order
connection blocks, and mechanical data on either side.  Example::

    [meta]
    name = "demo"

    [bundle]
    mode = "classical"
    m = 1
    p = 1
    r = 1

    [lagrangian]
    L = "exp(y1)"

    [sampling]
    count = 200
    seed = 1
    box.y1.lo = -2.0
    box.y1.hi = 2.0

Format rules
------------
* ``[section]`` headers group ``key = value`` lines; ``#`` starts a comment.
* Values are either double-quoted strings (expressions, names, ID lists) or
  bare numbers.
* Indexed keys use 1-based dotted indices: ``rho.2.1`` is the base-direction-2
  component of anchor column 1; ``Lstruct.3.1.2`` is the output-3 structure
  function of the bracket of frame sections 1 and 2.
* ``[tolerances]`` keys are taken verbatim (they contain dots themselves).

Coordinate namespaces
---------------------
``x1..xm`` (base), ``y1..yr`` (velocity fiber), ``p1..pr`` (momentum fiber),
``chi1..chim`` (target base).  Each ingredient may only use its own names:
``h`` over x, ``eta``/``rho``/``Lstruct`` over chi, ``L``/``Gamma``/D-blocks/
``G``/``F`` over (x, y), ``H``/``Gammastar``/starred D-blocks/``Gstar``/
``Fstar`` over (x, p), ``g``/``gstar`` over x (evaluated at the image of the
base map where formulas require it).

Second-order connection blocks
------------------------------
Key layouts name (output, input, direction) indices of the transport
coefficients:

* ``Hc.al.be.ga``  — horizontal transport of horizontal frames,
* ``Hv.a.b.ga``    — horizontal transport of vertical frames,
* ``Vc.al.be.c``   — vertical transport of horizontal frames,
* ``Vv.a.b.c``     — vertical transport of vertical frames,

and on the dual side (upper/lower placement follows the dual pairing):
``Hcs.al.be.ga``, ``Hvs.a.b.ga`` (input a, output b, direction ga),
``Vcs.al.c.be`` (output al, direction c, input be), ``Vvs.b.c.a`` (input b,
direction c, output a).

``mode = "classical"`` defaults the base maps to the identity, the anchor to
the identity matrix, and the structure functions to zero.  In
``mode = "generalized"`` the anchor and structure functions are mandatory and
the base maps default to the identity.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path

from .dsl import Ast, Num, ParseError, free_symbols, parse

__all__ = [
    "ScenarioError",
    "ScenarioModel",
    "DConnBlocks",
    "MechanicsData",
    "parse_scenario_text",
    "load_scenario",
]


class ScenarioError(ValueError):
    """Scenario load/validation failure carrying all diagnostics at once."""

    def __init__(self, diagnostics: list[str]):
        self.diagnostics = list(diagnostics)
        super().__init__(
            "invalid scenario:\n  - " + "\n  - ".join(self.diagnostics)
        )


# ---------------------------------------------------------------------- #
# raw INI-ish reader


_SECTION_RE = re.compile(r"^\[([A-Za-z_][A-Za-z0-9_]*)\]$")
_KEY_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_.*-]*)\s*=\s*(.*)$")

_KNOWN_SECTIONS = {
    "meta",
    "bundle",
    "base_map",
    "algebroid",
    "lagrangian",
    "hamiltonian",
    "connection_e",
    "connection_estar",
    "dconnection_e",
    "dconnection_estar",
    "mechanics_e",
    "mechanics_estar",
    "sampling",
    "tolerances",
    "checks",
}


def _read_sections(
    text: str, diagnostics: list[str]
) -> dict[str, dict[str, str]]:
    sections: dict[str, dict[str, str]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        header = _SECTION_RE.match(line)
        if header:
            current = header.group(1)
            if current not in _KNOWN_SECTIONS:
                diagnostics.append(
                    f"line {lineno}: unknown section [{current}]"
                )
            sections.setdefault(current, {})
            continue
        entry = _KEY_RE.match(line)
        if not entry:
            diagnostics.append(f"line {lineno}: cannot parse {line!r}")
            continue
        if current is None:
            diagnostics.append(
                f"line {lineno}: key outside any [section]: {line!r}"
            )
            continue
        key, value = entry.group(1), entry.group(2).strip()
        if key in sections[current]:
            diagnostics.append(
                f"line {lineno}: duplicate key {key!r} in [{current}]"
            )
        sections[current][key] = value
    return sections


def _unquote(value: str) -> str | None:
    if len(value) >= 2 and value[0] == '"' and value[-1] == '"':
        return value[1:-1]
    return None


# ---------------------------------------------------------------------- #
# model


@dataclass
class DConnBlocks:
    """The four transport-coefficient blocks of a second-order connection."""

    hc: list[list[list[Ast]]]  # [out][in][dir], ranks p,p,p
    hv: list[list[list[Ast]]]  # ranks r,r,p (primal) / input,output,dir (dual)
    vc: list[list[list[Ast]]]  # primal [out al][in be][dir c]; dual [al][c][be]
    vv: list[list[list[Ast]]]  # primal [out a][in b][dir c]; dual [b][c][a]


@dataclass
class MechanicsData:
    """Bundle morphism entries plus the two semispray coefficient families."""

    g: list[list[Ast]]  # [a][b] over x
    big_g: list[Ast]  # over (x,y) on the primal side, (x,p) on the dual
    big_f: list[Ast]
    big_g_supplied: bool
    big_f_supplied: bool


@dataclass
class ScenarioModel:
    """Validated scenario: parsed expressions plus sampling/tolerance policy."""

    name: str
    description: str
    mode: str
    m: int
    p: int
    r: int
    h: list[Ast]
    eta: list[Ast]
    rho: list[list[Ast]]  # [i][alpha]
    lstruct: list[list[list[Ast]]]  # [gamma][alpha][beta]
    lagrangian: Ast | None
    hamiltonian: Ast | None
    gamma: list[list[Ast]] | None  # [a][alpha]
    gammastar: list[list[Ast]] | None  # [b][alpha]
    dconn_e: DConnBlocks | None
    dconn_estar: DConnBlocks | None
    mech_e: MechanicsData | None
    mech_estar: MechanicsData | None
    sample_count: int
    sample_seed: int
    box: dict[str, tuple[float, float]]
    tolerance_default: float
    tolerances: dict[str, float]
    check_ids: list[str] | None
    source_bytes: bytes | None = None

    # coordinate names ------------------------------------------------- #

    @property
    def x_names(self) -> tuple[str, ...]:
        return tuple(f"x{i + 1}" for i in range(self.m))

    @property
    def y_names(self) -> tuple[str, ...]:
        return tuple(f"y{a + 1}" for a in range(self.r))

    @property
    def p_names(self) -> tuple[str, ...]:
        return tuple(f"p{a + 1}" for a in range(self.r))

    @property
    def chi_names(self) -> tuple[str, ...]:
        return tuple(f"chi{i + 1}" for i in range(self.m))

    def box_for(self, coord: str) -> tuple[float, float]:
        """Sampling interval for one coordinate (chi falls back to x)."""
        if coord in self.box:
            return self.box[coord]
        if coord.startswith("chi"):
            twin = "x" + coord[3:]
            if twin in self.box:
                return self.box[twin]
        return (-1.0, 1.0)

    def digest(self) -> str:
        data = self.source_bytes
        if data is None:
            data = self.canonical_text().encode("utf-8")
        return "sha256:" + hashlib.sha256(data).hexdigest()

    def canonical_text(self) -> str:
        """Deterministic serialization (used for digests of in-memory scenarios)."""
        from .dsl import pretty

        lines = [f"name={self.name}", f"mode={self.mode}",
                 f"dims={self.m},{self.p},{self.r}"]

        def emit(label: str, node: Ast | None) -> None:
            lines.append(f"{label}={'~' if node is None else pretty(node)}")

        for k, node in enumerate(self.h):
            emit(f"h.{k + 1}", node)
        for k, node in enumerate(self.eta):
            emit(f"eta.{k + 1}", node)
        for i, row in enumerate(self.rho):
            for al, node in enumerate(row):
                emit(f"rho.{i + 1}.{al + 1}", node)
        for g, plane in enumerate(self.lstruct):
            for a, row in enumerate(plane):
                for b, node in enumerate(row):
                    emit(f"Lstruct.{g + 1}.{a + 1}.{b + 1}", node)
        emit("L", self.lagrangian)
        emit("H", self.hamiltonian)
        for label, grid in (("Gamma", self.gamma), ("Gammastar", self.gammastar)):
            if grid is not None:
                for a, row in enumerate(grid):
                    for al, node in enumerate(row):
                        emit(f"{label}.{a + 1}.{al + 1}", node)
        for label, blocks in (("D", self.dconn_e), ("Ds", self.dconn_estar)):
            if blocks is not None:
                for bl_name in ("hc", "hv", "vc", "vv"):
                    grid3 = getattr(blocks, bl_name)
                    for i, plane in enumerate(grid3):
                        for j, row in enumerate(plane):
                            for k, node in enumerate(row):
                                emit(f"{label}.{bl_name}.{i+1}.{j+1}.{k+1}", node)
        for label, mech in (("mech", self.mech_e), ("mechs", self.mech_estar)):
            if mech is not None:
                for a, row in enumerate(mech.g):
                    for b, node in enumerate(row):
                        emit(f"{label}.g.{a+1}.{b+1}", node)
                for a, node in enumerate(mech.big_g):
                    emit(f"{label}.G.{a+1}", node)
                for a, node in enumerate(mech.big_f):
                    emit(f"{label}.F.{a+1}", node)
        lines.append(f"count={self.sample_count}")
        lines.append(f"seed={self.sample_seed}")
        for coord in sorted(self.box):
            lo, hi = self.box[coord]
            lines.append(f"box.{coord}={lo!r},{hi!r}")
        lines.append(f"tol={self.tolerance_default!r}")
        for key in sorted(self.tolerances):
            lines.append(f"tol.{key}={self.tolerances[key]!r}")
        if self.check_ids is not None:
            lines.append("ids=" + ",".join(self.check_ids))
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------- #
# parsing helpers


class _Builder:
    def __init__(self, sections: dict[str, dict[str, str]]):
        self.sections = sections
        self.diagnostics: list[str] = []
        self.consumed: dict[str, set[str]] = {name: set() for name in sections}

    def note(self, message: str) -> None:
        self.diagnostics.append(message)

    def raw(self, section: str, key: str) -> str | None:
        sec = self.sections.get(section)
        if sec is None or key not in sec:
            return None
        self.consumed[section].add(key)
        return sec[key]

    def text(self, section: str, key: str) -> str | None:
        value = self.raw(section, key)
        if value is None:
            return None
        unquoted = _unquote(value)
        if unquoted is None:
            self.note(f"[{section}] {key}: expected a quoted string, got {value!r}")
            return None
        return unquoted

    def number(self, section: str, key: str, default: float | None = None):
        value = self.raw(section, key)
        if value is None:
            return default
        try:
            return float(value)
        except ValueError:
            self.note(f"[{section}] {key}: expected a number, got {value!r}")
            return default

    def integer(self, section: str, key: str, default: int | None = None):
        value = self.raw(section, key)
        if value is None:
            return default
        try:
            out = int(value)
        except ValueError:
            self.note(f"[{section}] {key}: expected an integer, got {value!r}")
            return default
        return out

    def expr(
        self, section: str, key: str, allowed: tuple[str, ...]
    ) -> Ast | None:
        source = self.text(section, key)
        if source is None:
            return None
        try:
            node = parse(source)
        except ParseError as exc:
            self.note(f"[{section}] {key}: {exc}")
            return None
        extra = sorted(free_symbols(node) - set(allowed))
        if extra:
            self.note(
                f"[{section}] {key}: symbols {extra} not allowed here "
                f"(allowed: {', '.join(allowed)})"
            )
            return None
        return node

    def grid(
        self,
        section: str,
        prefix: str,
        shape: tuple[int, ...],
        allowed: tuple[str, ...],
        default: str = "0",
    ):
        """Read an indexed family ``prefix.i.j...`` into a nested list."""

        def build(level: int, indices: tuple[int, ...]):
            if level == len(shape):
                key = prefix + "".join(f".{k + 1}" for k in indices)
                node = self.expr(section, key, allowed)
                return node if node is not None else parse(default)
            return [
                build(level + 1, indices + (k,)) for k in range(shape[level])
            ]

        return build(0, ())

    def section_present(self, section: str) -> bool:
        return section in self.sections

    def check_unknown_keys(self) -> None:
        for section, keys in self.sections.items():
            if section not in _KNOWN_SECTIONS:
                continue
            for key in keys:
                if key not in self.consumed.get(section, set()):
                    self.note(f"[{section}] unknown key {key!r}")


_IDENTITY_DEFAULT = "0"


def parse_scenario_text(
    text: str, *, source_bytes: bytes | None = None
) -> ScenarioModel:
    """Parse and validate a scenario; raises :class:`ScenarioError` with the
    full diagnostic list on any failure."""
    diagnostics: list[str] = []
    sections = _read_sections(text, diagnostics)
    b = _Builder(sections)
    b.diagnostics = diagnostics

    name = b.text("meta", "name") or "unnamed"
    description = b.text("meta", "description") or ""

    mode = b.text("bundle", "mode") or "classical"
    if mode not in ("classical", "generalized"):
        b.note(f"[bundle] mode must be 'classical' or 'generalized', got {mode!r}")
        mode = "classical"
    m = b.integer("bundle", "m", None)
    p = b.integer("bundle", "p", None)
    r = b.integer("bundle", "r", None)
    for label, value in (("m", m), ("p", p), ("r", r)):
        if value is None:
            b.note(f"[bundle] missing dimension {label}")
        elif value < 1:
            b.note(f"[bundle] dimension {label} must be >= 1, got {value}")
    if diagnostics:
        # dimensions drive everything else; stop early if they are broken
        raise ScenarioError(diagnostics)
    assert m is not None and p is not None and r is not None

    x_names = tuple(f"x{i + 1}" for i in range(m))
    y_names = tuple(f"y{a + 1}" for a in range(r))
    p_names = tuple(f"p{a + 1}" for a in range(r))
    chi_names = tuple(f"chi{i + 1}" for i in range(m))
    xy = x_names + y_names
    xp = x_names + p_names

    # base maps (default: identity)
    if b.section_present("base_map"):
        h = [
            b.expr("base_map", f"h.{k + 1}", x_names) or parse(x_names[k])
            for k in range(m)
        ]
        eta = [
            b.expr("base_map", f"eta.{k + 1}", chi_names) or parse(chi_names[k])
            for k in range(m)
        ]
    else:
        h = [parse(x_names[k]) for k in range(m)]
        eta = [parse(chi_names[k]) for k in range(m)]

    # algebroid structure
    if b.section_present("algebroid"):
        rho = [
            [
                b.expr("algebroid", f"rho.{i + 1}.{al + 1}", chi_names)
                or parse("1" if (mode == "classical" and i == al) else "0")
                for al in range(p)
            ]
            for i in range(m)
        ]
        lstruct = b.grid("algebroid", "Lstruct", (p, p, p), chi_names)
    elif mode == "classical":
        rho = [
            [parse("1" if i == al else "0") for al in range(p)]
            for i in range(m)
        ]
        lstruct = [[[parse("0") for _ in range(p)] for _ in range(p)] for _ in range(p)]
    else:
        b.note(
            "[algebroid] section is required in generalized mode "
            "(anchor rho and structure functions Lstruct)"
        )
        rho = [[parse("0") for _ in range(p)] for _ in range(m)]
        lstruct = [[[parse("0") for _ in range(p)] for _ in range(p)] for _ in range(p)]

    lagrangian = b.expr("lagrangian", "L", xy) if b.section_present("lagrangian") else None
    hamiltonian = b.expr("hamiltonian", "H", xp) if b.section_present("hamiltonian") else None
    if lagrangian is None and hamiltonian is None:
        b.note("scenario defines neither a Lagrangian nor a Hamiltonian")

    gamma = None
    if b.section_present("connection_e"):
        gamma = [
            [
                b.expr("connection_e", f"Gamma.{a + 1}.{al + 1}", xy) or parse("0")
                for al in range(p)
            ]
            for a in range(r)
        ]
    gammastar = None
    if b.section_present("connection_estar"):
        gammastar = [
            [
                b.expr("connection_estar", f"Gammastar.{a + 1}.{al + 1}", xp)
                or parse("0")
                for al in range(p)
            ]
            for a in range(r)
        ]

    dconn_e = None
    if b.section_present("dconnection_e"):
        dconn_e = DConnBlocks(
            hc=b.grid("dconnection_e", "Hc", (p, p, p), xy),
            hv=b.grid("dconnection_e", "Hv", (r, r, p), xy),
            vc=b.grid("dconnection_e", "Vc", (p, p, r), xy),
            vv=b.grid("dconnection_e", "Vv", (r, r, r), xy),
        )
    dconn_estar = None
    if b.section_present("dconnection_estar"):
        dconn_estar = DConnBlocks(
            hc=b.grid("dconnection_estar", "Hcs", (p, p, p), xp),
            hv=b.grid("dconnection_estar", "Hvs", (r, r, p), xp),
            vc=b.grid("dconnection_estar", "Vcs", (p, r, p), xp),
            vv=b.grid("dconnection_estar", "Vvs", (r, r, r), xp),
        )
    if dconn_estar is not None and dconn_e is None:
        b.note(
            "[dconnection_estar] requires [dconnection_e] (the dual side is "
            "checked against, or derived from, the primal side)"
        )
    if (dconn_e is not None or dconn_estar is not None) and gamma is None and gammastar is None:
        b.note(
            "second-order connection blocks need an adapted frame: supply "
            "[connection_e] or [connection_estar]"
        )

    def read_mech(section: str, fiber_names: tuple[str, ...], g_key: str,
                  gg_key: str, ff_key: str) -> MechanicsData | None:
        if not b.section_present(section):
            return None
        if p != r:
            b.note(
                f"[{section}] mechanical structures require p == r "
                f"(got p={p}, r={r})"
            )
        g_grid = [
            [
                b.expr(section, f"{g_key}.{a + 1}.{bdx + 1}", x_names)
                or parse("1" if a == bdx else "0")
                for bdx in range(r)
            ]
            for a in range(r)
        ]
        domain = x_names + fiber_names
        gg_present = any(
            f"{gg_key}.{a + 1}" in sections.get(section, {}) for a in range(r)
        )
        ff_present = any(
            f"{ff_key}.{a + 1}" in sections.get(section, {}) for a in range(r)
        )
        big_g = [
            b.expr(section, f"{gg_key}.{a + 1}", domain) or parse("0")
            for a in range(r)
        ]
        big_f = [
            b.expr(section, f"{ff_key}.{a + 1}", domain) or parse("0")
            for a in range(r)
        ]
        return MechanicsData(g_grid, big_g, big_f, gg_present, ff_present)

    mech_e = read_mech("mechanics_e", y_names, "g", "G", "F")
    mech_estar = read_mech("mechanics_estar", p_names, "gstar", "Gstar", "Fstar")

    # sampling
    count = b.integer("sampling", "count", 200)
    seed = b.integer("sampling", "seed", 0)
    if count is None or count < 1:
        b.note("[sampling] count must be a positive integer")
        count = 1
    if seed is None or seed < 0:
        b.note("[sampling] seed must be a non-negative integer")
        seed = 0
    box: dict[str, tuple[float, float]] = {}
    all_coords = set(x_names) | set(y_names) | set(p_names) | set(chi_names)
    for key in list(sections.get("sampling", {})):
        if not key.startswith("box."):
            if key not in ("count", "seed"):
                pass  # reported by check_unknown_keys
            continue
        parts = key.split(".")
        if len(parts) != 3 or parts[2] not in ("lo", "hi"):
            b.note(f"[sampling] malformed box key {key!r} (use box.<coord>.lo/hi)")
            b.consumed["sampling"].add(key)
            continue
        coord = parts[1]
        if coord not in all_coords:
            b.note(f"[sampling] box for unknown coordinate {coord!r}")
            b.consumed["sampling"].add(key)
            continue
        value = b.number("sampling", key)
        if value is None:
            continue
        lo, hi = box.get(coord, (-1.0, 1.0))
        box[coord] = (value, hi) if parts[2] == "lo" else (lo, value)
    for coord, (lo, hi) in box.items():
        if not lo < hi:
            b.note(f"[sampling] box for {coord} is empty: [{lo}, {hi}]")

    # tolerances: keys verbatim (ID codes contain dots)
    tol_default = 1e-7
    tolerances: dict[str, float] = {}
    for key, value in sections.get("tolerances", {}).items():
        b.consumed["tolerances"].add(key)
        try:
            parsed = float(value)
        except ValueError:
            b.note(f"[tolerances] {key}: expected a number, got {value!r}")
            continue
        if parsed <= 0.0:
            b.note(f"[tolerances] {key}: tolerance must be positive")
            continue
        if key == "default":
            tol_default = parsed
        else:
            tolerances[key] = parsed

    check_ids: list[str] | None = None
    ids_text = b.text("checks", "ids")
    if ids_text is not None:
        check_ids = [tok.strip() for tok in ids_text.split(",") if tok.strip()]
        if not check_ids:
            b.note("[checks] ids list is empty")

    b.check_unknown_keys()
    if diagnostics:
        raise ScenarioError(diagnostics)

    return ScenarioModel(
        name=name,
        description=description,
        mode=mode,
        m=m,
        p=p,
        r=r,
        h=h,
        eta=eta,
        rho=rho,
        lstruct=lstruct,
        lagrangian=lagrangian,
        hamiltonian=hamiltonian,
        gamma=gamma,
        gammastar=gammastar,
        dconn_e=dconn_e,
        dconn_estar=dconn_estar,
        mech_e=mech_e,
        mech_estar=mech_estar,
        sample_count=count,
        sample_seed=seed,
        box=box,
        tolerance_default=tol_default,
        tolerances=tolerances,
        check_ids=check_ids,
        source_bytes=source_bytes,
    )


def load_scenario(path: str | Path) -> ScenarioModel:
    """Load a scenario file; ScenarioError carries all diagnostics."""
    data = Path(path).read_bytes()
    return parse_scenario_text(data.decode("utf-8"), source_bytes=data)
