"""Result rows and report rendering (text table and stable JSON)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

__all__ = ["CheckRow", "Report", "STATUSES"]

STATUSES = ("PASS", "FAIL", "GATED", "SKIP", "ERROR")


@dataclass
class CheckRow:
    code: str
    summary: str
    status: str
    residual: float | None
    tolerance: float | None
    points: int
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "id": self.code,
            "equation": self.summary,
            "status": self.status,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "points": self.points,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CheckRow":
        return cls(
            code=data["id"],
            summary=data["equation"],
            status=data["status"],
            residual=data["residual"],
            tolerance=data["tolerance"],
            points=data["points"],
            note=data.get("note", ""),
        )


@dataclass
class Report:
    scenario: str
    digest: str
    mode: str
    dims: dict[str, int]
    count: int
    seed: int
    rows: list[CheckRow] = field(default_factory=list)
    banners: list[str] = field(default_factory=list)

    @property
    def counts(self) -> dict[str, int]:
        out = {status: 0 for status in STATUSES}
        for row in self.rows:
            out[row.status] = out.get(row.status, 0) + 1
        return out

    @property
    def exit_code(self) -> int:
        counts = self.counts
        return 1 if counts["FAIL"] or counts["ERROR"] else 0

    def row(self, code: str) -> CheckRow:
        for row in self.rows:
            if row.code == code:
                return row
        raise KeyError(code)

    # -- rendering -------------------------------------------------------- #

    def to_text(self) -> str:
        lines = []
        dims = " ".join(f"{k}={v}" for k, v in sorted(self.dims.items()))
        lines.append(f"scenario: {self.scenario}")
        lines.append(f"digest:   {self.digest}")
        lines.append(
            f"mode: {self.mode}   {dims}   samples={self.count} seed={self.seed}"
        )
        for banner in self.banners:
            lines.append(f"!! {banner}")
        lines.append("")
        code_w = max([len(r.code) for r in self.rows] + [5])
        head = (
            f"{'check':<{code_w}}  {'status':<6}  {'residual':>10}  "
            f"{'tol':>8}  {'pts':>4}  description"
        )
        lines.append(head)
        lines.append("-" * len(head))
        for r in self.rows:
            res = "-" if r.residual is None else f"{r.residual:.3e}"
            tol = "-" if r.tolerance is None else f"{r.tolerance:.1e}"
            desc = r.summary if not r.note else f"{r.summary} [{r.note}]"
            lines.append(
                f"{r.code:<{code_w}}  {r.status:<6}  {res:>10}  "
                f"{tol:>8}  {r.points:>4}  {desc}"
            )
        lines.append("-" * len(head))
        counts = self.counts
        tally = "  ".join(f"{k}={counts[k]}" for k in STATUSES if counts[k])
        lines.append(f"total: {len(self.rows)}  {tally}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "scenario": self.scenario,
            "digest": self.digest,
            "mode": self.mode,
            "dims": dict(sorted(self.dims.items())),
            "samples": self.count,
            "seed": self.seed,
            "banners": list(self.banners),
            "counts": {k: self.counts[k] for k in STATUSES},
            "checks": [row.to_dict() for row in self.rows],
        }
        return json.dumps(payload, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Report":
        data = json.loads(text)
        return cls(
            scenario=data["scenario"],
            digest=data["digest"],
            mode=data["mode"],
            dims=data["dims"],
            count=data["samples"],
            seed=data["seed"],
            rows=[CheckRow.from_dict(d) for d in data["checks"]],
            banners=list(data.get("banners", [])),
        )
