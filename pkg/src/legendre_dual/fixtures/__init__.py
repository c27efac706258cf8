"""Bundled example scenarios, loadable by name."""

from __future__ import annotations

from importlib import resources

from ..scenario import ScenarioModel, parse_scenario_text

__all__ = ["fixture_names", "fixture_text", "fixture_model"]


def fixture_names() -> list[str]:
    names = []
    for entry in resources.files(__name__).iterdir():
        if entry.name.endswith(".scn"):
            names.append(entry.name[: -len(".scn")])
    return sorted(names)


def fixture_text(name: str) -> str:
    candidate = resources.files(__name__) / f"{name}.scn"
    if not candidate.is_file():
        raise KeyError(
            f"unknown fixture {name!r}; available: {', '.join(fixture_names())}"
        )
    return candidate.read_text(encoding="utf-8")


def fixture_model(name: str) -> ScenarioModel:
    text = fixture_text(name)
    return parse_scenario_text(text, source_bytes=text.encode("utf-8"))
