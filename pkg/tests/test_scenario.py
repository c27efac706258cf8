"""Scenario parsing: diagnostics, defaults, digests, per-check options."""

from __future__ import annotations

import pytest

from legendre_dual.scenario import (
    ScenarioError,
    load_scenario,
    parse_scenario_text,
)

MINIMAL = """
[meta]
name = "minimal"
description = "Smallest valid scenario."

[bundle]
mode = "classical"
m = 1
p = 1
r = 1

[lagrangian]
L = "y1^2/2"
"""


def test_minimal_scenario_parses_with_defaults():
    model = parse_scenario_text(MINIMAL)
    assert model.name == "minimal"
    assert model.mode == "classical"
    assert (model.m, model.p, model.r) == (1, 1, 1)
    assert model.hamiltonian is None
    assert model.gamma is None and model.gammastar is None
    assert model.dconn_e is None and model.dconn_estar is None
    assert model.mech_e is None and model.mech_estar is None
    assert model.sample_count == 200
    assert model.sample_seed == 0
    assert model.tolerance_default == 1e-7
    assert model.check_ids is None


def test_classical_rho_defaults_to_kronecker_delta():
    # Unspecified anchor entries default to the identity pattern in
    # classical mode — even when an [algebroid] section is present.
    model = parse_scenario_text(
        MINIMAL.replace("[lagrangian]", "[algebroid]\nLstruct.1.1.1 = \"0\"\n\n[lagrangian]")
    )
    from legendre_dual.dsl import Num

    assert model.rho[0][0] == Num(1.0)


def test_explicit_zero_overrides_rho_default():
    text = MINIMAL.replace(
        "[lagrangian]", '[algebroid]\nrho.1.1 = "0"\n\n[lagrangian]'
    )
    model = parse_scenario_text(text)
    from legendre_dual.dsl import Num

    assert model.rho[0][0] == Num(0.0)


def test_generalized_mode_requires_algebroid_section():
    text = MINIMAL.replace('mode = "classical"', 'mode = "generalized"')
    with pytest.raises(ScenarioError) as err:
        parse_scenario_text(text)
    assert "[algebroid] section is required in generalized mode" in str(err.value)


def test_unquoted_expression_is_diagnosed():
    text = MINIMAL.replace('L = "y1^2/2"', "L = y1^2/2")
    with pytest.raises(ScenarioError) as err:
        parse_scenario_text(text)
    assert "expected a quoted string" in str(err.value)


def test_missing_potential_is_diagnosed():
    text = MINIMAL.replace('[lagrangian]\nL = "y1^2/2"', "")
    with pytest.raises(ScenarioError) as err:
        parse_scenario_text(text)
    assert "neither a Lagrangian nor a Hamiltonian" in str(err.value)


def test_diagnostics_are_aggregated_not_first_only():
    text = MINIMAL.replace(
        'L = "y1^2/2"', 'L = y1^2/2\nbogus = "1"'
    )
    with pytest.raises(ScenarioError) as err:
        parse_scenario_text(text)
    message = str(err.value)
    assert "expected a quoted string" in message
    assert "unknown key 'bogus'" in message


def test_scenario_error_is_value_error():
    assert issubclass(ScenarioError, ValueError)


def test_unknown_section_and_key_are_diagnosed():
    text = MINIMAL + '\n[nonsense]\nfoo = "1"\n'
    with pytest.raises(ScenarioError) as err:
        parse_scenario_text(text)
    assert "unknown section [nonsense]" in str(err.value)

    text = MINIMAL.replace('L = "y1^2/2"', 'L = "y1^2/2"\nbogus = "1"')
    with pytest.raises(ScenarioError) as err:
        parse_scenario_text(text)
    assert "unknown key 'bogus'" in str(err.value)


def test_box_for_falls_back_to_default_and_twin():
    text = MINIMAL + (
        "\n[sampling]\n"
        "box.y1.lo = 0.5\nbox.y1.hi = 2.0\n"
        "box.x1.lo = -2\nbox.x1.hi = -1\n"
    )
    model = parse_scenario_text(text)
    assert model.box_for("y1") == (0.5, 2.0)
    assert model.box_for("x1") == (-2.0, -1.0)
    # chi coordinates reuse the x interval when not given their own.
    assert model.box_for("chi1") == (-2.0, -1.0)
    assert model.box_for("p1") == (-1.0, 1.0)


def test_digest_prefers_source_bytes_and_is_stable():
    model_a = parse_scenario_text(MINIMAL, source_bytes=MINIMAL.encode())
    model_b = parse_scenario_text(MINIMAL, source_bytes=MINIMAL.encode())
    assert model_a.digest() == model_b.digest()
    assert model_a.digest().startswith("sha256:")

    # Without source bytes the canonical serialization is hashed instead;
    # reformatting whitespace must not change that digest.
    noisy = MINIMAL.replace("L = ", "L   =   ")
    assert (
        parse_scenario_text(MINIMAL).digest()
        == parse_scenario_text(noisy).digest()
    )
    # ... but it differs from the raw-bytes digest of the original text.
    assert parse_scenario_text(MINIMAL).digest() != model_a.digest()


def test_check_ids_and_tolerances_are_recorded_verbatim():
    text = MINIMAL + (
        '\n[checks]\nids = "ID-3.6, ID-3.7"\n'
        "\n[tolerances]\ndefault = 1e-9\nID-3.6 = 1e-10\n"
    )
    model = parse_scenario_text(text)
    assert model.check_ids == ["ID-3.6", "ID-3.7"]
    assert model.tolerance_default == 1e-9
    assert model.tolerances == {"ID-3.6": 1e-10}


def test_load_scenario_reads_file_and_keeps_bytes(tmp_path):
    path = tmp_path / "case.scn"
    path.write_text(MINIMAL)
    model = load_scenario(path)
    assert model.name == "minimal"
    assert model.source_bytes == MINIMAL.encode()


def test_mechanics_requires_square_morphism():
    text = MINIMAL.replace("p = 1", "p = 2").replace(
        "[lagrangian]",
        '[mechanics_e]\ng.1.1 = "1"\n\n[lagrangian]',
    )
    with pytest.raises(ScenarioError):
        parse_scenario_text(text)
