import json

import pytest
import yaml

from stargraph.cli import main
from stargraph.config import parse_text, spec_from_dict, validate_config
from stargraph.errors import ParseError, PhysicalInconsistency, SchemaViolation
from stargraph.recipes import RECIPES, Check


def _write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_minimal_config_fills_defaults(tmp_path):
    spec = validate_config(_write(tmp_path, "recipe: theorem-2-1\n"))
    assert spec.graph == {"n_edges": 3, "edge_length": 400.0, "points_per_edge": 16384}
    assert spec.evolution["p"] == 0.5 and spec.evolution["t_end"] == 150.0
    echoed = yaml.safe_load(spec.echo())
    assert echoed["recipe"] == "theorem-2-1" and echoed["seed"] == 0


def test_user_values_override_defaults(tmp_path):
    spec = validate_config(_write(tmp_path, "recipe: theorem-2-1\nevolution:\n  p: 0.3\n"))
    assert spec.evolution["p"] == 0.3 and spec.evolution["dt"] == 5e-3


def test_negative_p_is_a_schema_violation(tmp_path):
    with pytest.raises(SchemaViolation) as info:
        validate_config(_write(tmp_path, "recipe: theorem-2-1\nevolution:\n  p: -0.5\n"))
    assert "line 3" in info.value.errors[0]


def test_delta_with_zero_alpha(tmp_path):
    text = "recipe: spectral-suite\nvertex:\n  kind: delta\n  alpha: 0\n"
    with pytest.raises(PhysicalInconsistency) as info:
        validate_config(_write(tmp_path, text))
    msg = info.value.errors[0]
    assert "line 4" in msg and "alpha != 0" in msg


@pytest.mark.parametrize("text,exc,needle", [
    ("recipe: [unclosed\n", ParseError, "line"),
    ("", ParseError, "empty"),
    ("- a\n- b\n", ParseError, "mapping"),
    ("recipe: nope\n", SchemaViolation, "unknown recipe"),
    ("seed: 1\n", SchemaViolation, "missing required key"),
    ("recipe: lemma-3-3\ngraph:\n  n_edge: 3\n", SchemaViolation, "line 3: graph.n_edge"),
    ("recipe: lemma-3-3\ngraph:\n  n_edges: three\n", SchemaViolation, "expected integer"),
    ("recipe: appendix-A\nevolution:\n  dt: 0.05\n", PhysicalInconsistency, "exceeds"),
    ("recipe: appendix-A\nevolution:\n  t_end: 1.0025\n", PhysicalInconsistency, "multiple of dt"),
    ("recipe: spectral-suite\nvertex:\n  kind: delta\n  alpha: 1\nevolution:\n  backend: kirchhoff-kernel\n",
     PhysicalInconsistency, "backend"),
    ("recipe: spectral-suite\nvertex:\n  kind: kirchhoff\n  n: 4\n", PhysicalInconsistency, "n=4"),
])
def test_invalid_configs(tmp_path, text, exc, needle):
    with pytest.raises(exc) as info:
        validate_config(_write(tmp_path, text))
    assert needle in str(info.value)


def test_parse_records_lines():
    data, lines = parse_text("recipe: a\ngraph:\n  n_edges: 3\n")
    assert lines[("graph", "n_edges")] == 3


def test_output_root_override(monkeypatch):
    spec = spec_from_dict({"recipe": "spectral-suite", "output": "rel/dir"})
    monkeypatch.setenv("STARGRAPH_OUTPUT_ROOT", "/tmp/root")
    assert spec.output_dir() == "/tmp/root/rel/dir"


def test_check_relations():
    assert Check("a", "i", 1.0, 2.0, "<=").passed
    assert not Check("a", "i", 3.0, 2.0, "<=").passed
    assert Check("a", "i", 0.7, (0.6, 0.9), "in").passed
    assert Check("a", "i", 2, 2, "==").passed
    with pytest.raises(ValueError):
        Check("a", "i", 1, 1, "~")


def test_every_recipe_has_a_valid_default_config():
    for name in RECIPES:
        spec = spec_from_dict({"recipe": name})
        assert spec.recipe == name


def test_cli_list_and_validate(tmp_path, capsys):
    assert main(["list-recipes"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in RECIPES)
    good = _write(tmp_path, "recipe: spectral-suite\n")
    assert main(["validate", str(good)]) == 0
    assert "recipe: spectral-suite" in capsys.readouterr().out
    bad = _write(tmp_path, "recipe: spectral-suite\nvertex: {kind: delta, alpha: 0}\n", "bad.yaml")
    assert main(["validate", str(bad)]) == 2
    assert "PhysicalInconsistency" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.yaml")]) == 2


def test_cli_run_writes_results(tmp_path):
    cfg = _write(tmp_path, "recipe: spectral-suite\nvertex: {kind: kirchhoff}\ndiagnostics: {sweep: false}\n")
    out = tmp_path / "out"
    assert main(["run", str(cfg), "-o", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["recipe"] == "spectral-suite"
    assert "summary.json" in manifest["files"]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["passed"] and all("invariant" in c and "tolerance" in c for c in summary["checks"])
    assert (out / "config-echo.yaml").exists()


def test_cli_reports_failures_with_exit_one(tmp_path):
    # a negative tolerance forces one failed check
    cfg = _write(tmp_path, "recipe: spectral-suite\ndiagnostics: {sweep: false, unitarity_tol: -1.0}\n")
    assert main(["run", str(cfg), "-o", str(tmp_path / "o")]) == 1
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert not summary["passed"] and summary["n_failed"] == 1
