from __future__ import annotations

import math
from dataclasses import replace
from pathlib import Path

import pytest
from click.testing import CliRunner
from hypothesis import given, settings
from hypothesis import strategies as st

from qedneg import acceptance
from qedneg.cli import (
    COLUMNS,
    RUN_CONFIGS,
    RUN_METHODS,
    RunSpec,
    ScenarioError,
    Sweep,
    format_scenario,
    main,
    parse_scenario_file,
    rows_to_csv,
    run_spec,
    write_atomic,
)
from qedneg.functionals import GAMMAC_MODES

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def test_parse_point_scenario():
    spec = parse_scenario_file("config = linear_delayed\nL_over_cT = 0.1  # bump size\nD_over_cT = 5\n")
    assert spec == RunSpec("linear_delayed", 0.1, 5.0)
    assert spec.sweep is None


def test_parse_sweep_scenario():
    text = """
# linear sweep
config = linear_simultaneous
L_over_cT = 0.1
sweep = D_over_cT 0.15 1.0 40
method = surface, nonrel
gammac_mode = dipole
"""
    spec = parse_scenario_file(text)
    assert spec.sweep == Sweep("D_over_cT", 0.15, 1.0, 40)
    assert spec.methods == ("surface", "nonrel")
    assert len(spec.points()) == 40
    assert spec.points()[0] == (0.1, 0.15)


def test_log_sweep():
    spec = parse_scenario_file("config = parallel_delayed\nD_over_cT = 5\nsweep = L_over_cT 0.01 0.1 3 log\n")
    assert [L for L, _ in spec.points()] == pytest.approx([0.01, math.sqrt(0.001), 0.1])


@pytest.mark.parametrize(
    "text, where",
    [
        ("config = hexagonal\n", "line 1, column 10"),
        ("config = linear_delayed\nD = 5\n", "line 2, column 1"),
        ("config = linear_delayed\n  config = linear_delayed\n", "line 2, column 3"),
        ("config = linear_delayed\nL_over_cT = abc\n", "line 2, column 13"),
        ("config = linear_delayed\nL_over_cT 0.1\n", "line 2"),
        ("config = linear_delayed\nmethod = surface, magic\n", "line 2"),
        ("config = linear_delayed\nsweep = D_over_cT 1 2\n", "line 2"),
        ("config = linear_delayed\nsweep = D_over_cT 1 2 3.5\n", "line 2"),
        ("L_over_cT = 0.1\n", "missing required key"),
    ],
)
def test_parse_errors_carry_position(text, where):
    with pytest.raises(ScenarioError, match=where):
        parse_scenario_file(text)


def test_unknown_key_message_names_key():
    with pytest.raises(ScenarioError, match="unknown key 'D'"):
        parse_scenario_file("config = linear_delayed\nD = 5\n")
    with pytest.raises(ScenarioError, match="duplicate key 'config'"):
        parse_scenario_file("config = linear_delayed\nconfig = linear_delayed\n")


positive = st.floats(1e-3, 50.0, allow_nan=False)


@st.composite
def run_specs(draw):
    sweep = None
    if draw(st.booleans()):
        var = draw(st.sampled_from(["D_over_cT", "L_over_cT"]))
        sweep = Sweep(var, draw(positive), draw(positive), draw(st.integers(2, 500)), draw(st.booleans()))
    methods = tuple(draw(st.lists(st.sampled_from(RUN_METHODS), min_size=1, max_size=4, unique=True)))
    return RunSpec(
        config=draw(st.sampled_from(RUN_CONFIGS)),
        L_over_cT=draw(positive),
        D_over_cT=draw(positive),
        alpha=draw(st.floats(1e-6, 1.0)),
        methods=methods,
        gammac_mode=draw(st.sampled_from(GAMMAC_MODES)),
        sweep=sweep,
        out=draw(st.one_of(st.none(), st.sampled_from(["out.csv", "runs/a.csv"]))),
    )


@settings(max_examples=200, deadline=None)
@given(run_specs())
def test_scenario_round_trip(spec):
    assert parse_scenario_file(format_scenario(spec)) == spec


@pytest.mark.parametrize("name", sorted(acceptance.SWEEP_SPECS))
def test_shipped_scenarios_match_sweep_specs(name):
    text = (SCENARIOS / f"{name}.scn").read_text(encoding="utf-8")
    assert parse_scenario_file(text) == acceptance.SWEEP_SPECS[name]


def _two_point(spec: RunSpec) -> RunSpec:
    sw = spec.sweep
    return replace(spec, sweep=Sweep(sw.variable, sw.start, sw.stop, 2, sw.log_scale))


def test_sweep_rows_and_header():
    spec = _two_point(acceptance.SWEEP_SPECS["coulomb_near"])
    lines = rows_to_csv(run_spec(spec)).splitlines()
    assert lines[0] == ",".join(COLUMNS)
    assert len(lines) == 3
    assert all(len(line.split(",")) == len(COLUMNS) for line in lines)


def test_sweep_csv_is_byte_identical(tmp_path):
    scn = tmp_path / "s.scn"
    scn.write_text(format_scenario(_two_point(acceptance.SWEEP_SPECS["linear_far"])), encoding="utf-8")
    runner = CliRunner()
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        res = runner.invoke(main, ["sweep", str(scn), "--out", str(out)])
        assert res.exit_code == 0, res.output
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert not list(tmp_path.glob("*.partial"))


def test_far_sweep_is_separable():
    rows = run_spec(_two_point(acceptance.SWEEP_SPECS["linear_far"]))
    assert all(r.lambda_min > 0 and r.negativity == 0.0 for r in rows)


def test_coulomb_sweep_positive_and_decreasing():
    spec = replace(acceptance.SWEEP_SPECS["coulomb_near"], sweep=Sweep("D_over_cT", 0.25, 1.0, 5))
    neg = [r.negativity for r in run_spec(spec)]
    assert all(n > 0 for n in neg)
    assert all(a > b for a, b in zip(neg, neg[1:]))


def test_write_atomic(tmp_path):
    path = tmp_path / "x.csv"
    write_atomic(str(path), "a,b\n")
    assert path.read_text() == "a,b\n"
    assert not (tmp_path / "x.csv.partial").exists()
    with pytest.raises(OSError):
        write_atomic(str(tmp_path / "missing" / "y.csv"), "a\n")
    assert list(tmp_path.iterdir()) == [path]


def test_compute_command():
    res = CliRunner().invoke(main, ["compute", "--config", "linear_simultaneous", "--L", "0.1", "--D", "0.5", "--method", "coulomb"])
    assert res.exit_code == 0, res.output
    assert "negativity" in res.output and "coulomb" in res.output


def test_sweep_to_stdout(tmp_path):
    scn = tmp_path / "c.scn"
    scn.write_text("config = linear_simultaneous\nL_over_cT = 0.1\nmethod = coulomb\nsweep = D_over_cT 0.3 0.6 2\n")
    res = CliRunner().invoke(main, ["sweep", str(scn)])
    assert res.exit_code == 0
    assert len(res.output.splitlines()) == 3


@pytest.mark.parametrize(
    "args",
    [
        ["compute"],
        ["compute", "--config", "linear_delayed", "--L", "0.1"],
        ["compute", "--config", "hexagonal", "--L", "0.1", "--D", "1"],
        ["sweep", "--config", "linear_delayed", "--L", "0.1", "--D", "5"],
        ["verify", "--regime", "nonsense"],
        ["verify", "--tol-override", "3"],
    ],
)
def test_usage_errors_exit_2(args):
    assert CliRunner().invoke(main, args).exit_code == 2


def test_bad_scenario_file_exits_2(tmp_path):
    scn = tmp_path / "bad.scn"
    scn.write_text("config = hexagonal\n")
    res = CliRunner().invoke(main, ["compute", str(scn)])
    assert res.exit_code == 2
    assert "line 1" in res.output


def test_verify_list_and_selection():
    runner = CliRunner()
    res = runner.invoke(main, ["verify", "--list"])
    assert res.exit_code == 0
    assert len(res.output.splitlines()) == len(acceptance.CRITERIA)
    res = runner.invoke(main, ["verify", "--regime", "coulomb"])
    assert res.exit_code == 0, res.output
    assert "pass" in res.output and "FAIL" not in res.output


def test_verify_detects_perturbation():
    res = CliRunner().invoke(main, ["verify", "--regime", "coulomb", "--perturb", "0.05"])
    assert res.exit_code == 1
    assert "FAIL" in res.output


def test_regimes_command():
    res = CliRunner().invoke(main, ["regimes", "--L", "0.1", "--D", "5"])
    assert res.exit_code == 0
    assert "linear" in res.output and "parallel" in res.output
