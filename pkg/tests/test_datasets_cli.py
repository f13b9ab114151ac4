import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mespin import datasets
from mespin.cli import main
from mespin.experiments import ConfigError, ExperimentConfig, expand

SMALL_SWITCHPROB = {
    "switchprob": {"voltage": [0.0, 0.5], "alpha_me_over_c": [1.0], "burn_in": 2e-10},
    "n_trials": 100,
}


def run_cli(tmp_path, experiment, doc=None, *extra, name="out"):
    out = tmp_path / name
    argv = [experiment, "--out", str(out), "--workers", "1", *extra]
    if doc is not None:
        cfg = tmp_path / f"{name}.json"
        cfg.write_text(json.dumps(doc))
        argv += ["--config", str(cfg)]
    return main(argv), out


# -- datasets -----------------------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.floats(allow_nan=False, allow_infinity=False),
            st.floats(allow_nan=False, allow_infinity=False),
            st.floats(0, 1), st.floats(0, 1), st.floats(0, 1),
            st.integers(1, 10**6),
        ),
        max_size=8,
    )
)
def test_csv_round_trip_is_exact(rows):
    cols = datasets.columns("switchprob")
    dicts = [dict(zip(cols, r)) for r in rows]
    assert datasets.loads("switchprob", datasets.dumps("switchprob", dicts)) == dicts


def test_csv_rejects_wrong_header_and_extra_columns(tmp_path):
    with pytest.raises(ValueError):
        datasets.loads("trajectory", "t,mx,my,mz\n0,0,0,1\n")
    with pytest.raises(KeyError):
        datasets.dumps("trajectory", [{"t_s": 0, "mx": 0, "my": 0, "mz": 1, "extra": 2}])
    p = datasets.write_csv(tmp_path / "t.csv", "trajectory", [{"t_s": 0.0, "mx": 0.0, "my": 0.0, "mz": 1.0}])
    assert datasets.read_csv(p, "trajectory") == [{"t_s": 0.0, "mx": 0.0, "my": 0.0, "mz": 1.0}]


# -- config -------------------------------------------------------------------------


def test_expand_forms():
    assert expand(0.3) == [0.3]
    assert expand([1, 2]) == [1.0, 2.0]
    assert expand({"from": 0, "to": 1, "steps": 3}) == [0.0, 0.5, 1.0]
    assert expand({"from": 1, "to": 100, "steps": 3, "scale": "log"}) == pytest.approx([1, 10, 100])
    for bad in ({"from": 0, "to": 1}, {"from": 0, "to": 1, "steps": 2, "scale": "cubic"}, "x",
                {"from": 0, "to": 1, "steps": 2, "bogus": 1}):
        with pytest.raises(ConfigError):
            expand(bad)


@pytest.mark.parametrize(
    "doc",
    [
        {"magnet": {"Ms": 1e6, "bogus": 1}},
        {"nonsense": 1},
        {"tmr": {"t_mgo": 1.0}},
        {"sim": {"seed": 3}},
        {"magnet": {"alpha": -0.1}},
        {"n_trials": 0},
        {"experiment": "cam-demo"},
    ],
)
def test_bad_configs_rejected(doc):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict("tmr-sweep", doc)


def test_cli_config_error_exit_code(tmp_path, capsys):
    code, out = run_cli(tmp_path, "tmr-sweep", {"stack": {"t_MgO": 1e-9, "typo": 1}})
    assert code == 2
    assert "typo" in capsys.readouterr().err
    assert not (out / "tmr_sweep.csv").exists()


# -- CLI runs -------------------------------------------------------------------------


@pytest.mark.parametrize(
    "experiment,doc,files",
    [
        ("trajectory", {"trajectory": {"pulse": 5e-10}}, ["trajectory.csv"]),
        ("switchprob", SMALL_SWITCHPROB, ["switchprob.csv"]),
        ("tmr-sweep", None, ["tmr_sweep.csv"]),
        ("dualport-demo", None, ["dualport_demo.csv"]),
        ("cam-demo", None, ["cam_demo.csv"]),
        ("memory-report", None, ["memory_report.csv", "dualport_demo.csv", "cam_demo.csv"]),
    ],
)
def test_reruns_are_byte_identical(tmp_path, experiment, doc, files):
    code_a, a = run_cli(tmp_path, experiment, doc, "--seed", "7", name="a")
    code_b, b = run_cli(tmp_path, experiment, doc, "--seed", "7", name="b")
    assert code_a == code_b
    for f in files + ["summary.txt"]:
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_seed_changes_stochastic_output(tmp_path):
    _, a = run_cli(tmp_path, "trajectory", {"trajectory": {"pulse": 3e-10}}, "--seed", "1", name="a")
    _, b = run_cli(tmp_path, "trajectory", {"trajectory": {"pulse": 3e-10}}, "--seed", "2", name="b")
    assert (a / "trajectory.csv").read_bytes() != (b / "trajectory.csv").read_bytes()


def test_env_seed_used_when_no_flag(tmp_path, monkeypatch):
    doc = {"trajectory": {"pulse": 3e-10}}
    monkeypatch.setenv("MESPIN_SEED", "11")
    _, env = run_cli(tmp_path, "trajectory", doc, name="env")
    monkeypatch.delenv("MESPIN_SEED")
    _, flag = run_cli(tmp_path, "trajectory", doc, "--seed", "11", name="flag")
    _, other = run_cli(tmp_path, "trajectory", doc, "--seed", "12", name="other")
    assert (env / "trajectory.csv").read_bytes() == (flag / "trajectory.csv").read_bytes()
    assert (env / "trajectory.csv").read_bytes() != (other / "trajectory.csv").read_bytes()


def test_flag_seed_overrides_config_seed(tmp_path):
    doc = {"trajectory": {"pulse": 3e-10}, "seed": 5}
    _, cfg_seed = run_cli(tmp_path, "trajectory", doc, name="c")
    _, flag = run_cli(tmp_path, "trajectory", doc, "--seed", "5", name="f")
    _, over = run_cli(tmp_path, "trajectory", doc, "--seed", "6", name="o")
    assert (cfg_seed / "trajectory.csv").read_bytes() == (flag / "trajectory.csv").read_bytes()
    assert (cfg_seed / "trajectory.csv").read_bytes() != (over / "trajectory.csv").read_bytes()


def test_switchprob_output_schema(tmp_path):
    code, out = run_cli(tmp_path, "switchprob", SMALL_SWITCHPROB, "--seed", "3")
    rows = datasets.read_csv(out / "switchprob.csv", "switchprob")
    assert [r["v_volts"] for r in rows] == [0.0, 0.5]
    assert all(r["n_trials"] == 100 and r["ci_low"] <= r["p_switch"] <= r["ci_high"] for r in rows)
    assert rows[0]["p_switch"] < rows[1]["p_switch"]


def test_default_demos_pass(tmp_path):
    for exp in ("tmr-sweep", "dualport-demo", "cam-demo", "memory-report"):
        code, out = run_cli(tmp_path, exp, name=exp)
        assert code == 0, (out / "summary.txt").read_text()


def test_port_conflict_config_fails(tmp_path):
    doc = {"array": {"ops": [{"op": "simultaneous", "write_row": 2, "bits": "1111", "read_row": 2}]}}
    code, out = run_cli(tmp_path, "dualport-demo", doc)
    assert code == 1
    assert "FAIL" in (out / "summary.txt").read_text()


def test_thicker_oxide_halves_reported_write_energy(tmp_path):
    _, base = run_cli(tmp_path, "memory-report", name="base")
    _, thick = run_cli(tmp_path, "memory-report", {"capacitor": {"t_ME": 2e-9}}, name="thick")

    def write_e(out):
        rows = datasets.read_csv(out / "memory_report.csv", "memory-report")
        return next(r["measured"] for r in rows if r["check"] == "write_energy_fJ_per_bit")

    assert write_e(thick) == pytest.approx(write_e(base) / 2, rel=1e-12)
