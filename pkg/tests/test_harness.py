import json
import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from conftest import los_config, rayleigh_config
from irs_lab import harness
from irs_lab.cli import main
from irs_lab.exceptions import ConfigError
from irs_lab.harness import (CSV_HEADER, SweepResult, SweepRow, SweepSpec, emit_csv, emit_svg_plot,
                             read_csv, recipe_names, run_sweep)

SVG = "{http://www.w3.org/2000/svg}"


def small_spec(**kw):
    base = dict(variable="P_I_dBm", values=[0, 10, 20], methods=["TLL-MMSE", "ZF-baseline"],
                base_config=rayleigh_config(), trials=4, master_seed=3)
    base.update(kw)
    return SweepSpec(**base)


def test_sweep_deterministic_across_runs():
    a = run_sweep(small_spec(), workers=1)
    b = run_sweep(small_spec(), workers=1)
    assert a.to_csv_text() == b.to_csv_text()


def test_sweep_independent_of_worker_count(monkeypatch):
    monkeypatch.setattr(harness.os, "cpu_count", lambda: 4)
    monkeypatch.delenv("IRS_LAB_THREADS", raising=False)
    serial = run_sweep(small_spec(), workers=1)
    parallel = run_sweep(small_spec(), workers=3)
    assert serial == parallel


def test_worker_cap(monkeypatch):
    monkeypatch.setattr(harness.os, "cpu_count", lambda: 8)
    monkeypatch.setenv("IRS_LAB_THREADS", "2")
    assert harness._worker_count(None) == 2 and harness._worker_count(1) == 1
    monkeypatch.setenv("IRS_LAB_THREADS", "two")
    with pytest.raises(ConfigError):
        harness._worker_count(None)


def test_sweep_rows_and_grid_order():
    res = run_sweep(small_spec(), workers=1)
    assert len(res.rows) == 3 * 2 * 2
    assert [r.value for r in res.rows[::4]] == [0, 10, 20]
    assert {(r.method, r.irs) for r in res.rows} == {(m, a) for m in ("TLL-MMSE", "ZF-baseline")
                                                      for a in ("with", "without")}
    # the arm without the surface does not depend on P_I
    off = [r.mean_sum_rate for r in res.rows if r.irs == "without" and r.method == "TLL-MMSE"]
    assert max(off) == min(off)
    assert not res.errors


def test_csv_format_and_round_trip(tmp_path):
    res = run_sweep(small_spec(values=[10, 20]), workers=1)
    p = emit_csv(res, tmp_path / "out.csv")
    raw = p.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode("utf-8").splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    for line in lines[1:]:
        for cell in line.split(",")[4:]:
            digits = re.sub(r"[-.]|e[-+]\d+$", "", cell).lstrip("0")
            assert len(digits) <= 6
    assert read_csv(p) == res


def test_empty_result_csv(tmp_path):
    res = SweepResult()
    p = emit_csv(res, tmp_path / "empty.csv")
    assert p.read_text() == ",".join(CSV_HEADER) + "\n"
    assert read_csv(p).rows == []
    with pytest.raises(ConfigError):
        emit_svg_plot(res, tmp_path / "empty.svg")


def test_failed_cells_are_nan_with_error():
    cfg = los_config(K=2, M=2)
    res = run_sweep(SweepSpec(variable="P_I_dBm", values=[0], methods=["NSP-MTP-MRP"], base_config=cfg,
                              trials=1), workers=1)
    bad = res.cell(0, "NSP-MTP-MRP", "with")
    assert np.isnan(bad.mean_sum_rate)
    assert res.errors and "InfeasibleConfigurationError" in res.errors[0]["error"]


def test_stderr_shrinks_with_trials():
    se = []
    for n in (25, 100, 400):
        res = run_sweep(small_spec(values=[20], methods=["TLL-MMSE"], trials=n), workers=1)
        se.append(res.cell(20, "TLL-MMSE", "with").stderr)
    assert se[0] / se[1] == pytest.approx(2.0, rel=0.35)
    assert se[1] / se[2] == pytest.approx(2.0, rel=0.35)


def test_svg_single_point(tmp_path):
    res = SweepResult(rows=[SweepRow("N", 16, "SO-MMSE", "with", 3.0, 0.0, 10.0)], variable="N")
    root = ET.parse(emit_svg_plot(res, tmp_path / "one.svg")).getroot()
    assert root.tag == SVG + "svg" and root.get("version") == "1.1"
    assert len(root.findall(f".//{SVG}polyline")) == 1


def svg_series(path):
    root = ET.parse(path).getroot()
    out = {}
    for pl in root.iter(SVG + "polyline"):
        pts = [tuple(map(float, p.split(","))) for p in pl.get("points").split()]
        out[pl.get("data-series")] = pts
    legend = [t.text for t in root.iter(SVG + "text") if t.get("class") == "legend"]
    return out, legend


def test_svg_two_series_parse_back(tmp_path):
    rows = []
    for v, y in [(0, 1.0), (10, 2.0), (20, 4.0)]:
        rows += [SweepRow("P_I_dBm", v, "TLL-MMSE", "with", y, 0.1, 0.0),
                 SweepRow("P_I_dBm", v, "TLL-MMSE", "without", 0.5, 0.1, 0.0)]
    series, legend = svg_series(emit_svg_plot(SweepResult(rows=rows, variable="P_I_dBm"), tmp_path / "p.svg"))
    assert set(series) == {"TLL-MMSE|with", "TLL-MMSE|without"}
    assert legend == ["TLL-MMSE (with IRS)", "TLL-MMSE (without IRS)"]
    pts = series["TLL-MMSE|with"]
    xs, ys = zip(*pts)
    assert np.all(np.diff(xs) > 0)
    # SVG y grows downward: increasing rates plot as decreasing y
    assert np.all(np.diff(ys) < 0)


def test_recipe_structure():
    assert {"tll_irs_power", "nsp_irs_position", "so_vs_nsp_irs_size"} <= set(recipe_names())
    spec = SweepSpec.load("tll_irs_power")
    labels = [label for label, _ in spec.series_configs()]
    assert labels == ["K=2", "K=4"]
    assert [c.K for _, c in spec.series_configs()] == [2, 4]
    assert spec.trials == 200
    res = run_sweep(SweepSpec(**{**spec.__dict__, "values": [30], "trials": 2}), workers=1)
    assert {(r.method, r.irs) for r in res.rows} == {(f"TLL-MMSE K={k}", a) for k in (2, 4)
                                                      for a in ("with", "without")}


def test_los_spec_defaults_to_single_trial():
    assert SweepSpec.load("nsp_irs_power").trials == 1


@pytest.mark.parametrize("bad", [
    dict(variable="M"),
    dict(values=[]),
    dict(values=[0, 20, 10]),
    dict(methods=["MRT"]),
    dict(trials=0),
    dict(variable="N", values=[3, 6]),
    dict(leakage="none"),
    dict(series=[{"K": 3}]),
])
def test_spec_validation(bad):
    with pytest.raises(ConfigError):
        small_spec(**bad)


def test_spec_from_dict_rejects_unknown(tmp_path):
    d = {"variable": "P_T_dBm", "values": [0], "methods": ["TLL-MMSE"],
         "base_config": rayleigh_config().to_dict(), "bogus": 1}
    with pytest.raises(ConfigError):
        SweepSpec.from_dict(d)
    with pytest.raises(ConfigError):
        SweepSpec.load(str(tmp_path / "missing.json"))


# ---- command line ----------------------------------------------------------------------------

def test_cli_oc_angle(capsys):
    assert main(["oc-angle", "--theta", "60", "--i", "1", "--m", "16"]) == 0
    assert capsys.readouterr().out.strip() == "51.3178"
    assert main(["oc-angle", "--theta", "60", "--i", "16", "--m", "16"]) == 1
    assert "no visible-region solution" in capsys.readouterr().err


def test_cli_usage_errors(capsys):
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["oc-angle", "--theta", "x", "--i", "1", "--m", "4"]) == 1


def test_cli_dof_check(tmp_path, capsys):
    cfg = rayleigh_config(M=16, N=16, Q=[2], regime={"name": "rank-deficient", "I": [1, 1], "J": [1, 1]})
    p = tmp_path / "cfg.json"
    p.write_text(cfg.to_json())
    assert main(["dof-check", "--config", str(p), "--trials", "20"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["upper_bound"] == 2 * rep["no_irs_rank"] == 4
    assert rep["effective_rank"] == 4
    assert main(["dof-check", "--config", str(tmp_path / "nope.json")]) == 1
    p.write_text("{not json")
    assert main(["dof-check", "--config", str(p)]) == 1


def test_cli_sweep_outputs(tmp_path, capsys):
    spec = small_spec(values=[10, 20], methods=["TLL-MMSE"], trials=2)
    d = {k: getattr(spec, k) for k in ("variable", "values", "methods", "trials", "master_seed")}
    d["base_config"] = spec.base_config.to_dict()
    sp = tmp_path / "mini.json"
    sp.write_text(json.dumps(d))
    out = tmp_path / "out"
    assert main(["sweep", "--spec", str(sp), "--out", str(out), "--dump-solution", "--dump-power"]) == 0
    assert (out / "mini.csv").exists() and (out / "mini.svg").exists()
    sols = json.loads((out / "mini.solutions.json").read_text())
    power = json.loads((out / "mini.power.json").read_text())
    assert len(sols) == len(power) == 4
    assert sols[0]["solution"]["method"] == "TLL-MMSE"
    assert len(power[0]["average_receive_power"]) == 2
    assert read_csv(out / "mini.csv") == run_sweep(spec, workers=1)


def test_cli_sweep_bad_spec(tmp_path):
    sp = tmp_path / "bad.json"
    sp.write_text(json.dumps({"variable": "Z", "values": [1], "methods": ["TLL-MMSE"],
                              "base_config": rayleigh_config().to_dict()}))
    assert main(["sweep", "--spec", str(sp), "--out", str(tmp_path)]) == 1
