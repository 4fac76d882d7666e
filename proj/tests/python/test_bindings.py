import json
import math

import numpy as np
import pytest

import alphalogics as al


@pytest.fixture(scope="module")
def panel():
    return al.Panel.planted(dates=200, instruments=60, seed=7)


SPLITS = {
    "train": ("2020-01-01", "2020-05-19"),
    "validation": ("2020-05-20", "2020-07-14"),
    "test": ("2020-07-15", "2020-10-06"),
}


def test_panel_shape_and_fields(panel):
    assert panel.shape == (200, 60)
    assert panel.dates[0] == "2020-01-01"
    assert panel.instruments[0] == "SYN001"
    close = panel.field("close")
    assert close.shape == (200, 60)
    assert np.all(panel.field("high") >= close)


def test_panel_csv_round_trip(panel, tmp_path, data_dir):
    path = tmp_path / "p.csv"
    panel.to_csv(path)
    assert path.read_bytes() == (data_dir / "run" / "panel.csv").read_bytes()
    back = al.Panel.from_csv(path, min_days=100)
    np.testing.assert_array_equal(back.field("volume"), panel.field("volume"))


def test_expression_helpers():
    assert al.canonical("rank( close )") == "RANK(close)"
    assert al.operators("RANK(TS_MEAN(close, 5))") == ["RANK", "TS_MEAN"]
    assert al.variables("close / open") == ["close", "open"]
    names = {op["name"] for op in al.catalogue()}
    assert {"RANK", "TS_CORR", "DELTA"} <= names
    with pytest.raises(al.ParseError):
        al.canonical("RANK(")
    with pytest.raises(al.Error):
        al.canonical("NOT_AN_OP(close)")


def test_evaluate_rank_bounds(panel):
    v = al.evaluate("RANK(close)", panel)
    assert v.shape == (200, 60)
    assert np.nanmin(v) >= 0.0 and np.nanmax(v) <= 1.0
    lagged = al.evaluate("DELAY(close, 3)", panel)
    assert np.isnan(lagged[:3]).all()
    np.testing.assert_array_equal(lagged[3:], panel.field("close")[:-3])


def test_metrics():
    assert al.max_drawdown([1.0, 1.2, 0.9, 1.1]) == -0.25
    s = np.array([[1.0, 2.0, 3.0, 4.0]])
    r = np.array([[0.1, 0.2, 0.3, 0.4]])
    assert al.daily_ic(s, r) == pytest.approx([1.0])
    assert al.daily_ic(s, -r) == pytest.approx([-1.0])


def test_compile_and_check(data_dir):
    fixtures = json.loads((data_dir / "fixtures" / "worked_example.json").read_text())["fixtures"]
    h = next(f for f in fixtures if f["agent"] == "LogicToFinanceConstraintAgent")["responses"][0]["H_struct"]
    gamma = al.compile_logic(h)
    assert gamma == al.compile_logic(h)
    assert gamma["direction"]["d"] == -1
    assert al.check("-TS_CORR(RANK(open), RANK(volume), 10)", gamma)["ok"]
    with pytest.raises(al.SchemaError):
        al.check("RANK(close)", {"allowed_variables": []})


def test_backtest_guards_the_test_split(panel):
    rep = al.backtest("-(RANK(DELTA(close, 1)) - RANK(DELTA(volume, 1)))", panel, SPLITS)
    assert set(rep) == {"expression", "train", "validation"}
    assert rep["validation"]["ic"] > 0.05
    final = al.backtest("RANK(close)", panel, SPLITS, strategy={"top_k": 5, "n_drop": 1}, final=True)
    assert "test" in final
    assert math.isfinite(final["test"]["ir"])


def test_run_and_resume(data_dir, tmp_path):
    cfg = data_dir / "run" / "config.json"
    out = tmp_path / "run"
    s = al.run(cfg, output_dir=out)
    assert s["rounds"] == 3
    assert s.get("test") is None
    with pytest.raises(al.PreconditionError):
        al.run(cfg, output_dir=out)
    final = al.run(cfg, output_dir=out, resume=True, final=True)
    assert final["best_logic"] == s["best_logic"]
    assert final["test"]["ic"] > 0.05
