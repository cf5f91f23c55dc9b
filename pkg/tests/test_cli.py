import json
import math

import pytest

from scfox import cli, metrics, scenario
from scfox.scenario import ConfigError, load_config, parse_scenario, read_csv


def _write(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


SMOKE = {"name": "smoke-L1", "branches": [{"m": 2.0, "m_s": 5.0, "gamma_bar_db": 0.0}],
         "metric": "abep", "sweep": {"variable": "gamma_bar_db", "start": 0, "stop": 10,
                                      "step": 5},
         "method": "all", "params": {"rho": 1.0},
         "sim": {"samples": 50000, "seed": 4, "streams": 2}}


def test_run_all_methods_consistent(tmp_path):
    out = tmp_path / "out.csv"
    assert cli.main(["run", _write(tmp_path, SMOKE), "-o", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("# scenario smoke-L1")
    rows = read_csv(str(out))
    assert len(rows) == 9
    assert [r["method"] for r in rows[:3]] == ["fox-h", "quadrature", "monte-carlo"]
    for i in range(0, 9, 3):
        fox, quad, mc = rows[i:i + 3]
        assert fox["metric_value"] == pytest.approx(quad["metric_value"], rel=1e-9)
        assert abs(mc["metric_value"] - fox["metric_value"]) <= 5 * mc["error_estimate"]
    # 17 significant digits
    assert "0.10934261728239" in text


def test_output_is_byte_identical_without_timing(tmp_path):
    cfg = _write(tmp_path, SMOKE)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["--no-timing", "run", cfg, "-o", str(a)]) == 0
    assert cli.main(["run", cfg, "-o", str(b), "--no-timing"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_disagreement_gives_exit_1(tmp_path, monkeypatch):
    real = metrics.abep_quadrature

    def skewed(ch, rho=1.0, rtol=1e-12):
        est = real(ch, rho, rtol)
        return metrics.MetricEstimate(est.value * 1.01, est.abs_error, est.method)
    monkeypatch.setattr(scenario.metrics, "abep_quadrature", skewed)
    assert cli.main(["run", _write(tmp_path, SMOKE), "-o", str(tmp_path / "o.csv")]) == 1


def test_config_errors_exit_2(tmp_path, capsys):
    bad = dict(SMOKE, sweep={"variable": "gamma_bar_db", "start": 10, "stop": 0})
    assert cli.main(["run", _write(tmp_path, bad), "-o", str(tmp_path / "o.csv")]) == 2
    assert "sweep.stop" in capsys.readouterr().err
    bad = dict(SMOKE, metric="ber")
    assert cli.main(["run", _write(tmp_path, bad), "-o", str(tmp_path / "o.csv")]) == 2
    assert "'metric'" in capsys.readouterr().err
    (tmp_path / "broken.json").write_text("{not json")
    assert cli.main(["run", str(tmp_path / "broken.json"), "-o", str(tmp_path / "o.csv")]) == 2


def test_row_errors_do_not_abort(tmp_path):
    cfg = dict(SMOKE, metric="pdf", method="mc", params={},
               sweep={"variable": "gamma", "values": [0.5, 1.0]})
    out = tmp_path / "o.csv"
    assert cli.main(["run", _write(tmp_path, cfg), "-o", str(out)]) == 1
    rows = read_csv(str(out))
    assert len(rows) == 2 and all(r["error"] for r in rows)
    assert all(math.isnan(r["metric_value"]) for r in rows)


def test_config_values_win_over_flags(tmp_path):
    scs, _ = load_config(_write(tmp_path, SMOKE), {"samples": 2000, "seed": 9, "method": "fox-h"})
    assert scs[0].sim.samples == 50000 and scs[0].method == "all"
    cfg = {k: v for k, v in SMOKE.items() if k not in ("sim", "method")}
    scs, _ = load_config(_write(tmp_path, cfg), {"samples": 2000, "seed": 9, "method": "fox-h"})
    assert scs[0].sim.samples == 2000 and scs[0].sim.seed == 9 and scs[0].method == "fox-h"


def test_threads_precedence(tmp_path, monkeypatch):
    seen = []
    monkeypatch.setattr(cli, "run_scenario", lambda sc, threads: seen.append(threads) or [])
    monkeypatch.setenv("SCFOX_THREADS", "5")
    cfg = dict(SMOKE, method="fox-h")
    out = str(tmp_path / "o.csv")
    cli.main(["run", _write(tmp_path, cfg), "-o", out])
    cli.main(["run", _write(tmp_path, cfg), "-o", out, "--threads", "2"])
    cli.main(["run", _write(tmp_path, {"scenarios": [cfg], "threads": 3}), "-o", out,
              "--threads", "2"])
    assert seen == [5, 2, 3]


def test_parse_scenario_variants():
    base = {"name": "x", "branches": [[1.0, 5.0, 3.0], [2.0, 5.0, 0.0]], "metric": "adp",
            "sweep": {"variable": "pf", "log_start": -4, "log_stop": 0, "num": 5},
            "params": {"u": 3}, "complement": True}
    sc = parse_scenario(base)
    assert sc.L == 2 and len(sc.sweep_values) == 5 and sc.sweep_values[-1] == 1.0
    ch = sc.channel_at(10.0)
    assert ch.branches[0].gamma_bar == pytest.approx(10 ** 1.3)
    assert ch.branches[1].gamma_bar == pytest.approx(10.0)
    with pytest.raises(ConfigError, match="params.lambda"):
        parse_scenario(dict(base, sweep={"variable": "gamma_bar_db", "values": [0]}))
    with pytest.raises(ConfigError, match="colour"):
        parse_scenario(dict(base, colour="red"))
    with pytest.raises(ConfigError, match=r"branches\[0\].m"):
        parse_scenario(dict(base, branches=[[-1.0, 5.0, 0.0]]))
    with pytest.raises(ConfigError, match="complement"):
        parse_scenario(dict(base, metric="abep", params={},
                            sweep={"variable": "gamma_bar_db", "values": [0]}))
    with pytest.raises(ConfigError, match="sweep.values"):
        parse_scenario(dict(base, sweep={"variable": "pf", "values": [2.0]}))


def test_reproduce_figure_two(tmp_path):
    assert cli.main(["reproduce-fig", "2", "-o", str(tmp_path), "--threads", "4"]) == 0
    path = tmp_path / "fig2.csv"
    text = path.read_text()
    assert "normalised average capacity" in text
    assert "m = [1.0, 1.5, 2.0]" in text
    rows = read_csv(str(path))
    names = {r["scenario"] for r in rows}
    assert len(names) == 9
    light = [r["metric_value"] for r in rows if r["scenario"] == "fig2-light-L3"]
    assert light == sorted(light)


def test_parser_rejects_unknown_figure():
    with pytest.raises(SystemExit) as info:
        cli.main(["reproduce-fig", "5", "-o", "x"])
    assert info.value.code == 2
