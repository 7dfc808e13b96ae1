import json
import math

import numpy as np
import pytest
import yaml

from conftest import small_config
from rcequalizer.cli import main
from rcequalizer.harness import emit
from rcequalizer.harness.config import ConfigError, dump, from_dict, load
from rcequalizer.harness.presets import PRESET_NAMES, preset, scenario_presets
from rcequalizer.harness.runner import (
    RunResult, derive_seed, grid_cells, mark_best, run_cell, run_scan, run_single,
)


# -- configuration -----------------------------------------------------------

@pytest.mark.parametrize("doc, path", [
    ({"reservoir": {"betta": 0.2}}, "reservoir.betta"),
    ({"channel": {"schedule": {"kind": "sideways"}}}, "channel.schedule.kind"),
    ({"trainer": {"mode": "turbo"}}, "trainer.mode"),
    ({"trainer": {"k": 2.5}}, "trainer.k"),
    ({"reservoir": {"alpha": 1.2}}, "reservoir.alpha"),
    ({"channel": {"symbol_poly_a": [4, 2]}}, "channel.symbol_poly_a"),
    ({"scan": {"reservoir.gamma": [1, 2]}}, "reservoir.gamma"),
    ({"scan": {"reservoir.beta": []}}, "scan.reservoir.beta"),
    ({"trainer": {"mode": "full", "lambda_min": 0.01}}, "trainer"),
    ({"run": {"pipeline": "fixed"}, "reservoir": {"state_noise": 0.1}}, "reservoir.state_noise"),
    ({"plot": {"kind": "sweep"}}, "plot.x"),
    ({"variants": [{"trainer.bogus": 1}]}, "trainer.bogus"),
])
def test_config_errors_name_field(doc, path):
    with pytest.raises(ConfigError) as info:
        from_dict(doc)
    assert info.value.path == path


def test_yaml_round_trip(tmp_path):
    cfg = from_dict({"channel": {"snr_db": 20}, "scan": {"trainer.k": [10, 20]}})
    assert cfg.channel.snr_db == 20.0 and cfg.scan == {"trainer.k": [10, 20]}
    path = tmp_path / "c.yaml"
    path.write_text(dump(cfg))
    assert load(path).to_dict() == cfg.to_dict()
    inf = from_dict(yaml.safe_load("channel: {snr_db: .inf}"))
    assert math.isinf(inf.channel.snr_db)


def test_attenuation_overrides_alpha():
    cfg = from_dict({"reservoir": {"attenuation_db": 6.0}})
    assert cfg.reservoir.effective_alpha() == pytest.approx(0.501, abs=1e-3)


# -- runs ---------------------------------------------------------------------

def test_run_single_phases(small_cfg):
    r = run_single(small_cfg, 42)
    m = r.masks[0]
    assert m.test_symbols >= small_cfg.run.test_length - 5
    assert r.min_ser <= r.mean_ser <= r.max_ser
    assert 0 <= m.ser < 0.05


def test_degenerate_configs_give_chance_level():
    cfg = small_config(test_length=20_000)
    cfg.reservoir.beta = 0.0
    assert run_cell(cfg).mean_ser == pytest.approx(0.75, abs=0.02)
    cfg = small_config(test_length=20_000)
    cfg.trainer.lambda0 = 0.0
    assert run_cell(cfg).mean_ser == pytest.approx(0.75, abs=0.02)


def test_masks_share_stream_and_differ(small_cfg):
    r = run_cell(small_cfg)
    assert len({m.mask_seed for m in r.masks}) == 2
    assert r.min_ser <= r.mean_ser <= r.max_ser


def test_derive_seed_stable():
    assert derive_seed(1, "mask", 0) == derive_seed(1, "mask", 0)
    assert derive_seed(1, "mask", 0) != derive_seed(1, "mask", 1)
    assert 0 <= derive_seed(2**62, "x") < 2**63


def test_scan_counts_and_best_flag():
    cfg = small_config(masks=10)
    cfg.trainer.train_length = 500
    cfg.run.test_length = 500
    cfg.scan = {"reservoir.alpha": [0.45, 0.5, 0.55, 0.6], "reservoir.beta": [0.1, 0.2, 0.3]}
    cfg.run.workers = 4
    results = run_scan(cfg)
    assert len(results) == 12
    assert sum(len(r.masks) for r in results) == 120
    best = [r for r in results if r.best]
    assert len(best) == 1
    assert best[0].mean_ser == min(r.mean_ser for r in results)


def test_best_flag_ties_break_lexicographically():
    def fake(cell, mean):
        return RunResult("x", cell, {}, [], mean, mean, mean, 0.0, 0.0)
    rs = [fake({"a": 2, "b": 1}, 0.1), fake({"a": 1, "b": 3}, 0.1), fake({"a": 1, "b": 2}, 0.2),
          fake({"a": 3, "b": 0}, math.nan)]
    assert mark_best(rs) is rs[1]
    assert [r.best for r in rs] == [False, True, False, False]


def test_grid_cells_with_variants():
    cells = grid_cells({"x": [1, 2]}, [{"m": "a"}, {"m": "b"}])
    assert cells == [{"m": "a", "x": 1}, {"m": "a", "x": 2}, {"m": "b", "x": 1}, {"m": "b", "x": 2}]
    assert grid_cells({}, None) == [{}]


def test_scan_concurrency_is_deterministic():
    cfg = small_config()
    cfg.scan = {"reservoir.beta": [0.2, 0.3, 0.4]}
    serial = run_scan(cfg, workers=1)
    parallel = run_scan(cfg, workers=3)
    assert emit.results_json(serial) == emit.results_json(parallel)


# -- output files ---------------------------------------------------------------

def test_emit_is_byte_identical_and_round_trips(tmp_path):
    cfg = small_config()
    cfg.scan = {"trainer.k": [10, 20]}
    cfg.plot.kind = "sweep"
    cfg.plot.x = "trainer.k"
    paths_a = emit.emit_results(cfg, run_scan(cfg), tmp_path / "a")
    paths_b = emit.emit_results(cfg, run_scan(cfg), tmp_path / "b")
    for name in ("scan.csv", "results.json", "plot.csv"):
        assert paths_a[name].read_bytes() == paths_b[name].read_bytes()
    loaded = emit.load_results(tmp_path / "a")
    assert emit.results_json(loaded) == paths_a["results.json"].read_text()
    assert [r.wall_time for r in loaded] == json.loads(paths_a["timing.json"].read_text())["wall_time"]
    header = paths_a["scan.csv"].read_text().splitlines()[0].split(",")
    assert header == ["name", "trainer.k", "mean_ser", "min_ser", "max_ser", "masks", "noise_amplitude", "best"]


def test_json_round_trip_identity():
    r = run_cell(small_config())
    again = emit.parse_results(emit.results_json([r]), emit.timing_json([r]))[0]
    assert again == r


def test_fig4_plot_rows():
    cfg = preset("fig4")
    results = []
    for snr in cfg.scan["channel.snr_db"]:
        for mode in ("full", "simplified"):
            cell = {"trainer.mode": mode, "channel.snr_db": snr}
            results.append(RunResult("fig4", cell, cfg.to_dict(), [], 1 / (snr + 1), 0.0, 1.0, 0.0, 0.0))
    lines = emit.sweep_table(results, "channel.snr_db", "trainer.mode").splitlines()
    assert len(lines) == 8
    assert lines[0].startswith("snr_db,mean_ser,min_ser,max_ser,best_cell,simplified_mean_ser")
    assert lines[-1].startswith("inf,")


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        emit.emit_results(small_config(), [run_cell(small_config())], blocker / "sub")


# -- presets ------------------------------------------------------------------------

def test_presets_all_valid():
    names = set(scenario_presets())
    expected = {"fig4", "fig5", "fig7"} | {f"fig6{c}" for c in "abcdefgh"} | {f"fig9{c}" for c in "abcd"}
    assert names == expected == set(PRESET_NAMES)
    for name in names:
        assert preset(name).preset == name


def test_preset_contents():
    f7 = preset("fig7")
    assert f7.channel.schedule.kind == "switching"
    assert f7.channel.schedule.values == [1.0, 0.8, 0.6]
    assert f7.channel.schedule.interval == 266_000 and f7.trainer.watchdog
    f6 = preset("fig6a")
    s = f6.channel.schedule
    assert (s.kind, s.parameter, s.start_value, s.end_value) == ("monotonic", "p1", 1.0, 0.652)
    assert {"trainer.mode": "non-stationary", "trainer.lambda_min": 0.01, "trainer.train_length": None} in f6.variants
    for name in ("fig9a", "fig9b", "fig9c", "fig9d"):
        assert preset(name).run.masks == 10
    with pytest.raises(KeyError):
        preset("fig10")


# -- command line -------------------------------------------------------------------------

def test_cli_list_and_errors(tmp_path, capsys):
    assert main(["list-presets"]) == 0
    assert "fig7" in capsys.readouterr().out
    assert main(["preset", "nope"]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("reservoir: {betta: 1}\n")
    assert main(["run", str(bad)]) == 2
    assert "reservoir.betta" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.yaml")]) == 2
    ok = tmp_path / "ok.yaml"
    ok.write_text("name: x\n")
    assert main(["scan", str(ok)]) == 2


def test_cli_run_and_dump(tmp_path, capsys):
    cfg = small_config(masks=1)
    path = tmp_path / "c.yaml"
    path.write_text(dump(cfg))
    out = tmp_path / "out"
    assert main(["run", str(path), "--out", str(out), "--seed", "5", "--fixed"]) == 0
    written = json.loads((out / "results.json").read_text())["results"][0]
    assert written["config"]["seed"] == 5 and written["config"]["run"]["pipeline"] == "fixed"
    assert "mean SER" in capsys.readouterr().out
    assert main(["preset", "fig7", "--dump-config", "--paper-scale"]) == 0
    dumped = yaml.safe_load(capsys.readouterr().out)
    assert dumped["run"]["paper_scale"] is True and dumped["preset"] == "fig7"


def test_fig5_sweeps_have_interior_minima():
    cfg = preset("fig5")
    cfg.run.masks = 5
    results = run_scan(cfg)
    for key in ("reservoir.beta", "reservoir.attenuation_db"):
        curve = [r.mean_ser for r in results if key in r.cell]
        i = int(np.argmin(curve))
        assert 0 < i < len(curve) - 1, (key, curve)
        assert curve[0] > 3 * curve[i] and curve[-1] > 3 * curve[i]


def test_example_config_loads():
    from pathlib import Path

    cfg = load(Path(__file__).parent.parent / "configs" / "scan_example.yaml")
    assert len(grid_cells(cfg.scan, cfg.variants)) * cfg.run.masks == 120
