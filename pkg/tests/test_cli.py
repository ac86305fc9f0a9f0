import json
import os

import pytest

from flowlab import SCENARIO_NAMES, load_config
from flowlab.cli import build_parser, default_config_text, main

TINY_RATES = """
[scenario]
name = rates

[grid]
lo = -3.14159265358979
period = 6.28318530717959
resolution = 2048
extension = periodic

[profile]
profile = weierstrass
alpha = 0.6
levels = 9
lacunarity = 2.0
amplitude = 1.0

[rates]
s = 0.6
p = 1.0
epsilons = 0.25, 0.125, 0.0625
conv_band = 0.3, 0.9
blowup_band = -0.7, -0.1
r2_min = 0.9

[seeds]
"""


def test_parser_has_all_subcommands():
    parser = build_parser()
    subs = next(
        a for a in parser._actions if isinstance(a, type(parser._subparsers._group_actions[0]))
    )
    names = set(subs.choices)
    assert names == set(SCENARIO_NAMES) | {"suite"}
    assert len(SCENARIO_NAMES) == 8


def test_default_configs_exist_and_name_their_scenario():
    for name in SCENARIO_NAMES:
        text = default_config_text(name)
        cfg = load_config(text=text)
        assert cfg.scenario == name


def test_tiny_rates_run_passes(tmp_path, capsys):
    cfg_path = tmp_path / "rates.ini"
    cfg_path.write_text(TINY_RATES)
    out = tmp_path / "out"
    code = main(["rates", "--config", str(cfg_path), "--out", str(out)])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines and all(l.startswith("[pass]") for l in lines)
    assert (out / "report.json").exists()
    assert (out / "config_echo.ini").exists()
    assert (out / "report_meta.json").exists()
    payload = json.loads((out / "report.json").read_text())
    assert payload["scenario"] == "rates"
    assert payload["passed"] is True


def test_csv_format_and_no_figures(tmp_path):
    cfg_path = tmp_path / "rates.ini"
    cfg_path.write_text(TINY_RATES)
    out = tmp_path / "out"
    code = main([
        "rates", "--config", str(cfg_path), "--out", str(out),
        "--format", "csv", "--no-figures",
    ])
    assert code == 0
    files = os.listdir(out)
    assert "verdicts.csv" in files
    assert not any(f.endswith(".png") for f in files)
    assert not any(f == "report.json" for f in files)


def test_figures_rendered_by_default(tmp_path):
    cfg_path = tmp_path / "rates.ini"
    cfg_path.write_text(TINY_RATES)
    out = tmp_path / "out"
    assert main(["rates", "--config", str(cfg_path), "--out", str(out)]) == 0
    assert any(f.endswith(".png") for f in os.listdir(out))


def test_scenario_subcommand_mismatch_is_config_error(tmp_path, capsys):
    cfg_path = tmp_path / "rates.ini"
    cfg_path.write_text(TINY_RATES)
    code = main(["stability", "--config", str(cfg_path), "--out", str(tmp_path / "x")])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_missing_config_path(tmp_path, capsys):
    code = main(["rates", "--config", str(tmp_path / "absent.ini"),
                 "--out", str(tmp_path / "x")])
    assert code == 2


def test_failing_verdict_exits_one(tmp_path, capsys):
    # an impossible convergence band must flip the verdict, not crash
    text = TINY_RATES.replace("conv_band = 0.3, 0.9", "conv_band = 5.0, 6.0")
    cfg_path = tmp_path / "rates.ini"
    cfg_path.write_text(text)
    out = tmp_path / "out"
    code = main(["rates", "--config", str(cfg_path), "--out", str(out)])
    assert code == 1
    assert "[FAIL]" in capsys.readouterr().out
    payload = json.loads((out / "report.json").read_text())
    assert payload["passed"] is False


def test_seed_override_accepted(tmp_path):
    cfg_path = tmp_path / "rates.ini"
    cfg_path.write_text(TINY_RATES)
    out = tmp_path / "out"
    assert main(["rates", "--config", str(cfg_path), "--out", str(out),
                 "--seed", "123", "--threads", "1"]) == 0
