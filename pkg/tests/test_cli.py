import csv
import io
import json
import pathlib

import pytest
from click.testing import CliRunner
from hypothesis import given, settings, strategies as st

from stochrates import ConfigError
from stochrates.cli import main
from stochrates.config import dumps_config, load_config, loads_config

CONFIGS = sorted((pathlib.Path(__file__).parent.parent / "configs").glob("*.toml"))


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


def csv_rows(text):
    lines = text.splitlines()
    assert lines[0].endswith("/v1") and lines[0].startswith("# schema=")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def write(tmp_path, text, name="exp.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


COUNTER = """
[model]
name = "counterexample"

[rate]
theorem = "general"
auto = true
epsilon = [0.5]
pairs = [[0.1, 0.5]]

[mc]
trials = 4000
horizon = {horizon}

[validate]
checks = ["mean", "ville"]
{extra}
"""


# -- config -----------------------------------------------------------------------

@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.stem)
def test_shipped_configs_round_trip(path):
    cfg = load_config(path)
    again = loads_config(dumps_config(cfg))
    assert again == cfg
    assert dumps_config(again) == dumps_config(cfg)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(1e-3, 10), min_size=1, max_size=4),
       st.integers(2, 10 ** 6), st.integers(0, 2 ** 64 - 1))
def test_round_trip_property(eps, trials, seed):
    text = ("[model]\nname = \"counterexample\"\n[rate]\ntheorem = \"general\"\nauto = true\n"
            f"epsilon = {eps!r}\n[mc]\ntrials = {trials}\nmaster_seed = {seed}\n")
    cfg = loads_config(text)
    assert loads_config(dumps_config(cfg)) == cfg


@pytest.mark.parametrize("text,key", [
    ("[model]\nname = \"nope\"\n[rate]\ntheorem = \"rs\"\n", "[model] name"),
    ("[model]\nname = \"counterexample\"\n[rate]\ntheorem = \"general\"\nauto = true\n", "epsilon"),
    ("[model]\nname = \"counterexample\"\n[rate]\ntheorem = \"general\"\nauto = true\n"
     "epsilon = [-1.0]\n", "epsilon"),
    ("[model]\nname = \"counterexample\"\n[rate]\ntheorem = \"general\"\nauto = true\n"
     "epsilon = [0.1]\n[mc]\nwobble = 1\n", "wobble"),
    ("[model]\nname = \"counterexample\"\n[rate]\ntheorem = \"magic\"\nepsilon = [0.1]\n",
     "theorem"),
])
def test_invalid_configs_name_the_key(text, key):
    with pytest.raises(ConfigError, match=key.replace("[", r"\[").replace("]", r"\]")):
        loads_config(text)


# -- catalog and rate ----------------------------------------------------------------

def test_catalog():
    res = run("catalog")
    assert res.exit_code == 0
    assert "power:q" in res.output and "(0,1]" in res.output
    assert "rm" in res.output and "strong-monotone" in res.output


def test_rate_explicit_rs():
    res = run("rate", "--config", CONFIGS[[p.stem for p in CONFIGS].index("rs_explicit")])
    assert res.exit_code == 0, res.output
    rows = csv_rows(res.stdout)
    assert [int(r["index"]) for r in rows if r["kind"] == "rate"] == [4, 10, 20]
    asr = [r for r in rows if r["kind"] == "as-rate"][0]
    # lambda = 0.5, eps = 0.1 with f = id reduces to rho(0.05)
    assert int(asr["index"]) == 40
    assert all(r["provenance"].startswith("rs(") for r in rows)


def test_rate_missing_theta_exits_2(tmp_path):
    text = "\n".join(line for line in CONFIGS[[p.stem for p in CONFIGS].index(
        "rs_explicit")].read_text().splitlines() if not line.startswith("theta"))
    res = run("rate", "--config", write(tmp_path, text))
    assert res.exit_code == 2
    assert "theta" in res.output


def test_rate_json_mirrors_csv(tmp_path):
    cfg = CONFIGS[[p.stem for p in CONFIGS].index("rs_explicit")]
    res = run("rate", "--config", cfg, "--out", tmp_path, "--format", "both")
    assert res.exit_code == 0
    rows = csv_rows((tmp_path / "rate.csv").read_text())
    doc = json.loads((tmp_path / "rate.json").read_text())
    assert doc["schema"] == "rate/v1"
    assert [int(r["index"]) for r in rows] == [r["index"] for r in doc["rows"]]
    assert loads_config((tmp_path / "config.toml").read_text()) == load_config(cfg)


def test_rate_missing_file_exits_2(tmp_path):
    assert run("rate", "--config", tmp_path / "absent.toml").exit_code == 2


# -- validate -----------------------------------------------------------------------

def test_validate_passes(tmp_path):
    res = run("validate", "--config", write(tmp_path, COUNTER.format(horizon=40, extra="")))
    assert res.exit_code == 0, res.output
    assert "0 failed" in res.output


def test_validate_scaled_bound_fails(tmp_path):
    text = COUNTER.format(horizon=40, extra="bound_scale = 0.001")
    res = run("validate", "--config", write(tmp_path, text))
    assert res.exit_code == 1


def test_validate_infeasible_warns(tmp_path):
    res = run("validate", "--config", write(tmp_path, COUNTER.format(horizon=3, extra="")))
    assert res.exit_code == 0, res.output
    assert "warning" in res.stderr
    rows = csv_rows(res.stdout)
    assert any(r["status"] == "infeasible" for r in rows)


def test_validate_seed_override(tmp_path):
    p = write(tmp_path, COUNTER.format(horizon=40, extra=""))
    a, b = run("validate", "--config", p, "--seed", 7), run("validate", "--config", p, "--seed", 8)
    assert a.stdout != b.stdout
    assert run("validate", "--config", p, "--seed", 7).stdout == a.stdout


# -- trajectory ---------------------------------------------------------------------

def test_trajectory_counterexample_rows(tmp_path):
    res = run("trajectory", "--config", write(tmp_path, COUNTER.format(horizon=12, extra="")))
    assert res.exit_code == 0
    rows = csv_rows(res.stdout)
    assert len(rows) == 13
    assert list(rows[0]) == ["trial", "n", "F", "dist_map"]


def test_trajectory_km_geometric():
    cfg = CONFIGS[[p.stem for p in CONFIGS].index("km_trajectory")]
    res = run("trajectory", "--config", cfg, "--count", 2)
    rows = csv_rows(res.stdout)
    assert len(rows) == 26
    for r in rows:
        assert float(r["dist_map"]) == pytest.approx(4.0 * 0.5 ** int(r["n"]))


def test_trajectory_rejects_huge_output():
    cfg = CONFIGS[[p.stem for p in CONFIGS].index("km_fejer")]
    res = run("trajectory", "--config", cfg)
    assert res.exit_code == 2 and "horizon" in res.output


def test_trajectory_files_identical(tmp_path):
    cfg = write(tmp_path, COUNTER.format(horizon=30, extra=""))
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        res = run("trajectory", "--config", cfg, "--out", d, "--count", 3, "--format", "both",
                  "--seed", 11)
        assert res.exit_code == 0, res.output
    for name in ("trajectory.csv", "trajectory.json", "config.toml"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
