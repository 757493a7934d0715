import csv
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from phasecov import config as cfgmod
from phasecov.cli import main, write_csv

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(tmp_path, *args, text=None):
    argv = list(args)
    if text is not None:
        p = tmp_path / "run.toml"
        p.write_text(text)
        argv = ["--config", str(p)] + argv
    return main(argv + ["--out", str(tmp_path / "out")])


def cfg(name):
    return str(CONFIGS / name)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


BASE = """schema_version = 1
[model]
kind = "constant"
gamma1 = 1.0
gamma2 = 1.0
gamma3 = 1.0
[time]
t_max = 2.0
steps = 200
"""


# trajectory -----------------------------------------------------------------------

def test_trajectory_eternal(tmp_path, capsys):
    assert main(["--config", cfg("eternal.toml"), "--out", str(tmp_path), "trajectory"]) == 0
    out = capsys.readouterr().out
    assert "class: Unital" in out
    for line in out.splitlines()[2:14]:
        cols = line.split()
        assert "none" in cols or "n/a" in cols
        assert not any(c.startswith("[") for c in cols)
    rows = read_rows(tmp_path / "trajectory.csv")
    assert rows[0] == ["t", "p1", "re_alpha", "im_alpha", "gamma1", "gamma2", "gamma3", "omega",
                       "Gamma", "GammaTilde", "G", "Omega", "choi_min_eig"]
    assert len(rows) == 10002
    ind = read_rows(tmp_path / "indicator_trace_distance_xy.csv")
    assert ind[0] == ["t", "trace_distance_xy", "d_dt", "detected"]
    assert all(r[3] == "0" for r in ind[1:])


def test_trajectory_constant_rates_monotone(tmp_path):
    assert run(tmp_path, "trajectory", text=BASE) == 0
    out = tmp_path / "out"
    for name in ("trace_distance_xy", "trace_distance_z", "bloch_volume", "l1"):
        vals = np.array([float(r[1]) for r in read_rows(out / f"indicator_{name}.csv")[1:]])
        assert np.all(np.diff(vals) <= 0)


def test_trajectory_wide_layout(tmp_path):
    text = BASE + '[outputs]\nlayout = "wide"\n'
    assert run(tmp_path, "trajectory", text=text) == 0
    header = read_rows(tmp_path / "out" / "indicators.csv")[0]
    assert header[:4] == ["t", "trace_distance_xy", "trace_distance_xy_d_dt",
                          "trace_distance_xy_detected"]
    assert not list((tmp_path / "out").glob("indicator_*.csv"))


def test_trajectory_pole_exits_2(tmp_path, capsys):
    text = """schema_version = 1
[model]
kind = "phenomenological"
R = 4.0
s = 1.0
[time]
t_max = 10.0
steps = 10000
"""
    assert run(tmp_path, "trajectory", text=text) == 2
    assert "pole at t=1.46057828" in capsys.readouterr().err


def test_trajectory_non_cp_warns_or_fails(tmp_path, capsys):
    text = BASE.replace("gamma3 = 1.0", "gamma3 = -1.0")
    assert run(tmp_path, "trajectory", text=text) == 0
    assert "not completely positive" in capsys.readouterr().err
    assert run(tmp_path, "trajectory", "--strict", text=text) == 3


def test_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["--config", cfg("general.toml"), "--out", str(d), "trajectory"]) == 0
    files = sorted(p.name for p in a.iterdir())
    assert files
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()
    raw = (a / "trajectory.csv").read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")


def test_csv_formatting(tmp_path):
    p = tmp_path / "x.csv"
    write_csv(p, ["a", "b"], [np.array([0.1, -0.0]), np.array([True, False])])
    assert p.read_text() == "a,b\n0.10000000000000001,1\n0,0\n"


# classify -------------------------------------------------------------------------

def test_classify_unital(tmp_path, capsys):
    text = BASE.replace("gamma1 = 1.0\ngamma2 = 1.0", "gamma1 = 2.0\ngamma2 = 2.0")
    assert run(tmp_path, "classify", text=text) == 0
    out = capsys.readouterr().out
    assert "Unital (kappa=1.000000)" in out
    assert "purity1" in out


def test_classify_phenomenological(tmp_path, capsys):
    text = """schema_version = 1
[model]
kind = "phenomenological"
R = 0.3
N = 1.0
s = 1.0
"""
    assert run(tmp_path, "classify", text=text) == 0
    out = capsys.readouterr().out
    assert "Commutative (kappa = gamma1/gamma2 = 0.5, relabeled)" in out
    assert "N/(N+1) = 0.5" in out


def test_classify_general(tmp_path, capsys):
    assert main(["--config", cfg("general.toml"), "classify"]) == 0
    out = capsys.readouterr().out
    assert "class: General" in out
    assert "applicable indicators: trace1, trace2, bloch, l1" in out


# regions --------------------------------------------------------------------------

def test_regions_full_grid(tmp_path, capsys):
    text = """schema_version = 1
[sweep]
gamma_prime_range = [-5.0, 5.0]
gamma3_range = [-5.0, 5.0]
resolution = 201
"""
    assert run(tmp_path, "regions", "--threads", "2", text=text) == 0
    rows = read_rows(tmp_path / "out" / "regions.csv")
    assert len(rows) == 40402
    head = rows[0]
    assert head[:5] == ["gamma_prime", "gamma3", "cond_trace1", "cond_trace2", "cond_bloch"]
    data = np.array(rows[1:], dtype=float)
    col = {h: data[:, i] for i, h in enumerate(head)}
    bloch, t1, t2 = (col[k] == 1 for k in ("cond_bloch", "cond_trace1", "cond_trace2"))
    assert not np.any(bloch & ~(t1 | t2))
    assert not (tmp_path / "out" / "overlay.csv").exists()


def test_regions_overlay_weak_coupling(tmp_path, capsys):
    assert main(["--config", cfg("weak_coupling.toml"), "--out", str(tmp_path), "regions"]) == 0
    rows = read_rows(tmp_path / "overlay.csv")
    assert rows[0][:3] == ["t", "gamma3", "gamma_prime"]
    gp = np.array([float(r[2]) for r in rows[1:]])
    assert np.all(gp >= 0.0)


def test_regions_overlay_strong_coupling(tmp_path, capsys):
    assert main(["--config", cfg("strong_coupling.toml"), "--out", str(tmp_path), "regions"]) == 0
    gp = np.array([float(r[2]) for r in read_rows(tmp_path / "overlay.csv")[1:]])
    assert gp.min() < 0.0 < gp.max()
    assert "gamma' < 0 on: [" in capsys.readouterr().out


# verify ---------------------------------------------------------------------------

def test_verify_eternal(capsys):
    assert main(["--config", cfg("eternal.toml"), "verify"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 4


def test_verify_general_skips_G(capsys):
    assert main(["--config", cfg("general.toml"), "verify"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 3 and "commutative_G" in out and "SKIP" in out


def test_verify_corrupted_G(capsys):
    code = main(["--config", cfg("corrupted.toml"), "verify"])
    assert code in (3, 4)
    out = capsys.readouterr().out
    failing = [l for l in out.splitlines() if "FAIL" in l]
    assert failing and any("commutative_G" in l or "map_vs_ode" in l for l in failing)


def test_verify_non_cp_is_physical(tmp_path, capsys):
    text = BASE.replace("gamma3 = 1.0", "gamma3 = -1.0")
    assert run(tmp_path, "verify", text=text) == 3
    assert "complete_positivity" in capsys.readouterr().out


# cp-check -------------------------------------------------------------------------

def test_cp_check(tmp_path, capsys):
    assert run(tmp_path, "cp-check", text=BASE) == 0
    rows = read_rows(tmp_path / "out" / "cp_check.csv")
    assert rows[0] == ["t", "choi_min_eig", "pass"] and len(rows) == 202
    assert all(r[2] == "1" for r in rows[1:])
    bad = BASE.replace("gamma3 = 1.0", "gamma3 = -1.0")
    assert run(tmp_path, "cp-check", text=bad) == 0
    assert run(tmp_path, "cp-check", "--strict", text=bad) == 3


# configuration errors -------------------------------------------------------------

@pytest.mark.parametrize("text, key", [
    (BASE.replace("schema_version = 1", "schema_version = 2"), "schema_version"),
    (BASE.replace("schema_version = 1\n", ""), "schema_version"),
    (BASE + "[bogus]\nx = 1\n", "bogus"),
    (BASE.replace("steps = 200", "steps = 5"), "time.steps"),
    (BASE.replace("steps = 200", "steps = 20.5"), "time.steps"),
    (BASE.replace("t_max = 2.0", "t_max = -1.0"), "time.t_max"),
    (BASE.replace("t_max = 2.0", "tmax = 2.0"), "time.tmax"),
    (BASE + "[tolerances]\neps_sign = 0.0\n", "tolerances.eps_sign"),
    (BASE + "[probes]\ncoherence_alpha0 = 0.7\n", "probes.coherence_alpha0"),
    (BASE + "[probes]\ndiagonal_p1 = 1.5\n", "probes.diagonal_p1"),
    (BASE + '[outputs]\nlayout = "tall"\n', "outputs.layout"),
    (BASE.replace('kind = "constant"', 'kind = "magic"'), "model.kind"),
    (BASE.replace("gamma3 = 1.0\n", ""), "model.gamma3"),
    (BASE.replace("gamma3 = 1.0", "gamma3 = true"), "model.gamma3"),
    (BASE.replace('kind = "constant"', 'kind = "expressions"').replace("gamma3 = 1.0",
                                                                       'gamma3 = "foo(t)"'),
     "model.gamma3"),
    (BASE + "[sweep]\nresolution = 1\n", "sweep.resolution"),
    (BASE + "[sweep]\ngamma3_range = [1.0, -1.0]\n", "sweep.gamma3_range"),
    (BASE.replace("[time]", 'class_override = "commutative"\n[time]'), "model.kappa"),
    ("schema_version = 1\n[model\n", "--config"),
])
def test_config_rejection_names_key(tmp_path, capsys, text, key):
    assert run(tmp_path, "classify", text=text) == 1
    assert f"'{key}'" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "nope.toml"), "classify"]) == 1
    assert "--config" in capsys.readouterr().err


def test_usage_errors(capsys):
    assert main([]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["classify", "--threads", "0"]) == 1


def test_model_section_required(tmp_path, capsys):
    assert run(tmp_path, "trajectory", text="schema_version = 1\n") == 1
    assert "'model'" in capsys.readouterr().err


def test_config_defaults():
    c = cfgmod.loads(BASE)
    assert c.coherence_alpha0 == 0.45 and c.eps_sign == 1e-9 and c.cp_tol == 1e-9
    c = cfgmod.loads("schema_version = 1\n")
    assert (c.t_max, c.steps) == (10.0, 10000)


def test_config_complex_alpha():
    c = cfgmod.loads(BASE + "[probes]\ncoherence_alpha0 = [0.3, -0.2]\n")
    assert c.coherence_alpha0 == 0.3 - 0.2j


def test_console_script(tmp_path):
    r = subprocess.run([sys.executable, "-m", "phasecov.cli", "--config", cfg("general.toml"),
                        "classify"], capture_output=True, text=True)
    assert r.returncode == 0 and "General" in r.stdout
