import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from fluidmembrane import cli
from fluidmembrane.cli import ConfigError, resolve_config, run
from fluidmembrane.dynamics import DIAGNOSTIC_COLUMNS

SMALL = {"truncation": {"l_max": 2, "n_r": 6}, "time": {"dt": 1e-3, "t_end": 0.02,
                                                       "output_every": 5}}


def cfg(**over):
    c = json.loads(json.dumps(SMALL))
    for k, v in over.items():
        if isinstance(v, dict) and k in c:
            c[k].update(v)
        else:
            c[k] = v
    return c


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def checks_table(out):
    return {r[0]: r for r in read_rows(os.path.join(out, "checks.csv"))[1:]}


# -- configuration --------------------------------------------------------------------

def test_defaults_resolve():
    c = resolve_config({})
    assert c["geometry"]["kind"] == "ball" and c["truncation"]["n_r"] == 12
    assert set(c["tolerances"]) >= {"membership", "energy", "projector", "residual"}


@pytest.mark.parametrize("bad,msg", [
    ({"colour": 1}, "unknown configuration key"),
    ({"time": {"dtt": 1}}, "unknown configuration key"),
    ({"coefficients": {"B": 0.0}}, "B > 0"),
    ({"coefficients": {"rho0": -1}}, "rho0 > 0"),
    ({"geometry": {"kind": "shell", "a": 1.2, "b": 1.0}}, "0 < a < b"),
    ({"geometry": {"kind": "torus"}}, "geometry.kind"),
    ({"truncation": {"n_r": 2}}, "n_r"),
    ({"model": "X"}, "model"),
    ({"time": {"dt": 1e-3, "t_end": 0.0105}}, "multiple"),
    ({"initial": {"preset": "wild"}}, "preset"),
    ({"coefficients": {"sigma": [1.0, 0.0]}}, "harmonic coefficients"),
])
def test_invalid_configs_rejected(bad, msg):
    with pytest.raises(ConfigError, match=msg):
        resolve_config(bad)


def test_coefficient_assumptions_named(tmp_path):
    with pytest.raises(ConfigError, match="min sigma > 0 required"):
        run(cfg(coefficients={"sigma": 0.0}), "simulate", str(tmp_path), quiet=True)
    with pytest.raises(ConfigError, match="kappa >= 0 required"):
        run(cfg(coefficients={"kappa": -0.5}), "equilibrium", str(tmp_path), quiet=True)


# -- subcommands ----------------------------------------------------------------------

def test_equilibrium_closed_form(tmp_path):
    c = cfg(coefficients={"kappa": 1.0, "sigma": 1.0, "B": 1.0})
    assert run(c, "equilibrium", str(tmp_path), quiet=True) == 0
    with open(tmp_path / "equilibrium.json", encoding="utf-8") as fh:
        eq = json.load(fh)
    assert eq["z_star_constant"] == -1.0
    assert eq["ell_bullet"] == pytest.approx(1.0, abs=1e-12)
    z = np.asarray(eq["fields"]["z_bullet"]["data"])
    assert z[0] == pytest.approx(-np.sqrt(4 * np.pi), rel=1e-10)
    assert np.abs(z[1:]).max() <= 1e-10
    t = checks_table(str(tmp_path))
    assert t["s_star_closed_form"][3] == "pass"
    assert [l for l, m in eq["index_table"]][:4] == [0, 1, 1, 1]


def test_pure_equilibrium_energy_constant(tmp_path):
    c = cfg(model="L", initial={"preset": "pure-equilibrium"},
            coefficients={"kappa": 0.5, "delta": 0.5})
    assert run(c, "simulate", str(tmp_path), quiet=True) == 0
    rows = read_rows(tmp_path / "trajectory.csv")
    assert tuple(rows[0]) == DIAGNOSTIC_COLUMNS
    e = np.array([float(r[1]) for r in rows[1:]])
    assert len(e) == 5 and np.ptp(e) <= 1e-12 * e[0]


def test_simulate_outputs(tmp_path):
    assert run(cfg(model="L0", coefficients={"delta": 0.3}), "simulate", str(tmp_path),
               quiet=True) == 0
    for name in ("trajectory.csv", "trajectory.json", "checks.csv", "resolved-config.json"):
        assert (tmp_path / name).is_file()
    rows = read_rows(tmp_path / "trajectory.csv")
    # 17 significant digits
    for r in rows[1:]:
        assert all(x == f"{float(x):.17g}" for x in r)
    with open(tmp_path / "trajectory.json", encoding="utf-8") as fh:
        tr = json.load(fh)
    assert tr["model"] == "L0" and len(tr["states"]) == 5
    assert len(tr["index_table"]) == 9


def test_determinism_and_config_round_trip(tmp_path):
    a, b, c = (str(tmp_path / x) for x in "abc")
    conf = cfg(model="L", seed=5, coefficients={"delta": 0.2, "kappa": 0.3})
    run(conf, "simulate", a, quiet=True)
    run(conf, "simulate", b, quiet=True)
    ta = open(os.path.join(a, "trajectory.csv"), "rb").read()
    assert ta == open(os.path.join(b, "trajectory.csv"), "rb").read()
    with open(os.path.join(a, "resolved-config.json"), encoding="utf-8") as fh:
        resolved = json.load(fh)
    run(resolved, "simulate", c, quiet=True)
    assert ta == open(os.path.join(c, "trajectory.csv"), "rb").read()
    # a different seed gives different data
    run(conf, "simulate", b, seed=6, quiet=True)
    assert ta != open(os.path.join(b, "trajectory.csv"), "rb").read()


def test_project(tmp_path):
    c = cfg(coefficients={"kappa": 0.7}, geometry={"kind": "shell", "a": 0.5, "b": 1.0})
    assert run(c, "project", str(tmp_path), quiet=True) == 0
    with open(tmp_path / "projection.json", encoding="utf-8") as fh:
        p = json.load(fh)
    assert {"onto_E_s", "onto_L0_z", "on_Ebullet_s"} <= set(p["fields"])
    assert p["models"] == ["L"]


def test_transfer_round_trip(tmp_path):
    src = str(tmp_path / "src")
    run(cfg(model="L0", time={"output_every": 1}), "simulate", src, quiet=True)
    inp = os.path.join(src, "trajectory.json")
    e = str(tmp_path / "e")
    assert run(cfg(transfer={"input": inp, "target": "E"}), "transfer", e, quiet=True) == 0
    assert checks_table(e)["integral_constraint"][3] == "pass"
    back = str(tmp_path / "back")
    c = cfg(transfer={"input": os.path.join(e, "trajectory.json"), "target": "L"})
    assert run(c, "transfer", back, quiet=True) == 0
    with open(inp, encoding="utf-8") as fh:
        s0 = json.load(fh)["states"][-1]["fields"]["r"]
    with open(os.path.join(back, "trajectory.json"), encoding="utf-8") as fh:
        s1 = json.load(fh)["states"][-1]["fields"]["r"]
    for part in ("potential", "toroidal"):
        assert np.allclose(s0[part]["data"], s1[part]["data"], atol=1e-8, rtol=0)
    assert read_rows(os.path.join(e, "residuals.csv"))[0] == ["t", "constraint_residual"]


def test_transfer_without_preimage_is_config_error(tmp_path):
    src = str(tmp_path / "src")
    run(cfg(model="L"), "simulate", src, quiet=True)
    e = str(tmp_path / "e")
    run(cfg(transfer={"input": os.path.join(src, "trajectory.json"), "target": "E"}),
        "transfer", e, quiet=True)
    c = cfg(transfer={"input": os.path.join(e, "trajectory.json"), "target": "L"})
    with pytest.raises(ConfigError, match="no L0 preimage"):
        run(c, "transfer", str(tmp_path / "x"), quiet=True)


def test_stability(tmp_path):
    c = cfg(model="L", initial={"preset": "x-third"}, coefficients={"delta": 1.0},
            time={"t_end": 0.2, "output_every": 20})
    assert run(c, "stability", str(tmp_path), quiet=True) == 0
    rows = read_rows(tmp_path / "stability.csv")
    assert rows[0] == ["t", "energy", "dist_to_equilibrium", "ratio"]
    d = [float(r[2]) for r in rows[1:]]
    assert d[-1] < d[0]
    with pytest.raises(ConfigError, match="delta > 0"):
        run(cfg(), "stability", str(tmp_path), quiet=True)


def test_verify_small(tmp_path):
    # the spectrum check needs a converged radial resolution
    c = cfg(verify={"n_pairs": 3}, truncation={"n_r": 16})
    assert run(c, "verify", str(tmp_path), quiet=True) == 0
    t = checks_table(str(tmp_path))
    assert len(t) > 10 and all(r[3] == "pass" for r in t.values())


def test_verify_full_size(tmp_path):
    import time
    t0 = time.perf_counter()
    c = {"truncation": {"l_max": 8, "n_r": 32}}
    assert run(c, "verify", str(tmp_path), seed=42, quiet=True) == 0
    assert time.perf_counter() - t0 < 300


def test_failing_check_gives_exit_1(tmp_path):
    # a tolerance no computation can meet
    c = cfg(model="L", tolerances={"energy": 1e-300}, coefficients={"delta": 0.5})
    assert run(c, "simulate", str(tmp_path), quiet=True) == 1
    assert checks_table(str(tmp_path))["energy_identity_per_step"][3] == "FAIL"


# -- process level --------------------------------------------------------------------

def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "fluidmembrane", *args],
                          capture_output=True, text=True)


def test_main_exit_codes(tmp_path):
    good = tmp_path / "good.json"
    good.write_text(json.dumps(cfg(coefficients={"kappa": 1.0})))
    r = run_cli("equilibrium", "--config", str(good), "--out", str(tmp_path / "o"))
    assert r.returncode == 0 and "PASS" in r.stdout
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nope": 1}))
    r = run_cli("equilibrium", "--config", str(bad), "--out", str(tmp_path / "o"))
    assert r.returncode == 2 and "unknown configuration key" in r.stderr
    assert run_cli("equilibrium", "--config", str(tmp_path / "missing.json")).returncode == 2
    assert cli.main(["simulate", "--config", str(bad)]) == 2


def test_seed_flag_overrides(tmp_path):
    f = tmp_path / "c.json"
    f.write_text(json.dumps(cfg(seed=1)))
    assert cli.main(["simulate", "--config", str(f), "--out", str(tmp_path / "o"),
                     "--seed", "9"]) == 0
    with open(tmp_path / "o" / "resolved-config.json", encoding="utf-8") as fh:
        assert json.load(fh)["seed"] == 9
