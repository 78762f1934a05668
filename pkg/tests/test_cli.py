import json
import os

import numpy as np
import pytest

from scarkit.cli import SchemaError, build_parser, main, run_task, validate_config


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_schema_rejects_unknown_keys():
    with pytest.raises(SchemaError):
        validate_config({"task": {"name": "spectrum"}, "bogus": 1})
    with pytest.raises(SchemaError):
        validate_config({"task": {"name": "spectrum", "oops": 2}})
    with pytest.raises(SchemaError):
        validate_config({"task": {"name": "mystery"}})
    with pytest.raises(SchemaError):
        validate_config({"task": {"name": "spectrum"}, "model": {"kind": "spinny"}})


def test_spectrum_task_outputs_and_determinism(tmp_path):
    cfg = {
        "model": {"kind": "mps", "n_sites": 6, "variant": "scar"},
        "task": {"name": "spectrum", "s": 0.5},
        "seed": 3,
    }
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    run_task(json.loads(json.dumps(cfg)), out1)
    run_task(json.loads(json.dumps(cfg)), out2)
    for name in ("spectrum.csv", "r_histogram.csv", "config.json"):
        assert os.path.exists(os.path.join(out1, name))
        assert _read(os.path.join(out1, name)) == _read(os.path.join(out2, name))
    header = _read(os.path.join(out1, "spectrum.csv")).decode().splitlines()[0]
    assert header == "s,n,energy,entropy_nats,is_scar"
    meta = json.loads(_read(os.path.join(out1, "metadata.json")))
    assert meta["task"] == "spectrum"


def test_exit_codes(tmp_path):
    rc = main(["spectrum", "--model", "mps", "--N", "7", "--out", str(tmp_path / "x")])
    assert rc == 2          # odd chain length: invalid parameters
    rc = main(["spectrum", "--set", "bogus=1", "--model", "mps", "--N", "6"])
    assert rc == 2
    cfg = {
        "model": {"kind": "mps", "n_sites": 8, "variant": "scar"},
        "task": {"name": "spectrum", "s": 0.1},
        "max_dim": 10,
    }
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    rc = main(["spectrum", "--config", str(p), "--out", str(tmp_path / "o")])
    assert rc == 3


def test_dynamics_task(tmp_path):
    cfg = {
        "model": {"kind": "mps", "n_sites": 6, "variant": "scar"},
        "task": {"name": "dynamics", "v": 0.05, "populations": True},
    }
    out = str(tmp_path / "dyn")
    extra = run_task(cfg, out)
    assert extra["final_fidelity"] > 0.5
    assert extra["norm_drift"] < 1e-9
    lines = _read(os.path.join(out, "evolution.csv")).decode().splitlines()
    assert lines[0] == "t,s,fidelity,s_diag"
    assert os.path.exists(os.path.join(out, "populations.csv"))


def test_velocity_scan_task(tmp_path):
    cfg = {
        "model": {"kind": "mps", "variant": "scar", "n_sites": 6},
        "task": {
            "name": "velocity-scan",
            "threshold": 0.5,
            "v_low": 0.02,
            "v_high": 5.0,
            "n_list": [6],
            "variants": ["scar"],
            "points_per_decade": 4,
        },
    }
    out = str(tmp_path / "scan")
    run_task(cfg, out)
    rows = _read(os.path.join(out, "velocity.csv")).decode().splitlines()
    assert rows[0] == "n_sites,variant,threshold,v_threshold,monotone"
    assert len(rows) == 2
    v = float(rows[1].split(",")[3])
    assert 0.02 < v < 5.0


def test_kpm_task_and_probe_parsing(tmp_path):
    rc = main([
        "kpm", "--L", "3x4", "--probes", "0..2",
        "--set", "task.moments=256",
        "--out", str(tmp_path / "kpm"),
    ])
    assert rc == 0
    lines = _read(os.path.join(tmp_path, "kpm", "kpm.csv")).decode().splitlines()
    assert lines[0] == "probe_n,probe_energy,omega,g"
    probes = {int(l.split(",")[0]) for l in lines[1:]}
    assert probes == {0, 1, 2}


def test_tower_task(tmp_path):
    cfg = {
        "model": {"kind": "mps", "n_sites": 6, "variant": "tower", "omega0": 1.0},
        "task": {"name": "tower", "ells": [0, 1, 3], "s": 0.5},
    }
    out = str(tmp_path / "tower")
    run_task(cfg, out)
    lines = _read(os.path.join(out, "tower.csv")).decode().splitlines()
    assert len(lines) == 4
    ell3 = lines[3].split(",")
    assert ell3[3] == "0"     # N/2 odd: vanishing tower top


def test_qsl_task(tmp_path):
    cfg = {
        "task": {
            "name": "qsl",
            "n_list": [16, 32],
            "variants": ["scar"],
            "s_grid": {"start": 0.0, "stop": 1.0, "num": 3},
        },
    }
    out = str(tmp_path / "qsl")
    run_task(cfg, out)
    lines = _read(os.path.join(out, "qsl.csv")).decode().splitlines()
    assert lines[0] == "variant,n_sites,s,log_C,C_N,dE0,v_qsl"
    assert len(lines) == 1 + 2 * 3


def test_flag_overrides_build_config():
    parser = build_parser()
    args = parser.parse_args(
        ["spectrum", "--model", "mps", "--N", "8", "--s", "0.25", "--seed", "9"]
    )
    from scarkit.cli import _apply_overrides

    cfg = _apply_overrides({}, args, "spectrum")
    assert cfg["model"]["n_sites"] == 8
    assert cfg["task"]["s"] == 0.25
    assert cfg["seed"] == 9
