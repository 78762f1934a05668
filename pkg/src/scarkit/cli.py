"""Config-driven experiment runner.

Every task reads a JSON config (flags override fields), echoes the resolved
config into the output directory, and writes deterministic CSV tables plus
a metadata sidecar.  Exit codes: 0 success, 2 config/schema error,
3 resource ceiling exceeded, 4 numerical abort.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import os
import sys
import time

import numpy as np

from . import agp as agp_mod
from . import dynamics as dyn
from . import kpm as kpm_mod
from . import mps_engine as engine
from . import spectra
from .fqh_model import (
    LatticeGeometry,
    QuasiholePath,
    fqh_operator,
    laughlin_state,
)
from .hilbert import SymmetrySector, enumerate_boson_sector, enumerate_spin_sector
from .mps_model import (
    PerturbationSpec,
    assemble_hamiltonian,
    ground_sector,
    mps_state_vector,
    scar_sector,
    tower_sector,
    tower_state,
)

__all__ = ["main", "run_task", "SchemaError", "ResourceCeiling"]


class SchemaError(ValueError):
    pass


class ResourceCeiling(RuntimeError):
    pass


DEFAULT_MAX_DIM = 4_000_000

_MODEL_KEYS = {
    "mps": {"kind", "n_sites", "variant", "omega0", "perturbation", "sector"},
    "fqh": {"kind", "l_x", "l_y", "beta", "variant"},
}
_PERT_KEYS = {"kind", "strength", "seed"}
_TASK_KEYS = {
    "spectrum": {"name", "s", "entropy", "r_bins", "entropy_states"},
    "dynamics": {
        "name", "v", "ramp", "s_start", "s_end", "ds", "populations",
        "n_checkpoints",
    },
    "velocity-scan": {
        "name", "threshold", "v_low", "v_high", "n_list", "variants",
        "points_per_decade", "ramp", "ds", "s_start", "s_end",
    },
    "agp": {"name", "s_grid"},
    "susceptibility": {"name", "s", "n_list", "eps_list", "kind", "realizations"},
    "qsl": {"name", "n_list", "s_grid", "variants", "ell", "fit_s_max"},
    "kpm": {"name", "probes", "moments", "s", "preset"},
    "tower": {"name", "ells", "s", "fit_s_max"},
}
_TOP_KEYS = {"model", "task", "output_dir", "seed", "workers", "max_dim"}


def _check_keys(block: dict, allowed: set, where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise SchemaError(f"unknown keys {sorted(unknown)} in {where}")


def validate_config(cfg: dict) -> dict:
    if not isinstance(cfg, dict):
        raise SchemaError("config must be a JSON object")
    _check_keys(cfg, _TOP_KEYS, "top level")
    task = cfg.get("task")
    if not isinstance(task, dict) or "name" not in task:
        raise SchemaError("config requires a task block with a name")
    name = task["name"]
    if name not in _TASK_KEYS:
        raise SchemaError(f"unknown task {name!r}")
    _check_keys(task, _TASK_KEYS[name], f"task {name}")
    model = cfg.get("model")
    if model is not None:
        kind = model.get("kind")
        if kind not in _MODEL_KEYS:
            raise SchemaError(f"unknown model kind {kind!r}")
        _check_keys(model, _MODEL_KEYS[kind], f"model {kind}")
        pert = model.get("perturbation")
        if pert is not None:
            _check_keys(pert, _PERT_KEYS, "perturbation")
    return cfg


def _sector_from_config(model: dict) -> SymmetrySector:
    n = model["n_sites"]
    if "sector" in model and model["sector"] is not None:
        p = model["sector"]
        return SymmetrySector(
            p.get("total_sz", 0),
            p.get("momentum"),
            p.get("reflection"),
            p.get("spin_inversion"),
        )
    variant = model.get("variant", "scar")
    if variant == "ground":
        return ground_sector(n)
    if variant == "tower":
        return SymmetrySector(0, 0, 1, None)
    pert = model.get("perturbation")
    if pert and pert.get("kind") in ("disordered_zz", "disordered_z"):
        z = None if pert["kind"] == "disordered_z" else 1
        return SymmetrySector(0, None, None, z)
    return scar_sector(n)


def build_model(model: dict, max_dim: int):
    """(operator, basis, reference_fn) for a model block."""
    if model["kind"] == "mps":
        n = model["n_sites"]
        sector = _sector_from_config(model)
        basis = enumerate_spin_sector(n, sector)
        if basis.dim > max_dim:
            raise ResourceCeiling(f"sector dimension {basis.dim} over ceiling {max_dim}")
        pert = model.get("perturbation")
        pspec = PerturbationSpec(**pert) if pert else None
        op = assemble_hamiltonian(
            n,
            model.get("variant", "scar"),
            basis,
            perturbation=pspec,
            omega0=model.get("omega0", 1.0),
        )
        ref = lambda s: mps_state_vector(n, s, basis)
        return op, basis, ref
    geometry = LatticeGeometry(model["l_x"], model["l_y"])
    basis = enumerate_boson_sector(geometry.n_sites, geometry.particles)
    if basis.dim > max_dim:
        raise ResourceCeiling(f"sector dimension {basis.dim} over ceiling {max_dim}")
    beta = model.get("beta", -5.0)
    path = QuasiholePath(geometry)
    op = fqh_operator(geometry, path, beta, basis)
    ref = lambda s: laughlin_state(geometry, path.w1, path.w2(s), basis)
    return op, basis, ref


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _prepare_outdir(cfg: dict, args_out: str | None) -> str:
    out = args_out or cfg.get("output_dir") or os.path.join(
        "runs", cfg["task"]["name"]
    )
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.json"), "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
    return out


def _metadata(out: str, cfg: dict, t0: float, extra: dict | None = None) -> None:
    meta = {
        "task": cfg["task"]["name"],
        "wall_time_s": time.time() - t0,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "seed": cfg.get("seed", 0),
    }
    meta.update(extra or {})
    with open(os.path.join(out, "metadata.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


# ----------------------------------------------------------------- tasks


def _task_spectrum(cfg, out):
    task = cfg["task"]
    s = task.get("s", 0.5)
    op, basis, ref = build_model(cfg["model"], cfg.get("max_dim", DEFAULT_MAX_DIM))
    h = op.value(s)
    if basis.dim > spectra.DENSE_DIM_LIMIT:
        raise ResourceCeiling("spectrum task needs the dense path")
    dec = spectra.full_diagonalize(h, reference=ref(s))
    want_entropy = task.get("entropy", True)
    n_states = task.get("entropy_states")
    rows = []
    for n in range(dec.dim):
        ent = ""
        if want_entropy and (n_states is None or n < n_states):
            ent = spectra.entanglement_entropy(dec.states[:, n], basis)
        rows.append((s, n, dec.energies[n], ent, int(n == dec.scar_index)))
    write_csv(
        os.path.join(out, "spectrum.csv"),
        ["s", "n", "energy", "entropy_nats", "is_scar"],
        rows,
    )
    st = spectra.level_statistics(dec.energies, bins=task.get("r_bins", 50))
    counts, edges = st.histogram
    write_csv(
        os.path.join(out, "r_histogram.csv"),
        ["bin_left", "bin_right", "count"],
        [(edges[i], edges[i + 1], counts[i]) for i in range(len(counts))],
    )
    return {"dim": dec.dim, "r_ave": st.r_ave, "scar_index": dec.scar_index}


def _task_dynamics(cfg, out):
    task = cfg["task"]
    op, basis, ref = build_model(cfg["model"], cfg.get("max_dim", DEFAULT_MAX_DIM))
    ramp = dyn.RampProtocol(
        task.get("ramp", "linear"),
        task["v"],
        task.get("s_start", 0.0),
        task.get("s_end", 1.0),
    )
    pcfg = dyn.PropagatorConfig(
        ds=task.get("ds", 1e-3),
        n_checkpoints=task.get("n_checkpoints", 200),
        checkpoint_path=os.path.join(out, "state_checkpoint.npz"),
    )
    psi0 = ref(ramp.s_start).astype(complex)
    rec = dyn.propagate(op, psi0, ramp, pcfg, reference_fn=ref)
    s_diag_final = ""
    rows_pop = []
    if task.get("populations", False):
        if basis.dim > spectra.DENSE_DIM_LIMIT:
            raise ResourceCeiling("populations need the dense path")
        dec = spectra.full_diagonalize(op.value(ramp.s_end), reference=ref(ramp.s_end))
        rho, s_diag_final = dyn.populations_and_entropy(rec.final_state, dec)
        rows_pop = [
            (ramp.s_end, n, dec.energies[n], rho[n]) for n in range(dec.dim)
        ]
        write_csv(
            os.path.join(out, "populations.csv"),
            ["s", "n", "energy", "rho_nn"],
            rows_pop,
        )
    rows = [
        (
            rec.times[i],
            rec.s_values[i],
            rec.fidelities[i] if rec.fidelities is not None else "",
            s_diag_final if i == len(rec.times) - 1 else "",
        )
        for i in range(len(rec.times))
    ]
    write_csv(os.path.join(out, "evolution.csv"), ["t", "s", "fidelity", "s_diag"], rows)
    return {
        "final_fidelity": float(rec.fidelities[-1]) if rec.fidelities is not None else None,
        "norm_drift": rec.norm_drift,
        "max_chebyshev_order": rec.max_order,
    }


def _scan_one(model, max_dim, ramp_kind, ds, s_start, s_end, v):
    op, basis, ref = build_model(model, max_dim)
    ramp = dyn.RampProtocol(ramp_kind, v, s_start, s_end)
    psi0 = ref(s_start).astype(complex)
    rec = dyn.propagate(op, psi0, ramp, dyn.PropagatorConfig(ds=ds))
    return dyn.adiabatic_fidelity(rec, ref(s_end))


def _task_velocity_scan(cfg, out):
    task = cfg["task"]
    model0 = cfg["model"]
    max_dim = cfg.get("max_dim", DEFAULT_MAX_DIM)
    threshold = task.get("threshold", 0.99)
    n_list = task.get("n_list") or [model0.get("n_sites")]
    variants = task.get("variants") or [model0.get("variant", "scar")]
    results = []
    scan_rows = []
    for n in n_list:
        for variant in variants:
            model = copy.deepcopy(model0)
            if model["kind"] == "mps":
                model["n_sites"] = n
                model["variant"] = variant
            cache: dict[float, float] = {}

            def fid(v):
                if v not in cache:
                    cache[v] = _scan_one(
                        model, max_dim, task.get("ramp", "linear"),
                        task.get("ds", 1e-3), task.get("s_start", 0.0),
                        task.get("s_end", 1.0), v,
                    )
                return cache[v]

            scan = dyn.adiabatic_velocity(
                fid,
                threshold,
                task.get("v_low", 1e-4),
                task.get("v_high", 1e-1),
                points_per_decade=task.get("points_per_decade", 24),
            )
            results.append((n, variant, threshold, scan.v_threshold, int(scan.monotone)))
            for v in sorted(cache):
                scan_rows.append((n, variant, v, cache[v]))
            # incremental flush
            write_csv(
                os.path.join(out, "velocity.csv"),
                ["n_sites", "variant", "threshold", "v_threshold", "monotone"],
                results,
            )
            write_csv(
                os.path.join(out, "fidelity_scan.csv"),
                ["n_sites", "variant", "v", "fidelity"],
                scan_rows,
            )
    fits = {}
    for variant in variants:
        pts = [(n, v) for (n, var, _t, v, _m) in results if var == variant]
        if len(pts) >= 2:
            expo, pref, r2 = agp_mod.power_law_fit(
                [p[0] for p in pts], [p[1] for p in pts]
            )
            fits[variant] = {"exponent": expo, "prefactor": pref, "r2": r2}
    return {"n_runs": len(scan_rows), "fits": fits}


def _task_agp(cfg, out):
    task = cfg["task"]
    op, basis, ref = build_model(cfg["model"], cfg.get("max_dim", DEFAULT_MAX_DIM))
    grid = _grid(task.get("s_grid", {"start": 0.0, "stop": 1.0, "num": 11}))
    rows = []
    for s in grid:
        row = agp_mod.agp_elements(op, float(s), ref(float(s)))
        for n in range(len(row.energies)):
            rows.append((s, n, row.energies[n], row.elements[n]))
        write_csv(
            os.path.join(out, "agp_elements.csv"),
            ["s", "n", "energy", "abs_agp"],
            rows,
        )
    return {"n_points": len(grid)}


def _task_susceptibility(cfg, out):
    task = cfg["task"]
    model0 = cfg["model"]
    max_dim = cfg.get("max_dim", DEFAULT_MAX_DIM)
    s = task.get("s", 0.0)
    eps_list = task.get("eps_list", [0.0, 0.001, 0.005, 0.01, 0.05])
    kind = task.get("kind", "clean_zz")
    realizations = task.get("realizations", 1)
    master_seed = cfg.get("seed", 0)
    rows = []
    for n in task.get("n_list", [8]):
        for eps in eps_list:
            n_real = 1 if (kind == "clean_zz" or eps == 0.0) else (
                realizations if isinstance(realizations, int)
                else realizations.get(str(n), 1)
            )
            chis, chits, norms = [], [], []
            for r in range(n_real):
                model = copy.deepcopy(model0)
                model["n_sites"] = n
                if eps:
                    model["perturbation"] = {
                        "kind": kind,
                        "strength": eps,
                        "seed": master_seed + 7919 * r,
                    }
                op, basis, ref = build_model(model, max_dim)
                rep = agp_mod.regularized_susceptibility(op, s, ref(s))
                chis.append(rep.chi_ref)
                chits.append(rep.chi_thermal())
                norms.append(rep.gauge_norm)
            sem = (
                float(np.std(chis, ddof=1) / np.sqrt(len(chis)))
                if len(chis) > 1
                else 0.0
            )
            rows.append(
                (
                    n, eps, float(np.mean(chis)), float(np.mean(chits)),
                    float(np.mean(norms)), len(chis), sem,
                )
            )
            write_csv(
                os.path.join(out, "susceptibility.csv"),
                [
                    "n_sites", "eps", "chi_reg_ref", "chi_reg_thermal",
                    "gauge_norm", "realizations", "sem_chi",
                ],
                rows,
            )
    fits = {}
    clean = [(r[0], r[2]) for r in rows if r[1] == 0.0]
    if len(clean) >= 2:
        expo, pref, r2 = agp_mod.power_law_fit(
            [p[0] for p in clean], [p[1] for p in clean]
        )
        fits["gamma_eps0"] = {"exponent": expo, "prefactor": pref, "r2": r2}
    return {"n_points": len(rows), "fits": fits}


def _task_qsl(cfg, out):
    task = cfg["task"]
    n_list = task.get("n_list", [16, 32, 64, 128, 256, 512, 1000])
    grid = _grid(task.get("s_grid", {"start": 0.0, "stop": 1.0, "num": 21}))
    variants = task.get("variants", ["scar", "ground"])
    ell = task.get("ell", 0)
    fit_s_max = task.get("fit_s_max", 0.2)
    rows = []
    reports = {}
    for variant in variants:
        reports[variant] = []
        for n in n_list:
            rep = engine.qsl_bound(n, variant, ell=ell, s_max=fit_s_max)
            reports[variant].append(rep)
            for s in grid:
                logc = engine.log_fidelity(n, float(s), ell) if s > 0 else 0.0
                rows.append(
                    (variant, n, s, logc, rep.catastrophe, rep.dE0, rep.v_qsl)
                )
            write_csv(
                os.path.join(out, "qsl.csv"),
                ["variant", "n_sites", "s", "log_C", "C_N", "dE0", "v_qsl"],
                rows,
            )
    fits = {}
    for variant, reps in reports.items():
        if len(reps) >= 2:
            ns = [r.n_sites for r in reps]
            ce, cp, _ = agp_mod.power_law_fit(ns, [r.catastrophe for r in reps])
            ve, vp, _ = agp_mod.power_law_fit(ns, [r.v_qsl for r in reps])
            fits[variant] = {
                "catastrophe": {"prefactor": cp, "exponent": ce},
                "v_qsl": {"prefactor": vp, "exponent": ve},
            }
    return {"n_points": len(rows), "fits": fits}


def _task_kpm(cfg, out):
    task = cfg["task"]
    model = cfg["model"]
    if model["kind"] != "fqh":
        raise SchemaError("kpm task targets the fqh model")
    max_dim = cfg.get("max_dim", DEFAULT_MAX_DIM)
    s = task.get("s", 0.0)
    probes = task.get("probes", list(range(7)))
    kcfg = (
        kpm_mod.KpmConfig.preset(task["preset"])
        if "preset" in task
        else kpm_mod.KpmConfig(n_moments=task.get("moments", 2**12))
    )
    geometry = LatticeGeometry(model["l_x"], model["l_y"])
    basis = enumerate_boson_sector(geometry.n_sites, geometry.particles)
    if basis.dim > max_dim:
        raise ResourceCeiling("lattice sector above ceiling")
    path = QuasiholePath(geometry)
    h_minus = fqh_operator(geometry, path, -abs(model.get("beta", -5.0)), basis).value(s)
    h_plus = fqh_operator(geometry, path, abs(model.get("beta", -5.0)), basis).value(s)
    n_eig = max(p for p in probes) + 1
    if basis.dim <= spectra.DENSE_DIM_LIMIT:
        dec = spectra.full_diagonalize(h_plus)
    else:
        dec = spectra.lanczos_lowest(h_plus, n_eig)
    rows = []
    for p in probes:
        probe = dec.states[:, p].astype(complex)
        om, g = kpm_mod.spectral_function(h_minus, probe, kcfg)
        rows.extend((p, dec.energies[p], om[i], g[i]) for i in range(len(om)))
        write_csv(
            os.path.join(out, "kpm.csv"),
            ["probe_n", "probe_energy", "omega", "g"],
            rows,
        )
    return {"n_probes": len(probes), "moments": kcfg.n_moments}


def _task_tower(cfg, out):
    task = cfg["task"]
    model = cfg["model"]
    n = model["n_sites"]
    s = task.get("s", 0.5)
    ells = task.get("ells", list(range(n // 2 + 1)))
    omega0 = model.get("omega0", 1.0)
    rows = []
    for ell in ells:
        vec, basis = tower_state(n, s, ell)
        if vec is None:
            rows.append((ell, "", "", 0, "", ""))
            continue
        op = assemble_hamiltonian(n, "tower", basis, omega0=omega0)
        hv = op.value(s) @ vec
        energy = float(vec @ hv)
        resid = float(np.linalg.norm(hv - energy * vec))
        c_n, _ = engine.catastrophe_exponent(
            n, ell, s_max=task.get("fit_s_max", 0.2)
        )
        de = engine.force_uncertainty(n, 0.0, "tower", ell)
        rows.append((ell, energy, resid, 1, c_n, de))
    write_csv(
        os.path.join(out, "tower.csv"),
        ["ell", "energy", "residual", "nonzero", "C_N_ell", "dE_ell"],
        rows,
    )
    return {"n_states": len(ells)}


_TASKS = {
    "spectrum": _task_spectrum,
    "dynamics": _task_dynamics,
    "velocity-scan": _task_velocity_scan,
    "agp": _task_agp,
    "susceptibility": _task_susceptibility,
    "qsl": _task_qsl,
    "kpm": _task_kpm,
    "tower": _task_tower,
}


def _grid(spec) -> np.ndarray:
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    return np.linspace(spec["start"], spec["stop"], spec["num"])


def run_task(cfg: dict, out_dir: str | None = None) -> dict:
    cfg = validate_config(cfg)
    out = _prepare_outdir(cfg, out_dir)
    t0 = time.time()
    np.random.seed(cfg.get("seed", 0) % 2**32)
    extra = _TASKS[cfg["task"]["name"]](cfg, out)
    _metadata(out, cfg, t0, extra)
    return extra


def _parse_lattice(text: str) -> tuple[int, int]:
    lx, ly = text.lower().split("x")
    return int(lx), int(ly)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="scarkit",
        description="Scar-model adiabatic dynamics experiments",
    )
    p.add_argument("task", choices=sorted(_TASKS))
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--model", choices=["mps", "fqh"], help="model kind")
    p.add_argument("--N", type=str, help="chain length or comma list")
    p.add_argument("--L", type=str, help="lattice size, e.g. 3x4")
    p.add_argument("--variant", type=str, help="scar | ground | tower (or comma list)")
    p.add_argument("--beta", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--v", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--probes", type=str, help="comma list / ranges, e.g. 0..6,100")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help="worker count (SCARKIT_WORKERS)")
    p.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="PATH=JSON",
        help="override any config field, e.g. --set task.ds=1e-4",
    )
    return p


def _parse_probes(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _apply_overrides(cfg: dict, args: argparse.Namespace, task: str) -> dict:
    cfg.setdefault("task", {})["name"] = task
    if args.model:
        cfg.setdefault("model", {})["kind"] = args.model
    model = cfg.get("model", {})
    if args.N:
        ns = [int(x) for x in args.N.split(",")]
        model["n_sites"] = ns[0]
        if len(ns) > 1 or task in ("velocity-scan", "susceptibility", "qsl"):
            cfg["task"]["n_list"] = ns
        cfg["model"] = model
    if args.L:
        model["kind"] = "fqh"
        model["l_x"], model["l_y"] = _parse_lattice(args.L)
        cfg["model"] = model
    if args.variant:
        vs = args.variant.split(",")
        model["variant"] = vs[0]
        if len(vs) > 1 or task in ("velocity-scan", "qsl"):
            cfg["task"]["variants"] = vs
        cfg["model"] = model
    if args.beta is not None:
        model["beta"] = args.beta
        cfg["model"] = model
    if args.s is not None:
        cfg["task"]["s"] = args.s
    if args.v is not None:
        cfg["task"]["v"] = args.v
    if args.threshold is not None:
        cfg["task"]["threshold"] = args.threshold
    if args.probes:
        cfg["task"]["probes"] = _parse_probes(args.probes)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.workers is not None:
        cfg["workers"] = args.workers
    elif "SCARKIT_WORKERS" in os.environ:
        cfg.setdefault("workers", int(os.environ["SCARKIT_WORKERS"]))
    for item in args.set:
        path, _, raw = item.partition("=")
        node = cfg
        keys = path.split(".")
        for key in keys[:-1]:
            node = node.setdefault(key, {})
        try:
            node[keys[-1]] = json.loads(raw)
        except json.JSONDecodeError:
            node[keys[-1]] = raw
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = {}
        if args.config:
            with open(args.config) as fh:
                cfg = json.load(fh)
        cfg = _apply_overrides(cfg, args, args.task)
        run_task(cfg, args.out)
    except (SchemaError, ValueError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ResourceCeiling as exc:
        print(f"resource ceiling: {exc}", file=sys.stderr)
        return 3
    except dyn.NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
