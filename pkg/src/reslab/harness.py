"""Experiment orchestration: zone maps, stability sweeps, detector runs and
normal-form decay studies, with reproducible seeding and flat-file records.

All run artifacts are plain CSV/JSON; float formatting uses shortest
round-trip repr so identical configurations and seeds reproduce output files
byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .detector import FrequencyCurve, detect
from .dynamics import (IntegratorConfig, State, action_drift, integrate,
                       trajectory_from_csv)
from .lattice import IntVector, saturate
from .models import HamiltonianSystem, load_system, system_from_dict
from .normalform import lie_transform, measure_remainder, solve_homological
from .resonance import (DEFAULT_K_CAP, classify_many, enumerate_modes,
                        make_zone_parameters)

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib


class ConfigError(ValueError):
    """Malformed or incomplete run configuration."""


def _fmt(x) -> str:
    return repr(float(x))


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"bad TOML in {path}: {exc}") from exc


def build_system(cfg: dict, base_dir: Path | None = None) -> tuple[HamiltonianSystem, str]:
    """System from the [model] section: either a `path` or inline A/b/terms.

    Relative model paths resolve against `base_dir` (the config's directory).
    """
    try:
        mdl = cfg["model"]
    except KeyError as exc:
        raise ConfigError("missing [model] section") from exc
    if "path" in mdl:
        path = Path(mdl["path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        try:
            return load_system(path)
        except FileNotFoundError as exc:
            raise ConfigError(f"model file not found: {path}") from exc
    doc = {
        "model": {"A": mdl["A"], "b": mdl["b"]},
        "perturbation": cfg.get("perturbation", {}),
    }
    if "convexity" in cfg:
        doc["convexity"] = cfg["convexity"]
    system, _ = system_from_dict(doc)
    digest = hashlib.sha256(
        json.dumps(doc, sort_keys=True, default=list).encode()).hexdigest()
    return system, digest


def integrator_config(cfg: dict) -> IntegratorConfig:
    icfg = cfg.get("integrator", {})
    return IntegratorConfig(
        scheme=icfg.get("scheme", "split_strang"),
        step=float(icfg.get("step", 1e-2)),
        fixed_point_tol=float(icfg.get("fixed_point_tol", 1e-12)),
        max_fixed_point_iters=int(icfg.get("max_fixed_point_iters", 50)),
        sample_stride=int(icfg.get("sample_stride", 1)),
    )


@dataclass
class ExperimentRecord:
    """Everything needed to rerun bit-for-bit on the same build."""

    run_id: str
    command: str
    config: dict
    model_hash: str
    seed: int
    outputs: dict
    wall_clock_s: float
    version: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentRecord":
        return cls(**json.loads(text))


def _make_record(command: str, cfg: dict, model_hash: str, seed: int,
                 outputs: dict, started: float) -> ExperimentRecord:
    run_id = hashlib.sha256(
        (command + json.dumps(cfg, sort_keys=True, default=list) + str(seed)).encode()
    ).hexdigest()[:16]
    return ExperimentRecord(
        run_id=run_id, command=command, config=cfg, model_hash=model_hash,
        seed=seed, outputs=outputs, wall_clock_s=time.perf_counter() - started,
        version=__version__,
    )


def _write_record(rec: ExperimentRecord, out_dir: Path) -> Path:
    path = out_dir / "record.json"
    path.write_text(rec.to_json() + "\n", encoding="utf-8")
    return path


def _zone_params(cfg: dict, epsilon: float | None = None):
    z = cfg.get("zone", {})
    try:
        eps = float(epsilon if epsilon is not None else z["epsilon"])
        return make_zone_parameters(eps, float(z["beta"]), float(z["s0"]))
    except KeyError as exc:
        raise ConfigError(f"missing [zone] key: {exc}") from exc


def _k_cap(cfg: dict, params) -> float:
    z = cfg.get("zone", {})
    return min(params.K, float(z.get("k_cap", DEFAULT_K_CAP)))


# -- zones -------------------------------------------------------------------------


def run_zones(cfg: dict, out_dir: Path, seed: int = 0, threads: int = 1,
              base_dir: Path | None = None) -> dict:
    """Zone map over an action grid: I, omega, label, witness, distance."""
    started = time.perf_counter()
    out_dir.mkdir(parents=True, exist_ok=True)
    system, model_hash = build_system(cfg, base_dir)
    params = _zone_params(cfg)
    k_cap = _k_cap(cfg, params)
    z = cfg["zone"]
    try:
        low = np.array(z["low"], dtype=float)
        high = np.array(z["high"], dtype=float)
        counts = [int(c) for c in z["counts"]]
    except KeyError as exc:
        raise ConfigError(f"missing [zone] grid key: {exc}") from exc
    n = system.n
    axes = [np.linspace(low[i], high[i], counts[i]) for i in range(n)]
    grid = np.array([[axes[i][idx[i]] for i in range(n)]
                     for idx in np.ndindex(*counts)])
    omegas = grid @ system.model.quadratic.T + system.model.linear
    mask, widx, dmin = classify_many(omegas, params, k_cap)
    modes = list(enumerate_modes(n, math.floor(k_cap)))

    path = out_dir / "zones.csv"
    header = ([f"I{i + 1}" for i in range(n)] + [f"omega{i + 1}" for i in range(n)]
              + ["label", "witness", "distance"])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for r in range(grid.shape[0]):
            witness = ""
            label = "nonresonant"
            if mask[r]:
                label = "resonant"
                witness = " ".join(str(e) for e in modes[int(widx[r])].entries)
            row = ([_fmt(x) for x in grid[r]] + [_fmt(x) for x in omegas[r]]
                   + [label, witness, _fmt(dmin[r])])
            fh.write(",".join(row) + "\n")
    outputs = {
        "zones_csv": path.name,
        "resonant_fraction": _fmt(float(mask.mean())),
        "k_cap": k_cap,
        "rows": int(grid.shape[0]),
    }
    rec = _make_record("zones", cfg, model_hash, seed, outputs, started)
    _write_record(rec, out_dir)
    return outputs


# -- sweep -------------------------------------------------------------------------


def _sample_start(start_cfg: dict, system: HamiltonianSystem, params,
                  k_cap: float, rng) -> np.ndarray:
    n = system.n
    mode = start_cfg.get("mode", "box")
    if mode == "box":
        low = np.array(start_cfg["low"], dtype=float)
        high = np.array(start_cfg["high"], dtype=float)
        return low + rng.uniform(size=n) * (high - low)
    if mode == "affine":
        base = np.array(start_cfg["base"], dtype=float)
        point = base.copy()
        for span in start_cfg.get("spans", []):
            point = point + rng.uniform() * np.array(span, dtype=float)
        jitter = np.array(start_cfg.get("jitter", [0.0] * n), dtype=float)
        return point + jitter * rng.uniform(-1.0, 1.0, size=n)
    if mode == "zone":
        # Rejection-sample a box until the classify label matches.
        from .resonance import classify
        low = np.array(start_cfg["low"], dtype=float)
        high = np.array(start_cfg["high"], dtype=float)
        label = start_cfg.get("label", "nonresonant")
        attempts = int(start_cfg.get("max_attempts", 20000))
        for _ in range(attempts):
            point = low + rng.uniform(size=n) * (high - low)
            if classify(system.model.frequency(point), params, k_cap).kind == label:
                return point
        raise ConfigError(
            f"could not sample a {label!r} start in {attempts} attempts")
    raise ConfigError(f"unknown start mode {mode!r}")


def _sweep_trial(payload: dict) -> dict:
    system: HamiltonianSystem = payload["system"]
    icfg: IntegratorConfig = payload["icfg"]
    params = payload["params"]
    rng = np.random.default_rng(payload["seed_seq"])
    n = system.n
    start = _sample_start(payload["start_cfg"], system, params,
                          payload["k_cap"], rng)
    theta0 = rng.uniform(0.0, 2.0 * math.pi, size=n)
    scaled = system.scaled(payload["epsilon"])
    traj = integrate(scaled, State(theta0, start), payload["horizon"], icfg,
                     exit_rho=payload["rho"])
    omegas = traj.actions @ system.model.quadratic.T + system.model.linear
    mask, _, _ = classify_many(omegas, params, payload["k_cap"])
    exit_t = traj.exit_time_online
    return {
        "epsilon": payload["epsilon"],
        "trial": payload["trial"],
        "exit_time": exit_t,
        "censored": exit_t is None,
        "action_drift": action_drift(traj),
        "occupancy_resonant": float(mask.mean()),
        "start": [float(x) for x in start],
    }


def run_sweep(cfg: dict, out_dir: Path, seed: int = 0, threads: int = 1,
              base_dir: Path | None = None) -> dict:
    """Exit-time / drift sweep over an epsilon list with per-trial records."""
    started = time.perf_counter()
    out_dir.mkdir(parents=True, exist_ok=True)
    system, model_hash = build_system(cfg, base_dir)
    icfg = integrator_config(cfg)
    try:
        s = cfg["sweep"]
        epsilons = [float(e) for e in s["epsilons"]]
        trials = int(s["trials"])
        horizon = float(s["horizon"])
        start_cfg = s["start"]
    except KeyError as exc:
        raise ConfigError(f"missing [sweep] key: {exc}") from exc
    if any(b >= a for a, b in zip(epsilons, epsilons[1:])):
        raise ConfigError("epsilon list must be strictly decreasing")
    rho_c = float(s.get("rho_c", 1.0))
    rho_delta = float(s.get("rho_delta", 0.25))
    delta = float(s.get("delta", rho_delta))

    children = np.random.SeedSequence(seed).spawn(len(epsilons) * trials)
    tasks = []
    for ei, eps in enumerate(epsilons):
        params = _zone_params(cfg, epsilon=eps)
        k_cap = _k_cap(cfg, params)
        for trial in range(trials):
            tasks.append({
                "system": system, "icfg": icfg, "params": params,
                "k_cap": k_cap, "epsilon": eps, "trial": trial,
                "horizon": horizon, "rho": rho_c * eps ** rho_delta,
                "start_cfg": start_cfg,
                "seed_seq": children[ei * trials + trial],
            })
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_sweep_trial, tasks))
    else:
        results = [_sweep_trial(t) for t in tasks]
    results.sort(key=lambda r: (-r["epsilon"], r["trial"]))

    trials_path = out_dir / "trials.csv"
    with open(trials_path, "w", encoding="utf-8") as fh:
        fh.write("epsilon,trial,exit_time,censored,action_drift,occupancy_resonant\n")
        for r in results:
            fh.write(",".join([
                _fmt(r["epsilon"]), str(r["trial"]),
                "" if r["exit_time"] is None else _fmt(r["exit_time"]),
                "1" if r["censored"] else "0",
                _fmt(r["action_drift"]), _fmt(r["occupancy_resonant"]),
            ]) + "\n")

    # Per-epsilon summaries; regressions use only uncensored medians.
    summary_rows = []
    xs, ys = [], []
    n = system.n
    exponent = -(1.0 - 8.0 * delta) / (2.0 * n - 4.0)
    for eps in epsilons:
        sub = [r for r in results if r["epsilon"] == eps]
        exits = sorted(r["exit_time"] for r in sub if not r["censored"])
        censored = len(sub) - len(exits)
        median_exit = None
        if len(exits) * 2 > len(sub):
            median_exit = float(np.median(exits))
            xs.append(eps ** exponent)
            ys.append(math.log(median_exit))
        drift_median = float(np.median([r["action_drift"] for r in sub]))
        occupancy = float(np.mean([r["occupancy_resonant"] for r in sub]))
        summary_rows.append({
            "epsilon": eps, "trials": len(sub), "censored": censored,
            "median_exit": median_exit, "median_drift": drift_median,
            "mean_occupancy": occupancy,
        })

    warnings = []
    total_censored = sum(row["censored"] for row in summary_rows)
    if 2 * total_censored > len(results):
        warnings.append("more than half of the trials are censored")
        print("warning: censored-heavy sweep", file=sys.stderr)

    regression = None
    if len(xs) >= 2:
        slope, intercept = np.polyfit(xs, ys, 1)
        pred = np.polyval([slope, intercept], xs)
        ss_res = float(np.sum((np.array(ys) - pred) ** 2))
        ss_tot = float(np.sum((np.array(ys) - np.mean(ys)) ** 2))
        r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
        regression = {"slope": float(slope), "intercept": float(intercept),
                      "r2": r2, "x_exponent": exponent}

    summary_path = out_dir / "summary.csv"
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write("epsilon,trials,censored,median_exit,median_drift,mean_occupancy\n")
        for row in summary_rows:
            fh.write(",".join([
                _fmt(row["epsilon"]), str(row["trials"]), str(row["censored"]),
                "" if row["median_exit"] is None else _fmt(row["median_exit"]),
                _fmt(row["median_drift"]), _fmt(row["mean_occupancy"]),
            ]) + "\n")
    summary_json = out_dir / "summary.json"
    summary_json.write_text(json.dumps({
        "rows": summary_rows, "regression": regression, "warnings": warnings,
    }, sort_keys=True, indent=2) + "\n", encoding="utf-8")

    outputs = {"trials_csv": trials_path.name, "summary_csv": summary_path.name,
               "summary_json": summary_json.name,
               "censored_total": total_censored}
    rec = _make_record("sweep", cfg, model_hash, seed, outputs, started)
    _write_record(rec, out_dir)
    return outputs


# -- detect ------------------------------------------------------------------------


def run_detect(cfg: dict, out_dir: Path, seed: int = 0, threads: int = 1,
               base_dir: Path | None = None) -> dict:
    """Build the frequency curve of a stored trajectory and run the detector."""
    started = time.perf_counter()
    out_dir.mkdir(parents=True, exist_ok=True)
    system, model_hash = build_system(cfg, base_dir)
    try:
        d = cfg["detect"]
        traj_path = d["trajectory"]
        delta = float(d["delta"])
    except KeyError as exc:
        raise ConfigError(f"missing [detect] key: {exc}") from exc
    params = _zone_params(cfg)
    k_cap = float(d.get("k_cap", _k_cap(cfg, params)))
    threshold = d.get("drift_threshold")
    tpath = Path(traj_path)
    if base_dir is not None and not tpath.is_absolute():
        tpath = base_dir / tpath
    try:
        traj = trajectory_from_csv(tpath)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"bad trajectory file {tpath}: {exc}") from exc
    curve = FrequencyCurve.from_trajectory(traj, model=system.model)
    witness = detect(curve, params, delta,
                     drift_threshold=None if threshold is None else float(threshold),
                     K_cap=k_cap)
    path = out_dir / "witness.json"
    path.write_text(witness.to_json() + "\n", encoding="utf-8")
    outputs = {"witness_json": path.name, "t_star": witness.t_star,
               "distance": witness.distance}
    rec = _make_record("detect", cfg, model_hash, seed, outputs, started)
    _write_record(rec, out_dir)
    return outputs


# -- normal-form decay ----------------------------------------------------------------


def _nf_grid(gcfg: dict, n: int):
    base = np.array(gcfg["action_base"], dtype=float)
    offsets = [float(x) for x in gcfg.get("action_offsets", [0.0])]
    theta_counts = int(gcfg.get("theta_counts", 3))
    action_pts = [base + np.array([offsets[i] for i in idx])
                  for idx in np.ndindex(*([len(offsets)] * n))]
    angles = np.linspace(0.0, 2.0 * math.pi, theta_counts, endpoint=False)
    theta_pts = [np.array([angles[i] for i in idx])
                 for idx in np.ndindex(*([theta_counts] * n))]
    return [(th, I) for th in theta_pts for I in action_pts]


def run_nf_decay(cfg: dict, out_dir: Path, seed: int = 0, threads: int = 1,
                 base_dir: Path | None = None) -> dict:
    """Remainder and coordinate-shift decay table over (K, epsilon)."""
    started = time.perf_counter()
    out_dir.mkdir(parents=True, exist_ok=True)
    system, model_hash = build_system(cfg, base_dir)
    model = system.model
    n = system.n
    try:
        nf = cfg["nf_decay"]
        k_list = [float(k) for k in nf["k_list"]]
        epsilons = [float(e) for e in nf["epsilons"]]
        gcfg = nf["grid"]
    except KeyError as exc:
        raise ConfigError(f"missing [nf_decay] key: {exc}") from exc
    generators = nf.get("module", [])
    module = saturate([IntVector(g) for g in generators]) if generators else None
    order = int(nf.get("order", 1))
    grid = _nf_grid(gcfg, n)
    max_flow = int(nf.get("max_flow_points", 32))
    flow_stride = max(1, len(grid) // max_flow)
    flow_grid = grid[::flow_stride]
    action_pts = sorted({tuple(I) for _, I in grid})

    rows = []
    for K in k_list:
        alpha_cfg = nf.get("alpha", "auto")
        if alpha_cfg == "auto":
            dmin = math.inf
            for k in enumerate_modes(n, math.floor(K)):
                if module is not None and module.contains(k):
                    continue
                for I in action_pts:
                    dmin = min(dmin, abs(float(np.dot(model.frequency(I), k.entries))))
            alpha = float(nf.get("alpha_fraction", 0.5)) * dmin
        else:
            alpha = float(alpha_cfg)
        for eps in epsilons:
            scaled = system.perturbation.scaled(eps)
            chi = solve_homological(scaled, model, module, K, alpha,
                                    [np.array(I) for I in action_pts])
            step = lie_transform(HamiltonianSystem(model, scaled), chi, order=order)
            rep = measure_remainder(step, grid, flow_grid=flow_grid)
            rows.append({"K": K, "epsilon": eps,
                         "nonresonant_sup": rep.nonresonant_sup,
                         "coordinate_shift_sup": rep.coordinate_shift_sup})

    path = out_dir / "decay.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("K,epsilon,nonresonant_sup,coordinate_shift_sup\n")
        for r in rows:
            fh.write(",".join([_fmt(r["K"]), _fmt(r["epsilon"]),
                               _fmt(r["nonresonant_sup"]),
                               _fmt(r["coordinate_shift_sup"])]) + "\n")

    fits = {}
    for K in k_list:
        sub = [r for r in rows if r["K"] == K]
        if len(sub) >= 2 and all(r["nonresonant_sup"] > 0 for r in sub):
            le = np.log([r["epsilon"] for r in sub])
            fits[str(K)] = {
                "remainder_slope": float(np.polyfit(le, np.log([r["nonresonant_sup"] for r in sub]), 1)[0]),
                "shift_slope": float(np.polyfit(le, np.log([r["coordinate_shift_sup"] for r in sub]), 1)[0]),
            }
    fits_path = out_dir / "decay_fits.json"
    fits_path.write_text(json.dumps(fits, sort_keys=True, indent=2) + "\n",
                         encoding="utf-8")

    outputs = {"decay_csv": path.name, "fits_json": fits_path.name}
    rec = _make_record("nf-decay", cfg, model_hash, seed, outputs, started)
    _write_record(rec, out_dir)
    return outputs
