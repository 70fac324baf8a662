"""Command-line front end: scenario configs, orchestration, and export.

Subcommands: groundstate, gn-check, evolve, diagnose, sweep.  Every scenario
is driven by a TOML config, writes its artifacts (RFC-4180 CSV and UTF-8
JSON) under the output directory, and finishes with a manifest recording the
config hash, package and library versions, seed, grid hash, and wall time.
Reports carry no timestamps, so identical config and seed reproduce
byte-identical JSON.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import __version__
from .diagnostics import (
    check_bounds,
    fit_blowup_rate,
    NoBlowupError,
    rho,
    virial_series,
    virial_weights,
)
from .evolve import ConservationBreachError, EvolveConfig, run
from .gn import (
    BatterySpec,
    GNKind,
    InequalityKind,
    SHARP_KINDS,
    make_battery,
    sharp_constant,
    verify_inequality,
)
from .grid import Grading, RadialField, RadialGrid, build_grid, fields_to_csv_rows
from .groundstate import (
    EllipticKind,
    EllipticProblem,
    GroundStateProfile,
    RelaxConfig,
    ShootingConfig,
    pohozaev_residuals,
    relax_weinstein,
    shoot,
)
from .model import DerivedIndices, InvalidParamsError, ModelParams, derive_indices


class ConfigValidationError(ValueError):
    """Carries every violated bound, not just the first."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class GridSpec:
    num_points: int = 4096
    r_max: float = 30.0
    grading: Grading = Grading.LOG
    r_min_factor: float = 1e-6

    def build(self, n: int) -> RadialGrid:
        return build_grid(n, self.r_max, self.num_points, self.grading, self.r_min_factor)


@dataclass
class GroundstateCfg:
    kind: EllipticKind = EllipticKind.SINGLE_TERM
    method: str = "shoot"          # or "relax"
    tol_a: float = 1e-13
    tail_tol: float = 1e-6
    residual_tol: float = 1e-3
    pohozaev_tol: float = 1e-4


@dataclass
class BatteryCfg:
    count: int = 200
    seed: int = 2024
    kinds: tuple = ("sharp_gn",)
    eta: float = 0.1
    tail_radius: float = 1.0


@dataclass
class EvolveCfg:
    init: str = "ground_state"     # or "gaussian"
    amplitude: float = 1.0
    width: float = 1.0
    dt0: float = 1e-3
    dt_min: float = 1e-12
    t_end: float = 1.0
    record_stride: int = 10
    snapshot_stride: int = 4
    blowup_factor: float = 1e3
    mass_cap: float = 1e-6
    energy_cap: float = 1e-4
    adaptive: bool = True

    def to_evolve_config(self) -> EvolveConfig:
        return EvolveConfig(
            dt0=self.dt0,
            dt_min=self.dt_min,
            t_end=self.t_end,
            record_stride=self.record_stride,
            snapshot_stride=self.snapshot_stride,
            blowup_factor=self.blowup_factor,
            mass_cap=self.mass_cap,
            energy_cap=self.energy_cap,
            adaptive=self.adaptive,
        )


@dataclass
class DiagnoseCfg:
    input_dir: str = ""
    virial_radius: float = 2.0


@dataclass
class SweepCfg:
    b_values: tuple | None = None       # None: use the template value
    c_values: tuple | None = None
    p_values: tuple | None = None
    amplitude_values: tuple | None = None
    max_runs: int = 10**4


@dataclass
class ScenarioConfig:
    params: ModelParams
    idx: DerivedIndices
    grid: GridSpec
    groundstate: GroundstateCfg
    battery: BatteryCfg
    evolve: EvolveCfg
    diagnose: DiagnoseCfg
    sweep: SweepCfg
    out_dir: str = "out"
    seed: int = 0
    raw: dict = field(default_factory=dict)


def _take(table: dict, key: str, cast, default, errors, label):
    if key not in table:
        return default
    try:
        return cast(table[key])
    except (TypeError, ValueError):
        errors.append(f"{label}.{key}: cannot interpret {table[key]!r}")
        return default


def parse_config(path: str | Path) -> ScenarioConfig:
    """Load and fully validate a TOML config; collects every violation."""
    path = Path(path)
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)

    errors: list[str] = []
    m = raw.get("model", {})
    n = _take(m, "n", int, 3, errors, "model")
    b = _take(m, "b", float, 0.0, errors, "model")
    c = _take(m, "c", float, 0.0, errors, "model")
    p = _take(m, "p", float, 1.0, errors, "model")
    gamma = _take(m, "gamma", float, 0.0, errors, "model")
    params = None
    idx = None
    try:
        params = ModelParams(n, b, c, p, gamma)
        idx = derive_indices(params)
    except InvalidParamsError as exc:
        errors.extend(f"model: {v}" for v in exc.violations)

    if params is not None and "s_c" in m:
        stated = float(m["s_c"])
        if abs(stated - idx.s_c) > 1e-9 * max(1.0, abs(idx.s_c)):
            errors.append(
                f"model.s_c = {stated} inconsistent with the critical-index "
                f"formula n/2 - (2-b+c)/p = {idx.s_c}"
            )

    g = raw.get("grid", {})
    grid_spec = GridSpec(
        num_points=_take(g, "num_points", int, 4096, errors, "grid"),
        r_max=_take(g, "r_max", float, 30.0, errors, "grid"),
        grading=Grading(_take(g, "grading", str, "log", errors, "grid")),
        r_min_factor=_take(g, "r_min_factor", float, 1e-6, errors, "grid"),
    )
    if grid_spec.num_points < 16:
        errors.append(f"grid.num_points = {grid_spec.num_points} < 16")
    if grid_spec.r_max <= 0:
        errors.append(f"grid.r_max = {grid_spec.r_max} <= 0")

    gs = raw.get("groundstate", {})
    gs_cfg = GroundstateCfg(
        kind=EllipticKind(_take(gs, "kind", str, "single_term", errors, "groundstate")),
        method=_take(gs, "method", str, "shoot", errors, "groundstate"),
        tol_a=_take(gs, "tol_a", float, 1e-13, errors, "groundstate"),
        tail_tol=_take(gs, "tail_tol", float, 1e-6, errors, "groundstate"),
        residual_tol=_take(gs, "residual_tol", float, 1e-3, errors, "groundstate"),
        pohozaev_tol=_take(gs, "pohozaev_tol", float, 1e-4, errors, "groundstate"),
    )
    if gs_cfg.method not in ("shoot", "relax"):
        errors.append(f"groundstate.method = {gs_cfg.method!r} not in ('shoot', 'relax')")

    bt = raw.get("battery", {})
    battery_cfg = BatteryCfg(
        count=_take(bt, "count", int, 200, errors, "battery"),
        seed=_take(bt, "seed", int, 2024, errors, "battery"),
        kinds=tuple(bt.get("kinds", ["sharp_gn"])),
        eta=_take(bt, "eta", float, 0.1, errors, "battery"),
        tail_radius=_take(bt, "tail_radius", float, 1.0, errors, "battery"),
    )
    if battery_cfg.count < 100:
        errors.append(f"battery.count = {battery_cfg.count} < 100")
    for kind_name in battery_cfg.kinds:
        try:
            InequalityKind(kind_name)
        except ValueError:
            errors.append(f"battery.kinds: unknown inequality {kind_name!r}")

    ev = raw.get("evolve", {})
    evolve_cfg = EvolveCfg(
        init=_take(ev, "init", str, "ground_state", errors, "evolve"),
        amplitude=_take(ev, "amplitude", float, 1.0, errors, "evolve"),
        width=_take(ev, "width", float, 1.0, errors, "evolve"),
        dt0=_take(ev, "dt0", float, 1e-3, errors, "evolve"),
        dt_min=_take(ev, "dt_min", float, 1e-12, errors, "evolve"),
        t_end=_take(ev, "t_end", float, 1.0, errors, "evolve"),
        record_stride=_take(ev, "record_stride", int, 10, errors, "evolve"),
        snapshot_stride=_take(ev, "snapshot_stride", int, 4, errors, "evolve"),
        blowup_factor=_take(ev, "blowup_factor", float, 1e3, errors, "evolve"),
        mass_cap=_take(ev, "mass_cap", float, 1e-6, errors, "evolve"),
        energy_cap=_take(ev, "energy_cap", float, 1e-4, errors, "evolve"),
        adaptive=_take(ev, "adaptive", bool, True, errors, "evolve"),
    )
    for fname in ("dt0", "dt_min", "t_end"):
        if getattr(evolve_cfg, fname) <= 0:
            errors.append(f"evolve.{fname} must be positive")
    if evolve_cfg.init not in ("ground_state", "gaussian"):
        errors.append(f"evolve.init = {evolve_cfg.init!r} not in ('ground_state', 'gaussian')")

    dg = raw.get("diagnose", {})
    diag_cfg = DiagnoseCfg(
        input_dir=_take(dg, "input", str, "", errors, "diagnose"),
        virial_radius=_take(dg, "R", float, 2.0, errors, "diagnose"),
    )
    if 4.0 * diag_cfg.virial_radius > grid_spec.r_max:
        errors.append(
            f"diagnose.R = {diag_cfg.virial_radius}: need 4R <= grid.r_max = {grid_spec.r_max}"
        )

    sw = raw.get("sweep", {})
    # an absent axis falls back to the template value; an explicitly empty
    # list empties the Cartesian product
    sweep_cfg = SweepCfg(
        b_values=tuple(sw["b"]) if "b" in sw else None,
        c_values=tuple(sw["c"]) if "c" in sw else None,
        p_values=tuple(sw["p"]) if "p" in sw else None,
        amplitude_values=tuple(sw["amplitude"]) if "amplitude" in sw else None,
        max_runs=_take(sw, "max_runs", int, 10**4, errors, "sweep"),
    )
    size = 1
    for axis in (sweep_cfg.b_values, sweep_cfg.c_values, sweep_cfg.p_values, sweep_cfg.amplitude_values):
        size *= len(axis) if axis is not None else 1
    if size > sweep_cfg.max_runs:
        errors.append(f"sweep: {size} runs exceed the cap {sweep_cfg.max_runs}")

    out_dir = raw.get("output", {}).get("dir", "out")
    seed = int(raw.get("output", {}).get("seed", battery_cfg.seed))

    if errors:
        raise ConfigValidationError(errors)
    return ScenarioConfig(
        params=params,
        idx=idx,
        grid=grid_spec,
        groundstate=gs_cfg,
        battery=battery_cfg,
        evolve=evolve_cfg,
        diagnose=diag_cfg,
        sweep=sweep_cfg,
        out_dir=out_dir,
        seed=seed,
        raw=raw,
    )


# ---------------------------------------------------------------------------
# writers

def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _config_hash(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Manifest:
    def __init__(self, out: Path, config_path: Path, cfg: ScenarioConfig):
        self.out = out
        self.started = time.monotonic()
        self.record = {
            "config_sha256": _config_hash(config_path),
            "package_version": __version__,
            "numpy_version": np.__version__,
            "seed": cfg.seed,
            "artifacts": [],
        }

    def add(self, path: Path):
        self.record["artifacts"].append(path.name)
        return path

    def finish(self, grid: RadialGrid | None = None, status: int = 0):
        if grid is not None:
            self.record["grid_hash"] = grid.content_hash()
        self.record["exit_status"] = status
        self.record["wall_time_s"] = round(time.monotonic() - self.started, 3)
        write_json(self.out / "manifest.json", self.record)


def _write_grid_meta(out: Path, cfg: ScenarioConfig, manifest: Manifest):
    meta = {
        "n": cfg.params.n,
        "b": cfg.params.b,
        "c": cfg.params.c,
        "p": cfg.params.p,
        "gamma": cfg.params.gamma,
        "num_points": cfg.grid.num_points,
        "r_max": cfg.grid.r_max,
        "grading": cfg.grid.grading.value,
        "r_min_factor": cfg.grid.r_min_factor,
    }
    write_json(manifest.add(out / "run_meta.json"), meta)


def _write_field_csv(path: Path, f: RadialField):
    write_csv(path, ["r", "re", "im"], fields_to_csv_rows(f))


def _compute_profile(cfg: ScenarioConfig, grid: RadialGrid) -> GroundStateProfile:
    problem = EllipticProblem(cfg.groundstate.kind, cfg.params, cfg.idx)
    if cfg.groundstate.method == "relax":
        return relax_weinstein(problem, grid, RelaxConfig(residual_tol=cfg.groundstate.residual_tol))
    shooting = ShootingConfig(
        tol_a=cfg.groundstate.tol_a,
        tail_tol=cfg.groundstate.tail_tol,
        residual_tol=cfg.groundstate.residual_tol,
    )
    return shoot(problem, grid, shooting)


# ---------------------------------------------------------------------------
# scenarios

def scenario_groundstate(cfg: ScenarioConfig, out: Path, config_path: Path) -> int:
    manifest = Manifest(out, config_path, cfg)
    grid = cfg.grid.build(cfg.params.n)
    profile = _compute_profile(cfg, grid)
    res1, res2 = pohozaev_residuals(profile)
    write_csv(
        manifest.add(out / "profile.csv"),
        ["r", "Q"],
        zip(grid.nodes, profile.field.values.real),
    )
    ok = (
        profile.residual < cfg.groundstate.residual_tol
        and res1 < cfg.groundstate.pohozaev_tol
        and res2 < cfg.groundstate.pohozaev_tol
    )
    write_json(
        manifest.add(out / "norms.json"),
        {
            "center_value": profile.center_value,
            "norms": profile.norms.as_dict(),
            "ode_residual": profile.residual,
            "pohozaev": [res1, res2],
            "passed": ok,
        },
    )
    manifest.finish(grid, 0 if ok else 1)
    return 0 if ok else 1


def scenario_gn_check(cfg: ScenarioConfig, out: Path, config_path: Path) -> int:
    manifest = Manifest(out, config_path, cfg)
    grid = cfg.grid.build(cfg.params.n)
    kinds = [InequalityKind(k) for k in cfg.battery.kinds]

    needs_two_term = InequalityKind.SHARP_GN in kinds
    needs_single = InequalityKind.RADIAL_GN in kinds
    ground_reports = {}
    profile = None
    if needs_two_term:
        problem = EllipticProblem(EllipticKind.TWO_TERM, cfg.params, cfg.idx)
        profile = relax_weinstein(problem, grid)
        ground_reports[InequalityKind.SHARP_GN] = sharp_constant(
            GNKind.TWO_TERM_SHARP, profile, cfg.params, cfg.idx
        )
    if needs_single:
        problem = EllipticProblem(EllipticKind.SINGLE_TERM, cfg.params, cfg.idx)
        single = shoot(problem, grid)
        profile = profile or single
        ground_reports[InequalityKind.RADIAL_GN] = sharp_constant(
            GNKind.MASS_CRITICAL_RADIAL, single, cfg.params, cfg.idx
        )

    spec = BatterySpec(count=cfg.battery.count, seed=cfg.seed)
    battery = make_battery(grid, spec, profile)

    checks = []
    status = 0
    for kind in kinds:
        chk = verify_inequality(
            kind,
            battery,
            cfg.params,
            cfg.idx,
            ground=ground_reports.get(kind),
            R=cfg.battery.tail_radius,
            eta=cfg.battery.eta,
        )
        checks.append(chk.as_dict())
        if kind in SHARP_KINDS and chk.violations:
            status = 1
    write_json(
        manifest.add(out / "inequality_checks.json"),
        {
            "checks": checks,
            "ground": {k.value: v.as_dict() for k, v in ground_reports.items()},
        },
    )
    manifest.finish(grid, status)
    return status


def _initial_data(cfg: ScenarioConfig, grid: RadialGrid) -> RadialField:
    if cfg.evolve.init == "gaussian":
        vals = cfg.evolve.amplitude * np.exp(-((grid.nodes / cfg.evolve.width) ** 2))
        return RadialField(vals.astype(complex), grid)
    profile = _compute_profile(cfg, grid)
    return RadialField(cfg.evolve.amplitude * profile.field.values, grid)


def scenario_evolve(cfg: ScenarioConfig, out: Path, config_path: Path) -> int:
    manifest = Manifest(out, config_path, cfg)
    grid = cfg.grid.build(cfg.params.n)
    _write_grid_meta(out, cfg, manifest)
    write_csv(manifest.add(out / "grid.csv"), ["r", "w"], zip(grid.nodes, grid.weights))
    u0 = _initial_data(cfg, grid)

    status = 0
    try:
        series, report = run(u0, cfg.params, cfg.evolve.to_evolve_config(), cfg.idx)
    except ConservationBreachError as exc:
        write_json(
            manifest.add(out / "error.json"),
            {"error": "conservation_breach", "message": str(exc)},
        )
        manifest.finish(grid, 1)
        return 1

    write_csv(
        manifest.add(out / "timeseries.csv"),
        ["t", "mass", "energy", "gradb", "supamp"],
        ((f.t, f.mass, f.energy, f.grad_norm, f.sup_amplitude) for f in series.frames),
    )
    frames_dir = out / "frames"
    frames_dir.mkdir(exist_ok=True)
    for i, fr in enumerate(series.frames):
        if fr.snapshot is not None:
            path = frames_dir / f"frame_{i:06d}.csv"
            _write_field_csv(path, RadialField(fr.snapshot, grid))
            manifest.record["artifacts"].append(f"frames/{path.name}")
    write_json(manifest.add(out / "blowup.json"), report.as_dict())

    if report.detected:
        try:
            fit = fit_blowup_rate(series)
            write_json(manifest.add(out / "ratefit.json"), fit.as_dict())
            bounds = check_bounds(series, fit, cfg.params, cfg.idx)
            write_json(manifest.add(out / "bounds.json"), bounds.as_dict())
        except NoBlowupError as exc:
            write_json(
                manifest.add(out / "error.json"),
                {"error": "no_blowup_fit", "message": str(exc)},
            )
            status = 1
    manifest.finish(grid, status)
    return status


def _load_run(in_dir: Path):
    from .evolve import Frame, TimeSeries

    meta = json.loads((in_dir / "run_meta.json").read_text())
    params = ModelParams(meta["n"], meta["b"], meta["c"], meta["p"], meta["gamma"])
    grid = build_grid(
        meta["n"],
        meta["r_max"],
        meta["num_points"],
        Grading(meta["grading"]),
        meta["r_min_factor"],
    )
    rows = list(csv.DictReader(open(in_dir / "timeseries.csv", encoding="utf-8")))
    snaps = {}
    frames_dir = in_dir / "frames"
    if frames_dir.is_dir():
        for f in sorted(frames_dir.glob("frame_*.csv")):
            i = int(f.stem.split("_")[1])
            data = np.loadtxt(f, delimiter=",", skiprows=1)
            snaps[i] = data[:, 1] + 1j * data[:, 2]
    frames = []
    for i, row in enumerate(rows):
        frames.append(
            Frame(
                float(row["t"]),
                float(row["mass"]),
                float(row["energy"]),
                float(row["gradb"]),
                float(row["supamp"]),
                snaps.get(i),
            )
        )
    return params, grid, TimeSeries(frames, 1, grid)


def scenario_diagnose(cfg: ScenarioConfig, out: Path, config_path: Path) -> int:
    manifest = Manifest(out, config_path, cfg)
    in_dir = Path(cfg.diagnose.input_dir)
    params, grid, series = _load_run(in_dir)
    idx = derive_indices(params)

    weights = virial_weights(cfg.diagnose.virial_radius, grid, params)
    vs = virial_series(series, weights, params)
    write_csv(
        manifest.add(out / "virial.csv"),
        ["t", "V", "Vdot", "Vddot", "fd_Vdot", "fd_Vddot"],
        zip(vs.t, vs.v, vs.v_dot, vs.v_ddot, vs.fd_v_dot, vs.fd_v_ddot),
    )
    interior = slice(1, -2)
    vdot_err = float(
        np.nanmax(
            np.abs(vs.fd_v_dot[interior] - vs.v_dot[interior])
            / np.maximum(np.abs(vs.v_dot[interior]), 1e-30)
        )
    )

    snaps = series.snapshot_frames()
    last = RadialField(snaps[-1].snapshot, grid)
    rho_rep = rho(last, cfg.diagnose.virial_radius / 2.0, idx)
    write_csv(
        manifest.add(out / "rho.csv"), ["r_prime", "value"], rho_rep.shells
    )

    summary = {
        "vdot_identity_max_rel_err": vdot_err,
        "rho": rho_rep.as_dict(),
    }
    status = 0
    try:
        fit = fit_blowup_rate(series)
        summary["ratefit"] = fit.as_dict()
        summary["bounds"] = check_bounds(series, fit, params, idx).as_dict()
    except NoBlowupError:
        summary["ratefit"] = None
    write_json(manifest.add(out / "diagnostics.json"), summary)
    manifest.finish(grid, status)
    return status


def _sweep_one(args):
    (bval, cval, pval, amp), base_raw, out_dir, seed = args
    try:
        params = ModelParams(
            int(base_raw.get("model", {}).get("n", 3)), bval, cval, pval,
            float(base_raw.get("model", {}).get("gamma", 0.0)),
        )
        idx = derive_indices(params)
        g = base_raw.get("grid", {})
        grid = build_grid(
            params.n,
            float(g.get("r_max", 30.0)),
            int(g.get("num_points", 4096)),
            Grading(g.get("grading", "log")),
            float(g.get("r_min_factor", 1e-6)),
        )
        ev = base_raw.get("evolve", {})
        problem = EllipticProblem(EllipticKind.SINGLE_TERM, params, idx)
        profile = shoot(problem, grid)
        u0 = RadialField(amp * profile.field.values, grid)
        cfg = EvolveConfig(
            dt0=float(ev.get("dt0", 1e-3)),
            t_end=float(ev.get("t_end", 1.0)),
            record_stride=int(ev.get("record_stride", 10)),
            snapshot_stride=int(ev.get("snapshot_stride", 4)),
            blowup_factor=float(ev.get("blowup_factor", 1e3)),
        )
        series, report = run(u0, params, cfg, idx)
        row = {
            "b": bval, "c": cval, "p": pval, "amplitude": amp,
            "detected": report.detected, "reason": report.reason.value,
            "t_last": report.t_last, "t_star": "", "alpha": "", "error": "",
        }
        if report.detected:
            try:
                fit = fit_blowup_rate(series)
                row["t_star"] = fit.t_star
                row["alpha"] = fit.alpha
            except NoBlowupError as exc:
                row["error"] = f"fit: {exc}"
        return row
    except Exception as exc:  # per-run failures land in the summary
        return {
            "b": bval, "c": cval, "p": pval, "amplitude": amp,
            "detected": "", "reason": "", "t_last": "", "t_star": "",
            "alpha": "", "error": f"{type(exc).__name__}: {exc}",
        }


def scenario_sweep(cfg: ScenarioConfig, out: Path, config_path: Path, threads: int = 1) -> int:
    manifest = Manifest(out, config_path, cfg)
    sw = cfg.sweep
    b_values = sw.b_values if sw.b_values is not None else (cfg.params.b,)
    c_values = sw.c_values if sw.c_values is not None else (cfg.params.c,)
    p_values = sw.p_values if sw.p_values is not None else (cfg.params.p,)
    amp_values = (
        sw.amplitude_values if sw.amplitude_values is not None else (cfg.evolve.amplitude,)
    )
    points = [
        (b, c, p, a)
        for b in b_values
        for c in c_values
        for p in p_values
        for a in amp_values
    ]
    jobs = [(pt, cfg.raw, str(out), cfg.seed) for pt in points]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    rows.sort(key=lambda r: (r["b"], r["c"], r["p"], r["amplitude"]))
    header = ["b", "c", "p", "amplitude", "detected", "reason", "t_last", "t_star", "alpha", "error"]
    write_csv(
        manifest.add(out / "summary.csv"),
        header,
        ([row[k] for k in header] for row in rows),
    )
    manifest.finish(None, 0)
    return 0


# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dinls",
        description="numerical laboratory for the divergence-form inhomogeneous NLS",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("groundstate", "gn-check", "evolve", "diagnose", "sweep"):
        sp = sub.add_parser(name)
        sp.add_argument("-c", "--config", required=True)
        sp.add_argument("-o", "--out", default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)

    config_path = Path(args.config)
    try:
        cfg = parse_config(config_path)
    except ConfigValidationError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 2
    except FileNotFoundError:
        print(f"config not found: {config_path}", file=sys.stderr)
        return 2

    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    out = Path(args.out) if args.out else Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if args.command == "groundstate":
        return scenario_groundstate(cfg, out, config_path)
    if args.command == "gn-check":
        return scenario_gn_check(cfg, out, config_path)
    if args.command == "evolve":
        return scenario_evolve(cfg, out, config_path)
    if args.command == "diagnose":
        return scenario_diagnose(cfg, out, config_path)
    if args.command == "sweep":
        return scenario_sweep(cfg, out, config_path, threads=args.threads)
    return 2


if __name__ == "__main__":
    sys.exit(main())
