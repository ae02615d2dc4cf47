"""Scenario files, deterministic closed-loop simulation, logs and artifacts.

A scenario is a single YAML document with named sections (workspace,
reference, disturbance, velocity box, tube parameters, optimal-control
settings, initial state, timing).  Unknown keys anywhere are errors: runs
must be reproducible from the file alone.  Randomness enters only through
the named seed, which drives the seedable PCG64 generator (the one RNG used
anywhere in the package).

``run_scenario`` steps the ground-truth plant with sub-stepped RK4, invokes
the controller every control period, and records one log row per period.
``check_invariants`` replays the contract over a log; ``emit_outputs`` writes
the CSV log plus three SVG diagnostics.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import fhocp
from .controller import ControllerState, control_step, intersample_nominal_propagate, nominal_error_now
from .errorframe import (
    ErrorConstraintSet,
    ReferenceTrajectory,
    circle_reference,
    line_reference,
    stationary_reference,
    to_error_coords,
)
from .geometry import KnownWorld, Obstacle, Workspace, min_clearance, validate_spherical_world
from .tube import (
    ConfigurationError,
    ErrorDomain,
    TubeParameters,
    load_tube_artifact,
    max_horizon,
    tighten_sets,
)
from .vehicle import BodyVelocity, DisturbanceModel, VehicleState, VelocityBox, step

SCENARIO_SCHEMA_VERSION = 1

CSV_COLUMNS = [
    "t", "x", "y", "z", "psi", "u", "w", "r",
    "ed", "ez", "eo", "ed_hat", "ez_hat", "eo_hat",
    "rho_norm", "clearance", "n_discovered", "solver_status", "solve_ms",
]


# ---------------------------------------------------------------------------
# Scenario document.
# ---------------------------------------------------------------------------


@dataclass
class Scenario:
    workspace: Workspace
    reference: ReferenceTrajectory
    disturbance: DisturbanceModel
    velocity_box: VelocityBox
    tube: TubeParameters
    fhocp_config: fhocp.FhocpConfig
    initial_state: VehicleState
    duration: float
    dt: float
    seed: int
    epsilon: float
    plant_substeps: int = 10
    actuation_substeps: int = 1
    allow_fallback: bool = False

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ConfigurationError("dt must be positive")
        if self.duration < 0.0:
            raise ConfigurationError("duration must be nonnegative")
        steps = self.duration / self.dt
        if abs(steps - round(steps)) > 1e-9:
            raise ConfigurationError("duration must be a whole number of control periods")
        if self.fhocp_config.dt != self.dt:
            raise ConfigurationError("optimizer discretization must match the control period")
        bound = max_horizon(
            self.workspace.sensing_radius, self.velocity_box.v_bar, self.tube.xi_tilde
        )
        if self.fhocp_config.horizon_T > bound:
            raise ConfigurationError(
                f"prediction horizon {self.fhocp_config.horizon_T:.6g} s exceeds the "
                f"sensing-limited bound {bound:.6g} s"
            )
        report = validate_spherical_world(self.workspace)
        if not report.ok:
            raise ConfigurationError(
                "workspace violates the spherical-world separation: "
                + "; ".join(report.violations)
            )
        # fails fast when the tube leaves no input authority
        self.tightened = tighten_sets(
            ErrorConstraintSet(epsilon=self.epsilon), self.velocity_box, self.tube
        )
        self.reference.check_derivative(np.linspace(0.0, max(self.duration, 1.0), 7))

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


def _take(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigurationError(f"{where}: unknown keys {sorted(unknown)}")


def _require(section: dict, keys: set, where: str) -> None:
    missing = keys - set(section)
    if missing:
        raise ConfigurationError(f"{where}: missing keys {sorted(missing)}")


def _build_reference(doc: dict) -> ReferenceTrajectory:
    _require(doc, {"kind"}, "reference")
    kind = doc["kind"]
    if kind == "circle":
        _take(doc, {"kind", "radius", "period", "center", "depth_amplitude"}, "reference")
        return circle_reference(
            radius=float(doc.get("radius", 3.0)),
            period=float(doc.get("period", 50.0)),
            center=np.asarray(doc.get("center", [0.0, 0.0, 0.0]), dtype=float),
            depth_amplitude=float(doc.get("depth_amplitude", 0.0)),
        )
    if kind == "stationary":
        _take(doc, {"kind", "point"}, "reference")
        _require(doc, {"point"}, "reference")
        return stationary_reference(np.asarray(doc["point"], dtype=float))
    if kind == "line":
        _take(doc, {"kind", "start", "velocity"}, "reference")
        _require(doc, {"start", "velocity"}, "reference")
        return line_reference(
            np.asarray(doc["start"], dtype=float),
            np.asarray(doc["velocity"], dtype=float),
        )
    raise ConfigurationError(f"reference: unknown kind {kind!r}")


def _build_disturbance(doc: dict, sway_doc: dict | None, seed: int) -> DisturbanceModel:
    _require(doc, {"kind"}, "disturbance")
    kind = doc["kind"]
    if kind == "none":
        _take(doc, {"kind"}, "disturbance")
        model = DisturbanceModel.none()
    elif kind == "sinusoidal":
        _take(doc, {"kind", "amplitude", "period"}, "disturbance")
        model = DisturbanceModel.sinusoidal(
            amplitude=float(doc.get("amplitude", 0.1)),
            period=float(doc.get("period", 15.0)),
        )
    elif kind == "steady":
        _take(doc, {"kind", "speed", "bearing", "inclination"}, "disturbance")
        _require(doc, {"speed", "bearing", "inclination"}, "disturbance")
        model = DisturbanceModel.steady_current(
            float(doc["speed"]), float(doc["bearing"]), float(doc["inclination"])
        )
    elif kind == "random_fourier":
        _take(doc, {"kind", "omega_bar", "n_modes", "max_rate"}, "disturbance")
        _require(doc, {"omega_bar"}, "disturbance")
        model = DisturbanceModel.random_fourier(
            omega_bar=float(doc["omega_bar"]),
            seed=seed,
            n_modes=int(doc.get("n_modes", 3)),
            max_rate=float(doc.get("max_rate", 1.0)),
        )
    else:
        raise ConfigurationError(f"disturbance: unknown kind {kind!r}")

    if sway_doc is not None:
        _require(sway_doc, {"kind"}, "sway")
        if sway_doc["kind"] == "none":
            _take(sway_doc, {"kind"}, "sway")
        elif sway_doc["kind"] == "cosine":
            _take(sway_doc, {"kind", "amplitude", "period"}, "sway")
            amp = float(sway_doc.get("amplitude", 0.05))
            period = float(sway_doc.get("period", 20.0))
            rate = 2.0 * math.pi / period
            model = replace(
                model,
                sway_bound=amp,
                sway_signal=lambda t: amp * math.cos(rate * t),
                total_bound=model.total_bound + amp,
            )
        else:
            raise ConfigurationError(f"sway: unknown kind {sway_doc['kind']!r}")
    return model


def _build_tube(doc: dict, base_dir: Path) -> TubeParameters:
    _require(doc, {"source"}, "tube")
    if doc["source"] == "artifact":
        _take(doc, {"source", "path"}, "tube")
        _require(doc, {"path"}, "tube")
        return load_tube_artifact(base_dir / doc["path"])
    if doc["source"] != "inline":
        raise ConfigurationError(f"tube: unknown source {doc['source']!r}")
    keys = {"source", "lip1", "lip2", "j_lower", "xi_tilde", "sigma", "rho_tilde", "domain"}
    _take(doc, keys, "tube")
    _require(doc, keys, "tube")
    dom = doc["domain"]
    _take(dom, {"ed_min", "ed_max", "ez_max", "surge_gain_min", "yaw_gain_min"}, "tube.domain")
    _require(dom, {"ed_min", "ed_max", "ez_max"}, "tube.domain")
    domain = ErrorDomain(**{k: float(v) for k, v in dom.items()})
    return TubeParameters(
        lip1=float(doc["lip1"]),
        lip2=float(doc["lip2"]),
        j_lower=float(doc["j_lower"]),
        xi_tilde=float(doc["xi_tilde"]),
        sigma=float(doc["sigma"]),
        rho_tilde=float(doc["rho_tilde"]),
        domain=domain,
    )


def _build_fhocp(doc: dict, dt: float) -> fhocp.FhocpConfig:
    _take(doc, {"steps", "q_diag", "p_diag", "p_scale", "r_diag", "terminal_eps"}, "fhocp")
    _require(doc, {"steps", "q_diag", "r_diag", "terminal_eps"}, "fhocp")
    if ("p_diag" in doc) == ("p_scale" in doc):
        raise ConfigurationError("fhocp: give exactly one of p_diag or p_scale")
    Q = np.diag([float(v) for v in doc["q_diag"]])
    P = (
        np.diag([float(v) for v in doc["p_diag"]])
        if "p_diag" in doc
        else float(doc["p_scale"]) * Q
    )
    R = np.diag([float(v) for v in doc["r_diag"]])
    return fhocp.FhocpConfig(
        steps_N=int(doc["steps"]),
        dt=dt,
        weight_Q=Q,
        weight_P=P,
        weight_R=R,
        terminal_eps=float(doc["terminal_eps"]),
    )


def load_scenario(path, seed_override: int | None = None) -> Scenario:
    """Parse and validate a scenario document; any unknown key is an error."""
    path = Path(path)
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: not a mapping")

    top_keys = {
        "schema_version", "duration", "dt", "seed", "epsilon", "initial_state",
        "workspace", "reference", "disturbance", "sway", "velocity_box", "tube",
        "fhocp", "plant_substeps", "actuation_substeps", "allow_fallback",
    }
    _take(doc, top_keys, str(path))
    _require(
        doc,
        {
            "schema_version", "duration", "dt", "seed", "epsilon", "initial_state",
            "workspace", "reference", "disturbance", "velocity_box", "tube", "fhocp",
        },
        str(path),
    )
    if doc["schema_version"] != SCENARIO_SCHEMA_VERSION:
        raise ConfigurationError(
            f"{path}: unsupported schema_version {doc['schema_version']!r}"
        )

    ws_doc = doc["workspace"]
    _take(
        ws_doc,
        {"boundary_center", "boundary_radius", "vehicle_radius", "sensing_radius", "obstacles"},
        "workspace",
    )
    _require(
        ws_doc,
        {"boundary_center", "boundary_radius", "vehicle_radius", "sensing_radius"},
        "workspace",
    )
    obstacles = []
    for ob in ws_doc.get("obstacles", []) or []:
        _take(ob, {"id", "center", "radius"}, "workspace.obstacles")
        _require(ob, {"id", "center", "radius"}, "workspace.obstacles")
        obstacles.append(
            Obstacle(center=np.asarray(ob["center"], dtype=float), radius=float(ob["radius"]), id=int(ob["id"]))
        )
    workspace = Workspace(
        boundary_center=np.asarray(ws_doc["boundary_center"], dtype=float),
        boundary_radius=float(ws_doc["boundary_radius"]),
        obstacles=obstacles,
        vehicle_radius=float(ws_doc["vehicle_radius"]),
        sensing_radius=float(ws_doc["sensing_radius"]),
    )

    seed = int(doc["seed"]) if seed_override is None else int(seed_override)
    box_doc = doc["velocity_box"]
    _take(box_doc, {"u_max", "w_max", "r_max"}, "velocity_box")
    _require(box_doc, {"u_max", "w_max", "r_max"}, "velocity_box")
    box = VelocityBox(float(box_doc["u_max"]), float(box_doc["w_max"]), float(box_doc["r_max"]))

    init_doc = doc["initial_state"]
    _take(init_doc, {"x", "y", "z", "psi"}, "initial_state")
    _require(init_doc, {"x", "y", "z", "psi"}, "initial_state")

    dt = float(doc["dt"])
    return Scenario(
        workspace=workspace,
        reference=_build_reference(doc["reference"]),
        disturbance=_build_disturbance(doc["disturbance"], doc.get("sway"), seed),
        velocity_box=box,
        tube=_build_tube(doc["tube"], path.parent),
        fhocp_config=_build_fhocp(doc["fhocp"], dt),
        initial_state=VehicleState(
            float(init_doc["x"]), float(init_doc["y"]), float(init_doc["z"]), float(init_doc["psi"])
        ),
        duration=float(doc["duration"]),
        dt=dt,
        seed=seed,
        epsilon=float(doc["epsilon"]),
        plant_substeps=int(doc.get("plant_substeps", 10)),
        actuation_substeps=int(doc.get("actuation_substeps", 1)),
        allow_fallback=bool(doc.get("allow_fallback", False)),
    )


# ---------------------------------------------------------------------------
# Simulation log.
# ---------------------------------------------------------------------------


@dataclass
class LogRow:
    t: float
    x: float
    y: float
    z: float
    psi: float
    u: float
    w: float
    r: float
    ed: float
    ez: float
    eo: float
    ed_hat: float
    ez_hat: float
    eo_hat: float
    rho_norm: float
    clearance: float
    n_discovered: int
    solver_status: str
    solve_ms: float


@dataclass
class SimLog:
    rows: list[LogRow] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    error: str | None = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


def write_log_csv(log: SimLog, path) -> None:
    """CSV with the fixed column schema; floats in shortest round-trip form."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in log.rows:
            writer.writerow(
                [
                    repr(float(getattr(r, c)))
                    if c not in ("n_discovered", "solver_status")
                    else (getattr(r, c) if c == "solver_status" else int(getattr(r, c)))
                    for c in CSV_COLUMNS
                ]
            )


def read_log_csv(path) -> SimLog:
    log = SimLog()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise ConfigurationError(f"{path}: unexpected CSV columns {reader.fieldnames}")
        for row in reader:
            kwargs = {}
            for c in CSV_COLUMNS:
                if c == "n_discovered":
                    kwargs[c] = int(row[c])
                elif c == "solver_status":
                    kwargs[c] = row[c]
                else:
                    kwargs[c] = float(row[c])
            log.rows.append(LogRow(**kwargs))
    return log


# ---------------------------------------------------------------------------
# Closed-loop run.
# ---------------------------------------------------------------------------


def run_scenario(scenario: Scenario) -> SimLog:
    """Deterministic closed-loop simulation of plant plus controller.

    One log row per control period.  The logged nominal error is the
    controller's state prediction carried over from the previous period, so
    ``rho_norm`` measures the within-interval deviation the tube must cover;
    it is zero at the first sample by construction.  A controller abort
    (singular transform, unrecoverable infeasibility with fallbacks
    disallowed) truncates the log and stores the failure reason.
    """
    world = KnownWorld(full=scenario.workspace)
    truth = KnownWorld.fully_known(scenario.workspace)
    ctrl = ControllerState(
        world=world,
        tube=scenario.tube,
        config=scenario.fhocp_config,
        sets=scenario.tightened,
        ref=scenario.reference,
        input_box=scenario.velocity_box,
        epsilon=scenario.epsilon,
    )
    log = SimLog(meta={"seed": scenario.seed})
    state = scenario.initial_state
    disturbance = scenario.disturbance.omega
    predicted = None  # nominal error predicted for this sample by the last plan

    for k in range(scenario.n_steps):
        t = k * scenario.dt
        e = to_error_coords(state, t, scenario.reference)
        tic = time.perf_counter()
        try:
            applied, ctrl = control_step(state, t, ctrl)
        except Exception as exc:  # singular transform or solver blow-up
            log.error = f"t={t:.3f}: controller abort: {exc}"
            break
        solve_ms = (time.perf_counter() - tic) * 1e3

        e_hat = predicted if predicted is not None else e
        rho = float(np.linalg.norm(e.triple - e_hat.triple))
        log.rows.append(
            LogRow(
                t=t,
                x=state.x, y=state.y, z=state.z, psi=state.psi,
                u=applied.u, w=applied.w, r=applied.r,
                ed=e.e_d, ez=e.e_z, eo=e.e_o,
                ed_hat=e_hat.e_d, ez_hat=e_hat.e_z, eo_hat=e_hat.e_o,
                rho_norm=rho,
                clearance=min_clearance(state.position, truth),
                n_discovered=len(ctrl.world.discovered),
                solver_status=ctrl.last_status,
                solve_ms=solve_ms,
            )
        )
        if ctrl.last_status == "fallback" and not scenario.allow_fallback:
            if not ctrl.fallback_inputs:
                log.error = f"t={t:.3f}: controller abort: fallback exhausted"
                break

        # plant propagation over the control period, with optional sub-period
        # feedback evaluation against the propagated nominal anchor
        n_act = max(1, scenario.actuation_substeps)
        sub_dt = scenario.dt / n_act
        plant_sub = max(1, scenario.plant_substeps // n_act)
        for j in range(n_act):
            tj = t + j * sub_dt
            if j > 0:
                e_j = to_error_coords(state, tj, scenario.reference)
                e_hat_j = nominal_error_now(ctrl)
                kappa = -ctrl.tube.sigma * (e_j.triple - e_hat_j.triple)
                applied = ctrl.input_box.clamp(
                    BodyVelocity.from_array(ctrl.committed_input + kappa)
                )
            state = step(state, applied, disturbance, tj, sub_dt, substeps=plant_sub)
            intersample_nominal_propagate(ctrl, sub_dt)

        if ctrl.last_solution is not None:
            predicted = ctrl.last_solution.nominal_errors[1]
        else:
            predicted = None

    log.meta.update(
        clamp_count=ctrl.clamp_count,
        fallback_count=ctrl.fallback_count,
        domain_exit_count=ctrl.domain_exit_count,
        events=list(ctrl.events),
    )
    return log


def run_monte_carlo(
    scenario_path, runs: int, base_seed: int | None = None, max_workers: int | None = None
) -> list[SimLog]:
    """Independent runs with derived seeds, merged in run-index order."""
    base = load_scenario(scenario_path).seed if base_seed is None else base_seed
    seeds = [base + i for i in range(runs)]
    if runs == 1:
        return [run_scenario(load_scenario(scenario_path, seed_override=seeds[0]))]
    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        futures = [
            pool.submit(_run_with_seed, str(scenario_path), s) for s in seeds
        ]
        return [f.result() for f in futures]


def _run_with_seed(scenario_path: str, seed: int) -> SimLog:
    return run_scenario(load_scenario(scenario_path, seed_override=seed))


# ---------------------------------------------------------------------------
# Invariant checking and artifact emission.
# ---------------------------------------------------------------------------


@dataclass
class InvariantReport:
    checks: list  # (name, ok, detail)
    warnings: list

    @property
    def ok(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def summary(self) -> str:
        lines = [
            f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
            for name, ok, detail in self.checks
        ]
        lines += [f"[WARN] {w}" for w in self.warnings]
        return "\n".join(lines)


def check_invariants(log: SimLog, scenario: Scenario) -> InvariantReport:
    """Replay the run contract over a log.

    Input box membership (zero tolerance), the e_d floor, tube containment of
    the within-interval deviation, ground-truth collision freedom, absence of
    fallbacks, and the sensing-limited horizon bound.
    """
    checks = []
    warnings = []
    if not log.rows:
        warnings.append("empty log: per-sample checks hold vacuously")

    def first_bad(name, values, predicate, describe):
        for r, v in zip(log.rows, values):
            if not predicate(v):
                checks.append((name, False, describe(r, v)))
                return
        checks.append((name, True, f"all {len(log.rows)} samples"))

    box = scenario.velocity_box
    first_bad(
        "input_box",
        [(r.u, r.w, r.r) for r in log.rows],
        lambda v: abs(v[0]) <= box.u_max and abs(v[1]) <= box.w_max and abs(v[2]) <= box.r_max,
        lambda r, v: f"input {v} outside bounds at t={r.t}",
    )
    first_bad(
        "ed_floor",
        [r.ed for r in log.rows],
        lambda v: v >= scenario.epsilon,
        lambda r, v: f"e_d = {v} < {scenario.epsilon} at t={r.t}",
    )
    first_bad(
        "tube_containment",
        [r.rho_norm for r in log.rows],
        lambda v: v <= scenario.tube.rho_tilde,
        lambda r, v: f"deviation {v} > rho_tilde = {scenario.tube.rho_tilde} at t={r.t}",
    )
    first_bad(
        "clearance",
        [r.clearance for r in log.rows],
        lambda v: v >= 0.0,
        lambda r, v: f"clearance {v} < 0 at t={r.t}",
    )
    first_bad(
        "fallback_free",
        [r.solver_status for r in log.rows],
        lambda v: v in ("solved", "max_iterations"),
        lambda r, v: f"solver status {v!r} at t={r.t}",
    )
    bound = max_horizon(
        scenario.workspace.sensing_radius, scenario.velocity_box.v_bar, scenario.tube.xi_tilde
    )
    ok = scenario.fhocp_config.horizon_T <= bound
    checks.append(
        (
            "horizon_bound",
            ok,
            f"T = {scenario.fhocp_config.horizon_T:.6g} s vs limit {bound:.6g} s",
        )
    )
    if log.error:
        checks.append(("run_completed", False, log.error))
    return InvariantReport(checks=checks, warnings=warnings)


def emit_outputs(log: SimLog, out_dir) -> list[Path]:
    """Write trajectory.csv plus errors/inputs/path SVG diagnostics."""
    from . import svgplot

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    csv_path = out_dir / "trajectory.csv"
    write_log_csv(log, csv_path)
    written.append(csv_path)

    ts = [r.t for r in log.rows]
    scenario_meta = log.meta.get("scenario", {})
    epsilon = scenario_meta.get("epsilon")
    bounds = scenario_meta.get("bounds")

    errors_svg = svgplot.line_plot(
        ts,
        [
            ("e_d", [r.ed for r in log.rows]),
            ("e_z", [r.ez for r in log.rows]),
            ("e_o", [r.eo for r in log.rows]),
        ],
        title="tracking errors",
        xlabel="t [s]",
        ylabel="error",
        hlines=[("epsilon", epsilon)] if epsilon is not None else None,
    )
    (out_dir / "errors.svg").write_text(errors_svg)
    written.append(out_dir / "errors.svg")

    hlines = None
    if bounds is not None:
        hlines = [
            ("u_max", bounds[0]), ("-u_max", -bounds[0]),
            ("w_max", bounds[1]), ("-w_max", -bounds[1]),
            ("r_max", bounds[2]), ("-r_max", -bounds[2]),
        ]
    inputs_svg = svgplot.line_plot(
        ts,
        [
            ("u", [r.u for r in log.rows]),
            ("w", [r.w for r in log.rows]),
            ("r", [r.r for r in log.rows]),
        ],
        title="applied inputs",
        xlabel="t [s]",
        ylabel="input",
        hlines=hlines,
    )
    (out_dir / "inputs.svg").write_text(inputs_svg)
    written.append(out_dir / "inputs.svg")

    circles = []
    for ob in scenario_meta.get("obstacles", []):
        circles.append((ob[0], ob[1], ob[2], "#d62728", False))
    sensing = scenario_meta.get("sensing_radius")
    if log.rows and sensing is not None:
        last = log.rows[-1]
        circles.append((last.x, last.y, sensing, "#1f77b4", True))
    path_svg = svgplot.path_plot(
        [(r.x, r.y) for r in log.rows],
        circles,
        scenario_meta.get("reference_xy", []),
        title="top view",
    )
    (out_dir / "path.svg").write_text(path_svg)
    written.append(out_dir / "path.svg")
    return written


def attach_plot_context(log: SimLog, scenario: Scenario) -> None:
    """Store the scenario facts the SVG plots draw (bounds, obstacles, reference)."""
    ref_xy = []
    steps = scenario.n_steps
    for k in range(0, steps + 1):
        p = scenario.reference.position(k * scenario.dt)
        ref_xy.append((float(p[0]), float(p[1])))
    log.meta["scenario"] = {
        "epsilon": scenario.epsilon,
        "bounds": (
            scenario.velocity_box.u_max,
            scenario.velocity_box.w_max,
            scenario.velocity_box.r_max,
        ),
        "obstacles": [
            (float(ob.center[0]), float(ob.center[1]), float(ob.radius))
            for ob in scenario.workspace.obstacles
        ],
        "sensing_radius": scenario.workspace.sensing_radius,
        "reference_xy": ref_xy,
    }
