"""Finite-horizon optimal control problem over the nominal error dynamics.

Direct single shooting: the decision variables are the N input triples, the
nominal vehicle pose is rolled out with one RK4 step per knot, and errors are
read off through the tracking transform.  State constraints (raised e_d
floor, inflated obstacle and boundary clearances, terminal set) enter through
an escalating quadratic penalty; the input box is handled natively by a
bound-constrained quasi-Newton solve.  Gradients are forward finite
differences evaluated in one batched rollout, which keeps a full solve within
a few milliseconds.

Everything here is deterministic given the warm start: fixed initial guess,
fixed penalty schedule, fixed iteration order.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

try:  # optional JIT of the hot evaluation kernel; numpy fallback below
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

    def _njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap

from .errorframe import ErrorState, ReferenceTrajectory
from .geometry import KnownWorld
from .tube import TightenedSets
from .vehicle import BodyVelocity

FD_STEP = 1e-6              # forward-difference step for gradients
CONSTRAINT_MARGIN = 1e-3    # constraints are solved with this slack so the
                            # returned iterate is strictly feasible
FEASIBILITY_TOL = 1e-9      # accepted residual violation
PENALTY_START = 1e2
PENALTY_GROWTH = 10.0
PENALTY_CAP = 1e6
MAX_ITER_PER_STAGE = 60


@dataclass(frozen=True)
class FhocpConfig:
    """Horizon, discretization and cost weights of the tracking problem."""

    steps_N: int
    dt: float
    weight_Q: np.ndarray
    weight_P: np.ndarray
    weight_R: np.ndarray
    terminal_eps: float

    def __post_init__(self):
        if self.steps_N < 1:
            raise ValueError("need at least one step in the horizon")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.terminal_eps <= 0.0:
            raise ValueError("terminal_eps must be positive")
        for name in ("weight_Q", "weight_P", "weight_R"):
            mat = np.asarray(getattr(self, name), dtype=float)
            if mat.shape != (3, 3):
                raise ValueError(f"{name} must be 3x3")
            if not np.allclose(mat, mat.T, rtol=1e-12, atol=1e-12):
                raise ValueError(f"{name} must be symmetric")
            try:
                np.linalg.cholesky(mat)
            except np.linalg.LinAlgError:
                raise ValueError(f"{name} must be positive definite") from None
            object.__setattr__(self, name, mat)

    @property
    def horizon_T(self) -> float:
        return self.steps_N * self.dt


@dataclass
class FhocpSolution:
    """Optimal input sequence with the nominal rollout it produces."""

    inputs: np.ndarray          # (N, 3)
    nominal_errors: list        # N + 1 ErrorState values
    nominal_poses: np.ndarray   # (N + 1, 4) vehicle poses of the rollout
    cost: float
    status: str                 # "solved" | "infeasible" | "max_iterations"
    max_violation: float
    penalty_weight: float
    n_iterations: int

    @property
    def input_sequence(self) -> list:
        return [BodyVelocity.from_array(v) for v in self.inputs]


def stage_cost(e_hat: ErrorState, v_hat: BodyVelocity, config: FhocpConfig) -> float:
    """Quadratic running cost on the error triple and the input."""
    e = e_hat.triple
    v = v_hat.array
    return float(e @ config.weight_Q @ e + v @ config.weight_R @ v)


def terminal_cost(e_hat: ErrorState, config: FhocpConfig) -> float:
    e = e_hat.triple
    return float(e @ config.weight_P @ e)


def in_terminal_set(
    e_hat: ErrorState,
    config: FhocpConfig,
    sets: TightenedSets | None = None,
    clearance: float | None = None,
) -> bool:
    """Terminal-set membership: weighted norm within the radius, inside the
    tightened error set when that context is supplied (closed conventions)."""
    if math.sqrt(terminal_cost(e_hat, config)) > config.terminal_eps:
        return False
    if sets is not None and e_hat.e_d < sets.epsilon_bar:
        return False
    if clearance is not None and clearance < 0.0:
        return False
    return True


# ---------------------------------------------------------------------------
# Transcription.
# ---------------------------------------------------------------------------


@dataclass
class NonlinearProgram:
    """A transcribed instance: frozen data plus batched evaluation routines."""

    e0: ErrorState
    t0: float
    config: FhocpConfig
    sets: TightenedSets
    ref: ReferenceTrajectory
    pose0: np.ndarray               # (4,) reconstructed initial vehicle pose
    ref_positions: np.ndarray       # (N + 1, 3) reference at the knot times
    obstacle_centers: np.ndarray    # (M, 3) discovered obstacles
    obstacle_radii: np.ndarray      # (M,) radii inflated by vehicle + tube
    boundary_center: np.ndarray
    boundary_radius: float          # shrunk by vehicle + tube

    def __post_init__(self):
        # diagonal-weight fast paths for the batched evaluations
        self._q_diag = _diag_or_none(self.config.weight_Q)
        self._p_diag = _diag_or_none(self.config.weight_P)
        self._r_diag = _diag_or_none(self.config.weight_R)
        # reusable forward-difference workspace: row 0 is the base point
        n = 3 * self.config.steps_N
        self._fd_eye = FD_STEP * np.eye(n)
        self._fd_X = np.empty((n + 1, n))

    @property
    def n_vars(self) -> int:
        return 3 * self.config.steps_N

    def rollout(self, inputs: np.ndarray):
        """Nominal rollout for a batch of input sequences.

        ``inputs`` has shape (B, N, 3) or (N, 3); returns poses (B, N+1, 4)
        and error triples (B, N+1, 3).
        """
        single = inputs.ndim == 2
        V = inputs[None] if single else inputs
        B, N, _ = V.shape
        poses = np.empty((B, N + 1, 4))
        poses[:, 0] = self.pose0
        p = np.broadcast_to(self.pose0, (B, 4)).copy()
        dt = self.config.dt
        for k in range(N):
            p = _rk4_nominal(p, V[:, k], dt)
            poses[:, k + 1] = p
        triples = _error_triples(poses, self.ref_positions)
        if single:
            return poses[0], triples[0]
        return poses, triples

    def costs(self, V: np.ndarray, triples: np.ndarray) -> np.ndarray:
        """True (unpenalized) cost for a batch; rectangle rule on the stages."""
        cfg = self.config
        stage_e = _quad_form(triples[:, :-1], cfg.weight_Q, self._q_diag)
        stage_v = _quad_form(V, cfg.weight_R, self._r_diag)
        term = _quad_form(triples[:, -1], cfg.weight_P, self._p_diag)
        return cfg.dt * (stage_e + stage_v).sum(axis=1) + term

    def constraints(self, poses: np.ndarray, triples: np.ndarray) -> np.ndarray:
        """Stacked constraint values g <= 0 for a batch, shape (B, n_con).

        Knot 0 is the measured state and carries no constraints.
        """
        pos = poses[:, 1:, :3]
        parts = [self.sets.epsilon_bar - triples[:, 1:, 0]]
        if len(self.obstacle_centers):
            d = np.linalg.norm(
                pos[:, :, None, :] - self.obstacle_centers[None, None], axis=-1
            )
            parts.append((self.obstacle_radii[None, None] - d).reshape(pos.shape[0], -1))
        d_b = np.linalg.norm(pos - self.boundary_center[None, None], axis=-1)
        parts.append(d_b - self.boundary_radius)
        term = np.sqrt(_quad_form(triples[:, -1], self.config.weight_P, self._p_diag))
        parts.append((term - self.config.terminal_eps)[:, None])
        return np.concatenate(parts, axis=1)

    def max_violation(self, inputs: np.ndarray) -> float:
        poses, triples = self.rollout(inputs)
        g = self.constraints(poses[None], triples[None])
        return float(g.max())


def _diag_or_none(mat: np.ndarray) -> np.ndarray | None:
    return np.diag(mat).copy() if np.count_nonzero(mat - np.diag(np.diag(mat))) == 0 else None


def _quad_form(x: np.ndarray, mat: np.ndarray, diag: np.ndarray | None) -> np.ndarray:
    if diag is not None:
        return (x * x * diag).sum(axis=-1)
    return np.einsum("...i,ij,...j->...", x, mat, x)


def _rk4_nominal(p: np.ndarray, v: np.ndarray, dt: float) -> np.ndarray:
    """One RK4 step of the nominal kinematics with a held input.

    Heave and yaw are linear with constant rate, so the stage sums collapse;
    the surge channel reduces to the classical 1-4-1 weighting of the heading
    at the start, midpoint and end of the step.  This is exactly the RK4
    update of the nominal system, just with the algebra done once.
    """
    u, w, r = v[..., 0], v[..., 1], v[..., 2]
    psi0 = p[..., 3]
    psi1 = psi0 + 0.5 * r * dt
    psi2 = psi0 + r * dt
    scale = (dt / 6.0) * u
    out = np.empty_like(p)
    out[..., 0] = p[..., 0] + scale * (np.cos(psi0) + 4.0 * np.cos(psi1) + np.cos(psi2))
    out[..., 1] = p[..., 1] + scale * (np.sin(psi0) + 4.0 * np.sin(psi1) + np.sin(psi2))
    out[..., 2] = p[..., 2] + w * dt
    out[..., 3] = psi2
    return out


def _error_triples(poses: np.ndarray, ref_positions: np.ndarray) -> np.ndarray:
    ex = poses[..., 0] - ref_positions[..., 0]
    ey = poses[..., 1] - ref_positions[..., 1]
    psi = poses[..., 3]
    ed = np.hypot(ex, ey)
    out = np.empty(poses.shape[:-1] + (3,))
    out[..., 0] = ed
    out[..., 1] = poses[..., 2] - ref_positions[..., 2]
    out[..., 2] = (ex * np.sin(psi) - ey * np.cos(psi)) / np.maximum(ed, 1e-12)
    return out


def transcribe(
    e0: ErrorState,
    t_k: float,
    config: FhocpConfig,
    sets: TightenedSets,
    ref: ReferenceTrajectory,
    world: KnownWorld,
) -> NonlinearProgram:
    """Build a program instance anchored at the measured error state.

    The nominal rollout needs the absolute pose, which is reconstructed from
    the error context and the reference position at ``t_k``.  Obstacle
    constraints use only the obstacles discovered so far, with radii inflated
    by the vehicle radius plus the tube inflation.
    """
    pd0 = ref.position(t_k)
    pose0 = np.array([pd0[0] + e0.e_x, pd0[1] + e0.e_y, pd0[2] + e0.e_z, e0.psi])
    knots = np.arange(config.steps_N + 1) * config.dt + t_k
    ref_positions = np.stack([ref.position(float(t)) for t in knots])
    discovered = world.discovered_obstacles()
    ws = world.full
    inflate = ws.vehicle_radius + sets.inflation
    # obstacles beyond the horizon's reach cannot constrain any knot
    reach = 2.0 * sets.box.v_bar * config.horizon_T + 1.0
    near = [
        ob
        for ob in discovered
        if float(np.linalg.norm(pose0[:3] - ob.center)) <= ob.radius + inflate + reach
    ]
    centers = np.stack([ob.center for ob in near]) if near else np.zeros((0, 3))
    radii = np.array([ob.radius + inflate for ob in near])
    return NonlinearProgram(
        e0=e0,
        t0=t_k,
        config=config,
        sets=sets,
        ref=ref,
        pose0=pose0,
        ref_positions=ref_positions,
        obstacle_centers=centers,
        obstacle_radii=radii,
        boundary_center=ws.boundary_center.copy(),
        boundary_radius=ws.boundary_radius - inflate,
    )


# ---------------------------------------------------------------------------
# Solver.
# ---------------------------------------------------------------------------


@_njit(cache=True, fastmath=False)
def _eval_kernel(X, pose0, ref_pos, dt, Q, R, P, eps_bar, term_eps, obs_c, obs_r, b_c, b_r, mu, margin):
    """Penalized objective for a batch of input sequences, one scalar pass.

    Identical arithmetic to the vectorized rollout/cost/constraint routines:
    RK4 in the collapsed 1-4-1 form, rectangle-rule stage costs, quadratic
    hinge penalties with the constraint margin.
    """
    B, N, _ = X.shape
    n_obs = obs_c.shape[0]
    out = np.empty(B)
    for b in range(B):
        x, y, z, psi = pose0[0], pose0[1], pose0[2], pose0[3]
        cost = 0.0
        pen = 0.0
        ed = 0.0
        ez = 0.0
        eo = 0.0
        for k in range(N + 1):
            ex = x - ref_pos[k, 0]
            ey = y - ref_pos[k, 1]
            ez = z - ref_pos[k, 2]
            ed = math.hypot(ex, ey)
            eo = (ex * math.sin(psi) - ey * math.cos(psi)) / max(ed, 1e-12)
            if k > 0:
                g = eps_bar - ed
                if g + margin > 0.0:
                    pen += (g + margin) ** 2
                for m in range(n_obs):
                    dx = x - obs_c[m, 0]
                    dy = y - obs_c[m, 1]
                    dz = z - obs_c[m, 2]
                    g = obs_r[m] - math.sqrt(dx * dx + dy * dy + dz * dz)
                    if g + margin > 0.0:
                        pen += (g + margin) ** 2
                dx = x - b_c[0]
                dy = y - b_c[1]
                dz = z - b_c[2]
                g = math.sqrt(dx * dx + dy * dy + dz * dz) - b_r
                if g + margin > 0.0:
                    pen += (g + margin) ** 2
            if k < N:
                u, w, r = X[b, k, 0], X[b, k, 1], X[b, k, 2]
                stage = (
                    Q[0, 0] * ed * ed + Q[1, 1] * ez * ez + Q[2, 2] * eo * eo
                    + 2.0 * (Q[0, 1] * ed * ez + Q[0, 2] * ed * eo + Q[1, 2] * ez * eo)
                )
                stage += (
                    R[0, 0] * u * u + R[1, 1] * w * w + R[2, 2] * r * r
                    + 2.0 * (R[0, 1] * u * w + R[0, 2] * u * r + R[1, 2] * w * r)
                )
                cost += dt * stage
                psi1 = psi + 0.5 * r * dt
                psi2 = psi + r * dt
                scale = (dt / 6.0) * u
                x = x + scale * (math.cos(psi) + 4.0 * math.cos(psi1) + math.cos(psi2))
                y = y + scale * (math.sin(psi) + 4.0 * math.sin(psi1) + math.sin(psi2))
                z = z + w * dt
                psi = psi2
        term = (
            P[0, 0] * ed * ed + P[1, 1] * ez * ez + P[2, 2] * eo * eo
            + 2.0 * (P[0, 1] * ed * ez + P[0, 2] * ed * eo + P[1, 2] * ez * eo)
        )
        cost += term
        g = math.sqrt(term) - term_eps
        if g + margin > 0.0:
            pen += (g + margin) ** 2
        out[b] = cost + mu * pen
    return out


def _penalized_batch(program: NonlinearProgram, X: np.ndarray, mu: float) -> np.ndarray:
    """Penalized objective for a batch of flat decision vectors (B, 3N)."""
    N = program.config.steps_N
    V = X.reshape(X.shape[0], N, 3)
    if _HAVE_NUMBA:
        return _eval_kernel(
            np.ascontiguousarray(V),
            program.pose0,
            program.ref_positions,
            program.config.dt,
            program.config.weight_Q,
            program.config.weight_R,
            program.config.weight_P,
            program.sets.epsilon_bar,
            program.config.terminal_eps,
            program.obstacle_centers,
            program.obstacle_radii,
            program.boundary_center,
            program.boundary_radius,
            mu,
            CONSTRAINT_MARGIN,
        )
    poses, triples = program.rollout(V)
    cost = program.costs(V, triples)
    g = program.constraints(poses, triples)
    hinge = np.maximum(g + CONSTRAINT_MARGIN, 0.0)
    return cost + mu * (hinge**2).sum(axis=1)


def _fun_and_grad(program: NonlinearProgram, x: np.ndarray, mu: float):
    X = program._fd_X
    X[:] = x[None, :]
    X[1:] += program._fd_eye
    f = _penalized_batch(program, X, mu)
    return float(f[0]), (f[1:] - f[0]) / FD_STEP


def solve(
    program: NonlinearProgram,
    warm_start: np.ndarray | None = None,
    trace_path=None,
) -> FhocpSolution:
    """Penalty-method solve with bound-constrained quasi-Newton inner loops.

    The penalty weight starts at ``PENALTY_START`` and is multiplied by
    ``PENALTY_GROWTH`` whenever the stage finishes with a residual violation,
    up to ``PENALTY_CAP``.  If the warm start cannot be driven feasible, the
    solve is retried once from the zero-input cold start; only when both fail
    is the instance declared infeasible.
    """
    n = program.n_vars
    box = program.sets.box
    bounds = [(-box.u_max, box.u_max), (-box.w_max, box.w_max), (-box.r_max, box.r_max)]
    bounds = bounds * program.config.steps_N

    starts = []
    if warm_start is not None:
        ws = np.asarray(warm_start, dtype=float).reshape(-1)
        if ws.size != n:
            raise ValueError(f"warm start has {ws.size} entries, expected {n}")
        starts.append(np.clip(ws, [b[0] for b in bounds], [b[1] for b in bounds]))
    starts.append(np.zeros(n))

    trace_rows: list[tuple[int, float, float]] = []
    best = None  # (feasible, cost, x, viol, mu, iters)
    for x0 in starts:
        x = x0.copy()
        mu = PENALTY_START
        iters = 0
        while True:
            res = minimize(
                lambda z: _fun_and_grad(program, z, mu),
                x,
                jac=True,
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": MAX_ITER_PER_STAGE, "ftol": 1e-10, "gtol": 1e-5},
            )
            x = res.x
            iters += int(res.nit)
            viol = program.max_violation(x.reshape(program.config.steps_N, 3))
            if trace_path is not None:
                poses, triples = program.rollout(x.reshape(-1, 3))
                cost_now = float(
                    program.costs(x.reshape(1, -1, 3), triples[None])[0]
                )
                trace_rows.append((iters, cost_now, viol))
            if viol <= FEASIBILITY_TOL or mu >= PENALTY_CAP:
                break
            mu *= PENALTY_GROWTH
        V = x.reshape(program.config.steps_N, 3)
        poses, triples = program.rollout(V)
        cost = float(program.costs(V[None], triples[None])[0])
        feasible = viol <= FEASIBILITY_TOL
        candidate = (feasible, cost, x, viol, mu, iters)
        if best is None:
            best = candidate
        elif candidate[0] and (not best[0] or candidate[1] < best[1]):
            best = candidate
        if feasible:
            break

    feasible, cost, x, viol, mu, iters = best
    V = x.reshape(program.config.steps_N, 3)
    poses, triples = program.rollout(V)
    if feasible:
        status = "solved" if iters < MAX_ITER_PER_STAGE * 6 else "max_iterations"
    else:
        status = "infeasible"

    if trace_path is not None:
        with open(trace_path, "w") as fh:
            fh.write("iteration,cost,max_violation\n")
            for row in trace_rows:
                fh.write(f"{row[0]},{row[1]!r},{row[2]!r}\n")

    errors = [program.e0]
    for k in range(1, program.config.steps_N + 1):
        errors.append(
            ErrorState.from_components(
                e_x=float(poses[k, 0] - program.ref_positions[k, 0]),
                e_y=float(poses[k, 1] - program.ref_positions[k, 1]),
                e_z=float(poses[k, 2] - program.ref_positions[k, 2]),
                psi=float(poses[k, 3]),
            )
        )
    return FhocpSolution(
        inputs=V,
        nominal_errors=errors,
        nominal_poses=poses,
        cost=cost,
        status=status,
        max_violation=viol,
        penalty_weight=mu,
        n_iterations=iters,
    )


def verify_solution(
    program: NonlinearProgram, solution: FhocpSolution, tol: float = 1e-6
) -> tuple[bool, list[str]]:
    """Independent feasibility check: replay the inputs and test every constraint.

    Verifies the input box, the raised e_d floor, inflated obstacle and
    boundary clearances at every knot, and the terminal-set membership, each
    against ``tol``.
    """
    failures: list[str] = []
    V = solution.inputs
    box = program.sets.box
    for k, v in enumerate(V):
        if abs(v[0]) > box.u_max + tol:
            failures.append(f"step {k}: |u| = {abs(v[0]):.6g} > {box.u_max}")
        if abs(v[1]) > box.w_max + tol:
            failures.append(f"step {k}: |w| = {abs(v[1]):.6g} > {box.w_max}")
        if abs(v[2]) > box.r_max + tol:
            failures.append(f"step {k}: |r| = {abs(v[2]):.6g} > {box.r_max}")

    poses, triples = program.rollout(V)
    for k in range(1, program.config.steps_N + 1):
        ed = float(triples[k, 0])
        if ed < program.sets.epsilon_bar - tol:
            failures.append(
                f"knot {k}: e_d = {ed:.6g} below the floor {program.sets.epsilon_bar}"
            )
        pos = poses[k, :3]
        for c, r in zip(program.obstacle_centers, program.obstacle_radii):
            dist = float(np.linalg.norm(pos - c))
            if dist < r - tol:
                failures.append(
                    f"knot {k}: distance {dist:.6g} inside inflated obstacle "
                    f"radius {r:.6g}"
                )
        d_b = float(np.linalg.norm(pos - program.boundary_center))
        if d_b > program.boundary_radius + tol:
            failures.append(
                f"knot {k}: boundary distance {d_b:.6g} beyond "
                f"{program.boundary_radius:.6g}"
            )
    term = math.sqrt(
        float(triples[-1] @ program.config.weight_P @ triples[-1])
    )
    if term > program.config.terminal_eps + tol:
        failures.append(
            f"terminal: weighted norm {term:.6g} > {program.config.terminal_eps}"
        )
    return not failures, failures


def shift_warm_start(previous: FhocpSolution) -> np.ndarray:
    """Shift the previous input sequence by one step, repeating the last input."""
    V = previous.inputs
    return np.concatenate([V[1:], V[-1:]], axis=0).reshape(-1)
