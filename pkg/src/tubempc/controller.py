"""Receding-horizon closed loop: sense, tighten, solve, apply.

At every sampling instant the nominal error state is reset to the measured
one, the finite-horizon problem is solved for the nominal input sequence, and
the applied input is the nominal action plus the ancillary feedback.  Because
of the per-sample reset the feedback correction vanishes exactly at the
sampling instants; it becomes active when the actuation rate exceeds the
solve rate, where the nominal state is propagated open loop between samples.

Solver infeasibility falls back to the unconsumed tail of the last feasible
plan (with the feedback correction against its predicted nominal states) and,
once that is exhausted, to hovering.  Every fallback and every input clamp is
recorded; certified runs must show neither.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fhocp
from .errorframe import ErrorState, ReferenceTrajectory, to_error_coords
from .geometry import KnownWorld, detect_obstacles
from .tube import TightenedSets, TubeParameters, ancillary_feedback
from .vehicle import BodyVelocity, VehicleState, VelocityBox


@dataclass
class ControllerState:
    """Everything the loop owns: world knowledge, plans, and bookkeeping."""

    world: KnownWorld
    tube: TubeParameters
    config: fhocp.FhocpConfig
    sets: TightenedSets
    ref: ReferenceTrajectory
    input_box: VelocityBox          # physical (untightened) bounds, safety clamp
    epsilon: float
    clock: float = 0.0
    last_solution: fhocp.FhocpSolution | None = None
    committed_input: np.ndarray | None = None  # nominal action of this interval
    nominal_pose: np.ndarray | None = None     # propagated nominal anchor
    nominal_clock: float = 0.0
    fallback_inputs: list = field(default_factory=list)
    fallback_poses: list = field(default_factory=list)
    clamp_count: int = 0
    fallback_count: int = 0
    domain_exit_count: int = 0
    events: list = field(default_factory=list)
    last_status: str = "none"

    def predicted_error_next(self) -> ErrorState | None:
        """Nominal error predicted for the next sampling instant."""
        if self.last_solution is None:
            return None
        return self.last_solution.nominal_errors[1]


def _warm_start_conflicts(
    solution: fhocp.FhocpSolution,
    new_ids: set,
    ctrl: ControllerState,
) -> bool:
    """Does a newly discovered obstacle cut into the tube around the old plan?"""
    shifted = solution.nominal_poses[1:, :3]
    inflate = ctrl.world.full.vehicle_radius + 2.0 * ctrl.tube.rho_tilde
    for ob in ctrl.world.full.obstacles:
        if ob.id not in new_ids:
            continue
        d = np.linalg.norm(shifted - ob.center[None], axis=1)
        if float(d.min()) < ob.radius + inflate:
            return True
    return False


def control_step(
    measured: VehicleState, t: float, ctrl: ControllerState
) -> tuple[BodyVelocity, ControllerState]:
    """One sampling instant: returns the applied input and the updated state."""
    e = to_error_coords(measured, t, ctrl.ref)

    before = set(ctrl.world.discovered)
    detect_obstacles(measured.position, ctrl.world)
    new_ids = ctrl.world.discovered - before

    warm = None
    if ctrl.last_solution is not None:
        warm = fhocp.shift_warm_start(ctrl.last_solution)
        if new_ids and _warm_start_conflicts(ctrl.last_solution, new_ids, ctrl):
            ctrl.events.append(
                f"t={t:.3f}: discovery of {sorted(new_ids)} invalidates the "
                "previous plan; cold start"
            )
            warm = None

    program = fhocp.transcribe(e, t, ctrl.config, ctrl.sets, ctrl.ref, ctrl.world)
    solution = fhocp.solve(program, warm_start=warm)

    if solution.status != "infeasible":
        ctrl.last_solution = solution
        ctrl.fallback_inputs = [v.copy() for v in solution.inputs[1:]]
        ctrl.fallback_poses = [p.copy() for p in solution.nominal_poses[2:]]
        v_nominal = solution.inputs[0]
        # per-sample reset: the nominal anchor coincides with the measurement,
        # so the feedback correction is exactly zero here
        kappa = ancillary_feedback(e, solution.nominal_errors[0], ctrl.tube.sigma)
        ctrl.nominal_pose = solution.nominal_poses[0].copy()
        status = solution.status
    else:
        ctrl.fallback_count += 1
        if ctrl.fallback_inputs:
            v_nominal = ctrl.fallback_inputs.pop(0)
            pose_pred = ctrl.fallback_poses.pop(0) if ctrl.fallback_poses else None
            if pose_pred is not None and ctrl.nominal_pose is not None:
                e_hat = to_error_coords(
                    VehicleState.from_array(ctrl.nominal_pose), t, ctrl.ref
                )
                kappa = ancillary_feedback(e, e_hat, ctrl.tube.sigma)
            else:
                kappa = np.zeros(3)
            ctrl.events.append(f"t={t:.3f}: infeasible; reusing shifted plan")
            status = "fallback"
        else:
            v_nominal = np.zeros(3)
            kappa = np.zeros(3)
            ctrl.events.append(f"t={t:.3f}: infeasible with no plan left; hover")
            status = "fallback"
        ctrl.last_solution = None

    raw = BodyVelocity.from_array(v_nominal + kappa)
    applied = ctrl.input_box.clamp(raw)
    if not ctrl.input_box.contains(raw):
        ctrl.clamp_count += 1
        ctrl.events.append(f"t={t:.3f}: input clamp active on {raw}")

    if not bool(ctrl.tube.domain.contains(e.e_x, e.e_y, e.e_z, e.psi)):
        ctrl.domain_exit_count += 1

    ctrl.committed_input = v_nominal.copy()
    ctrl.nominal_clock = t
    ctrl.clock = t
    ctrl.last_status = status
    return applied, ctrl


def intersample_nominal_propagate(ctrl: ControllerState, dt_sub: float) -> ControllerState:
    """Advance the nominal anchor under the committed input.

    Uses the same integrator and step layout as the solver rollout, so
    propagating over one control period reproduces the solver's own one-step
    prediction exactly.
    """
    if ctrl.committed_input is None or ctrl.nominal_pose is None:
        raise RuntimeError("no committed nominal input to propagate")
    pose = ctrl.nominal_pose[None, :].copy()
    pose = fhocp._rk4_nominal(pose, ctrl.committed_input[None, :], dt_sub)
    ctrl.nominal_pose = pose[0]
    ctrl.nominal_clock += dt_sub
    return ctrl


def nominal_error_now(ctrl: ControllerState) -> ErrorState:
    """Error coordinates of the propagated nominal anchor at its own clock."""
    if ctrl.nominal_pose is None:
        raise RuntimeError("no nominal anchor available")
    return to_error_coords(
        VehicleState.from_array(ctrl.nominal_pose), ctrl.nominal_clock, ctrl.ref
    )
