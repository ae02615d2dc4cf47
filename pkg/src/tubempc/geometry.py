"""Spherical-world workspace: obstacles, admissibility and range-limited sensing.

The workspace is a large bounding sphere containing a set of spherical
obstacles.  The vehicle itself is abstracted as a ball of radius
``vehicle_radius`` and perceives obstacles inside a ball of radius
``sensing_radius``.  All clearances are signed: negative means the vehicle
ball overlaps an obstacle or pokes through the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Obstacle:
    """A static spherical obstacle."""

    center: np.ndarray
    radius: float
    id: int

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.center.shape != (3,):
            raise ValueError("obstacle center must be a 3-vector")
        if self.radius <= 0.0:
            raise ValueError(f"obstacle {self.id}: radius must be positive")


@dataclass
class Workspace:
    """Bounding sphere plus obstacle list, with vehicle and sensing radii."""

    boundary_center: np.ndarray
    boundary_radius: float
    obstacles: list[Obstacle]
    vehicle_radius: float
    sensing_radius: float

    def __post_init__(self):
        self.boundary_center = np.asarray(self.boundary_center, dtype=float)
        if self.boundary_radius <= 0.0 or self.vehicle_radius <= 0.0:
            raise ValueError("boundary and vehicle radii must be positive")
        if self.sensing_radius <= self.vehicle_radius:
            raise ValueError("sensing radius must exceed the vehicle radius")
        ids = [ob.id for ob in self.obstacles]
        if len(ids) != len(set(ids)):
            raise ValueError("obstacle ids must be unique")


@dataclass
class KnownWorld:
    """The controller's view of the workspace: ground truth plus a discovered set.

    ``discovered`` only ever grows; obstacles outside sensing range so far are
    invisible to clearance queries made through this object.
    """

    full: Workspace
    discovered: set[int] = field(default_factory=set)

    @classmethod
    def fully_known(cls, workspace: Workspace) -> "KnownWorld":
        return cls(full=workspace, discovered={ob.id for ob in workspace.obstacles})

    def discovered_obstacles(self) -> list[Obstacle]:
        return [ob for ob in self.full.obstacles if ob.id in self.discovered]


@dataclass
class WorldValidationReport:
    ok: bool
    violations: list[str]


def validate_spherical_world(workspace: Workspace) -> WorldValidationReport:
    """Check the pairwise-corridor property of the spherical world.

    Every obstacle pair must be separated by strictly more than a full vehicle
    corridor (``2 * vehicle_radius``) plus both radii, and every obstacle must
    leave the same corridor to the boundary sphere.
    """
    r_veh = workspace.vehicle_radius
    violations: list[str] = []
    obs = workspace.obstacles
    for i in range(len(obs)):
        for j in range(i + 1, len(obs)):
            a, b = obs[i], obs[j]
            sep = float(np.linalg.norm(a.center - b.center))
            needed = 2.0 * r_veh + a.radius + b.radius
            if not sep > needed:
                violations.append(
                    f"obstacles {a.id} and {b.id}: separation {sep:.6g} "
                    f"<= {needed:.6g}"
                )
    for ob in obs:
        gap = (
            workspace.boundary_radius
            - float(np.linalg.norm(ob.center - workspace.boundary_center))
            - ob.radius
        )
        if not gap > 2.0 * r_veh:
            violations.append(
                f"obstacle {ob.id}: boundary gap {gap:.6g} <= {2.0 * r_veh:.6g}"
            )
    return WorldValidationReport(ok=not violations, violations=violations)


def min_clearance(position: np.ndarray, world: KnownWorld) -> float:
    """Signed clearance of the vehicle ball at ``position``.

    Minimum over the discovered obstacles of distance-to-surface minus the
    vehicle radius, also bounded by the gap to the workspace boundary.
    Negative values mean the vehicle ball intersects an obstacle or leaves
    the boundary sphere.
    """
    position = np.asarray(position, dtype=float)
    ws = world.full
    clearance = (
        ws.boundary_radius
        - float(np.linalg.norm(position - ws.boundary_center))
        - ws.vehicle_radius
    )
    for ob in world.discovered_obstacles():
        c = float(np.linalg.norm(position - ob.center)) - ob.radius - ws.vehicle_radius
        clearance = min(clearance, c)
    return clearance


def detect_obstacles(position: np.ndarray, world: KnownWorld) -> KnownWorld:
    """Add every obstacle whose ball intersects the sensing ball to ``discovered``.

    Mutates ``world`` (the discovered set is monotone) and returns it.
    """
    position = np.asarray(position, dtype=float)
    r_sense = world.full.sensing_radius
    for ob in world.full.obstacles:
        if ob.id in world.discovered:
            continue
        if float(np.linalg.norm(position - ob.center)) <= r_sense + ob.radius:
            world.discovered.add(ob.id)
    return world


def is_state_admissible(state, world: KnownWorld) -> bool:
    """Membership in the admissible set: nonnegative clearance (closed sets)."""
    return min_clearance(state.position, world) >= 0.0
