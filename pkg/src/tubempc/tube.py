"""Off-line tube certification and constraint tightening.

A static feedback ``kappa(e, e_hat) = -sigma (e - e_hat)`` keeps the real
error trajectory inside a ball of radius ``rho_tilde`` around the nominal
one, provided

    sigma > (L1 + L2) / J_lower   and   rho_tilde = xi_tilde / (sigma J_lower - L1 - L2)

where L1 and L2 are Lipschitz constants of the input and drift terms of the
error dynamics, J_lower lower-bounds the smallest eigenvalue of the
symmetrized input Jacobian, and xi_tilde bounds the disturbance channel.

None of these constants is available in closed form: they are estimated by
randomized sampling over an explicit operational domain and inflated by a
safety factor.  The domain must exclude the configurations where the
symmetrized Jacobian loses definiteness (surge pointing away from the error,
or the planar error aligned with an axis of the heading frame), which is why
it carries explicit lower bounds on the surge and yaw gains of the Jacobian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np
import yaml

from .errorframe import (
    ErrorState,
    ReferenceTrajectory,
    ErrorConstraintSet,
    batch_drift,
    batch_jacobian,
    batch_triple,
)
from .vehicle import VelocityBox


class ConfigurationError(ValueError):
    """A scenario or tube configuration that cannot be realized."""


class CertificationError(RuntimeError):
    """Raised when sampling finds the certification assumptions violated."""


@dataclass(frozen=True)
class ErrorDomain:
    """Operational error domain over which tube constants are certified.

    ``surge_gain_min`` bounds J[0, 0] = (e_x cos psi + e_y sin psi) / e_d from
    below (heading at most acos(surge_gain_min) away from the error
    direction); ``yaw_gain_min`` bounds J[2, 2] = e_x e_y / e_d**2, keeping the
    yaw channel's authority over the orientation error away from zero.
    """

    ed_min: float
    ed_max: float
    ez_max: float
    surge_gain_min: float = 0.1
    yaw_gain_min: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.ed_min <= self.ed_max:
            raise ValueError("need 0 < ed_min <= ed_max")
        if self.ez_max < 0.0:
            raise ValueError("ez_max must be nonnegative")
        if not 0.0 <= self.surge_gain_min < 1.0:
            raise ValueError("surge_gain_min must lie in [0, 1)")
        if not 0.0 <= self.yaw_gain_min < 0.5:
            raise ValueError("yaw_gain_min must lie in [0, 0.5)")

    def contains(self, ex, ey, ez, psi) -> np.ndarray:
        ed = np.hypot(ex, ey)
        surge_gain = (ex * np.cos(psi) + ey * np.sin(psi)) / ed
        yaw_gain = ex * ey / ed**2
        return (
            (ed >= self.ed_min)
            & (ed <= self.ed_max)
            & (np.abs(ez) <= self.ez_max)
            & (surge_gain >= self.surge_gain_min)
            & (yaw_gain >= self.yaw_gain_min)
        )

    def sample(self, n: int, rng: np.random.Generator, interior: float = 0.0):
        """Draw ``n`` configurations (e_x, e_y, e_z, psi) from the domain.

        The error-vector angle is drawn from the arcs where the yaw gain
        clears its bound, and the heading offset from the arc where the surge
        gain clears its bound, so every sample is in-domain by construction.
        ``interior`` in [0, 1) shrinks all ranges toward their centers.
        """
        lo = self.ed_min + 0.5 * interior * (self.ed_max - self.ed_min)
        hi = self.ed_max - 0.5 * interior * (self.ed_max - self.ed_min)
        ed = rng.uniform(lo, hi, size=n)
        ez = rng.uniform(-1.0, 1.0, size=n) * self.ez_max * (1.0 - interior)

        # yaw gain = sin(2 theta) / 2 >= yaw_gain_min on two arcs per turn
        gain = self.yaw_gain_min + interior * (0.5 - self.yaw_gain_min) * 0.5
        th0 = 0.5 * math.asin(min(2.0 * gain, 1.0))
        theta = rng.uniform(th0, 0.5 * math.pi - th0, size=n)
        theta = theta + math.pi * rng.integers(0, 2, size=n)

        # surge gain = cos(psi - theta) >= surge_gain_min
        alignment = self.surge_gain_min + interior * (1.0 - self.surge_gain_min) * 0.5
        dmax = math.acos(min(alignment, 1.0))
        delta = rng.uniform(-dmax, dmax, size=n) * (1.0 - interior)

        ex = ed * np.cos(theta)
        ey = ed * np.sin(theta)
        psi = theta + delta
        return ex, ey, ez, psi

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TubeParameters:
    """Certified tube constants driving the feedback gain and tightening."""

    lip1: float
    lip2: float
    j_lower: float
    xi_tilde: float
    sigma: float
    rho_tilde: float
    domain: ErrorDomain

    def __post_init__(self):
        if self.j_lower <= 0.0:
            raise ValueError("j_lower must be positive")
        if min(self.lip1, self.lip2, self.xi_tilde) < 0.0:
            raise ValueError("lip1, lip2 and xi_tilde must be nonnegative")
        if not self.sigma > (self.lip1 + self.lip2) / self.j_lower:
            raise ValueError(
                "sigma must strictly exceed (lip1 + lip2) / j_lower"
            )
        expected = tube_radius_from_constants(
            self.lip1, self.lip2, self.j_lower, self.xi_tilde, self.sigma
        )
        if not math.isclose(self.rho_tilde, expected, rel_tol=1e-6, abs_tol=1e-12):
            raise ValueError(
                f"rho_tilde = {self.rho_tilde} inconsistent with its defining "
                f"formula (expected {expected})"
            )

    @classmethod
    def certify(
        cls,
        lip1: float,
        lip2: float,
        j_lower: float,
        xi_tilde: float,
        domain: ErrorDomain,
        margin: float = 2.0,
    ) -> "TubeParameters":
        sigma = choose_sigma(lip1, lip2, j_lower, margin)
        rho = tube_radius_from_constants(lip1, lip2, j_lower, xi_tilde, sigma)
        return cls(
            lip1=lip1,
            lip2=lip2,
            j_lower=j_lower,
            xi_tilde=xi_tilde,
            sigma=sigma,
            rho_tilde=rho,
            domain=domain,
        )


def choose_sigma(L1: float, L2: float, J_lower: float, margin: float) -> float:
    """Feedback gain with a strict stability margin, floored at 1.

    The floor keeps the feedback a contraction in the disturbance-free
    degenerate case L1 = L2 = 0, where the formula alone would return 0.
    """
    if J_lower <= 0.0:
        raise ValueError("J_lower must be positive")
    if margin <= 1.0:
        raise ValueError("margin must be strictly greater than 1")
    return max(margin * (L1 + L2) / J_lower, 1.0)


def tube_radius_from_constants(
    L1: float, L2: float, J_lower: float, xi_tilde: float, sigma: float
) -> float:
    denom = sigma * J_lower - L1 - L2
    if denom <= 0.0:
        raise ValueError(
            f"sigma * J_lower - L1 - L2 = {denom} must be positive"
        )
    return xi_tilde / denom


def tube_radius(params: TubeParameters) -> float:
    """Tube radius implied by the certified constants."""
    return tube_radius_from_constants(
        params.lip1, params.lip2, params.j_lower, params.xi_tilde, params.sigma
    )


def ancillary_feedback(e: ErrorState, e_hat: ErrorState, sigma: float) -> np.ndarray:
    """Input correction -sigma (e - e_hat) on the error triple."""
    return -sigma * (e.triple - e_hat.triple)


@dataclass(frozen=True)
class TightenedSets:
    """Error and input sets eroded by the tube image.

    ``epsilon_bar`` is the raised e_d floor, ``inflation`` the extra clearance
    added to every obstacle and boundary margin, and ``box`` the shrunk input
    box available to the nominal controller.
    """

    epsilon_bar: float
    inflation: float
    box: VelocityBox


def tighten_sets(
    error_set: ErrorConstraintSet, box: VelocityBox, params: TubeParameters
) -> TightenedSets:
    """Erode the error set by the tube ball and the input box by its feedback image.

    The e_d floor rises by rho_tilde, obstacle/boundary clearances gain a
    rho_tilde margin, and each input bound shrinks by sigma * rho_tilde (an
    outer bound on the feedback correction, since its infinity norm is at
    most its Euclidean norm).
    """
    shrink = params.sigma * params.rho_tilde
    bounds = {"surge": box.u_max, "heave": box.w_max, "yaw rate": box.r_max}
    for name, bound in bounds.items():
        if bound - shrink <= 0.0:
            raise ConfigurationError(
                f"input tightening empty on {name}: bound {bound} <= "
                f"sigma * rho_tilde = {shrink:.6g}"
            )
    tightened_box = VelocityBox(
        box.u_max - shrink, box.w_max - shrink, box.r_max - shrink
    )
    return TightenedSets(
        epsilon_bar=error_set.epsilon + params.rho_tilde,
        inflation=params.rho_tilde,
        box=tightened_box,
    )


def max_horizon(R_bar: float, v_bar: float, xi_tilde: float) -> float:
    """Longest prediction horizon keeping predicted motion inside sensing range."""
    if R_bar <= 0.0 or v_bar <= 0.0 or xi_tilde < 0.0:
        raise ValueError("R_bar and v_bar must be positive, xi_tilde nonnegative")
    return R_bar / (v_bar + xi_tilde)


# ---------------------------------------------------------------------------
# Randomized certification of L1, L2 and J_lower.
# ---------------------------------------------------------------------------

_PAIR_STEP = 1e-5           # full-configuration perturbation for local ratios
_TRIPLE_GUARD = 0.1         # keep pairs whose triple moved at least this
                            # fraction of the configuration perturbation
_SAFETY = 1.1               # inflation on Lipschitz estimates (deflation on J)


def _box_corners(box: VelocityBox) -> np.ndarray:
    u, w, r = box.u_max, box.w_max, box.r_max
    return np.array(
        [[su * u, sw * w, sr * r] for su in (-1, 1) for sw in (-1, 1) for sr in (-1, 1)]
    )


def _lipschitz_ratios(f1: np.ndarray, f2: np.ndarray, t1: np.ndarray, t2: np.ndarray, guard: np.ndarray) -> np.ndarray:
    num = np.linalg.norm(f1 - f2, axis=-1)
    den = np.linalg.norm(t1 - t2, axis=-1)
    keep = den >= guard
    return num[keep] / den[keep]


def estimate_constants(
    domain: ErrorDomain,
    input_box: VelocityBox,
    ref: ReferenceTrajectory,
    samples: int = 20000,
    seed: int = 0,
) -> tuple[float, float, float]:
    """Estimate (L1, L2, J_lower) by randomized sampling over the domain.

    L1 bounds the sensitivity of J(e) v to the error state over all inputs in
    the box (exact over the box via its corners, since the map is linear in
    the input); L2 does the same for the drift term over reference velocities
    sampled along the trajectory.  Ratios are taken both between independent
    sample pairs and along small perturbations (directional derivatives);
    pairs whose reduced-triple distance is negligible relative to the
    underlying configuration change are discarded, since the reduced
    coordinates cannot observe those directions.  J_lower is the sampled
    minimum eigenvalue of the symmetrized Jacobian.  Lipschitz estimates are
    inflated, and J_lower deflated, by a 10% safety factor.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    rng = np.random.Generator(np.random.PCG64(seed))
    ex, ey, ez, psi = domain.sample(samples, rng)
    ed = np.hypot(ex, ey)

    # reference velocities along one pass of the trajectory
    ts = rng.uniform(0.0, 1000.0, size=64)
    ref_vels = np.stack([ref.velocity(float(t)) for t in ts])

    corners = _box_corners(input_box)
    jac = batch_jacobian(ex, ey, psi)
    triples = batch_triple(ex, ey, ez, psi)

    # --- J_lower: smallest eigenvalue of the symmetric part ---------------
    sym = 0.5 * (jac + np.swapaxes(jac, -1, -2))
    eigmin = np.linalg.eigvalsh(sym)[..., 0]
    j_lower_raw = float(eigmin.min())
    if j_lower_raw <= 0.0:
        raise CertificationError(
            f"sampled J_lower = {j_lower_raw:.6g} <= 0; the domain does not "
            "exclude the singular configurations"
        )

    # --- local perturbation pairs -----------------------------------------
    deltas = rng.normal(size=(samples, 4))
    deltas *= _PAIR_STEP / np.linalg.norm(deltas, axis=1, keepdims=True)
    ex2 = ex + deltas[:, 0]
    ey2 = ey + deltas[:, 1]
    ez2 = ez + deltas[:, 2]
    psi2 = psi + deltas[:, 3]
    jac2 = batch_jacobian(ex2, ey2, psi2)
    triples2 = batch_triple(ex2, ey2, ez2, psi2)
    guard = _TRIPLE_GUARD * _PAIR_STEP * np.ones(samples)

    h1 = np.einsum("nij,cj->nci", jac, corners)
    h2 = np.einsum("nij,cj->nci", jac2, corners)
    t1 = np.repeat(triples[:, None, :], len(corners), axis=1)
    t2 = np.repeat(triples2[:, None, :], len(corners), axis=1)
    local_l1 = _lipschitz_ratios(
        h1.reshape(-1, 3), h2.reshape(-1, 3),
        t1.reshape(-1, 3), t2.reshape(-1, 3),
        np.repeat(guard, len(corners)),
    )

    z1 = batch_drift(ex[:, None], ey[:, None], psi[:, None], ref_vels[None, :, :])
    z2 = batch_drift(ex2[:, None], ey2[:, None], psi2[:, None], ref_vels[None, :, :])
    tt1 = np.repeat(triples[:, None, :], len(ref_vels), axis=1)
    tt2 = np.repeat(triples2[:, None, :], len(ref_vels), axis=1)
    local_l2 = _lipschitz_ratios(
        z1.reshape(-1, 3), z2.reshape(-1, 3),
        tt1.reshape(-1, 3), tt2.reshape(-1, 3),
        np.repeat(guard, len(ref_vels)),
    )

    # --- independent finite-separation pairs --------------------------------
    perm = rng.permutation(samples)
    finite_guard = 1e-6 * np.ones(samples)
    fin_l1 = _lipschitz_ratios(
        np.einsum("nij,cj->nci", jac, corners).reshape(-1, 3),
        np.einsum("nij,cj->nci", jac[perm], corners).reshape(-1, 3),
        np.repeat(triples[:, None, :], len(corners), axis=1).reshape(-1, 3),
        np.repeat(triples[perm][:, None, :], len(corners), axis=1).reshape(-1, 3),
        np.repeat(finite_guard, len(corners)),
    )
    fin_l2 = _lipschitz_ratios(
        z1.reshape(-1, 3),
        z1[perm].reshape(-1, 3),
        tt1.reshape(-1, 3),
        tt1[perm].reshape(-1, 3),
        np.repeat(finite_guard, len(ref_vels)),
    )

    def _max0(arrs):
        vals = [float(a.max()) for a in arrs if a.size]
        return max(vals) if vals else 0.0

    L1 = _SAFETY * _max0([local_l1, fin_l1])
    L2 = _SAFETY * _max0([local_l2, fin_l2])
    j_lower = j_lower_raw / _SAFETY
    return L1, L2, j_lower


# ---------------------------------------------------------------------------
# Run-artifact persistence.
# ---------------------------------------------------------------------------

ARTIFACT_SCHEMA_VERSION = 1


def save_tube_artifact(path, params: TubeParameters) -> None:
    """Write certified constants to a YAML key-value artifact."""
    doc = {
        "schema_version": ARTIFACT_SCHEMA_VERSION,
        "lip1": float(params.lip1),
        "lip2": float(params.lip2),
        "j_lower": float(params.j_lower),
        "xi_tilde": float(params.xi_tilde),
        "sigma": float(params.sigma),
        "rho_tilde": float(params.rho_tilde),
        "domain": {k: float(v) for k, v in params.domain.to_dict().items()},
    }
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)


def load_tube_artifact(path) -> TubeParameters:
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: not a mapping")
    version = doc.pop("schema_version", None)
    if version != ARTIFACT_SCHEMA_VERSION:
        raise ConfigurationError(
            f"{path}: unsupported schema_version {version!r}"
        )
    domain_doc = doc.pop("domain", None)
    if not isinstance(domain_doc, dict):
        raise ConfigurationError(f"{path}: missing domain section")
    allowed = {"ed_min", "ed_max", "ez_max", "surge_gain_min", "yaw_gain_min"}
    unknown = set(domain_doc) - allowed
    if unknown:
        raise ConfigurationError(f"{path}: unknown domain keys {sorted(unknown)}")
    domain = ErrorDomain(**domain_doc)
    allowed = {"lip1", "lip2", "j_lower", "xi_tilde", "sigma", "rho_tilde"}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigurationError(f"{path}: unknown keys {sorted(unknown)}")
    missing = allowed - set(doc)
    if missing:
        raise ConfigurationError(f"{path}: missing keys {sorted(missing)}")
    return TubeParameters(domain=domain, **{k: float(v) for k, v in doc.items()})
