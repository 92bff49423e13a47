"""Velocity-free hybrid attitude controller driven by inertial vector measurements.

Every feedback quantity here is computed from body-frame measurements b_i of
known inertial directions r_i together with the two reference rotations
Y1 (auxiliary attitude) and Y2 (setpoint); the true attitude R and the rate
omega are never read.  The matrix-space counterparts live in
:mod:`so3warp.warping` and the two paths agree to rounding, which the test
suite exercises as a standing identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .potential import build_weight
from .warping import SynergyError, WarpedPotential, gap

COLLINEAR_TOL = 1e-9


@dataclass(frozen=True)
class VectorMeasurementSet:
    """Snapshot of n weighted vector pairs: inertial refs and body measurements.

    ``refs`` and ``body`` are (n, 3); ``weights`` is (n, 2) with the positive
    per-channel weights (rho_i1, rho_i2).  Consistent noise-free data satisfies
    body[i] = R^T refs[i].
    """

    refs: np.ndarray
    body: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.refs.shape != self.body.shape or self.refs.shape[0] != self.weights.shape[0]:
            raise ValueError("refs, body and weights must agree on the number of measurements")
        if self.refs.shape[0] < 2:
            raise ValueError("at least two vector measurements are required")
        if np.any(self.weights <= 0.0):
            raise ValueError("measurement weights must be positive")

    @property
    def n(self) -> int:
        return self.refs.shape[0]


def measurements_from_attitude(
    refs: np.ndarray,
    weights: np.ndarray,
    r: np.ndarray,
    noise: np.ndarray | None = None,
) -> VectorMeasurementSet:
    """Sensor model: b_i = R^T r_i, optionally perturbed and renormalized.

    ``noise`` is an additive (n, 3) perturbation; perturbed measurements are
    rescaled back to the reference magnitudes so only the direction is noisy.
    """
    body = refs @ r  # row i is (R^T r_i)^T
    if noise is not None:
        body = body + noise
        scale = np.linalg.norm(refs, axis=1) / np.linalg.norm(body, axis=1)
        body = body * scale[:, None]
    return VectorMeasurementSet(refs=refs, body=body, weights=weights)


def _noncollinear_count(refs: np.ndarray) -> int:
    """Size of a maximal pairwise non-collinear subset of the reference vectors."""
    kept: list[np.ndarray] = []
    for r in refs:
        nr = np.linalg.norm(r)
        if any(np.linalg.norm(np.cross(r, k)) <= COLLINEAR_TOL * nr * np.linalg.norm(k)
               for k in kept):
            continue
        kept.append(r)
    return len(kept)


def assumption_holds(refs: np.ndarray) -> bool:
    """At least three of the reference vectors are pairwise non-collinear."""
    return _noncollinear_count(refs) >= 3


def augment_measurements(
    ms: VectorMeasurementSet, weight: tuple[float, float] = (1.0, 1.0)
) -> VectorMeasurementSet:
    """Append a synthesized cross-product measurement when only two usable directions exist.

    The first non-collinear reference pair (r_a, r_b) yields
    r_new = r_a x r_b / |r_a x r_b| and b_new = b_a x b_b / |b_a x b_b|, which
    is a consistent measurement of r_new for noise-free data.  A set already
    satisfying the three-direction assumption is returned unchanged.
    """
    if assumption_holds(ms.refs):
        return ms
    n = ms.n
    for i in range(n):
        for j in range(i + 1, n):
            cr = np.cross(ms.refs[i], ms.refs[j])
            ncr = np.linalg.norm(cr)
            if ncr > COLLINEAR_TOL * np.linalg.norm(ms.refs[i]) * np.linalg.norm(ms.refs[j]):
                cb = np.cross(ms.body[i], ms.body[j])
                ncb = np.linalg.norm(cb)
                if ncb <= 0.0:
                    raise ValueError("body measurements of the chosen pair are collinear")
                return VectorMeasurementSet(
                    refs=np.vstack([ms.refs, cr / ncr]),
                    body=np.vstack([ms.body, cb / ncb]),
                    weights=np.vstack([ms.weights, np.asarray(weight, dtype=float)]),
                )
    raise ValueError("all reference vectors are collinear; cannot augment")


def build_a_h(ms: VectorMeasurementSet, h: int) -> np.ndarray:
    """Weight matrix A_h = sum_i rho_ih r_i r_i^T; positive definite under the assumption."""
    rho = ms.weights[:, h - 1]
    a = (ms.refs * rho[:, None]).T @ ms.refs
    if np.linalg.eigvalsh(a)[0] <= 0.0:
        raise ValueError("A_h is singular: need three non-collinear reference vectors")
    return a


@dataclass(frozen=True)
class LogicState:
    """Pair of potential indices, one per channel."""

    q1: int
    q2: int

    def q(self, h: int) -> int:
        return self.q1 if h == 1 else self.q2


@dataclass(frozen=True)
class ControllerConfig:
    """Hybrid controller parameters: warped potentials and hysteresis widths.

    Requires 0 < delta_h < gap(wp_h) so that every undesired critical point of
    U_h sits strictly inside the jump set; pass ``validate=False`` only for
    deliberate out-of-spec reproduction runs.
    """

    wp1: WarpedPotential
    wp2: WarpedPotential
    delta1: float
    delta2: float

    def __post_init__(self):
        if self.delta1 <= 0.0 or self.delta2 <= 0.0:
            raise SynergyError("hysteresis widths must be positive")

    def wp(self, h: int) -> WarpedPotential:
        return self.wp1 if h == 1 else self.wp2

    def delta(self, h: int) -> float:
        return self.delta1 if h == 1 else self.delta2


def make_controller_config(
    wp1: WarpedPotential,
    wp2: WarpedPotential,
    delta1: float,
    delta2: float,
    validate: bool = True,
) -> ControllerConfig:
    cfg = ControllerConfig(wp1=wp1, wp2=wp2, delta1=delta1, delta2=delta2)
    if validate:
        for h in (1, 2):
            g = gap(cfg.wp(h))
            if not cfg.delta(h) < g:
                raise SynergyError(
                    f"delta_{h} = {cfg.delta(h):.6g} must lie strictly below the gap {g:.6g}"
                )
    return cfg


def check_consistency(cfg: ControllerConfig, ms: VectorMeasurementSet, tol: float = 1e-9) -> None:
    """The warped potentials must be built from the same A_h the measurements induce."""
    for h in (1, 2):
        a = build_a_h(ms, h)
        if np.linalg.norm(a - cfg.wp(h).weight.a) >= tol:
            raise SynergyError(f"wp{h} weight does not match sum rho_i{h} r_i r_i^T")


# measurement-space identities -------------------------------------------------

def va_from_measurements(ms: VectorMeasurementSet, h: int, y: np.ndarray) -> float:
    """V_{A_h}(X_h) = 1/2 sum rho_ih |b_i - Y_h^T r_i|^2 with X_h = R Y_h^T."""
    d = ms.body - ms.refs @ y
    return 0.5 * float(ms.weights[:, h - 1] @ np.einsum("ij,ij->i", d, d))


def psi_from_measurements(ms: VectorMeasurementSet, h: int, y: np.ndarray) -> np.ndarray:
    """psi(A_h X_h) = 1/2 Y_h sum rho_ih (b_i x Y_h^T r_i)."""
    yr = ms.refs @ y
    m = ms.weights[:, h - 1] @ np.cross(ms.body, yr)
    return 0.5 * (y @ m)


def _theta_h(wp: WarpedPotential, q: int, va: float) -> tuple[float, float]:
    """(theta_hq, k_hq V) from an already-computed potential value."""
    s = wp.gain(q) * va
    if abs(s) >= 1.0:
        raise SynergyError("gain too large: |k_hq V_Ah| >= 1")
    return 2.0 * math.asin(s), s


def _cross_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise cross product of two (n, 3) arrays (hot path, no axis plumbing)."""
    out = np.empty_like(a)
    out[:, 0] = a[:, 1] * b[:, 2] - a[:, 2] * b[:, 1]
    out[:, 1] = a[:, 2] * b[:, 0] - a[:, 0] * b[:, 2]
    out[:, 2] = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    return out


def u_h_from_measurements(
    cfg: ControllerConfig, ms: VectorMeasurementSet, h: int, y: np.ndarray, q: int
) -> float:
    """U_h(X_h, q) = 1/2 sum rho_ih |b_i - bhat_ih(q)|^2, computed measurement-only."""
    wp = cfg.wp(h)
    th, _ = _theta_h(wp, q, va_from_measurements(ms, h, y))
    bhat = ms.refs @ (wp.axis_rotation(th).T @ y)
    d = ms.body - bhat
    return 0.5 * float(ms.weights[:, h - 1] @ np.einsum("ij,ij->i", d, d))


def _channel_potentials(
    wp: WarpedPotential, rho: np.ndarray, refs: np.ndarray, body: np.ndarray,
    y: np.ndarray,
) -> dict[int, float]:
    """U_h(X_h, p) for every index p, sharing the channel intermediates."""
    yr = refs @ y
    d = body - yr
    va = 0.5 * float(np.einsum("i,ij,ij->", rho, d, d))
    out = {}
    for p in wp.indices:
        th, _ = _theta_h(wp, p, va)
        bhat = refs @ (wp.axis_rotation(th).T @ y)
        dp = body - bhat
        out[p] = 0.5 * float(np.einsum("i,ij,ij->", rho, dp, dp))
    return out


def psi_gamma_from_measurements(
    cfg: ControllerConfig, ms: VectorMeasurementSet, h: int, y: np.ndarray, q: int
) -> np.ndarray:
    """psi(A_h Gamma_h(X_h, q)) = 1/2 R_a(theta, u)^T Y_h sum rho_ih (b_i x bhat_ih)."""
    wp = cfg.wp(h)
    th, _ = _theta_h(wp, q, va_from_measurements(ms, h, y))
    ra = wp.axis_rotation(th)
    bhat = ms.refs @ (ra.T @ y)
    m = ms.weights[:, h - 1] @ _cross_rows(ms.body, bhat)
    return 0.5 * (ra.T @ (y @ m))


def _channel_feedback(
    wp: WarpedPotential, rho: np.ndarray, refs: np.ndarray, body: np.ndarray,
    y: np.ndarray, q: int,
) -> np.ndarray:
    """Y_h^T Theta_h^T psi(A_h Gamma_h) for one channel, measurement-only."""
    yr = refs @ y
    d = body - yr
    va = 0.5 * float(np.einsum("i,ij,ij->", rho, d, d))
    th, s = _theta_h(wp, q, va)
    psi_x = 0.5 * (y @ (rho @ _cross_rows(body, yr)))
    ra = wp.axis_rotation(th)
    bhat = refs @ (ra.T @ y)
    psi_g = 0.5 * (ra.T @ (y @ (rho @ _cross_rows(body, bhat))))
    kq = wp.gain(q)
    theta_t_psi = ra @ psi_g + (4.0 * kq / math.sqrt(1.0 - s * s)) * (wp.u @ psi_g) * psi_x
    return y.T @ theta_t_psi


def torque(
    cfg: ControllerConfig, ms: VectorMeasurementSet, logic: LogicState,
    y1: np.ndarray, y2: np.ndarray,
) -> np.ndarray:
    """Hybrid control torque -2 sum_h Y_h^T Theta_h^T psi(A_h Gamma_h(X_h, q_h))."""
    t1 = _channel_feedback(cfg.wp1, ms.weights[:, 0], ms.refs, ms.body, y1, logic.q1)
    t2 = _channel_feedback(cfg.wp2, ms.weights[:, 1], ms.refs, ms.body, y2, logic.q2)
    return -2.0 * (t1 + t2)


def beta(
    cfg: ControllerConfig, ms: VectorMeasurementSet, logic: LogicState, y1: np.ndarray
) -> np.ndarray:
    """Auxiliary-system input Y_1^T Theta_1^T psi(A_1 Gamma_1(X_1, q_1))."""
    return _channel_feedback(cfg.wp1, ms.weights[:, 0], ms.refs, ms.body, y1, logic.q1)


def mu_h_from_measurements(
    cfg: ControllerConfig, ms: VectorMeasurementSet, h: int, y: np.ndarray, q: int
) -> float:
    """mu_h(X_h, q) = U_h(X_h, q) - min_p U_h(X_h, p), measurement-only."""
    values = _channel_potentials(cfg.wp(h), ms.weights[:, h - 1], ms.refs, ms.body, y)
    return values[q] - min(values.values())


def _argmin_index(values: dict[int, float]) -> int:
    """Index of the smallest potential, lowest index on exact ties."""
    return min(values.items(), key=lambda item: (item[1], item[0]))[0]


def jump_map_g(
    cfg: ControllerConfig, ms: VectorMeasurementSet, y1: np.ndarray, y2: np.ndarray
) -> LogicState:
    """Logic reset: per channel the index minimizing U_h, lowest index on ties."""
    out = []
    for h, y in ((1, y1), (2, y2)):
        values = _channel_potentials(cfg.wp(h), ms.weights[:, h - 1], ms.refs, ms.body, y)
        out.append(_argmin_index(values))
    return LogicState(q1=out[0], q2=out[1])


# flow / jump membership (matrix path) ----------------------------------------

def _mu_matrix(cfg: ControllerConfig, x1: np.ndarray, x2: np.ndarray, logic: LogicState):
    from .warping import mu as warp_mu

    return warp_mu(cfg.wp1, x1, logic.q1), warp_mu(cfg.wp2, x2, logic.q2)


def in_flow_set(cfg: ControllerConfig, x1: np.ndarray, x2: np.ndarray, logic: LogicState) -> bool:
    """C: mu_1 <= delta_1 and mu_2 <= delta_2 (closed; overlaps the jump set)."""
    m1, m2 = _mu_matrix(cfg, x1, x2, logic)
    return m1 <= cfg.delta1 and m2 <= cfg.delta2


def in_jump_set(cfg: ControllerConfig, x1: np.ndarray, x2: np.ndarray, logic: LogicState) -> bool:
    """D: mu_1 >= delta_1 or mu_2 >= delta_2 (closed; overlaps the flow set)."""
    m1, m2 = _mu_matrix(cfg, x1, x2, logic)
    return m1 >= cfg.delta1 or m2 >= cfg.delta2


# smooth baseline ---------------------------------------------------------------

def smooth_torque(ms: VectorMeasurementSet, y1: np.ndarray, y2: np.ndarray) -> np.ndarray:
    """Almost-global smooth law: -sum_h sum_i rho_ih (b_i x Y_h^T r_i)."""
    t = np.zeros(3)
    for h, y in ((1, y1), (2, y2)):
        t -= ms.weights[:, h - 1] @ _cross_rows(ms.body, ms.refs @ y)
    return t


def smooth_beta(ms: VectorMeasurementSet, y1: np.ndarray) -> np.ndarray:
    """Auxiliary input of the smooth law: sum_i rho_i1 (b_i x Y_1^T r_i)."""
    return ms.weights[:, 0] @ _cross_rows(ms.body, ms.refs @ y1)


def weight_from_measurements(ms: VectorMeasurementSet, h: int, tau_spec: float = 1e-9):
    """Convenience: WeightMatrix built from A_h of this measurement set."""
    return build_weight(build_a_h(ms, h), tau_spec=tau_spec)
