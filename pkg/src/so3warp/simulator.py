"""Hybrid closed-loop simulation of the attitude dynamics.

Flows integrate the rigid body, the auxiliary system and the chosen feedback
with a fixed-step classical Runge-Kutta scheme; jumps reset the logic pair
through the argmin map whenever a hysteresis threshold is met, and take
priority over flowing.  The controller sees only measurements and the two
reference rotations; the logged diagnostics (errors, potentials, Lyapunov
value) are computed from the true state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import controller as ctl
from .controller import ControllerConfig, LogicState, VectorMeasurementSet
from .potential import WeightMatrix, v_a
from .so3 import hat, project_so3, rodrigues
from .trajectory import TrajectoryLog
from .warping import u_value, u_values_matrix

SQRT8 = math.sqrt(8.0)
_EYE3 = np.eye(3)


@dataclass
class PlantState:
    """Rigid-body attitude, body angular rate, and auxiliary attitude."""

    r: np.ndarray
    omega: np.ndarray
    r_hat: np.ndarray


@dataclass(frozen=True)
class HybridTime:
    """Continuous time paired with the jump counter."""

    t: float
    j: int


@dataclass
class ScenarioConfig:
    """Everything a single closed-loop run needs.

    ``controller`` selects the hybrid law (warped potentials plus hysteresis)
    or the smooth baseline; weights w1/w2 are carried in both cases for the
    logged potentials.  ``stop_below`` optionally ends the run early once
    e2 and |omega| both drop under it (regression-suite convenience).
    """

    inertia: np.ndarray
    refs: np.ndarray
    weights: np.ndarray
    controller: str                      # "hybrid" | "smooth"
    w1: WeightMatrix
    w2: WeightMatrix
    cfg: ControllerConfig | None
    r0: np.ndarray
    omega0: np.ndarray
    rhat0: np.ndarray
    rd: np.ndarray
    dt: float = 1e-3
    t_end: float = 20.0
    max_jumps: int = 100
    max_steps: int = 1_000_000
    noise_std: float = 0.0
    seed: int = 0
    stop_below: float | None = None
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if np.linalg.norm(self.inertia - self.inertia.T) >= 1e-12:
            raise ValueError("inertia matrix must be symmetric")
        if np.linalg.eigvalsh(self.inertia)[0] <= 0.0:
            raise ValueError("inertia matrix must be positive definite")
        if self.controller not in ("hybrid", "smooth"):
            raise ValueError("controller must be 'hybrid' or 'smooth'")
        if self.controller == "hybrid" and self.cfg is None:
            raise ValueError("hybrid controller requires a ControllerConfig")


def error_metric(x: np.ndarray) -> float:
    """Normalized attitude error |I - X|_F / sqrt(8), in [0, 1].

    Equals the norm of the quaternion vector part of X.
    """
    return min(1.0, float(np.linalg.norm(_EYE3 - x)) / SQRT8)


def lyapunov(state: PlantState, logic: LogicState | None, sc: ScenarioConfig) -> float:
    """Diagnostic V = U_1(X_1, q_1) + U_2(X_2, q_2) + 1/2 w^T J w.

    For a smooth run the unwarped potentials V_{A_h}(X_h) take the place of
    the warped ones.
    """
    x1 = state.r @ state.r_hat.T
    x2 = state.r @ sc.rd.T
    kin = 0.5 * float(state.omega @ (sc.inertia @ state.omega))
    if sc.controller == "hybrid":
        return u_value(sc.cfg.wp1, x1, logic.q1) + u_value(sc.cfg.wp2, x2, logic.q2) + kin
    return v_a(sc.w1, x1) + v_a(sc.w2, x2) + kin


def _measure(sc: ScenarioConfig, r: np.ndarray, noise: np.ndarray | None) -> VectorMeasurementSet:
    return ctl.measurements_from_attitude(sc.refs, sc.weights, r, noise)


def _body_vectors(sc: ScenarioConfig, r: np.ndarray, noise: np.ndarray | None) -> np.ndarray:
    """Raw measurement rows b_i = R^T r_i, optionally direction-perturbed."""
    body = sc.refs @ r
    if noise is not None:
        body = body + noise
        scale = np.linalg.norm(sc.refs, axis=1) / np.linalg.norm(body, axis=1)
        body = body * scale[:, None]
    return body


def _feedback_raw(sc: ScenarioConfig, logic: LogicState | None, body: np.ndarray,
                  rhat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if sc.controller == "hybrid":
        # beta equals the h=1 term of the torque sum; compute each term once
        t1 = ctl._channel_feedback(sc.cfg.wp1, sc.weights[:, 0], sc.refs, body,
                                   rhat, logic.q1)
        t2 = ctl._channel_feedback(sc.cfg.wp2, sc.weights[:, 1], sc.refs, body,
                                   sc.rd, logic.q2)
        return -2.0 * (t1 + t2), t1
    yr1 = sc.refs @ rhat
    yr2 = sc.refs @ sc.rd
    c1 = sc.weights[:, 0] @ ctl._cross_rows(body, yr1)
    c2 = sc.weights[:, 1] @ ctl._cross_rows(body, yr2)
    return -(c1 + c2), c1


def _feedback(sc: ScenarioConfig, logic: LogicState | None, ms: VectorMeasurementSet,
              rhat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return _feedback_raw(sc, logic, ms.body, rhat)


def _rk4(sc: ScenarioConfig, jin: np.ndarray, state: PlantState, logic: LogicState | None,
         dt: float, noise: np.ndarray | None,
         first_stage: tuple[np.ndarray, np.ndarray] | None) -> PlantState:
    def rhs(r, w, rh, stage0=None):
        if stage0 is None:
            tau, beta = _feedback_raw(sc, logic, _body_vectors(sc, r, noise), rh)
        else:
            tau, beta = stage0
        jw = sc.inertia @ w
        wdot = jin @ (np.array([jw[1] * w[2] - jw[2] * w[1],
                                jw[2] * w[0] - jw[0] * w[2],
                                jw[0] * w[1] - jw[1] * w[0]]) + tau)
        return r @ hat(w), wdot, rh @ hat(beta)

    r, w, rh = state.r, state.omega, state.r_hat
    k1 = rhs(r, w, rh, first_stage)
    k2 = rhs(r + 0.5 * dt * k1[0], w + 0.5 * dt * k1[1], rh + 0.5 * dt * k1[2])
    k3 = rhs(r + 0.5 * dt * k2[0], w + 0.5 * dt * k2[1], rh + 0.5 * dt * k2[2])
    k4 = rhs(r + dt * k3[0], w + dt * k3[1], rh + dt * k3[2])
    r_new = r + (dt / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    w_new = w + (dt / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    rh_new = rh + (dt / 6.0) * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    return PlantState(r=project_so3(r_new), omega=w_new, r_hat=project_so3(rh_new))


def flow_step(state: PlantState, logic: LogicState | None, sc: ScenarioConfig,
              dt: float, noise: np.ndarray | None = None,
              first_stage: tuple[np.ndarray, np.ndarray] | None = None) -> PlantState:
    """One classical 4-stage Runge-Kutta step of the closed loop.

    R' = R [w]x, J w' = [J w]x w + tau, Rhat' = Rhat [beta]x, with tau and
    beta re-evaluated from their state-feedback expressions at every stage
    (measurement noise, when present, is held over the step).  Both rotations
    are re-projected onto SO(3) afterwards.
    """
    return _rk4(sc, np.linalg.inv(sc.inertia), state, logic, dt, noise, first_stage)


class _Recorder:
    """Preallocated columnar buffers for the trajectory log."""

    def __init__(self, capacity: int):
        self.n = 0
        self.t = np.empty(capacity)
        self.j = np.empty(capacity, dtype=int)
        self.q1 = np.empty(capacity, dtype=int)
        self.q2 = np.empty(capacity, dtype=int)
        self.e1 = np.empty(capacity)
        self.e2 = np.empty(capacity)
        self.omega = np.empty((capacity, 3))
        self.tau = np.empty((capacity, 3))
        self.v = np.empty(capacity)
        self.u1 = np.empty(capacity)
        self.u2 = np.empty(capacity)
        self.mu1 = np.empty(capacity)
        self.mu2 = np.empty(capacity)

    def push(self, t, j, q1, q2, e1, e2, omega, tau, v, u1, u2, mu1, mu2):
        i = self.n
        self.t[i] = t
        self.j[i] = j
        self.q1[i] = q1
        self.q2[i] = q2
        self.e1[i] = e1
        self.e2[i] = e2
        self.omega[i] = omega
        self.tau[i] = tau
        self.v[i] = v
        self.u1[i] = u1
        self.u2[i] = u2
        self.mu1[i] = mu1
        self.mu2[i] = mu2
        self.n = i + 1

    def to_log(self, zeno: bool, notes: list[str]) -> TrajectoryLog:
        s = slice(0, self.n)
        return TrajectoryLog(
            t=self.t[s].copy(), j=self.j[s].copy(), q1=self.q1[s].copy(), q2=self.q2[s].copy(),
            e1=self.e1[s].copy(), e2=self.e2[s].copy(),
            omega=self.omega[s].copy(), tau=self.tau[s].copy(),
            v_lyap=self.v[s].copy(), u1=self.u1[s].copy(), u2=self.u2[s].copy(),
            mu1=self.mu1[s].copy(), mu2=self.mu2[s].copy(),
            zeno=zeno, notes=list(notes),
        )


def _diagnostics(sc: ScenarioConfig, state: PlantState, logic: LogicState | None):
    """True-state potentials (U1, U2, mu1, mu2, V, e1, e2) for the log."""
    x1 = state.r @ state.r_hat.T
    x2 = state.r @ sc.rd.T
    kin = 0.5 * float(state.omega @ (sc.inertia @ state.omega))
    if sc.controller == "hybrid":
        vals1 = u_values_matrix(sc.cfg.wp1, x1)
        vals2 = u_values_matrix(sc.cfg.wp2, x2)
        u1 = vals1[logic.q1]
        u2 = vals2[logic.q2]
        mu1 = u1 - min(vals1.values())
        mu2 = u2 - min(vals2.values())
    else:
        u1, u2, mu1, mu2 = v_a(sc.w1, x1), v_a(sc.w2, x2), 0.0, 0.0
    return u1, u2, mu1, mu2, u1 + u2 + kin, error_metric(x1), error_metric(x2)


def run(sc: ScenarioConfig) -> TrajectoryLog:
    """Execute one closed-loop scenario and return the full trajectory log.

    Jump priority: the jump-set membership (measurement-based, like the
    controller itself) is evaluated before every flow step, and a triggered
    jump writes a record at unchanged t with j incremented.  The run ends at
    t_end, or earlier with the ``zeno`` flag when the jump or step guard
    trips.
    """
    rng = np.random.default_rng(sc.seed)
    jin = np.linalg.inv(sc.inertia)
    n_steps = int(round(sc.t_end / sc.dt))
    rec = _Recorder(n_steps + sc.max_jumps + 2)
    state = PlantState(r=sc.r0.copy(), omega=np.asarray(sc.omega0, dtype=float).copy(),
                       r_hat=sc.rhat0.copy())
    logic = LogicState(1, 1) if sc.controller == "hybrid" else None
    t, j, zeno = 0.0, 0, False

    def sample_noise():
        if sc.noise_std <= 0.0:
            return None
        return sc.noise_std * rng.standard_normal(sc.refs.shape)

    def measured_mus(body, q1, q2):
        vals1 = ctl._channel_potentials(sc.cfg.wp1, sc.weights[:, 0], sc.refs, body,
                                        state.r_hat)
        vals2 = ctl._channel_potentials(sc.cfg.wp2, sc.weights[:, 1], sc.refs, body,
                                        sc.rd)
        return vals1[q1] - min(vals1.values()), vals2[q2] - min(vals2.values()), vals1, vals2

    def diagnostics(vals1, vals2, m1, m2):
        # noise-free, the measurement-path potentials ARE the true ones
        # (the dual-path identities are exact); only noisy runs need the
        # matrix-path recomputation for honest logging.
        if sc.controller == "hybrid" and noise is None:
            x1 = state.r @ state.r_hat.T
            x2 = state.r @ sc.rd.T
            kin = 0.5 * float(state.omega @ (sc.inertia @ state.omega))
            u1, u2 = vals1[logic.q1], vals2[logic.q2]
            return u1, u2, m1, m2, u1 + u2 + kin, error_metric(x1), error_metric(x2)
        return _diagnostics(sc, state, logic)

    noise = sample_noise()
    body = _body_vectors(sc, state.r, noise)

    for step in range(n_steps + 1):
        if sc.controller == "hybrid":
            m1, m2, vals1, vals2 = measured_mus(body, logic.q1, logic.q2)
            jumping = m1 >= sc.cfg.delta1 or m2 >= sc.cfg.delta2
        else:
            m1 = m2 = 0.0
            vals1 = vals2 = None
            jumping = False
        tau, bta = _feedback_raw(sc, logic, body, state.r_hat)
        u1, u2, mu1, mu2, v, e1, e2 = diagnostics(vals1, vals2, m1, m2)
        q1 = logic.q1 if logic else 0
        q2 = logic.q2 if logic else 0
        rec.push(t, j, q1, q2, e1, e2, state.omega, tau, v, u1, u2, mu1, mu2)

        while jumping:
            if j >= sc.max_jumps:
                zeno = True
                break
            logic = LogicState(q1=ctl._argmin_index(vals1), q2=ctl._argmin_index(vals2))
            j += 1
            m1, m2, vals1, vals2 = measured_mus(body, logic.q1, logic.q2)
            jumping = m1 >= sc.cfg.delta1 or m2 >= sc.cfg.delta2
            tau, bta = _feedback_raw(sc, logic, body, state.r_hat)
            u1, u2, mu1, mu2, v, e1, e2 = diagnostics(vals1, vals2, m1, m2)
            rec.push(t, j, logic.q1, logic.q2, e1, e2, state.omega, tau, v,
                     u1, u2, mu1, mu2)
        if zeno or step == n_steps:
            break
        if sc.stop_below is not None and e2 < sc.stop_below \
                and np.linalg.norm(state.omega) < sc.stop_below:
            break

        state = _rk4(sc, jin, state, logic, sc.dt, noise, (tau, bta))
        t = (step + 1) * sc.dt
        noise = sample_noise()
        body = _body_vectors(sc, state.r, noise)

    return rec.to_log(zeno=zeno, notes=sc.notes)


def sweep_epsilon(sc: ScenarioConfig, eps_list: list[float]) -> list[TrajectoryLog]:
    """Smooth-baseline family of runs from R(0) = R_a(pi + eps, e1).

    Starts a distance eps from the antipodal flip about e1, the worst case for
    the smooth law; escape slows as eps shrinks.
    """
    if sc.controller != "smooth":
        raise ValueError("epsilon sweep is defined for the smooth baseline")
    e1 = np.array([1.0, 0.0, 0.0])
    logs = []
    for eps in eps_list:
        variant = ScenarioConfig(**{**sc.__dict__,
                                    "r0": rodrigues(math.pi + eps, e1),
                                    "notes": sc.notes + [f"sweep eps = {eps:.17g}"]})
        logs.append(run(variant))
    return logs
