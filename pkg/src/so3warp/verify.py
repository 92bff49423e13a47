"""Randomized oracle suites cross-checking the closed forms against brute force.

Each suite pits an analytic result (gradient, determinant identity, gap
formula, optimal axis) against an independent computation: central finite
differences, batch determinant evaluation, direct minimization over the
enumerated critical set, or a dense grid search on the sphere.  The CLI
``verify`` subcommand runs them; the acceptance tests reuse them where a
criterion coincides with a suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import controller as ctl
from .controller import VectorMeasurementSet
from .potential import (Spectrum, WeightMatrix, build_weight, eigen_branches, psi_a,
                        psi_a_batch, v_a, v_a_batch)
from .so3 import (haar_rotations, hat, psi, quat_mul, quat_to_rot, random_rotation,
                  rodrigues, rot_to_quat)
from .warping import (WarpedPotential, big_theta, critical_points, feasibility, gap,
                      k_bound, make_warped, mu, optimal_u, theta_q, u_value)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail}"


def fibonacci_sphere(n: int) -> np.ndarray:
    """Nearly uniform grid of n points on the unit sphere."""
    i = np.arange(n, dtype=float) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = np.pi * (1.0 + math.sqrt(5.0)) * i
    s = np.sqrt(1.0 - z * z)
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


def random_weight(rng: np.random.Generator, spectrum: Spectrum = Spectrum.THREE_DISTINCT,
                  lo: float = 0.5, hi: float = 5.0, min_sep: float = 0.3) -> WeightMatrix:
    """Random symmetric PD weight with a prescribed spectrum class."""
    basis = random_rotation(rng)
    while True:
        vals = np.sort(rng.uniform(lo, hi, size=3))
        if spectrum is Spectrum.THREE_DISTINCT:
            if vals[1] - vals[0] > min_sep and vals[2] - vals[1] > min_sep:
                break
        elif spectrum is Spectrum.TWO_DISTINCT:
            if vals[2] - vals[1] > min_sep:
                vals[1] = vals[0]
                break
        else:
            vals[:] = vals[0]
            break
    return build_weight(basis @ np.diag(vals) @ basis.T)


def random_feasible_triple(rng: np.random.Generator) -> tuple[WeightMatrix, np.ndarray, float]:
    """(weight, feasible axis, admissible gain); half the axes are perturbed off-optimal."""
    w = random_weight(rng)
    u_star, _ = optimal_u(w)
    if rng.random() < 0.5:
        u = u_star
    else:
        while True:
            u = u_star + 0.15 * rng.standard_normal(3)
            u /= np.linalg.norm(u)
            if feasibility(w, u).feasible:
                break
    k = rng.uniform(0.3, 0.95) * k_bound(w)
    return w, u, float(k)


def min_delta_on_axes(w: WeightMatrix, axes: np.ndarray) -> np.ndarray:
    """min over E(A) of Delta(v, u) for a batch of candidate axes, shape (n,)."""
    alpha2 = (axes @ w.eigvecs) ** 2
    lw = w.w_eigvals
    if w.spectrum is Spectrum.THREE_DISTINCT:
        d1 = lw[0] - alpha2[:, 1] * lw[2] - alpha2[:, 2] * lw[1]
        d2 = lw[1] - alpha2[:, 0] * lw[2] - alpha2[:, 2] * lw[0]
        d3 = lw[2] - alpha2[:, 1] * lw[0] - alpha2[:, 0] * lw[1]
        return np.minimum(np.minimum(d1, d2), d3)
    if w.spectrum is Spectrum.TWO_DISTINCT:
        d = w.distinct_index
        rep = 0 if d == 2 else 2
        a3sq = alpha2[:, d]
        d_dist = lw[d] - lw[rep] * (1.0 - a3sq)
        d_plane = (1.0 - a3sq) * (lw[rep] - lw[d])
        return np.minimum(d_dist, d_plane)
    return np.zeros(axes.shape[0])


# suites ------------------------------------------------------------------------

def suite_kernel_identities(n: int = 10_000, seed: int = 2024, tol: float = 1e-10) -> SuiteResult:
    """id7, Rodrigues vs truncated power series, quaternion homomorphism, V_A quaternion form."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    # id7 over random (A, u)
    for _ in range(n // 10):
        a = rng.standard_normal((3, 3))
        u = rng.standard_normal(3)
        worst = max(worst, abs(float(np.tensordot(a, hat(u))) - 2.0 * float(psi(a) @ u)))
    # Rodrigues vs 30-term series
    for _ in range(n // 10):
        angle = rng.uniform(-np.pi, np.pi)
        axis = rng.standard_normal(3)
        axis /= np.linalg.norm(axis)
        k = angle * hat(axis)
        term = np.eye(3)
        acc = np.eye(3)
        for m in range(1, 31):
            term = term @ k / m
            acc = acc + term
        worst = max(worst, float(np.linalg.norm(rodrigues(angle, axis) - acc)))
    # quaternion homomorphism
    for _ in range(n // 10):
        q1 = rng.standard_normal(4)
        q1 /= np.linalg.norm(q1)
        q2 = rng.standard_normal(4)
        q2 /= np.linalg.norm(q2)
        worst = max(worst, float(np.linalg.norm(
            quat_to_rot(quat_mul(q1, q2)) - quat_to_rot(q1) @ quat_to_rot(q2))))
    # V_A quaternion form: V_A(R(Q)) = 2 eps^T W eps
    w = random_weight(rng)
    q = rng.standard_normal((n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    from .so3 import quats_to_rots
    rs = quats_to_rots(q)
    lhs = v_a_batch(w, rs)
    eps = q[:, 1:]
    rhs = 2.0 * np.einsum("ni,ij,nj->n", eps, w.w, eps)
    worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return SuiteResult("kernel-identities", worst < tol, f"max residual {worst:.3e} (tol {tol:g})")


def _fd_directional(f, r: np.ndarray, direction: np.ndarray, h: float = 1e-6) -> float:
    rp = r @ rodrigues(h, direction)
    rm = r @ rodrigues(-h, direction)
    return (f(rp) - f(rm)) / (2.0 * h)


def suite_fd_gradients(n: int = 100, seed: int = 7, rel_tol: float = 1e-5) -> SuiteResult:
    """Analytic directional derivatives of V_A and U vs central differences."""
    rng = np.random.default_rng(seed)
    w = random_weight(rng)
    wp = make_warped(w)
    worst = 0.0
    for _ in range(n):
        r = random_rotation(rng)
        i = rng.integers(0, 3)
        e = np.zeros(3)
        e[i] = 1.0
        # V_A: derivative along R hat(e) is 2 psi(A R) . e
        fd = _fd_directional(lambda rr: v_a(w, rr), r, e)
        an = 2.0 * float(psi_a(w, r) @ e)
        worst = max(worst, abs(fd - an) / max(1.0, abs(an)))
        # U: derivative along R hat(e) is 2 psi(A Gamma)^T Theta e
        q = int(rng.choice([1, 2]))
        fd = _fd_directional(lambda rr: u_value(wp, rr, q), r, e)
        from .warping import gamma as warp_gamma
        an = 2.0 * float(psi(w.a @ warp_gamma(wp, r, q)) @ (big_theta(wp, r, q) @ e))
        worst = max(worst, abs(fd - an) / max(1.0, abs(an)))
    return SuiteResult("fd-gradients", worst < rel_tol,
                       f"max relative deviation {worst:.3e} (tol {rel_tol:g})")


def _random_measurement_config(rng: np.random.Generator):
    n = int(rng.integers(3, 6))
    while True:
        refs = rng.uniform(-1.0, 1.0, size=(n, 3))
        if ctl.assumption_holds(refs):
            break
    weights = rng.uniform(0.2, 2.0, size=(n, 2))
    return refs, weights


def suite_dual_path(n_poses: int = 1000, seed: int = 11, tol: float = 1e-10) -> SuiteResult:
    """Measurement-only quantities vs their matrix-space counterparts.

    Checks V, psi, U, psi-of-Gamma, tau and beta on random poses, both for the
    canonical axes reference set and for random non-orthogonal sets.
    """
    from .warping import gamma as warp_gamma

    rng = np.random.default_rng(seed)
    configs = [(np.eye(3), np.array([[1.0, 0.1], [3.0, 0.3], [5.0, 0.5]]))]
    for _ in range(5):
        configs.append(_random_measurement_config(rng))
    worst = 0.0
    for refs, weights in configs:
        a1 = (refs * weights[:, 0][:, None]).T @ refs
        a2 = (refs * weights[:, 1][:, None]).T @ refs
        w1, w2 = build_weight(a1), build_weight(a2)
        wp1, wp2 = make_warped(w1), make_warped(w2)
        cfg = ctl.make_controller_config(wp1, wp2, 0.4 * gap(wp1), 0.4 * gap(wp2))
        for _ in range(n_poses):
            r = random_rotation(rng)
            y1 = random_rotation(rng)
            y2 = random_rotation(rng)
            q1 = int(rng.choice([1, 2]))
            q2 = int(rng.choice([1, 2]))
            ms = ctl.measurements_from_attitude(refs, weights, r)
            x1, x2 = r @ y1.T, r @ y2.T
            worst = max(worst, abs(ctl.va_from_measurements(ms, 1, y1) - v_a(w1, x1)))
            worst = max(worst, abs(ctl.va_from_measurements(ms, 2, y2) - v_a(w2, x2)))
            worst = max(worst, float(np.linalg.norm(
                ctl.psi_from_measurements(ms, 1, y1) - psi_a(w1, x1))))
            worst = max(worst, abs(
                ctl.u_h_from_measurements(cfg, ms, 1, y1, q1) - u_value(wp1, x1, q1)))
            worst = max(worst, abs(
                ctl.u_h_from_measurements(cfg, ms, 2, y2, q2) - u_value(wp2, x2, q2)))
            worst = max(worst, float(np.linalg.norm(
                ctl.psi_gamma_from_measurements(cfg, ms, 1, y1, q1)
                - psi(a1 @ warp_gamma(wp1, x1, q1)))))
            logic = ctl.LogicState(q1, q2)
            tau_meas = ctl.torque(cfg, ms, logic, y1, y2)
            tau_mat = -2.0 * (
                y1.T @ (big_theta(wp1, x1, q1).T @ psi(a1 @ warp_gamma(wp1, x1, q1)))
                + y2.T @ (big_theta(wp2, x2, q2).T @ psi(a2 @ warp_gamma(wp2, x2, q2))))
            worst = max(worst, float(np.linalg.norm(tau_meas - tau_mat)))
            beta_meas = ctl.beta(cfg, ms, logic, y1)
            beta_mat = y1.T @ (big_theta(wp1, x1, q1).T @ psi(a1 @ warp_gamma(wp1, x1, q1)))
            worst = max(worst, float(np.linalg.norm(beta_meas - beta_mat)))
        n_poses = max(200, n_poses // 2)  # random sets need fewer repeats
    return SuiteResult("dual-path", worst < tol, f"max deviation {worst:.3e} (tol {tol:g})")


def suite_gap_bruteforce(n_triples: int = 20, seed: int = 23, tol: float = 1e-9) -> SuiteResult:
    """Closed-form gap vs direct minimization of mu over the enumerated critical set."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_triples):
        w, u, k = random_feasible_triple(rng)
        wp = make_warped(w, u=u, k=k)
        direct = min(mu(wp, p.rotation, p.q) for p in critical_points(wp))
        worst = max(worst, abs(direct - gap(wp)))
    return SuiteResult("gap-bruteforce", worst < tol,
                       f"max |closed form - direct| {worst:.3e} over {n_triples} triples (tol {tol:g})")


def suite_det_theta(n: int = 100_000, seed: int = 5, tol: float = 1e-10,
                    gain_frac: float = 0.99) -> SuiteResult:
    """det(Theta) positivity and the determinant identity at |k| = 0.99 k_bar."""
    rng = np.random.default_rng(seed)
    w = random_weight(rng)
    k = gain_frac * k_bound(w)
    wp = make_warped(w, k=k)
    rs = haar_rotations(n, rng)
    vs = v_a_batch(w, rs)
    psis = psi_a_batch(w, rs)
    min_det = np.inf
    worst_id = 0.0
    for q, kq in ((1, k), (2, -k)):
        s = kq * vs
        thetas = 2.0 * np.arcsin(s)
        ras = _rodrigues_batch(thetas, wp.u)
        theta_mats = np.transpose(ras, (0, 2, 1)) + (
            (4.0 * kq / np.sqrt(1.0 - s * s))[:, None, None]
            * (wp.u[None, :, None] * psis[:, None, :]))
        dets = np.linalg.det(theta_mats)
        min_det = min(min_det, float(np.min(np.abs(dets))))
        ident = 1.0 + 4.0 * kq * (psis @ wp.u) / np.sqrt(1.0 - s * s)
        worst_id = max(worst_id, float(np.max(np.abs(dets - ident))))
    ok = min_det > 0.0 and worst_id < tol
    return SuiteResult("det-theta", ok,
                       f"min |det Theta| {min_det:.6g}, max identity residual {worst_id:.3e} "
                       f"over {n} rotations x 2 gains (tol {tol:g})")


def _rodrigues_batch(angles: np.ndarray, axis: np.ndarray) -> np.ndarray:
    k = hat(axis)
    k2 = k @ k
    s = np.sin(angles)[:, None, None]
    c = (1.0 - np.cos(angles))[:, None, None]
    return np.eye(3)[None, :, :] + s * k[None, :, :] + c * k2[None, :, :]


def suite_psi_bound(n: int = 100_000, seed: int = 13) -> SuiteResult:
    """|psi(A R)| <= lam_max(W) min(1, sqrt(5 - 4 xi^2)/2) over Haar samples."""
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(3):
        w = random_weight(rng, spectrum=Spectrum(rng.choice(
            [Spectrum.THREE_DISTINCT.value, Spectrum.TWO_DISTINCT.value, Spectrum.ISOTROPIC.value])))
        bound = w.lambda_w_max * min(1.0, math.sqrt(5.0 - 4.0 * w.xi ** 2) / 2.0)
        rs = haar_rotations(n, rng)
        norms = np.linalg.norm(psi_a_batch(w, rs), axis=1)
        worst = max(worst, float(np.max(norms) - bound))
    return SuiteResult("psi-bound", worst <= 1e-12,
                       f"max |psi(AR)| exceeds bound by {worst:.3e} (must be <= 0)")


def suite_sphere_grid(points: int = 1_000_000, n_three: int = 10, n_two: int = 5,
                      seed: int = 31, tol: float = 1e-3) -> SuiteResult:
    """Closed-form optimal axis beats or ties a dense sphere grid on min-Delta."""
    rng = np.random.default_rng(seed)
    grid = fibonacci_sphere(points)
    worst = -np.inf
    for spectrum, count in ((Spectrum.THREE_DISTINCT, n_three), (Spectrum.TWO_DISTINCT, n_two)):
        for _ in range(count):
            w = random_weight(rng, spectrum=spectrum)
            _, dmin_closed = optimal_u(w)
            grid_best = float(np.max(min_delta_on_axes(w, grid)))
            worst = max(worst, grid_best - dmin_closed)
    return SuiteResult("sphere-grid", worst <= tol,
                       f"grid exceeds closed form by at most {worst:.3e} "
                       f"over {n_three}+{n_two} weights (tol {tol:g})")


def suite_gain_guard() -> SuiteResult:
    """Gains at or above the admissible bound are rejected at construction."""
    w = build_weight(np.diag([1.0, 3.0, 5.0]))
    kb = k_bound(w)
    try:
        make_warped(w, k=1.05 * kb)
    except Exception as exc:
        return SuiteResult("gain-guard", True, f"out-of-bound gain rejected ({type(exc).__name__})")
    return SuiteResult("gain-guard", False, "out-of-bound gain was accepted")


def run_suites(level: str = "quick", seed: int = 0) -> list[SuiteResult]:
    """Run the oracle suites; ``full`` switches to the large sample counts."""
    full = level == "full"
    results = [
        suite_kernel_identities(n=10_000, seed=seed + 1),
        suite_fd_gradients(n=100, seed=seed + 2),
        suite_dual_path(n_poses=1000 if full else 300, seed=seed + 3),
        suite_gap_bruteforce(n_triples=20, seed=seed + 4),
        suite_det_theta(n=100_000 if full else 10_000, seed=seed + 5),
        suite_psi_bound(n=100_000 if full else 10_000, seed=seed + 6),
        suite_gain_guard(),
    ]
    results.append(suite_sphere_grid(points=1_000_000 if full else 100_000, seed=seed + 7))
    return results
