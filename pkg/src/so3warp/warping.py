"""Angular warping on SO(3) and the synergy analysis it enables.

The warped family is U(R, q) = V_A(Gamma(R, q)) with
Gamma(R, q) = R R_a(theta_q(R), u) and theta_q(R) = 2 asin(k_q V_A(R)).
This choice makes the undesired critical rotations and the synergy gap exact
closed forms, and gives a computable bound on the admissible gains that keeps
every Gamma(. , q) a diffeomorphism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .potential import Branch, Spectrum, WeightMatrix, eigen_branches, psi_a, v_a
from .so3 import hat, psi, rodrigues


class SynergyError(ValueError):
    """A warping precondition (gain bound, synergism, spectrum) is violated."""


def k_bound(w: WeightMatrix) -> float:
    """Admissible gain bound: |k_q| below this keeps det(Theta) nonzero.

    1 / (2 lam_max(W) sqrt(6 - max(1, 4 xi^2))) with xi = lam_min(W)/lam_max(W).
    """
    xi = w.xi
    return 1.0 / (2.0 * w.lambda_w_max * math.sqrt(6.0 - max(1.0, 4.0 * xi * xi)))


@dataclass(frozen=True)
class WarpedPotential:
    """Warped potential family indexed by q: weight, axis u and gains k_q.

    ``branches`` caches Delta(v, u) per member of the eigenvector set and
    ``delta_min`` its minimum; synergism holds iff that minimum is positive.
    ``u_hat``/``u_hat2`` cache the skew powers of u so axis rotations cost two
    scaled adds.  Built via :func:`make_warped`, which enforces unit u,
    nonzero injective gains and |k_q| < k_bar unless ``validate=False``.
    """

    weight: WeightMatrix
    u: np.ndarray
    gains: dict[int, float]
    k_bar: float
    branches: tuple[Branch, ...]
    delta_min: float
    u_hat: np.ndarray
    u_hat2: np.ndarray

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(sorted(self.gains))

    def gain(self, q: int) -> float:
        try:
            return self.gains[q]
        except KeyError:
            raise SynergyError(f"unknown potential index q={q}") from None

    def axis_rotation(self, angle: float) -> np.ndarray:
        """R_a(angle, u) from the cached skew powers of the warping axis."""
        return _EYE3 + math.sin(angle) * self.u_hat + (1.0 - math.cos(angle)) * self.u_hat2


_EYE3 = np.eye(3)


def make_warped(
    weight: WeightMatrix,
    u: np.ndarray | None = None,
    k: float | None = None,
    gains: dict[int, float] | None = None,
    validate: bool = True,
) -> WarpedPotential:
    """Assemble a WarpedPotential; defaults to the optimal axis and k = 0.95 k_bar.

    ``gains`` overrides the symmetric pair {1: k, 2: -k}.  With ``validate``
    the gain bound and injectivity are enforced; ``validate=False`` admits the
    out-of-bound gains used for side-by-side reproduction runs.
    """
    kb = k_bound(weight)
    if u is None:
        u, _ = optimal_u(weight)
    else:
        u = np.asarray(u, dtype=float)
        if abs(np.linalg.norm(u) - 1.0) >= 1e-12:
            raise SynergyError("warping axis u must be a unit vector")
    if gains is None:
        if k is None:
            k = 0.95 * kb
        gains = {1: float(k), 2: -float(k)}
    gains = {int(q): float(kq) for q, kq in gains.items()}
    if any(kq == 0.0 for kq in gains.values()):
        raise SynergyError("warping gains must be nonzero")
    if len(set(gains.values())) != len(gains):
        raise SynergyError("warping gains must be injective in q")
    if validate and any(abs(kq) >= kb for kq in gains.values()):
        raise SynergyError(f"|k_q| must be below the admissible bound {kb:.6g}")
    branches = eigen_branches(weight, u)
    u_hat = hat(u)
    return WarpedPotential(
        weight=weight,
        u=u,
        gains=gains,
        k_bar=kb,
        branches=branches,
        delta_min=min(b.delta for b in branches),
        u_hat=u_hat,
        u_hat2=u_hat @ u_hat,
    )


def theta_q(wp: WarpedPotential, r: np.ndarray, q: int) -> float:
    """Warping angle 2 asin(k_q V_A(R)), in (-pi, pi) for admissible gains."""
    s = wp.gain(q) * v_a(wp.weight, r)
    if abs(s) >= 1.0:
        raise SynergyError("gain too large: |k_q V_A(R)| >= 1")
    return 2.0 * math.asin(s)


def gamma(wp: WarpedPotential, r: np.ndarray, q: int) -> np.ndarray:
    """Warped rotation Gamma(R, q) = R R_a(theta_q(R), u)."""
    return r @ wp.axis_rotation(theta_q(wp, r, q))


def big_theta(wp: WarpedPotential, r: np.ndarray, q: int) -> np.ndarray:
    """Differential matrix Theta(R, q) mapping body rates through the warp.

    R_a(theta_q, u)^T + 4 k_q u psi(A R)^T / sqrt(1 - k_q^2 V_A^2); its
    determinant is 1 + 2 u^T psi(R^T grad theta_q) and stays positive under
    the gain bound.
    """
    kq = wp.gain(q)
    v = v_a(wp.weight, r)
    s = kq * v
    if abs(s) >= 1.0:
        raise SynergyError("gain too large: |k_q V_A(R)| >= 1")
    ra = wp.axis_rotation(2.0 * math.asin(s))
    return ra.T + (4.0 * kq / math.sqrt(1.0 - s * s)) * np.outer(wp.u, psi_a(wp.weight, r))


def u_values_matrix(wp: WarpedPotential, x: np.ndarray) -> dict[int, float]:
    """U(X, p) for every index p, sharing V_A(X) and A X across the family."""
    va_x = v_a(wp.weight, x)
    ax = wp.weight.a @ x
    tr = wp.weight.trace
    out = {}
    for p in wp.indices:
        s = wp.gains[p] * va_x
        if abs(s) >= 1.0:
            raise SynergyError("gain too large: |k_q V_A(R)| >= 1")
        ra = wp.axis_rotation(2.0 * math.asin(s))
        out[p] = tr - float(np.einsum("ij,ji->", ax, ra))
    return out


def u_value(wp: WarpedPotential, r: np.ndarray, q: int) -> float:
    """U(R, q) = V_A(Gamma(R, q)); zero exactly at R = I."""
    return v_a(wp.weight, gamma(wp, r, q))


def mu(wp: WarpedPotential, r: np.ndarray, q: int) -> float:
    """Excess of member q over the family minimum at R."""
    if q not in wp.gains:
        raise SynergyError(f"unknown potential index q={q}")
    values = u_values_matrix(wp, r)
    return values[q] - min(values.values())


def synergism_check(wp: WarpedPotential) -> bool:
    """True iff Delta(v, u) > 0 for every member of the eigenvector set."""
    return wp.delta_min > 0.0


def v_bar(k: float, lam_w: float, dlt: float) -> float:
    """V_A value at the undesired critical rotations of the (lam_w, Delta) branch.

    Positive root of 2 Delta k^2 V^2 + V - 2 lam_w = 0.
    """
    if dlt == 0.0:
        raise SynergyError("degenerate branch: Delta(v, u) = 0")
    rad = 1.0 + 16.0 * lam_w * k * k * dlt
    if rad < 0.0:
        raise SynergyError("branch has no real critical value (Delta too negative)")
    return (-1.0 + math.sqrt(rad)) / (4.0 * k * k * dlt)


def sigma_gap(k: float, lam_w: float, dlt: float) -> float:
    """Per-branch synergy margin 8 k^2 Vbar^2 (1 - k^2 Vbar^2) Delta."""
    vb = v_bar(k, lam_w, dlt)
    s2 = k * k * vb * vb
    return 8.0 * s2 * (1.0 - s2) * dlt


@dataclass(frozen=True)
class CriticalPoint:
    """One undesired critical point of U(. , q).

    ``rotation`` solves Gamma(R, q) = R_a(pi, v); ``v_bar`` is V_A(rotation)
    and ``u_value`` = U(rotation, q) = 2 lam_W(v).
    """

    rotation: np.ndarray
    q: int
    v: np.ndarray
    v_bar: float
    u_value: float


def critical_points(wp: WarpedPotential) -> list[CriticalPoint]:
    """Enumerate the undesired critical points, one per (branch, q).

    For a degenerate plane the worst-case representative axis stands in for
    the continuum.  Each returned rotation is verified to be genuinely
    critical: || psi(A Gamma(R, q)) || < 1e-9.
    """
    pts: list[CriticalPoint] = []
    for b in wp.branches:
        if wp.weight.spectrum is Spectrum.ISOTROPIC:
            raise SynergyError("isotropic weight: critical rotations fill a continuum with Delta = 0")
        for q in wp.indices:
            kq = wp.gain(q)
            vb = v_bar(kq, b.lam_w, b.delta)
            th = 2.0 * math.asin(kq * vb)
            rot = rodrigues(math.pi, b.v) @ rodrigues(th, wp.u).T
            resid = np.linalg.norm(psi(wp.weight.a @ gamma(wp, rot, q)))
            if resid >= 1e-9:
                raise SynergyError(f"critical point residual {resid:.3e} out of tolerance")
            pts.append(CriticalPoint(rotation=rot, q=q, v=b.v.copy(), v_bar=vb,
                                     u_value=2.0 * b.lam_w))
    return pts


def gap(wp: WarpedPotential) -> float:
    """Exact synergy gap for the symmetric two-member family k1 = -k2.

    min over E(A) of sigma(k, lam_W(v), Delta(v, u)); requires synergism.
    """
    if wp.indices != (1, 2):
        raise SynergyError("gap is defined for the index set {1, 2}")
    k1, k2 = wp.gains[1], wp.gains[2]
    if not math.isclose(k1, -k2, rel_tol=1e-12, abs_tol=0.0):
        raise SynergyError("gap requires the symmetric gain pair k1 = -k2")
    if not synergism_check(wp):
        raise SynergyError("family is not synergistic: min Delta(v, u) <= 0")
    k = abs(k1)
    return min(sigma_gap(k, b.lam_w, b.delta) for b in wp.branches)


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    delta_min: float
    branches: tuple[Branch, ...]
    note: str


def feasibility(w: WeightMatrix, u: np.ndarray) -> FeasibilityReport:
    """Can warping about u make the family synergistic for this weight?

    True iff Delta(v, u) > 0 on all of E(A).  An isotropic weight always
    fails: whatever the axis, some critical direction is orthogonal to it.
    """
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) >= 1e-9:
        raise SynergyError("u must be a unit vector")
    branches = eigen_branches(w, u)
    dmin = min(b.delta for b in branches)
    if w.spectrum is Spectrum.ISOTROPIC:
        note = "isotropic spectrum: every axis leaves a zero-margin critical direction"
    elif dmin > 0.0:
        note = "synergism condition satisfied: Delta(v, u) > 0 on E(A)"
    else:
        worst = min(branches, key=lambda b: b.delta)
        note = f"synergism fails on branch '{worst.label}' (Delta = {worst.delta:.6g})"
    return FeasibilityReport(feasible=dmin > 0.0, delta_min=dmin, branches=branches, note=note)


def planar_optimum(w: WeightMatrix) -> bool:
    """True when the gap-optimal axis has no component along the smallest eigendirection.

    Decided by lam2 >= lam1 lam3 / (lam3 - lam1) on the ascending spectrum of A.
    """
    l1, l2, l3 = w.eigvals_a
    return bool(l2 * (l3 - l1) >= l1 * l3)


def optimal_u(w: WeightMatrix) -> tuple[np.ndarray, float]:
    """Warping axis maximizing the worst-case margin min over E(A) of Delta(v, u).

    Returns the axis (non-negative coordinates in the eigenbasis) and the
    achieved min-Delta.  The optimum depends only on eigenvalue ratios, so it
    is invariant under scaling of A.
    """
    l1, l2, l3 = (float(x) for x in w.eigvals_a)
    if w.spectrum is Spectrum.ISOTROPIC:
        raise SynergyError("isotropic weight: no axis achieves a positive margin")
    if w.spectrum is Spectrum.TWO_DISTINCT:
        if w.distinct_index == 0:
            raise SynergyError(
                "repeated eigenvalue above the isolated one: no axis achieves a positive margin"
            )
        rep, dist = l1, l3
        a3sq = 1.0 - rep / dist
        coeffs = np.array([0.0, math.sqrt(1.0 - a3sq), math.sqrt(a3sq)])
        dmin = (dist - rep) * rep / dist
    elif planar_optimum(w):
        s = l2 + l3
        coeffs = np.array([0.0, math.sqrt(l2 / s), math.sqrt(l3 / s)])
        dmin = l1
    else:
        s = 2.0 * (l1 * l2 + l1 * l3 + l2 * l3)
        prods = np.array([l2 * l3, l1 * l3, l1 * l2])
        coeffs = np.sqrt(1.0 - 4.0 * prods / s)
        dmin = 4.0 * l1 * l2 * l3 / s
    u = w.eigvecs @ coeffs
    return u / np.linalg.norm(u), float(dmin)
