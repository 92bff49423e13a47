"""Modified trace potential V_A(R) = tr(A (I - R)) on SO(3).

Carries the weight matrix A together with its eigenstructure, the derived
matrix W = tr(A) I - A, the spectrum classification that decides which of the
three analytic branches applies, and the per-axis margin Delta(v, u) that
governs whether angular warping about an axis u can clear the undesired
critical rotations.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .so3 import hat, psi, rodrigues, _canonical_sign

SYM_TOL = 1e-12
EIG_TOL = 1e-8   # matching a probe direction against an eigendirection


class Spectrum(Enum):
    ISOTROPIC = "isotropic"
    TWO_DISTINCT = "two-distinct"
    THREE_DISTINCT = "three-distinct"


@dataclass(frozen=True)
class WeightMatrix:
    """Symmetric PSD weight A with eigenstructure and W = tr(A) I - A.

    ``eigvals_a`` ascend, ``eigvecs`` holds the matching orthonormal
    eigenvectors as columns with canonical signs, and ``w_eigvals[i]`` is
    ``tr(A) - eigvals_a[i]`` (hence descending).  ``distinct_index`` names the
    isolated eigenvalue (0 or 2) when exactly two eigenvalues coincide.
    """

    a: np.ndarray
    eigvals_a: np.ndarray
    eigvecs: np.ndarray
    w: np.ndarray
    w_eigvals: np.ndarray
    spectrum: Spectrum
    distinct_index: int | None
    tau_spec: float

    @property
    def trace(self) -> float:
        return float(self.eigvals_a.sum())

    @property
    def lambda_w_max(self) -> float:
        return float(self.w_eigvals[0])

    @property
    def lambda_w_min(self) -> float:
        return float(self.w_eigvals[2])

    @property
    def xi(self) -> float:
        return self.lambda_w_min / self.lambda_w_max


def build_weight(a: np.ndarray, tau_spec: float = 1e-9) -> WeightMatrix:
    """Eigendecompose a symmetric weight matrix and classify its spectrum.

    Eigenvalues within ``tau_spec * max(1, lam_max)`` of each other are treated
    as equal.  Rejects asymmetric input, indefinite A, and A whose derived
    W = tr(A) I - A is not positive definite.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (3, 3):
        raise ValueError("weight matrix must be 3x3")
    if np.linalg.norm(a - a.T) >= SYM_TOL:
        raise ValueError("weight matrix must be symmetric")
    a = 0.5 * (a + a.T)
    vals, vecs = np.linalg.eigh(a)
    tol = tau_spec * max(1.0, abs(vals[2]))
    if vals[0] < -tol:
        raise ValueError("weight matrix must be positive semi-definite")
    tr = float(vals.sum())
    w_vals = tr - vals
    if w_vals[2] <= tol:
        raise ValueError("tr(A) I - A must be positive definite")
    vecs = np.column_stack([_canonical_sign(vecs[:, i]) for i in range(3)])

    low_pair = vals[1] - vals[0] <= tol
    high_pair = vals[2] - vals[1] <= tol
    if vals[2] - vals[0] <= tol:
        spectrum, distinct = Spectrum.ISOTROPIC, None
    elif low_pair:
        spectrum, distinct = Spectrum.TWO_DISTINCT, 2
    elif high_pair:
        spectrum, distinct = Spectrum.TWO_DISTINCT, 0
    else:
        spectrum, distinct = Spectrum.THREE_DISTINCT, None
    return WeightMatrix(
        a=a,
        eigvals_a=vals,
        eigvecs=vecs,
        w=tr * np.eye(3) - a,
        w_eigvals=w_vals,
        spectrum=spectrum,
        distinct_index=distinct,
        tau_spec=tau_spec,
    )


def v_a(w: WeightMatrix, r: np.ndarray) -> float:
    """tr(A (I - R)); non-negative, zero only at R = I, at most 2 lam_max(W)."""
    return w.trace - float(np.einsum("ij,ij->", w.a, r))


def psi_a(w: WeightMatrix, r: np.ndarray) -> np.ndarray:
    """psi(A R), the vectorized gradient direction of V_A at R."""
    return psi(w.a @ r)


def grad_v_a(w: WeightMatrix, r: np.ndarray) -> np.ndarray:
    """Riemannian gradient of V_A: R Pa(A R), an element of the tangent space."""
    ar = w.a @ r
    return r @ (0.5 * (ar - ar.T))


@dataclass(frozen=True)
class CriticalSet:
    """Critical rotations of V_A: the identity plus flips about ``axes``.

    For a repeated eigenvalue the flip axes fill ``plane_basis`` (columns span
    the degenerate plane); for an isotropic weight every unit axis is critical
    and ``full_sphere`` is set.  The identity is always a member and is left
    implicit.
    """

    axes: tuple[np.ndarray, ...]
    plane_basis: np.ndarray | None
    full_sphere: bool


def critical_set(w: WeightMatrix) -> CriticalSet:
    if w.spectrum is Spectrum.ISOTROPIC:
        return CriticalSet(axes=(), plane_basis=None, full_sphere=True)
    if w.spectrum is Spectrum.TWO_DISTINCT:
        d = w.distinct_index
        rep = [i for i in range(3) if i != d]
        return CriticalSet(
            axes=(w.eigvecs[:, d].copy(),),
            plane_basis=w.eigvecs[:, rep].copy(),
            full_sphere=False,
        )
    return CriticalSet(
        axes=tuple(w.eigvecs[:, i].copy() for i in range(3)),
        plane_basis=None,
        full_sphere=False,
    )


def _two_distinct_roles(w: WeightMatrix) -> tuple[np.ndarray, float, float]:
    """(distinct eigvec, W-eigval of the repeated pair, W-eigval of the distinct one)."""
    d = w.distinct_index
    rep = 0 if d == 2 else 2
    return w.eigvecs[:, d], float(w.w_eigvals[rep]), float(w.w_eigvals[d])


def delta(w: WeightMatrix, v: np.ndarray, u: np.ndarray) -> float:
    """Margin Delta(v, u) of the flip about v under warping about u.

    The flip satisfies V_A(R_a(pi, v) R_a(theta, u)) =
    2 lam_W(v) - 2 sin^2(theta/2) Delta(v, u), so a positive margin means the
    warp lowers the potential there.  ``v`` must belong to the eigenvector set
    of A (for a repeated pair: the isolated axis or any unit vector of the
    degenerate plane).
    """
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) >= 1e-9 or abs(np.linalg.norm(v) - 1.0) >= 1e-9:
        raise ValueError("delta expects unit vectors")
    if w.spectrum is Spectrum.ISOTROPIC:
        lam_w = float(w.w_eigvals[0])
        return lam_w * float(u @ v) ** 2
    if w.spectrum is Spectrum.TWO_DISTINCT:
        v3, lw_rep, lw_dist = _two_distinct_roles(w)
        a3 = float(u @ v3)
        align = abs(float(v @ v3))
        if align > 1.0 - EIG_TOL:
            return lw_dist - lw_rep * (1.0 - a3 * a3)
        if align < EIG_TOL:
            # in-plane axis: (1 - a3^2)(lw_rep - lw_dist) + lw_dist (u.v)^2
            return (1.0 - a3 * a3) * (lw_rep - lw_dist) + lw_dist * float(u @ v) ** 2
        raise ValueError("v is neither the isolated eigendirection nor in the degenerate plane")
    alpha2 = (w.eigvecs.T @ u) ** 2
    match = np.abs(w.eigvecs.T @ v)
    m = int(np.argmax(match))
    if match[m] < 1.0 - EIG_TOL:
        raise ValueError("v does not match an eigendirection of A")
    n, l = (m + 1) % 3, (m + 2) % 3
    lw = w.w_eigvals
    return float(lw[m] - alpha2[n] * lw[l] - alpha2[l] * lw[n])


@dataclass(frozen=True)
class Branch:
    """One member of the eigenvector set E(A) as seen by the warp about u.

    ``continuum`` marks a representative of an uncountable family (a repeated
    plane or the whole sphere); its ``delta`` is then the worst case over the
    family, attained at ``v``.
    """

    v: np.ndarray
    lam_w: float
    delta: float
    continuum: bool
    label: str


def eigen_branches(w: WeightMatrix, u: np.ndarray) -> tuple[Branch, ...]:
    """E(A) reduced to finitely many branches, worst case per continuum.

    The returned deltas cover min over E(A): for an isolated eigendirection
    the exact Delta(v_i, u); for a degenerate plane the minimum over the plane
    (attained when the in-plane axis is orthogonal to the projection of u);
    for an isotropic weight the minimum over the sphere, which is always 0.
    """
    u = np.asarray(u, dtype=float)
    if w.spectrum is Spectrum.ISOTROPIC:
        # any v orthogonal to u has Delta = 0
        probe = np.eye(3)[int(np.argmin(np.abs(u)))]
        v = np.cross(u, probe)
        v /= np.linalg.norm(v)
        return (Branch(v=v, lam_w=float(w.w_eigvals[0]), delta=0.0, continuum=True, label="sphere"),)
    if w.spectrum is Spectrum.TWO_DISTINCT:
        v3, lw_rep, lw_dist = _two_distinct_roles(w)
        a3 = float(u @ v3)
        u_perp = u - a3 * v3
        n_perp = np.linalg.norm(u_perp)
        if n_perp > 1e-12:
            v_worst = np.cross(v3, u_perp / n_perp)
        else:
            v_worst = w.eigvecs[:, 0 if w.distinct_index == 2 else 1].copy()
        v_worst /= np.linalg.norm(v_worst)
        d_plane = (1.0 - a3 * a3) * (lw_rep - lw_dist)
        d_dist = lw_dist - lw_rep * (1.0 - a3 * a3)
        return (
            Branch(v=v_worst, lam_w=lw_rep, delta=d_plane, continuum=True, label="plane"),
            Branch(v=v3.copy(), lam_w=lw_dist, delta=d_dist, continuum=False, label="isolated"),
        )
    alpha2 = (w.eigvecs.T @ u) ** 2
    lw = w.w_eigvals
    out = []
    for m in range(3):
        n, l = (m + 1) % 3, (m + 2) % 3
        d = float(lw[m] - alpha2[n] * lw[l] - alpha2[l] * lw[n])
        out.append(Branch(v=w.eigvecs[:, m].copy(), lam_w=float(lw[m]), delta=d,
                          continuum=False, label=f"v{m + 1}"))
    return tuple(out)


def flip(v: np.ndarray) -> np.ndarray:
    """Rotation by pi about the unit axis v."""
    return rodrigues(np.pi, v)


def psi_a_batch(w: WeightMatrix, rs: np.ndarray) -> np.ndarray:
    """psi(A R) for a batch of rotations, shape (n, 3)."""
    ar = np.einsum("ij,njk->nik", w.a, rs)
    out = np.empty((rs.shape[0], 3))
    out[:, 0] = 0.5 * (ar[:, 2, 1] - ar[:, 1, 2])
    out[:, 1] = 0.5 * (ar[:, 0, 2] - ar[:, 2, 0])
    out[:, 2] = 0.5 * (ar[:, 1, 0] - ar[:, 0, 1])
    return out


def v_a_batch(w: WeightMatrix, rs: np.ndarray) -> np.ndarray:
    """V_A over a batch of rotations, shape (n,)."""
    return w.trace - np.einsum("ij,nji->n", w.a, rs)
