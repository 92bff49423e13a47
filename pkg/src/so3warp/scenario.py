"""Scenario files: parsing, validation and resolution into a runnable config.

Line-oriented ``key = value`` format with ``[section]`` headers and ``#``
comments.  Unknown sections or keys are rejected and nothing is applied on
error.  ``auto`` placeholders resolve to the gap-optimal warping axis,
k = 0.95 k_bar and delta = 0.5 gap; the resolved values are echoed into the
output CSV header so every run is self-documenting.
"""

from __future__ import annotations

import configparser
import io
import math

import numpy as np

from .controller import ControllerConfig, assumption_holds, make_controller_config
from .potential import build_weight
from .simulator import ScenarioConfig
from .so3 import quat_to_rot, rodrigues
from .warping import SynergyError, feasibility, gap, k_bound, make_warped, optimal_u


class ScenarioError(ValueError):
    """Malformed scenario file (grammar or schema)."""


class PreconditionError(ValueError):
    """Well-formed scenario whose parameters violate a controller precondition."""


_SCHEMA: dict[str, set[str]] = {
    "weights": {"a1", "a2"},
    "warping": {"u1", "u2", "k1", "k2"},
    "hysteresis": {"delta1", "delta2"},
    "plant": {"inertia", "r", "rho1", "rho2"},
    "init": {"R0", "omega0", "Rhat0", "Rd"},
    "sim": {"dt", "t_end", "controller", "noise_std", "seed", "max_jumps"},
}

_UNIT_VECS = {"e1": (1.0, 0.0, 0.0), "e2": (0.0, 1.0, 0.0), "e3": (0.0, 0.0, 1.0)}


def _reals(text: str, n: int, what: str) -> np.ndarray:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != n:
        raise ScenarioError(f"{what}: expected {n} comma-separated reals, got {len(parts)}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise ScenarioError(f"{what}: {exc}") from None


def parse_matrix(text: str, what: str) -> np.ndarray:
    """``diag(a,b,c)`` shorthand or 9 comma-separated reals, row major."""
    text = text.strip()
    if text.startswith("diag(") and text.endswith(")"):
        return np.diag(_reals(text[5:-1], 3, what))
    return _reals(text, 9, what).reshape(3, 3)


def parse_vector(text: str, what: str) -> np.ndarray:
    text = text.strip()
    if text in _UNIT_VECS:
        return np.array(_UNIT_VECS[text])
    return _reals(text, 3, what)


def parse_rotation(text: str, what: str) -> np.ndarray:
    """``identity``, axis-angle ``angle,ax,ay,az`` (radians), or ``quat(eta,ex,ey,ez)``."""
    text = text.strip()
    if text == "identity":
        return np.eye(3)
    if text.startswith("quat(") and text.endswith(")"):
        q = _reals(text[5:-1], 4, what)
        nq = np.linalg.norm(q)
        if abs(nq - 1.0) > 1e-6:
            raise ScenarioError(f"{what}: quaternion norm {nq:.3g} is not 1")
        return quat_to_rot(q / nq)
    vals = _reals(text, 4, what)
    angle, axis = vals[0], vals[1:]
    na = np.linalg.norm(axis)
    if na < 1e-12:
        raise ScenarioError(f"{what}: zero rotation axis")
    if abs(na - 1.0) > 1e-6:
        raise ScenarioError(f"{what}: axis norm {na:.3g} is not 1")
    return rodrigues(angle, axis / na)


class RawScenario:
    """Parsed but unresolved scenario contents."""

    def __init__(self, cp: configparser.ConfigParser):
        for section in cp.sections():
            if section not in _SCHEMA:
                raise ScenarioError(f"unknown section [{section}]")
            for key in cp[section]:
                if key not in _SCHEMA[section]:
                    raise ScenarioError(f"unknown key '{key}' in [{section}]")
        for required in ("init", "sim"):
            if not cp.has_section(required):
                raise ScenarioError(f"missing required section [{required}]")
        if not cp.has_section("plant") and not cp.has_section("weights"):
            raise ScenarioError("need a [plant] section or a [weights] section")
        self.cp = cp

    def get(self, section: str, key: str, default: str | None = None) -> str | None:
        if self.cp.has_section(section) and key in self.cp[section]:
            return self.cp[section][key].strip()
        return default


def parse_scenario(path: str) -> RawScenario:
    cp = configparser.ConfigParser(
        comment_prefixes=("#",), inline_comment_prefixes=("#",),
        interpolation=None, strict=True,
    )
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from None
    except configparser.Error as exc:
        raise ScenarioError(f"malformed scenario file: {exc}") from None
    return RawScenario(cp)


def parse_scenario_text(text: str) -> RawScenario:
    cp = configparser.ConfigParser(
        comment_prefixes=("#",), inline_comment_prefixes=("#",),
        interpolation=None, strict=True,
    )
    cp.optionxform = str
    try:
        cp.read_file(io.StringIO(text))
    except configparser.Error as exc:
        raise ScenarioError(f"malformed scenario file: {exc}") from None
    return RawScenario(cp)


def _plant_arrays(raw: RawScenario) -> tuple[np.ndarray, np.ndarray]:
    """(refs, weights) from [plant], or synthesized from the [weights] eigenbasis."""
    r_text = raw.get("plant", "r")
    rho1_text = raw.get("plant", "rho1")
    rho2_text = raw.get("plant", "rho2")
    if r_text is not None or rho1_text is not None or rho2_text is not None:
        if r_text is None or rho1_text is None or rho2_text is None:
            raise ScenarioError("[plant] must provide r, rho1 and rho2 together")
        refs = np.array([parse_vector(p, "plant.r") for p in r_text.split(";") if p.strip()])
        if refs.ndim != 2 or refs.shape[0] < 2:
            raise ScenarioError("plant.r must list at least two reference vectors")
        n = refs.shape[0]
        rho1 = _reals(rho1_text, n, "plant.rho1")
        rho2 = _reals(rho2_text, n, "plant.rho2")
        if np.any(rho1 <= 0.0) or np.any(rho2 <= 0.0):
            raise ScenarioError("measurement weights rho must be positive")
        return refs, np.column_stack([rho1, rho2])
    # synthesize from [weights]: shared eigenbasis, eigenvalues as weights
    a1_text, a2_text = raw.get("weights", "a1"), raw.get("weights", "a2")
    if a1_text is None or a2_text is None:
        raise ScenarioError("without plant.r, both weights.a1 and weights.a2 are required")
    a1 = parse_matrix(a1_text, "weights.a1")
    a2 = parse_matrix(a2_text, "weights.a2")
    vals1, vecs = np.linalg.eigh(0.5 * (a1 + a1.T))
    d2 = vecs.T @ (0.5 * (a2 + a2.T)) @ vecs
    if np.linalg.norm(d2 - np.diag(np.diag(d2))) > 1e-9:
        raise ScenarioError("weights.a1 and weights.a2 must share an eigenbasis "
                            "when no plant.r is given")
    vals2 = np.diag(d2)
    if np.any(vals1 <= 0.0) or np.any(vals2 <= 0.0):
        raise ScenarioError("synthesizing measurements needs positive definite a1 and a2")
    return vecs.T.copy(), np.column_stack([vals1, vals2])


def _check_declared_weights(raw: RawScenario, a1: np.ndarray, a2: np.ndarray) -> None:
    for key, derived in (("a1", a1), ("a2", a2)):
        text = raw.get("weights", key)
        if text is None:
            continue
        declared = parse_matrix(text, f"weights.{key}")
        if np.linalg.norm(declared - derived) > 1e-9:
            raise ScenarioError(
                f"weights.{key} disagrees with sum_i rho_i {key[-1]} r_i r_i^T from [plant]"
            )


def _resolve_axis(raw: RawScenario, h: int, w, notes: list[str]) -> np.ndarray:
    text = raw.get("warping", f"u{h}", "auto")
    if text == "auto":
        u, dmin = optimal_u(w)
        notes.append(f"u{h} = auto -> [{u[0]:.12g}, {u[1]:.12g}, {u[2]:.12g}] (min-Delta {dmin:.12g})")
        return u
    u = parse_vector(text, f"warping.u{h}")
    nu = np.linalg.norm(u)
    if abs(nu - 1.0) > 1e-6:
        raise ScenarioError(f"warping.u{h} must be a unit vector")
    return u / nu


def _resolve_gain(raw: RawScenario, h: int, kb: float, paper_exact: bool,
                  notes: list[str]) -> float:
    text = raw.get("warping", f"k{h}", "auto")
    if text == "auto":
        k = 0.95 * kb
        notes.append(f"k{h} = auto -> {k:.12g} (0.95 k_bar, k_bar = {kb:.12g})")
        return k
    try:
        k = float(text)
    except ValueError:
        raise ScenarioError(f"warping.k{h}: not a real number") from None
    if k == 0.0:
        raise PreconditionError(f"warping.k{h} must be nonzero")
    if abs(k) >= kb and not paper_exact:
        clamped = math.copysign(0.99 * kb, k)
        notes.append(f"k{h} = {k:.12g} exceeds k_bar = {kb:.12g}; clamped to {clamped:.12g} "
                     "(use --paper-exact to bypass)")
        return clamped
    if abs(k) >= kb:
        notes.append(f"k{h} = {k:.12g} exceeds k_bar = {kb:.12g}; kept (--paper-exact)")
    return k


def _resolve_delta(raw: RawScenario, h: int, gap_h: float, paper_exact: bool,
                   notes: list[str]) -> float:
    text = raw.get("hysteresis", f"delta{h}", "auto")
    if text == "auto":
        d = 0.5 * gap_h
        notes.append(f"delta{h} = auto -> {d:.12g} (0.5 gap, gap = {gap_h:.12g})")
        return d
    try:
        d = float(text)
    except ValueError:
        raise ScenarioError(f"hysteresis.delta{h}: not a real number") from None
    if d <= 0.0:
        raise PreconditionError(f"hysteresis.delta{h} must be positive")
    if d >= gap_h and not paper_exact:
        clamped = 0.5 * gap_h
        notes.append(f"delta{h} = {d:.12g} is not below the gap {gap_h:.12g}; clamped to "
                     f"{clamped:.12g} (use --paper-exact to bypass)")
        return clamped
    if d >= gap_h:
        notes.append(f"delta{h} = {d:.12g} is not below the gap {gap_h:.12g}; kept (--paper-exact)")
    return d


def resolve(raw: RawScenario, paper_exact: bool = False,
            seed_override: int | None = None) -> ScenarioConfig:
    """Turn a parsed scenario into a runnable ScenarioConfig.

    Exceeding gains clamp to 0.99 k_bar and exceeding hysteresis widths to
    half the gap unless ``paper_exact``, in which case the literal values are
    kept with controller validation disabled.  Every substitution is recorded
    in the notes echoed to the CSV header.
    """
    notes: list[str] = []
    refs, weights = _plant_arrays(raw)
    if not assumption_holds(refs):
        raise PreconditionError("need at least three pairwise non-collinear reference vectors")
    a1 = (refs * weights[:, 0][:, None]).T @ refs
    a2 = (refs * weights[:, 1][:, None]).T @ refs
    _check_declared_weights(raw, a1, a2)
    w1, w2 = build_weight(a1), build_weight(a2)

    controller = raw.get("sim", "controller", "hybrid")
    if controller not in ("hybrid", "smooth"):
        raise ScenarioError("sim.controller must be 'hybrid' or 'smooth'")

    cfg: ControllerConfig | None = None
    if controller == "hybrid":
        wps = []
        for h, w in ((1, w1), (2, w2)):
            u = _resolve_axis(raw, h, w, notes)
            rep = feasibility(w, u)
            if not rep.feasible:
                raise PreconditionError(f"warping axis u{h} infeasible: {rep.note}")
            kb = k_bound(w)
            k = _resolve_gain(raw, h, kb, paper_exact, notes)
            wps.append(make_warped(w, u=u, k=k, validate=not paper_exact))
        gaps = [gap(wp) for wp in wps]
        d1 = _resolve_delta(raw, 1, gaps[0], paper_exact, notes)
        d2 = _resolve_delta(raw, 2, gaps[1], paper_exact, notes)
        try:
            cfg = make_controller_config(wps[0], wps[1], d1, d2, validate=not paper_exact)
        except SynergyError as exc:
            raise PreconditionError(str(exc)) from None
        for h, wp in ((1, wps[0]), (2, wps[1])):
            notes.append(f"gap{h} = {gaps[h - 1]:.12g}, k_bar{h} = {wp.k_bar:.12g}, "
                         f"min-Delta{h} = {wp.delta_min:.12g}")

    inertia_text = raw.get("plant", "inertia")
    inertia = parse_matrix(inertia_text, "plant.inertia") if inertia_text else np.eye(3)

    def _rot(key: str, default: str) -> np.ndarray:
        return parse_rotation(raw.get("init", key, default), f"init.{key}")

    def _float(section: str, key: str, default: float) -> float:
        text = raw.get(section, key)
        if text is None:
            return default
        try:
            return float(text)
        except ValueError:
            raise ScenarioError(f"{section}.{key}: not a real number") from None

    omega0_text = raw.get("init", "omega0", "0,0,0")
    seed = seed_override if seed_override is not None \
        else int(_float("sim", "seed", 0.0))
    sc = ScenarioConfig(
        inertia=inertia,
        refs=refs,
        weights=weights,
        controller=controller,
        w1=w1,
        w2=w2,
        cfg=cfg,
        r0=_rot("R0", "identity"),
        omega0=parse_vector(omega0_text, "init.omega0"),
        rhat0=_rot("Rhat0", "identity"),
        rd=_rot("Rd", "identity"),
        dt=_float("sim", "dt", 1e-3),
        t_end=_float("sim", "t_end", 20.0),
        max_jumps=int(_float("sim", "max_jumps", 100.0)),
        noise_std=_float("sim", "noise_std", 0.0),
        seed=seed,
        notes=notes,
    )
    notes.insert(0, f"controller = {controller}, dt = {sc.dt:.12g}, t_end = {sc.t_end:.12g}, "
                    f"seed = {sc.seed}, noise_std = {sc.noise_std:.12g}")
    return sc


def load_scenario(path: str, paper_exact: bool = False,
                  seed_override: int | None = None) -> ScenarioConfig:
    return resolve(parse_scenario(path), paper_exact=paper_exact, seed_override=seed_override)
