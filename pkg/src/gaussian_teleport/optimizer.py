"""Optimal squeezed-state measurement for Charlie.

The search is split in two stages. For a fixed phase the best squeezing
factor is known in closed form: with

    u = (det C + 1/4, (det Sigma)^2 - Tr(Omega C Omega^T U)),
    k(phi) = (v^T U v, v^T C v),   v = (sin phi, cos phi),
    gamma(phi) = u . k(phi),
    omega(phi) = [k(phi) x k(phi - pi/2)]_z / 2,

the fidelity is maximised by the finite root ``xi_-`` whenever
``gamma(phi) < 0`` and ``gamma(phi - pi/2) < 0``, and by one of the homodyne
limits otherwise. The remaining one-dimensional problem over the phase is
piecewise smooth; its maximum sits at a stationary point of either branch
or at a border between the two regimes, and all of those are collected as
candidates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import InputState, NonPhysicalError, ThreeModeState, canonical_phase, partial_trace_third, symmetric_channel_coefficients
from .fidelity import GammaMatrix, adjugate, gamma_tr, sigma_matrix

HALF_PI = 0.5 * math.pi
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
PHASE_TOL = 1e-10
TIE_TOL = 1e-12
HETERODYNE_TOL = 1e-9


class PhaseIndependentError(ValueError):
    """Every phase is stationary for the homodyne branch."""


class MeasurementKind(str, enum.Enum):
    HETERODYNE = "heterodyne"
    SQUEEZED_HETERODYNE = "squeezed-heterodyne"
    HOMODYNE = "homodyne-X(phi)"  # xi = +inf
    HOMODYNE_CONJUGATE = "homodyne-X(phi+pi/2)"  # xi = 0
    ANY = "any"


@dataclass(frozen=True)
class OptimizerContext:
    gamma: GammaMatrix
    Sigma: np.ndarray
    U: np.ndarray
    u: np.ndarray
    C: np.ndarray
    tau: np.ndarray

    @property
    def det_gamma(self) -> float:
        return self.gamma.det

    @property
    def is_degenerate(self) -> bool:
        return not np.any(self.Sigma)


@dataclass(frozen=True)
class PhaseProfile:
    phi: float
    k: np.ndarray
    k_shift: np.ndarray
    gamma: float
    gamma_shift: float
    omega: float
    p: bool
    xi_bar: float
    fidelity: float  # F(xi_bar(phi), phi)
    f_tilde: float  # F(xi_-, phi) where p holds, F(0, phi) elsewhere
    f_zero: float
    f_inf: float
    case: str  # "interior", "border" or "flat"


@dataclass(frozen=True)
class Candidate:
    phi: float
    xi: float
    fidelity: float
    source: str


@dataclass(frozen=True)
class OptimizationResult:
    xi: float
    phi: float
    fidelity: float
    kind: MeasurementKind
    fidelity_tr: float
    case: str
    profile: PhaseProfile | None = None
    borders: tuple = ()
    candidates: tuple = field(default=(), repr=False)

    @property
    def homodyne_angle(self) -> float | None:
        """Quadrature angle actually measured when the optimum is homodyne."""
        if self.kind is MeasurementKind.HOMODYNE:
            return self.phi
        if self.kind is MeasurementKind.HOMODYNE_CONJUGATE:
            return canonical_phase(self.phi + HALF_PI)
        return None


def build_context(state: ThreeModeState, input_state: InputState) -> OptimizerContext:
    gamma = gamma_tr(partial_trace_third(state), input_state)
    Sigma = sigma_matrix(state)
    U = Sigma @ adjugate(gamma.matrix) @ Sigma.T
    U = 0.5 * (U + U.T)
    C = state.C
    u = np.array([
        np.linalg.det(C) + 0.25,
        np.linalg.det(Sigma) ** 2 - np.trace(adjugate(C) @ U),
    ])
    return OptimizerContext(gamma, Sigma, U, u, C, U @ adjugate(C))


def k_vector(ctx: OptimizerContext, phi: float) -> np.ndarray:
    v = np.array([math.sin(phi), math.cos(phi)])
    return np.array([v @ ctx.U @ v, v @ ctx.C @ v])


def gamma_of(ctx: OptimizerContext, phi: float) -> float:
    return float(ctx.u @ k_vector(ctx, phi))


def _p(ctx: OptimizerContext, phi: float) -> bool:
    return gamma_of(ctx, phi) < 0 and gamma_of(ctx, phi - HALF_PI) < 0


def xi_minus(gamma: float, gamma_shift: float, omega: float) -> float:
    """Positive root ``[omega - sqrt(omega^2 + gamma' gamma)] / gamma'``.

    Evaluated in whichever algebraically equivalent form avoids cancellation,
    so ``gamma' -> 0`` gives a finite or infinite value, never a division error.
    """
    root = math.sqrt(omega * omega + gamma_shift * gamma)
    if omega >= 0:
        return -gamma / (omega + root)
    if gamma_shift == 0:
        return math.inf
    return (omega - root) / gamma_shift


def fidelity_at(ctx: OptimizerContext, k, k_shift, xi: float) -> float:
    """Fidelity in the u/k form for squeezing ``xi`` (0 and inf allowed)."""
    ux, uy = ctx.u
    kx, ky = k
    kxs, kys = k_shift
    if xi == 0:
        ratio = kx / ky
    elif math.isinf(xi):
        ratio = kxs / kys
    elif xi <= 1:
        ratio = (-uy * xi + 0.5 * xi * xi * kxs + 0.5 * kx) / (ux * xi + 0.5 * xi * xi * kys + 0.5 * ky)
    else:
        inv = 1.0 / xi
        ratio = (-uy * inv + 0.5 * kxs + 0.5 * kx * inv * inv) / (ux * inv + 0.5 * kys + 0.5 * ky * inv * inv)
    det = ctx.det_gamma - ratio
    if not det > 0:
        raise NonPhysicalError(f"conditional det(Gamma) = {det:.6g} is not positive")
    return det ** -0.5


def fidelity_vector_form(ctx: OptimizerContext, xi: float, phi: float) -> float:
    return fidelity_at(ctx, k_vector(ctx, phi), k_vector(ctx, phi - HALF_PI), xi)


def phase_profile(ctx: OptimizerContext, phi: float) -> PhaseProfile:
    k = k_vector(ctx, phi)
    ks = k_vector(ctx, phi - HALF_PI)
    if k[1] <= 0 or ks[1] <= 0:
        raise NonPhysicalError("Charlie's block is not positive definite")
    g, gs = float(ctx.u @ k), float(ctx.u @ ks)
    omega = 0.5 * float(k[0] * ks[1] - k[1] * ks[0])
    p = g < 0 and gs < 0
    f_zero = fidelity_at(ctx, k, ks, 0.0)
    f_inf = fidelity_at(ctx, k, ks, math.inf)

    scale = abs(ctx.u[0] * k[0]) + abs(ctx.u[1] * k[1])
    if abs(g) <= 1e-13 * scale and abs(gs) <= 1e-13 * scale:
        xi, f, case = 1.0, fidelity_at(ctx, k, ks, 1.0), "flat"
        f_tilde = f_zero
    elif p:
        xi = xi_minus(g, gs, omega)
        f = fidelity_at(ctx, k, ks, xi)
        f_tilde, case = f, "interior"
    else:
        xi, f = (0.0, f_zero) if f_zero >= f_inf else (math.inf, f_inf)
        f_tilde, case = f_zero, "border"
    return PhaseProfile(phi, k, ks, g, gs, omega, p, xi, f, f_tilde, f_zero, f_inf, case)


def homodyne_stationary_phases(ctx: OptimizerContext, tol: float = 1e-12) -> list[float]:
    """Stationary phases of the xi = 0 fidelity, as ``[phi_-..., phi_+...]``.

    ``cos 2phi = [t12^2 - t21^2 +/- (t11 - t22) sqrt((t11 - t22)^2 + 4 t12 t21)]
    / [(t11 - t22)^2 + (t12 + t21)^2]`` with ``tau = U Omega C Omega^T``. Each
    cosine has two phases in [0, pi); only the one that also zeroes the
    derivative is kept.
    """
    t = ctx.tau
    a = t[0, 0] - t[1, 1]
    b = t[0, 1] + t[1, 0]
    e = t[1, 0] - t[0, 1]
    scale = float(np.abs(t).max())
    denom = a * a + b * b
    if denom <= (tol * scale) ** 2 or scale == 0:
        raise PhaseIndependentError("tau is proportional to the identity; every phase is stationary")
    disc = a * a + 4.0 * t[0, 1] * t[1, 0]
    if disc < 0:
        if disc < -tol * scale * scale:
            return []
        disc = 0.0
    root = math.sqrt(disc)
    out: list[float] = []
    for sign in (-1.0, 1.0):
        x = (t[0, 1] ** 2 - t[1, 0] ** 2 + sign * a * root) / denom
        if abs(x) > 1 + 1e-9:
            continue
        x = max(-1.0, min(1.0, x))
        two_phi = math.acos(x)
        for angle in (two_phi, -two_phi):
            # derivative of v^T U v / v^T C v vanishes iff a sin2phi + b cos2phi + e = 0
            resid = a * math.sin(angle) + b * math.cos(angle) + e
            if abs(resid) > 1e-7 * scale:
                continue
            phi = canonical_phase(0.5 * angle)
            if all(abs(phi - q) > 1e-12 for q in out):
                out.append(phi)
    return out


def golden_section_max(f, a: float, b: float, tol: float = PHASE_TOL) -> tuple[float, float]:
    """Maximise a unimodal ``f`` on [a, b]; returns (x, f(x))."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def _bisect_border(ctx: OptimizerContext, lo: float, hi: float, p_lo: bool, tol: float = PHASE_TOL):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _p(ctx, mid) == p_lo:
            lo = mid
        else:
            hi = mid
    return lo, hi


def _classify(profile: PhaseProfile) -> tuple[float, MeasurementKind]:
    xi = profile.xi_bar
    if xi == 0:
        return xi, MeasurementKind.HOMODYNE_CONJUGATE
    if math.isinf(xi):
        return xi, MeasurementKind.HOMODYNE
    if abs(xi - 1.0) < HETERODYNE_TOL:
        return 1.0, MeasurementKind.HETERODYNE
    return xi, MeasurementKind.SQUEEZED_HETERODYNE


def optimize(state: ThreeModeState, input_state: InputState, phase_grid: int = 1024) -> OptimizationResult:
    """Globally optimal (xi, phi) for Charlie's measurement."""
    ctx = build_context(state, input_state)
    f_tr = ctx.det_gamma ** -0.5
    if ctx.is_degenerate:
        return OptimizationResult(1.0, 0.0, f_tr, MeasurementKind.ANY, f_tr, "degenerate")

    n = int(phase_grid)
    if n < 8:
        raise ValueError("phase_grid must be at least 8")
    step = math.pi / n
    grid = [phase_profile(ctx, j * step) for j in range(n)]
    candidates: list[Candidate] = [Candidate(pr.phi, pr.xi_bar, pr.fidelity, "grid") for pr in grid]

    def add(phi: float, source: str) -> PhaseProfile:
        pr = phase_profile(ctx, canonical_phase(phi))
        candidates.append(Candidate(pr.phi, pr.xi_bar, pr.fidelity, source))
        return pr

    # borders of the region where the finite root is optimal, both one-sided limits
    borders = []
    for j in range(n):
        p_here, p_next = grid[j].p, grid[(j + 1) % n].p
        if p_here != p_next:
            lo, hi = _bisect_border(ctx, j * step, (j + 1) * step, p_here)
            borders.append(canonical_phase(0.5 * (lo + hi)))
            add(lo, "border")
            add(hi, "border")

    try:
        for phi in homodyne_stationary_phases(ctx):
            add(phi, "stationary-homodyne")
    except PhaseIndependentError:
        pass

    # refine strict local maxima of the scan; flat stretches carry no information
    fbar = [pr.fidelity for pr in grid]
    noise = 1e-13 * max(fbar)
    for j in range(n):
        left, right = fbar[j - 1], fbar[(j + 1) % n]
        if fbar[j] >= left and fbar[j] >= right and fbar[j] - min(left, right) > noise:
            phi, _ = golden_section_max(lambda x: phase_profile(ctx, x).fidelity, (j - 1) * step, (j + 1) * step)
            pr = phase_profile(ctx, canonical_phase(phi))
            add(phi, "stationary-interior" if pr.p else "stationary-homodyne")

    best = candidates[0]
    for cand in candidates[1:]:
        if cand.fidelity > best.fidelity + TIE_TOL:
            best = cand
        elif abs(cand.fidelity - best.fidelity) <= TIE_TOL and cand.phi < best.phi:
            best = cand

    profile = phase_profile(ctx, best.phi)
    xi, kind = _classify(profile)
    # i: homodyne stationary phase, ii: interior stationary phase, iii: region border
    case = "iii" if best.source == "border" else {"interior": "ii", "border": "i", "flat": "i"}[profile.case]
    return OptimizationResult(
        xi=xi,
        phi=best.phi,
        fidelity=best.fidelity,
        kind=kind,
        fidelity_tr=f_tr,
        case=case,
        profile=profile,
        borders=tuple(sorted(borders)),
        candidates=tuple(candidates),
    )


def symmetric_gamma(q: float) -> float:
    """Phase-independent gamma of the symmetric channel with coherent input."""
    s, t, w = symmetric_channel_coefficients(q)
    h = 1.0 + q + s - 2.0 * w
    x = (w - t) ** 2
    return x * (s * x - s * s * h + 0.25 * h)


def assisted_fidelity_symmetric(q: float) -> float:
    """Closed-form optimal assisted fidelity for the symmetric channel (coherent input)."""
    s, t, w = symmetric_channel_coefficients(q)
    h = 1.0 + q + s - 2.0 * w
    x = (w - t) ** 2
    return (h * h - x * (s + 0.5) ** -2 * ((2.0 * s + 1.0) * h - x)) ** -0.5


def phase_scan(ctx: OptimizerContext, n: int) -> list[PhaseProfile]:
    return [phase_profile(ctx, j * math.pi / n) for j in range(n)]
