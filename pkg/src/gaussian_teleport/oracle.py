"""Brute-force cross-checks for the closed-form pipeline.

Nothing here calls the optimizer; the grid search evaluates the fidelity
through the measurement matrix directly, and the quadrature integrates the
conditional characteristic function of Alice and Bob numerically.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass

import numpy as np

from .core import (
    OMEGA,
    InputState,
    MeasurementSpec,
    ThreeModeState,
    TwoModeState,
    partial_trace_third,
    squeezed_cm,
    symplectic_form,
    thermal_cm,
)
from .fidelity import conditional_fidelity, fidelity_tr, gamma_tr, measurement_matrix, sigma_matrix

log = logging.getLogger(__name__)

DEFAULT_SEED = 0xC0FFEE
PSD_TOL = 1e-10


def suite_seed() -> int:
    raw = os.environ.get("GTO_SEED")
    if raw is None or raw == "":
        return DEFAULT_SEED
    return int(raw, 0)


# -- random inputs ------------------------------------------------------------


def random_genuine_channel(rng: np.random.Generator, scale: float = 2.0, with_displacement: bool = False) -> ThreeModeState:
    """Random symmetric 6x6 matrix shifted just past the bona-fide boundary.

    The shift is the smallest one making ``V - (i/2) J`` PSD plus a margin
    drawn log-uniformly in [1e-3, 1], so near-boundary channels are common.
    """
    X = rng.uniform(-scale, scale, size=(6, 6))
    V = 0.5 * (X + X.T)
    lam = np.linalg.eigvalsh(V - 0.5j * symplectic_form(3))[0]
    margin = 10.0 ** rng.uniform(-3, 0)
    V = V + (margin - lam) * np.eye(6)
    d = rng.normal(size=6) if with_displacement else None
    return ThreeModeState.from_cm(0.5 * (V + V.T), d)


def random_measurement(rng: np.random.Generator, log_xi_range: float = 3.0) -> MeasurementSpec:
    return MeasurementSpec(10.0 ** rng.uniform(-log_xi_range, log_xi_range), rng.uniform(0, math.pi))


def random_input(rng: np.random.Generator) -> InputState:
    if rng.uniform() < 0.5:
        return InputState.coherent()
    return InputState.squeezed(10.0 ** rng.uniform(-1, 1), rng.uniform(0, math.pi))


def random_physical_block(rng: np.random.Generator, scale: float = 3.0) -> np.ndarray:
    """Random single-mode CM (``C - (i/2) Omega >= 0``)."""
    X = rng.uniform(-scale, scale, size=(2, 2))
    C = 0.5 * (X + X.T)
    lam = np.linalg.eigvalsh(C - 0.5j * OMEGA)[0]
    return C + (10.0 ** rng.uniform(-3, 0) - lam) * np.eye(2)


# -- grid search -----------------------------------------------------------------


@dataclass(frozen=True)
class GridResult:
    xi: float
    phi: float
    fidelity: float
    n_xi: int
    n_phi: int
    xis: np.ndarray | None = None
    phis: np.ndarray | None = None
    surface: np.ndarray | None = None


def fidelity_surface(state: ThreeModeState, input_state: InputState, xis, phis) -> np.ndarray:
    """Fidelity on the product grid ``xis x phis`` (finite xi only), shape (n_xi, n_phi)."""
    xi = np.asarray(xis, dtype=float)[:, None]
    phi = np.asarray(phis, dtype=float)[None, :]
    s, c = np.sin(phi), np.cos(phi)
    v00 = 0.5 * (xi * s * s + c * c / xi)
    v11 = 0.5 * (xi * c * c + s * s / xi)
    v01 = 0.5 * (xi - 1.0 / xi) * c * s
    C = state.C
    det_v0 = v00 * v11 - v01 * v01
    a = det_v0 + 0.25
    # X = 2 a V0 + 4 det(V0) C, M = Omega X Omega^T / g
    x00 = 2 * a * v00 + 4 * det_v0 * C[0, 0]
    x11 = 2 * a * v11 + 4 * det_v0 * C[1, 1]
    x01 = 2 * a * v01 + 4 * det_v0 * C[0, 1]
    tr = v00 * C[1, 1] + v11 * C[0, 0] - 2 * v01 * C[0, 1]
    g = 4 * det_v0 * np.linalg.det(C) + 2 * a * tr + a * a
    M = np.empty(xi.shape[:1] + phi.shape[1:] + (2, 2))
    M[..., 0, 0] = x11 / g
    M[..., 1, 1] = x00 / g
    M[..., 0, 1] = M[..., 1, 0] = -x01 / g
    G = gamma_tr(partial_trace_third(state), input_state).matrix
    S = sigma_matrix(state)
    G0 = G - np.einsum("ji,...jk,kl->...il", S, M, S)
    det = G0[..., 0, 0] * G0[..., 1, 1] - G0[..., 0, 1] * G0[..., 1, 0]
    return det ** -0.5


def grid_search(state: ThreeModeState, input_state: InputState, n_xi: int = 400, n_phi: int = 400,
                keep_surface: bool = False) -> GridResult:
    """Dense scan over log-spaced xi in [1e-4, 1e4] plus both homodyne limits."""
    if n_xi < 8 or n_phi < 8:
        raise ValueError("grid needs at least 8 points per axis")
    phis = np.arange(n_phi) * math.pi / n_phi
    finite = np.logspace(-4, 4, n_xi)
    surf = fidelity_surface(state, input_state, finite, phis)
    limits = np.array([
        [conditional_fidelity(state, input_state, MeasurementSpec(x, p)).fidelity for p in phis]
        for x in (0.0, math.inf)
    ])
    xis = np.concatenate([[0.0], finite, [math.inf]])
    surface = np.vstack([limits[:1], surf, limits[1:]])
    # index-ordered argmax keeps the reduction deterministic
    i, j = np.unravel_index(int(np.argmax(surface)), surface.shape)
    return GridResult(
        float(xis[i]), float(phis[j]), float(surface[i, j]), n_xi, n_phi,
        xis if keep_surface else None, phis if keep_surface else None, surface if keep_surface else None,
    )


def write_surface_csv(result: GridResult, path) -> None:
    if result.surface is None:
        raise ValueError("grid result carries no surface; rerun with keep_surface=True")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["xi", "phi", "fidelity"])
        for i, xi in enumerate(result.xis):
            for j, phi in enumerate(result.phis):
                w.writerow([f"{xi:.12g}", f"{phi:.12g}", f"{result.surface[i, j]:.12g}"])


# -- quadrature of the conditional characteristic function ------------------------


class QuadratureError(RuntimeError):
    def __init__(self, message: str, error: float):
        super().__init__(f"{message} (achieved error estimate {error:.3e})")
        self.error = error


@dataclass(frozen=True)
class QuadratureResult:
    state: TwoModeState
    probability: float
    order: int
    error: float


def _char_fn_log(V: np.ndarray, d: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """log of exp(-eta^T V eta + i d^T eta) for a stack of eta rows."""
    return -np.einsum("ni,ij,nj->n", eta, V, eta) + 1j * (eta @ d)


def _integral(state: ThreeModeState, V0: np.ndarray, d0: np.ndarray, etas: np.ndarray, order: int,
              chunk: int = 1 << 17) -> np.ndarray:
    """Integral over (theta, kappa) of Phi0(theta) Phi0(kappa) Phi(eta_ab, -theta-kappa) e^{i theta^T Omega kappa}.

    Tensor Gauss-Hermite in coordinates where the real Gaussian part of the
    integrand is ``exp(-|y|^2)``.
    """
    C = state.C
    S = np.block([[V0 + C, C], [C, V0 + C]])
    L = np.linalg.cholesky(S)
    Linv = np.linalg.inv(L)
    jac = 1.0 / np.prod(np.diag(L))
    x, w = np.polynomial.hermite.hermgauss(order)
    idx = np.indices((order,) * 4).reshape(4, -1).T
    V = state.cm
    d = state.displacement
    etas = np.asarray(etas, dtype=float)
    # Phi(eta_ab, -sigma) exponent split into sigma-only, cross and eta-only parts
    eta_only = _char_fn_log(V[:4, :4], d[:4], etas)
    cross = 2.0 * V[4:, :4] @ etas.T  # (2, n_eta)
    out = np.zeros(len(etas), dtype=complex)
    for start in range(0, len(idx), chunk):
        sl = idx[start:start + chunk]
        y = x[sl]
        logw = np.log(w[sl]).sum(axis=1)
        zeta = y @ Linv  # rows are (theta, kappa) in the real parametrisation
        th, ka = zeta[:, :2], zeta[:, 2:]
        sigma = th + ka
        base = (_char_fn_log(V0, d0, th) + _char_fn_log(V0, d0, ka)
                + 1j * np.einsum("ni,ij,nj->n", th, OMEGA, ka)
                + _char_fn_log(V[4:, 4:], d[4:], -sigma)
                + np.einsum("ni,ni->n", y, y) + logw)
        out += np.exp(base[:, None] + sigma @ cross + eta_only[None, :]).sum(axis=0)
    return out * jac


def quadrature_conditional(state: ThreeModeState, spec: MeasurementSpec, d0=None, tol: float = 1e-8,
                           start_order: int = 12, max_order: int = 48, step: float = 0.25) -> QuadratureResult:
    """Conditional Alice-Bob CM, displacement and outcome probability by quadrature.

    The conditional characteristic function is exactly Gaussian in ``eta``, so
    its log at a few finite probe points gives the CM and displacement with no
    truncation error; only the quadrature error remains. The order doubles
    until successive CM estimates agree to ``tol``.
    """
    V0 = squeezed_cm(spec)
    d0 = state.charlie_displacement if d0 is None else np.asarray(d0, dtype=float)
    h = step
    probes = [np.zeros(4)]
    probes += [h * e for e in np.eye(4)]
    pairs = [(i, j) for i in range(4) for j in range(i + 1, 4)]
    probes += [h * (np.eye(4)[i] + np.eye(4)[j]) for i, j in pairs]
    probes = np.array(probes)

    def estimate(order):
        vals = _integral(state, V0, d0, probes, order)
        ratio = np.log(vals[1:] / vals[0])
        V = np.zeros((4, 4))
        disp = np.zeros(4)
        for i in range(4):
            V[i, i] = -ratio[i].real / h**2
            disp[i] = ratio[i].imag / h
        for n, (i, j) in enumerate(pairs):
            V[i, j] = V[j, i] = -0.5 * (ratio[4 + n].real / h**2 + V[i, i] + V[j, j])
        return V, disp, vals[0].real / math.pi**2

    order = start_order
    prev = estimate(order)
    err = math.inf
    while order < max_order:
        order *= 2
        cur = estimate(order)
        err = float(max(np.abs(cur[0] - prev[0]).max(), np.abs(cur[1] - prev[1]).max()))
        prev = cur
        if err < tol:
            V, disp, prob = cur
            return QuadratureResult(TwoModeState.from_cm(V, disp), prob, order, err)
    raise QuadratureError("Gauss-Hermite quadrature did not converge", err)


def quadrature_conditional_cm(state: ThreeModeState, spec: MeasurementSpec, **kw) -> TwoModeState:
    return quadrature_conditional(state, spec, **kw).state


# -- dominance checks --------------------------------------------------------------


def verify_outcome_dominance(state: ThreeModeState, input_state: InputState, spec: MeasurementSpec,
                                      tol: float = 1e-12) -> bool:
    """Gaussian outcome never does worse than ignoring Charlie."""
    f0 = conditional_fidelity(state, input_state, spec).fidelity
    ftr = fidelity_tr(partial_trace_third(state), input_state).fidelity
    return f0 >= ftr - tol


def thermal_dominance_margin(C, n_thermal: float) -> float:
    """Smallest eigenvalue of M(pure vacuum) - M(thermal n_T)."""
    diff = measurement_matrix(thermal_cm(0.0), C).M - measurement_matrix(thermal_cm(n_thermal), C).M
    return float(np.linalg.eigvalsh(0.5 * (diff + diff.T))[0])


def verify_thermal_dominance(C, n_thermal: float, tol: float = PSD_TOL) -> bool:
    lam = thermal_dominance_margin(C, n_thermal)
    if abs(lam) <= tol and n_thermal > 0:
        log.info("thermal dominance margin %.3e within tolerance band (n_T=%g)", lam, n_thermal)
    return lam >= -tol
