"""Teleportation fidelities with and without Charlie's assistance.

For a pure Gaussian input the fidelity of the standard protocol is
``(det Gamma)^(-1/2)`` with ``Gamma = 2 V_in + R A R + B - R F - F^T R``.
When Charlie projects onto a squeezed state, ``Gamma`` shrinks by
``Sigma^T M Sigma`` where ``Sigma = E^T R - D^T`` and ``M`` is the
measurement matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    OMEGA,
    R,
    HomodyneLimitError,
    InputState,
    MeasurementSpec,
    NonPhysicalError,
    ThreeModeState,
    TwoModeState,
    partial_trace_third,
    squeezed_cm,
)


@dataclass(frozen=True)
class GammaMatrix:
    matrix: np.ndarray
    kind: str  # "trace" or "conditional"

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))


@dataclass(frozen=True)
class MeasurementMatrix:
    M: np.ndarray
    g: float


@dataclass(frozen=True)
class FidelityReport:
    fidelity: float
    gamma: GammaMatrix
    measurement: MeasurementSpec | None = None


def adjugate(X: np.ndarray) -> np.ndarray:
    """``Omega X Omega^T``, the 2x2 adjugate (transposed for non-symmetric X)."""
    return OMEGA @ X @ OMEGA.T


def _check_gamma(G: np.ndarray, kind: str) -> GammaMatrix:
    G = 0.5 * (G + G.T)
    if G[0, 0] <= 0 or np.linalg.det(G) <= 0:
        raise NonPhysicalError(f"Gamma ({kind}) is not positive definite: {G.tolist()}")
    return GammaMatrix(G, kind)


def gamma_tr(reduced: TwoModeState, input_state: InputState) -> GammaMatrix:
    A, B, F = reduced.A, reduced.B, reduced.F
    G = 2.0 * input_state.V_in + R @ A @ R + B - R @ F - F.T @ R
    return _check_gamma(G, "trace")


def fidelity_from_gamma(gamma: GammaMatrix) -> float:
    return gamma.det ** -0.5


def fidelity_tr(reduced: TwoModeState, input_state: InputState) -> FidelityReport:
    gamma = gamma_tr(reduced, input_state)
    return FidelityReport(fidelity_from_gamma(gamma), gamma, None)


def sigma_matrix(state: ThreeModeState) -> np.ndarray:
    return state.E.T @ R - state.D.T


def measurement_matrix(V0, C) -> MeasurementMatrix:
    """Measurement matrix for a (possibly mixed) Gaussian operator with CM ``V0``.

    For pure ``V0`` (det = 1/4) this reduces to ``(V0 + C)^-1``.
    """
    V0 = np.asarray(V0, dtype=float)
    C = np.asarray(C, dtype=float)
    det_v0 = float(np.linalg.det(V0))
    a = det_v0 + 0.25
    g = 4.0 * det_v0 * np.linalg.det(C) + 2.0 * a * np.trace(V0 @ adjugate(C)) + a * a
    if not g > 0:
        raise NonPhysicalError(f"measurement normalisation g = {g:.6g} is not positive")
    M = adjugate(2.0 * a * V0 + 4.0 * det_v0 * C) / g
    return MeasurementMatrix(0.5 * (M + M.T), float(g))


def _homodyne_measurement_matrix(C: np.ndarray, spec: MeasurementSpec) -> np.ndarray:
    # xi -> 0 keeps only the quadrature along (sin phi, cos phi); xi -> inf the orthogonal one.
    phi = spec.phi if spec.xi == 0.0 else spec.phi - math.pi / 2
    v = np.array([math.sin(phi), math.cos(phi)])
    k_y = float(v @ C @ v)
    if k_y <= 0:
        raise NonPhysicalError("Charlie's block is not positive definite")
    return np.outer(v, v) / k_y


def conditional_measurement_matrix(state: ThreeModeState, spec: MeasurementSpec) -> np.ndarray:
    if spec.is_homodyne:
        return _homodyne_measurement_matrix(state.C, spec)
    return measurement_matrix(squeezed_cm(spec), state.C).M


def conditional_cm(state: ThreeModeState, spec: MeasurementSpec) -> TwoModeState:
    """Alice-Bob CM after Charlie projects onto the squeezed state ``spec``."""
    if spec.is_homodyne:
        raise HomodyneLimitError("conditional CM is only formed for finite xi")
    M = measurement_matrix(squeezed_cm(spec), state.C).M
    K = np.vstack([state.E, state.D])
    V0 = partial_trace_third(state).cm - K @ M @ K.T
    return TwoModeState.from_cm(0.5 * (V0 + V0.T), conditional_displacement(state, spec, state.charlie_displacement))


def conditional_displacement(state: ThreeModeState, spec: MeasurementSpec, d0) -> np.ndarray:
    if spec.is_homodyne:
        raise HomodyneLimitError("conditional displacement is only formed for finite xi")
    M = measurement_matrix(squeezed_cm(spec), state.C).M
    delta = M @ (np.asarray(d0, dtype=float) - state.charlie_displacement)
    return state.displacement[:4] + np.concatenate([state.E @ delta, state.D @ delta])


def outcome_probability(state: ThreeModeState, spec: MeasurementSpec, d0) -> float:
    """Probability of the Gaussian outcome for a finite-squeezing projector."""
    if spec.is_homodyne:
        raise HomodyneLimitError("outcome probability is undefined in the homodyne limit")
    mm = measurement_matrix(squeezed_cm(spec), state.C)
    delta = np.asarray(d0, dtype=float) - state.charlie_displacement
    return math.exp(-0.25 * float(delta @ mm.M @ delta)) / math.sqrt(mm.g)


def conditional_gamma(state: ThreeModeState, input_state: InputState, spec: MeasurementSpec) -> GammaMatrix:
    G = gamma_tr(partial_trace_third(state), input_state).matrix
    Sigma = sigma_matrix(state)
    M = conditional_measurement_matrix(state, spec)
    return _check_gamma(G - Sigma.T @ M @ Sigma, "conditional")


def conditional_fidelity(state: ThreeModeState, input_state: InputState, spec: MeasurementSpec) -> FidelityReport:
    """Fidelity after Charlie's measurement ``spec``; displacement independent.

    Homodyne limits use ``[det Gamma_tr - k_x / k_y]^(-1/2)`` directly, with
    ``k_x = v^T U v`` and ``k_y = v^T C v`` along the measured quadrature.
    """
    gamma = conditional_gamma(state, input_state, spec)
    if not spec.is_homodyne:
        return FidelityReport(fidelity_from_gamma(gamma), gamma, spec)

    G = gamma_tr(partial_trace_third(state), input_state).matrix
    Sigma = sigma_matrix(state)
    U = Sigma @ adjugate(G) @ Sigma.T
    phi = spec.phi if spec.xi == 0.0 else spec.phi - math.pi / 2
    v = np.array([math.sin(phi), math.cos(phi)])
    k_x, k_y = float(v @ U @ v), float(v @ state.C @ v)
    det0 = np.linalg.det(G) - k_x / k_y
    if det0 <= 0:
        raise NonPhysicalError("conditional Gamma is not positive definite")
    return FidelityReport(det0 ** -0.5, gamma, spec)
