"""Correlation-matrix types and single-shot Gaussian checks.

Conventions: quadratures are ordered (x, p) per mode and the vacuum has
correlation matrix I/2. Three-mode matrices are stored as 2x2 blocks::

    V = [[A,   F,   E],
         [F^T, B,   D],
         [E^T, D^T, C]]

with Alice on mode a, Bob on mode b and Charlie on mode c.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Absolute tolerance for Hermitian eigenvalue tests (vacuum = I/2 units).
EIG_TOL = 1e-9
SYM_TOL = 1e-12

OMEGA = np.array([[0.0, -1.0], [1.0, 0.0]])
R = np.diag([1.0, -1.0])

BLOCK_NAMES = ("A", "B", "C", "D", "E", "F")


class StructureError(ValueError):
    """Raised for malformed matrices (wrong shape, non-symmetric blocks)."""


class DomainError(ValueError):
    """Raised when a parameter lies outside the domain of a builder."""


class NonPhysicalError(ValueError):
    """Raised when an input fails a physicality precondition."""


class HomodyneLimitError(ValueError):
    """Raised when a finite-squeezing formula is asked for xi in {0, inf}."""


def _as_block(m, name: str, symmetric: bool = False) -> np.ndarray:
    arr = np.array(m, dtype=float)
    if arr.shape != (2, 2):
        raise StructureError(f"block {name} must be 2x2, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise StructureError(f"block {name} has non-finite entries")
    if symmetric and abs(arr[0, 1] - arr[1, 0]) > SYM_TOL * max(1.0, np.abs(arr).max()):
        raise StructureError(f"block {name} must be symmetric")
    if symmetric:
        arr[0, 1] = arr[1, 0] = 0.5 * (arr[0, 1] + arr[1, 0])
    arr.setflags(write=False)
    return arr


def _as_vector(v, n: int, name: str) -> np.ndarray:
    if v is None:
        arr = np.zeros(n)
    else:
        arr = np.array(v, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise StructureError(f"{name} must have {n} components, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ThreeModeState:
    """Gaussian state shared by Alice (a), Bob (b) and Charlie (c)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    displacement: np.ndarray = field(default=None)

    def __post_init__(self):
        for name in BLOCK_NAMES:
            block = _as_block(getattr(self, name), name, symmetric=name in "ABC")
            object.__setattr__(self, name, block)
        object.__setattr__(self, "displacement", _as_vector(self.displacement, 6, "displacement"))

    @classmethod
    def from_cm(cls, V, displacement=None) -> "ThreeModeState":
        V = np.asarray(V, dtype=float)
        if V.shape != (6, 6):
            raise StructureError(f"three-mode CM must be 6x6, got {V.shape}")
        if not np.allclose(V, V.T, atol=SYM_TOL, rtol=0):
            raise StructureError("correlation matrix is not symmetric")
        return cls(
            A=V[0:2, 0:2], B=V[2:4, 2:4], C=V[4:6, 4:6],
            D=V[2:4, 4:6], E=V[0:2, 4:6], F=V[0:2, 2:4],
            displacement=displacement,
        )

    @property
    def cm(self) -> np.ndarray:
        return np.block([
            [self.A, self.F, self.E],
            [self.F.T, self.B, self.D],
            [self.E.T, self.D.T, self.C],
        ])

    @property
    def charlie_displacement(self) -> np.ndarray:
        return self.displacement[4:6]

    def with_displacement(self, displacement) -> "ThreeModeState":
        return ThreeModeState(self.A, self.B, self.C, self.D, self.E, self.F, displacement)

    def swap_ab(self) -> "ThreeModeState":
        """Relabel Alice and Bob."""
        d = self.displacement
        return ThreeModeState(
            A=self.B, B=self.A, C=self.C, D=self.E, E=self.D, F=self.F.T,
            displacement=np.concatenate([d[2:4], d[0:2], d[4:6]]),
        )

    def to_dict(self) -> dict:
        return {
            "blocks": {name: getattr(self, name).tolist() for name in BLOCK_NAMES},
            "displacement": self.displacement.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ThreeModeState":
        if not isinstance(data, dict) or "blocks" not in data:
            raise StructureError('state object must contain a "blocks" mapping')
        blocks = data["blocks"]
        missing = [name for name in BLOCK_NAMES if name not in blocks]
        if missing:
            raise StructureError(f"missing blocks: {', '.join(missing)}")
        return cls(**{name: blocks[name] for name in BLOCK_NAMES},
                   displacement=data.get("displacement"))


@dataclass(frozen=True)
class TwoModeState:
    """Alice-Bob state: blocks A, B, F and a 4-vector displacement."""

    A: np.ndarray
    B: np.ndarray
    F: np.ndarray
    displacement: np.ndarray = field(default=None)

    def __post_init__(self):
        for name in "ABF":
            object.__setattr__(self, name, _as_block(getattr(self, name), name, symmetric=name in "AB"))
        object.__setattr__(self, "displacement", _as_vector(self.displacement, 4, "displacement"))

    @classmethod
    def from_cm(cls, V, displacement=None) -> "TwoModeState":
        V = np.asarray(V, dtype=float)
        if V.shape != (4, 4):
            raise StructureError(f"two-mode CM must be 4x4, got {V.shape}")
        if not np.allclose(V, V.T, atol=SYM_TOL * max(1.0, np.abs(V).max()), rtol=0):
            raise StructureError("correlation matrix is not symmetric")
        return cls(A=V[0:2, 0:2], B=V[2:4, 2:4], F=V[0:2, 2:4], displacement=displacement)

    @property
    def cm(self) -> np.ndarray:
        return np.block([[self.A, self.F], [self.F.T, self.B]])


@dataclass(frozen=True)
class InputState:
    """Pure single-mode Gaussian state to teleport.

    The amplitude is carried along for completeness; fidelities do not
    depend on it.
    """

    V_in: np.ndarray
    amplitude: complex = 0j

    def __post_init__(self):
        V = _as_block(self.V_in, "V_in", symmetric=True)
        # det loses ~eps * |V|^2 to cancellation for strong squeezing
        tol = EIG_TOL * max(1.0, float(np.abs(V).max()) ** 2)
        if abs(np.linalg.det(V) - 0.25) > tol or np.linalg.eigvalsh(V)[0] <= 0:
            raise NonPhysicalError(f"input CM must be pure (det = 1/4), got det = {np.linalg.det(V):.12g}")
        object.__setattr__(self, "V_in", V)
        object.__setattr__(self, "amplitude", complex(self.amplitude))

    @classmethod
    def coherent(cls, amplitude: complex = 0j) -> "InputState":
        return cls(0.5 * np.eye(2), amplitude)

    @classmethod
    def squeezed(cls, xi: float, phi: float, amplitude: complex = 0j) -> "InputState":
        return cls(squeezed_cm(MeasurementSpec(xi, phi)), amplitude)


@dataclass(frozen=True)
class MeasurementSpec:
    """Pure squeezed-state measurement on Charlie's mode.

    ``xi = exp(2r)`` is the squeezing factor; ``0`` and ``inf`` stand for the
    two homodyne limits. ``phi`` is folded into [0, pi).
    """

    xi: float
    phi: float = 0.0
    alpha: complex = 0j

    def __post_init__(self):
        xi = float(self.xi)
        if math.isnan(xi) or xi < 0:
            raise DomainError(f"squeezing factor must be >= 0, got {self.xi}")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "phi", canonical_phase(self.phi))
        object.__setattr__(self, "alpha", complex(self.alpha))

    @property
    def is_homodyne(self) -> bool:
        return self.xi == 0.0 or math.isinf(self.xi)


def canonical_phase(phi: float) -> float:
    phi = math.fmod(float(phi), math.pi)
    if phi < 0:
        phi += math.pi
    if phi >= math.pi:
        phi = 0.0
    return phi


def symplectic_form(n_modes: int) -> np.ndarray:
    if n_modes not in (1, 2, 3):
        raise DomainError(f"n_modes must be 1, 2 or 3, got {n_modes}")
    return np.kron(np.eye(n_modes), OMEGA)


def partial_transpose_form() -> np.ndarray:
    """diag(Omega, -Omega): the two-mode form used by the PPT test."""
    return np.block([[OMEGA, np.zeros((2, 2))], [np.zeros((2, 2)), -OMEGA]])


def _min_eig(V: np.ndarray, J: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(V - 0.5j * J)[0])


def is_genuine(state: ThreeModeState, tol: float = EIG_TOL) -> tuple[bool, float]:
    """Bona-fide test ``V - (i/2) J >= 0``; returns (verdict, min eigenvalue)."""
    V = state.cm
    if not np.allclose(V, V.T, atol=SYM_TOL, rtol=0):
        raise StructureError("correlation matrix is not symmetric")
    lam = _min_eig(V, symplectic_form(3))
    return lam >= -tol, lam


def is_physical_two_mode(state: TwoModeState, tol: float = EIG_TOL) -> tuple[bool, float]:
    lam = _min_eig(state.cm, symplectic_form(2))
    return lam >= -tol, lam


def is_separable_two_mode(state: TwoModeState, tol: float = EIG_TOL) -> tuple[bool, float]:
    """PPT test ``V - (i/2) diag(Omega, -Omega) >= 0``.

    Necessary and sufficient for two-mode Gaussian states.
    """
    physical, lam = is_physical_two_mode(state, tol)
    if not physical:
        raise NonPhysicalError(f"two-mode state is not physical (min eigenvalue {lam:.3e})")
    lam = _min_eig(state.cm, partial_transpose_form())
    return lam >= -tol, lam


def partial_trace_third(state: ThreeModeState) -> TwoModeState:
    return TwoModeState(state.A, state.B, state.F, state.displacement[:4])


def squeezed_cm(spec: MeasurementSpec) -> np.ndarray:
    """CM of the squeezed vacuum with factor ``xi`` and phase ``phi`` (det = 1/4)."""
    xi = spec.xi
    if spec.is_homodyne:
        raise HomodyneLimitError(f"xi = {xi} is a homodyne limit; no finite CM exists")
    s, c = math.sin(spec.phi), math.cos(spec.phi)
    off = 0.5 * (xi - 1.0 / xi) * c * s
    return np.array([
        [0.5 * (xi * s * s + c * c / xi), off],
        [off, 0.5 * (xi * c * c + s * s / xi)],
    ])


def thermal_cm(n_thermal: float) -> np.ndarray:
    if n_thermal < 0:
        raise DomainError("thermal photon number must be >= 0")
    return (n_thermal + 0.5) * np.eye(2)


def symmetric_channel_coefficients(q: float) -> tuple[float, float, float]:
    """(s, t, w) of the one-parameter symmetric channel; needs q >= 1/2."""
    if q < 0.5:
        raise DomainError(f"symmetric channel needs q >= 1/2, got {q}")
    s = (q + 1.0) / 2.0
    t = q / 2.0
    w = math.sqrt((2.0 * q - 1.0) * (q + 1.0)) / 2.0
    return s, t, w


def build_symmetric_channel(q: float) -> ThreeModeState:
    s, t, w = symmetric_channel_coefficients(q)
    I = np.eye(2)
    return ThreeModeState(A=q * I, B=s * I, C=s * I, D=t * I, E=w * R, F=w * R)


def build_example_channel(a, b, c, d, e, f) -> ThreeModeState:
    """Channel with blocks aI, bI, cI on the diagonal, fI, eR, dR off it."""
    I = np.eye(2)
    return ThreeModeState(A=a * I, B=b * I, C=c * I, D=d * R, E=e * R, F=f * I)


EXAMPLE1_PARAMS = (10.15, 5.52, 15.2, 8.87, 12.3, 6.96)
EXAMPLE2_PARAMS = (0.55, 0.89, 0.94, 0.74, 0.249, 0.12)


def builtin_channel(name: str) -> ThreeModeState:
    """Resolve ``example1``, ``example2`` or ``symmetric:q=<value>``."""
    if name == "example1":
        return build_example_channel(*EXAMPLE1_PARAMS)
    if name == "example2":
        return build_example_channel(*EXAMPLE2_PARAMS)
    if name.startswith("symmetric:"):
        arg = name.split(":", 1)[1]
        if arg.startswith("q="):
            arg = arg[2:]
        try:
            q = float(arg)
        except ValueError:
            raise DomainError(f"bad symmetric channel parameter {arg!r}") from None
        return build_symmetric_channel(q)
    raise KeyError(name)


def load_state(path) -> ThreeModeState:
    """Read a state file; ``json.JSONDecodeError`` propagates with line/column."""
    text = Path(path).read_text()
    return ThreeModeState.from_dict(json.loads(text))


def dump_state(state: ThreeModeState, path) -> None:
    Path(path).write_text(json.dumps(state.to_dict(), indent=2, sort_keys=True) + "\n")
