"""Two-level state algebra: Bloch vectors, density matrices, purity and overlap.

A state is carried either as a Bloch triple (r_x, r_y, r_z) or as the 2x2
density matrix

    rho = I0 + r_x*IX + r_y*IY + r_z*IZ,

where I0 is half the identity and IX, IY, IZ are the Pauli halves. The Bloch
triple is the canonical representation; density matrices are derived views.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Basis operators: half identity and the three Pauli halves.
I0 = np.array([[0.5, 0.0], [0.0, 0.5]], dtype=complex)
IX = np.array([[0.0, 0.5], [0.5, 0.0]], dtype=complex)
IY = np.array([[0.0, -0.5j], [0.5j, 0.0]], dtype=complex)
IZ = np.array([[0.5, 0.0], [0.0, -0.5]], dtype=complex)

for _op in (I0, IX, IY, IZ):
    _op.setflags(write=False)

# Slack on |r|^2 <= 1 membership; integrators may overshoot by float noise.
BALL_TOL = 1e-9


@dataclass(frozen=True)
class BlochVector:
    """Dimensionless Bloch components of a two-level state."""

    x: float
    y: float
    z: float

    @classmethod
    def from_array(cls, arr) -> BlochVector:
        x, y, z = np.asarray(arr, dtype=float)
        return cls(float(x), float(y), float(z))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def is_physical(self, tol: float = BALL_TOL) -> bool:
        """True if the vector lies in the Bloch ball, up to ``tol`` slack."""
        return self.x * self.x + self.y * self.y + self.z * self.z <= 1.0 + tol

    def __iter__(self):
        yield self.x
        yield self.y
        yield self.z


def _as_components(r) -> tuple[float, float, float]:
    if isinstance(r, BlochVector):
        return r.x, r.y, r.z
    x, y, z = np.asarray(r, dtype=float)
    return float(x), float(y), float(z)


def bloch_to_density(r) -> np.ndarray:
    """Assemble the density matrix I0 + r_x*IX + r_y*IY + r_z*IZ.

    Accepts a BlochVector or any length-3 real sequence. Unit trace holds by
    construction; physicality (|r| <= 1) is not checked here.
    """
    x, y, z = _as_components(r)
    return np.array(
        [
            [0.5 * (1.0 + z), 0.5 * (x - 1j * y)],
            [0.5 * (x + 1j * y), 0.5 * (1.0 - z)],
        ]
    )


def density_to_bloch(rho, *, trace_tol: float = 1e-9) -> BlochVector:
    """Extract r_k = 2 Tr[I_k rho] from a unit-trace density matrix.

    Raises ValueError if the trace deviates from one by more than
    ``trace_tol`` (a corrupt-state signal, not float noise).
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {rho.shape}")
    trace = rho[0, 0] + rho[1, 1]
    if abs(trace - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace {trace} is not 1 within {trace_tol}")
    return BlochVector(
        float(2.0 * rho[1, 0].real),
        float(2.0 * rho[1, 0].imag),
        float((rho[0, 0] - rho[1, 1]).real),
    )


def check_density_matrix(
    rho,
    *,
    herm_tol: float = 1e-12,
    trace_tol: float = 1e-12,
    psd_tol: float = 1e-9,
) -> np.ndarray:
    """Validate Hermiticity, unit trace and positive semidefiniteness.

    Returns the input as a complex ndarray for chaining. The eigenvalue
    tolerance is looser than the algebraic ones because numerically
    integrated states can dip marginally below zero.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise ValueError(f"matrix is not Hermitian (defect {herm:.3e})")
    trace = (rho[0, 0] + rho[1, 1]).real
    if abs(trace - 1.0) > trace_tol:
        raise ValueError(f"trace {trace!r} differs from 1 beyond {trace_tol}")
    eigs = np.linalg.eigvalsh(rho)
    if eigs[0] < -psd_tol:
        raise ValueError(f"matrix has a negative eigenvalue {eigs[0]:.3e}")
    return rho


def purity(r) -> float:
    """Purity (1 + |r|^2) / 2 of the state with Bloch vector ``r``.

    Accepts |r| marginally above one (within BALL_TOL) and clamps it to one;
    anything further outside the ball is rejected.
    """
    x, y, z = _as_components(r)
    n2 = x * x + y * y + z * z
    if n2 > 1.0 + BALL_TOL:
        raise ValueError(f"|r|^2 = {n2!r} lies outside the Bloch ball")
    return 0.5 * (1.0 + min(n2, 1.0))


def fidelity(rho_a, rho_b) -> float:
    """Normalized overlap Tr[a b] / sqrt(Tr[a^2] Tr[b^2]) of two states.

    Symmetric in its arguments and equal to one iff the matrices are
    proportional. Lies in [0, 1] for positive semidefinite inputs and in
    [-1, 1] for general Hermitian ones (positivity is not enforced, so
    mildly unphysical measured states can still be scored).
    """
    a = np.asarray(rho_a, dtype=complex)
    b = np.asarray(rho_b, dtype=complex)
    norm_a = np.trace(a @ a).real
    norm_b = np.trace(b @ b).real
    if norm_a < 1e-15 or norm_b < 1e-15:
        raise ValueError("fidelity undefined for (near-)zero matrices")
    return float(np.trace(a @ b).real / math.sqrt(norm_a * norm_b))
