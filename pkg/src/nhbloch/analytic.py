"""Closed-form trajectories of the damped two-level model.

The undamped Bloch vector precesses about the field axis,

    dr0/dt = w x r0,        |r0| conserved,

and the damped solution is r(t) = f(t) r0(t) with the decay envelope

    f(t) = exp(-delta t) + nu (1 - exp(-mu t)),   f(0) = 1,  f -> nu.

The damping coefficients entering the nonlinear Bloch equations are
lambda_k(t) = g(t) r0_k(t) with

    g(t) = f'(t) / (f(t)^2 - 1)
         = (delta e^{-delta t} - nu mu e^{-mu t}) / (1 - f(t)^2),  t > 0,

which diverges as 1/(2t) at the origin; g is therefore only defined for
strictly positive times and callers needing t -> 0 use the (regular)
trajectory itself. Purity follows as P(t) = 1/2 + f(t)^2 / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BlochVector

# Relative scale below which the field is treated as exactly zero: the
# rotation axis is then undefined and the state simply stays put.
_DEGENERATE_FIELD = 1e-12


@dataclass(frozen=True)
class CoherentField:
    """Angular-frequency components (rad/s) of the driving field."""

    wx: float
    wy: float
    wz: float

    def __post_init__(self):
        if not all(math.isfinite(w) for w in (self.wx, self.wy, self.wz)):
            raise ValueError("field components must be finite")

    @property
    def omega(self) -> float:
        """Effective angular frequency sqrt(wx^2 + wy^2 + wz^2)."""
        return math.sqrt(self.wx**2 + self.wy**2 + self.wz**2)


@dataclass(frozen=True)
class DecayModel:
    """Decay rates delta >= mu > 0 (1/s) and residual Bloch radius nu < 1."""

    delta: float
    mu: float
    nu: float

    def __post_init__(self):
        if not (self.delta > 0.0 and self.mu > 0.0):
            raise ValueError("decay rates must be positive")
        if self.delta < self.mu:
            raise ValueError(f"delta = {self.delta} must not be below mu = {self.mu}")
        if not 0.0 <= self.nu < 1.0:
            raise ValueError(f"residual radius nu = {self.nu} must lie in [0, 1)")


def coherent_bloch(field: CoherentField, t: float) -> BlochVector:
    """Lossless Bloch vector at time t, starting from the north pole.

    Rotation of (0, 0, 1) about the field axis by angle omega*t; 1 - cos is
    evaluated as 2 sin^2(x/2) to keep small angles accurate.
    """
    om = field.omega
    if om <= _DEGENERATE_FIELD * max(1.0, abs(field.wx), abs(field.wy), abs(field.wz)):
        return BlochVector(0.0, 0.0, 1.0)
    nx, ny, nz = field.wx / om, field.wy / om, field.wz / om
    angle = om * t
    s = math.sin(angle)
    vers = 2.0 * math.sin(0.5 * angle) ** 2
    return BlochVector(
        nx * nz * vers + ny * s,
        ny * nz * vers - nx * s,
        nz * nz * vers + 1.0 - vers,
    )


def coherent_propagate(field: CoherentField, r0: BlochVector, t: float) -> BlochVector:
    """Rotate an arbitrary initial vector about the field axis by omega*t.

    Norm-preserving Rodrigues rotation; reduces to :func:`coherent_bloch`
    for r0 = (0, 0, 1) and to the identity for a vanishing field.
    """
    om = field.omega
    if om <= _DEGENERATE_FIELD * max(1.0, abs(field.wx), abs(field.wy), abs(field.wz)):
        return r0
    nx, ny, nz = field.wx / om, field.wy / om, field.wz / om
    angle = om * t
    s = math.sin(angle)
    vers = 2.0 * math.sin(0.5 * angle) ** 2
    cos = 1.0 - vers
    dot = nx * r0.x + ny * r0.y + nz * r0.z
    return BlochVector(
        r0.x * cos + (ny * r0.z - nz * r0.y) * s + nx * dot * vers,
        r0.y * cos + (nz * r0.x - nx * r0.z) * s + ny * dot * vers,
        r0.z * cos + (nx * r0.y - ny * r0.x) * s + nz * dot * vers,
    )


def decay_f(model: DecayModel, t):
    """Decay envelope exp(-delta t) + nu (1 - exp(-mu t)); scalar or array."""
    t = np.asarray(t, dtype=float)
    value = np.exp(-model.delta * t) - model.nu * np.expm1(-model.mu * t)
    return value if value.ndim else float(value)


def decay_g(model: DecayModel, t):
    """Damping modulation g(t) = f'(t) / (f(t)^2 - 1) for strictly positive t.

    The denominator is formed from 1 - f = -expm1(-delta t) + nu expm1(-mu t)
    so that no cancellation occurs for small arguments, where g ~ 1/(2t).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise ValueError("g(t) is defined for t > 0 only (1/(2t) divergence at 0)")
    e_delta = np.exp(-model.delta * t)
    e_mu = np.exp(-model.mu * t)
    one_minus_f = -np.expm1(-model.delta * t) + model.nu * np.expm1(-model.mu * t)
    f = e_delta - model.nu * np.expm1(-model.mu * t)
    value = (model.delta * e_delta - model.nu * model.mu * e_mu) / (one_minus_f * (1.0 + f))
    return value if value.ndim else float(value)


def g_root(model: DecayModel) -> float:
    """Time at which g changes sign: delta e^{-delta t} = nu mu e^{-mu t}."""
    if model.nu <= 0.0:
        raise ValueError("g never vanishes for nu = 0")
    return math.log(model.delta / (model.nu * model.mu)) / (model.delta - model.mu)


def damped_bloch(field: CoherentField, model: DecayModel, t: float) -> BlochVector:
    """Damped Bloch vector f(t) * r0(t); its norm equals f(t)."""
    f = float(decay_f(model, t))
    r0 = coherent_bloch(field, t)
    return BlochVector(f * r0.x, f * r0.y, f * r0.z)


def gamma_coefficients(
    field: CoherentField, model: DecayModel, t: float
) -> tuple[float, float, float]:
    """Damping coefficients lambda_k(t) = g(t) r0_k(t), rad/s; needs t > 0."""
    g = float(decay_g(model, t))
    r0 = coherent_bloch(field, t)
    return (g * r0.x, g * r0.y, g * r0.z)


def purity_closed_form(model: DecayModel, t):
    """Purity 1/2 + f(t)^2 / 2 along the damped trajectory; scalar or array."""
    f = decay_f(model, t)
    return 0.5 + 0.5 * f * f
