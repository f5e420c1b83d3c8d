"""Vacuum two-point kernel, retarded times and Lienard-Wiechert fields.

Metric signature (-, +, +, +).  The potential of a branch is
``A^mu = (e / 4 pi) v^mu / (R . v)`` with ``R = x - X(t_r)`` and
``v^mu = (1, dX/dt)``, so a static positive charge has ``A^0 = -e / (4 pi r)``.
Field strengths follow from the same convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .trajectories import WorldlineBranch


def hadamard_kernel(dt, r, eps):
    """Symmetrised vacuum two-point function (scalar factor of ``eta_{mu nu}``).

    ``(1 / 4 pi^2) [1 / (-(dt - i eps)^2 + r^2) + 1 / (-(dt + i eps)^2 + r^2)]``.
    The two terms are complex conjugates, so the result is real.
    """
    dt = np.asarray(dt, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(np.asarray(eps) < 0):
        raise ValueError("eps must be non-negative")
    if np.all(np.asarray(eps) == 0) and np.any(np.abs(dt) == r):
        raise ValueError("kernel is singular on the light cone |dt| = r when eps = 0")
    a = r * r - dt * dt + eps * eps
    b = 2.0 * eps * dt
    out = 2.0 * a / (a * a + b * b) / (4.0 * math.pi**2)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class FieldPoint:
    t: float
    x: tuple[float, float, float]

    def __post_init__(self) -> None:
        if not (np.isfinite(self.t) and np.all(np.isfinite(self.x))):
            raise ValueError("field point components must be finite")


_LEVI = np.zeros((3, 3, 3))
_LEVI[0, 1, 2] = _LEVI[1, 2, 0] = _LEVI[2, 0, 1] = 1.0
_LEVI[0, 2, 1] = _LEVI[2, 1, 0] = _LEVI[1, 0, 2] = -1.0


@dataclass(frozen=True)
class FieldStrength:
    """Antisymmetric ``F^{mu nu}`` stored as ``E^i = F^{0i}`` and ``B^i = eps_{ijk} F^{jk} / 2``.

    ``E`` and ``B`` may carry leading batch dimensions: shape ``(..., 3)``.
    """

    E: np.ndarray
    B: np.ndarray

    def matrix(self) -> np.ndarray:
        E = np.asarray(self.E, dtype=float)
        B = np.asarray(self.B, dtype=float)
        F = np.zeros(E.shape[:-1] + (4, 4))
        F[..., 0, 1:] = E
        F[..., 1:, 0] = -E
        F[..., 1:, 1:] = np.einsum("ijk,...k->...ij", _LEVI, B)
        return F

    @classmethod
    def from_matrix(cls, F: np.ndarray) -> "FieldStrength":
        F = np.asarray(F, dtype=float)
        E = F[..., 0, 1:]
        B = 0.5 * np.einsum("ijk,...jk->...i", _LEVI, F[..., 1:, 1:])
        return cls(E, B)

    def __add__(self, other: "FieldStrength") -> "FieldStrength":
        return FieldStrength(np.asarray(self.E) + other.E, np.asarray(self.B) + other.B)

    def __sub__(self, other: "FieldStrength") -> "FieldStrength":
        return FieldStrength(np.asarray(self.E) - other.E, np.asarray(self.B) - other.B)


class RetardedTimeError(RuntimeError):
    """Root finding failed; carries the final bracket."""


def retarded_times(
    branch: WorldlineBranch, t: np.ndarray, x: np.ndarray, scale: float | None = None
) -> np.ndarray:
    """Vectorised retarded times for field points ``(t[i], x[i])``.

    Solves ``t - t_r = |x - X(t_r)|``: bisection until the bracket is below
    ``1e-6 * scale``, then safeguarded Newton steps.  ``scale`` defaults to
    the branch duration.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    shape = t.shape
    t = t.ravel()
    x = x.reshape(-1, 3)
    T = float(scale if scale is not None else branch.duration)
    vmax = branch.max_speed
    if vmax >= 1.0:
        raise ValueError("branch is not subluminal")

    def residual(tr: np.ndarray) -> np.ndarray:
        return t - tr - np.linalg.norm(x - branch.position_fn(tr), axis=-1)

    d_now = np.linalg.norm(x - branch.position_fn(t), axis=-1)
    hi = t.copy()
    lo = t - d_now / (1.0 - vmax) - 1e-3 * T
    g_lo = residual(lo)
    if np.any(g_lo < 0):
        raise RetardedTimeError(f"lower bracket not valid for {np.sum(g_lo < 0)} points")
    width_goal = 1e-6 * T
    while True:
        wide = (hi - lo) > width_goal
        if not wide.any():
            break
        mid = 0.5 * (lo + hi)
        g_mid = residual(mid)
        go_up = g_mid > 0
        lo = np.where(wide & go_up, mid, lo)
        hi = np.where(wide & ~go_up, mid, hi)
    tr = 0.5 * (lo + hi)
    tol = 1e-13 * max(T, 1.0)
    for _ in range(30):
        g = residual(tr)
        if np.all(np.abs(g) <= tol):
            break
        R = x - branch.position_fn(tr)
        with np.errstate(invalid="ignore", divide="ignore"):  # on-worldline points fall back to bisection
            n = R / np.linalg.norm(R, axis=-1, keepdims=True)
            dg = -1.0 + np.einsum("ij,ij->i", n, branch.velocity_fn(tr))
            step = tr - g / dg
        inside = (step >= lo) & (step <= hi)
        tr_new = np.where(inside, step, 0.5 * (lo + hi))
        g_new = residual(tr_new)
        lo = np.where(g_new > 0, tr_new, lo)
        hi = np.where(g_new <= 0, tr_new, hi)
        tr = tr_new
    g = residual(tr)
    if np.any(np.abs(g) > 1e-12 * T):
        bad = int(np.argmax(np.abs(g)))
        raise RetardedTimeError(
            f"retarded time did not converge: residual {g[bad]:.3g} in bracket [{lo[bad]}, {hi[bad]}]"
        )
    return tr.reshape(shape)


def solve_retarded_time(branch: WorldlineBranch, p: FieldPoint) -> float:
    """Retarded time of ``branch`` seen from field point ``p``."""
    return float(retarded_times(branch, np.array([p.t]), np.array([p.x]))[0])


@dataclass(frozen=True)
class RetardedField:
    """Potential and field strengths at a batch of field points."""

    A: np.ndarray  # (..., 4) contravariant components
    Fv: FieldStrength
    Fa: FieldStrength
    t_r: np.ndarray
    n: np.ndarray  # unit vector from retarded source position to field point


def lw_field_batch(
    branch: WorldlineBranch, t: np.ndarray, x: np.ndarray, charge: float, min_distance: float | None = None
) -> RetardedField:
    """Lienard-Wiechert potential and velocity/acceleration field strengths.

    Field points closer than ``min_distance`` (default ``1e-9`` times the
    branch excursion scale) to the retarded source position are rejected.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    tr = retarded_times(branch, t, x)
    X = branch.position_fn(tr.ravel()).reshape(x.shape)
    v = branch.velocity_fn(tr.ravel()).reshape(x.shape)
    a = branch.acceleration_fn(tr.ravel()).reshape(x.shape)
    R = x - X
    R0 = np.linalg.norm(R, axis=-1)  # t - t_r on the light cone
    if min_distance is None:
        min_distance = 1e-9 * max(_excursion(branch), 1e-300)
    if np.any(R0 <= min_distance):
        raise ValueError("field point lies on the source worldline")
    Rv = -R0 + np.einsum("...i,...i->...", R, v)  # R . v with v^0 = 1
    gamma2 = 1.0 / (1.0 - np.einsum("...i,...i->...", v, v))
    k = charge / (4.0 * math.pi)

    A = np.concatenate([np.ones(R0.shape + (1,)), v], axis=-1) * (k / Rv)[..., None]

    cv = (-k / (gamma2 * Rv**3))[..., None]
    Ev = cv * (R0[..., None] * v - R)
    Bv = cv * np.cross(R, v)

    Ra = np.einsum("...i,...i->...", R, a)
    w0 = -Ra / Rv
    w = a + w0[..., None] * v
    ca = (k / Rv**2)[..., None]
    Ea = ca * (R0[..., None] * w - R * w0[..., None])
    Ba = ca * np.cross(R, w)
    return RetardedField(A, FieldStrength(Ev, Bv), FieldStrength(Ea, Ba), tr, R / R0[..., None])


def lw_fields(
    branch: WorldlineBranch, p: FieldPoint, charge: float
) -> tuple[np.ndarray, FieldStrength, FieldStrength]:
    """Potential ``A^mu`` and field strengths ``(F_v, F_a)`` at one field point."""
    f = lw_field_batch(branch, np.array([p.t]), np.array([p.x]), charge)
    return f.A[0], FieldStrength(f.Fv.E[0], f.Fv.B[0]), FieldStrength(f.Fa.E[0], f.Fa.B[0])


def _excursion(branch: WorldlineBranch) -> float:
    tau = np.linspace(0.0, branch.duration, 65)
    disp = branch.profile.displacement(tau)
    return float(np.max(np.linalg.norm(disp - disp[0], axis=-1))) or 1.0
