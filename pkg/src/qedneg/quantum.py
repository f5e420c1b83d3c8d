"""Two-qubit state of the superposed charges, partial transpose and negativity.

Basis order: ``|RR>, |RL>, |LR>, |LL>`` with particle 1 first.  Branch labels
carry signs ``eps_R = +1``, ``eps_L = -1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .functionals import InfluenceBundle

EPS = (1, -1)  # R, L
SPECTRUM_TOL = 1e-10
PRIME_RADICALS = ("corrected", "reused")


class SpectrumMismatchError(RuntimeError):
    """Closed-form and eigensolver spectra disagree."""


@dataclass(frozen=True)
class TwoQubitState:
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-12:
            raise ValueError("density matrix trace differs from 1")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("density matrix is not positive semidefinite")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class NegativityReport:
    lambda_plus: float
    lambda_minus: float
    lambda_p_plus: float
    lambda_p_minus: float
    lambda_min: float
    negativity: float
    source: str = "closed_form"
    max_discrepancy: float = 0.0

    def eigenvalues(self) -> tuple[float, float, float, float]:
        return (self.lambda_plus, self.lambda_minus, self.lambda_p_plus, self.lambda_p_minus)


def _entry_exponent(g1: float, g2: float, gc: float, phi: float, P: int, Q: int, Pp: int, Qp: int) -> complex:
    # rho[PQ, P'Q'] = exp(-Gamma_{P'Q'PQ} + i Phi_{P'Q'PQ}) / 4, with the loop
    # orientation s_i = (eps' - eps) / 2 and the cross phase split as eps1 eps2 phi / 4
    s1 = (EPS[Pp] - EPS[P]) // 2
    s2 = (EPS[Qp] - EPS[Q]) // 2
    gamma = g1 * abs(s1) + g2 * abs(s2) + s1 * s2 * gc
    phase = (EPS[Pp] * EPS[Qp] - EPS[P] * EPS[Q]) * phi / 4.0
    return complex(-gamma, phase)


def density_matrix(b: InfluenceBundle) -> TwoQubitState:
    """Reduced state of the two charges after the photon field is traced out.

    Particle-local self phases are dropped: they are local unitaries and do
    not change the partial-transpose spectrum.
    """
    if b.gamma1 < 0 or b.gamma2 < 0:
        raise ValueError("decoherence functionals must be non-negative")
    m = np.empty((4, 4), dtype=complex)
    for P in (0, 1):
        for Q in (0, 1):
            for Pp in (0, 1):
                for Qp in (0, 1):
                    z = _entry_exponent(b.gamma1, b.gamma2, b.gammac, b.phi, P, Q, Pp, Qp)
                    m[2 * P + Q, 2 * Pp + Qp] = 0.25 * np.exp(z)
    return TwoQubitState(m)


def partial_transpose(rho: TwoQubitState | np.ndarray) -> np.ndarray:
    """Transpose the particle-1 indices: ``(PQ, P'Q') -> (P'Q, PQ')``."""
    m = rho.matrix if isinstance(rho, TwoQubitState) else np.asarray(rho)
    if m.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
    return m.reshape(2, 2, 2, 2).transpose(2, 1, 0, 3).reshape(4, 4)


def closed_form_spectrum(
    gamma1: float, gamma2: float, gammac: float, phi: float, prime_radical: str = "corrected"
) -> tuple[float, float, float, float]:
    """``(lambda_+, lambda_-, lambda'_+, lambda'_-)`` of the partial transpose.

    ``prime_radical="reused"`` reuses the unprimed radical for the primed
    pair; that spectrum is kept only to report its mismatch.
    """
    if prime_radical not in PRIME_RADICALS:
        raise ValueError(f"prime_radical must be one of {PRIME_RADICALS}")
    a, b = math.exp(-gamma1), math.exp(-gamma2)
    ab = a * b
    c = ab * math.cosh(gammac)
    sh2 = (ab * math.sinh(gammac)) ** 2
    s2 = math.sin(phi / 2.0) ** 2
    rad = math.sqrt((a - b) ** 2 + 4.0 * ab * s2 + sh2)
    if prime_radical == "corrected":
        rad_p = math.sqrt(max((a + b) ** 2 - 4.0 * ab * s2 + sh2, 0.0))
    else:
        rad_p = rad
    return (
        0.25 * (1.0 - c + rad),
        0.25 * (1.0 - c - rad),
        0.25 * (1.0 + c + rad_p),
        0.25 * (1.0 + c - rad_p),
    )


def lambda_min_closed(gamma1: float, gamma2: float, gammac: float, phi: float) -> float:
    """Minimum partial-transpose eigenvalue, exact in all four scalars."""
    return closed_form_spectrum(gamma1, gamma2, gammac, phi)[1]


def lambda_min_small(gamma1: float, gamma2: float, gammac: float, phase_term: float) -> float:
    """Leading order of ``lambda_min`` for small arguments.

    ``phase_term`` stands for ``phi``, or for ``2 sin(phi / 2)`` when the
    phase itself is not small.
    """
    return 0.25 * (gamma1 + gamma2 - math.sqrt((gamma1 - gamma2) ** 2 + phase_term**2 + gammac**2))


def eigensolver_spectrum(b: InfluenceBundle) -> np.ndarray:
    """Ascending eigenvalues of the partial transpose from a Hermitian solver."""
    return np.linalg.eigvalsh(partial_transpose(density_matrix(b)))


def negativity(b: InfluenceBundle) -> NegativityReport:
    """Negativity from the closed-form spectrum, cross-checked by ``eigvalsh``."""
    closed = closed_form_spectrum(b.gamma1, b.gamma2, b.gammac, b.phi)
    numeric = eigensolver_spectrum(b)
    gap = float(np.max(np.abs(np.sort(closed) - numeric)))
    if gap > SPECTRUM_TOL:
        raise SpectrumMismatchError(f"closed-form and eigensolver spectra differ by {gap:.3g}")
    lam_min = min(closed)
    return NegativityReport(*closed, lambda_min=lam_min, negativity=max(-lam_min, 0.0), max_discrepancy=gap)
