"""Closed-form regime formulas, the Coulomb-only phase and decoherence estimates.

Each regime formula is transcribed without resummation so that it can serve
as an oracle for the numerical functionals.  Natural units, ``c = hbar = 1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .functionals import InfluenceBundle
from .quadrature import integrate_1d
from .quantum import lambda_min_closed, lambda_min_small
from .trajectories import DEFAULT_ALPHA, coupling

REGIMES = ("T_gg_D_sim_L", "T_gg_D_gg_L", "T_gg_L_gg_D", "D_gg_T_gg_L")
REGIME_CONFIGS = ("linear", "parallel")
SEPARATION = 3.0

# adjacent-scale orderings that each regime asserts, as (larger, smaller)
_ORDERINGS = {
    "T_gg_D_sim_L": (("T", "D"), ("T", "L")),
    "T_gg_D_gg_L": (("T", "D"), ("D", "L")),
    "T_gg_L_gg_D": (("T", "L"), ("L", "D")),
    "D_gg_T_gg_L": (("D", "T"), ("T", "L")),
}

_SUPPORTED = {
    ("linear", "T_gg_D_sim_L"),
    ("linear", "T_gg_D_gg_L"),
    ("linear", "D_gg_T_gg_L"),
    ("parallel", "T_gg_L_gg_D"),
    ("parallel", "T_gg_D_gg_L"),
    ("parallel", "D_gg_T_gg_L"),
}


class RegimeWarning(UserWarning):
    """Parameters do not separate the scales a regime formula assumes."""


@dataclass(frozen=True)
class RegimeCase:
    config: str
    regime: str
    L: float
    T: float
    D: float
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self) -> None:
        if self.config not in REGIME_CONFIGS:
            raise ValueError(f"unknown config {self.config!r}; expected one of {REGIME_CONFIGS}")
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}; expected one of {REGIMES}")
        if not (self.L > 0 and self.T > 0 and self.D > 0 and self.alpha > 0):
            raise ValueError("L, T, D and alpha must be positive")

    @property
    def e2(self) -> float:
        return coupling(self.alpha)

    def ordering_problems(self) -> list[str]:
        scale = {"L": self.L, "T": self.T, "D": self.D}
        return [
            f"{big}/{small} = {scale[big] / scale[small]:.3g} < {SEPARATION:g}"
            for big, small in _ORDERINGS[self.regime]
            if scale[big] / scale[small] < SEPARATION
        ]


def _bump(L: float, T: float, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = t / T
    return 8.0 * L * s**2 * (1.0 - s) ** 2, 16.0 * L / T * s * (1.0 - s) * (1.0 - 2.0 * s)


def gamma_self_closed(L: float, T: float, alpha: float = DEFAULT_ALPHA) -> float:
    """``32 e^2 / (3 pi^2) (L/T)^2``, the same in every regime."""
    return 32.0 * coupling(alpha) / (3.0 * math.pi**2) * (L / T) ** 2


def _log_corrected_gammac(e2: float, L: float, T: float, D: float) -> float:
    return 64.0 * e2 / (3.0 * math.pi**2) * (L / T) ** 2 * (1.0 + 4.0 * D**2 / T**2 * math.log(D / T))


def linear_near_phi(L: float, T: float, D: float, alpha: float = DEFAULT_ALPHA, rel_tol: float = 1e-11) -> float:
    """Cross phase of the simultaneous linear setup to second order in the speed.

    ``-(e^2/4pi) int [2/D (1 - v^2) - (1 + v^2)(1/(D - 2X) + 1/(D + 2X))] dt``.
    """
    if D <= L:
        raise ValueError(f"overlap: need D > L (got D={D}, L={L})")

    def f(t: np.ndarray) -> np.ndarray:
        X, v = _bump(L, T, t)
        return 2.0 / D * (1.0 - v**2) - (1.0 + v**2) * (1.0 / (D - 2.0 * X) + 1.0 / (D + 2.0 * X))

    res = integrate_1d(f, 0.0, T, rel_tol=rel_tol, points=[0.5 * T])
    return -coupling(alpha) / (4.0 * math.pi) * res.value


def closed_forms(case: RegimeCase) -> tuple[InfluenceBundle, float]:
    """Regime bundle and the matching ``lambda_min`` formula.

    The three far regimes use the small-argument ``lambda_min``; the
    simultaneous near regime feeds the exact eigenvalue.  Warns with
    :class:`RegimeWarning` when adjacent scales differ by less than 3x.
    """
    key = (case.config, case.regime)
    if key not in _SUPPORTED:
        raise ValueError(f"no closed forms for config {case.config!r} in regime {case.regime!r}")
    problems = case.ordering_problems()
    if problems:
        warnings.warn(f"{case.regime}: " + "; ".join(problems), RegimeWarning, stacklevel=2)
    e2, L, T, D = case.e2, case.L, case.T, case.D
    g = gamma_self_closed(L, T, case.alpha)
    half = 16.0 * e2 / (3.0 * math.pi**2) * (L / T) ** 2  # (gamma1 + gamma2) / 4
    far_gc = -32.0 * e2 / (225.0 * math.pi**2) * L**2 * T**2 / D**4

    if key == ("linear", "T_gg_D_sim_L"):
        gc = 64.0 * e2 / (3.0 * math.pi**2) * (L / T) ** 2
        phi = linear_near_phi(L, T, D, case.alpha)
        lam = lambda_min_closed(g, g, gc, phi)
    elif key == ("linear", "T_gg_D_gg_L"):
        gc = _log_corrected_gammac(e2, L, T, D)
        phi = 64.0 * e2 / (315.0 * math.pi) * (L / T) ** 2 * ((T / D) ** 3 + 6.0 * T / D)
        lam = half - 0.25 * math.sqrt(phi**2 + gc**2)
    elif key == ("linear", "D_gg_T_gg_L"):
        gc = far_gc
        phi = 16.0 * e2 / (315.0 * math.pi) * L**2 * T / D**3
        lam = half - 16.0 * e2 / (315.0 * math.pi) * T * L**2 / D**3
    elif key == ("parallel", "T_gg_L_gg_D"):
        gc = 64.0 * e2 / (3.0 * math.pi**2) * (L / T) ** 2
        phi = -e2 / (2.0 * math.pi) * (T / D) * (1.0 - 64.0 * L**2 / (105.0 * T**2))
        lam = lambda_min_small(g, g, gc, 2.0 * math.sin(phi / 2.0))
    elif key == ("parallel", "T_gg_D_gg_L"):
        gc = _log_corrected_gammac(e2, L, T, D)
        phi = -32.0 * e2 / (315.0 * math.pi) * T * L**2 / D**3 * (1.0 - 6.0 * D**2 / T**2)
        lam = half - 0.25 * math.sqrt(phi**2 + gc**2)
    else:
        gc = far_gc
        phi = -64.0 * e2 / (105.0 * math.pi) * L**2 / (D * T)
        lam = half - 16.0 * e2 / (105.0 * math.pi) * L**2 / (D * T)

    bundle = InfluenceBundle(
        gamma1=g,
        gamma2=g,
        gammac=gc,
        phi=phi,
        method_tags={"source": "closed_form", "config": case.config, "regime": case.regime},
    )
    return bundle, lam


def coulomb_phase(L: float, T: float, D: float, alpha: float = DEFAULT_ALPHA, rel_tol: float = 1e-11) -> tuple[float, float]:
    """Instantaneous Coulomb cross phase and the negativity it alone produces.

    Both particles follow the bump on a common axis, offset by ``D``.
    Returns ``(phi_c, |sin(phi_c / 2)| / 2)``.
    """
    if not (T > 0 and D > 0 and L >= 0 and alpha > 0):
        raise ValueError("need T > 0, D > 0, L >= 0, alpha > 0")
    if D <= L:
        raise ValueError(f"overlap: need D > 2 max X = {L} (got D={D})")
    if L == 0:
        return 0.0, 0.0

    def f(t: np.ndarray) -> np.ndarray:
        X, _ = _bump(L, T, t)
        return 2.0 / D - (1.0 / (D - 2.0 * X) + 1.0 / (D + 2.0 * X))

    res = integrate_1d(f, 0.0, T, rel_tol=rel_tol, points=[0.5 * T])
    phi_c = -coupling(alpha) / (4.0 * math.pi) * res.value
    return phi_c, 0.5 * abs(math.sin(0.5 * phi_c))


def coulomb_far_phase(L: float, T: float, D: float, alpha: float = DEFAULT_ALPHA) -> float:
    """Leading far-field Coulomb phase ``64 e^2 T L^2 / (315 pi D^3)``."""
    return 64.0 * coupling(alpha) / (315.0 * math.pi) * T * L**2 / D**3


def decoherence_estimates(L: float, T: float, alpha: float = DEFAULT_ALPHA) -> tuple[float, float]:
    """Emitted-photon number and vacuum phase variance, both ``e^2 L^2 / T^2``."""
    if not (L >= 0 and T > 0 and alpha > 0):
        raise ValueError("need L >= 0, T > 0, alpha > 0")
    x = coupling(alpha) * L**2 / T**2
    return x, x
