"""Decoherence functionals, cross correlation and cross phase of two superposed charges.

Every quantity is built from the differences between the R and L branches of
each particle.  Both branches share ``dX^0/dt = 1``, so only spatial
components of the loop currents enter the decoherence terms.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from .kernels import lw_field_batch
from .quadrature import (
    ZERO,
    BilinearIntegrand,
    IntegralResult,
    SingularStrategy,
    double_integral_lightcone,
    integrate_1d,
    integrate_2d,
)
from .trajectories import BranchPair, Scenario, WorldlineBranch, coupling

PHI_METHODS = ("nonrel", "expansion_1c2", "surface")
GAMMAC_MODES = ("exact", "dipole", "fixed")


@dataclass(frozen=True)
class InfluenceBundle:
    """The scalars that fix the two-qubit state, with provenance."""

    gamma1: float
    gamma2: float
    gammac: float
    phi: float
    phi_v: float | None = None
    phi_a: float | None = None
    method_tags: dict[str, str] = field(default_factory=dict)
    diagnostics: dict[str, float] = field(default_factory=dict)
    quad_error: float = 0.0

    def __post_init__(self) -> None:
        for name in ("gamma1", "gamma2", "gammac", "phi"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise ValueError("decoherence functionals must be non-negative")

    def violations(self) -> list[str]:
        """Broken bundle invariants (empty when consistent)."""
        out = []
        if self.gammac**2 > 4.0 * self.gamma1 * self.gamma2 * (1 + 1e-9):
            out.append("cauchy-schwarz: gammac^2 > 4 gamma1 gamma2")
        if self.phi_v is not None and self.phi_a is not None:
            if abs(self.phi - self.phi_v - self.phi_a) > 1e-9:
                out.append("split: phi != phi_v + phi_a")
        return out

    @classmethod
    def zero(cls) -> "InfluenceBundle":
        return cls(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class PhiResult:
    value: float
    abs_error_estimate: float
    phi_v: float | None = None
    phi_a: float | None = None


# ---------------------------------------------------------------------------
# decoherence


def _difference(pair: BranchPair, attr: str):
    f_r = getattr(pair.R, attr)
    f_l = getattr(pair.L, attr)
    return lambda t: f_r(t) - f_l(t)


def _is_trivial(pair: BranchPair) -> bool:
    return pair.R.profile == pair.L.profile and pair.R.t_start == pair.L.t_start and pair.R.origin == pair.L.origin


def _resolve(strategy: SingularStrategy | str) -> SingularStrategy:
    return SingularStrategy(strategy) if isinstance(strategy, str) else strategy


def gamma_self(
    pair: BranchPair,
    alpha: float,
    strategy: SingularStrategy | str = "parts_log_kernel",
    rel_tol: float = 1e-7,
) -> IntegralResult:
    """Self decoherence of one particle in the dipole approximation.

    ``(e^2 / 4) int int dv(t) . dv(t') K(t - t', 0) dt dt'`` with
    ``dv = v_R - v_L``.  The pair is shifted to start at ``t = 0`` at the
    origin first, so the value is exactly translation invariant.
    """
    if _is_trivial(pair):
        return ZERO
    t0 = pair.window[0]

    def rebase(b: WorldlineBranch) -> WorldlineBranch:
        return WorldlineBranch(b.label, b.t_start - t0, b.profile)

    res = _gamma_self_cached(rebase(pair.R), rebase(pair.L), _resolve(strategy), float(rel_tol))
    return res.scaled(coupling(alpha) / 4.0)


@functools.lru_cache(maxsize=256)
def _gamma_self_cached(r: WorldlineBranch, l: WorldlineBranch, strategy: SingularStrategy, rel_tol: float):
    pair = BranchPair(r, l)
    dv = _difference(pair, "velocity_fn")
    da = _difference(pair, "acceleration_fn")
    pts = pair.breakpoints()
    g = BilinearIntegrand(dv, dv, pair.window, pair.window, da, da, pts, pts)
    return double_integral_lightcone(g, None, strategy, rel_tol)


@dataclass(frozen=True)
class BranchSeparation:
    """``r(t, t') = |X_a(t) - X_b(t')|`` with its ``t'`` derivative."""

    a: WorldlineBranch
    b: WorldlineBranch

    def _diff(self, t, tp):
        t, tp = np.broadcast_arrays(np.asarray(t, float), np.asarray(tp, float))
        return t.shape, self.a.position_fn(t.ravel()) - self.b.position_fn(tp.ravel()), tp

    def __call__(self, t, tp):
        shape, d, _ = self._diff(t, tp)
        return np.linalg.norm(d, axis=-1).reshape(shape)

    def d_tp(self, t, tp):
        shape, d, tp = self._diff(t, tp)
        r = np.linalg.norm(d, axis=-1)
        v = self.b.velocity_fn(tp.ravel())
        return (-np.einsum("ij,ij->i", d, v) / r).reshape(shape)


def gamma_cross(
    s: Scenario,
    mode: str = "exact",
    strategy: SingularStrategy | str | None = None,
    rel_tol: float = 1e-7,
) -> IntegralResult:
    """Cross correlation ``(e^2 / 2) int int dv1(t) . dv2(t') K(t - t', r) dt dt'``.

    ``mode``: ``exact`` sums the four branch combinations with their true
    separations ``|X_1P(t) - X_2Q(t')|``; ``dipole`` sets ``r = 0``;
    ``fixed`` uses the constant initial separation ``r = D``.
    """
    if mode not in GAMMAC_MODES:
        raise ValueError(f"unknown gammac mode {mode!r}; expected one of {GAMMAC_MODES}")
    p1, p2 = s.particle1, s.particle2
    if _is_trivial(p1) or _is_trivial(p2):
        return ZERO
    half_e2 = 0.5 * s.e2
    if mode in ("dipole", "fixed"):
        g = BilinearIntegrand(
            _difference(p1, "velocity_fn"),
            _difference(p2, "velocity_fn"),
            p1.window,
            p2.window,
            _difference(p1, "acceleration_fn"),
            _difference(p2, "acceleration_fn"),
            p1.breakpoints(),
            p2.breakpoints(),
        )
        if mode == "dipole":
            res = double_integral_lightcone(g, None, _resolve(strategy or "parts_log_kernel"), rel_tol)
        else:
            res = double_integral_lightcone(g, s.D, _resolve(strategy or "pv_subtraction"), rel_tol)
        return res.scaled(half_e2)

    strat = _resolve(strategy or "pv_subtraction")
    total = ZERO
    for e1, b1 in p1.signed():
        for e2, b2 in p2.signed():
            g = BilinearIntegrand(
                b1.velocity_fn,
                b2.velocity_fn,
                b1.window,
                b2.window,
                b1.acceleration_fn,
                b2.acceleration_fn,
                b1.breakpoints(),
                b2.breakpoints(),
            )

            sep = BranchSeparation(b1, b2)
            total = total + double_integral_lightcone(g, sep, strat, rel_tol).scaled(e1 * e2)
    return total.scaled(half_e2)


# ---------------------------------------------------------------------------
# cross phase


def _overlap(s: Scenario) -> tuple[float, float] | None:
    lo = max(s.particle1.window[0], s.particle2.window[0])
    hi = min(s.particle1.window[1], s.particle2.window[1])
    return (lo, hi) if hi > lo else None


def _phi_instantaneous(s: Scenario, relativistic: bool, rel_tol: float) -> IntegralResult:
    # The integrand vanishes unless both particles move, since a particle at
    # rest has coinciding branches and its signed sum cancels.
    span = _overlap(s)
    if span is None:
        return ZERO
    pts = sorted(set(s.particle1.breakpoints()) | set(s.particle2.breakpoints()))

    def f(t: np.ndarray) -> np.ndarray:
        acc = np.zeros_like(t)
        for e1, b1 in s.particle1.signed():
            x1, v1, a1 = b1.position_fn(t), b1.velocity_fn(t), b1.acceleration_fn(t)
            for e2, b2 in s.particle2.signed():
                x2, v2, a2 = b2.position_fn(t), b2.velocity_fn(t), b2.acceleration_fn(t)
                rv = x1 - x2
                r = np.linalg.norm(rv, axis=-1)
                if not relativistic:
                    acc += e1 * e2 * 2.0 / r
                    continue
                n = rv / r[:, None]
                v12 = np.einsum("ij,ij->i", v1, v2)
                side2 = 0.5 * (np.einsum("ij,ij->i", v2, v2) - np.einsum("ij,ij->i", n, v2) ** 2)
                side2 -= 0.5 * np.einsum("ij,ij->i", rv, a2)
                side1 = 0.5 * (np.einsum("ij,ij->i", v1, v1) - np.einsum("ij,ij->i", n, v1) ** 2)
                side1 += 0.5 * np.einsum("ij,ij->i", rv, a1)
                acc += e1 * e2 * (2.0 - 2.0 * v12 + side1 + side2) / r
        return acc

    return integrate_1d(f, span[0], span[1], rel_tol=rel_tol, points=pts).scaled(-s.e2 / (8.0 * math.pi))


def _edge_events(pj: BranchPair) -> list[tuple[float, np.ndarray]]:
    """Window-edge events of a source, where its acceleration switches on or off."""
    out = []
    for t_e in pj.window:
        for b in (pj.R, pj.L):
            p = b.position_fn(np.array([t_e]))[0]
            if not any(t_e == t0 and np.array_equal(p, p0) for t0, p0 in out):
                out.append((t_e, p))
    return out


def _arrival(b: WorldlineBranch, t_e: float, p: np.ndarray, lo: float, hi: float) -> float | None:
    """Time in ``[lo, hi]`` at which the light cone of event ``(t_e, p)`` reaches ``b``."""

    def g(t: float) -> float:
        return t - t_e - float(np.linalg.norm(b.position_fn(np.array([t]))[0] - p))

    g_lo, g_hi = g(lo), g(hi)
    if g_lo > 0 or g_hi < 0:
        return None
    return brentq(g, lo, hi, xtol=1e-14 * max(hi - lo, 1.0))


def _surface_breaks(pi: BranchPair, pj: BranchPair):
    """Outer breakpoints in ``t`` and the inner break curve ``sigma(t)``.

    The acceleration field of ``pj`` jumps on the light cones of its window
    edges.  On the strip ``x = X_L + sigma (X_R - X_L)`` that cone is a
    quadratic in ``sigma``.
    """
    events = _edge_events(pj)
    lo, hi = pi.window
    pts = set(pi.breakpoints())
    for t_e, p in events:
        for b in (pi.R, pi.L):
            t_hit = _arrival(b, t_e, p, lo, hi)
            if t_hit is not None:
                pts.add(t_hit)

    def breaks(t: np.ndarray) -> np.ndarray:
        a = pi.L.position_fn(t)
        strip = pi.R.position_fn(t) - a
        qa = np.einsum("ij,ij->i", strip, strip)
        cols = []
        for t_e, p in events:
            d = a - p
            qb = 2.0 * np.einsum("ij,ij->i", strip, d)
            qc = np.einsum("ij,ij->i", d, d) - (t - t_e) ** 2
            disc = qb * qb - 4.0 * qa * qc
            ok = (qa > 0) & (disc >= 0) & (t > t_e)
            root = np.sqrt(np.where(ok, disc, 0.0))
            safe = np.where(ok, qa, 1.0)
            for sgn in (-1.0, 1.0):
                sig = (-qb + sgn * root) / (2.0 * safe)
                cols.append(np.where(ok & (sig > 0) & (sig < 1), sig, np.nan))
        return np.stack(cols, axis=1)

    return sorted(t for t in pts if lo < t < hi), breaks


def _phi_surface(s: Scenario, rel_tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Flux of the other particle's field difference through each branch strip.

    Returns the (velocity, acceleration) parts and their error estimates.
    """
    e = math.sqrt(s.e2)
    vals = np.zeros(2)
    errs = np.zeros(2)
    for i, (pi, pj) in enumerate(((s.particle1, s.particle2), (s.particle2, s.particle1))):
        if _is_trivial(pi) or _is_trivial(pj):
            continue

        def f(t: np.ndarray, sig: np.ndarray, pi=pi, pj=pj) -> np.ndarray:
            t, sig = np.broadcast_arrays(t, sig)
            shape = t.shape
            tt, ss = t.ravel(), sig.ravel()
            xl = pi.L.position_fn(tt)
            strip = pi.R.position_fn(tt) - xl
            u = pi.L.velocity_fn(tt) + ss[:, None] * (pi.R.velocity_fn(tt) - pi.L.velocity_fn(tt))
            x = xl + ss[:, None] * strip
            fr = lw_field_batch(pj.R, tt, x, e)
            fl = lw_field_batch(pj.L, tt, x, e)
            out = np.empty((2,) + shape)
            for k, (a, b) in enumerate(((fr.Fv, fl.Fv), (fr.Fa, fl.Fa))):
                dE = a.E - b.E
                dB = a.B - b.B
                lorentz = dE + np.cross(u, dB)
                out[k] = np.einsum("ij,ij->i", strip, lorentz).reshape(shape)
            return out

        lo, hi = pi.window
        pts, breaks = _surface_breaks(pi, pj)
        v, err, _ = integrate_2d(
            f, lo, hi, lambda t: 0.0, lambda t: 1.0, rel_tol=rel_tol, points=pts, ncomp=2, inner_breaks=breaks
        )
        vals += v
        errs += err
    return 0.5 * e * vals, 0.5 * e * errs


def phi(s: Scenario, method: str = "surface", rel_tol: float | None = None) -> PhiResult:
    """Cross phase by one of ``nonrel``, ``expansion_1c2`` or ``surface``.

    ``nonrel`` is the instantaneous Coulomb phase; ``expansion_1c2`` adds the
    velocity and acceleration corrections of the retarded potential to second
    order in ``1/c``; ``surface`` integrates the exact retarded field strength
    over the strips between the branches and also returns the
    velocity-field and acceleration-field parts.
    """
    if method not in PHI_METHODS:
        raise ValueError(f"unknown phi method {method!r}; expected one of {PHI_METHODS}")
    if method == "surface":
        if s.config.startswith("linear") and s.D <= s.L:
            raise ValueError("surface method needs non-intersecting supports (linear D > L)")
        parts, errs = _phi_surface(s, rel_tol or 1e-7)
        # the flux equals the retarded line integral with the opposite
        # orientation to the instantaneous methods
        pv, pa = -float(parts[0]), -float(parts[1])
        return PhiResult(pv + pa, float(errs.sum()), pv, pa)
    res = _phi_instantaneous(s, method == "expansion_1c2", rel_tol or 1e-9)
    return PhiResult(res.value, res.abs_error_estimate)


# ---------------------------------------------------------------------------
# assembly


def influence_bundles(
    s: Scenario,
    methods: Iterable[str] = PHI_METHODS,
    gammac_mode: str = "exact",
    strategy: SingularStrategy | str = "parts_log_kernel",
    rel_tol: float = 1e-7,
) -> dict[str, InfluenceBundle]:
    """One bundle per phi method; the decoherence terms are computed once."""
    methods = tuple(methods)
    for m in methods:
        if m not in PHI_METHODS:
            raise ValueError(f"unknown phi method {m!r}")
    g1 = gamma_self(s.particle1, s.alpha, strategy, rel_tol)
    g2 = gamma_self(s.particle2, s.alpha, strategy, rel_tol)
    gc = gamma_cross(s, gammac_mode, rel_tol=rel_tol)
    phis = {m: phi(s, m) for m in methods}
    diag = {f"phi_{m}": p.value for m, p in phis.items()}
    tag = _resolve(strategy).tag
    out = {}
    for m, p in phis.items():
        out[m] = InfluenceBundle(
            gamma1=max(g1.value, 0.0),
            gamma2=max(g2.value, 0.0),
            gammac=gc.value,
            phi=p.value,
            phi_v=p.phi_v,
            phi_a=p.phi_a,
            method_tags={"gamma": tag, "gammac": gammac_mode, "phi": m},
            diagnostics=dict(diag),
            quad_error=g1.abs_error_estimate + g2.abs_error_estimate + gc.abs_error_estimate + p.abs_error_estimate,
        )
    return out


def influence_bundle(
    s: Scenario,
    phi_method: str = "surface",
    cross_methods: Sequence[str] = (),
    gammac_mode: str = "exact",
    rel_tol: float = 1e-7,
) -> InfluenceBundle:
    """Bundle for ``phi_method``; ``cross_methods`` add their phases to the diagnostics."""
    methods = (phi_method,) + tuple(m for m in cross_methods if m != phi_method)
    return influence_bundles(s, methods, gammac_mode, rel_tol=rel_tol)[phi_method]
