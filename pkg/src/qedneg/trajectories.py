"""Superposed worldlines, benchmark configurations and kinematics.

Natural units with hbar = c = 1.  A branch is active on
``[t_start, t_start + duration]`` and sits at rest at its endpoint outside
that window.  All kinematic maps are vectorised: a time array of shape
``(N,)`` gives position, velocity and acceleration arrays of shape ``(N, 3)``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

DEFAULT_ALPHA = 1.0 / 137.0

CONFIGS = (
    "linear_simultaneous",
    "linear_delayed",
    "parallel_simultaneous",
    "parallel_delayed",
    "custom",
)

# max over s in [0, 1] of |d/ds 8 s^2 (1 - s)^2| = 8 / (3 sqrt 3)
BUMP_PEAK_SPEED = 8.0 / (3.0 * math.sqrt(3.0))


def coupling(alpha: float) -> float:
    """Squared charge e^2 = 4 pi alpha."""
    return 4.0 * math.pi * alpha


class Profile(Protocol):
    """Displacement of a branch relative to its rest origin, local time ``tau``."""

    duration: float

    def displacement(self, tau: np.ndarray) -> np.ndarray: ...

    def velocity(self, tau: np.ndarray) -> np.ndarray: ...

    def acceleration(self, tau: np.ndarray) -> np.ndarray: ...

    def max_speed(self) -> float: ...


@dataclass(frozen=True)
class BumpProfile:
    """``amplitude * 8 s^2 (1 - s)^2`` with ``s = tau / duration``.

    ``amplitude`` is a 3-vector; for the benchmark shapes it is
    ``eps_P * L`` times a unit axis.
    """

    amplitude: tuple[float, float, float]
    duration: float

    def _s(self, tau: np.ndarray) -> np.ndarray:
        return np.asarray(tau, dtype=float) / self.duration

    def displacement(self, tau: np.ndarray) -> np.ndarray:
        s = self._s(tau)
        shape = 8.0 * s**2 * (1.0 - s) ** 2
        return shape[..., None] * np.asarray(self.amplitude)

    def velocity(self, tau: np.ndarray) -> np.ndarray:
        s = self._s(tau)
        shape = 16.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / self.duration
        return shape[..., None] * np.asarray(self.amplitude)

    def acceleration(self, tau: np.ndarray) -> np.ndarray:
        s = self._s(tau)
        shape = 16.0 * (1.0 - 6.0 * s + 6.0 * s**2) / self.duration**2
        return shape[..., None] * np.asarray(self.amplitude)

    def max_speed(self) -> float:
        return BUMP_PEAK_SPEED * float(np.linalg.norm(self.amplitude)) / self.duration


@dataclass(frozen=True)
class SplineProfile:
    """Clamped cubic spline through user samples (zero end velocity).

    ``times`` start at 0; ``points`` holds one 3-vector per time.
    """

    times: tuple[float, ...]
    points: tuple[tuple[float, float, float], ...]
    duration: float = field(init=False)

    def __post_init__(self) -> None:
        if len(self.times) < 2 or len(self.times) != len(self.points):
            raise ValueError("spline needs at least two (time, point) samples")
        if self.times[0] != 0.0 or any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("spline times must start at 0 and increase strictly")
        object.__setattr__(self, "duration", float(self.times[-1]))

    def _eval(self, tau: np.ndarray, nu: int) -> np.ndarray:
        tau = np.clip(np.asarray(tau, dtype=float), 0.0, self.duration)
        return _cached_spline(self.times, self.points)(tau, nu)

    def displacement(self, tau: np.ndarray) -> np.ndarray:
        return self._eval(tau, 0)

    def velocity(self, tau: np.ndarray) -> np.ndarray:
        return self._eval(tau, 1)

    def acceleration(self, tau: np.ndarray) -> np.ndarray:
        return self._eval(tau, 2)

    def max_speed(self) -> float:
        tau = np.linspace(0.0, self.duration, 4001)
        return float(np.max(np.linalg.norm(self.velocity(tau), axis=-1)))

    @property
    def knots(self) -> tuple[float, ...]:
        return self.times


@functools.lru_cache(maxsize=64)
def _cached_spline(times: tuple[float, ...], points: tuple) -> CubicSpline:
    return CubicSpline(np.array(times), np.array(points, dtype=float), bc_type="clamped")


@dataclass(frozen=True)
class WorldlineBranch:
    """One classical branch ``X(t) = origin + profile(t - t_start)``."""

    label: str
    t_start: float
    profile: BumpProfile | SplineProfile
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @property
    def duration(self) -> float:
        return self.profile.duration

    @property
    def window(self) -> tuple[float, float]:
        return (self.t_start, self.t_start + self.profile.duration)

    @property
    def max_speed(self) -> float:
        return self.profile.max_speed()

    def _tau(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        tau = np.asarray(t, dtype=float) - self.t_start
        inside = (tau >= 0.0) & (tau <= self.duration)
        return np.clip(tau, 0.0, self.duration), inside

    def position_fn(self, t: np.ndarray) -> np.ndarray:
        tau, _ = self._tau(t)
        return np.asarray(self.origin) + self.profile.displacement(tau)

    def velocity_fn(self, t: np.ndarray) -> np.ndarray:
        tau, inside = self._tau(t)
        return np.where(inside[..., None], self.profile.velocity(tau), 0.0)

    def acceleration_fn(self, t: np.ndarray) -> np.ndarray:
        tau, inside = self._tau(t)
        return np.where(inside[..., None], self.profile.acceleration(tau), 0.0)

    def breakpoints(self) -> tuple[float, ...]:
        """Times where the kinematics may lose smoothness."""
        knots = getattr(self.profile, "knots", (0.0, self.duration))
        return tuple(self.t_start + k for k in knots)


def kinematics(branch: WorldlineBranch, t) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Position, velocity and acceleration of ``branch`` at time(s) ``t``.

    Scalar ``t`` returns 3-vectors, array ``t`` returns ``(N, 3)`` arrays.
    """
    arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = (branch.position_fn(arr), branch.velocity_fn(arr), branch.acceleration_fn(arr))
    if np.ndim(t) == 0:
        return tuple(o[0] for o in out)  # type: ignore[return-value]
    return out


@dataclass(frozen=True)
class BranchPair:
    """The R and L branches of one particle."""

    R: WorldlineBranch
    L: WorldlineBranch

    def signed(self) -> tuple[tuple[float, WorldlineBranch], tuple[float, WorldlineBranch]]:
        return ((1.0, self.R), (-1.0, self.L))

    @property
    def window(self) -> tuple[float, float]:
        return (min(self.R.window[0], self.L.window[0]), max(self.R.window[1], self.L.window[1]))

    def breakpoints(self) -> tuple[float, ...]:
        return tuple(sorted(set(self.R.breakpoints()) | set(self.L.breakpoints())))

    def with_origin(self, shift: Sequence[float]) -> "BranchPair":
        def move(b: WorldlineBranch) -> WorldlineBranch:
            return WorldlineBranch(b.label, b.t_start, b.profile, tuple(np.add(b.origin, shift)))

        return BranchPair(move(self.R), move(self.L))


@dataclass(frozen=True)
class Scenario:
    particle1: BranchPair
    particle2: BranchPair
    L: float
    T: float
    D: float
    alpha: float = DEFAULT_ALPHA
    config: str = "custom"

    @property
    def e2(self) -> float:
        return coupling(self.alpha)

    def pairs(self) -> tuple[BranchPair, BranchPair]:
        return (self.particle1, self.particle2)


def bump_pair(L: float, T: float, axis=(1.0, 0.0, 0.0), origin=(0.0, 0.0, 0.0), t_start: float = 0.0) -> BranchPair:
    """R and L branches ``origin +/- X(t - t_start) * axis``."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    origin = tuple(float(c) for c in origin)
    branches = []
    for label, sign in (("R", 1.0), ("L", -1.0)):
        amp = tuple(float(c) for c in sign * L * axis)
        branches.append(WorldlineBranch(label, float(t_start), BumpProfile(amp, float(T)), origin))
    return BranchPair(*branches)


def spline_pair(
    times: Sequence[float],
    right: Sequence[Sequence[float]],
    left: Sequence[Sequence[float]],
    origin=(0.0, 0.0, 0.0),
    t_start: float = 0.0,
) -> BranchPair:
    """Branch pair from sampled displacements (each sample a 3-vector)."""
    tt = tuple(float(x) for x in times)
    mk = lambda pts: tuple(tuple(float(c) for c in p) for p in pts)  # noqa: E731
    origin = tuple(float(c) for c in origin)
    return BranchPair(
        WorldlineBranch("R", float(t_start), SplineProfile(tt, mk(right)), origin),
        WorldlineBranch("L", float(t_start), SplineProfile(tt, mk(left)), origin),
    )


def build_scenario(config: str, L: float, T: float, D: float, alpha: float = DEFAULT_ALPHA) -> Scenario:
    """Benchmark two-particle configuration.

    Particle 1 oscillates along x about the origin.  Particle 2 is offset by
    ``D`` along x (linear) or y (parallel); delayed variants start particle 2
    at ``t = D``.
    """
    if config not in CONFIGS or config == "custom":
        raise ValueError(f"unknown configuration {config!r}")
    if not (L > 0 and T > 0 and D > 0 and alpha > 0):
        raise ValueError("L, T, D and alpha must be positive")
    if BUMP_PEAK_SPEED * L / T >= 1.0:
        raise ValueError(f"superluminal branch: max speed {BUMP_PEAK_SPEED * L / T:.4g} >= 1")
    linear = config.startswith("linear")
    if linear and D <= L:
        # both branches reach max |X| = L/2, so supports touch once D <= L
        raise ValueError(f"overlap: linear configuration needs D > L (got D={D}, L={L})")
    offset = (D, 0.0, 0.0) if linear else (0.0, D, 0.0)
    delay = D if config.endswith("delayed") else 0.0
    p1 = bump_pair(L, T)
    p2 = bump_pair(L, T, origin=offset, t_start=delay)
    return Scenario(p1, p2, float(L), float(T), float(D), float(alpha), config)


def _min_separation(s: Scenario, n: int = 2001) -> float:
    lo = min(s.particle1.window[0], s.particle2.window[0])
    hi = max(s.particle1.window[1], s.particle2.window[1])
    t = np.linspace(lo, hi, n)
    best = math.inf
    for b1 in (s.particle1.R, s.particle1.L):
        for b2 in (s.particle2.R, s.particle2.L):
            d = np.linalg.norm(b1.position_fn(t) - b2.position_fn(t), axis=-1)
            best = min(best, float(d.min()))
    return best


def validate_scenario(s: Scenario) -> list[str]:
    """Violated invariants of ``s``; an empty list means valid."""
    problems: list[str] = []
    if not (s.L > 0 and s.T > 0 and s.D >= 0 and s.alpha > 0):
        problems.append("non-positive parameter (need L > 0, T > 0, D >= 0, alpha > 0)")
    for name, pair in (("particle1", s.particle1), ("particle2", s.particle2)):
        for b in (pair.R, pair.L):
            if b.max_speed >= 1.0:
                problems.append(f"superluminal: {name}.{b.label} reaches speed {b.max_speed:.4g}")
        if pair.R.window != pair.L.window:
            problems.append(f"window mismatch: {name} branches have different active windows")
        for t in pair.window:
            gap = np.linalg.norm(pair.R.position_fn(np.array([t])) - pair.L.position_fn(np.array([t])))
            if gap > 1e-12 * max(s.L, 1.0):
                problems.append(f"open loop: {name} branches differ by {gap:.3g} at t={t}")
    if s.config.startswith("linear") and s.D <= 2.0 * _max_excursion(s.particle1):
        problems.append(f"overlap: D={s.D} does not exceed 2 max X = {2 * _max_excursion(s.particle1):.4g}")
    sep = _min_separation(s)
    if sep <= 1e-9 * max(s.L, 1e-300):
        problems.append("coincident particles: branch worldlines of particles 1 and 2 meet")
    return problems


def _max_excursion(pair: BranchPair) -> float:
    t = np.linspace(*pair.window, 2001)
    return float(np.max(np.linalg.norm(pair.R.position_fn(t) - np.asarray(pair.R.origin), axis=-1)))
