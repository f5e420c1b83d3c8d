"""Adaptive Gauss-Kronrod quadrature, light-cone singular double integrals
and regulator extrapolation.

The 1D integrator bisects panels of a 10-point Gauss / 21-point Kronrod pair.
Integrands are called once per refinement sweep with every new node at once,
so a callable that maps an ``(N,)`` array to ``(..., N)`` values is evaluated
in a handful of vectorised calls.  Vector-valued integrands share one mesh and
are refined until every component meets the tolerance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

# Kronrod nodes (positive half, descending) and weights; Gauss nodes are the
# odd-indexed Kronrod nodes.
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208292937167,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(21)
GAUSS_WEIGHTS[1:10:2] = _WG
GAUSS_WEIGHTS[11:20:2] = _WG[::-1]


class QuadratureError(RuntimeError):
    """Adaptive refinement could not reach the requested tolerance."""


class ExtrapolationWarning(UserWarning):
    """Regulator samples are non-monotone, so the limit is less trustworthy."""


@dataclass(frozen=True)
class IntegralResult:
    value: float
    abs_error_estimate: float
    evaluations: int

    def __post_init__(self) -> None:
        if not self.abs_error_estimate >= 0:
            raise ValueError("abs_error_estimate must be non-negative")

    def __add__(self, other: "IntegralResult") -> "IntegralResult":
        return IntegralResult(
            self.value + other.value,
            self.abs_error_estimate + other.abs_error_estimate,
            self.evaluations + other.evaluations,
        )

    def scaled(self, factor: float) -> "IntegralResult":
        return IntegralResult(self.value * factor, self.abs_error_estimate * abs(factor), self.evaluations)


ZERO = IntegralResult(0.0, 0.0, 0)

# f(x) -> values, or f(x) -> (values, per-node absolute errors)
Integrand = Callable[[np.ndarray], np.ndarray]


def _rule(f: Callable, left: np.ndarray, right: np.ndarray, with_errors: bool, noise: bool = False):
    """Apply the rule pair on many panels in one call of ``f``.

    Returns the Kronrod values, the rule error, the propagated per-node error
    (zero unless ``with_errors``), the L1 mass and the node count.  With
    ``noise`` the per-node errors are roundoff bounds: a Kronrod-Gauss gap
    they can explain is not counted as rule error.
    """
    mid = 0.5 * (left + right)
    half = 0.5 * (right - left)
    x = (mid[:, None] + half[:, None] * NODES[None, :]).ravel()
    out = f(x)
    if with_errors:
        vals, node_err = out
        node_err = np.asarray(node_err, dtype=float)
    else:
        vals, node_err = out, None
    vals = np.asarray(vals, dtype=float)
    lead = vals.shape[:-1]
    vals = vals.reshape(lead + (left.size, 21))
    kron = np.einsum("...pk,k->...p", vals, KRONROD_WEIGHTS) * half
    gauss = np.einsum("...pk,k->...p", vals, GAUSS_WEIGHTS) * half
    absval = np.einsum("...pk,k->...p", np.abs(vals), KRONROD_WEIGHTS) * np.abs(half)
    err = np.abs(kron - gauss)
    if node_err is not None:
        node_err = node_err.reshape(lead + (left.size, 21))
        nerr = np.einsum("...pk,k->...p", node_err, KRONROD_WEIGHTS) * np.abs(half)
        if noise:
            spread = np.einsum("...pk,k->...p", node_err, KRONROD_WEIGHTS + np.abs(GAUSS_WEIGHTS)) * np.abs(half)
            err = np.maximum(err - 4.0 * spread, 0.0)
    else:
        nerr = np.zeros_like(err)
    return kron, err, nerr, absval, x.size


def _adaptive(
    f: Callable,
    a: float,
    b: float,
    rel_tol: float,
    abs_tol: float,
    points: Sequence[float] | None,
    max_panels: int,
    with_errors: bool = False,
    pooled: bool = False,
    strict: bool = True,
    noise: bool = False,
):
    # strict=False returns the current estimate at the panel limit (inner
    # integrals, whose error then propagates to the outer estimate).
    # pooled: one tolerance for all components, set by the largest of them.
    # Propagated node errors are reported but do not drive refinement, since
    # splitting panels cannot reduce them.
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("integration limits must be finite")
    if a > b:
        raise ValueError("need a <= b")
    edges = [a] + sorted(p for p in (points or ()) if a < p < b) + [b]
    edges = np.unique(np.array(edges, dtype=float))
    if edges.size < 2:
        return 0.0, 0.0, 0
    left, right = edges[:-1], edges[1:]
    kron, err, nerr, absval, nev = _rule(f, left, right, with_errors or noise, noise)
    while True:
        total = kron.sum(axis=-1)
        total_err = err.sum(axis=-1)
        scale = np.abs(total)
        floor = 64.0 * np.finfo(float).eps * absval.sum(axis=-1)
        if pooled:
            scale = np.full_like(scale, scale.max(initial=0.0))
            floor = np.full_like(floor, floor.max(initial=0.0))
        target = np.maximum(np.maximum(abs_tol, rel_tol * scale), floor)
        if np.all(total_err <= target):
            break
        norm_err = err / np.maximum(target, 1e-300)[..., None]
        panel_err = norm_err.max(axis=tuple(range(norm_err.ndim - 1))) if norm_err.ndim > 1 else norm_err
        share = 1.0 / left.size
        split = panel_err > 0.5 * share
        if not split.any():
            split[np.argmax(panel_err)] = True
        width_ok = (right - left) > 64.0 * np.finfo(float).eps * np.maximum(np.abs(left), np.abs(right))
        split &= width_ok
        if not split.any():
            break  # panels at roundoff width; accept the estimate
        if left.size + split.sum() > max_panels:
            if not strict:
                break
            raise QuadratureError(
                f"maximum subdivision ({max_panels} panels) exceeded on [{a}, {b}]: "
                f"error {np.max(total_err):.3g} > target {np.max(target):.3g}"
            )
        mids = 0.5 * (left[split] + right[split])
        new_left = np.concatenate([left[split], mids])
        new_right = np.concatenate([mids, right[split]])
        k2, e2, n2_err, a2, n2 = _rule(f, new_left, new_right, with_errors or noise, noise)
        nev += n2
        keep = ~split
        left = np.concatenate([left[keep], new_left])
        right = np.concatenate([right[keep], new_right])
        kron = np.concatenate([kron[..., keep], k2], axis=-1)
        err = np.concatenate([err[..., keep], e2], axis=-1)
        nerr = np.concatenate([nerr[..., keep], n2_err], axis=-1)
        absval = np.concatenate([absval[..., keep], a2], axis=-1)
    # fixed summation order over the final panel list
    order = np.argsort(left, kind="stable")
    value = kron[..., order].sum(axis=-1)
    return value, (err + nerr)[..., order].sum(axis=-1), nev


def integrate_1d(
    f: Integrand,
    a: float,
    b: float,
    rel_tol: float = 1e-9,
    abs_tol: float = 0.0,
    points: Sequence[float] | None = None,
    max_panels: int = 4000,
) -> IntegralResult:
    """Adaptive integral of a vectorised scalar function over ``[a, b]``.

    ``points`` are known breakpoints (kinks, peaks) inside the interval.
    """
    value, err, nev = _adaptive(f, float(a), float(b), rel_tol, abs_tol, points, max_panels)
    return IntegralResult(float(value), float(err), int(nev))


def integrate_vector(
    f: Callable,
    a: float,
    b: float,
    rel_tol: float = 1e-9,
    abs_tol: float = 0.0,
    points: Sequence[float] | None = None,
    max_panels: int = 4000,
    with_errors: bool = False,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Integrate ``f: (N,) -> (..., N)`` on one shared adaptive mesh.

    Returns component values, component error estimates and the node count.
    """
    return _adaptive(f, float(a), float(b), rel_tol, abs_tol, points, max_panels, with_errors)


def integrate_2d(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    a: float,
    b: float,
    lower: Callable[[np.ndarray], np.ndarray],
    upper: Callable[[np.ndarray], np.ndarray],
    rel_tol: float = 1e-7,
    abs_tol: float = 0.0,
    points: Sequence[float] | None = None,
    ncomp: int | None = None,
    inner_breaks: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Nested integral ``int_a^b dt int_{lower(t)}^{upper(t)} dy f(t, y)``.

    ``f`` receives broadcast arrays of shape ``(n_t, n_y)`` and returns
    ``(n_t, n_y)`` or ``(ncomp, n_t, n_y)`` values.  The inner integral runs
    on a unit variable shared by every outer node of a refinement sweep.
    ``inner_breaks(t)`` may return an ``(n_t, k)`` array of ``y`` values where
    ``f`` is not smooth (NaN for none); the inner range is split there.
    With ``ncomp`` the tolerance is set by the largest component.
    """
    counter = [0]

    def outer(t: np.ndarray):
        lo = np.asarray(lower(t), dtype=float) * np.ones_like(t)
        hi = np.asarray(upper(t), dtype=float) * np.ones_like(t)
        edges = [lo[:, None]]
        if inner_breaks is not None:
            br = np.asarray(inner_breaks(t), dtype=float).reshape(t.size, -1)
            br = np.where(np.isnan(br), lo[:, None], np.clip(br, lo[:, None], hi[:, None]))
            edges.append(np.sort(br, axis=1))
        edges.append(hi[:, None])
        edges = np.concatenate(edges, axis=1)
        starts = edges[:, :-1]
        widths = np.diff(edges, axis=1)

        def inner(sig: np.ndarray) -> np.ndarray:
            total = 0.0
            for k in range(widths.shape[1]):
                y = starts[:, k, None] + widths[:, k, None] * sig[None, :]
                total = total + np.asarray(f(t[:, None], y)) * widths[:, k, None]
            return total

        vals, errs, nev = _adaptive(
            inner, 0.0, 1.0, 0.1 * rel_tol, 0.1 * abs_tol / max(b - a, 1e-300), None, 4000, pooled=True, strict=False
        )
        counter[0] += nev
        return vals, errs

    vals, errs, _ = _adaptive(
        outer, float(a), float(b), rel_tol, abs_tol, points, 4000, with_errors=True, pooled=ncomp is not None
    )
    return np.asarray(vals), np.asarray(errs), counter[0]


# ---------------------------------------------------------------------------
# Regulator extrapolation


def extrapolate_eps(
    samples: Sequence[tuple[float, float]],
    power: float = 2.0,
) -> IntegralResult:
    """Polynomial extrapolation of ``value(eps)`` to ``eps = 0``.

    The model is a polynomial in ``eps**power`` (Neville's scheme, so the
    regulator values need not be geometric).  The error estimate is the
    size of the last correction applied.
    """
    if len(samples) < 3:
        raise ValueError("need at least 3 (eps, value) samples")
    eps = np.array([s[0] for s in samples], dtype=float)
    vals = np.array([s[1] for s in samples], dtype=float)
    if np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ValueError("eps values must be positive and strictly decreasing")
    diffs = np.diff(vals)
    nonzero = diffs[np.abs(diffs) > 1e-14 * np.max(np.abs(vals))]
    if nonzero.size > 1 and np.any(np.sign(nonzero[1:]) != np.sign(nonzero[:-1])):
        warnings.warn("regulator samples are not monotone in eps", ExtrapolationWarning, stacklevel=2)
    x = eps**power
    n = x.size
    table = vals.copy()
    last_correction = math.inf
    diag = [table[-1]]
    for m in range(1, n):
        for i in range(n - m):
            table[i] = (x[i + m] * table[i] - x[i] * table[i + 1]) / (x[i + m] - x[i])
        diag.append(table[0])
    last_correction = abs(diag[-1] - diag[-2])
    return IntegralResult(float(diag[-1]), float(last_correction), n)


# ---------------------------------------------------------------------------
# Light-cone singular double integrals

STRATEGIES = ("parts_log_kernel", "eps_extrapolation", "pv_subtraction")


@dataclass(frozen=True)
class SingularStrategy:
    tag: str = "parts_log_kernel"
    eps_sequence: tuple[float, ...] = tuple(0.1 * 2.0**-k for k in range(7))

    def __post_init__(self) -> None:
        if self.tag not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.tag!r}; choose from {STRATEGIES}")
        seq = np.asarray(self.eps_sequence, dtype=float)
        if seq.size < 3 or np.any(np.diff(seq) >= 0) or np.any(seq < 1e-6):
            raise ValueError("eps_sequence must hold >= 3 strictly decreasing values >= 1e-6")


@dataclass(frozen=True)
class BilinearIntegrand:
    """``g(t, t') = u(t) . w(t')`` with ``u`` on ``window_u`` and ``w`` on ``window_w``.

    ``u`` and ``w`` map ``(N,)`` times to ``(N, d)`` vectors; ``du``/``dw`` are
    their derivatives (needed by the log-kernel rewrite).  ``points_*`` mark
    times where the factors lose smoothness.
    """

    u: Callable[[np.ndarray], np.ndarray]
    w: Callable[[np.ndarray], np.ndarray]
    window_u: tuple[float, float]
    window_w: tuple[float, float]
    du: Callable[[np.ndarray], np.ndarray] | None = None
    dw: Callable[[np.ndarray], np.ndarray] | None = None
    points_u: tuple[float, ...] = ()
    points_w: tuple[float, ...] = ()

    def __call__(self, t: np.ndarray, tp: np.ndarray) -> np.ndarray:
        t, tp = np.broadcast_arrays(np.asarray(t, float), np.asarray(tp, float))
        shape = t.shape
        uu = self.u(t.ravel())
        ww = self.w(tp.ravel())
        return np.einsum("nd,nd->n", uu, ww).reshape(shape)


# r(t, t'); may expose ``d_tp(t, t')`` = dr/dt' for exact pole residues
Separation = Callable[[np.ndarray, np.ndarray], np.ndarray]


def hadamard_bracket(dt, r, eps):
    """``1/(-(dt - i eps)^2 + r^2) + 1/(-(dt + i eps)^2 + r^2)`` as a real number."""
    dt = np.asarray(dt, dtype=float)
    r = np.asarray(r, dtype=float)
    a = r * r - dt * dt + eps * eps
    b = 2.0 * eps * dt
    return 2.0 * a / (a * a + b * b)


def _correlation(
    g: BilinearIntegrand, tau: np.ndarray, derivative: bool, rel_tol: float
) -> tuple[np.ndarray, np.ndarray, int]:
    """``C(tau) = int u(t) . w(t - tau) dt`` (or of the derivatives)."""
    u = g.du if derivative else g.u
    w = g.dw if derivative else g.w
    (a1, b1), (a2, b2) = g.window_u, g.window_w
    lo = np.maximum(a1, a2 + tau)
    hi = np.minimum(b1, b2 + tau)
    width = np.clip(hi - lo, 0.0, None)

    def inner(sig: np.ndarray) -> np.ndarray:
        t = lo[:, None] + width[:, None] * sig[None, :]
        vals = np.einsum("nd,nd->n", u(t.ravel()), w((t - tau[:, None]).ravel()))
        return vals.reshape(t.shape) * width[:, None]

    vals, errs, nev = _adaptive(inner, 0.0, 1.0, rel_tol, 0.0, None, 4000)
    return vals, errs, nev


def _tau_breaks(g: BilinearIntegrand) -> list[float]:
    """Lags where the overlap interval changes which endpoints bind."""
    (a1, b1), (a2, b2) = g.window_u, g.window_w
    pts_u = set(g.points_u) | {a1, b1}
    pts_w = set(g.points_w) | {a2, b2}
    return sorted({pu - pw for pu in pts_u for pw in pts_w})


def _lag_integral(
    g: BilinearIntegrand,
    weight: Callable[[np.ndarray], np.ndarray],
    derivative: bool,
    extra_points: Sequence[float],
    rel_tol: float,
) -> IntegralResult:
    (a1, b1), (a2, b2) = g.window_u, g.window_w
    lo, hi = a1 - b2, b1 - a2
    points = [p for p in _tau_breaks(g) + list(extra_points) if lo < p < hi]
    nev_inner = [0]

    def f(tau: np.ndarray):
        c, ce, n = _correlation(g, tau, derivative, 0.01 * rel_tol)
        nev_inner[0] += n
        wt = weight(tau)
        return c * wt, np.abs(ce * wt)

    val, err, nev = _adaptive(f, lo, hi, rel_tol, 0.0, points, 20000, with_errors=True)
    return IntegralResult(float(val), float(err), int(nev + nev_inner[0]))


def _light_cone_root(
    t: np.ndarray, r: Separation, lo: float, hi: float, sign: float, iters: int = 80
) -> np.ndarray:
    """Root in ``t'`` of ``(t' - t) - sign * r(t, t')`` on ``[lo, hi]`` (NaN if none).

    With a subluminal separation function the left-hand side increases
    strictly, so bisection on the bracket is unambiguous.
    """
    h = lambda tp: (tp - t) - sign * r(t, tp)  # noqa: E731
    a = np.full_like(t, lo)
    b = np.full_like(t, hi)
    ha, hb = h(a), h(b)
    has = (ha < 0) & (hb > 0)
    for _ in range(iters):
        m = 0.5 * (a + b)
        hm = h(m)
        neg = hm < 0
        a = np.where(neg, m, a)
        b = np.where(neg, b, m)
        if np.all((b - a)[has] <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(b[has]))):
            break
    # one secant polish inside the final bracket
    ha, hb = h(a), h(b)
    denom = np.where(hb - ha != 0, hb - ha, 1.0)
    root = np.clip(a - ha * (b - a) / denom, a, b)
    return np.where(has, root, np.nan)


def _pv_integral(g: BilinearIntegrand, r: Separation, rel_tol: float) -> IntegralResult:
    """Principal value of ``int int g(t, t') / (r^2 - (t - t')^2)``.

    For each outer ``t`` the simple poles at ``t' = t -/+ r`` are removed by
    subtracting ``c_k / (t' - t_k)`` and adding back its closed-form integral.
    """
    (a1, b1), (a2, b2) = g.window_u, g.window_w
    span = max(b2 - a2, 1e-300)
    h = 1e-5 * span
    nev_inner = [0]

    def outer(t: np.ndarray):
        roots = [_light_cone_root(t, r, a2, b2, s) for s in (-1.0, 1.0)]
        coeffs = []
        for tk in roots:
            ok = np.isfinite(tk)
            # placeholder pole outside the window keeps 0 / 0 off the nodes
            tks = np.where(ok, tk, b2 + span)
            rk = r(t, tks)
            d_tp = getattr(r, "d_tp", None)
            if d_tp is not None:
                drdt = d_tp(t, tks)
            else:
                # fourth-order central difference
                drdt = (8.0 * (r(t, tks + h) - r(t, tks - h)) - (r(t, tks + 2 * h) - r(t, tks - 2 * h))) / (12.0 * h)
            dF = 2.0 * rk * drdt + 2.0 * (t - tks)
            ck = np.where(ok, g(t, tks) / np.where(dF != 0, dF, 1.0), 0.0)
            coeffs.append((tks, ck, ok))
        q1 = np.where(np.isfinite(roots[0]), roots[0], a2)
        q2 = np.where(np.isfinite(roots[1]), roots[1], b2)
        q2 = np.maximum(q2, q1)
        edges = np.stack([np.full_like(t, a2), q1, q2, np.full_like(t, b2)])  # (4, n)
        lo = edges[:-1]
        width = edges[1:] - edges[:-1]  # (3, n)
        degenerate = width <= 1e-13 * span

        def inner(sig: np.ndarray) -> np.ndarray:
            tp = lo[..., None] + width[..., None] * sig  # (3, n, m)
            tt = np.broadcast_to(t[None, :, None], tp.shape)
            F = r(tt, tp) ** 2 - (tt - tp) ** 2
            near = np.broadcast_to(degenerate[..., None], tp.shape)
            eps = np.finfo(float).eps
            with np.errstate(divide="ignore", invalid="ignore"):
                gv = g(tt, tp)
                val = gv / F
                # F = r^2 - tau^2 loses digits near its zeros
                noise = eps * np.abs(gv) * (r(tt, tp) ** 2 + (tt - tp) ** 2) / F**2
                for tks, ck, _ in coeffs:
                    dist = tp - tks[None, :, None]
                    near = near | (np.abs(dist) < 1e-10 * span)
                    val = val - ck[None, :, None] / dist
                    noise = noise + eps * np.abs(ck[None, :, None]) * (np.abs(tp) + span) / dist**2
            # The subtracted integrand is bounded, so dropping it within 1e-10 of
            # a pole (where the two terms cancel catastrophically) is harmless.
            val = np.where(near, 0.0, val)
            noise = np.where(near, 0.0, noise)
            w = width[..., None]
            return (val * w).sum(axis=0), (noise * w).sum(axis=0)

        vals, errs, n = _adaptive(
            inner, 0.0, 1.0, 0.01 * rel_tol, 0.0, None, 4000, pooled=True, strict=False, noise=True
        )
        nev_inner[0] += n
        for tks, ck, ok in coeffs:
            inside = ok & (tks > a2) & (tks < b2)
            num = np.where(inside, b2 - tks, 1.0)
            den = np.where(inside, tks - a2, 1.0)
            vals = vals + np.where(inside, ck * np.log(num / den), 0.0)
        return vals, errs

    points = sorted(set(_outer_points(g)) | set(_edge_crossings(r, g.window_u, g.window_w)))
    val, err, nev = _adaptive(outer, a1, b1, rel_tol, 0.0, points, 20000, with_errors=True)
    return IntegralResult(float(val), float(err), int(nev + nev_inner[0]))


def _edge_crossings(r: Separation, window_u: tuple[float, float], window_w: tuple[float, float], n: int = 513) -> list[float]:
    """Outer times at which a light-cone pole enters or leaves the inner window.

    The pole residues carry ``log`` factors that are not smooth there.
    """
    (a1, b1), (a2, b2) = window_u, window_w
    grid = np.linspace(a1, b1, n)
    out = []
    for edge in (a2, b2):
        for sign in (-1.0, 1.0):
            h = lambda t, e=edge, s=sign: (e - t) - s * r(t, np.full_like(t, e))  # noqa: E731
            vals = h(grid)
            idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
            if idx.size == 0:
                continue
            lo, hi = grid[idx], grid[idx + 1]
            h_lo = h(lo)
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                same = np.sign(h(mid)) == np.sign(h_lo)
                lo = np.where(same, mid, lo)
                hi = np.where(same, hi, mid)
            out.extend(float(x) for x in 0.5 * (lo + hi) if a1 < x < b1)
    return out


def _outer_points(g: BilinearIntegrand) -> list[float]:
    (a1, b1) = g.window_u
    return [p for p in g.points_u if a1 < p < b1]


def _eps_integral_2d(g: BilinearIntegrand, r: Separation, eps: float, rel_tol: float) -> IntegralResult:
    """``int int g(t, t') bracket(t - t', r, eps)`` with the peaks resolved."""
    (a1, b1), (a2, b2) = g.window_u, g.window_w
    nev_inner = [0]
    offsets = np.array([-16.0, -4.0, -1.0, 0.0, 1.0, 4.0, 16.0]) * eps

    def outer(t: np.ndarray):
        roots = [_light_cone_root(t, r, a2, b2, s) for s in (-1.0, 1.0)]
        cuts = [np.full_like(t, a2), np.full_like(t, b2)]
        for tk in roots:
            base = np.where(np.isfinite(tk), tk, a2)
            cuts.extend(np.clip(base + o, a2, b2) for o in offsets)
        edges = np.sort(np.stack(cuts), axis=0)
        lo = edges[:-1]
        width = edges[1:] - edges[:-1]

        def inner(sig: np.ndarray) -> np.ndarray:
            tp = lo[..., None] + width[..., None] * sig
            tt = np.broadcast_to(t[None, :, None], tp.shape)
            val = g(tt, tp) * hadamard_bracket(tt - tp, r(tt, tp), eps)
            return (val * width[..., None]).sum(axis=0)

        vals, errs, n = _adaptive(inner, 0.0, 1.0, 0.01 * rel_tol, 0.0, None, 4000, pooled=True, strict=False)
        nev_inner[0] += n
        return vals, errs

    val, err, nev = _adaptive(outer, a1, b1, rel_tol, 0.0, _outer_points(g), 20000, with_errors=True)
    return IntegralResult(float(val), float(err), int(nev + nev_inner[0]))


FOUR_PI2 = 4.0 * math.pi**2


def double_integral_lightcone(
    g: BilinearIntegrand,
    separation: Separation | float | None = None,
    strategy: SingularStrategy | str = "parts_log_kernel",
    rel_tol: float = 1e-7,
    eps_scale: float | None = None,
) -> IntegralResult:
    """``lim_{eps -> 0} int int g(t, t') K(t - t', r(t, t'), eps) dt dt'``.

    ``K`` is the symmetrised vacuum kernel including its ``1/(4 pi^2)``
    factor.  ``separation=None`` means ``r = 0`` (dipole form).  A float is a
    constant separation and a callable gives ``r(t, t')``.

    * ``parts_log_kernel`` (``r = 0`` only): integrates by parts twice and
      evaluates ``-(1/2 pi^2) int int du(t) . dw(t') log|t - t'|``.  Needs
      ``u`` and ``w`` to vanish at their window ends.
    * ``eps_extrapolation``: evaluates at each regulator in
      ``strategy.eps_sequence`` (times ``eps_scale``, default the longer
      window) and extrapolates to zero in powers of ``eps``.
    * ``pv_subtraction`` (``r > 0``): principal value across the light-cone
      poles.
    """
    if isinstance(strategy, str):
        strategy = SingularStrategy(strategy)
    r_fn: Separation | None
    if separation is None:
        r_fn = None
    elif callable(separation):
        r_fn = separation
    else:
        const = float(separation)
        if const < 0:
            raise ValueError("separation must be non-negative")
        r_fn = None if const == 0.0 else (lambda t, tp, c=const: np.full(np.broadcast(t, tp).shape, c))

    if strategy.tag == "parts_log_kernel":
        if r_fn is not None:
            raise ValueError("parts_log_kernel applies only to zero separation")
        if g.du is None or g.dw is None:
            raise ValueError("parts_log_kernel needs the derivatives du and dw")
        _check_boundary(g)
        res = _lag_integral(
            g, lambda tau: np.log(np.abs(np.where(tau == 0, 1.0, tau))), True, [0.0], rel_tol
        )
        return res.scaled(-1.0 / (2.0 * math.pi**2))

    if strategy.tag == "pv_subtraction":
        if r_fn is None:
            raise ValueError("pv_subtraction needs a positive separation")
        res = _pv_integral(g, r_fn, rel_tol)
        # bracket -> 2 PV 1/(r^2 - tau^2) as eps -> 0
        return res.scaled(2.0 / FOUR_PI2)

    # eps_extrapolation
    scale = eps_scale
    if scale is None:
        scale = max(g.window_u[1] - g.window_u[0], g.window_w[1] - g.window_w[0])
    samples = []
    nev = 0
    quad_err = 0.0
    for e in strategy.eps_sequence:
        eps = e * scale
        if r_fn is None:
            pts = [k * eps for k in (-16, -4, -1, 0, 1, 4, 16)]
            res = _lag_integral(g, lambda tau, eps=eps: hadamard_bracket(tau, 0.0, eps), False, pts, rel_tol)
        else:
            res = _eps_integral_2d(g, r_fn, eps, rel_tol)
        samples.append((eps, res.value))
        nev += res.evaluations
        quad_err = max(quad_err, res.abs_error_estimate)
    # the regulated kernel differs from its limit at first order in eps
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ExtrapolationWarning)
        ext = extrapolate_eps(samples, power=1.0)
    for w in caught:
        warnings.warn(w.message, w.category, stacklevel=2)
    err = ext.abs_error_estimate + quad_err * _noise_gain([e for e, _ in samples])
    return IntegralResult(ext.value / FOUR_PI2, err / FOUR_PI2, nev)


def _noise_gain(eps: Sequence[float]) -> float:
    """Sum of |Lagrange weights at eps = 0|: how much sample noise the limit amplifies."""
    x = np.asarray(eps, dtype=float)
    gain = 0.0
    for i in range(x.size):
        others = np.delete(x, i)
        gain += abs(np.prod(others / (others - x[i])))
    return float(gain)


def _check_boundary(g: BilinearIntegrand) -> None:
    (a1, b1), (a2, b2) = g.window_u, g.window_w
    ends_u = g.u(np.array([a1, b1]))
    ends_w = g.w(np.array([a2, b2]))
    mid_u = np.max(np.abs(g.u(np.linspace(a1, b1, 33))))
    mid_w = np.max(np.abs(g.w(np.linspace(a2, b2, 33))))
    if np.max(np.abs(ends_u)) > 1e-12 * max(mid_u, 1e-300) or np.max(np.abs(ends_w)) > 1e-12 * max(mid_w, 1e-300):
        raise ValueError("parts_log_kernel needs integrand factors that vanish at the window ends")
