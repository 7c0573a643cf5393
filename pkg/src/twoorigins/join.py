"""Numeric gluing of interval charts on the real line.

The pipeline: a smooth plateau bump built from complementary smoothsteps, an
explicit glue of the identity into a given transition diffeomorphism via
quadrature of gamma = alpha + lambda*beta, the join of two overlapping
charts, and the collapse of a finite chain-like atlas to a single chart with
one recorded reparametrization per original chart. Certification is by
one-sided Richardson derivative estimates at the seam points.

Everything here is floating point; exactness claims are therefore about
construction (snapped grid values, identity short-circuits), and smoothness
claims are certificates with stated tolerances, not proofs.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import DomainError, GlueInfeasible, NotJoinable

#: Flat per-order tolerances used when the caller does not override them.
TOL_SCHEDULE = (1e-6, 1e-5, 1e-3, 1e-2)
VERIFY_ORDER_CAP = 4
SIMPSON_TOL = 1e-10
#: Adaptive Simpson recursion depth; 2**20 cells at the deepest.
_SIMPSON_DEPTH = 20

_IDENTITY_TOL = 1e-12
_ENDPOINT_TOL = 1e-9


# ---------------------------------------------------------------------------
# quadrature

def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = SIMPSON_TOL) -> float:
    """Adaptive composite Simpson integral of f over [a, b].

    Classic recursion with the Richardson correction term; subdivision stops
    when the two-panel refinement agrees within the local tolerance budget or
    the depth cap is reached.
    """
    a, b = float(a), float(b)
    if a == b:
        return 0.0
    if a > b:
        return -adaptive_simpson(f, b, a, tol)

    def simp(l, r, fl, fm, fr):
        return (r - l) / 6.0 * (fl + 4.0 * fm + fr)

    def rec(l, r, fl, fm, fr, whole, budget, depth):
        m = 0.5 * (l + r)
        flm = f(0.5 * (l + m))
        frm = f(0.5 * (m + r))
        left = simp(l, m, fl, flm, fm)
        right = simp(m, r, fm, frm, fr)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * budget:
            return left + right + (left + right - whole) / 15.0
        return (rec(l, m, fl, flm, fm, left, budget / 2.0, depth - 1)
                + rec(m, r, fm, frm, fr, right, budget / 2.0, depth - 1))

    fa, fm_, fb = f(a), f(0.5 * (a + b)), f(b)
    return rec(a, b, fa, fm_, fb, simp(a, b, fa, fm_, fb), tol, _SIMPSON_DEPTH)


_PANEL_OFFSETS = np.arange(9) / 8.0
_PANEL_WEIGHTS = np.array([1.0, 4.0, 2.0, 4.0, 2.0, 4.0, 2.0, 4.0, 1.0]) / 24.0


def _panel_quad(f: Callable[[float], float], a: float, b: float) -> float:
    """Fixed 4-panel composite Simpson on [a, b] (scalar path)."""
    if a == b:
        return 0.0
    h = b - a
    acc = 0.0
    for off, w in zip(_PANEL_OFFSETS, _PANEL_WEIGHTS):
        acc += w * f(a + h * off)
    return acc * h


# ---------------------------------------------------------------------------
# bumps

def _smoothstep(t: float) -> float:
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    qa = math.exp(-1.0 / t)
    qb = math.exp(-1.0 / (1.0 - t))
    return qa / (qa + qb)


def _smoothstep_arr(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out[t >= 1.0] = 1.0
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    qa = np.exp(-1.0 / tm)
    qb = np.exp(-1.0 / (1.0 - tm))
    out[mid] = qa / (qa + qb)
    return out


class _Plateau:
    """Smooth plateau: 0 outside (l0, r0), exactly 1 on [l1, r1].

    Built from the complementary smoothstep s(t) = q(t)/(q(t)+q(1-t)),
    q(t) = exp(-1/t), which satisfies s(t) + s(1-t) = 1. That identity makes
    cross-fades of two plateaus sum to exactly 1, so gluing the identity to
    itself reproduces the identity with no quadrature wobble.
    """

    __slots__ = ("l0", "l1", "r1", "r0")

    def __init__(self, l0, l1, r1, r0):
        l0, l1, r1, r0 = float(l0), float(l1), float(r1), float(r0)
        if not (l0 < l1 <= r1 < r0):
            raise DomainError(
                f"plateau needs l0 < l1 <= r1 < r0, got ({l0}, {l1}, {r1}, {r0})"
            )
        self.l0, self.l1, self.r1, self.r0 = l0, l1, r1, r0

    def __call__(self, x: float) -> float:
        x = float(x)
        return (_smoothstep((x - self.l0) / (self.l1 - self.l0))
                * _smoothstep((self.r0 - x) / (self.r0 - self.r1)))

    def arr(self, xs: np.ndarray) -> np.ndarray:
        return (_smoothstep_arr((xs - self.l0) / (self.l1 - self.l0))
                * _smoothstep_arr((self.r0 - xs) / (self.r0 - self.r1)))


def bump_plateau(l0, l1, r1, r0) -> _Plateau:
    """A C-infinity function that is 1 on [l1, r1] and 0 outside (l0, r0)."""
    return _Plateau(l0, l1, r1, r0)


# ---------------------------------------------------------------------------
# map-like objects: callable, .domain, .seams

@dataclass(frozen=True)
class IdentityMap:
    """The identity on an open interval."""

    domain: tuple

    @property
    def seams(self) -> tuple:
        return ()

    def __call__(self, x: float) -> float:
        return float(x)


@dataclass(frozen=True)
class AffineMap:
    """x -> a*x + b with a != 0; exact up to float arithmetic."""

    a: float
    b: float
    domain: tuple = (-math.inf, math.inf)

    def __post_init__(self):
        if float(self.a) == 0.0:
            raise DomainError("affine map needs a nonzero slope")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))

    @property
    def seams(self) -> tuple:
        return ()

    def __call__(self, x: float) -> float:
        return self.a * float(x) + self.b

    def inverse(self) -> "AffineMap":
        lo, hi = self.domain
        img = sorted((self(lo), self(hi))) if math.isfinite(lo) and math.isfinite(hi) \
            else (-math.inf, math.inf)
        return AffineMap(1.0 / self.a, -self.b / self.a, tuple(img))


@dataclass(frozen=True, eq=False)
class ComposedMap:
    """outer after inner, with an explicit seam list on inner's domain."""

    outer: Callable
    inner: Callable
    seams: tuple = ()

    @property
    def domain(self) -> tuple:
        return self.inner.domain

    def __call__(self, x: float) -> float:
        return float(self.outer(self.inner(x)))


@dataclass(frozen=True, eq=False)
class PiecewiseMonotone:
    """Strictly increasing map assembled from pieces on a breakpoint grid.

    pieces[i] covers [breakpoints[i], breakpoints[i+1]]; continuity at the
    interior breakpoints is validated at construction, strict monotonicity is
    spot-checked on a sample grid. The seams are the interior breakpoints
    plus any extras the builder knows about (e.g. images of seams of an
    ingredient map).
    """

    breakpoints: tuple
    pieces: tuple
    extra_seams: tuple = ()

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        if len(bps) < 2 or len(self.pieces) != len(bps) - 1:
            raise DomainError("need n+1 breakpoints for n pieces")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise DomainError("breakpoints must strictly increase")
        scale = max(1.0, abs(bps[0]), abs(bps[-1]))
        for i in range(1, len(bps) - 1):
            left = float(self.pieces[i - 1](bps[i]))
            right = float(self.pieces[i](bps[i]))
            if abs(left - right) > 1e-8 * scale:
                raise DomainError(
                    f"pieces disagree at breakpoint {bps[i]}: {left} vs {right}"
                )
        prev = None
        for i, piece in enumerate(self.pieces):
            for t in np.linspace(bps[i], bps[i + 1], 9):
                val = float(piece(t))
                if prev is not None and val <= prev - 1e-12 * scale:
                    raise DomainError("assembled map is not increasing")
                prev = max(val, prev) if prev is not None else val

    @property
    def domain(self) -> tuple:
        return (self.breakpoints[0], self.breakpoints[-1])

    @property
    def seams(self) -> tuple:
        interior = self.breakpoints[1:-1]
        return tuple(sorted(set(interior) | set(self.extra_seams)))

    def __call__(self, x: float) -> float:
        x = float(x)
        i = bisect_right(self.breakpoints, x) - 1
        i = min(max(i, 0), len(self.pieces) - 1)
        return float(self.pieces[i](x))


# ---------------------------------------------------------------------------
# numeric diffeomorphisms

@dataclass(frozen=True)
class GlueReport:
    """Construction record of one glue: the fitted bump mass and residuals."""

    eps: float
    lam: float
    integral_residual: float
    presnap_id: float
    presnap_g: float
    cells: int

    def to_json(self) -> dict:
        return {
            "eps": self.eps, "lambda": self.lam,
            "integral_residual": self.integral_residual,
            "presnap_id": self.presnap_id, "presnap_g": self.presnap_g,
            "cells": self.cells,
        }


@dataclass(frozen=True, eq=False)
class NumericDiffeo:
    """Monotone map on an open interval, carried by samples.

    The monotone piecewise-cubic interpolant of the samples is the fallback
    evaluator; when the exact rule behind the samples is known it rides along
    as `underlying` and takes priority (interpolation then only documents the
    map). seams lists interior points where smoothness is merely piecewise.
    """

    xs: tuple
    ys: tuple
    underlying: Optional[Callable] = None
    seams: tuple = ()
    glue: Optional[GlueReport] = None

    def __post_init__(self):
        xs = tuple(float(v) for v in self.xs)
        ys = tuple(float(v) for v in self.ys)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        if len(xs) != len(ys) or len(xs) < 4:
            raise DomainError("need at least 4 samples")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise DomainError("x samples must strictly increase")
        up = ys[1] > ys[0]
        pairs = zip(ys, ys[1:]) if up else zip(ys[1:], ys)
        if any(b <= a for a, b in pairs):
            raise DomainError("y samples must be strictly monotone")
        object.__setattr__(self, "_increasing", up)
        object.__setattr__(self, "_pchip", PchipInterpolator(np.array(xs), np.array(ys)))
        object.__setattr__(self, "_deriv", None)

    @classmethod
    def from_function(cls, fn: Callable[[float], float], domain, n: int = 256,
                      seams: tuple = ()) -> "NumericDiffeo":
        a, b = float(domain[0]), float(domain[1])
        if not (a < b and math.isfinite(a) and math.isfinite(b)):
            raise DomainError(f"domain must be a finite interval, got ({a}, {b})")
        xs = np.linspace(a, b, max(int(n), 4) + 1)
        ys = [float(fn(x)) for x in xs]
        return cls(tuple(xs), tuple(ys), underlying=fn, seams=tuple(seams))

    @property
    def domain(self) -> tuple:
        return (self.xs[0], self.xs[-1])

    @property
    def increasing(self) -> bool:
        return self._increasing

    def __call__(self, x) -> float:
        if self.underlying is not None:
            return float(self.underlying(float(x)))
        return float(self._pchip(float(x)))

    def _stencil_h(self, x: float) -> float:
        a, b = self.domain
        h0 = 1e-5 * (b - a)
        return max(min(h0, (x - a) / 2.5, (b - x) / 2.5), 1e-12 * (b - a))

    def derivative_at(self, x: float) -> float:
        """First derivative: 4th-order central stencil on the exact rule,
        interpolant derivative otherwise."""
        x = float(x)
        if self.underlying is None:
            d = self._deriv
            if d is None:
                d = self._pchip.derivative()
                object.__setattr__(self, "_deriv", d)
            return float(d(x))
        f, h = self.underlying, self._stencil_h(x)
        return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)

    def derivative_grid(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized derivative_at; falls back to a scalar loop when the
        exact rule rejects array input."""
        xs = np.asarray(xs, dtype=float)
        if self.underlying is None:
            d = self._deriv
            if d is None:
                d = self._pchip.derivative()
                object.__setattr__(self, "_deriv", d)
            return np.asarray(d(xs), dtype=float)
        a, b = self.domain
        h = np.maximum(np.minimum.reduce([
            np.full_like(xs, 1e-5 * (b - a)), (xs - a) / 2.5, (b - xs) / 2.5,
        ]), 1e-12 * (b - a))
        f = self.underlying
        try:
            vals = (-f(xs + 2 * h) + 8 * f(xs + h) - 8 * f(xs - h) + f(xs - 2 * h)) / (12 * h)
            vals = np.asarray(vals, dtype=float)
            if vals.shape != xs.shape:
                raise ValueError
            return vals
        except (TypeError, ValueError):
            return np.array([self.derivative_at(x) for x in xs])

    def inverse(self) -> "NumericDiffeo":
        """Functional inverse: sample swap plus root-finding on the forward map."""
        xs, ys = np.array(self.xs), np.array(self.ys)
        if not self.increasing:
            xs, ys = xs[::-1], ys[::-1]
        fwd = self  # __call__ routes through underlying or interpolant
        y_lo, y_hi = ys[0], ys[-1]

        def inv(y: float) -> float:
            y = float(min(max(y, y_lo), y_hi))
            i = int(np.searchsorted(ys, y))
            i = min(max(i, 1), len(ys) - 1)
            lo, hi = xs[i - 1], xs[i]
            flo, fhi = fwd(lo) - y, fwd(hi) - y
            if flo == 0.0:
                return float(lo)
            if fhi == 0.0:
                return float(hi)
            if flo * fhi > 0:
                # sample grid and underlying disagree slightly; widen once
                lo = xs[max(i - 2, 0)]
                hi = xs[min(i + 1, len(xs) - 1)]
            return float(brentq(lambda t: fwd(t) - y, lo, hi,
                                xtol=1e-15, rtol=8.9e-16, maxiter=200))

        inv_seams = tuple(sorted(float(self(s)) for s in self.seams))
        return NumericDiffeo(tuple(map(float, ys)), tuple(map(float, xs)),
                             underlying=inv, seams=inv_seams)

    def is_identity(self, tol: float = _IDENTITY_TOL) -> bool:
        scale = max(1.0, abs(self.xs[0]), abs(self.xs[-1]))
        return all(abs(y - x) <= tol * scale for x, y in zip(self.xs, self.ys))

    def to_json(self) -> dict:
        return {"samples": [[x, y] for x, y in zip(self.xs, self.ys)],
                "seams": list(self.seams)}

    @classmethod
    def from_json(cls, d: dict) -> "NumericDiffeo":
        try:
            pts = [(float(x), float(y)) for x, y in d["samples"]]
            seams = tuple(float(s) for s in d.get("seams", ()))
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed samples JSON: {exc}") from exc
        return cls(tuple(x for x, _ in pts), tuple(y for _, y in pts), seams=seams)


# ---------------------------------------------------------------------------
# the glue

def glue_id_and_diff(g: NumericDiffeo, eps, n: int = 4096) -> NumericDiffeo:
    """Glue the identity into g across the interval g lives on.

    Returns p with p(x) = x on (b, b+eps], p(x) = g(x) on [c-eps, c), strictly
    increasing throughout, built as b + integral of gamma where
    gamma = F + R*g' + lambda*beta: F is a plateau equal to 1 near b, R a
    plateau equal to 1 near c, beta bridges the middle, and lambda is fitted
    so the cumulative quadrature lands exactly on g(c-eps) at the right seam.
    lambda <= 0 means eps is too large for this g: GlueInfeasible.
    """
    if not isinstance(g, NumericDiffeo):
        raise DomainError("glue needs a NumericDiffeo transition")
    if not g.increasing:
        raise DomainError("glue needs an orientation-preserving transition")
    b, c = g.domain
    span = c - b
    eps = float(eps)
    if not (0.0 < eps < span / 4.0):
        raise DomainError(f"eps must lie in (0, {span / 4.0}), got {eps}")
    scale = max(1.0, abs(b), abs(c))
    if abs(g.ys[0] - b) > _ENDPOINT_TOL * scale or abs(g.ys[-1] - c) > _ENDPOINT_TOL * scale:
        raise DomainError("transition must map the interval onto itself")

    F = bump_plateau(b - eps, b, b + eps, b + 2 * eps)
    R = bump_plateau(c - 2 * eps, c - eps, c, c + eps)
    beta = bump_plateau(b + eps, b + 2 * eps, c - 2 * eps, c - eps)

    xs = np.union1d(np.linspace(b, c, max(int(n), 16) + 1),
                    np.array([b + eps, c - eps]))
    widths = np.diff(xs)
    nodes = (xs[:-1, None] + widths[:, None] * _PANEL_OFFSETS[None, :]).ravel()

    r_nodes = R.arr(nodes)
    gp_nodes = np.zeros_like(nodes)
    mask = r_nodes > 0.0
    if mask.any():
        gp_nodes[mask] = g.derivative_grid(nodes[mask])
        if np.any(gp_nodes[mask] <= 0.0):
            raise DomainError("transition derivative is not positive on the grid")
    alpha_nodes = F.arr(nodes) + r_nodes * gp_nodes
    beta_nodes = beta.arr(nodes)

    def cumulate(vals: np.ndarray) -> np.ndarray:
        cells = (vals.reshape(-1, 9) @ _PANEL_WEIGHTS) * widths
        return np.concatenate(([0.0], np.cumsum(cells)))

    i_alpha = cumulate(alpha_nodes)
    i_beta = cumulate(beta_nodes)

    i_fit = int(np.searchsorted(xs, c - eps))
    target = float(g(c - eps))
    numerator = target - b - i_alpha[i_fit]
    mass = float(i_beta[i_fit])
    lam = numerator / mass
    if lam <= 0.0:
        raise GlueInfeasible(
            f"no positive bump mass at eps={eps}: the transition leaves "
            f"too little room ({numerator:.3e})", eps=eps, mass=numerator)

    ys = b + i_alpha + lam * i_beta
    left = xs <= b + eps
    right = xs >= c - eps
    g_right = np.array([float(g(x)) for x in xs[right]])
    presnap_id = float(np.max(np.abs(ys[left] - xs[left])))
    presnap_g = float(np.max(np.abs(ys[right] - g_right)))
    ys[left] = xs[left]
    ys[right] = g_right
    integral_residual = abs((b + i_alpha[-1] + lam * i_beta[-1]) - c) / span

    report = GlueReport(eps=eps, lam=float(lam), integral_residual=float(integral_residual),
                        presnap_id=presnap_id, presnap_g=presnap_g, cells=len(widths))

    xs_t = tuple(map(float, xs))
    ys_t = tuple(map(float, ys))
    lo_seam, hi_seam = b + eps, c - eps

    def gamma(x: float) -> float:
        r = R(x)
        gp = g.derivative_at(x) if r > 0.0 else 0.0
        return F(x) + r * gp + lam * beta(x)

    def p_call(x: float) -> float:
        x = float(x)
        if x <= lo_seam:
            return x
        if x >= hi_seam:
            return float(g(x))
        i = bisect_right(xs_t, x) - 1
        return ys_t[i] + _panel_quad(gamma, xs_t[i], x)

    return NumericDiffeo(xs_t, ys_t, underlying=p_call,
                         seams=(lo_seam, hi_seam), glue=report)


def glue_auto(g: NumericDiffeo, n: int = 4096, retries: int = 6) -> NumericDiffeo:
    """Glue with automatic eps: start at an eighth of the span, halve on
    infeasibility, give up after the retry budget."""
    b, c = g.domain
    eps = (c - b) / 8.0
    last = None
    for _ in range(retries + 1):
        try:
            return glue_id_and_diff(g, eps, n=n)
        except GlueInfeasible as exc:
            last = exc
            eps /= 2.0
    raise last


# ---------------------------------------------------------------------------
# charts and chains

@dataclass(frozen=True)
class IntervalChart:
    """A chart with an abstract domain and an open bounded image interval.

    The optional map records a concrete coordinate rule when the abstract
    domain is realized inside R ("identity", an AffineMap, or a
    NumericDiffeo); transitions can be derived from concrete maps, but are
    usually supplied explicitly.
    """

    label: str
    image: tuple
    map: object = None

    def __post_init__(self):
        a, c = float(self.image[0]), float(self.image[1])
        if not (math.isfinite(a) and math.isfinite(c) and a < c):
            raise DomainError(f"image must be a bounded interval, got ({a}, {c})")
        object.__setattr__(self, "image", (a, c))
        if self.map is not None and self.map != "identity" \
                and not isinstance(self.map, (AffineMap, NumericDiffeo)):
            raise DomainError("chart map must be 'identity', affine, or numeric")


@dataclass(frozen=True)
class ChainAtlas:
    """Finite chain of interval charts with explicit overlap transitions.

    transitions[i] is the change of coordinates between charts i and i+1 on
    the shared numeric overlap (a_{i+1}, b_i): an increasing self-map of that
    interval fixing its ends. Validation covers the combinatorial conditions:
    consecutive images overlap, non-consecutive images are disjoint
    (endpoints interleave a_i < b_{i-1} < a_{i+1} < b_i), and each transition
    lives exactly on its overlap.
    """

    charts: tuple
    transitions: tuple

    def __post_init__(self):
        charts = tuple(self.charts)
        transitions = tuple(self.transitions)
        object.__setattr__(self, "charts", charts)
        object.__setattr__(self, "transitions", transitions)
        m = len(charts)
        if m < 2:
            raise NotJoinable("a chain needs at least two charts")
        if len(transitions) != m - 1:
            raise NotJoinable(f"{m} charts need {m - 1} transitions")
        imgs = [ch.image for ch in charts]
        for i in range(m - 1):
            a2, b2 = imgs[i + 1]
            a1, b1 = imgs[i]
            if not (a1 < a2 < b1 < b2):
                raise NotJoinable(
                    f"images of charts {i} and {i + 1} do not interleave: "
                    f"({a1}, {b1}) then ({a2}, {b2})"
                )
        for i in range(1, m - 1):
            if not (imgs[i - 1][1] < imgs[i + 1][0]):
                raise NotJoinable(
                    f"charts {i - 1} and {i + 1} overlap; triple overlaps "
                    "are not allowed"
                )
        for i, g in enumerate(transitions):
            if not isinstance(g, NumericDiffeo):
                raise NotJoinable(f"transition {i} is not a numeric map")
            want = (imgs[i + 1][0], imgs[i][1])
            scale = max(1.0, abs(want[0]), abs(want[1]))
            if abs(g.domain[0] - want[0]) > _ENDPOINT_TOL * scale \
                    or abs(g.domain[1] - want[1]) > _ENDPOINT_TOL * scale:
                raise NotJoinable(
                    f"transition {i} lives on {g.domain}, expected the "
                    f"overlap {want}"
                )
            if not g.increasing:
                raise NotJoinable(f"transition {i} must preserve orientation")
            if abs(g.ys[0] - want[0]) > _ENDPOINT_TOL * scale \
                    or abs(g.ys[-1] - want[1]) > _ENDPOINT_TOL * scale:
                raise NotJoinable(f"transition {i} does not fix the overlap ends")


# ---------------------------------------------------------------------------
# certification

@dataclass(frozen=True)
class SmoothCert:
    """Certificate from verify_ck_numeric.

    residuals[j-1] is the worst scaled mismatch of one-sided order-j
    derivative estimates across the seams (0.0 when there are none);
    min_slope the smallest first-derivative estimate seen anywhere.
    """

    order: int
    residuals: tuple
    passed: bool
    grid: tuple
    min_slope: float
    tolerances: tuple

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "residuals": list(self.residuals),
            "passed": bool(self.passed),
            "min_slope": self.min_slope,
            "tolerances": list(self.tolerances),
            "seams": [x for x in self.grid],
        }


_BINOM = [[math.comb(j, i) for i in range(j + 1)] for j in range(VERIFY_ORDER_CAP + 1)]


def _one_sided_deriv(f: Callable[[float], float], s: float, j: int,
                     sign: float, h0: float) -> tuple:
    """Richardson-extrapolated one-sided j-th derivative of f at s.

    Forward differences for sign=+1, backward for sign=-1; Neville tableau
    over halved steps, returning the entry with the best internal error
    estimate (value, err).
    """
    rows = []
    best = None
    best_err = math.inf
    h = h0
    for level in range(12):
        acc = 0.0
        for i in range(j + 1):
            acc += (-1) ** (j - i) * _BINOM[j][i] * f(s + sign * i * h)
        q = acc / (sign * h) ** j
        row = [q]
        for m in range(1, level + 1):
            fac = 2.0 ** m
            row.append((fac * row[m - 1] - rows[-1][m - 1]) / (fac - 1.0))
            errt = max(abs(row[m] - row[m - 1]), abs(row[m] - rows[-1][m - 1]))
            if errt <= best_err:
                best_err = errt
                best = row[m]
        if best is None:
            best = q
        rows.append(row)
        h /= 2.0
    return best, best_err


def verify_ck_numeric(map_obj, k: int, tol=None, grid_n: int = 32) -> SmoothCert:
    """Numeric order-k certificate for a monotone map with seams.

    At every interior seam the one-sided derivative estimates of orders 1..k
    must agree within the per-order tolerance (relative to max(1, |value|)),
    and no first-derivative estimate anywhere (seams or the dyadic interior
    grid) may be significantly negative: slope > -tol_1, which deliberately
    admits maps with a vanishing one-sided slope at a seam. Failures are
    reported, never raised.
    """
    if not isinstance(k, int) or not (1 <= k <= VERIFY_ORDER_CAP):
        raise DomainError(
            f"numeric certification is capped at order {VERIFY_ORDER_CAP}, got {k!r}"
        )
    if tol is None:
        tols = TOL_SCHEDULE[:k]
    elif isinstance(tol, (int, float)):
        tols = tuple(float(tol) for _ in range(k))
    else:
        tols = tuple(float(t) for t in tol)
        if len(tols) != k:
            raise DomainError(f"need {k} tolerances, got {len(tols)}")
    if any(t <= 0.0 for t in tols):
        raise DomainError(f"tolerances must be positive, got {tols}")

    lo, hi = map_obj.domain
    span = hi - lo
    seams = sorted(s for s in getattr(map_obj, "seams", ()) if lo < s < hi)

    min_slope = math.inf
    # grid slopes, nudged off any seam
    grid_pts = []
    for i in range(1, grid_n):
        x = lo + span * i / grid_n
        if any(abs(x - s) < span / (4 * grid_n) for s in seams):
            x += span / (2 * grid_n)
            if not (lo < x < hi):
                continue
        grid_pts.append(x)
    for x in grid_pts:
        h = min(1e-5 * span, (x - lo) / 2.5, (hi - x) / 2.5)
        f = map_obj
        slope = (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)
        min_slope = min(min_slope, slope)

    residuals = [0.0] * k
    bounds = [lo] + seams + [hi]
    for idx, s in enumerate(seams):
        gap_left = s - bounds[idx]
        gap_right = bounds[idx + 2] - s
        for j in range(1, k + 1):
            h_l = 0.8 * gap_left / max(j, 1)
            h_r = 0.8 * gap_right / max(j, 1)
            left, _ = _one_sided_deriv(map_obj, s, j, -1.0, h_l)
            right, _ = _one_sided_deriv(map_obj, s, j, +1.0, h_r)
            scale = max(1.0, abs(left), abs(right))
            residuals[j - 1] = max(residuals[j - 1], abs(left - right) / scale)
            if j == 1:
                min_slope = min(min_slope, left, right)

    if min_slope is math.inf:
        min_slope = 0.0

    passed = all(r <= t for r, t in zip(residuals, tols)) and min_slope > -tols[0]
    return SmoothCert(order=k, residuals=tuple(residuals), passed=passed,
                      grid=tuple(seams), min_slope=float(min_slope),
                      tolerances=tols)


# ---------------------------------------------------------------------------
# joining

@dataclass(frozen=True, eq=False)
class JoinResult:
    """A join of two charts: the covering chart and both reparametrizations.

    trans_u is the new chart read against the left chart's coordinates
    (identity off the overlap's right part), trans_v against the right
    chart's (identity off the overlap's left part).
    """

    chart: IntervalChart
    trans_u: object
    trans_v: object
    cert_u: SmoothCert
    cert_v: SmoothCert
    glue: Optional[GlueReport]

    @property
    def passed(self) -> bool:
        return self.cert_u.passed and self.cert_v.passed


def join_charts(U: IntervalChart, V: IntervalChart, g: NumericDiffeo,
                k: int = 2, n: int = 4096, tol=None) -> JoinResult:
    """Join two overlapping charts along the transition g.

    Interleaving a < b < c < d of the images is required; g must be an
    increasing self-map of the overlap (b, c) fixing its ends. The result
    covers (a, d) and agrees with U off the right part of the overlap and
    with V off the left part; both reparametrizations carry seam lists and
    order-k certificates.
    """
    a, c = U.image
    b, d = V.image
    if not (a < b < c < d):
        raise NotJoinable(
            f"images must interleave a < b < c < d, got a={a}, b={b}, c={c}, d={d}"
        )
    scale = max(1.0, abs(b), abs(c))
    if abs(g.domain[0] - b) > _ENDPOINT_TOL * scale \
            or abs(g.domain[1] - c) > _ENDPOINT_TOL * scale:
        raise NotJoinable(f"transition lives on {g.domain}, expected ({b}, {c})")
    if not g.increasing:
        raise NotJoinable("transition must preserve orientation")
    if abs(g.ys[0] - b) > _ENDPOINT_TOL * scale or abs(g.ys[-1] - c) > _ENDPOINT_TOL * scale:
        raise NotJoinable("transition does not fix the overlap ends")

    label = f"{U.label}|{V.label}"
    chart = IntervalChart(label, (a, d))
    if g.is_identity():
        P = IdentityMap((a, c))
        Q = IdentityMap((b, d))
        cert_u = verify_ck_numeric(P, k, tol)
        cert_v = verify_ck_numeric(Q, k, tol)
        return JoinResult(chart, P, Q, cert_u, cert_v, None)

    p = glue_auto(g, n=n)
    eps = p.glue.eps
    P = PiecewiseMonotone((a, b + eps, c - eps, c),
                          (IdentityMap((a, b + eps)), p, g))
    y1 = float(g(b + eps))
    y2 = float(g(c - eps))
    q_mid = ComposedMap(p, g.inverse(), seams=(y1, y2))
    Q = PiecewiseMonotone((b, y2, d), (q_mid, IdentityMap((y2, d))),
                          extra_seams=(y1,))
    cert_u = verify_ck_numeric(P, k, tol)
    cert_v = verify_ck_numeric(Q, k, tol)
    return JoinResult(chart, P, Q, cert_u, cert_v, p.glue)


# ---------------------------------------------------------------------------
# chain collapse

@dataclass(frozen=True, eq=False)
class CollapseResult:
    """Outcome of collapsing a chain: one chart, one transition per input
    chart (r_i reads the collapsed chart against chart i's coordinates), an
    aggregated certificate plus the per-chart ones, and the join order."""

    chart: IntervalChart
    transitions: tuple
    cert: SmoothCert
    certs: tuple
    steps: tuple

    @property
    def passed(self) -> bool:
        return self.cert.passed


def _probe_identity(r, interval, label: str) -> None:
    lo, hi = interval
    scale = max(1.0, abs(lo), abs(hi))
    for t in np.linspace(lo, hi, 7)[1:-1]:
        if abs(float(r(t)) - t) > 1e-9 * scale:
            raise NotJoinable(
                f"stabilization violated at {label}: expected the already-"
                f"joined chart to be the identity on the overlap"
            )


def collapse_chain(atlas: ChainAtlas, k: int = 2, n: int = 4096,
                   tol=None) -> CollapseResult:
    """Collapse a chain-like atlas to a single chart, middle-out.

    Starts at the middle pair and alternates joining one chart on the right
    and one on the left, so already-joined regions are never touched again
    (the strict no-triple-overlap condition guarantees each join's
    modification strip stays clear of earlier charts). Per-chart transitions
    r_i into the final chart are accumulated; each r_i is wrapped at most
    once per neighbor and then stays bit-stable.
    """
    charts = atlas.charts
    transitions = atlas.transitions
    m = len(charts)
    imgs = [ch.image for ch in charts]

    lo = (m - 1) // 2
    hi = lo + 1
    steps = []

    def attempt(i, U, V, g):
        try:
            return join_charts(U, V, g, k=k, n=n, tol=tol)
        except (NotJoinable, GlueInfeasible, DomainError) as exc:
            exc.args = (f"joining charts {i} and {i + 1}: {exc.args[0]}",) + exc.args[1:]
            raise

    res = attempt(lo, charts[lo], charts[hi], transitions[lo])
    r = {lo: res.trans_u, hi: res.trans_v}
    block = (imgs[lo][0], imgs[hi][1])
    steps.append((lo, hi))

    while lo > 0 or hi < m - 1:
        if hi < m - 1:
            j = hi + 1
            overlap = (imgs[j][0], imgs[hi][1])
            _probe_identity(r[hi], overlap, f"charts {hi}/{j}")
            res = attempt(hi, IntervalChart("block", block), charts[j], transitions[hi])
            r[j] = res.trans_v
            r[hi] = ComposedMap(res.trans_u, r[hi],
                                seams=tuple(sorted(set(r[hi].seams)
                                                   | set(res.trans_u.seams))))
            block = (block[0], imgs[j][1])
            hi = j
            steps.append((hi - 1, hi))
        if lo > 0:
            j = lo - 1
            overlap = (imgs[lo][0], imgs[j][1])
            _probe_identity(r[lo], overlap, f"charts {j}/{lo}")
            res = attempt(j, charts[j], IntervalChart("block", block), transitions[j])
            r[j] = res.trans_u
            r[lo] = ComposedMap(res.trans_v, r[lo],
                                seams=tuple(sorted(set(r[lo].seams)
                                                   | set(res.trans_v.seams))))
            block = (imgs[j][0], block[1])
            lo = j
            steps.append((lo, lo + 1))

    certs = tuple(verify_ck_numeric(r[i], k, tol) for i in range(m))
    if tol is None:
        tols = TOL_SCHEDULE[:k]
    elif isinstance(tol, (int, float)):
        tols = tuple(float(tol) for _ in range(k))
    else:
        tols = tuple(float(t) for t in tol)
    agg = SmoothCert(
        order=k,
        residuals=tuple(max(c.residuals[j] for c in certs) for j in range(k)),
        passed=all(c.passed for c in certs),
        grid=tuple(x for c in certs for x in c.grid),
        min_slope=min(c.min_slope for c in certs),
        tolerances=tols,
    )
    chart = IntervalChart("collapsed", (imgs[0][0], imgs[-1][1]))
    return CollapseResult(chart, tuple(r[i] for i in range(m)), agg, certs,
                          tuple(steps))


# ---------------------------------------------------------------------------
# JSON plumbing

def _map_from_json(spec):
    if spec is None or spec == "identity":
        return "identity" if spec == "identity" else None
    if isinstance(spec, dict) and "affine" in spec:
        pq = spec["affine"]
        return AffineMap(float(pq[0]), float(pq[1]))
    if isinstance(spec, dict) and "samples" in spec:
        return NumericDiffeo.from_json(spec)
    raise DomainError(f"unrecognized map spec: {spec!r}")


def _derive_transition(u_chart: IntervalChart, v_chart: IntervalChart,
                       n: int = 128) -> NumericDiffeo:
    overlap = (v_chart.image[0], u_chart.image[1])
    u, v = u_chart.map, v_chart.map

    def through(x: float) -> float:
        t = x if u == "identity" else u.inverse()(x)
        return t if v == "identity" else float(v(t))

    if u is None or v is None:
        raise DomainError(
            "cannot derive a transition without concrete chart maps; "
            "provide it explicitly"
        )
    if u == "identity" and v == "identity":
        fn = lambda x: float(x)
    elif isinstance(u, NumericDiffeo):
        uinv = u.inverse()
        fn = (lambda x: float(v(uinv(x)))) if v != "identity" else (lambda x: float(uinv(x)))
    else:
        fn = through
    return NumericDiffeo.from_function(fn, overlap, n=n)


def chain_from_json(d: dict) -> tuple[ChainAtlas, int, Optional[float]]:
    """Parse {"charts": [...], "transitions": [...], "k": int, "tol": float?}.

    tol is an optional flat per-order tolerance; when absent the default
    schedule applies. Sampled transitions are only piecewise-cubic smooth, so
    high orders at tight tolerances genuinely fail on them; the tol knob is
    how callers state what their data density supports.
    """
    try:
        chart_specs = d["charts"]
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed join spec: {exc}") from exc
    charts = []
    for i, spec in enumerate(chart_specs):
        try:
            image = (float(spec["image"][0]), float(spec["image"][1]))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise DomainError(f"malformed chart {i}: {exc}") from exc
        charts.append(IntervalChart(str(spec.get("label", f"chart{i}")), image,
                                    _map_from_json(spec.get("map"))))
    given = {}
    for t in d.get("transitions", ()):
        try:
            i, j = int(t["between"][0]), int(t["between"][1])
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise DomainError(f"malformed transition entry: {exc}") from exc
        if j != i + 1:
            raise DomainError(f"transitions must link consecutive charts, got {i},{j}")
        given[i] = NumericDiffeo.from_json(t)
    transitions = []
    for i in range(len(charts) - 1):
        if i in given:
            transitions.append(given[i])
        else:
            transitions.append(_derive_transition(charts[i], charts[i + 1]))
    k = int(d.get("k", 2))
    tol = d.get("tol")
    if tol is not None:
        tol = float(tol)
        if tol <= 0.0:
            raise DomainError(f"tol must be positive, got {tol}")
    return ChainAtlas(tuple(charts), tuple(transitions)), k, tol


def _sample_map(r, domain, n: int = 65) -> list:
    lo, hi = domain
    xs = np.linspace(lo, hi, n + 2)[1:-1]
    return [[float(x), float(r(x))] for x in xs]


def collapse_to_json(result: CollapseResult, atlas: ChainAtlas,
                     n_samples: int = 65) -> dict:
    return {
        "chart": {"label": result.chart.label,
                  "image": [result.chart.image[0], result.chart.image[1]]},
        "transitions": [
            {"chart": i, "samples": _sample_map(r, atlas.charts[i].image, n_samples)}
            for i, r in enumerate(result.transitions)
        ],
        "cert": result.cert.to_json(),
    }
