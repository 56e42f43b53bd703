"""Directional fractional integrals of piecewise-constant data on triangles.

The directional Riemann-Liouville integral of order ``nu`` looks backwards
along ``e = (cos(theta), sin(theta))``::

    (D^{-nu}_theta v)(p) = 1/Gamma(nu) * int_0^inf t^(nu-1) v(p - t*e) dt

In coordinates rotated so that the x'-axis points along ``e`` this becomes a
left-sided 1-D integral in x' at fixed y'.  Applied to the indicator of a
triangle, the chord ``[a(y'), b(y')]`` of the triangle at height y' gives::

    ((x' - a)_+^nu - (x' - b)_+^nu) / Gamma(nu + 1)

Integrating that over the chord ``[c, d]`` of a second triangle, and then
over y', only involves powers of linear functions of y' on each strip
between vertex heights, so the pair integral has a closed form.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import gamma

from .errors import ConfigError
from .mesh import HAT_SUPPORT, REFERENCE_TRIANGLES, hat_gradients

__all__ = [
    "KernelParams",
    "DirectionalMeasure",
    "discretize_measure",
    "axis_measure",
    "rl_indicator_integral",
    "pair_interaction",
    "pair_interaction_batch",
    "support_triangles",
    "entry_interaction_I",
    "bilinear_entry",
    "bilinear_entries",
]

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(6)
_GAUSS_X = 0.5 * (_GAUSS_X + 1.0)
_GAUSS_W = 0.5 * _GAUSS_W


@dataclass(frozen=True)
class KernelParams:
    """Fractional order ``alpha`` in (1/2, 1] and reaction coefficient ``c``."""

    alpha: float
    c: float = 0.0

    def __post_init__(self):
        if not 0.5 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in (1/2, 1], got {self.alpha}")
        if self.c < 0:
            raise ConfigError(f"reaction coefficient must be >= 0, got {self.c}")

    @property
    def nu(self):
        return 2.0 - 2.0 * self.alpha


@dataclass(frozen=True)
class DirectionalMeasure:
    """Finite list of ``(angle, weight)`` atoms.

    The measure must be invariant under ``theta -> theta + pi``; that is what
    makes the bilinear form symmetric.
    """

    thetas: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        thetas = np.mod(np.asarray(self.thetas, dtype=float), 2 * np.pi)
        weights = np.asarray(self.weights, dtype=float)
        if thetas.shape != weights.shape or thetas.ndim != 1 or thetas.size == 0:
            raise ConfigError("measure needs matching 1-D angle and weight arrays")
        if np.any(weights < 0) or not np.isfinite(weights).all():
            raise ConfigError("measure weights must be finite and nonnegative")
        if weights.sum() <= 0:
            raise ConfigError("measure has zero total weight")
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_atoms(cls, atoms):
        atoms = np.asarray(atoms, dtype=float).reshape(-1, 2)
        return cls(atoms[:, 0], atoms[:, 1])

    @property
    def atoms(self):
        return list(zip(self.thetas.tolist(), self.weights.tolist()))

    @property
    def total_weight(self):
        return float(self.weights.sum())

    def __len__(self):
        return self.thetas.size

    def partner_index(self, tol=1e-12):
        """Index of the ``theta + pi`` partner of each atom, or raise."""
        shifted = np.mod(self.thetas + np.pi, 2 * np.pi)
        diff = np.abs(shifted[:, None] - self.thetas[None, :])
        diff = np.minimum(diff, 2 * np.pi - diff)
        partner = np.argmin(diff, axis=1)
        ok = diff[np.arange(len(self)), partner] <= 1e-9
        ok &= np.abs(self.weights[partner] - self.weights) <= tol * max(
            1.0, float(self.weights.max())
        )
        if not ok.all():
            raise ConfigError("measure is not symmetric under theta -> theta + pi")
        return partner

    def is_pi_symmetric(self):
        try:
            self.partner_index()
        except ConfigError:
            return False
        return True

    def half(self):
        """Atoms with angle in ``[0, pi)``; each stands for itself and its partner."""
        self.partner_index()
        keep = self.thetas < np.pi - 1e-12
        # an atom at pi - tiny and its partner at 2pi - tiny: only one of them
        # lands in [0, pi), which is what we want
        return self.thetas[keep], self.weights[keep]

    def moments(self):
        """``(a11, a22, a12)`` with the conventions of the integer-order limit."""
        c, s = np.cos(self.thetas), np.sin(self.thetas)
        w = self.weights
        return float(w @ (c * c)), float(w @ (s * s)), float(2 * w @ (c * s))


def discretize_measure(density, N_theta):
    """Compound trapezoid discretization of a continuous angular density."""
    N_theta = int(N_theta)
    if N_theta <= 0 or N_theta % 4 != 0:
        raise ConfigError(f"N_theta must be a positive multiple of 4, got {N_theta}")
    dtheta = 2 * np.pi / N_theta
    thetas = dtheta * np.arange(N_theta)
    values = np.array([float(density(t)) for t in thetas])
    if np.any(values < 0):
        raise ConfigError("density must be nonnegative")
    measure = DirectionalMeasure(thetas, dtheta * values)
    measure.partner_index()
    return measure


def axis_measure(weight=0.25):
    """Equal weight on the four axis directions."""
    return DirectionalMeasure(np.array([0.0, 0.5, 1.0, 1.5]) * np.pi, np.full(4, weight))


def rl_indicator_integral(nu, a, b, x):
    """Order-``nu`` left-sided integral of the indicator of ``[a, b]`` at ``x``."""
    if not np.all(np.asarray(a) < np.asarray(b)):
        raise ValueError("interval must satisfy a < b")
    if nu <= 0:
        raise ValueError("order must be positive")
    x = np.asarray(x, dtype=float)
    left = np.maximum(x - a, 0.0) ** nu
    right = np.maximum(x - b, 0.0) ** nu
    return (left - right) / gamma(nu + 1.0)


def _chords(xr, yr, y0, y1):
    """Chord endpoints of triangles on the strip ``y0 < y < y1``.

    ``xr, yr`` have shape (K, 3); ``y0, y1`` shape (K,).  Returns the left
    and right x at ``y0`` and at ``y1`` from the two edges spanning the strip.
    """
    ym = 0.5 * (y0 + y1)
    xa, ya = xr, yr
    xb, yb = np.roll(xr, -1, axis=1), np.roll(yr, -1, axis=1)
    lo = np.minimum(ya, yb)
    hi = np.maximum(ya, yb)
    spans = (lo < ym[:, None]) & (ym[:, None] < hi)
    dy = np.where(spans, yb - ya, 1.0)
    slope = (xb - xa) / dy
    xm = xa + (ym[:, None] - ya) * slope
    left = np.argmin(np.where(spans, xm, np.inf), axis=1)[:, None]
    right = np.argmax(np.where(spans, xm, -np.inf), axis=1)[:, None]

    def at(edge, y):
        x0 = np.take_along_axis(xa, edge, 1)[:, 0]
        y0_ = np.take_along_axis(ya, edge, 1)[:, 0]
        sl = np.take_along_axis(slope, edge, 1)[:, 0]
        return x0 + (y - y0_) * sl

    return at(left, y0), at(left, y1), at(right, y0), at(right, y1)


def _power_strip(t0, t1, length, p):
    """``int (t)_+^(p-1) dy`` over a strip where ``t`` is linear, times ``p``.

    Equals ``length * (T(t1) - T(t0)) / (t1 - t0)`` with ``T(t) = t_+^p``.
    """
    p0 = np.maximum(t0, 0.0) ** p
    p1 = np.maximum(t1, 0.0) ** p
    dt = t1 - t0
    scale = np.maximum(np.abs(t0), np.abs(t1))
    # six Gauss points are exact to round-off while |dt| / |t| <= 0.1
    close = np.abs(dt) <= 0.1 * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        out = length * (p1 - p0) / np.where(close, 1.0, dt)
    if close.any():
        # the divided difference would cancel here; no kink inside the strip
        tg = t0[close, None] + np.outer(dt[close], _GAUSS_X)
        mean = (np.maximum(tg, 0.0) ** (p - 1)) @ _GAUSS_W
        out[close] = length[close] * p * mean
    return out


def pair_interaction_batch(source, target, theta, nu, chunk=200_000):
    """Vectorized :func:`pair_interaction`.

    ``source`` and ``target`` broadcast to shape (K, 3, 2); ``theta`` is a
    scalar or shape (K,).
    """
    source = np.asarray(source, dtype=float)
    target = np.asarray(target, dtype=float)
    K = max(source.shape[0] if source.ndim == 3 else 1, target.shape[0] if target.ndim == 3 else 1)
    source = np.broadcast_to(source, (K, 3, 2))
    target = np.broadcast_to(target, (K, 3, 2))
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (K,))
    out = np.empty(K)
    for start in range(0, K, chunk):
        sl = slice(start, start + chunk)
        out[sl] = _pair_chunk(source[sl], target[sl], theta[sl], nu)
    return out


def _pair_chunk(source, target, theta, nu):
    c = np.cos(theta)[:, None]
    s = np.sin(theta)[:, None]
    sx = source[..., 0] * c + source[..., 1] * s
    sy = -source[..., 0] * s + source[..., 1] * c
    tx = target[..., 0] * c + target[..., 1] * s
    ty = -target[..., 0] * s + target[..., 1] * c

    lo = np.maximum(sy.min(axis=1), ty.min(axis=1))
    hi = np.minimum(sy.max(axis=1), ty.max(axis=1))
    breaks = np.sort(np.concatenate([sy, ty], axis=1), axis=1)
    breaks = np.clip(breaks, lo[:, None], hi[:, None])

    K = source.shape[0]
    p = nu + 2.0
    total = np.zeros(K)
    width = np.maximum(np.abs(sy).max(axis=1), np.abs(ty).max(axis=1)) + 1.0
    for i in range(5):
        y0 = breaks[:, i]
        y1 = breaks[:, i + 1]
        length = y1 - y0
        active = length > 1e-13 * width
        if not active.any():
            continue
        idx = np.nonzero(active)[0]
        y0a, y1a, la = y0[idx], y1[idx], length[idx]
        a0, a1, b0, b1 = _chords(sx[idx], sy[idx], y0a, y1a)
        c0, c1, d0, d1 = _chords(tx[idx], ty[idx], y0a, y1a)
        strip = (
            _power_strip(d0 - a0, d1 - a1, la, p)
            - _power_strip(c0 - a0, c1 - a1, la, p)
            - _power_strip(d0 - b0, d1 - b1, la, p)
            + _power_strip(c0 - b0, c1 - b1, la, p)
        )
        total[idx] += strip
    # strip sums carry T' = p * t^(p-1); the p is absorbed by Gamma(nu + 3)
    return total / gamma(nu + 3.0)


def pair_interaction(source, target, theta, nu):
    """``int_target (D^{-nu}_theta chi_source)(x, y) dx dy``.

    ``source`` and ``target`` are (3, 2) vertex arrays.  Exact up to
    round-off: the inner integral in the direction of ``theta`` and the
    outer integral across it both have closed forms.
    """
    return float(
        pair_interaction_batch(
            np.asarray(source, dtype=float)[None], np.asarray(target, dtype=float)[None], theta, nu
        )[0]
    )


def support_triangles(offset=(0, 0)):
    """Vertices (units of h) of the hat's six support triangles, shifted by ``offset``."""
    ox, oy = offset
    tris = []
    for ttype, (sx, sy) in HAT_SUPPORT:
        tris.append(REFERENCE_TRIANGLES[ttype] + np.array([sx + ox, sy + oy], dtype=float))
    return np.array(tris)


def _directional(theta):
    """(len(theta), 6) directional derivatives of the reference hat, units of 1/h."""
    g = hat_gradients()
    theta = np.atleast_1d(theta)
    return np.cos(theta)[:, None] * g[None, :, 0] + np.sin(theta)[:, None] * g[None, :, 1]


def _check_offset(offset):
    offset = tuple(int(v) for v in offset)
    if len(offset) != 2:
        raise ValueError("grid offsets are (dr, dd) pairs")
    return offset


def entry_interaction_I(offset_i, offset_j, theta, params, level):
    """``(D^{2 alpha - 1}_theta phi_i, D_{theta + pi} phi_j)`` for two hats.

    Offsets are grid positions ``(r, d)`` of the two nodes; only their
    difference matters.
    """
    if params.alpha >= 1.0:
        raise ValueError("alpha = 1 has no fractional kernel; use the integer-order path")
    oi = np.array(_check_offset(offset_i))
    oj = np.array(_check_offset(offset_j))
    src = support_triangles(tuple(oi))
    tgt = support_triangles(tuple(oj))
    g = _directional(theta)[0]
    S = np.repeat(src, 6, axis=0)
    T = np.tile(tgt, (6, 1, 1))
    vals = pair_interaction_batch(S, T, theta, params.nu).reshape(6, 6)
    # D_{theta+pi} phi_j = -D_theta phi_j on each triangle
    ref = -(g @ vals @ g)
    return float(ref * level.h**params.nu)


def _integer_order_entries(offsets, measure):
    """``sum_l p_l (D_l phi_0, D_l phi_u)`` in reference units (h-independent)."""
    a11, a22, a12 = measure.moments()
    g = hat_gradients()
    offsets = np.asarray(offsets, dtype=int).reshape(-1, 2)
    out = np.zeros(len(offsets))
    keys = {}
    for idx, (ttype, (sx, sy)) in enumerate(HAT_SUPPORT):
        keys[(ttype, sx, sy)] = idx
    for row, (ox, oy) in enumerate(offsets):
        val = 0.0
        for i, (ttype, (sx, sy)) in enumerate(HAT_SUPPORT):
            j = keys.get((ttype, sx - ox, sy - oy))
            if j is None:
                continue
            gi, gj = g[i], g[j]
            # area 1/2 per reference triangle; a12 already carries the factor 2
            val += 0.5 * (
                a11 * gi[0] * gj[0]
                + a22 * gi[1] * gj[1]
                + 0.5 * a12 * (gi[0] * gj[1] + gi[1] * gj[0])
            )
        out[row] = val
    return out


def _normal_overlap(src, tgt, theta):
    """Cheap necessary condition for a nonzero pair: target meets the source's shadow."""
    c, s = np.cos(theta)[:, None], np.sin(theta)[:, None]
    sn = -src[..., 0] * s + src[..., 1] * c
    tn = -tgt[..., 0] * s + tgt[..., 1] * c
    sa = src[..., 0] * c + src[..., 1] * s
    ta = tgt[..., 0] * c + tgt[..., 1] * s
    return (
        (tn.min(axis=1) < sn.max(axis=1))
        & (tn.max(axis=1) > sn.min(axis=1))
        & (ta.max(axis=1) > sa.min(axis=1))
    )


def bilinear_entries(offsets, measure, params, h):
    """Stiffness entries ``B(phi_0, phi_u)`` for an array of grid offsets.

    Direct enumeration of all 36 support-triangle pairs for every atom; no
    reuse across offsets.  The reaction term is not included.
    """
    offsets = np.asarray(offsets, dtype=int).reshape(-1, 2)
    if params.alpha >= 1.0:
        return _integer_order_entries(offsets, measure)
    measure.partner_index()
    base = support_triangles()
    K = len(offsets)
    src = np.broadcast_to(base[:, None, None], (6, 6, K, 3, 2))
    shift = offsets[None, None, :, None, :].astype(float)
    tgt = np.broadcast_to(base[None, :, None], (6, 6, K, 3, 2)) + shift
    src = src.reshape(-1, 3, 2)
    tgt = tgt.reshape(-1, 3, 2)
    out = np.zeros(K)
    for theta, weight in zip(measure.thetas, measure.weights):
        if weight == 0.0:
            continue
        g = _directional(theta)[0]
        coef = np.outer(g, g)[:, :, None] * np.ones(K)
        th = np.full(len(src), theta)
        mask = _normal_overlap(src, tgt, th)
        vals = np.zeros(len(src))
        if mask.any():
            vals[mask] = pair_interaction_batch(src[mask], tgt[mask], theta, params.nu)
        out += weight * (coef.reshape(-1) * vals).reshape(36, K).sum(axis=0)
    return out * h**params.nu


def bilinear_entry(offset, measure, params, level, mass_entry=0.0):
    """``B(phi_i, phi_j)`` for nodes separated by grid ``offset = (dr, dd)``."""
    offset = _check_offset(offset)
    measure.partner_index()
    val = bilinear_entries([offset], measure, params, level.h)[0]
    return float(val + params.c * mass_entry)
