"""Per-level stiffness data: generator vectors, mass entries, load moments.

On the uniform mesh ``B(phi_i, phi_j)`` depends only on the grid offset
``(dr, dd)`` between the two nodes.  :func:`offset_table` computes that
function on the full offset box; :func:`build_generator` flattens it into the
first column of the symmetric Toeplitz matrix used by
:mod:`fracmg.toeplitz`.
"""

from dataclasses import dataclass, field
import hashlib
import logging
import struct

import numpy as np

from .kernel import (
    DirectionalMeasure,
    KernelParams,
    _directional,
    _integer_order_entries,
    bilinear_entries,
    pair_interaction_batch,
)
from .mesh import HAT_SUPPORT, LOWER, REFERENCE_TRIANGLES, UPPER, MeshLevel

__all__ = [
    "DENSE_CAP",
    "GeneratorVector",
    "params_digest",
    "mass_entry",
    "offset_table",
    "brute_offset_table",
    "generator_from_table",
    "build_generator",
    "generator_matrix",
    "build_dense",
    "build_load",
]

log = logging.getLogger(__name__)

DENSE_CAP = 4096


def params_digest(level, measure, params):
    """Fingerprint of everything a generator's values depend on."""
    h = hashlib.sha256()
    h.update(struct.pack("<IIIdd", level.k, level.n, level.l, params.alpha, params.c))
    h.update(struct.pack("<dd", *level.domain))
    h.update(np.ascontiguousarray(measure.thetas, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(measure.weights, dtype="<f8").tobytes())
    return h.hexdigest()


@dataclass(frozen=True)
class GeneratorVector:
    """First column of the symmetric Toeplitz matrix for one level."""

    level: MeshLevel
    values: np.ndarray
    params: KernelParams
    measure: DirectionalMeasure
    params_digest: str = field(default="")

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.level.generator_length,):
            raise ValueError(
                f"generator for n={self.level.n}, l={self.level.l} needs "
                f"{self.level.generator_length} values, got {values.shape}"
            )
        object.__setattr__(self, "values", values)
        if not self.params_digest:
            object.__setattr__(
                self, "params_digest", params_digest(self.level, self.measure, self.params)
            )

    @property
    def diagonal(self):
        return float(self.values[0])


def _mass_reference(dr, dd):
    """Exact mass entry in units of h**2."""
    if (dr, dd) == (0, 0):
        return 0.5
    # neighbours sharing an edge of the triangulation share two triangles
    if (dr, dd) in {(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)}:
        return 2 * (0.5 / 12.0)
    return 0.0


def mass_entry(offset, level):
    """``(phi_i, phi_j)`` for nodes separated by grid ``offset = (dr, dd)``."""
    dr, dd = (int(v) for v in offset)
    return _mass_reference(dr, dd) * level.h**2


def _add_reaction(table, level, params):
    if params.c == 0.0:
        return table
    n, l = level.n, level.l
    for dr in (-1, 0, 1):
        for dd in (-1, 0, 1):
            if abs(dr) < n and abs(dd) < l:
                table[dd + l - 1, dr + n - 1] += params.c * mass_entry((dr, dd), level)
    return table


def _axis_frame(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([c, s]), np.array([-s, c])


def _shadow_shifts(ta, tb, theta, wx_max, wy_max):
    """Integer shifts ``w`` for which ``tb + w`` can meet the shadow of ``ta``.

    Conservative: shifts that only graze the shadow are kept and evaluate to
    zero in the pair integral.
    """
    e, nrm = _axis_frame(theta)
    sa, sb = ta @ nrm, tb @ nrm
    lo = sa.min() - sb.max()
    hi = sa.max() - sb.min()
    along_min = (ta @ e).min() - (tb @ e).max()
    eps = 1e-9
    if abs(e[0]) >= abs(e[1]):
        # sigma(w) = -s*wx + c*wy in (lo, hi): solve for wy
        wx = np.arange(-wx_max, wx_max + 1)
        c, s = e[0], e[1]
        b1 = (lo + s * wx) / c
        b2 = (hi + s * wx) / c
        first = np.ceil(np.minimum(b1, b2) - eps).astype(int)
        last = np.floor(np.maximum(b1, b2) + eps).astype(int)
        span = int((last - first).max()) + 1 if wx.size else 0
        k = np.arange(max(span, 0))
        WX = np.repeat(wx, k.size)
        WY = (first[:, None] + k[None, :]).ravel()
        keep = WY <= np.repeat(last, k.size)
    else:
        wy = np.arange(-wy_max, wy_max + 1)
        c, s = e[0], e[1]
        # -s*wx = sigma - c*wy  ->  wx = (c*wy - sigma)/s
        b1 = (c * wy - lo) / s
        b2 = (c * wy - hi) / s
        first = np.ceil(np.minimum(b1, b2) - eps).astype(int)
        last = np.floor(np.maximum(b1, b2) + eps).astype(int)
        span = int((last - first).max()) + 1 if wy.size else 0
        k = np.arange(max(span, 0))
        WY = np.repeat(wy, k.size)
        WX = (first[:, None] + k[None, :]).ravel()
        keep = WX <= np.repeat(last, k.size)
    keep &= (np.abs(WX) <= wx_max) & (np.abs(WY) <= wy_max)
    keep &= WX * e[0] + WY * e[1] > along_min - eps
    return WX[keep], WY[keep]


def offset_table(level, measure, params, angle_batch=64):
    """``B(phi_0, phi_u)`` for every offset ``u = (dr, dd)``.

    Returns an array of shape ``(2l - 1, 2n - 1)`` indexed by
    ``[dd + l - 1, dr + n - 1]``.

    For each direction only target triangles inside the source triangle's
    shadow strip contribute, and pair integrals are shared between every
    hat pair whose support triangles differ by the same shift.  Atoms at
    ``theta`` and ``theta + pi`` are folded together through
    ``I_{theta+pi}(u) = I_theta(-u)``.
    """
    n, l = level.n, level.l
    shape = (2 * l - 1, 2 * n - 1)
    if params.alpha >= 1.0:
        dr, dd = np.meshgrid(np.arange(-1, 2), np.arange(-1, 2))
        offs = np.column_stack([dr.ravel(), dd.ravel()])
        vals = _integer_order_entries(offs, measure)
        table = np.zeros(shape)
        for (r, d), v in zip(offs, vals):
            if abs(r) < n and abs(d) < l:
                table[d + l - 1, r + n - 1] = v
        return _add_reaction(table, level, params)

    thetas, weights = measure.half()
    nu = params.nu
    size = shape[0] * shape[1]
    flat = np.zeros(size)
    by_type = {t: [i for i, (tt, _) in enumerate(HAT_SUPPORT) if tt == t] for t in (LOWER, UPPER)}
    shifts = np.array([s for _, s in HAT_SUPPORT])

    idx_parts, w_parts = [], []

    def flush():
        if idx_parts:
            flat[:] += np.bincount(
                np.concatenate(idx_parts), weights=np.concatenate(w_parts), minlength=size
            )
            idx_parts.clear()
            w_parts.clear()

    for count, (theta, weight) in enumerate(zip(thetas, weights)):
        if weight == 0.0:
            continue
        g = _directional(theta)[0]
        for ta in (LOWER, UPPER):
            for tb in (LOWER, UPPER):
                WX, WY = _shadow_shifts(
                    REFERENCE_TRIANGLES[ta], REFERENCE_TRIANGLES[tb], theta, n, l
                )
                if WX.size == 0:
                    continue
                tgt = REFERENCE_TRIANGLES[tb][None] + np.column_stack([WX, WY])[:, None, :]
                q = pair_interaction_batch(REFERENCE_TRIANGLES[ta][None], tgt, theta, nu)
                nz = q != 0.0
                if not nz.any():
                    continue
                WXn, WYn, qn = WX[nz], WY[nz], q[nz]
                for i in by_type[ta]:
                    for j in by_type[tb]:
                        # source triangle i of phi_0, target triangle j of phi_u:
                        # shift between them is u + s_j - s_i
                        ux = WXn - shifts[j, 0] + shifts[i, 0]
                        uy = WYn - shifts[j, 1] + shifts[i, 1]
                        ok = (np.abs(ux) < n) & (np.abs(uy) < l)
                        idx_parts.append((uy[ok] + l - 1) * shape[1] + ux[ok] + n - 1)
                        w_parts.append(weight * g[i] * g[j] * qn[ok])
        if (count + 1) % angle_batch == 0:
            flush()
    flush()
    table = flat.reshape(shape)
    table = (table + table[::-1, ::-1]) * level.h**nu
    return _add_reaction(table, level, params)


def brute_offset_table(level, measure, params):
    """Same as :func:`offset_table`, by direct enumeration per offset."""
    n, l = level.n, level.l
    dr, dd = np.meshgrid(np.arange(-(n - 1), n), np.arange(-(l - 1), l))
    offs = np.column_stack([dr.ravel(), dd.ravel()])
    vals = bilinear_entries(offs, measure, params, level.h)
    table = vals.reshape(2 * l - 1, 2 * n - 1)
    return _add_reaction(table, level, params)


def generator_from_table(level, table):
    """Flatten an offset table into the Toeplitz generator ``nu``.

    ``nu[dd*(2n - 1) + dr] = B(phi_0, phi_(dr, dd))`` for ``dd >= 0``.
    """
    n, l = level.n, level.l
    rows = table[l - 1 :, :]  # dd = 0 .. l-1, dr = -(n-1) .. n-1
    flat = rows.reshape(-1)
    # index dd*(2n-1) + dr + (n-1) in ``flat``; drop the dd = 0, dr < 0 half
    return flat[n - 1 :].copy()


def build_generator(level, measure, params):
    """Generator vector for ``level``."""
    measure.partner_index()
    table = offset_table(level, measure, params)
    return GeneratorVector(level, generator_from_table(level, table), params, measure)


def _embedded_index(level):
    d, r0 = np.divmod(np.arange(level.num_nodes), level.n)
    return d * (2 * level.n - 1) + r0


def generator_matrix(generator):
    """Dense stiffness matrix induced by a generator (restricted Toeplitz)."""
    level = generator.level
    if level.num_nodes > DENSE_CAP:
        raise ValueError(f"{level.num_nodes} unknowns exceed the dense cap {DENSE_CAP}")
    k = _embedded_index(level)
    return generator.values[np.abs(k[:, None] - k[None, :])]


def build_dense(level, measure, params, cap=DENSE_CAP):
    """Dense stiffness matrix by direct per-offset enumeration (test oracle)."""
    if level.num_nodes > cap:
        raise ValueError(f"{level.num_nodes} unknowns exceed the dense cap {cap}")
    measure.partner_index()
    table = brute_offset_table(level, measure, params)
    n, l = level.n, level.l
    d, r0 = np.divmod(np.arange(level.num_nodes), n)
    ddiff = d[None, :] - d[:, None]
    rdiff = r0[None, :] - r0[:, None]
    A = table[ddiff + l - 1, rdiff + n - 1]
    # B(phi_i, phi_j) with j - i = u  equals  B(phi_0, phi_u)
    return 0.5 * (A + A.T)


def build_load(level, f):
    """Moments ``(f, phi_m)`` with the edge-midpoint rule on each support triangle.

    ``f`` is called as ``f(x, y)`` with arrays.
    """
    nodes = level.node_coordinates()
    h = level.h
    out = np.zeros(level.num_nodes)
    area = 0.5 * h * h
    for ttype, (sx, sy) in HAT_SUPPORT:
        verts = (REFERENCE_TRIANGLES[ttype] + np.array([sx, sy], dtype=float)) * h
        others = [v for v in verts if not np.allclose(v, 0.0)]
        # the hat is 1/2 on the two edge midpoints touching the node, 0 on the third
        for v in others:
            mid = nodes + 0.5 * v
            vals = np.broadcast_to(np.asarray(f(mid[:, 0], mid[:, 1]), dtype=float), (len(nodes),))
            out += area / 3.0 * 0.5 * vals
    return out
