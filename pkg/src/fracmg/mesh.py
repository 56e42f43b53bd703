"""Nested uniform right-triangle meshes on a rectangle.

Every square cell of size ``h`` is split by its lower-left to upper-right
diagonal, so all interior hat functions are translates of one another::

    (0,1)-----(1,1)
      |  UPPER  /|
      |       /  |
      |     /    |
      |   / LOWER|
    (0,0)-----(1,0)

Interior node ``m`` (1-based) sits in row ``d`` and column ``r`` with
``m = n*d + r``, ``1 <= r <= n``, ``0 <= d <= l-1``; its coordinates are
``(r*h, (d+1)*h)``.  Arrays in this package are 0-based, so node ``m`` is
stored at position ``m - 1``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError

__all__ = [
    "LOWER",
    "UPPER",
    "REFERENCE_TRIANGLES",
    "HAT_SUPPORT",
    "MeshLevel",
    "Hierarchy",
    "build_hierarchy",
    "prolongation_weights",
    "prolongation_matrix",
    "hat_gradients",
    "evaluate_p1",
]

LOWER = 0
UPPER = 1

# vertices in units of h relative to the cell's lower-left corner, CCW
REFERENCE_TRIANGLES = np.array(
    [
        [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]],
        [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
    ]
)

# (triangle type, cell shift) for the six triangles carrying the hat at (0, 0)
HAT_SUPPORT = (
    (LOWER, (0, 0)),
    (UPPER, (0, 0)),
    (LOWER, (-1, -1)),
    (UPPER, (-1, -1)),
    (UPPER, (0, -1)),
    (LOWER, (-1, 0)),
)


def _hat_gradients():
    grads = []
    for ttype, (sx, sy) in HAT_SUPPORT:
        verts = REFERENCE_TRIANGLES[ttype] + np.array([sx, sy], dtype=float)
        # barycentric coordinate of the vertex at the origin is the hat
        values = np.array([1.0 if np.allclose(v, 0.0) else 0.0 for v in verts])
        mat = np.column_stack([verts, np.ones(3)])
        coef = np.linalg.solve(mat, values)
        grads.append(coef[:2])
    return np.array(grads)


_HAT_GRADIENTS = _hat_gradients()


def hat_gradients():
    """Gradients (in units of 1/h) of the reference hat on its support triangles.

    Row ``i`` belongs to ``HAT_SUPPORT[i]``.
    """
    return _HAT_GRADIENTS.copy()


@dataclass(frozen=True)
class MeshLevel:
    """One level of the nested triangulation of ``[0, Lx] x [0, Ly]``."""

    k: int
    n: int
    l: int
    h: float
    domain: tuple

    @property
    def num_nodes(self):
        return self.n * self.l

    @property
    def generator_length(self):
        return (2 * self.n - 1) * self.l - self.n + 1

    def node_index(self, d, r):
        """0-based storage index of the node in row ``d``, column ``r``."""
        return self.n * np.asarray(d) + np.asarray(r) - 1

    def node_grid(self, m):
        """Inverse of :meth:`node_index`: returns ``(d, r)``."""
        d, r0 = np.divmod(np.asarray(m), self.n)
        return d, r0 + 1

    def node_coordinates(self):
        """(N, 2) array of interior node coordinates, row-major."""
        d, r = np.divmod(np.arange(self.num_nodes), self.n)
        return np.column_stack([(r + 1) * self.h, (d + 1) * self.h])


@dataclass(frozen=True)
class Hierarchy:
    levels: tuple

    @property
    def J(self):
        return len(self.levels)

    def __getitem__(self, k):
        """Level ``k`` (1-based)."""
        if not 1 <= k <= len(self.levels):
            raise IndexError(f"level {k} outside 1..{len(self.levels)}")
        return self.levels[k - 1]

    @property
    def finest(self):
        return self.levels[-1]


def build_hierarchy(n0, l0, J, domain=(2.0, 2.0)):
    """Build levels ``1..J`` with ``n_k = n0*2**k - 1`` and ``l_k = l0*2**k - 1``.

    ``domain`` is ``(Lx, Ly)`` for the rectangle ``[0, Lx] x [0, Ly]``.
    """
    if int(J) < 1:
        raise ConfigError(f"need at least one level, got J={J}")
    if int(n0) < 2 or int(l0) < 2:
        raise ConfigError(f"base sizes must be >= 2, got n0={n0}, l0={l0}")
    Lx, Ly = float(domain[0]), float(domain[1])
    if Lx <= 0 or Ly <= 0:
        raise ConfigError(f"domain extents must be positive, got {domain}")
    # square cells at one level means square cells at all levels
    if not np.isclose(Lx / n0, Ly / l0, rtol=1e-12, atol=0.0):
        raise ConfigError(
            f"cells are not square: Lx/n0={Lx / n0} differs from Ly/l0={Ly / l0}"
        )
    levels = []
    for k in range(1, int(J) + 1):
        cells = n0 * 2**k
        levels.append(
            MeshLevel(
                k=k,
                n=cells - 1,
                l=l0 * 2**k - 1,
                h=Lx / cells,
                domain=(Lx, Ly),
            )
        )
    return Hierarchy(tuple(levels))


def _check_adjacent(coarse, fine):
    if fine.k != coarse.k + 1 or fine.n != 2 * coarse.n + 1 or fine.l != 2 * coarse.l + 1:
        raise ValueError(f"levels {coarse.k} and {fine.k} are not adjacent")


def prolongation_weights(coarse, fine):
    """Nodal interpolation weights from ``coarse`` to ``fine``.

    Returns a dict mapping each fine node (0-based) to a list of
    ``(coarse_node, weight)`` pairs.  Coarse nodes on the boundary carry no
    unknown and are omitted, so a fine node next to the boundary may list a
    single parent with weight 1/2.
    """
    _check_adjacent(coarse, fine)
    out = {}
    for m in range(fine.num_nodes):
        d, r = divmod(m, fine.n)
        # grid coordinates in units of the fine h, boundary at 0 and n+1
        gx, gy = r + 1, d + 1
        if gx % 2 == 0 and gy % 2 == 0:
            parents = [((gx // 2, gy // 2), 1.0)]
        elif gx % 2 == 1 and gy % 2 == 0:
            parents = [(((gx - 1) // 2, gy // 2), 0.5), (((gx + 1) // 2, gy // 2), 0.5)]
        elif gx % 2 == 0 and gy % 2 == 1:
            parents = [((gx // 2, (gy - 1) // 2), 0.5), ((gx // 2, (gy + 1) // 2), 0.5)]
        else:
            # midpoint of the cell diagonal running lower-left to upper-right
            parents = [
                (((gx - 1) // 2, (gy - 1) // 2), 0.5),
                (((gx + 1) // 2, (gy + 1) // 2), 0.5),
            ]
        entries = []
        for (cx, cy), w in parents:
            if 1 <= cx <= coarse.n and 1 <= cy <= coarse.l:
                entries.append((coarse.n * (cy - 1) + cx - 1, w))
        out[m] = entries
    return out


def prolongation_matrix(coarse, fine):
    """Sparse ``(fine.num_nodes, coarse.num_nodes)`` interpolation matrix."""
    _check_adjacent(coarse, fine)
    d, r0 = np.divmod(np.arange(fine.num_nodes), fine.n)
    gx, gy = r0 + 1, d + 1
    rows, cols, vals = [], [], []
    ex, ey = gx % 2 == 0, gy % 2 == 0
    # (condition, parent offsets in fine units, weight)
    cases = (
        (ex & ey, ((0, 0),), 1.0),
        (~ex & ey, ((-1, 0), (1, 0)), 0.5),
        (ex & ~ey, ((0, -1), (0, 1)), 0.5),
        (~ex & ~ey, ((-1, -1), (1, 1)), 0.5),
    )
    fine_idx = np.arange(fine.num_nodes)
    for mask, offsets, w in cases:
        for ox, oy in offsets:
            cx = (gx[mask] + ox) // 2
            cy = (gy[mask] + oy) // 2
            keep = (cx >= 1) & (cx <= coarse.n) & (cy >= 1) & (cy <= coarse.l)
            rows.append(fine_idx[mask][keep])
            cols.append(coarse.n * (cy[keep] - 1) + cx[keep] - 1)
            vals.append(np.full(keep.sum(), w))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(fine.num_nodes, coarse.num_nodes),
    )


def evaluate_p1(level, coeffs, points):
    """Evaluate the piecewise-linear function with nodal ``coeffs`` at ``points``.

    Direct hat-function evaluation; used to check interpolation exactness.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    coeffs = np.asarray(coeffs, dtype=float)
    grid = np.zeros((level.l + 2, level.n + 2))
    grid[1:-1, 1:-1] = coeffs.reshape(level.l, level.n)
    s = pts / level.h
    i = np.clip(np.floor(s[:, 0]).astype(int), 0, level.n)
    j = np.clip(np.floor(s[:, 1]).astype(int), 0, level.l)
    fx, fy = s[:, 0] - i, s[:, 1] - j
    v00 = grid[j, i]
    v10 = grid[j, i + 1]
    v11 = grid[j + 1, i + 1]
    v01 = grid[j + 1, i]
    lower = fx >= fy
    return np.where(
        lower,
        v00 + fx * (v10 - v00) + fy * (v11 - v10),
        v00 + fy * (v01 - v00) + fx * (v11 - v01),
    )
