"""Independent reference computations used by the tests.

Nothing here calls into the closed-form kernel: chords come from clipping a
line against the triangle's half-planes, and every integral is adaptive
quadrature.
"""

import math
import warnings

import mpmath
import numpy as np
from scipy import integrate


def clip_line(tri, p, e):
    """Parameter interval of ``p + t e`` inside the CCW-or-CW triangle ``tri``."""
    tri = np.asarray(tri, dtype=float)
    area2 = (tri[1, 0] - tri[0, 0]) * (tri[2, 1] - tri[0, 1]) - (tri[1, 1] - tri[0, 1]) * (
        tri[2, 0] - tri[0, 0]
    )
    sign = 1.0 if area2 > 0 else -1.0
    t0, t1 = -np.inf, np.inf
    for i in range(3):
        a, b = tri[i], tri[(i + 1) % 3]
        nrm = sign * np.array([b[1] - a[1], -(b[0] - a[0])])
        num = nrm @ (p - a)
        den = nrm @ e
        if abs(den) < 1e-15:
            if num > 0:
                return None
            continue
        t = -num / den
        if den > 0:
            t1 = min(t1, t)
        else:
            t0 = max(t0, t)
    return (t0, t1) if t1 > t0 else None


def rl_quadrature(nu, a, b, x):
    """Order-``nu`` integral of the indicator of [a, b] straight from the definition."""
    nu, a, b, x = (mpmath.mpf(v) for v in (nu, a, b, x))
    lo = max(x - b, mpmath.mpf(0))
    hi = x - a
    if hi <= lo:
        return 0.0
    # t = u^k with k nu >= 2 removes the endpoint singularity at t = 0
    k = int(mpmath.ceil(2 / nu))
    f = lambda u: k * u ** (k - 1) * (u**k) ** (nu - 1) / mpmath.gamma(nu)
    with mpmath.workdps(30):
        return float(mpmath.quad(f, [lo ** (mpmath.mpf(1) / k), hi ** (mpmath.mpf(1) / k)]))


def pair_quadrature(src, tgt, theta, nu):
    """Nested adaptive quadrature of ``int_tgt D^{-nu}_theta chi_src``."""
    src = np.asarray(src, dtype=float)
    tgt = np.asarray(tgt, dtype=float)
    e = np.array([math.cos(theta), math.sin(theta)])
    n = np.array([-e[1], e[0]])
    g = math.gamma(nu + 1)
    lo = max((src @ n).min(), (tgt @ n).min())
    hi = min((src @ n).max(), (tgt @ n).max())
    if hi <= lo:
        return 0.0

    def across(yp):
        base = yp * n
        ct = clip_line(tgt, base, e)
        cs = clip_line(src, base, e)
        if ct is None or cs is None:
            return 0.0
        a, b = cs
        c, d = ct
        f = lambda x: (max(x - a, 0.0) ** nu - max(x - b, 0.0) ** nu) / g
        pts = [p for p in (a, b) if c < p < d]
        return integrate.quad(f, c, d, points=pts or None, epsabs=1e-15, epsrel=1e-13, limit=200)[0]

    heights = np.concatenate([src @ n, tgt @ n])
    pts = sorted({float(h) for h in heights if lo < h < hi})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(across, lo, hi, points=pts or None, epsabs=1e-15, epsrel=1e-12, limit=400)[0]


def p1_laplacian_stiffness(n, l):
    """Textbook element-by-element P1 stiffness of -Laplace on the diagonal-split grid.

    Independent of mesh size in 2-D.  Returns the interior-node matrix.
    """
    N = n * l
    K = np.zeros((N, N))

    def idx(i, j):
        if 1 <= i <= n and 1 <= j <= l:
            return (j - 1) * n + (i - 1)
        return None

    for j in range(0, l + 1):
        for i in range(0, n + 1):
            for tri in (
                [(i, j), (i + 1, j), (i + 1, j + 1)],
                [(i, j), (i + 1, j + 1), (i, j + 1)],
            ):
                P = np.array(tri, dtype=float)
                B = np.array([[P[1, 0] - P[0, 0], P[2, 0] - P[0, 0]], [P[1, 1] - P[0, 1], P[2, 1] - P[0, 1]]])
                area = 0.5 * abs(np.linalg.det(B))
                G = np.linalg.inv(B).T @ np.array([[-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
                Ke = area * G.T @ G
                ids = [idx(*v) for v in tri]
                for a in range(3):
                    for b in range(3):
                        if ids[a] is not None and ids[b] is not None:
                            K[ids[a], ids[b]] += Ke[a, b]
    return K


def direct_toeplitz(values, x):
    """O(m^2) symmetric Toeplitz product."""
    m = len(values)
    out = np.zeros(m)
    for i in range(m):
        out[i] = sum(values[abs(i - j)] * x[j] for j in range(m))
    return out
