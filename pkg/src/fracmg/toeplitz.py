"""Stiffness application through a flattened symmetric Toeplitz matrix.

Rows of the node grid are laid out with ``n - 1`` zeros between them, so the
offset between any two nodes becomes a single index distance.  The stiffness
matrix is then the restriction of one symmetric Toeplitz matrix, whose
product with a vector is a cyclic convolution of twice the length.

:func:`apply_stiffness` evaluates the same product as a 2-D cyclic
convolution over the node grid, which lets the transforms skip the padding.
"""

import threading

import numpy as np
import scipy.fft as sfft

__all__ = ["ToeplitzOperator", "embed", "restrict", "embedded_index", "toeplitz_matvec", "apply_stiffness"]


def embedded_index(level):
    """Positions (0-based) of the interior nodes inside the padded vector."""
    d, r0 = np.divmod(np.arange(level.num_nodes), level.n)
    return d * (2 * level.n - 1) + r0


def embed(U, level):
    U = np.asarray(U, dtype=float)
    if U.shape != (level.num_nodes,):
        raise ValueError(f"expected {level.num_nodes} coefficients, got {U.shape}")
    n, l = level.n, level.l
    padded = np.zeros((l, 2 * n - 1))
    padded[:, :n] = U.reshape(l, n)
    return padded.reshape(-1)[: level.generator_length]


def restrict(V, level):
    V = np.asarray(V)
    if V.shape != (level.generator_length,):
        raise ValueError(f"expected {level.generator_length} padded entries, got {V.shape}")
    n, l = level.n, level.l
    full = np.zeros(l * (2 * n - 1), dtype=V.dtype)
    full[: V.size] = V
    return full.reshape(l, 2 * n - 1)[:, :n].reshape(-1)


class ToeplitzOperator:
    """Symmetric Toeplitz matrix given by its first column ``values``.

    The circulant embedding has the smallest power-of-two size ``>= 2m - 1``;
    its spectrum is computed once.
    """

    def __init__(self, values, level=None):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("generator must be a nonempty 1-D array")
        self.values = values
        self.level = level
        self.m = values.size
        size = 1
        while size < 2 * self.m - 1:
            size *= 2
        self.size = size
        circ = np.zeros(size)
        circ[: self.m] = values
        if self.m > 1:
            circ[-(self.m - 1) :] = values[1:][::-1]
        self.spectrum = np.fft.rfft(circ)
        self._local = threading.local()

    def _buffers(self):
        # scratch is per thread; the operator itself stays read-only
        buf = getattr(self._local, "buf", None)
        if buf is None:
            buf = (np.zeros(self.size), np.empty(self.size // 2 + 1, dtype=complex))
            self._local.buf = buf
        return buf

    def _convolve(self, x_into):
        """Cyclic convolution of the scratch vector, filled by ``x_into``."""
        real, spec = self._buffers()
        real[:] = 0.0
        x_into(real)
        np.fft.rfft(real, out=spec)
        np.multiply(spec, self.spectrum, out=spec)
        np.fft.irfft(spec, self.size, out=real)
        return real

    @classmethod
    def from_generator(cls, generator):
        return cls(generator.values, generator.level)

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.m,):
            raise ValueError(f"expected length {self.m}, got {x.shape}")

        def fill(buf):
            buf[: self.m] = x

        return self._convolve(fill)[: self.m].copy()

    def _grid_spectrum(self, n, l):
        """2-D transform of the offset kernel for an ``l`` by ``n`` grid, built on first use."""
        spec = getattr(self, "_grid", None)
        if spec is None or spec[0] != (n, l):
            px = sfft.next_fast_len(2 * n - 1, real=True)
            py = sfft.next_fast_len(2 * l - 1)
            # rows dd = 0..l-1, columns dr = -(n-1)..n-1
            rows = np.concatenate([self.values[1:n][::-1], self.values]).reshape(l, 2 * n - 1)
            cols = np.arange(-(n - 1), n) % px
            kern = np.zeros((py, px))
            kern[:l, cols] = rows
            # E(dr, -dd) = E(-dr, dd)
            kern[np.ix_((py - np.arange(1, l)) % py, cols)] = rows[1:, ::-1]
            # the kernel is point-symmetric, so its transform is real
            spec = ((n, l), px, py, np.ascontiguousarray(sfft.rfft2(kern).real))
            self._grid = spec
        return spec[1:]

    def grid_apply(self, U2):
        """Product with the restricted matrix for an ``(l, n)`` coefficient grid.

        Same operator as the flattened form, done as a 2-D convolution whose
        forward pass skips the zero padding rows and whose inverse pass keeps
        only the rows that are read back.
        """
        l, n = U2.shape
        if (2 * n - 1) * l - n + 1 != self.m:
            raise ValueError(f"a {l} x {n} grid does not match a generator of length {self.m}")
        px, py, spec = self._grid_spectrum(n, l)
        rows, full = self._grid_buffers(n, l, px, py)
        rows[:, :n] = U2
        full[:l] = sfft.rfft(rows, axis=1)
        full[l:] = 0.0
        # in place on the per-thread buffer; fresh multi-MB arrays per call cost page faults
        work = sfft.fft(full, axis=0, overwrite_x=True)
        work *= spec
        work = sfft.ifft(work, axis=0, overwrite_x=True)
        return sfft.irfft(work[:l], n=px, axis=1)[:, :n]

    def _grid_buffers(self, n, l, px, py):
        buf = getattr(self._local, "grid", None)
        if buf is None or buf[0] != (n, l):
            buf = ((n, l), np.zeros((l, px)), np.zeros((py, px // 2 + 1), dtype=complex))
            self._local.grid = buf
        return buf[1], buf[2]

    def dense(self):
        i = np.arange(self.m)
        return self.values[np.abs(i[:, None] - i[None, :])]


def toeplitz_matvec(op, x):
    return op.matvec(x)


def apply_stiffness(op, U, level=None):
    """Moments ``(A u, phi_m)`` for nodal coefficients ``U``."""
    level = level if level is not None else op.level
    if level is None:
        raise ValueError("operator has no level attached")
    if op.m != level.generator_length or (op.level is not None and op.level != level):
        raise ValueError(f"operator of size {op.m} does not match level {level.k}")
    U = np.asarray(U, dtype=float)
    if U.shape != (level.num_nodes,):
        raise ValueError(f"expected {level.num_nodes} coefficients, got {U.shape}")
    return op.grid_apply(U.reshape(level.l, level.n)).reshape(-1)
