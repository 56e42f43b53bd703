"""On-disk generator cache.

Layout, all little-endian::

    b"FMG1"            magic
    u32                format version (1)
    u32 u32 u32        level, n, l
    f64 f64            alpha, c
    u32                number of measure atoms
    (f64, f64) * count angle, weight
    f64 * m            generator values, m = (2n - 1) l - n + 1

The domain does not appear in the header; it enters the digest that names
the file, so a different rectangle maps to a different file.
"""

import logging
import os
from pathlib import Path
import struct

import numpy as np

from .assembly import GeneratorVector, build_generator, params_digest
from .errors import CacheIntegrityError
from .kernel import DirectionalMeasure, KernelParams

__all__ = [
    "MAGIC",
    "VERSION",
    "CacheMismatch",
    "write_generator",
    "read_generator",
    "cache_path",
    "cache_roundtrip",
    "load_or_build",
]

log = logging.getLogger(__name__)

MAGIC = b"FMG1"
VERSION = 1
_HEAD = struct.Struct("<4sIIIIddI")


class CacheMismatch(LookupError):
    """The file is intact but holds a different generator than requested."""


def cache_path(directory, level, measure, params):
    digest = params_digest(level, measure, params)
    return Path(directory) / f"gen_k{level.k}_{digest[:24]}.fmg"


def write_generator(generator, path):
    level = generator.level
    measure = generator.measure
    head = _HEAD.pack(
        MAGIC,
        VERSION,
        level.k,
        level.n,
        level.l,
        generator.params.alpha,
        generator.params.c,
        len(measure),
    )
    atoms = np.column_stack([measure.thetas, measure.weights]).astype("<f8")
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(head)
        fh.write(atoms.tobytes())
        fh.write(np.ascontiguousarray(generator.values, dtype="<f8").tobytes())
    os.replace(tmp, path)
    return path


def _read_raw(path):
    data = Path(path).read_bytes()
    if len(data) < _HEAD.size:
        raise CacheIntegrityError(f"{path}: truncated header")
    magic, version, k, n, l, alpha, c, count = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise CacheIntegrityError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise CacheIntegrityError(f"{path}: unsupported format version {version}")
    m = (2 * n - 1) * l - n + 1
    expected = _HEAD.size + 16 * count + 8 * m
    if len(data) != expected:
        raise CacheIntegrityError(f"{path}: expected {expected} bytes, found {len(data)}")
    atoms = np.frombuffer(data, dtype="<f8", count=2 * count, offset=_HEAD.size).reshape(count, 2)
    values = np.frombuffer(data, dtype="<f8", count=m, offset=_HEAD.size + 16 * count)
    if not np.isfinite(values).all():
        raise CacheIntegrityError(f"{path}: non-finite generator values")
    return (k, n, l, alpha, c), atoms.astype(float), values.astype(float)


def read_generator(path, level, measure, params):
    """Read a generator, checking it is the one for ``(level, measure, params)``.

    Raises :class:`CacheIntegrityError` for damaged files and
    :class:`CacheMismatch` for intact files describing something else.
    """
    (k, n, l, alpha, c), atoms, values = _read_raw(path)
    try:
        stored_measure = DirectionalMeasure(atoms[:, 0], atoms[:, 1])
        stored_params = KernelParams(alpha, c)
    except ValueError as exc:
        raise CacheIntegrityError(f"{path}: {exc}") from exc
    if (k, n, l) != (level.k, level.n, level.l):
        raise CacheMismatch(f"{path}: level ({k}, {n}, {l}) differs from requested")
    want = params_digest(level, measure, params)
    got = params_digest(level, stored_measure, stored_params)
    if want != got:
        raise CacheMismatch(f"{path}: parameter digest differs from requested")
    return GeneratorVector(level, values, params, measure, want)


def cache_roundtrip(generator, directory):
    """Write ``generator`` into ``directory`` and read it back."""
    path = cache_path(directory, generator.level, generator.measure, generator.params)
    write_generator(generator, path)
    return read_generator(path, generator.level, generator.measure, generator.params)


def load_or_build(level, measure, params, directory=None):
    """Cached generator if a valid one exists, otherwise assemble (and store)."""
    if directory is None:
        return build_generator(level, measure, params)
    Path(directory).mkdir(parents=True, exist_ok=True)
    path = cache_path(directory, level, measure, params)
    if path.exists():
        try:
            return read_generator(path, level, measure, params)
        except (CacheIntegrityError, CacheMismatch) as exc:
            log.warning("re-assembling level %d: %s", level.k, exc)
    gen = build_generator(level, measure, params)
    write_generator(gen, path)
    return gen
