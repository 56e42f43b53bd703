import struct

import numpy as np
import pytest

from fracmg import KernelParams, axis_measure, build_generator, build_hierarchy, discretize_measure
from fracmg.cache import (
    MAGIC,
    CacheMismatch,
    cache_path,
    cache_roundtrip,
    load_or_build,
    read_generator,
    write_generator,
)
from fracmg.errors import CacheIntegrityError


@pytest.fixture(scope="module")
def gen():
    level = build_hierarchy(4, 4, 2, (2.0, 2.0))[2]
    return build_generator(level, discretize_measure(lambda t: 1.0, 8), KernelParams(0.8, 0.5))


def test_roundtrip_bitwise(gen, tmp_path):
    back = cache_roundtrip(gen, tmp_path)
    assert back.values.tobytes() == gen.values.tobytes()
    assert back.params_digest == gen.params_digest


def test_header_layout(gen, tmp_path):
    path = write_generator(gen, tmp_path / "g.fmg")
    data = path.read_bytes()
    assert data[:4] == MAGIC
    version, k, n, l = struct.unpack_from("<IIII", data, 4)
    assert (version, k, n, l) == (1, 2, gen.level.n, gen.level.l)
    alpha, c = struct.unpack_from("<dd", data, 20)
    assert (alpha, c) == (0.8, 0.5)
    (count,) = struct.unpack_from("<I", data, 36)
    assert count == 8
    assert len(data) == 40 + 16 * count + 8 * gen.values.size


@pytest.mark.parametrize(
    "damage",
    [
        lambda b: b[:-3],
        lambda b: b"XXXX" + b[4:],
        lambda b: b[:4] + struct.pack("<I", 9) + b[8:],
        lambda b: b[:-8] + struct.pack("<d", float("nan")),
        lambda b: b[:10],
    ],
)
def test_damaged_files_rejected(gen, tmp_path, damage):
    path = write_generator(gen, tmp_path / "g.fmg")
    path.write_bytes(damage(path.read_bytes()))
    with pytest.raises(CacheIntegrityError):
        read_generator(path, gen.level, gen.measure, gen.params)


def test_mismatch_detected(gen, tmp_path):
    path = write_generator(gen, tmp_path / "g.fmg")
    with pytest.raises(CacheMismatch):
        read_generator(path, gen.level, gen.measure, KernelParams(0.9, 0.5))
    other = build_hierarchy(4, 4, 1, (2.0, 2.0))[1]
    with pytest.raises(CacheMismatch):
        read_generator(path, other, gen.measure, gen.params)


def test_domain_changes_file_name(gen, tmp_path):
    a = cache_path(tmp_path, gen.level, gen.measure, gen.params)
    level = build_hierarchy(4, 4, 2, (4.0, 4.0))[2]
    b = cache_path(tmp_path, level, gen.measure, gen.params)
    assert a != b


def test_load_or_build(tmp_path, caplog):
    level = build_hierarchy(4, 4, 2, (2.0, 2.0))[2]
    m, p = axis_measure(), KernelParams(0.75)
    first = load_or_build(level, m, p, tmp_path)
    path = cache_path(tmp_path, level, m, p)
    assert path.exists()
    assert np.array_equal(load_or_build(level, m, p, tmp_path).values, first.values)
    path.write_bytes(b"junk")
    with caplog.at_level("WARNING"):
        again = load_or_build(level, m, p, tmp_path)
    assert "re-assembling" in caplog.text
    assert np.array_equal(again.values, first.values)
    assert not list(tmp_path.glob("*.tmp"))
