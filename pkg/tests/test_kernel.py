import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracmg import (
    DirectionalMeasure,
    KernelParams,
    axis_measure,
    bilinear_entry,
    build_hierarchy,
    discretize_measure,
    entry_interaction_I,
    pair_interaction,
    rl_indicator_integral,
)
from fracmg.errors import ConfigError
from fracmg.kernel import pair_interaction_batch

from oracles import pair_quadrature, rl_quadrature


def random_pair(rng):
    """Two random triangles and a direction that puts the source upstream."""
    while True:
        src = rng.uniform(-1, 1, (3, 2))
        tgt = rng.uniform(-1, 1, (3, 2)) + rng.uniform(-1.5, 1.5, 2)
        for tri in (src, tgt):
            e1, e2 = tri[1] - tri[0], tri[2] - tri[0]
            area = e1[0] * e2[1] - e1[1] * e2[0]
            if abs(area) < 0.05:
                break
        else:
            d = tgt.mean(0) - src.mean(0)
            theta = math.atan2(d[1], d[0]) + rng.uniform(-0.6, 0.6)
            return src, tgt, theta


def test_unit_square_cases():
    lower = np.array([[0, 0], [1, 0], [1, 1]], float)
    upper = np.array([[0, 0], [1, 1], [0, 1]], float)
    # nu = 1, theta = 0, source = target: int_0^1 (1 - y)^2 / 2 dy
    assert pair_interaction(lower, lower, 0.0, 1.0) == pytest.approx(1 / 6, abs=1e-14)
    # target upstream of source gives nothing
    shifted = lower - [2.0, 0.0]
    assert pair_interaction(lower, shifted, 0.0, 0.5) == 0.0
    assert pair_interaction(upper, upper + [5.0, 0.0], 0.0, 0.4) > 0.0


@pytest.mark.parametrize("nu", [0.1, 0.5, 0.9])
def test_pair_against_quadrature(nu):
    rng = np.random.default_rng(int(nu * 100))
    checked = 0
    while checked < 6:
        src, tgt, theta = random_pair(rng)
        ref = pair_quadrature(src, tgt, theta, nu)
        if ref <= 1e-6:
            continue
        assert pair_interaction(src, tgt, theta, nu) == pytest.approx(ref, rel=1e-8)
        checked += 1


def test_batch_matches_scalar():
    rng = np.random.default_rng(1)
    pairs = [random_pair(rng) for _ in range(10)]
    theta = pairs[0][2]
    S = np.array([p[0] for p in pairs])
    T = np.array([p[1] for p in pairs])
    batch = pair_interaction_batch(S, T, theta, 0.3, chunk=3)
    single = [pair_interaction(s, t, theta, 0.3) for s, t in zip(S, T)]
    assert np.allclose(batch, single, rtol=1e-13, atol=1e-15)


def test_vertex_order_irrelevant():
    rng = np.random.default_rng(5)
    src, tgt, theta = random_pair(rng)
    a = pair_interaction(src, tgt, theta, 0.6)
    b = pair_interaction(src[::-1], tgt[[1, 2, 0]], theta, 0.6)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-15)


@given(
    st.floats(0.05, 1.0),
    st.floats(-3, 3),
    st.floats(0.01, 3),
    st.floats(-4, 8),
)
@settings(max_examples=40, deadline=None)
def test_rl_indicator_against_quadrature(nu, a, width, x):
    b = a + width
    ref = rl_quadrature(nu, a, b, x)
    assert rl_indicator_integral(nu, a, b, x) == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_rl_indicator_rejects_bad_input():
    with pytest.raises(ValueError):
        rl_indicator_integral(0.5, 1.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        rl_indicator_integral(0.0, 0.0, 1.0, 2.0)


def test_rl_indicator_vanishes_upstream():
    assert rl_indicator_integral(0.4, 1.0, 2.0, np.array([-1.0, 1.0])).tolist() == [0.0, 0.0]


@pytest.mark.parametrize("alpha", [0.5, 1.01, -1.0])
def test_alpha_range(alpha):
    with pytest.raises(ConfigError):
        KernelParams(alpha)


def test_negative_reaction_rejected():
    with pytest.raises(ConfigError):
        KernelParams(0.75, c=-1.0)


def test_nu():
    assert KernelParams(0.75).nu == pytest.approx(0.5)
    assert KernelParams(1.0).nu == 0.0


def test_measure_symmetry():
    assert axis_measure().is_pi_symmetric()
    lopsided = DirectionalMeasure(np.array([0.0, np.pi]), np.array([1.0, 2.0]))
    assert not lopsided.is_pi_symmetric()
    with pytest.raises(ConfigError):
        lopsided.partner_index()
    with pytest.raises(ConfigError):
        DirectionalMeasure(np.array([0.0]), np.array([-1.0]))


def test_discretize_measure():
    m = discretize_measure(lambda t: 1.0, 32)
    assert len(m) == 32
    assert m.total_weight == pytest.approx(2 * np.pi)
    thetas, _ = m.half()
    assert len(thetas) == 16
    with pytest.raises(ConfigError):
        discretize_measure(lambda t: 1.0, 30)


def test_entry_is_minus_weighted_interaction():
    level = build_hierarchy(4, 4, 2, (2.0, 2.0))[2]
    params = KernelParams(0.8)
    measure = discretize_measure(lambda t: 1.0 + np.cos(t) ** 2, 8)
    for offset in [(0, 0), (1, 0), (2, 1), (-1, 3)]:
        expected = -sum(
            w * entry_interaction_I((0, 0), offset, t, params, level)
            for t, w in measure.atoms
        )
        assert bilinear_entry(offset, measure, params, level) == pytest.approx(expected, rel=1e-12)


def test_entry_symmetric_in_offset():
    level = build_hierarchy(4, 4, 2, (2.0, 2.0))[2]
    params = KernelParams(0.7)
    measure = discretize_measure(lambda t: 1.0, 12)
    for offset in [(1, 0), (2, -1), (1, 1), (3, 2)]:
        a = bilinear_entry(offset, measure, params, level)
        b = bilinear_entry((-offset[0], -offset[1]), measure, params, level)
        assert a == pytest.approx(b, rel=1e-11)


def test_entry_interaction_rejects_integer_order():
    level = build_hierarchy(4, 4, 1, (2.0, 2.0))[1]
    with pytest.raises(ValueError):
        entry_interaction_I((0, 0), (1, 0), 0.0, KernelParams(1.0), level)


def test_integer_order_laplacian_stencil():
    level = build_hierarchy(4, 4, 1, (2.0, 2.0))[1]
    p = KernelParams(1.0)
    m = axis_measure()
    assert bilinear_entry((0, 0), m, p, level) == pytest.approx(2.0)
    for off in [(1, 0), (0, 1), (-1, 0), (0, -1)]:
        assert bilinear_entry(off, m, p, level) == pytest.approx(-0.5)
    assert bilinear_entry((1, 1), m, p, level) == pytest.approx(0.0, abs=1e-15)


def test_diagonal_positive_and_scaling():
    H = build_hierarchy(4, 4, 3, (2.0, 2.0))
    params = KernelParams(0.75)
    m = axis_measure()
    d = [bilinear_entry((0, 0), m, params, H[k]) for k in (1, 2, 3)]
    assert min(d) > 0
    # entries scale like h^nu
    assert d[0] / d[1] == pytest.approx(2**params.nu, rel=1e-12)
