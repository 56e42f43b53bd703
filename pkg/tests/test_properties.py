import numpy as np
import pytest

from fracmg.bench import RunConfig, prepare_solver


@pytest.fixture(scope="module", params=["example1", "example2"])
def solver4(request, gen_cache):
    cfg = RunConfig.preset(request.param, cache_dir=str(gen_cache))
    return prepare_solver(cfg, 4)


def test_preconditioner_symmetric_positive(solver4):
    hierarchy, _, mg = solver4
    rng = np.random.default_rng(11)
    for _ in range(3):
        g, h = rng.standard_normal((2, hierarchy.finest.num_nodes))
        Bg, Bh = mg.vcycle_apply(g), mg.vcycle_apply(h)
        assert Bg @ h == pytest.approx(Bh @ g, rel=1e-12)
        assert Bg @ g > 0


def test_zero_load_takes_one_iteration(solver4):
    hierarchy, _, mg = solver4
    f = np.zeros(hierarchy.finest.num_nodes)
    for solve in (mg.solve_vcycle, mg.solve_pcg, mg.solve_cg):
        u, rep = solve(f)
        assert rep.converged and rep.iterations == 1 and not u.any()


def test_repeat_runs_are_deterministic(solver4):
    hierarchy, _, mg = solver4
    f = np.full(hierarchy.finest.num_nodes, hierarchy.finest.h ** 2)
    a, ra = mg.solve_pcg(f)
    b, rb = mg.solve_pcg(f)
    assert ra.iterations == rb.iterations
    assert np.array_equal(a, b)
