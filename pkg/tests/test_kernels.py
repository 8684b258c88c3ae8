"""Backend parity: the compiled kernels must reproduce the pure-Python
fallback bit-for-bit on the sequential learning loops (and to 1e-10 on AVI,
whose dot-product reduction order numpy does not pin down)."""

import numpy as np
import pytest

from stomp import _kernels, learning, models, planner, subtasks
from stomp.learning import Hyperparams
from stomp.models import ModelHyperparams

needs_both = pytest.mark.skipif(
    len(_kernels.available_backends()) < 2,
    reason="compiled kernel extension not built")


@pytest.fixture(scope="module")
def tasks(two_room):
    return [
        subtasks.make_feature_attainment_task(two_room.hallway_indices[0], 1.0),
        subtasks.make_shortest_path_task(two_room, two_room.hallways[0]),
        subtasks.make_eigen_task(two_room, 1, 1),
    ]


@needs_both
def test_sample_steps_identical(two_room):
    u = np.random.default_rng(0).random((20000, 2))
    out = {}
    for name in ("python", "cython"):
        impl = _kernels.get_backend(name)
        out[name] = impl.sample_steps(two_room.t_cum, two_room.t_next,
                                      two_room.t_rew, two_room.t_n,
                                      two_room.start_index, u)
    for a, b in zip(out["python"], out["cython"]):
        assert np.array_equal(a, b)


@needs_both
@pytest.mark.parametrize("lam,lam_prime", [(0.0, 0.0), (0.4, 0.2)])
def test_option_learning_bitwise_parity(two_room, tasks, lam, lam_prime):
    hp = Hyperparams(lam=lam, lam_prime=lam_prime, alpha_primary=0.9,
                     lam_primary=lam)
    results = {}
    for name in ("python", "cython"):
        _, w_p, state = learning.learn_options(two_room, tasks, hp, 4000, 77,
                                               eval_cadence=0, backend=name)
        results[name] = (w_p, state.W.copy(), state.E.copy(),
                         state.TH.copy(), state.ETH.copy())
    for a, b in zip(results["python"], results["cython"]):
        assert np.array_equal(a, b)


@needs_both
@pytest.mark.parametrize("lam", [0.0, 0.3])
@pytest.mark.parametrize("literal", [False, True])
def test_model_learning_bitwise_parity(two_room, tasks, lam, literal):
    opts, _, _ = learning.learn_options(two_room, tasks[:1], Hyperparams(),
                                        5000, 5, eval_cadence=0)
    option_set = learning.primitive_options() + opts
    hp = ModelHyperparams(0.1, 0.1, lam)
    results = {}
    steps = 3000 if lam else 8000
    for name in ("python", "cython"):
        mdls, _ = models.learn_models(two_room, option_set, hp, steps, 13,
                                      eval_cadence=0, literal=literal,
                                      backend=name)
        results[name] = mdls
    for ma, mb in zip(results["python"], results["cython"]):
        assert np.array_equal(ma.w_r, mb.w_r)
        assert np.array_equal(ma.nt, mb.nt)


@needs_both
def test_avi_parity_within_tolerance(two_room):
    menu = planner.primitive_idealized_models(two_room)
    out = {}
    for name in ("python", "cython"):
        ps = planner.plan(menu, two_room, 6000, 1.0, seed=21, eval_cadence=0,
                          backend=name)
        out[name] = ps.w
    assert np.allclose(out["python"], out["cython"], atol=1e-10, rtol=0.0)


@needs_both
def test_four_room_trajectory_parity(four_room):
    u = np.random.default_rng(3).random((50000, 2))
    outs = []
    for name in ("python", "cython"):
        impl = _kernels.get_backend(name)
        outs.append(impl.sample_steps(four_room.t_cum, four_room.t_next,
                                      four_room.t_rew, four_room.t_n,
                                      four_room.start_index, u))
    for a, b in zip(*outs):
        assert np.array_equal(a, b)


def test_backend_selection_api():
    assert _kernels.backend_name in ("python", "cython")
    assert _kernels.get_backend("python").BACKEND == "python"
    with pytest.raises(ValueError):
        _kernels.get_backend("fortran")
