"""Backend benchmark: compiled kernels vs the pure-Python fallback.

Times the three hot loops (option learning, model learning, AVI) on the
two-room world and reports the speedup. Also cross-checks that the two
backends agree (bitwise for the learning loops, 1e-10 for AVI).
"""

from __future__ import annotations

import time

import numpy as np

from . import _kernels, gridworld, learning, models, planner, subtasks
from .learning import Hyperparams
from .models import ModelHyperparams


def _time(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def run_bench(steps=20000, seed=7):
    layout = gridworld.build_two_room()
    task = subtasks.make_feature_attainment_task(layout.hallway_indices[0], 1.0)
    hp = Hyperparams()
    mhp = ModelHyperparams()
    backends = _kernels.available_backends()
    print(f"available backends: {', '.join(backends)} "
          f"(active: {_kernels.backend_name})")
    if len(backends) < 2:
        print("compiled backend not built; run "
              "`pip install -e . --no-build-isolation` to compare")

    results = {}
    for name in backends:
        times = {}
        (res, times["options"]) = _time(lambda: learning.learn_options(
            layout, [task], hp, steps, seed, eval_cadence=0, backend=name))
        options, w_p, _ = res
        opt_set = learning.primitive_options() + options
        (mdl, times["models"]) = _time(lambda: models.learn_models(
            layout, opt_set, mhp, steps, seed, eval_cadence=0, backend=name))
        menu = [m for m in mdl[0]]
        (ps, times["plan"]) = _time(lambda: planner.plan(
            menu, layout, 6000, 1.0, seed, eval_cadence=0, backend=name))
        results[name] = (times, options[0].critic_w, mdl[0][0].w_r, ps.w)

    print(f"\n{'loop':<10}" + "".join(f"{n:>14}" for n in backends)
          + ("{:>10}".format("speedup") if len(backends) > 1 else ""))
    for key, label in (("options", "options"), ("models", "models"),
                       ("plan", "plan")):
        row = f"{label:<10}"
        for name in backends:
            row += f"{results[name][0][key]:>13.3f}s"
        if len(backends) > 1:
            ratio = results["python"][0][key] / max(results["cython"][0][key], 1e-9)
            row += f"{ratio:>9.1f}x"
        print(row)

    if len(backends) > 1:
        py, cy = results["python"], results["cython"]
        bit = (np.array_equal(py[1], cy[1]) and np.array_equal(py[2], cy[2]))
        close = np.allclose(py[3], cy[3], atol=1e-10, rtol=0.0)
        print(f"\nlearning loops bit-identical across backends: {bit}")
        print(f"AVI weights within 1e-10 across backends: {close}")
        if not (bit and close):
            raise SystemExit("backend mismatch")
