"""Small shared helpers: metrics and the documented sub-seeding scheme."""

from __future__ import annotations

import numpy as np

# Fixed stage ids for per-run random-stream splitting. All randomness in a
# run flows from default_rng(SeedSequence((run_seed, stage_id))); run_seed
# is base_seed + run_index.
STAGE_IDS = {"options": 0, "models": 1, "plan": 2, "models_literal": 3}


def rmse(a, b):
    """Root-mean-square difference with uniform weighting over all entries."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def stage_rng(run_seed, stage, group=0):
    """The per-stage random generator for one run (see STAGE_IDS);
    ``group`` separates independent repetitions within a stage."""
    return np.random.default_rng(
        np.random.SeedSequence((run_seed, STAGE_IDS[stage], group)))
