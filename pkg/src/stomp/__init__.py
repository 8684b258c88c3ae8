"""Reward-respecting subtasks in gridworlds.

The package implements the full subtask -> option -> model -> planning
progression with exact dynamic-programming oracles for every stage, plus an
experiment harness and CLI that reproduce the gridworld studies. Hot loops
run in a compiled kernel with a pure-Python fallback (see
``stomp._kernels.backend_name``).
"""

from ._kernels import available_backends, backend_name
from .gridworld import build_four_room, build_two_room
from .learning import Hyperparams, OptionDef, td_error, uwt
from .models import LinearOptionModel, ModelHyperparams, idealized_model
from .planner import exact_value_iteration, optimal_subtask_values, plan
from .subtasks import (GvfTask, make_eigen_task, make_feature_attainment_task,
                       make_shortest_path_task)

__version__ = "0.1.0"
__all__ = [
    "available_backends", "backend_name", "build_two_room", "build_four_room",
    "Hyperparams", "OptionDef", "td_error", "uwt", "LinearOptionModel",
    "ModelHyperparams", "idealized_model", "exact_value_iteration",
    "optimal_subtask_values", "plan", "GvfTask", "make_eigen_task",
    "make_feature_attainment_task", "make_shortest_path_task", "__version__",
]
