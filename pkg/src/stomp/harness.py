"""Experiment harness: configs, seed management, multi-run execution,
CSV persistence, and aggregation.

CSV schema (UTF-8, header row): ``run,stage,x_name,x,metric,value``.
Aggregated curves are written separately as
``stage,x_name,x,metric,mean,stderr,runs``; the standard error is the
sample standard deviation over runs divided by sqrt(run count).

All randomness flows from one seeded generator per run: run_seed is
base_seed + run_index, and each stage draws from
``default_rng(SeedSequence((run_seed, stage_id, group)))`` (see
``util.STAGE_IDS``). Re-running a preset with the same base seed therefore
reproduces byte-identical CSVs, regardless of the worker-thread count.
"""

from __future__ import annotations

import concurrent.futures
import configparser
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import gridworld, learning, models, planner, subtasks
from .learning import Hyperparams
from .models import ModelHyperparams
from .util import STAGE_IDS, stage_rng


class ConfigError(Exception):
    """An experiment configuration failed validation."""


# -- run logs -----------------------------------------------------------------

CSV_HEADER = "run,stage,x_name,x,metric,value"
AGG_HEADER = "stage,x_name,x,metric,mean,stderr,runs"


class RunLog:
    """Time-indexed metric records for one or more runs."""

    def __init__(self, records=None):
        self.records = list(records) if records else []

    def append(self, run, stage, x_name, x, metric, value):
        self.records.append((int(run), stage, x_name, float(x), metric, float(value)))

    def extend(self, other):
        self.records.extend(other.records)

    def __len__(self):
        return len(self.records)

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")
            for run, stage, x_name, x, metric, value in self.records:
                fh.write(f"{run},{stage},{x_name},{_num(x)},{metric},{_num(value)}\n")

    @classmethod
    def from_csv(cls, path):
        log = cls()
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if header != CSV_HEADER:
                raise ValueError(f"unexpected CSV header in {path}: {header!r}")
            for line in fh:
                run, stage, x_name, x, metric, value = line.rstrip("\n").split(",")
                log.append(int(run), stage, x_name, float(x), metric, float(value))
        return log


def _num(x):
    """Stable, compact number formatting (ints stay ints)."""
    f = float(x)
    if f.is_integer() and abs(f) < 1e15:
        return str(int(f))
    return repr(f)


def aggregate(log):
    """Mean and standard error per (stage, metric, x) across runs.

    Every run must have logged the same x grid for a given (stage, metric);
    mismatched grids are rejected.
    """
    per_key = {}
    order = []
    for run, stage, x_name, x, metric, value in log.records:
        key = (stage, x_name, metric)
        if key not in per_key:
            per_key[key] = {}
            order.append(key)
        per_key[key].setdefault(run, []).append((x, value))
    rows = []
    for key in order:
        stage, x_name, metric = key
        by_run = per_key[key]
        runs = sorted(by_run)
        grid = [x for x, _ in by_run[runs[0]]]
        for r in runs:
            if [x for x, _ in by_run[r]] != grid:
                raise ValueError(
                    f"mismatched x grids for {key} between runs {runs[0]} and {r}")
        mat = np.array([[v for _, v in by_run[r]] for r in runs])
        mean = mat.mean(axis=0)
        n = len(runs)
        if n > 1:
            stderr = mat.std(axis=0, ddof=1) / np.sqrt(n)
        else:
            stderr = np.zeros_like(mean)
        for j, x in enumerate(grid):
            rows.append((stage, x_name, x, metric, float(mean[j]),
                         float(stderr[j]), n))
    return rows


def write_aggregate_csv(rows, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(AGG_HEADER + "\n")
        for stage, x_name, x, metric, mean, stderr, n in rows:
            fh.write(f"{stage},{x_name},{_num(x)},{metric},{_num(mean)},"
                     f"{_num(stderr)},{n}\n")


# -- experiment configuration ---------------------------------------------------


@dataclass(frozen=True)
class TaskSpec:
    """Declarative subtask: resolved against the layout at run time."""

    kind: str                 # rr | sp | eigen
    hallway: str = ""         # rr/sp target hallway label, e.g. "H1"
    bonus: float = 1.0        # rr bonus weight
    eigen_index: int = 1
    sign: int = 1
    classic_sp: bool = False

    @property
    def task_id(self):
        if self.kind == "rr":
            return f"rr:{self.hallway}:w{self.bonus:g}"
        if self.kind == "sp":
            return f"sp:{self.hallway}"
        return f"eigen:{self.eigen_index}:{'+' if self.sign > 0 else '-'}"


@dataclass(frozen=True)
class MenuSpec:
    menu_id: str
    members: tuple  # "primitives" and/or task ids


@dataclass
class ExperimentConfig:
    experiment_id: str
    environment: str
    runs: int = 10
    base_seed: int = 0
    out_dir: str = ""
    task_groups: tuple = ()            # tuple of tuples of TaskSpec
    stages: tuple = ("options", "models", "plan")
    option_steps: int = 50000
    option_hp: Hyperparams = field(default_factory=Hyperparams)
    option_eval_cadence: int = 500
    export_option_maps: bool = True
    model_steps: int = 50000
    model_hp: ModelHyperparams = field(default_factory=ModelHyperparams)
    model_eval_cadence: int = 500
    snapshot_steps: tuple = ()
    literal_eq19_21: bool = False
    compare_literal: bool = False
    plan_updates: int = 6000
    plan_alpha: float = 1.0
    plan_eval_cadence: int = 10
    menus: tuple = ()                  # tuple of MenuSpec
    snapshot_plan_menus: tuple = ()    # menu ids re-planned per model snapshot
    model_source: str = "learned"      # learned | idealized

    def all_tasks(self):
        return [spec for group in self.task_groups for spec in group]

    def validate(self, layout=None):
        if self.runs < 1:
            raise ConfigError("run count must be >= 1")
        if self.environment not in ("two_room", "four_room"):
            raise ConfigError(f"unknown environment {self.environment!r}")
        if self.model_source not in ("learned", "idealized"):
            raise ConfigError(f"unknown model_source {self.model_source!r}")
        ids = [s.task_id for s in self.all_tasks()]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate task ids in {ids}")
        known = set(ids) | {"primitives"}
        for menu in self.menus:
            for member in menu.members:
                if member not in known:
                    raise ConfigError(
                        f"menu {menu.menu_id!r} references unknown member {member!r}")
        for menu_id in self.snapshot_plan_menus:
            if menu_id not in {m.menu_id for m in self.menus}:
                raise ConfigError(f"unknown snapshot-plan menu {menu_id!r}")
        if layout is not None:
            labels = {f"H{k + 1}" for k in range(len(layout.hallways))}
            for spec in self.all_tasks():
                if spec.kind in ("rr", "sp") and spec.hallway not in labels:
                    raise ConfigError(
                        f"{spec.task_id}: hallway {spec.hallway!r} not in {sorted(labels)}")


def resolve_task(layout, spec):
    """Turn a TaskSpec into a GvfTask bound to the layout."""
    if spec.kind == "rr":
        idx = _hallway_index(layout, spec.hallway)
        return subtasks.make_feature_attainment_task(idx, spec.bonus,
                                                     label=spec.task_id)
    if spec.kind == "sp":
        cell = layout.hallways[int(spec.hallway[1:]) - 1]
        return subtasks.make_shortest_path_task(layout, cell,
                                                classic=spec.classic_sp,
                                                label=spec.task_id)
    if spec.kind == "eigen":
        return subtasks.make_eigen_task(layout, spec.eigen_index, spec.sign,
                                        label=spec.task_id)
    raise ConfigError(f"unknown task kind {spec.kind!r}")


def _hallway_index(layout, label):
    k = int(label[1:]) - 1
    return layout.hallway_indices[k]


# -- shared (cross-run) oracle computation --------------------------------------


def compute_shared(cfg, layout):
    """Oracles identical across runs: exact v_mu, per-task optimal subtask
    values, the primitive-menu V*, and (for idealized planning) optimal
    options with their exact models."""
    v_mu = planner.solve_v_mu(layout)
    tasks = {}
    v_star_tasks = {}
    for spec in cfg.all_tasks():
        task = resolve_task(layout, spec)
        tasks[spec.task_id] = task
        v_star_tasks[spec.task_id] = planner.optimal_subtask_values(
            layout, task, v_mu)
    v_star = planner.exact_value_iteration(layout, tol=1e-12)
    shared = {"v_mu": v_mu, "tasks": tasks, "v_star_tasks": v_star_tasks,
              "v_star": v_star, "d_mu": planner.solve_mu_visitation(layout)}
    if cfg.model_source == "idealized" and "plan" in _stage_closure(cfg):
        ideal_menu = {}
        for spec in cfg.all_tasks():
            opt = planner.optimal_option(layout, tasks[spec.task_id], v_mu)
            ideal_menu[spec.task_id] = models.idealized_model(layout, opt)
        shared["idealized_task_models"] = ideal_menu
    return shared


def _stage_closure(cfg):
    """Requested stages plus their dependencies."""
    stages = set(cfg.stages)
    if "plan" in stages and cfg.model_source == "learned":
        stages.add("models")
    if "models" in stages and cfg.all_tasks():
        stages.add("options")
    if not cfg.all_tasks():
        stages.discard("options")
    return stages


# -- single-run execution --------------------------------------------------------


def run_one(cfg, run_idx, layout, shared):
    """Execute the configured stages for one run; returns its RunLog."""
    log = RunLog()
    run_seed = cfg.base_seed + run_idx
    stages = _stage_closure(cfg)
    tasks_by_id = shared["tasks"]

    learned_options = {}
    w_primary = None
    if "options" in stages:
        for g, group in enumerate(cfg.task_groups):
            tasks = [tasks_by_id[s.task_id] for s in group]
            if not tasks:
                continue
            rng = stage_rng(run_seed, "options", g)
            opts, w_p, _state = learning.learn_options(
                layout, tasks, cfg.option_hp, cfg.option_steps, rng,
                eval_cadence=cfg.option_eval_cadence,
                oracles=shared["v_star_tasks"], log=log, run_id=run_idx,
                mu_weights=shared["d_mu"])
            w_primary = w_p
            for spec, opt in zip(group, opts):
                learned_options[spec.task_id] = opt
        if cfg.export_option_maps:
            for task_id, opt in learned_options.items():
                beta = opt.beta_table(layout)
                for s in range(layout.n_states):
                    log.append(run_idx, f"option_map:{task_id}", "state", s,
                               "greedy_action", opt.greedy_action(s))
                    log.append(run_idx, f"option_map:{task_id}", "state", s,
                               "stop", beta[s])

    option_set = learning.primitive_options() + [
        learned_options[s.task_id] for s in cfg.all_tasks()
        if s.task_id in learned_options]
    learned_models = {}
    snapshots = {}
    if "models" in stages:
        ideals = {o.option_id: models.idealized_model(layout, o)
                  for o in option_set}
        rng = stage_rng(run_seed, "models")
        mdl_list, snaps = models.learn_models(
            layout, option_set, cfg.model_hp, cfg.model_steps, rng,
            eval_cadence=cfg.model_eval_cadence, ideals=ideals, log=log,
            run_id=run_idx, snapshot_steps=cfg.snapshot_steps,
            literal=cfg.literal_eq19_21)
        learned_models = {m.option_id: m for m in mdl_list}
        snapshots = snaps
        if cfg.compare_literal:
            rng = stage_rng(run_seed, "models_literal")
            lit_list, _ = models.learn_models(
                layout, option_set, cfg.model_hp, cfg.model_steps, rng,
                eval_cadence=cfg.model_eval_cadence, ideals=ideals, log=log,
                run_id=run_idx, literal=True, stage="models_literal")
            for m in lit_list:
                learned_models[m.option_id + ":literal"] = m

    if "plan" in stages:
        for menu_spec in cfg.menus:
            menu = _build_menu(cfg, menu_spec, layout, shared, tasks_by_id,
                               learned_options, learned_models)
            rng = stage_rng(run_seed, "plan")
            planner.plan(menu, layout, cfg.plan_updates, cfg.plan_alpha, rng,
                         eval_cadence=cfg.plan_eval_cadence,
                         v_star=shared["v_star"], log=log, run_id=run_idx,
                         menu_id=menu_spec.menu_id)
        for menu_id in cfg.snapshot_plan_menus:
            menu_spec = next(m for m in cfg.menus if m.menu_id == menu_id)
            for step, snap_models in sorted(snapshots.items()):
                snap_by_id = {m.option_id: m for m in snap_models}
                menu = _build_menu(cfg, menu_spec, layout, shared, tasks_by_id,
                                   learned_options, snap_by_id)
                rng = stage_rng(run_seed, "plan")
                ps = planner.plan(menu, layout, cfg.plan_updates,
                                  cfg.plan_alpha, rng,
                                  eval_cadence=cfg.plan_eval_cadence)
                stage = f"plan_from_snapshot:{menu_id}"
                log.append(run_idx, stage, "model_steps", step,
                           "final_start_value", ps.w[layout.start_index])
                log.append(run_idx, stage, "model_steps", step, "final_rmse",
                           np.sqrt(np.mean((ps.w - shared["v_star"]) ** 2)))

    return log, snapshots, w_primary


def _build_menu(cfg, menu_spec, layout, shared, tasks_by_id, learned_options,
                learned_models):
    """Model list for one menu, honoring the configured model source."""
    menu = []
    for member in menu_spec.members:
        if member == "primitives":
            if cfg.model_source == "idealized":
                menu.extend(planner.primitive_idealized_models(layout))
            else:
                menu.extend(learned_models[o.option_id]
                            for o in learning.primitive_options())
        else:
            if cfg.model_source == "idealized":
                menu.append(shared["idealized_task_models"][member])
            else:
                menu.append(learned_models[f"option:{member}"])
    return menu


# -- experiment execution ---------------------------------------------------------


def default_out_dir(cfg):
    base = cfg.out_dir or os.environ.get("STOMP_OUT", "out")
    return os.path.join(base, cfg.experiment_id) if not cfg.out_dir else cfg.out_dir


def run_experiment(cfg, threads=1):
    """Run all configured runs and write per-run plus aggregated CSVs.

    Returns the output directory. A failed run aborts the experiment with
    the offending seed identified.
    """
    layout = gridworld.build(cfg.environment)
    cfg.validate(layout)
    out_dir = default_out_dir(cfg)
    os.makedirs(out_dir, exist_ok=True)
    shared = compute_shared(cfg, layout)

    results = [None] * cfg.runs
    if threads <= 1:
        for r in range(cfg.runs):
            results[r] = _run_one_guarded(cfg, r, layout, shared)
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            futures = {pool.submit(_run_one_guarded, cfg, r, layout, shared): r
                       for r in range(cfg.runs)}
            for fut in concurrent.futures.as_completed(futures):
                results[futures[fut]] = fut.result()

    with open(os.path.join(out_dir, "layout.txt"), "w", encoding="utf-8") as fh:
        fh.write(gridworld.to_text(layout))
    combined = RunLog()
    for r, (log, snapshots, _w_p) in enumerate(results):
        log.to_csv(os.path.join(out_dir, f"run_{r:03d}.csv"))
        combined.extend(log)
        if r == 0 and snapshots:
            snap_dir = os.path.join(out_dir, "models")
            os.makedirs(snap_dir, exist_ok=True)
            for step, mdls in sorted(snapshots.items()):
                for m in mdls:
                    fname = f"{m.option_id.replace(':', '_')}_step{step}.csv"
                    models.save_model_csv(m, os.path.join(snap_dir, fname))
    combined.to_csv(os.path.join(out_dir, "all_runs.csv"))
    write_aggregate_csv(aggregate(combined), os.path.join(out_dir, "aggregate.csv"))
    return out_dir


def _run_one_guarded(cfg, run_idx, layout, shared):
    try:
        return run_one(cfg, run_idx, layout, shared)
    except Exception as exc:
        raise RuntimeError(
            f"run {run_idx} (seed {cfg.base_seed + run_idx}) failed: {exc}") from exc


# -- config files (INI: flat commented key-value with sections) -------------------


def load_config(path):
    """Parse an experiment config file into an ExperimentConfig."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if not parser.read(path):
        raise ConfigError(f"cannot read config file {path}")
    try:
        exp = parser["experiment"]
        cfg = ExperimentConfig(
            experiment_id=exp.get("id", "custom"),
            environment=exp.get("environment", "two_room"),
            runs=exp.getint("runs", 10),
            base_seed=exp.getint("base_seed", 0),
            out_dir=exp.get("out_dir", ""),
        )
        if "subtasks" in parser:
            sec = parser["subtasks"]
            groups = []
            for key in sec:  # declaration order
                if key.startswith("group"):
                    groups.append(tuple(_parse_task_spec(
                        tok, sec.getboolean("classic_sp", False))
                        for tok in _split(sec[key])))
            cfg.task_groups = tuple(groups)
        if "option_learning" in parser:
            sec = parser["option_learning"]
            cfg.option_steps = sec.getint("steps", cfg.option_steps)
            cfg.option_eval_cadence = sec.getint("eval_cadence",
                                                 cfg.option_eval_cadence)
            cfg.export_option_maps = sec.getboolean("export_maps", True)
            cfg.option_hp = Hyperparams(
                alpha=sec.getfloat("alpha", 0.1),
                alpha_prime=sec.getfloat("alpha_prime", 0.1),
                lam=sec.getfloat("lambda", 0.0),
                lam_prime=sec.getfloat("lambda_prime", 0.0),
                alpha_primary=sec.getfloat("alpha_primary", 0.9),
            )
        if "model_learning" in parser:
            sec = parser["model_learning"]
            cfg.model_steps = sec.getint("steps", cfg.model_steps)
            cfg.model_eval_cadence = sec.getint("eval_cadence",
                                                cfg.model_eval_cadence)
            cfg.model_hp = ModelHyperparams(
                alpha_r=sec.getfloat("alpha_r", 0.1),
                alpha_p=sec.getfloat("alpha_p", 0.1),
                lam=sec.getfloat("lambda", 0.0),
            )
            cfg.snapshot_steps = tuple(
                int(v) for v in _split(sec.get("snapshot_steps", "")))
            cfg.literal_eq19_21 = sec.getboolean("literal_eq19_21", False)
            cfg.compare_literal = sec.getboolean("compare_literal", False)
        if "planning" in parser:
            sec = parser["planning"]
            cfg.plan_updates = sec.getint("updates", cfg.plan_updates)
            cfg.plan_alpha = sec.getfloat("alpha", cfg.plan_alpha)
            cfg.plan_eval_cadence = sec.getint("eval_cadence",
                                               cfg.plan_eval_cadence)
            cfg.model_source = sec.get("model_source", cfg.model_source)
            menus = []
            for key in sec:  # declaration order
                if key.startswith("menu_"):
                    menus.append(MenuSpec(key[len("menu_"):],
                                          tuple(_split(sec[key]))))
            cfg.menus = tuple(menus)
            cfg.snapshot_plan_menus = tuple(
                _split(sec.get("snapshot_plan_menus", "")))
        if "stages" in parser:
            sec = parser["stages"]
            cfg.stages = tuple(n for n in ("options", "models", "plan")
                               if sec.getboolean(n, fallback=False))
        else:
            cfg.stages = ("options", "models", "plan")
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from exc
    cfg.validate()
    return cfg


def _split(text):
    return [tok.strip() for tok in text.replace("|", ",").split(",") if tok.strip()]


def _parse_task_spec(token, classic_sp=False):
    """Task tokens: ``rr:H1:1.0``, ``sp:H1``, ``eigen:1:+``."""
    parts = token.split(":")
    kind = parts[0]
    if kind == "rr":
        return TaskSpec("rr", hallway=parts[1], bonus=float(parts[2]))
    if kind == "sp":
        return TaskSpec("sp", hallway=parts[1], classic_sp=classic_sp)
    if kind == "eigen":
        sign = 1 if len(parts) < 3 or parts[2] != "-" else -1
        return TaskSpec("eigen", eigen_index=int(parts[1]), sign=sign)
    raise ConfigError(f"unknown task token {token!r}")


def _task_token(spec):
    if spec.kind == "rr":
        return f"rr:{spec.hallway}:{spec.bonus:g}"
    if spec.kind == "sp":
        return f"sp:{spec.hallway}"
    return f"eigen:{spec.eigen_index}:{'+' if spec.sign > 0 else '-'}"


def write_config(cfg, path):
    """Render an ExperimentConfig in the flat INI format ``load_config``
    reads (used to generate the shipped preset files)."""
    lines = [
        "; experiment definition (flat key-value format, ; starts a comment)",
        "[experiment]",
        f"id = {cfg.experiment_id}",
        f"environment = {cfg.environment}",
        f"runs = {cfg.runs}",
        f"base_seed = {cfg.base_seed}",
        "",
    ]
    if cfg.task_groups:
        lines.append("[subtasks]")
        lines.append("; one independently learned group per line")
        for g, group in enumerate(cfg.task_groups):
            lines.append(f"group{g + 1} = "
                         + ", ".join(_task_token(s) for s in group))
        lines.append("")
    hp = cfg.option_hp
    lines += [
        "[option_learning]",
        f"steps = {cfg.option_steps}",
        f"alpha = {hp.alpha:g}",
        f"alpha_prime = {hp.alpha_prime:g}",
        f"lambda = {hp.lam:g}",
        f"lambda_prime = {hp.lam_prime:g}",
        f"alpha_primary = {hp.alpha_primary:g}",
        f"eval_cadence = {cfg.option_eval_cadence}",
        f"export_maps = {str(cfg.export_option_maps).lower()}",
        "",
        "[model_learning]",
        f"steps = {cfg.model_steps}",
        f"alpha_r = {cfg.model_hp.alpha_r:g}",
        f"alpha_p = {cfg.model_hp.alpha_p:g}",
        f"lambda = {cfg.model_hp.lam:g}",
        f"eval_cadence = {cfg.model_eval_cadence}",
        f"literal_eq19_21 = {str(cfg.literal_eq19_21).lower()}",
        f"compare_literal = {str(cfg.compare_literal).lower()}",
    ]
    if cfg.snapshot_steps:
        lines.append("snapshot_steps = "
                     + ", ".join(str(s) for s in cfg.snapshot_steps))
    lines.append("")
    if cfg.menus:
        lines += [
            "[planning]",
            f"updates = {cfg.plan_updates}",
            f"alpha = {cfg.plan_alpha:g}",
            f"eval_cadence = {cfg.plan_eval_cadence}",
            f"model_source = {cfg.model_source}",
        ]
        for menu in cfg.menus:
            lines.append(f"menu_{menu.menu_id} = " + ", ".join(menu.members))
        if cfg.snapshot_plan_menus:
            lines.append("snapshot_plan_menus = "
                         + ", ".join(cfg.snapshot_plan_menus))
        lines.append("")
    stages = {"options", "models", "plan"}
    if set(cfg.stages) != stages:
        lines.append("[stages]")
        for name in ("options", "models", "plan"):
            lines.append(f"{name} = {str(name in cfg.stages).lower()}")
        lines.append("")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
