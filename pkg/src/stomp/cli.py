"""Command-line interface.

Subcommands:
  reproduce FIG     run a shipped figure preset end to end
  learn-options     option-learning stage only, from a config file
  learn-models      option + model learning, from a config file
  plan              full pipeline for the configured planning menus
  oracle            dump exact DP tables (V*, v_mu, per-task v*, models)
  validate-layout   construction-time checks for a named environment
  bench             time the compiled kernels against the Python fallback
"""

from __future__ import annotations

import argparse
import os
import sys

from . import (_kernels, gridworld, harness, learning, models, planner,
               presets, subtasks)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="stomp",
        description="Reward-respecting subtasks: subtask -> option -> model "
                    "-> planning in gridworlds.")
    parser.add_argument("--backend", choices=["python", "cython"],
                        help="force a kernel backend (default: compiled if built)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reproduce", help="run a figure preset")
    p.add_argument("figure", choices=sorted(presets.PRESETS))
    _common_run_args(p)

    for name in ("learn-options", "learn-models", "plan"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        _common_run_args(p)

    p = sub.add_parser("oracle", help="write exact DP oracle tables as CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("validate-layout")
    p.add_argument("environment", choices=["two_room", "four_room"])

    p = sub.add_parser("bench", help="compare kernel backends")
    p.add_argument("--steps", type=int, default=20000)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (harness.ConfigError, gridworld.LayoutError, KeyError,
            FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _common_run_args(p):
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="base seed")
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)


def _dispatch(args):
    if args.backend:
        _kernels.set_default_backend(args.backend)

    if args.command == "reproduce":
        cfg = presets.get_preset(args.figure, runs=args.runs,
                                 base_seed=args.seed, out_dir=args.out)
        out = harness.run_experiment(cfg, threads=args.threads)
        print(f"{args.figure}: wrote {out} (backend: {_kernels.backend_name})")
        return 0

    if args.command in ("learn-options", "learn-models", "plan"):
        cfg = harness.load_config(args.config)
        stage_sets = {"learn-options": ("options",),
                      "learn-models": ("options", "models"),
                      "plan": ("options", "models", "plan")}
        cfg.stages = tuple(s for s in cfg.stages if s in stage_sets[args.command])
        if args.runs is not None:
            cfg.runs = args.runs
        if args.seed is not None:
            cfg.base_seed = args.seed
        if args.out is not None:
            cfg.out_dir = args.out
        out = harness.run_experiment(cfg, threads=args.threads)
        print(f"{cfg.experiment_id}: wrote {out}")
        return 0

    if args.command == "oracle":
        return _oracle(args)

    if args.command == "validate-layout":
        layout = gridworld.build(args.environment)  # raises on failure
        v_star = planner.exact_value_iteration(layout, tol=1e-12)
        print(f"{args.environment}: {layout.n_states} non-terminal cells, "
              f"{len(layout.hallways)} hallway(s)")
        print(f"V*(start) = {v_star[layout.start_index]:.6f}"
              + (f" (0.99^18 = {0.99 ** 18:.6f})"
                 if args.environment == "two_room" else ""))
        print("layout verification passed")
        return 0

    if args.command == "bench":
        from .bench import run_bench
        run_bench(args.steps)
        return 0

    raise ValueError(f"unhandled command {args.command}")


def _oracle(args):
    cfg = harness.load_config(args.config)
    layout = gridworld.build(cfg.environment)
    out_dir = args.out or harness.default_out_dir(cfg)
    os.makedirs(out_dir, exist_ok=True)

    def write_table(name, values):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("state,value\n")
            for s, v in enumerate(values):
                fh.write(f"{s},{float(v)!r}\n")

    v_star = planner.exact_value_iteration(layout, tol=1e-12)
    v_mu = planner.solve_v_mu(layout)
    write_table("v_star.csv", v_star)
    write_table("v_mu.csv", v_mu)
    for m in planner.primitive_idealized_models(layout):
        fname = f"ideal_{m.option_id.replace(':', '_')}.csv"
        models.save_model_csv(models.LinearOptionModel.from_idealized(m),
                              os.path.join(out_dir, fname))
    for spec in cfg.all_tasks():
        task = harness.resolve_task(layout, spec)
        v_task = planner.optimal_subtask_values(layout, task, v_mu)
        write_table(f"v_star_{spec.task_id.replace(':', '_')}.csv", v_task)
        opt = planner.optimal_option(layout, task, v_mu)
        ideal = models.idealized_model(layout, opt)
        fname = f"ideal_{opt.option_id.replace(':', '_')}.csv"
        models.save_model_csv(models.LinearOptionModel.from_idealized(ideal),
                              os.path.join(out_dir, fname))
    with open(os.path.join(out_dir, "layout.txt"), "w", encoding="utf-8") as fh:
        fh.write(gridworld.to_text(layout))
    print(f"oracle tables written to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
