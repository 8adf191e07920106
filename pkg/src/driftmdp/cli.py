"""Command-line entry point.

    driftmdp <run|sweep|experts-bench|mixing-check|cover> -c CONFIG [-o OUTDIR]

One config file (see ``config``) drives every subcommand; the only flags
select the subcommand, the config path and the output directory (the
latter overrides the config's ``output``).  The worker-pool width for
sweeps comes from the ``DRIFTMDP_WORKERS`` environment variable
(default 1).

Exit status: 0 success (and mixing certified), 1 runtime failure —
including a mixing refutation without the override flag — and 2 for
config parse/validation problems.  All CSV numbers carry 12 significant
digits; identical configs produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import experts, harness, textio
from .config import (
    ConfigError,
    ExperimentConfig,
    build_policy_class,
    build_script,
    parse_config,
)
from .cover import build_cover
from .adversary import expert_stream
from .mixing import MixingCertificate, MixingRefutedError, certify_mixing
from .sdmdp import EwaMdpLearner, SdMdpLearner


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def _write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _workers() -> int:
    raw = os.environ.get("DRIFTMDP_WORKERS", "1").strip()
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _outdir(cfg: ExperimentConfig, override: str | None) -> str:
    directory = override or cfg.output or "."
    os.makedirs(directory, exist_ok=True)
    return directory


def _build_learner(cfg: ExperimentConfig, policy_class, horizon: int):
    cls = SdMdpLearner if cfg.learner == "sd-mdp" else EwaMdpLearner
    return cls(policy_class, cfg.shape, horizon, cfg.x0)


def _cmd_run(cfg: ExperimentConfig, outdir: str) -> int:
    horizon = cfg.horizons[0]
    seed = cfg.seeds[0]
    policy_class = build_policy_class(cfg)
    script = build_script(cfg, horizon)
    learner = _build_learner(cfg, policy_class, horizon)
    trace = harness.run_game(
        learner,
        script,
        horizon,
        cfg.x0,
        np.random.default_rng(seed),
        allow_unmixed=cfg.allow_unmixed,
    )
    trace.seed = seed

    if cfg.comparator_mode == "sampled":
        comparators = harness.comparator_losses_sampled(
            policy_class, script, horizon, cfg.x0, np.random.default_rng([seed, 101])
        )
    else:
        comparators = harness.comparator_losses(policy_class, script, horizon, cfg.x0)
    certificate = harness.script_certificate(script, horizon)
    report = harness.regret_report(trace, comparators, certificate)

    rows = zip(
        range(1, horizon + 1),
        trace.states,
        trace.actions,
        trace.policy_indices,
        trace.switched,
        trace.realized_losses,
        trace.chosen_expected,
    )
    _write_csv(
        os.path.join(outdir, "trace.csv"),
        ["t", "state", "action", "policy", "switched", "loss", "chosen_expected"],
        rows,
    )
    if cfg.write_comparators:
        _write_csv(
            os.path.join(outdir, "comparators.csv"),
            ["t"] + [f"c{i}" for i in range(len(policy_class))],
            (
                (t + 1, *comparators[:, t])
                for t in range(horizon)
            ),
        )
    print(f"trace written to {os.path.join(outdir, 'trace.csv')}")
    print(f"realized_total = {_fmt(report.realized_total)}")
    print(f"best_comparator = {report.best_comparator}")
    print(f"best_regret = {_fmt(report.best_regret)}")
    print(f"drift_term = {_fmt(report.drift_term)}")
    print(f"switch_count = {report.switch_count}")
    print(f"tau = {_fmt(report.tau)}")
    print(f"bound_thm2 = {_fmt(report.bound_thm2)}")
    print(f"bound_thm1 = {_fmt(report.bound_thm1)}")
    return 0


def _cmd_sweep(cfg: ExperimentConfig, outdir: str) -> int:
    report = harness.monte_carlo(cfg, workers=_workers())
    _write_csv(
        os.path.join(outdir, "summary.csv"),
        ["T", "seeds", "mean_regret", "stderr", "bound_thm2", "switches_mean", "tau"],
        (
            (
                row.horizon,
                row.num_seeds,
                row.mean_regret,
                row.stderr,
                row.bound_thm2,
                row.switches_mean,
                row.tau,
            )
            for row in report.rows
        ),
    )
    print(f"summary written to {os.path.join(outdir, 'summary.csv')}")
    for row in report.rows:
        print(
            f"T={row.horizon}: mean_regret={_fmt(row.mean_regret)} "
            f"stderr={_fmt(row.stderr)} bound_thm2={_fmt(row.bound_thm2)} "
            f"switches_mean={_fmt(row.switches_mean)} tau={_fmt(row.tau)}"
        )
    if report.growth_slope is not None:
        print(f"growth_slope = {_fmt(report.growth_slope)}")
    return 0


def _expert_bench_rows(result: experts.ExpertRunResult, num_experts: int):
    cumulative = 0.0
    log_n = math.log(num_experts)
    for t in range(len(result.chosen)):
        bound = 4.0 * math.sqrt((t + 1) * log_n) + log_n
        yield (
            t + 1,
            result.chosen[t],
            bool(result.switched[t]),
            result.realized[t],
            result.cumulative_regret[t],
            bound,
        )


def _cmd_experts_bench(cfg: ExperimentConfig, outdir: str) -> int:
    horizon = cfg.horizons[0]
    losses = expert_stream(
        cfg.experts_stream,
        cfg.experts_num,
        horizon,
        cfg.experts_seed,
        period=cfg.experts_period,
    )
    seed = cfg.seeds[0]
    header = ["round", "chosen", "switched", "loss", "cum_regret", "bound"]
    sd_result = experts.run_sd(losses, np.random.default_rng([seed, 11]))
    ewa_result = experts.run_ewa(losses, np.random.default_rng([seed, 12]))
    _write_csv(
        os.path.join(outdir, "experts_sd.csv"),
        header,
        _expert_bench_rows(sd_result, cfg.experts_num),
    )
    _write_csv(
        os.path.join(outdir, "experts_ewa.csv"),
        header,
        _expert_bench_rows(ewa_result, cfg.experts_num),
    )
    for name, result in (("sd", sd_result), ("ewa", ewa_result)):
        print(
            f"{name}: eta={_fmt(result.eta)} switches={result.total_switches} "
            f"final_regret={_fmt(result.regret_vs_best)} "
            f"bound={_fmt(experts.regret_bound(cfg.experts_num, horizon))}"
        )
    return 0


def _cmd_mixing_check(cfg: ExperimentConfig, outdir: str) -> int:
    if cfg.mixing_models:
        models = [textio.load_model(path) for path in cfg.mixing_models]
        result = certify_mixing(models, cfg.shape)
    else:
        script = build_script(cfg, cfg.horizons[0])
        result = harness.script_certificate(script, cfg.horizons[0])
    policy_idx, model_idx = result.witness
    if isinstance(result, MixingCertificate):
        print("mixing: certified")
        print(f"delta_max = {_fmt(result.delta_max)}")
        print(f"tau = {_fmt(result.tau)}")
        print(f"witness = policy {policy_idx}, model {model_idx}")
        return 0
    print("mixing: refuted")
    print(f"delta_max = {_fmt(result.delta_max)}")
    print(f"witness = policy {policy_idx}, model {model_idx}")
    return 1


def _cmd_cover(cfg: ExperimentConfig, outdir: str) -> int:
    if not cfg.policy_source.startswith("cover:"):
        print(
            "cover subcommand needs [learner] policy_class = cover:EPS",
            file=sys.stderr,
        )
        return 2
    epsilon = float(cfg.policy_source.split(":", 1)[1])
    spec = build_cover(cfg.shape, epsilon)
    path = os.path.join(outdir, "cover_policies.txt")
    textio.save_policy_set(path, list(spec.policies))
    print(f"cover written to {path}")
    print(
        f"epsilon={_fmt(spec.epsilon)} k={spec.grid_resolution} size={spec.size} "
        f"size_bound={_fmt(spec.size_bound)} within_size_bound={spec.within_size_bound}"
    )
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "experts-bench": _cmd_experts_bench,
    "mixing-check": _cmd_mixing_check,
    "cover": _cmd_cover,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="driftmdp",
        description="Online-MDP simulator: adversarial models, lazy-switching learners",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("-c", "--config", required=True, help="config file path")
    parser.add_argument("-o", "--output", default=None, help="output directory")
    args = parser.parse_args(argv)

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2

    outdir = _outdir(cfg, args.output)
    try:
        return _COMMANDS[args.command](cfg, outdir)
    except MixingRefutedError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (ValueError, MemoryError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
