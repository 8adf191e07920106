"""Experiment configuration: INI parsing, validation, canonical emission.

One config file drives every subcommand.  Sections:

    [shape]     states, actions
    [adversary] kind, seed, gamma, period, model_file, loss_file
    [learner]   algorithm (sd-mdp | ewa-mdp),
                policy_class (all-deterministic | file:PATH | cover:EPS)
    [run]       horizons (space-separated), seeds (space-separated), x0,
                output, allow_unmixed, comparator_mode (exact | sampled),
                write_comparators
    [experts]   num_experts, stream (fixed-gap | rotating-punisher | random),
                stream_seed, period        (experts-bench only)
    [mixing]    models (space-separated paths)   (mixing-check only)

``parse_config`` validates everything up front and reports the complete
list of problems, not just the first.  ``canonical_text`` emits a
normalized form that re-parses to an equal config.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .adversary import DEFAULT_GAMMA, KINDS, AdversaryScript
from .core import ProblemShape, enumerate_deterministic_policies
from .textio import load_policy_set

LEARNERS = ("sd-mdp", "ewa-mdp")
EXPERT_STREAMS = ("fixed-gap", "rotating-punisher", "random")
COMPARATOR_MODES = ("exact", "sampled")


class ConfigError(ValueError):
    """Carries every validation problem found in one parse."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid config:\n" + "\n".join(f"  - {e}" for e in errors))


@dataclass(frozen=True)
class ExperimentConfig:
    shape: ProblemShape
    kind: str
    adversary_seed: int
    gamma: float
    period: int | None
    model_file: str | None
    loss_file: str | None
    learner: str
    policy_source: str
    horizons: tuple[int, ...]
    seeds: tuple[int, ...]
    x0: int
    output: str | None
    allow_unmixed: bool = False
    comparator_mode: str = "exact"
    write_comparators: bool = False
    experts_num: int = 8
    experts_stream: str = "fixed-gap"
    experts_seed: int = 0
    experts_period: int = 100
    mixing_models: tuple[str, ...] = field(default_factory=tuple)


_BOOL_WORDS = {
    "true": True,
    "yes": True,
    "1": True,
    "false": False,
    "no": False,
    "0": False,
}


class _Collector:
    """Typed field extraction that records problems instead of raising."""

    def __init__(self, parser: configparser.ConfigParser):
        self.parser = parser
        self.errors: list[str] = []

    def raw(self, section: str, key: str, default=None):
        if self.parser.has_option(section, key):
            return self.parser.get(section, key).strip()
        return default

    def integer(self, section, key, default=None, minimum=None):
        text = self.raw(section, key)
        if text is None:
            return default
        try:
            value = int(text)
        except ValueError:
            self.errors.append(f"[{section}] {key}: expected an integer, got {text!r}")
            return default
        if minimum is not None and value < minimum:
            self.errors.append(f"[{section}] {key}: must be >= {minimum}, got {value}")
            return default
        return value

    def number(self, section, key, default=None):
        text = self.raw(section, key)
        if text is None:
            return default
        try:
            return float(text)
        except ValueError:
            self.errors.append(f"[{section}] {key}: expected a number, got {text!r}")
            return default

    def boolean(self, section, key, default=False):
        text = self.raw(section, key)
        if text is None:
            return default
        value = _BOOL_WORDS.get(text.lower())
        if value is None:
            self.errors.append(f"[{section}] {key}: expected true/false, got {text!r}")
            return default
        return value

    def int_list(self, section, key):
        text = self.raw(section, key)
        if text is None:
            self.errors.append(f"[{section}] {key}: required")
            return ()
        values = []
        for part in text.split():
            try:
                values.append(int(part))
            except ValueError:
                self.errors.append(
                    f"[{section}] {key}: expected integers, got {part!r}"
                )
        return tuple(values)

    def choice(self, section, key, options, default=None):
        text = self.raw(section, key, default)
        if text is not None and text not in options:
            self.errors.append(
                f"[{section}] {key}: {text!r} is not one of {', '.join(options)}"
            )
            return default
        return text


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate; raises ConfigError listing every problem found."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"parse error: {exc}"]) from exc

    c = _Collector(parser)
    num_states = c.integer("shape", "states", minimum=1)
    num_actions = c.integer("shape", "actions", minimum=1)
    if num_states is None:
        c.errors.append("[shape] states: required")
    if num_actions is None:
        c.errors.append("[shape] actions: required")

    kind = c.choice("adversary", "kind", KINDS)
    if kind is None:
        c.errors.append("[adversary] kind: required")
    adversary_seed = c.integer("adversary", "seed", default=0)
    gamma = c.number("adversary", "gamma", default=DEFAULT_GAMMA)
    if gamma is not None and not 0.0 < gamma <= 1.0:
        c.errors.append(f"[adversary] gamma: must lie in (0, 1], got {gamma}")
    period = c.integer("adversary", "period", default=None, minimum=1)
    model_file = c.raw("adversary", "model_file")
    loss_file = c.raw("adversary", "loss_file")
    if kind is not None and kind != "fixed" and (model_file or loss_file):
        c.errors.append("[adversary] model_file/loss_file: only valid for kind fixed")
    if kind in ("model-switching", "leader-punisher-oblivious", "sinusoidal-loss"):
        if period is None:
            c.errors.append(f"[adversary] period: required for kind {kind}")

    learner = c.choice("learner", "algorithm", LEARNERS, default="sd-mdp")
    policy_source = c.raw("learner", "policy_class", "all-deterministic")
    if not (
        policy_source == "all-deterministic"
        or policy_source.startswith("file:")
        or policy_source.startswith("cover:")
    ):
        c.errors.append(
            f"[learner] policy_class: {policy_source!r} is not all-deterministic, "
            "file:PATH or cover:EPS"
        )
    elif policy_source.startswith("cover:"):
        try:
            eps = float(policy_source.split(":", 1)[1])
            if not 0.0 < eps <= 2.0:
                c.errors.append("[learner] policy_class: cover epsilon must lie in (0, 2]")
        except ValueError:
            c.errors.append("[learner] policy_class: cover epsilon must be a number")
    elif policy_source.startswith("file:") and not policy_source[5:]:
        c.errors.append("[learner] policy_class: file path is empty")

    horizons = c.int_list("run", "horizons")
    for h in horizons:
        if h < 1:
            c.errors.append(f"[run] horizons: must be positive, got {h}")
    seeds = c.int_list("run", "seeds")
    if seeds and len(set(seeds)) != len(seeds):
        c.errors.append("[run] seeds: must be distinct")
    x0 = c.integer("run", "x0", default=0, minimum=0)
    if num_states is not None and x0 is not None and x0 >= num_states:
        c.errors.append(f"[run] x0: state {x0} out of range for {num_states} states")
    output = c.raw("run", "output")
    allow_unmixed = c.boolean("run", "allow_unmixed", default=False)
    comparator_mode = c.choice(
        "run", "comparator_mode", COMPARATOR_MODES, default="exact"
    )
    write_comparators = c.boolean("run", "write_comparators", default=False)

    experts_num = c.integer("experts", "num_experts", default=8, minimum=1)
    experts_stream = c.choice(
        "experts", "stream", EXPERT_STREAMS, default="fixed-gap"
    )
    experts_seed = c.integer("experts", "stream_seed", default=0)
    experts_period = c.integer("experts", "period", default=100, minimum=1)

    models_text = c.raw("mixing", "models", "")
    mixing_models = tuple(models_text.split()) if models_text else ()

    if c.errors:
        raise ConfigError(c.errors)
    return ExperimentConfig(
        shape=ProblemShape(num_states, num_actions),
        kind=kind,
        adversary_seed=adversary_seed,
        gamma=gamma,
        period=period,
        model_file=model_file,
        loss_file=loss_file,
        learner=learner,
        policy_source=policy_source,
        horizons=horizons,
        seeds=seeds,
        x0=x0,
        output=output,
        allow_unmixed=allow_unmixed,
        comparator_mode=comparator_mode,
        write_comparators=write_comparators,
        experts_num=experts_num,
        experts_stream=experts_stream,
        experts_seed=experts_seed,
        experts_period=experts_period,
        mixing_models=mixing_models,
    )


def canonical_text(cfg: ExperimentConfig) -> str:
    """Normalized INI form; parse_config(canonical_text(cfg)) == cfg."""
    lines = [
        "[shape]",
        f"states = {cfg.shape.num_states}",
        f"actions = {cfg.shape.num_actions}",
        "",
        "[adversary]",
        f"kind = {cfg.kind}",
        f"seed = {cfg.adversary_seed}",
        f"gamma = {cfg.gamma!r}",
    ]
    if cfg.period is not None:
        lines.append(f"period = {cfg.period}")
    if cfg.model_file is not None:
        lines.append(f"model_file = {cfg.model_file}")
    if cfg.loss_file is not None:
        lines.append(f"loss_file = {cfg.loss_file}")
    lines += [
        "",
        "[learner]",
        f"algorithm = {cfg.learner}",
        f"policy_class = {cfg.policy_source}",
        "",
        "[run]",
        "horizons = " + " ".join(str(h) for h in cfg.horizons),
        "seeds = " + " ".join(str(s) for s in cfg.seeds),
        f"x0 = {cfg.x0}",
    ]
    if cfg.output is not None:
        lines.append(f"output = {cfg.output}")
    lines += [
        f"allow_unmixed = {str(cfg.allow_unmixed).lower()}",
        f"comparator_mode = {cfg.comparator_mode}",
        f"write_comparators = {str(cfg.write_comparators).lower()}",
        "",
        "[experts]",
        f"num_experts = {cfg.experts_num}",
        f"stream = {cfg.experts_stream}",
        f"stream_seed = {cfg.experts_seed}",
        f"period = {cfg.experts_period}",
    ]
    if cfg.mixing_models:
        lines += ["", "[mixing]", "models = " + " ".join(cfg.mixing_models)]
    return "\n".join(lines) + "\n"


def build_script(cfg: ExperimentConfig, horizon: int) -> AdversaryScript:
    return AdversaryScript(
        kind=cfg.kind,
        shape=cfg.shape,
        horizon=horizon,
        seed=cfg.adversary_seed,
        gamma=cfg.gamma,
        period=cfg.period,
        model_file=cfg.model_file,
        loss_file=cfg.loss_file,
    )


def build_policy_class(cfg: ExperimentConfig):
    if cfg.policy_source == "all-deterministic":
        return enumerate_deterministic_policies(cfg.shape)
    if cfg.policy_source.startswith("file:"):
        policies = load_policy_set(cfg.policy_source[5:])
        for p in policies:
            if p.probs.shape != (cfg.shape.num_states, cfg.shape.num_actions):
                raise ValueError("policy-class file shape does not match config shape")
        return policies
    from .cover import build_cover

    epsilon = float(cfg.policy_source.split(":", 1)[1])
    return list(build_cover(cfg.shape, epsilon).policies)
