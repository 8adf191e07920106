import pytest

from driftmdp.config import (
    ConfigError,
    ExperimentConfig,
    build_policy_class,
    build_script,
    canonical_text,
    parse_config,
)
from driftmdp.core import ProblemShape

MINIMAL = """\
[shape]
states = 4
actions = 2

[adversary]
kind = random-smoothed

[run]
horizons = 100
seeds = 1 2
"""


class TestParsing:
    def test_minimal_config_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.shape == ProblemShape(4, 2)
        assert cfg.kind == "random-smoothed"
        assert cfg.adversary_seed == 0
        assert cfg.gamma == 0.25
        assert cfg.period is None
        assert cfg.learner == "sd-mdp"
        assert cfg.policy_source == "all-deterministic"
        assert cfg.horizons == (100,)
        assert cfg.seeds == (1, 2)
        assert cfg.x0 == 0
        assert cfg.output is None
        assert not cfg.allow_unmixed
        assert cfg.comparator_mode == "exact"
        assert not cfg.write_comparators
        assert cfg.experts_num == 8
        assert cfg.experts_stream == "fixed-gap"
        assert cfg.experts_period == 100
        assert cfg.mixing_models == ()

    def test_full_round_trip(self):
        text = """\
[shape]
states = 3
actions = 2

[adversary]
kind = model-switching
seed = 9
gamma = 0.5
period = 40

[learner]
algorithm = ewa-mdp
policy_class = cover:0.5

[run]
horizons = 50 100
seeds = 3 4 5
x0 = 1
output = out
allow_unmixed = true
comparator_mode = sampled
write_comparators = yes

[experts]
num_experts = 4
stream = rotating-punisher
stream_seed = 7
period = 25
"""
        cfg = parse_config(text)
        assert cfg.learner == "ewa-mdp"
        assert cfg.allow_unmixed and cfg.write_comparators
        assert cfg.comparator_mode == "sampled"
        assert parse_config(canonical_text(cfg)) == cfg

    def test_all_errors_collected_at_once(self):
        text = """\
[shape]
states = zero
actions = -1

[adversary]
kind = bogus
gamma = 3.0

[run]
horizons = 100 -5
seeds = 1 1
x0 = -2
"""
        with pytest.raises(ConfigError) as err:
            parse_config(text)
        messages = "\n".join(err.value.errors)
        assert "[shape] states" in messages
        assert "[shape] actions" in messages
        assert "[adversary] kind" in messages
        assert "[adversary] gamma" in messages
        assert "[run] horizons: must be positive" in messages
        assert "[run] seeds: must be distinct" in messages
        assert "[run] x0" in messages
        assert len(err.value.errors) >= 7

    def test_missing_required_fields(self):
        with pytest.raises(ConfigError) as err:
            parse_config("[shape]\nstates = 2\n")
        messages = "\n".join(err.value.errors)
        assert "[shape] actions: required" in messages
        assert "[adversary] kind: required" in messages
        assert "[run] horizons: required" in messages
        assert "[run] seeds: required" in messages

    def test_period_required_for_periodic_kinds(self):
        text = MINIMAL.replace("random-smoothed", "model-switching")
        with pytest.raises(ConfigError, match="period: required"):
            parse_config(text)

    def test_files_only_for_fixed(self):
        text = MINIMAL.replace(
            "kind = random-smoothed", "kind = random-smoothed\nmodel_file = m.txt"
        )
        with pytest.raises(ConfigError, match="only valid for kind fixed"):
            parse_config(text)

    def test_cover_epsilon_validated(self):
        text = MINIMAL + "\n[learner]\npolicy_class = cover:3.0\n"
        with pytest.raises(ConfigError, match="cover epsilon"):
            parse_config(text)
        text = MINIMAL + "\n[learner]\npolicy_class = cover:abc\n"
        with pytest.raises(ConfigError, match="must be a number"):
            parse_config(text)

    def test_unknown_policy_source(self):
        text = MINIMAL + "\n[learner]\npolicy_class = everything\n"
        with pytest.raises(ConfigError, match="policy_class"):
            parse_config(text)

    def test_inline_comments_ignored(self):
        text = MINIMAL.replace("states = 4", "states = 4  ; four states")
        assert parse_config(text).shape.num_states == 4

    def test_parse_error_reported(self):
        with pytest.raises(ConfigError, match="parse error"):
            parse_config("not an ini file at all\n")


class TestBuilders:
    def test_build_script_carries_fields(self):
        cfg = parse_config(MINIMAL)
        script = build_script(cfg, 100)
        assert script.kind == "random-smoothed"
        assert script.horizon == 100
        assert script.seed == 0
        assert script.gamma == 0.25
        assert script.shape == cfg.shape

    def test_build_policy_class_all_deterministic(self):
        cfg = parse_config(MINIMAL)
        policies = build_policy_class(cfg)
        assert len(policies) == 16

    def test_build_policy_class_cover(self):
        text = MINIMAL.replace("states = 4", "states = 2")
        text += "\n[learner]\npolicy_class = cover:1.0\n"
        cfg = parse_config(text)
        policies = build_policy_class(cfg)
        assert len(policies) == 25  # 5 grid rows per state, 2 states

    def test_build_policy_class_file(self, tmp_path):
        from driftmdp import textio
        from driftmdp.core import Policy

        pols = [
            Policy.deterministic([0, 0, 0, 0], 2),
            Policy.deterministic([1, 1, 1, 1], 2),
        ]
        path = tmp_path / "set.txt"
        textio.save_policy_set(str(path), pols)
        cfg = parse_config(MINIMAL + f"\n[learner]\npolicy_class = file:{path}\n")
        loaded = build_policy_class(cfg)
        assert len(loaded) == 2
        import numpy as np

        assert np.array_equal(loaded[0].probs, pols[0].probs)

    def test_canonical_text_is_stable(self):
        cfg = parse_config(MINIMAL)
        assert canonical_text(parse_config(canonical_text(cfg))) == canonical_text(cfg)
