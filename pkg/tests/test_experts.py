import math

import numpy as np
import pytest

from driftmdp import _backend
from driftmdp.experts import (
    ExpertState,
    ewa_choose,
    ewa_update,
    initial_state,
    learning_rate,
    log_weight_table,
    regret_bound,
    run_ewa,
    run_sd,
    sd_choose,
    sd_update,
    weight_cdf,
    weight_cdf_table,
)


def tree_marginals(loss_rows, eta):
    """Independent oracle: enumerate every stay/redraw decision path.

    Weights are recomputed with plain Python pow; each round branches
    into one stay path and one redraw path per expert, probability
    weighted.  Returns the per-round acting-index marginals.
    """
    horizon = len(loss_rows)
    num = len(loss_rows[0])

    def weight(t, i):  # weight after the first t loss vectors
        return (1.0 - eta) ** sum(loss_rows[s][i] for s in range(t))

    def law(t):  # distribution used for fresh draws at round t
        ws = [weight(t - 1, i) for i in range(num)]
        total = sum(ws)
        return [w / total for w in ws]

    marginals = [[0.0] * num for _ in range(horizon)]
    paths = [(p, i) for i, p in enumerate(law(1))]
    for p, i in paths:
        marginals[0][i] += p
    for t in range(2, horizon + 1):
        fresh = law(t)
        nxt = []
        for prob, cur in paths:
            stay = weight(t - 1, cur) / weight(t - 2, cur)
            nxt.append((prob * stay, cur))
            for j in range(num):
                nxt.append((prob * (1.0 - stay) * fresh[j], j))
        paths = nxt
        for prob, cur in paths:
            marginals[t - 1][cur] += prob
    return marginals


class TestLearningRate:
    def test_single_expert_is_zero(self):
        assert learning_rate(1, 100) == 0.0

    def test_formula_value(self):
        assert learning_rate(8, 10_000) == pytest.approx(0.014420, abs=1e-6)
        assert learning_rate(8, 10_000) == pytest.approx(
            math.sqrt(math.log(8) / 10_000), abs=1e-15
        )

    def test_cap_binds(self):
        assert learning_rate(100, 4) == 0.5

    def test_validation(self):
        with pytest.raises(ValueError):
            learning_rate(0, 10)
        with pytest.raises(ValueError):
            learning_rate(3, 0)


class TestUpdates:
    def test_zero_losses_leave_weights(self):
        state = initial_state(3, 0.3)
        sd_update(state, np.zeros(3))
        assert np.array_equal(state.log_weights, np.zeros(3))
        assert state.round == 2

    def test_uniform_losses_shift_uniformly(self):
        state = initial_state(3, 0.3)
        sd_update(state, np.ones(3))
        assert np.allclose(state.log_weights, math.log1p(-0.3))
        cdf = weight_cdf(state.log_weights)
        assert np.allclose(cdf, [1 / 3, 2 / 3, 1.0])

    def test_sd_two_expert_example(self):
        # one round, eta = 0.5, losses (1, 0): weights (0.5, 1).
        state = initial_state(2, 0.5)
        sd_update(state, np.array([1.0, 0.0]))
        q = np.diff(weight_cdf(state.log_weights), prepend=0.0)
        assert np.allclose(q, [1 / 3, 2 / 3], atol=1e-15)
        stay = math.exp(state.log_weights[0] - state.prev_log_weights[0])
        assert stay == pytest.approx(0.5, abs=1e-15)

    def test_ewa_two_expert_example(self):
        # constructor caps eta below 1; set the textbook eta = 1 directly.
        state = initial_state(2, 0.5)
        state.eta = 1.0
        ewa_update(state, np.array([1.0, 0.0]))
        q = np.diff(weight_cdf(state.log_weights), prepend=0.0)
        expected = np.array([math.exp(-1.0), 1.0])
        expected /= expected.sum()
        assert np.allclose(q, expected, atol=1e-12)
        assert q[0] == pytest.approx(0.2689, abs=1e-4)
        assert q[1] == pytest.approx(0.7311, abs=1e-4)

    def test_loss_range_enforced(self):
        state = initial_state(2, 0.3)
        with pytest.raises(ValueError):
            sd_update(state, np.array([1.5, 0.0]))
        with pytest.raises(ValueError):
            ewa_update(state, np.array([-0.5, 0.0]))

    def test_total_weight_decay_bound(self):
        # W_t >= (1 - eta) * W_{t-1} for arbitrary valid losses.
        rng = np.random.default_rng(41)
        state = initial_state(6, 0.4)
        prev_total = np.exp(state.log_weights).sum()
        for _ in range(200):
            sd_update(state, rng.random(6))
            total = np.exp(state.log_weights).sum()
            assert total >= (1.0 - state.eta) * prev_total - 1e-12
            prev_total = total

    def test_log_weights_nonpositive_and_nonincreasing(self):
        rng = np.random.default_rng(42)
        state = initial_state(4, 0.2)
        last = state.log_weights.copy()
        for _ in range(100):
            sd_update(state, rng.random(4))
            assert np.all(state.log_weights <= 1e-15)
            assert np.all(state.log_weights <= last + 1e-15)
            last = state.log_weights.copy()


class TestChoose:
    def test_round_one_uniform_no_switch(self):
        counts = np.zeros(4)
        for seed in range(2000):
            state = initial_state(4, 0.3)
            idx, switched = sd_choose(state, np.random.default_rng(seed))
            assert not switched
            assert state.switch_count == 0
            counts[idx] += 1
        assert counts.min() > 400  # roughly uniform

    def test_zero_losses_never_redraw(self):
        state = initial_state(5, 0.3)
        rng = np.random.default_rng(43)
        first, _ = sd_choose(state, rng)
        for _ in range(50):
            sd_update(state, np.zeros(5))
            idx, switched = sd_choose(state, rng)
            assert idx == first
            assert not switched
        assert state.switch_count == 0

    def test_redraw_probability_never_exceeds_eta(self):
        rng = np.random.default_rng(44)
        losses = rng.random((500, 6))
        result = run_sd(losses, np.random.default_rng(45))
        assert result.redraw_probs.max() <= result.eta + 1e-12
        assert result.redraw_probs[0] == 0.0

    def test_switch_only_on_index_change(self):
        # force heavy redraws with eta = 0.5 and constant max losses on
        # a two-expert tie: redraws happen but some land on the same index.
        losses = np.ones((400, 2))
        result = run_sd(losses, np.random.default_rng(46), eta=0.5)
        switches = result.switched.sum()
        redraw_rounds = 400 - 1
        assert 0 < switches < redraw_rounds

    def test_invalid_round_rejected(self):
        state = ExpertState(
            log_weights=np.zeros(2), prev_log_weights=np.zeros(2), eta=0.1, round=0
        )
        with pytest.raises(ValueError):
            sd_choose(state, np.random.default_rng(0))

    def test_ewa_choose_is_fresh_draw(self):
        state = initial_state(2, 0.0)
        rng = np.random.default_rng(47)
        draws = {ewa_choose(state, rng) for _ in range(100)}
        assert draws == {0, 1}


class TestMarginalOracle:
    def test_exact_marginals_small_tables(self):
        rng = np.random.default_rng(48)
        for trial in range(20):
            horizon = int(rng.integers(1, 5))
            loss_rows = rng.random((horizon, 2))
            eta = float(rng.uniform(0.05, 0.5))
            oracle = tree_marginals(loss_rows.tolist(), eta)
            table = log_weight_table(loss_rows, eta, lazy=True)
            for t in range(1, horizon + 1):
                w = np.exp(table[t - 1])
                expected = w / w.sum()
                assert np.abs(np.array(oracle[t - 1]) - expected).max() <= 1e-12, (
                    trial,
                    t,
                )

    def test_oracle_matches_empirical_frequencies(self):
        loss_rows = np.array([[0.9, 0.1], [0.2, 0.8], [0.7, 0.3]])
        eta = 0.4
        oracle = tree_marginals(loss_rows.tolist(), eta)
        table = log_weight_table(loss_rows, eta, lazy=True)
        qcdf = weight_cdf_table(table[:3])
        rng = np.random.default_rng(49)
        counts = np.zeros((3, 2))
        runs = 40_000
        for _ in range(runs):
            chosen, _ = _backend.sd_chain(table, qcdf, rng)
            for t in range(3):
                counts[t, chosen[t]] += 1
        freq = counts / runs
        assert np.abs(freq - np.array(oracle)).max() < 0.01


class TestRunners:
    def test_run_sd_matches_manual_loop(self):
        rng = np.random.default_rng(50)
        losses = rng.random((300, 5))
        eta = learning_rate(5, 300)
        fast = run_sd(losses, np.random.default_rng(51), eta=eta)

        state = initial_state(5, eta)
        manual_rng = np.random.default_rng(51)
        chosen = []
        switched = []
        for t in range(300):
            idx, sw = sd_choose(state, manual_rng)
            chosen.append(idx)
            switched.append(sw)
            sd_update(state, losses[t])
        assert np.array_equal(fast.chosen, np.array(chosen))
        assert np.array_equal(fast.switched, np.array(switched))
        assert fast.total_switches == state.switch_count

    def test_run_ewa_matches_manual_loop(self):
        rng = np.random.default_rng(52)
        losses = rng.random((300, 4))
        eta = learning_rate(4, 300)
        fast = run_ewa(losses, np.random.default_rng(53), eta=eta)

        state = initial_state(4, eta)
        manual_rng = np.random.default_rng(53)
        chosen = [ewa_choose(state, manual_rng)]
        sd = []
        for t in range(300):
            if t:
                chosen.append(ewa_choose(state, manual_rng))
            ewa_update(state, losses[t])
        assert np.array_equal(fast.chosen, np.array(chosen))
        assert fast.total_switches == state.switch_count

    def test_cumulative_regret_definition(self):
        losses = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        result = run_sd(losses, np.random.default_rng(54), eta=0.3)
        realized = losses[np.arange(3), result.chosen]
        best_running = np.cumsum(losses, axis=0).min(axis=1)
        assert np.allclose(
            result.cumulative_regret, np.cumsum(realized) - best_running
        )
        assert result.regret_vs_best == pytest.approx(
            realized.sum() - losses.sum(axis=0).min()
        )

    def test_regret_bound_value(self):
        assert regret_bound(8, 10_000) == pytest.approx(578.8901961820329, abs=1e-9)

    def test_weight_table_matches_sequential_updates_bitwise(self):
        rng = np.random.default_rng(55)
        losses = rng.random((200, 6))
        eta = 0.25
        table = log_weight_table(losses, eta, lazy=True)
        state = initial_state(6, eta)
        for t in range(200):
            sd_update(state, losses[t])
            assert np.array_equal(state.log_weights, table[t + 1])

    def test_qcdf_rows_match_single_row_computation_bitwise(self):
        rng = np.random.default_rng(56)
        losses = rng.random((150, 7))
        table = log_weight_table(losses, 0.1, lazy=True)
        rows = weight_cdf_table(table[:150])
        for t in [0, 1, 73, 149]:
            assert np.array_equal(rows[t], weight_cdf(table[t].copy()))
