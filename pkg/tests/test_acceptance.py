"""Acceptance gate: nine end-to-end checks of the library's guarantees.

Each test records exactly one verdict line ("[criterion N] ...: PASS/FAIL")
which the conftest terminal-summary hook echoes at the end of the run, so
the per-criterion outcomes are visible even under output capture.
Tolerances and time budgets are asserted, never loosened: a failure here
means the guarantee is not met.
"""

import math
import time

import numpy as np

from driftmdp import _backend, experts
from driftmdp.adversary import AdversaryScript, expert_stream, precompute
from driftmdp.config import ExperimentConfig
from driftmdp.core import (
    Policy,
    ProblemShape,
    enumerate_deterministic_policies,
    policy_distance,
    random_distribution,
    random_model,
    random_policy,
)
from driftmdp.cover import build_cover, cover_regret_bound, round_to_grid
from driftmdp.harness import (
    comparator_losses,
    fast_game_trace,
    fixed_policy_expected_total,
    monte_carlo,
    regret_report,
    script_certificate,
    simulation_tables,
    theory_bounds,
)
from driftmdp.mixing import (
    MixingCertificate,
    certify_mixing,
    smooth_model,
    verify_contraction_empirically,
)

CHI2_CRIT_3DF_001 = 16.266  # chi-square critical value, 3 dof, significance 0.001

VERDICT_LINES: list[str] = []


def _verdict(number: int, name: str, ok: bool, detail: str) -> None:
    line = f"[criterion {number}] {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    VERDICT_LINES.append(line)
    print(line, flush=True)
    assert ok, line


def test_criterion_1_contraction_certification():
    start = time.perf_counter()
    shape = ProblemShape(4, 2)
    rng = np.random.default_rng(101)
    models = [smooth_model(random_model(shape, rng), 0.25) for _ in range(100)]
    result = certify_mixing(models, shape)
    certified = isinstance(result, MixingCertificate)
    delta_ok = certified and result.delta_max <= 0.75 + 1e-12
    worst_ratio = verify_contraction_empirically(
        models, shape, 10_000, np.random.default_rng(102)
    )
    empirical_ok = worst_ratio <= result.delta_max + 1e-9
    elapsed = time.perf_counter() - start
    _verdict(
        1,
        "smoothed models certified, empirical ratios below the certificate",
        delta_ok and empirical_ok and elapsed < 10.0,
        f"delta_max={result.delta_max:.6f} worst_ratio={worst_ratio:.6f} "
        f"elapsed={elapsed:.2f}s",
    )


def test_criterion_2_policy_perturbation_inequality():
    start = time.perf_counter()
    shape = ProblemShape(4, 2)
    rng = np.random.default_rng(103)
    violations = 0
    worst_excess = -math.inf
    for _ in range(1000):
        model = random_model(shape, rng)
        p1 = random_policy(shape, rng)
        p2 = random_policy(shape, rng)
        d = random_distribution(shape.num_states, rng).mass
        chain1 = np.einsum("xa,xay->xy", p1.probs, model.kernel)
        chain2 = np.einsum("xa,xay->xy", p2.probs, model.kernel)
        lhs = float(np.abs(d @ chain1 - d @ chain2).sum())
        rhs = policy_distance(p1, p2)
        worst_excess = max(worst_excess, lhs - rhs)
        if lhs > rhs + 1e-9:
            violations += 1
    elapsed = time.perf_counter() - start
    _verdict(
        2,
        "one-step law shift bounded by the policy distance",
        violations == 0 and elapsed < 5.0,
        f"violations={violations}/1000 worst_excess={worst_excess:.3e} "
        f"elapsed={elapsed:.2f}s",
    )


def _exhaustive_marginals(loss_rows: np.ndarray, eta: float) -> np.ndarray:
    """Brute-force acting-index marginals of the lazy chain.

    Enumerates the full decision tree: at each round a path either keeps
    its index (probability = one-round weight ratio) or redraws from the
    freshly normalized weights.  Independent of the library's tables.
    """
    horizon, num = loss_rows.shape
    decay = math.log1p(-eta)
    cumulative = np.vstack([np.zeros(num), np.cumsum(loss_rows, axis=0)])

    def fresh(t):  # normalized weights entering round t
        w = np.exp(cumulative[t - 1] * decay)
        return w / w.sum()

    marginals = np.zeros((horizon, num))
    paths = {i: p for i, p in enumerate(fresh(1))}
    for i, p in paths.items():
        marginals[0, i] += p
    for t in range(2, horizon + 1):
        draw = fresh(t)
        nxt = {i: 0.0 for i in range(num)}
        for cur, prob in paths.items():
            stay = math.exp((cumulative[t - 1, cur] - cumulative[t - 2, cur]) * decay)
            nxt[cur] += prob * stay
            for j in range(num):
                nxt[j] += prob * (1.0 - stay) * draw[j]
        paths = nxt
        for i, p in paths.items():
            marginals[t - 1, i] += p
    return marginals


def test_criterion_3_lazy_chain_marginals():
    start = time.perf_counter()
    # exact part: enumeration at two experts, short horizons
    rng = np.random.default_rng(106)
    worst_gap = 0.0
    for _ in range(20):
        horizon = int(rng.integers(1, 5))
        loss_rows = rng.random((horizon, 2))
        eta = float(rng.uniform(0.05, 0.5))
        oracle = _exhaustive_marginals(loss_rows, eta)
        table = experts.log_weight_table(loss_rows, eta, lazy=True)
        for t in range(horizon):
            w = np.exp(table[t])
            worst_gap = max(worst_gap, float(np.abs(oracle[t] - w / w.sum()).max()))
    exact_ok = worst_gap <= 1e-12

    # statistical part: frequency of the final acting index over 1e5 runs
    num, horizon, runs = 4, 10, 100_000
    loss_rows = np.random.default_rng(107).random((horizon, num))
    eta = experts.learning_rate(num, horizon)
    table = experts.log_weight_table(loss_rows, eta, lazy=True)
    qcdf = experts.weight_cdf_table(table[:horizon])
    master = np.random.default_rng(108)
    counts = np.zeros(num)
    for _ in range(runs):
        chosen, _ = _backend.sd_chain(table, qcdf, master)
        counts[chosen[-1]] += 1
    w = np.exp(table[horizon - 1])
    expected = runs * w / w.sum()
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    chi_ok = chi2 < CHI2_CRIT_3DF_001
    elapsed = time.perf_counter() - start
    _verdict(
        3,
        "acting-index law equals normalized weights (exact and sampled)",
        exact_ok and chi_ok,
        f"worst_marginal_gap={worst_gap:.2e} chi2={chi2:.2f} "
        f"(crit {CHI2_CRIT_3DF_001}) elapsed={elapsed:.2f}s",
    )


def test_criterion_4_lazy_experts_desk_scale():
    start = time.perf_counter()
    num, horizon, seeds = 8, 10_000, 200
    bound = experts.regret_bound(num, horizon)  # 4 sqrt(T ln N) + ln N
    switch_target = math.sqrt(horizon * math.log(num))
    eta_expected = 0.014420268866008828
    details = []
    all_ok = True
    for kind in ("fixed-gap", "rotating-punisher", "random"):
        losses = expert_stream(kind, num, horizon, seed=7)
        regrets = np.empty(seeds)
        switches = np.empty(seeds)
        redraw_max = 0.0
        eta_seen = None
        for s in range(seeds):
            result = experts.run_sd(losses, np.random.default_rng(s))
            regrets[s] = result.regret_vs_best
            switches[s] = result.total_switches
            if s == 0:
                eta_seen = result.eta
                redraw_max = float(result.redraw_probs.max())
        eta_ok = abs(eta_seen - eta_expected) <= 1e-12
        redraw_ok = redraw_max <= eta_seen + 1e-12
        regret_ok = regrets.mean() <= bound
        sw_se = switches.std(ddof=1) / math.sqrt(seeds)
        switch_ok = switches.mean() <= switch_target + 3.0 * sw_se
        all_ok = all_ok and eta_ok and redraw_ok and regret_ok and switch_ok
        details.append(
            f"{kind}: regret={regrets.mean():.1f}<= {bound:.1f}? {regret_ok}, "
            f"switches={switches.mean():.1f}<= {switch_target:.1f}+3se? {switch_ok}, "
            f"redraw_max={redraw_max:.6f}"
        )
    elapsed = time.perf_counter() - start
    _verdict(
        4,
        "lazy experts meet the regret/switch/redraw guarantees on 3 streams",
        all_ok and elapsed < 60.0,
        "; ".join(details) + f"; elapsed={elapsed:.1f}s",
    )


def test_criterion_5_lazy_learner_over_policy_class():
    start = time.perf_counter()
    shape = ProblemShape(4, 2)
    horizon, seeds = 20_000, 200
    policies = enumerate_deterministic_policies(shape)
    scripts = [
        AdversaryScript(kind="model-switching", shape=shape, horizon=horizon,
                        seed=11, period=1000),
        AdversaryScript(kind="random-smoothed", shape=shape, horizon=horizon,
                        seed=12),
        AdversaryScript(kind="leader-punisher-oblivious", shape=shape,
                        horizon=horizon, seed=13, period=500),
        AdversaryScript(kind="sinusoidal-loss", shape=shape, horizon=horizon,
                        seed=14, period=400),
    ]
    details = []
    all_ok = True
    for script in scripts:
        cert = script_certificate(script, horizon)
        tau_ok = isinstance(cert, MixingCertificate) and cert.tau <= 3.4761
        bound2, _ = theory_bounds(len(policies), horizon, cert.tau)
        bound_ok = bound2 <= 6635.5 and bound2 <= horizon  # non-vacuous
        tables = simulation_tables(policies, script, horizon, 0, lazy=True)
        best_total = float(tables.comparators.sum(axis=1).min())
        regrets = np.empty(seeds)
        for s in range(seeds):
            trace = fast_game_trace(tables, np.random.default_rng(s))
            regrets[s] = trace.realized_total - best_total
        regret_ok = regrets.mean() <= bound2
        identity_ok = True
        for s in range(3):
            trace = fast_game_trace(tables, np.random.default_rng(s))
            report = regret_report(trace, tables.comparators, cert)
            gap = report.regrets - (report.drift_term + report.competition_terms)
            identity_ok = identity_ok and float(np.abs(gap).max()) <= 1e-9
        all_ok = all_ok and tau_ok and bound_ok and regret_ok and identity_ok
        details.append(
            f"{script.kind}: regret={regrets.mean():.1f}<= {bound2:.1f}? {regret_ok}, "
            f"tau={cert.tau:.4f}, identity_ok={identity_ok}"
        )
    elapsed = time.perf_counter() - start
    _verdict(
        5,
        "policy-class learner beats the drift-aware bound on 4 adversaries",
        all_ok and elapsed < 600.0,
        "; ".join(details) + f"; elapsed={elapsed:.1f}s",
    )


def test_criterion_6_sublinear_regret_growth():
    start = time.perf_counter()
    cfg = ExperimentConfig(
        shape=ProblemShape(4, 2),
        kind="model-switching",
        adversary_seed=11,
        gamma=0.25,
        period=500,
        model_file=None,
        loss_file=None,
        learner="sd-mdp",
        policy_source="all-deterministic",
        horizons=(5000, 10_000, 20_000, 40_000),
        seeds=tuple(range(100)),
        x0=0,
        output=None,
    )
    report = monte_carlo(cfg, workers=4)
    means = [row.mean_regret for row in report.rows]
    positive = all(m > 0.0 for m in means)
    slope = report.growth_slope
    elapsed = time.perf_counter() - start
    _verdict(
        6,
        "log-log regret growth slope at most 0.75",
        positive and slope is not None and slope <= 0.75 and elapsed < 1200.0,
        f"means={[round(m, 1) for m in means]} slope={slope:.3f} "
        f"elapsed={elapsed:.1f}s",
    )


def test_criterion_7_counterfactual_scores_match_sampling():
    start = time.perf_counter()
    shape = ProblemShape(2, 2)
    script = AdversaryScript(
        kind="random-smoothed", shape=shape, horizon=50, seed=17
    )
    policy = Policy(np.array([[0.3, 0.7], [0.6, 0.4]]))
    exact = fixed_policy_expected_total(policy, script, 50, 0)
    cross = comparator_losses([policy], script, 50, 0)[0].sum()

    materialized = precompute(script, 50)
    action_cdf = np.cumsum(policy.probs, axis=1)
    kernel_cdf = np.cumsum(materialized.kernels, axis=3)
    walkers = 10_000
    rng = np.random.default_rng(104)
    states = np.zeros(walkers, dtype=np.int64)
    totals = np.zeros(walkers)
    for t in range(50):
        u = rng.random(walkers)
        actions = np.minimum(
            (u[:, None] >= action_cdf[states]).sum(axis=1), shape.num_actions - 1
        )
        totals += materialized.losses[t][states, actions]
        v = rng.random(walkers)
        states = np.minimum(
            (v[:, None] >= kernel_cdf[t][states, actions]).sum(axis=1),
            shape.num_states - 1,
        )
    se = totals.std(ddof=1) / math.sqrt(walkers)
    gap = abs(totals.mean() - exact)
    cross_ok = abs(exact - cross) <= 1e-9
    elapsed = time.perf_counter() - start
    _verdict(
        7,
        "exact counterfactual total matches Monte Carlo within 3 SE",
        gap <= 3.0 * se and cross_ok,
        f"exact={exact:.4f} sampled={totals.mean():.4f} se={se:.4f} "
        f"gap={gap:.4f} elapsed={elapsed:.2f}s",
    )


def test_criterion_8_cover_property_and_end_to_end():
    start = time.perf_counter()
    shape = ProblemShape(2, 2)
    cover = build_cover(shape, 0.2)
    size_ok = cover.size == 441 and cover.within_size_bound
    members = {p.probs.tobytes() for p in cover.policies}
    rng = np.random.default_rng(105)
    failures = 0
    for _ in range(10_000):
        policy = random_policy(shape, rng)
        rounded = round_to_grid(policy, cover.grid_resolution)
        if rounded.probs.tobytes() not in members:
            failures += 1
        elif policy_distance(policy, rounded) > 0.2:
            failures += 1
    cover_ok = failures == 0

    horizon, seeds = 10_000, 25
    script = AdversaryScript(
        kind="model-switching", shape=shape, horizon=horizon, seed=19, period=500
    )
    cert = script_certificate(script, horizon)
    tables = simulation_tables(list(cover.policies), script, horizon, 0, lazy=True)
    realized = np.empty(seeds)
    for s in range(seeds):
        realized[s] = fast_game_trace(tables, np.random.default_rng(s)).realized_total
    continuous = [random_policy(shape, rng) for _ in range(50)]
    continuous_totals = comparator_losses(continuous, script, horizon, 0).sum(axis=1)
    bound = cover_regret_bound(cover.size, horizon, cert.tau, 0.2)
    worst_regret = float(realized.mean() - continuous_totals.min())
    regret_ok = worst_regret <= bound
    elapsed = time.perf_counter() - start
    _verdict(
        8,
        "grid cover is a true eps-cover and the learner on it meets the bound",
        size_ok and cover_ok and regret_ok and elapsed < 600.0,
        f"size={cover.size} failures={failures}/10000 "
        f"worst_regret={worst_regret:.1f}<= {bound:.1f}? {regret_ok} "
        f"elapsed={elapsed:.1f}s",
    )


def test_criterion_9_million_round_stability():
    start = time.perf_counter()
    num, horizon = 8, 1_000_000
    eta = experts.learning_rate(num, horizon)
    state = experts.initial_state(num, eta)
    rng = np.random.default_rng(109)
    ones = np.ones(num)
    manual_switches = 0
    prev = None
    redraw_gap = 0.0
    for t in range(1, horizon + 1):
        idx, switched = experts.sd_choose(state, rng)
        if prev is not None and idx != prev:
            manual_switches += 1
        prev = idx
        experts.sd_update(state, ones)
        if t % 100_000 == 0:
            stay = math.exp(state.log_weights[idx] - state.prev_log_weights[idx])
            redraw_gap = max(redraw_gap, abs((1.0 - stay) - eta))
    lw = state.log_weights
    finite_ok = bool(np.all(np.isfinite(lw)))
    uniform_ok = bool(np.all(lw == lw[0]))
    expected_final = horizon * math.log1p(-eta)
    value_ok = abs(lw[0] - expected_final) <= 1e-6 * abs(expected_final)
    monotone_ok = lw[0] < 0.0
    cdf_ok = np.array_equal(experts.weight_cdf(lw), np.arange(1, num + 1) / num)
    switch_ok = manual_switches == state.switch_count
    redraw_ok = redraw_gap <= 1e-12
    elapsed = time.perf_counter() - start
    _verdict(
        9,
        "million-round run keeps finite weights and exact invariants",
        finite_ok and uniform_ok and value_ok and monotone_ok and cdf_ok
        and switch_ok and redraw_ok,
        f"final_log_weight={lw[0]:.3f} switches={state.switch_count} "
        f"redraw_gap={redraw_gap:.2e} elapsed={elapsed:.1f}s",
    )
