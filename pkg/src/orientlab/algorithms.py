"""The query algorithms under test, plus the offline optimum oracle.

All algorithms are cover-based two-stage procedures: a realization-
independent first stage queries a vertex cover of the cover graph, and
an adaptive second stage queries only vertices that the revealed
weights certify as unavoidable.  Each run produces a transcript paired
with the offline optimum for the same realization.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .mandatory import (
    MandatoryProfile,
    _edge_state,
    estimate_profile,
    exact_prob_graph,
    is_feasible,
    mandatory_set,
)
from .model import Instance, QueryStep, QueryTranscript, Realization
from .vcover import (
    Cover,
    CoverGraph,
    build_cover_graph,
    lp_half_integral,
    vc_bipartite_exact,
    vc_exact_small,
    vc_few_hyperedges,
    vc_interval_union_dp,
    vc_local_ratio_2approx,
)

__all__ = [
    "ProbMode",
    "EXACT_PROBS",
    "sampled_probs",
    "ThresholdConfig",
    "RunOutcome",
    "optimal_d",
    "guaranteed_ratio",
    "hyper_ratio",
    "hyper_threshold",
    "OfflineOracle",
    "offline_opt",
    "run_threshold_graph",
    "run_threshold_hypergraph",
    "run_best_vc",
    "run_adversarial_baseline",
    "run_fixed_cover",
    "run_leaves_first",
    "resolve_vc_solver",
]


# ---------------------------------------------------------------------------
# Parameters


def optimal_d(alpha: float) -> float:
    """Threshold that balances both branches of the guarantee."""
    if not 1.0 <= alpha <= 2.0:
        raise ValueError(f"alpha {alpha} outside [1, 2]")
    return 2.0 / (alpha + math.sqrt(8.0 - alpha * (4.0 - alpha)))


def guaranteed_ratio(alpha: float, d: float | None = None) -> float:
    """max(1/d, alpha + (2 - alpha) d); at the optimal d both branches meet."""
    if not 1.0 <= alpha <= 2.0:
        raise ValueError(f"alpha {alpha} outside [1, 2]")
    if d is None:
        d = optimal_d(alpha)
    if not 0.0 < d <= 1.0:
        raise ValueError(f"d {d} outside (0, 1]")
    return max(1.0 / d, alpha + (2.0 - alpha) * d)


def hyper_ratio(alpha: float, epsilon: float) -> float:
    """Guarantee of the sampled hypergraph variant (holds w.p. 1 - delta)."""
    if not 1.0 <= alpha <= 2.0:
        raise ValueError(f"alpha {alpha} outside [1, 2]")
    return 0.5 * (
        alpha
        + math.sqrt(
            alpha**2
            + 4.0 * (2.0 - alpha) * (1.0 + alpha * epsilon + (2.0 - alpha) * epsilon**2)
        )
        + (4.0 - 2.0 * alpha) * epsilon
    )


def hyper_threshold(alpha: float, epsilon: float) -> float:
    return 1.0 / hyper_ratio(alpha, epsilon) + epsilon


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class ProbMode:
    kind: str  # "exact" | "sampled"
    epsilon: float = 0.0
    delta: float = 0.0


EXACT_PROBS = ProbMode("exact")


def sampled_probs(epsilon: float, delta: float) -> ProbMode:
    return ProbMode("sampled", epsilon, delta)


@dataclass(frozen=True)
class ThresholdConfig:
    """Threshold algorithm parameters.

    ``d`` of None means the optimal value for the declared ``alpha``.
    ``vc_strategy`` selects the black box used on the half-valued part
    of the LP solution; a callable CoverGraph -> Cover is also accepted.
    """

    alpha: float = 1.0
    d: float | None = None
    vc_strategy: object = "exact-small"
    prob_mode: ProbMode = EXACT_PROBS

    def threshold(self) -> float:
        return optimal_d(self.alpha) if self.d is None else self.d

    def validate(self) -> None:
        if not 1.0 <= self.alpha <= 2.0:
            raise ValueError(f"alpha {self.alpha} outside [1, 2]")
        if self.d is not None and not 0.0 <= self.d <= 1.0:
            raise ValueError(f"d {self.d} outside [0, 1]")


@dataclass
class RunOutcome:
    transcript: QueryTranscript
    opt_cost: float
    stage_breakdown: dict[str, float] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Offline optimum


class OfflineOracle:
    """Optimal query cost per realization, with cover results memoized.

    The optimum is the mandatory set plus a minimum-weight cover of the
    cover graph induced on the non-mandatory vertices.
    """

    def __init__(self, instance: Instance, vc_bound: int = 24, check: bool = True):
        self.instance = instance
        self.vc_bound = vc_bound
        self.check = check
        self.cover_graph = build_cover_graph(instance)
        self._memo: dict[frozenset[str], tuple[frozenset[str], float]] = {}

    def opt(self, realization: Realization) -> tuple[frozenset[str], float]:
        mandatory = mandatory_set(self.instance, realization)
        hit = self._memo.get(mandatory)
        if hit is None:
            rest = [v for v in self.instance.vertex_ids if v not in mandatory]
            cover = vc_exact_small(self.cover_graph.induced(rest), self.vc_bound)
            hit = (cover.members, cover.weight)
            self._memo[mandatory] = hit
        members = mandatory | hit[0]
        cost = math.fsum(self.instance.costs[v] for v in mandatory) + hit[1]
        if self.check and not is_feasible(self.instance, realization, members):
            raise AssertionError("offline optimum is not feasible")
        return frozenset(members), cost


def offline_opt(
    instance: Instance, realization: Realization, vc_bound: int = 24
) -> tuple[frozenset[str], float]:
    return OfflineOracle(instance, vc_bound).opt(realization)


# ---------------------------------------------------------------------------
# Shared run plumbing


class _Recorder:
    def __init__(self, instance: Instance, realization: Realization):
        self.instance = instance
        self.realization = realization
        self.steps: list[QueryStep] = []
        self.revealed: dict[str, float] = {}

    def query(self, vid: str, stage: str) -> None:
        if vid in self.revealed:
            raise AssertionError(f"{vid} queried twice")
        w = self.realization[vid]
        self.revealed[vid] = w
        self.steps.append(QueryStep(vid, w, stage))

    def finish(self, oracle: OfflineOracle | None) -> RunOutcome:
        instance = self.instance
        if not is_feasible(instance, self.realization, self.revealed.keys()):
            raise AssertionError("algorithm stopped on an infeasible query set")
        costs = instance.costs
        breakdown = {"preprocess": 0.0, "stage1": 0.0, "stage2": 0.0}
        total = 0.0
        for step in self.steps:
            c = costs[step.vertex]
            breakdown[step.stage] += c
            total += c
        transcript = QueryTranscript(tuple(self.steps), total)
        opt_cost = math.nan
        if oracle is not None:
            opt_cost = oracle.opt(self.realization)[1]
        return RunOutcome(transcript, opt_cost, breakdown)


def _mandatory_completion(rec: _Recorder) -> None:
    """Adaptive stage: round-robin over unsolved hyperedges, each advancing
    its certified-mandatory vertex until every hyperedge is oriented."""
    instance = rec.instance
    pending = deque(range(len(instance.hyperedges)))
    while pending:
        idx = pending.popleft()
        members = instance.hyperedges[idx]
        status, vid = _edge_state(instance, members, rec.revealed)
        if status == "solved":
            continue
        rec.query(vid, "stage2")
        pending.append(idx)


def _query_sorted(rec: _Recorder, members: Sequence[str], stage: str) -> None:
    for vid in sorted(members):
        rec.query(vid, stage)


# ---------------------------------------------------------------------------
# Black-box cover solver selection


def resolve_vc_solver(
    strategy: object,
    instance: Instance,
    weights: Mapping[str, float],
) -> Callable[[CoverGraph], Cover]:
    """Resolve a strategy selector to a solver on induced cover graphs."""
    if callable(strategy):
        return strategy
    if strategy == "exact-small":
        return vc_exact_small
    if strategy == "local-ratio":
        return vc_local_ratio_2approx
    if strategy == "bipartite":
        return vc_bipartite_exact
    if strategy == "few-hyperedges":
        return lambda sub: vc_few_hyperedges(instance, weights, subset=sub.vertices)
    if isinstance(strategy, tuple) and strategy and strategy[0] == "interval-dp":
        layers = strategy[1]
        return lambda sub: vc_interval_union_dp(sub, layers)
    raise ValueError(f"unknown vertex cover strategy {strategy!r}")


# ---------------------------------------------------------------------------
# Threshold algorithm


@dataclass
class ThresholdPlan:
    """Realization-independent first stage of the threshold algorithm."""

    config: ThresholdConfig
    profile: MandatoryProfile
    high_prob: frozenset[str]
    ones: frozenset[str]
    halves_cover: frozenset[str]
    stage1: tuple[str, ...]


def plan_threshold(
    instance: Instance,
    config: ThresholdConfig,
    rng: np.random.Generator | None = None,
) -> ThresholdPlan:
    """Build the first-stage query set: high-probability vertices, the
    LP ones, and a black-box cover of the half-valued subgraph."""
    config.validate()
    if config.prob_mode.kind == "exact":
        if instance.kind != "graph":
            raise ValueError("exact probabilities require a graph instance")
        profile = exact_prob_graph(instance)
        d = config.threshold()
    else:
        if rng is None:
            raise ValueError("sampled probability mode needs an rng")
        n = max(1, len(instance.vertices))
        delta_v = 1.0 - (1.0 - config.prob_mode.delta) ** (1.0 / n)
        profile = estimate_profile(
            instance, config.prob_mode.epsilon, delta_v, rng
        )
        d = (
            hyper_threshold(config.alpha, config.prob_mode.epsilon)
            if config.d is None
            else config.d
        )
    high = frozenset(v for v, p in profile.probs.items() if p >= d)
    cover_graph = build_cover_graph(instance)
    rest = [v for v in instance.vertex_ids if v not in high]
    lp = lp_half_integral(cover_graph.induced(rest))
    solver = resolve_vc_solver(config.vc_strategy, instance, instance.costs)
    cover = solver(cover_graph.induced(lp.halves))
    stage1 = tuple(sorted(high | lp.ones | cover.members))
    return ThresholdPlan(config, profile, high, lp.ones, cover.members, stage1)


def _run_plan(
    instance: Instance,
    plan: ThresholdPlan,
    realization: Realization,
    oracle: OfflineOracle | None,
) -> RunOutcome:
    rec = _Recorder(instance, realization)
    for vid in plan.stage1:
        rec.query(vid, "stage1")
    _mandatory_completion(rec)
    return rec.finish(oracle)


def run_threshold_graph(
    instance: Instance,
    config: ThresholdConfig,
    realization: Realization,
    oracle: OfflineOracle | None = None,
) -> RunOutcome:
    """Threshold algorithm on a graph with exact mandatory probabilities."""
    if oracle is None:
        oracle = OfflineOracle(instance)
    plan = plan_threshold(instance, config)
    return _run_plan(instance, plan, realization, oracle)


def run_threshold_hypergraph(
    instance: Instance,
    config: ThresholdConfig,
    realization: Realization,
    rng: np.random.Generator,
    oracle: OfflineOracle | None = None,
) -> RunOutcome:
    """Threshold algorithm on the cover graph with sampled probabilities."""
    if config.prob_mode.kind != "sampled":
        raise ValueError("hypergraph variant requires sampled probabilities")
    if oracle is None:
        oracle = OfflineOracle(instance)
    plan = plan_threshold(instance, config, rng)
    return _run_plan(instance, plan, realization, oracle)


# ---------------------------------------------------------------------------
# Cover-first algorithms


def plan_best_vc(
    instance: Instance,
    vc_strategy: object = "exact-small",
    prob_mode: ProbMode = EXACT_PROBS,
    rng: np.random.Generator | None = None,
) -> tuple[MandatoryProfile, Cover]:
    """Choose the stage-1 cover minimizing sum (1 - p_v) c_v.

    Any cover pays its full cost up front but only mandatory vertices
    elsewhere, so this weighting makes the expected total minimal among
    cover-first strategies; the solver must be exact.
    """
    if vc_strategy == "local-ratio":
        raise ValueError("the cover-first algorithm needs an exact cover solver")
    if prob_mode.kind == "exact":
        profile = exact_prob_graph(instance)
    else:
        if rng is None:
            raise ValueError("sampled probability mode needs an rng")
        profile = estimate_profile(instance, prob_mode.epsilon, prob_mode.delta, rng)
    weights = {
        v.id: (1.0 - profile.probs[v.id]) * v.cost for v in instance.vertices
    }
    cover_graph = build_cover_graph(instance, weights)
    solver = resolve_vc_solver(vc_strategy, instance, weights)
    return profile, solver(cover_graph)


def run_best_vc(
    instance: Instance,
    vc_strategy: object = "exact-small",
    prob_mode: ProbMode = EXACT_PROBS,
    realization: Realization | None = None,
    rng: np.random.Generator | None = None,
    oracle: OfflineOracle | None = None,
) -> RunOutcome:
    if realization is None:
        raise ValueError("run_best_vc needs a realization")
    if oracle is None:
        oracle = OfflineOracle(instance)
    _, cover = plan_best_vc(instance, vc_strategy, prob_mode, rng)
    return run_fixed_cover(instance, cover.members, realization, oracle)


def run_fixed_cover(
    instance: Instance,
    cover_members: Sequence[str] | frozenset[str],
    realization: Realization,
    oracle: OfflineOracle | None = None,
) -> RunOutcome:
    """Query a given cover of the cover graph, then complete adaptively."""
    if oracle is None:
        oracle = OfflineOracle(instance)
    rec = _Recorder(instance, realization)
    _query_sorted(rec, list(cover_members), "stage1")
    _mandatory_completion(rec)
    return rec.finish(oracle)


def run_adversarial_baseline(
    instance: Instance,
    realization: Realization,
    oracle: OfflineOracle | None = None,
) -> RunOutcome:
    """Left-endpoint-order querying without distributional information.

    Round-robins over unsolved hyperedges, always advancing to the
    leftmost vertex that could still be the minimum; the classical
    2-competitive control.
    """
    if oracle is None:
        oracle = OfflineOracle(instance)
    rec = _Recorder(instance, realization)
    pending = deque(range(len(instance.hyperedges)))
    while pending:
        idx = pending.popleft()
        status, vid = _edge_state(instance, instance.hyperedges[idx], rec.revealed)
        if status == "solved":
            continue
        rec.query(vid, "stage2")
        pending.append(idx)
    return rec.finish(oracle)


def run_leaves_first(
    instance: Instance,
    realization: Realization,
    oracle: OfflineOracle | None = None,
) -> RunOutcome:
    """Single-hyperedge policy that defers the leftmost vertex.

    Queries the non-leftmost members in left-endpoint order until the
    hyperedge is solved or the leftmost vertex becomes certified
    mandatory; then finishes with the adaptive completion.
    """
    if len(instance.hyperedges) != 1:
        raise ValueError("leaves-first policy is defined for a single hyperedge")
    if oracle is None:
        oracle = OfflineOracle(instance)
    members = instance.hyperedges[0]
    leftmost = members[0]
    rec = _Recorder(instance, realization)
    for vid in members[1:]:
        status, _ = _edge_state(instance, members, rec.revealed)
        if status == "solved":
            break
        w_known = [rec.revealed[u] for u in members if u in rec.revealed]
        if w_known and instance.interval(leftmost).contains(min(w_known)):
            break  # leftmost is now mandatory
        rec.query(vid, "stage1")
    _mandatory_completion(rec)
    return rec.finish(oracle)
