"""Experiment harness: instance generators, exact expectations, and the
paired Monte-Carlo evaluator.

The evaluator always runs an algorithm and the offline optimum on the
same realizations and reports the ratio of means with a bootstrap
confidence interval; everything is reproducible from one master seed.
"""

from __future__ import annotations

import itertools
import math
import time
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .algorithms import (
    EXACT_PROBS,
    OfflineOracle,
    RunOutcome,
    ThresholdConfig,
    plan_best_vc,
    plan_threshold,
    run_fixed_cover,
    run_leaves_first,
    sampled_probs,
    _run_plan,
)
from . import algorithms as _alg
from .mandatory import is_feasible, mandatory_set_cells
from .model import (
    Instance,
    Interval,
    InstanceError,
    Pmf,
    PmfCell,
    QueryStep,
    QueryTranscript,
    Realization,
    UncertainVertex,
    elementary_grid,
    make_instance,
    probability_matrix,
    reduce_instance,
)
from .vcover import (
    CoverGraph,
    SolverBoundError,
    build_cover_graph,
    make_cover_graph,
    vc_exact_small,
)

__all__ = [
    "EvaluationReport",
    "AlgorithmSpec",
    "evaluate",
    "csv_header",
    "csv_row",
    "gen_benchmark",
    "BENCHMARKS",
    "gen_random",
    "exact_expected_opt",
    "exact_expected_cost",
    "enumerate_cell_realizations",
    "best_two_stage_cost",
    "two_stage_expected_opt",
    "run_two_stage_prefix",
    "GeneralizedInstance",
    "make_generalized",
    "expected_opt_generalized",
    "expected_opt_generalized_part",
    "vertex_split",
    "gen_generalized",
]

_PLAN_TAG = 0xFFFF0001
_BOOT_TAG = 0xFFFF0002
_BLOCK = 4096


class _BlockSampler:
    """Fast per-index realization streams.

    Realization i is a pure function of (master_seed, i): uniforms come
    from the counter-based stream keyed [master_seed, i // block] and the
    row i % block of a vectorized block, so results do not depend on how
    indices are split across workers.  Exact cell-endpoint hits fall back
    to a per-index stream and redraw.
    """

    def __init__(self, instance: Instance, master_seed: int):
        self.instance = instance
        self.master_seed = master_seed
        self.ids = list(instance.vertex_ids)
        self.cells: list[tuple[list[float], list[float], list[float]]] = []
        for vid in self.ids:
            pmf = instance.by_id[vid].pmf
            cum: list[float] = []
            acc = 0.0
            for c in pmf.cells:
                acc += c.mass
                cum.append(acc)
            cum[-1] = math.inf  # guard against mass rounding below 1
            self.cells.append(
                (cum, [c.cell.lo for c in pmf.cells], [c.cell.hi for c in pmf.cells])
            )
        self.budget = 2 * len(self.ids)
        self._block = -1
        self._uniforms: np.ndarray | None = None

    def realization(self, index: int) -> Realization:
        block, row = divmod(index, _BLOCK)
        if block != self._block:
            rng = np.random.Generator(np.random.Philox(key=[self.master_seed, block]))
            self._uniforms = rng.random((_BLOCK, self.budget))
            self._block = block
        u = self._uniforms[row]
        weights: dict[str, float] = {}
        for j, vid in enumerate(self.ids):
            cum, los, his = self.cells[j]
            c = bisect_right(cum, u[2 * j])
            lo, hi = los[c], his[c]
            w = lo + u[2 * j + 1] * (hi - lo)
            if not lo < w < hi:  # pragma: no cover - measure-zero fallback
                rng = np.random.Generator(
                    np.random.Philox(key=[self.master_seed, block, row, j])
                )
                while not lo < w < hi:
                    w = lo + rng.random() * (hi - lo)
            weights[vid] = w
        return Realization(weights)


# ---------------------------------------------------------------------------
# Named benchmark instances


def _uv(vid: str, cost: float, lo: float, hi: float, cells: Sequence[tuple[float, float, float]]) -> UncertainVertex:
    pmf = Pmf(tuple(PmfCell(Interval(a, b), m) for a, b, m in cells if m > 0.0))
    return UncertainVertex(vid, cost, Interval(lo, hi), pmf)


def _check_unit(name: str, value: float, lo: float = 0.0, hi: float = 1.0) -> None:
    if not (lo < value < hi):
        raise ValueError(f"{name}={value} outside ({lo}, {hi})")


def make_fork(eps: float = 0.01) -> Instance:
    """Two edges sharing a vertex; the instance behind the 4/3 barrier."""
    _check_unit("eps", eps)
    x = _uv("x", 1.0, 0.0, 2.0, [(0.0, 1.0, 0.5), (1.0, 2.0, 0.5)])
    y = _uv("y", 1.0, 1.0, 3.0, [(1.0, 2.0, eps), (2.0, 3.0, 1.0 - eps)])
    z = _uv("z", 1.0, 1.0, 3.0, [(1.0, 2.0, eps), (2.0, 3.0, 1.0 - eps)])
    return make_instance([x, y, z], [["x", "y"], ["x", "z"]])


def make_weighted_triple(k: float = 100.0, eps: float = 0.01) -> Instance:
    """One 3-vertex hyperedge with costs (k, 1, k); both stage-1 cover
    choices pay about 3/2 of the optimum."""
    _check_unit("eps", eps)
    if k <= 0:
        raise ValueError("k must be positive")
    x = _uv("x", k, 0.0, 3.0, [(0.0, 1.0, eps), (2.0, 3.0, 1.0 - eps)])
    y = _uv("y", 1.0, 1.0, 4.0, [(1.0, 2.0, 0.5), (3.0, 4.0, 0.5)])
    z = _uv("z", k, 2.0, 5.0, [(2.0, 3.0, eps), (3.0, 5.0, 1.0 - eps)])
    return make_instance([x, y, z], [["x", "y", "z"]])


def make_overlap_family(k: int = 3, eps: float = 0.01) -> Instance:
    """k hyperedges sharing the middle and right vertices; the cover graph
    is complete bipartite."""
    _check_unit("eps", eps)
    width = len(str(k))
    verts = []
    for i in range(1, k + 1):
        verts.append(
            _uv(f"x{i:0{width}d}", 1.0, 0.0, 3.0, [(0.0, 1.0, eps), (2.0, 3.0, 1.0 - eps)])
        )
    verts.append(_uv("y", 1.0, 1.0, 4.0, [(1.0, 2.0, 0.5), (3.0, 4.0, 0.5)]))
    zs = []
    for j in range(1, k + 1):
        zid = f"z{j:0{width}d}"
        zs.append(zid)
        verts.append(_uv(zid, 1.0, 2.0, 5.0, [(2.0, 3.0, eps), (3.0, 5.0, 1.0 - eps)]))
    edges = [[f"x{i:0{width}d}", "y", *zs] for i in range(1, k + 1)]
    return make_instance(verts, edges)


def make_hub_biclique(k: int = 3, eps: float = 0.01) -> Instance:
    """Non-bipartite graph: complete bipartite left/right plus a hub
    adjacent to everything."""
    _check_unit("eps", eps)
    width = len(str(k))
    verts = []
    xs, zs = [], []
    for i in range(1, k + 1):
        xid, zid = f"x{i:0{width}d}", f"z{i:0{width}d}"
        xs.append(xid)
        zs.append(zid)
        verts.append(_uv(xid, 1.0, 0.0, 3.0, [(0.0, 1.0, 1.0 - eps), (2.0, 3.0, eps)]))
        verts.append(_uv(zid, 1.0, 2.0, 5.0, [(2.0, 3.0, eps), (3.0, 5.0, 1.0 - eps)]))
    verts.append(_uv("y", 1.0, 1.0, 4.0, [(1.0, 2.0, 0.5), (3.0, 4.0, 0.5)]))
    edges = [[x, z] for x in xs for z in zs]
    edges += [["y", v] for v in xs + zs]
    return make_instance(verts, edges)


def make_single_set(n: int = 3, eps: float = 0.001) -> Instance:
    """Single hyperedge: one early vertex plus n identical later ones."""
    _check_unit("eps", eps)
    if n < 2:
        raise ValueError("n must be at least 2")
    width = len(str(n))
    verts = [
        _uv(f"e{0:0{width}d}", 1.0, 0.0, 2.0,
            [(0.0, 1.0, 1.0 / n), (1.0, 2.0, (n - 1.0) / n)])
    ]
    for i in range(1, n + 1):
        verts.append(
            _uv(f"e{i:0{width}d}", 1.0, 1.0, 3.0, [(1.0, 2.0, eps), (2.0, 3.0, 1.0 - eps)])
        )
    return make_instance(verts, [[v.id for v in verts]])


def make_staircase(n: int = 64) -> Instance:
    """Single hyperedge of staircase intervals with half the mass at each
    end; the instance separating adaptive from strict two-stage querying."""
    if n < 2:
        raise ValueError("n must be at least 2")
    width = len(str(n))
    verts = [
        _uv(f"v{1:0{width}d}", 1.0, 1.0, n + 1.0, [(1.0, 2.0, 0.5), (float(n), n + 1.0, 0.5)])
    ]
    for i in range(2, n + 1):
        verts.append(
            _uv(
                f"v{i:0{width}d}",
                1.0,
                float(i),
                n + 2.0,
                [(float(i), i + 1.0, 0.5), (n + 1.0, n + 2.0, 0.5)],
            )
        )
    return make_instance(verts, [[v.id for v in verts]])


def make_edge_trap(d: float = 0.618, eps: float = 0.01, eps2: float = 1e-4) -> Instance:
    """Single edge where the deterministic cover choice backfires.

    Vertex a is almost never mandatory but is the canonical pick of the
    exact cover solvers, while b still needs a follow-up query with
    probability about d.
    """
    _check_unit("eps", eps, 0.0, d)
    _check_unit("eps2", eps2)
    a = _uv("a", 1.0, 1.0, 3.0, [(1.0, 2.0, d - eps), (2.0, 3.0, 1.0 - d + eps)])
    b = _uv("b", 1.0, 0.0, 2.0, [(0.0, 1.0, 1.0 - eps2), (1.0, 2.0, eps2)])
    return make_instance([a, b], [["a", "b"]])


def make_star_trap(d: float = 0.618, n: int = 50, eta: float = 0.01) -> Instance:
    """Star whose center is (almost) always mandatory and whose leaves sit
    exactly at the querying threshold, so threshold-style algorithms pay
    for every vertex up front."""
    _check_unit("d", d)
    _check_unit("eta", eta)
    if n < 1:
        raise ValueError("n must be at least 1")
    leaf_mass = 1.0 - eta ** (1.0 / n)
    width = len(str(n))
    verts = [_uv("c", 1.0, 0.0, 2.0, [(0.0, 1.0, 1.0 - d), (1.0, 2.0, d)])]
    edges = []
    for i in range(1, n + 1):
        vid = f"u{i:0{width}d}"
        verts.append(
            _uv(vid, 1.0, 1.0, 3.0, [(1.0, 2.0, leaf_mass), (2.0, 3.0, 1.0 - leaf_mass)])
        )
        edges.append(["c", vid])
    return make_instance(verts, edges)


def make_overlap_pair(p: float = 0.4, q: float = 0.4) -> Instance:
    """Two overlapping intervals forming a single edge."""
    _check_unit("p", p)
    _check_unit("q", q)
    v0 = _uv("v0", 1.0, 0.0, 2.0, [(0.0, 1.0, 1.0 - p), (1.0, 2.0, p)])
    v1 = _uv("v1", 1.0, 1.0, 3.0, [(1.0, 2.0, q), (2.0, 3.0, 1.0 - q)])
    return make_instance([v0, v1], [["v0", "v1"]])


BENCHMARKS: dict[str, Callable[..., Instance]] = {
    "fork": make_fork,
    "weighted-triple": make_weighted_triple,
    "overlap-family": make_overlap_family,
    "hub-biclique": make_hub_biclique,
    "single-set": make_single_set,
    "staircase": make_staircase,
    "edge-trap": make_edge_trap,
    "star-trap": make_star_trap,
    "overlap-pair": make_overlap_pair,
}


def gen_benchmark(name: str, **params) -> Instance:
    """Build a named benchmark instance; every one is already reduced."""
    try:
        factory = BENCHMARKS[name]
    except KeyError:
        raise ValueError(
            f"unknown benchmark {name!r}; available: {', '.join(sorted(BENCHMARKS))}"
        ) from None
    instance = factory(**params)
    if not instance.is_reduced():
        raise AssertionError(f"benchmark {name} generated a non-reduced instance")
    return instance


# ---------------------------------------------------------------------------
# Random instance families


def _random_vertex_at(
    vid: str, rng: np.random.Generator, lo: float, unit_cost: bool
) -> UncertainVertex:
    hi = lo + 1.0
    n_cells = int(rng.integers(1, 4))
    cuts = sorted(float(rng.uniform(lo + 0.05, hi - 0.05)) for _ in range(n_cells - 1))
    bounds = [lo, *cuts, hi]
    raw = rng.uniform(0.1, 1.0, size=n_cells)
    masses = raw / raw.sum()
    cells = [
        (bounds[i], bounds[i + 1], float(masses[i]))
        for i in range(n_cells)
        if bounds[i] < bounds[i + 1]
    ]
    cost = 1.0 if unit_cost else float(rng.uniform(0.5, 2.0))
    return _uv(vid, cost, lo, hi, cells)


def _random_vertex(
    vid: str, rng: np.random.Generator, spread: float, unit_cost: bool
) -> UncertainVertex:
    return _random_vertex_at(vid, rng, float(rng.uniform(0.0, spread)), unit_cost)


def gen_random(
    family: str,
    rng: np.random.Generator | int,
    **params,
):
    """Random instance families; returns (instance, layers) for
    ``interval-layers`` and a plain instance otherwise.

    Intervals all have length one with lower ends inside (0, spread), so
    with spread < 1 every pair overlaps and nothing is contained in
    anything else: the instances come out reduced.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    spread = params.pop("spread", 0.8)
    unit_cost = params.pop("unit_cost", True)

    if family == "gnp":
        n = params.pop("n", 8)
        p = params.pop("p", 0.3)
        verts = [_random_vertex(f"v{i:02d}", rng, spread, unit_cost) for i in range(n)]
        ids = [v.id for v in verts]
        edges = [
            [ids[i], ids[j]]
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < p
        ]
        instance, forced = reduce_instance(make_instance(verts, edges))
        assert not forced
        return instance

    if family == "hypergraph":
        n = params.pop("n", 8)
        m = params.pop("m", 4)
        max_size = params.pop("max_size", 4)
        verts = [_random_vertex(f"v{i:02d}", rng, spread, unit_cost) for i in range(n)]
        ids = [v.id for v in verts]
        edges = []
        for _ in range(m):
            size = int(rng.integers(2, min(max_size, n) + 1))
            members = [str(u) for u in rng.choice(ids, size=size, replace=False)]
            edges.append(members)
        instance, forced = reduce_instance(make_instance(verts, edges))
        assert not forced
        return instance

    if family == "bipartite":
        nl = params.pop("nl", 4)
        nr = params.pop("nr", 4)
        p = params.pop("p", 0.4)
        verts = [_random_vertex(f"l{i:02d}", rng, spread, unit_cost) for i in range(nl)]
        verts += [_random_vertex(f"r{j:02d}", rng, spread, unit_cost) for j in range(nr)]
        edges = [
            [f"l{i:02d}", f"r{j:02d}"]
            for i in range(nl)
            for j in range(nr)
            if rng.random() < p
        ]
        if not edges:
            edges = [[f"l{0:02d}", f"r{0:02d}"]]
        instance, forced = reduce_instance(make_instance(verts, edges))
        assert not forced
        return instance

    if family == "star":
        n = params.pop("n", 5)
        verts = [_random_vertex("c", rng, spread, unit_cost)]
        edges = []
        for i in range(n):
            verts.append(_random_vertex(f"u{i:02d}", rng, spread, unit_cost))
            edges.append(["c", f"u{i:02d}"])
        instance, forced = reduce_instance(make_instance(verts, edges))
        assert not forced
        return instance

    if family == "interval-layers":
        k = params.pop("k", 2)
        n = params.pop("n", 8)
        step = params.pop("step", 0.3)
        verts = [
            _random_vertex_at(f"v{i:02d}", rng, i * step, unit_cost) for i in range(n)
        ]
        ids = [v.id for v in verts]
        by_id = {v.id: v for v in verts}
        adjacency: dict[str, set[str]] = {vid: set() for vid in ids}
        layers: list[list[str]] = []
        edges: list[list[str]] = []
        for _ in range(k):
            layer = [vid for vid in ids if rng.random() < 0.75]
            layers.append(layer)
            for a, b in zip(layer, layer[1:]):
                if not by_id[a].interval.intersects(by_id[b].interval):
                    continue
                if adjacency[a] & adjacency[b]:
                    continue  # keep the union triangle-free
                if b not in adjacency[a]:
                    adjacency[a].add(b)
                    adjacency[b].add(a)
                    edges.append([a, b])
        instance, forced = reduce_instance(make_instance(verts, edges))
        assert not forced
        return instance, layers

    raise ValueError(f"unknown random family {family!r}")


# ---------------------------------------------------------------------------
# Exact expectations by elementary-cell enumeration


def _cell_rows(instance: Instance, max_combos: int) -> list[tuple[str, list[tuple[int, float]]]]:
    matrix = probability_matrix(instance)
    rows = [(vid, matrix[vid]) for vid in instance.vertex_ids]
    combos = 1
    for _, row in rows:
        combos *= len(row)
        if combos > max_combos:
            raise SolverBoundError(f"cell combinations exceed {max_combos}")
    return rows


def enumerate_cell_realizations(
    instance: Instance, max_combos: int = 10**6
) -> Iterable[tuple[float, dict[str, int], Realization]]:
    """Yield (probability, cell assignment, representative realization).

    Representative weights take distinct interior positions inside each
    cell; every algorithm decision and every optimal cost is determined
    by the cell assignment alone, so averaging any cost over these
    representatives is exact.
    """
    grid = elementary_grid(instance)
    rows = _cell_rows(instance, max_combos)
    ids = [vid for vid, _ in rows]
    offsets = {vid: (j + 1.0) / (len(ids) + 1.0) for j, vid in enumerate(ids)}
    for combo in itertools.product(*(row for _, row in rows)):
        prob = 1.0
        cells: dict[str, int] = {}
        weights: dict[str, float] = {}
        for vid, (idx, mass) in zip(ids, combo):
            prob *= mass
            cells[vid] = idx
            weights[vid] = grid[idx] + (grid[idx + 1] - grid[idx]) * offsets[vid]
        yield prob, cells, Realization(weights)


def exact_expected_opt(instance: Instance, max_combos: int = 10**6) -> float:
    """Expected optimal query cost by enumerating joint cell assignments."""
    grid = elementary_grid(instance)
    cover_graph = build_cover_graph(instance)
    costs = instance.costs
    memo: dict[frozenset[str], float] = {}
    total = []
    for prob, cells, _ in enumerate_cell_realizations(instance, max_combos):
        mandatory = mandatory_set_cells(instance, cells, grid)
        vc = memo.get(mandatory)
        if vc is None:
            rest = [v for v in instance.vertex_ids if v not in mandatory]
            vc = vc_exact_small(cover_graph.induced(rest)).weight
            memo[mandatory] = vc
        total.append(prob * (math.fsum(costs[v] for v in mandatory) + vc))
    return math.fsum(total)


def exact_expected_cost(
    instance: Instance,
    runner: Callable[[Realization], RunOutcome],
    max_combos: int = 10**6,
) -> float:
    """Exact expected query cost of an algorithm via cell enumeration."""
    total = []
    for prob, _, realization in enumerate_cell_realizations(instance, max_combos):
        total.append(prob * runner(realization).transcript.total_cost)
    return math.fsum(total)


# ---------------------------------------------------------------------------
# Strict two-stage policies on a single hyperedge


def best_two_stage_cost(n: int) -> tuple[float, int]:
    """Cheapest strict two-stage policy on the staircase instance.

    Querying a k-prefix costs k plus, when every first-stage weight lands
    at its right end, all n - k remaining queries: n/2^k + k(1 - 2^-k),
    minimized over k.
    """
    best = (math.inf, 0)
    # beyond k ~ 60 the leftover term vanishes and the cost grows as k
    for k in range(min(n, 64) + 1):
        cost = n / 2.0**k + k * (1.0 - 2.0**-k)
        if cost < best[0]:
            best = (cost, k)
    return best


def two_stage_expected_opt(n: int) -> float:
    """Exact expected optimum of the staircase instance: 2 - 3/2^n.

    Case analysis over the first left-end weight in the staircase order;
    validated against cell enumeration for small n in the test suite.
    """
    return 2.0 - 3.0 * 2.0**-n


def run_two_stage_prefix(instance: Instance, k: int, realization: Realization) -> float:
    """Cost of the strict two-stage policy with a k-prefix first stage.

    The second stage is chosen without adaptivity: it must make the query
    set feasible for every realization consistent with stage one, which
    means stopping only when no unqueried interval could undercut the
    revealed minimum, and querying everything otherwise.
    """
    if len(instance.hyperedges) != 1:
        raise ValueError("two-stage prefix policy is defined for a single hyperedge")
    members = instance.hyperedges[0]
    prefix = list(members[:k])
    rest = [v for v in members if v not in prefix]
    w_star = min((realization[v] for v in prefix), default=math.inf)
    if all(instance.interval(u).lo >= w_star for u in rest):
        queried = set(prefix)
    else:
        queried = set(members)
    assert is_feasible(instance, realization, queried)
    return math.fsum(instance.costs[v] for v in queried)


# ---------------------------------------------------------------------------
# Generalized instances (explicit mandatory law) and vertex splits


@dataclass(frozen=True)
class GeneralizedInstance:
    """Cover graph plus an explicit distribution over mandatory sets."""

    graph: CoverGraph
    law: tuple[tuple[frozenset[str], float], ...]

    def validate(self) -> None:
        if len(self.graph.vertices) > 12:
            raise ValueError("generalized instances are capped at 12 vertices")
        total = math.fsum(p for _, p in self.law)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"mandatory law sums to {total!r}")
        for subset, p in self.law:
            if p < 0.0:
                raise ValueError("negative probability in mandatory law")
            if not subset <= set(self.graph.vertices):
                raise ValueError("mandatory law references unknown vertices")


def make_generalized(
    weights: Mapping[str, float],
    edges: Iterable[tuple[str, str]],
    law: Mapping[frozenset[str], float] | Iterable[tuple[frozenset[str], float]],
) -> GeneralizedInstance:
    graph = make_cover_graph(weights, edges)
    items = law.items() if isinstance(law, Mapping) else law
    canon = tuple(sorted(((frozenset(m), float(p)) for m, p in items), key=lambda t: sorted(t[0])))
    gi = GeneralizedInstance(graph, canon)
    gi.validate()
    return gi


def expected_opt_generalized(gi: GeneralizedInstance) -> float:
    """E[optimum] = sum over mandatory sets of c(M) + min cover of the rest."""
    weights = gi.graph.weights
    total = []
    for mandatory, p in gi.law:
        rest = [v for v in gi.graph.vertices if v not in mandatory]
        vc = vc_exact_small(gi.graph.induced(rest)).weight
        total.append(p * (math.fsum(weights[v] for v in mandatory) + vc))
    return math.fsum(total)


def expected_opt_generalized_part(gi: GeneralizedInstance, part: Iterable[str]) -> float:
    """Expected cost any feasible set must spend inside ``part``."""
    keep = set(part)
    weights = gi.graph.weights
    total = []
    for mandatory, p in gi.law:
        inside = [v for v in mandatory if v in keep]
        rest = [v for v in keep if v not in mandatory]
        vc = vc_exact_small(gi.graph.induced(rest)).weight
        total.append(p * (math.fsum(weights[v] for v in inside) + vc))
    return math.fsum(total)


def vertex_split(
    gi: GeneralizedInstance, vid: str, fractions: Sequence[float]
) -> GeneralizedInstance:
    """Split a vertex into cost fractions that are jointly mandatory.

    Copies inherit all adjacencies; the law makes every copy mandatory
    exactly when the original was, which keeps the expected optimum
    unchanged.
    """
    if vid not in gi.graph.weights:
        raise ValueError(f"unknown vertex {vid}")
    if abs(math.fsum(fractions) - 1.0) > 1e-9 or any(f <= 0.0 for f in fractions):
        raise ValueError("fractions must be positive and sum to 1")
    base = gi.graph.weights[vid]
    copies = [f"{vid}~{j}" for j in range(len(fractions))]
    weights = {v: w for v, w in gi.graph.weight_items if v != vid}
    weights.update({c: base * f for c, f in zip(copies, fractions)})
    edges = []
    for a, b in gi.graph.edges:
        if vid in (a, b):
            other = b if a == vid else a
            edges.extend((c, other) for c in copies)
        else:
            edges.append((a, b))
    law = []
    for mandatory, p in gi.law:
        if vid in mandatory:
            law.append((frozenset(mandatory - {vid}) | set(copies), p))
        else:
            law.append((mandatory, p))
    return make_generalized(weights, edges, law)


def gen_generalized(n: int, rng: np.random.Generator | int) -> GeneralizedInstance:
    """Random generalized instance with a sparse mandatory law."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    ids = [f"v{i}" for i in range(n)]
    weights = {vid: float(rng.uniform(0.5, 2.0)) for vid in ids}
    edges = [
        (ids[i], ids[j])
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < 0.45
    ]
    support = max(2, int(rng.integers(2, 9)))
    subsets = []
    for _ in range(support):
        subsets.append(frozenset(vid for vid in ids if rng.random() < 0.4))
    raw = rng.uniform(0.1, 1.0, size=len(subsets))
    raw /= raw.sum()
    law: dict[frozenset[str], float] = {}
    for subset, p in zip(subsets, raw):
        law[subset] = law.get(subset, 0.0) + float(p)
    return make_generalized(weights, edges, law)


# ---------------------------------------------------------------------------
# Paired Monte-Carlo evaluation


@dataclass(frozen=True)
class AlgorithmSpec:
    """Picklable description of an algorithm run configuration."""

    kind: str
    alpha: float = 1.0
    d: float | None = None
    epsilon: float = 0.05
    delta: float = 0.1
    vc_strategy: object = None
    cover: tuple[str, ...] | None = None
    k: int | None = None

    @property
    def algorithm_id(self) -> str:
        if self.kind == "threshold":
            d = "auto" if self.d is None else f"{self.d:g}"
            return f"threshold(alpha={self.alpha:g};d={d})"
        if self.kind == "threshold-hyper":
            return (
                f"threshold-hyper(alpha={self.alpha:g};eps={self.epsilon:g};"
                f"delta={self.delta:g})"
            )
        if self.kind == "fixed-cover":
            return f"fixed-cover({'+'.join(self.cover or ())})"
        if self.kind == "two-stage-prefix":
            return f"two-stage-prefix(k={self.k})"
        return self.kind

    def threshold_used(self) -> float | None:
        if self.kind == "threshold":
            return ThresholdConfig(self.alpha, self.d).threshold()
        if self.kind == "threshold-hyper":
            return (
                _alg.hyper_threshold(self.alpha, self.epsilon)
                if self.d is None
                else self.d
            )
        return None


@dataclass(frozen=True)
class EvaluationReport:
    instance_id: str
    algorithm_id: str
    n_samples: int
    mean_alg: float
    mean_opt: float
    ratio: float
    ci95_ratio: tuple[float, float]
    master_seed: int
    wall_ms: int
    d: float | None = None
    alpha: float | None = None


def _auto_strategy(spec: AlgorithmSpec, instance: Instance) -> object:
    if spec.vc_strategy is not None:
        return spec.vc_strategy
    if spec.kind in ("threshold", "threshold-hyper"):
        if spec.alpha >= 2.0:
            return "local-ratio"
        if instance.kind == "hypergraph" and len(instance.hyperedges) <= 20:
            return "few-hyperedges"
        return "exact-small"
    if spec.kind == "bestvc":
        from .vcover import bipartition

        if instance.kind == "graph" and bipartition(build_cover_graph(instance)):
            return "bipartite"
        if instance.kind == "hypergraph" and len(instance.hyperedges) <= 20:
            return "few-hyperedges"
        return "exact-small"
    return "exact-small"


def _prepare_runner(
    spec: AlgorithmSpec,
    instance: Instance,
    oracle: OfflineOracle,
    master_seed: int,
) -> Callable[[Realization], RunOutcome]:
    """Resolve a spec into a prepared per-realization runner.

    Everything realization-independent (probabilities, LP, stage-1 cover,
    sampled estimates) happens here once, deterministically from the
    master seed.
    """
    strategy = _auto_strategy(spec, instance)
    if spec.kind == "threshold":
        config = ThresholdConfig(spec.alpha, spec.d, strategy, EXACT_PROBS)
        plan = plan_threshold(instance, config)
        return lambda r: _run_plan(instance, plan, r, oracle)
    if spec.kind == "threshold-hyper":
        config = ThresholdConfig(
            spec.alpha, spec.d, strategy, sampled_probs(spec.epsilon, spec.delta)
        )
        rng = np.random.default_rng([master_seed, _PLAN_TAG])
        plan = plan_threshold(instance, config, rng)
        return lambda r: _run_plan(instance, plan, r, oracle)
    if spec.kind == "bestvc":
        mode = (
            EXACT_PROBS
            if instance.kind == "graph"
            else sampled_probs(spec.epsilon, spec.delta)
        )
        rng = np.random.default_rng([master_seed, _PLAN_TAG])
        _, cover = plan_best_vc(instance, strategy, mode, rng)
        return lambda r: run_fixed_cover(instance, cover.members, r, oracle)
    if spec.kind == "baseline":
        return lambda r: _alg.run_adversarial_baseline(instance, r, oracle)
    if spec.kind == "fixed-cover":
        members = tuple(spec.cover or ())
        return lambda r: run_fixed_cover(instance, members, r, oracle)
    if spec.kind == "leaves-first":
        return lambda r: run_leaves_first(instance, r, oracle)
    if spec.kind == "offline-opt":

        def _run_opt(r: Realization) -> RunOutcome:
            members, cost = oracle.opt(r)
            steps = tuple(QueryStep(v, r[v], "stage1") for v in sorted(members))
            return RunOutcome(QueryTranscript(steps, cost), cost, {"stage1": cost})

        return _run_opt
    if spec.kind == "two-stage-prefix":

        def _run_prefix(r: Realization) -> RunOutcome:
            cost = run_two_stage_prefix(instance, spec.k or 0, r)
            return RunOutcome(QueryTranscript((), cost), oracle.opt(r)[1], {})

        return _run_prefix
    raise ValueError(f"unknown algorithm kind {spec.kind!r}")


def _eval_chunk(
    instance: Instance,
    spec: AlgorithmSpec,
    master_seed: int,
    start: int,
    stop: int,
    vc_bound: int,
) -> tuple[list[float], list[float]]:
    oracle = OfflineOracle(instance, vc_bound)
    runner = _prepare_runner(spec, instance, oracle, master_seed)
    sampler = _BlockSampler(instance, master_seed)
    alg_costs, opt_costs = [], []
    for index in range(start, stop):
        realization = sampler.realization(index)
        outcome = runner(realization)
        alg_costs.append(outcome.transcript.total_cost)
        opt_costs.append(
            outcome.opt_cost
            if not math.isnan(outcome.opt_cost)
            else oracle.opt(realization)[1]
        )
    return alg_costs, opt_costs


def _bootstrap_ci(
    alg: np.ndarray, opt: np.ndarray, master_seed: int, resamples: int = 1000
) -> tuple[float, float]:
    """Paired bootstrap CI for the ratio of means.

    Samples are aggregated into up to 1000 paired block sums first and
    blocks are resampled, which preserves the iid bootstrap distribution
    of the ratio while keeping the cost at resamples x blocks.
    """
    rng = np.random.default_rng([master_seed, _BOOT_TAG])
    blocks = min(len(alg), 1000)
    alg_sums = np.array([chunk.sum() for chunk in np.array_split(alg, blocks)])
    opt_sums = np.array([chunk.sum() for chunk in np.array_split(opt, blocks)])
    idx = rng.integers(0, blocks, size=(resamples, blocks))
    ratios = alg_sums[idx].sum(axis=1) / opt_sums[idx].sum(axis=1)
    return float(np.percentile(ratios, 2.5)), float(np.percentile(ratios, 97.5))


def evaluate(
    instance: Instance,
    spec: AlgorithmSpec,
    n_samples: int,
    master_seed: int,
    instance_id: str = "instance",
    workers: int = 1,
    vc_bound: int = 24,
) -> EvaluationReport:
    """Paired Monte-Carlo estimate of E[algorithm] / E[optimum].

    Realization i comes from the stream (master_seed, i) regardless of
    the worker count, and results are reduced in index order, so reports
    depend only on the seed (wall_ms aside).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if not instance.is_reduced():
        raise InstanceError("evaluate requires a reduced instance")
    start = time.perf_counter()
    if workers <= 1:
        alg_list, opt_list = _eval_chunk(instance, spec, master_seed, 0, n_samples, vc_bound)
    else:
        chunk = math.ceil(n_samples / workers)
        bounds = [(i, min(i + chunk, n_samples)) for i in range(0, n_samples, chunk)]
        alg_list, opt_list = [], []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_eval_chunk, instance, spec, master_seed, a, b, vc_bound)
                for a, b in bounds
            ]
            for fut in futures:  # submission order == index order
                a_part, o_part = fut.result()
                alg_list.extend(a_part)
                opt_list.extend(o_part)
    alg = np.asarray(alg_list)
    opt = np.asarray(opt_list)
    mean_alg = float(alg.mean())
    mean_opt = float(opt.mean())
    ci = _bootstrap_ci(alg, opt, master_seed)
    wall_ms = int((time.perf_counter() - start) * 1000)
    return EvaluationReport(
        instance_id=instance_id,
        algorithm_id=spec.algorithm_id,
        n_samples=n_samples,
        mean_alg=mean_alg,
        mean_opt=mean_opt,
        ratio=mean_alg / mean_opt,
        ci95_ratio=ci,
        master_seed=master_seed,
        wall_ms=wall_ms,
        d=spec.threshold_used(),
        alpha=spec.alpha if spec.kind.startswith("threshold") else None,
    )


CSV_COLUMNS = (
    "instance_id,algorithm,d,alpha,n_samples,mean_alg,mean_opt,ratio,"
    "ci_lo,ci_hi,seed,wall_ms"
)


def csv_header() -> str:
    return CSV_COLUMNS


def csv_row(report: EvaluationReport, timing: bool = False) -> str:
    def num(x: float | None) -> str:
        return "" if x is None else repr(x)

    return ",".join(
        [
            report.instance_id,
            report.algorithm_id,
            num(report.d),
            num(report.alpha),
            str(report.n_samples),
            repr(report.mean_alg),
            repr(report.mean_opt),
            repr(report.ratio),
            repr(report.ci95_ratio[0]),
            repr(report.ci95_ratio[1]),
            str(report.master_seed),
            str(report.wall_ms if timing else 0),
        ]
    )
