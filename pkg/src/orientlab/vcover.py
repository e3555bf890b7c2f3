"""Vertex-cover machinery: the cover graph of a hypergraph and its solvers.

Every feasible query set covers the cover graph (each leftmost/member
pair is a witness set), so the algorithms lean on a toolbox of cover
solvers: a half-integral LP relaxation, exact bipartite and small-graph
solvers, a local-ratio 2-approximation, and two structured exact solvers
(per-hyperedge enumeration and a layered-path dynamic program).
"""

from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .model import Instance

EPS = 1e-12

__all__ = [
    "SolverBoundError",
    "CoverGraph",
    "HalfIntegralSolution",
    "Cover",
    "make_cover_graph",
    "build_cover_graph",
    "bipartition",
    "lp_half_integral",
    "vc_bipartite_exact",
    "vc_exact_small",
    "vc_local_ratio_2approx",
    "vc_few_hyperedges",
    "clique_reduce",
    "interval_layer_clique_finder",
    "vc_interval_union_dp",
]


class SolverBoundError(RuntimeError):
    """A solver was asked to exceed its configured size bound."""


@dataclass(frozen=True)
class CoverGraph:
    """Weighted undirected graph; canonical field order makes it hashable."""

    vertices: tuple[str, ...]
    weight_items: tuple[tuple[str, float], ...]
    edges: tuple[tuple[str, str], ...]

    @cached_property
    def weights(self) -> dict[str, float]:
        return dict(self.weight_items)

    @cached_property
    def adjacency(self) -> dict[str, tuple[str, ...]]:
        adj: dict[str, set[str]] = {v: set() for v in self.vertices}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return {v: tuple(sorted(s)) for v, s in adj.items()}

    def induced(self, subset: Iterable[str]) -> "CoverGraph":
        keep = set(subset)
        return make_cover_graph(
            {v: w for v, w in self.weight_items if v in keep},
            [e for e in self.edges if e[0] in keep and e[1] in keep],
        )

    def components(self) -> list[frozenset[str]]:
        seen: set[str] = set()
        comps = []
        for start in self.vertices:
            if start in seen:
                continue
            comp = {start}
            queue = deque([start])
            while queue:
                u = queue.popleft()
                for w in self.adjacency[u]:
                    if w not in comp:
                        comp.add(w)
                        queue.append(w)
            seen |= comp
            comps.append(frozenset(comp))
        return comps


def make_cover_graph(
    weights: Mapping[str, float], edges: Iterable[tuple[str, str]]
) -> CoverGraph:
    canon = set()
    for a, b in edges:
        if a == b:
            raise ValueError(f"self-loop at {a}")
        if a not in weights or b not in weights:
            raise ValueError(f"edge ({a}, {b}) references unknown vertex")
        canon.add((a, b) if a < b else (b, a))
    for v, w in weights.items():
        if w < 0.0:
            raise ValueError(f"negative weight at {v}")
    return CoverGraph(
        vertices=tuple(sorted(weights)),
        weight_items=tuple(sorted(weights.items())),
        edges=tuple(sorted(canon)),
    )


@dataclass(frozen=True)
class HalfIntegralSolution:
    """LP relaxation solution with values in {0, 1/2, 1}."""

    values: tuple[tuple[str, float], ...]
    objective: float
    ones: frozenset[str]
    halves: frozenset[str]
    zeros: frozenset[str]

    @cached_property
    def value_of(self) -> dict[str, float]:
        return dict(self.values)

    def validate(self, g: CoverGraph) -> None:
        for a, b in g.edges:
            if self.value_of[a] + self.value_of[b] < 1.0 - EPS:
                raise AssertionError(f"LP solution violates edge ({a}, {b})")
        obj = math.fsum(g.weights[v] * x for v, x in self.values)
        if abs(obj - self.objective) > 1e-6 * max(1.0, abs(obj)):
            raise AssertionError("LP objective mismatch")


@dataclass(frozen=True)
class Cover:
    members: frozenset[str]
    weight: float

    def validate(self, g: CoverGraph) -> None:
        for a, b in g.edges:
            if a not in self.members and b not in self.members:
                raise AssertionError(f"edge ({a}, {b}) uncovered")


def _cover(g_weights: Mapping[str, float], members: Iterable[str]) -> Cover:
    ms = frozenset(members)
    return Cover(ms, math.fsum(g_weights[v] for v in ms))


# ---------------------------------------------------------------------------
# Cover graph of a hypergraph


def build_cover_graph(
    instance: Instance, weights: Mapping[str, float] | None = None
) -> CoverGraph:
    """Edge {v, u} for each hyperedge with leftmost v and intersecting
    member u; for size-2 hyperedges this reproduces the graph itself."""
    if weights is None:
        weights = instance.costs
    edges = []
    for members in instance.hyperedges:
        first = members[0]
        iv = instance.interval(first)
        for u in members[1:]:
            if iv.intersects(instance.interval(u)):
                edges.append((first, u))
    return make_cover_graph(dict(weights), edges)


# ---------------------------------------------------------------------------
# Deterministic max-flow (Edmonds-Karp) used by the cut-based solvers


class _FlowNet:
    def __init__(self, n: int):
        self.n = n
        self.head: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[float] = []

    def add(self, u: int, v: int, cap: float) -> None:
        self.head[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(cap)
        self.head[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0.0)

    def max_flow(self, s: int, t: int) -> float:
        flow = 0.0
        while True:
            parent_edge = [-1] * self.n
            parent_edge[s] = -2
            queue = deque([s])
            while queue and parent_edge[t] == -1:
                u = queue.popleft()
                for e in self.head[u]:
                    v = self.to[e]
                    if parent_edge[v] == -1 and self.cap[e] > EPS:
                        parent_edge[v] = e
                        queue.append(v)
            if parent_edge[t] == -1:
                return flow
            bottleneck = math.inf
            v = t
            while v != s:
                e = parent_edge[v]
                bottleneck = min(bottleneck, self.cap[e])
                v = self.to[e ^ 1]
            v = t
            while v != s:
                e = parent_edge[v]
                self.cap[e] -= bottleneck
                self.cap[e ^ 1] += bottleneck
                v = self.to[e ^ 1]
            flow += bottleneck

    def reachable(self, s: int) -> set[int]:
        seen = {s}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for e in self.head[u]:
                v = self.to[e]
                if v not in seen and self.cap[e] > EPS:
                    seen.add(v)
                    queue.append(v)
        return seen


def _bipartite_min_cut(
    weights: Mapping[str, float],
    left: Sequence[str],
    right: Sequence[str],
    cross_edges: Iterable[tuple[str, str]],
) -> tuple[float, set[str]]:
    """Min-weight cover of a bipartite graph via max-flow.

    Returns (flow value, cover).  The cover comes from the canonical cut
    whose source side is the set of residually reachable nodes, which
    pins a deterministic choice among optimal covers.
    """
    index = {v: i + 1 for i, v in enumerate(itertools.chain(left, right))}
    net = _FlowNet(len(index) + 2)
    s, t = 0, len(index) + 1
    left_set = set(left)
    for v in left:
        net.add(s, index[v], weights[v])
    for v in right:
        net.add(index[v], t, weights[v])
    for a, b in cross_edges:
        u, v = (a, b) if a in left_set else (b, a)
        net.add(index[u], index[v], math.inf)
    value = net.max_flow(s, t)
    reach = net.reachable(s)
    cover = {v for v in left if index[v] not in reach}
    cover |= {v for v in right if index[v] in reach}
    return value, cover


# ---------------------------------------------------------------------------
# LP relaxation via the bipartite double cover


def _lp_core(
    vertices: Sequence[str],
    weights: Mapping[str, float],
    edges: Iterable[tuple[str, str]],
) -> tuple[dict[str, float], float]:
    """Optimal half-integral LP solution (values and objective)."""
    left = [f"{v}\x00L" for v in vertices]
    right = [f"{v}\x00R" for v in vertices]
    w2 = {f"{v}\x00L": weights[v] for v in vertices}
    w2.update({f"{v}\x00R": weights[v] for v in vertices})
    cross = []
    for a, b in edges:
        cross.append((f"{a}\x00L", f"{b}\x00R"))
        cross.append((f"{b}\x00L", f"{a}\x00R"))
    value, cover = _bipartite_min_cut(w2, left, right, cross)
    x = {
        v: ((f"{v}\x00L" in cover) + (f"{v}\x00R" in cover)) / 2.0 for v in vertices
    }
    return x, value / 2.0


def lp_half_integral(g: CoverGraph) -> HalfIntegralSolution:
    """Optimal half-integral solution of the cover LP.

    Solved on the bipartite double cover by max-flow; the source-side
    minimal cut makes the ones/halves/zeros split deterministic, which
    matters because different optimal solutions steer the threshold
    algorithm differently.
    """
    x, objective = _lp_core(g.vertices, g.weights, g.edges)
    ones = frozenset(v for v, val in x.items() if val == 1.0)
    halves = frozenset(v for v, val in x.items() if val == 0.5)
    zeros = frozenset(v for v, val in x.items() if val == 0.0)
    sol = HalfIntegralSolution(
        values=tuple(sorted(x.items())),
        objective=objective,
        ones=ones,
        halves=halves,
        zeros=zeros,
    )
    sol.validate(g)
    return sol


# ---------------------------------------------------------------------------
# Exact bipartite solver


def bipartition(g: CoverGraph) -> Optional[tuple[frozenset[str], frozenset[str]]]:
    """Two-coloring, or None when an odd cycle exists."""
    color: dict[str, int] = {}
    for start in g.vertices:
        if start in color:
            continue
        color[start] = 0
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in g.adjacency[u]:
                if w not in color:
                    color[w] = 1 - color[u]
                    queue.append(w)
                elif color[w] == color[u]:
                    return None
    side0 = frozenset(v for v, c in color.items() if c == 0)
    return side0, frozenset(g.vertices) - side0


def vc_bipartite_exact(
    g: CoverGraph, sides: tuple[Iterable[str], Iterable[str]] | None = None
) -> Cover:
    """Minimum-weight cover of a bipartite graph via max-flow/min-cut."""
    if sides is None:
        sides = bipartition(g)
        if sides is None:
            raise ValueError("graph is not bipartite")
    left, right = (sorted(sides[0]), sorted(sides[1]))
    left_set, right_set = set(left), set(right)
    if left_set & right_set or left_set | right_set != set(g.vertices):
        raise ValueError("sides do not partition the vertices")
    for a, b in g.edges:
        if (a in left_set) == (b in left_set):
            raise ValueError(f"edge ({a}, {b}) inside one side")
    value, cover = _bipartite_min_cut(g.weights, left, right, g.edges)
    result = _cover(g.weights, cover)
    if abs(result.weight - value) > 1e-6 * max(1.0, abs(value)):
        raise AssertionError("cut/cover duality mismatch")
    result.validate(g)
    return result


# ---------------------------------------------------------------------------
# Exact solver for small graphs: branch and bound


def _matching_bound(
    edges: Sequence[tuple[str, str]], weights: Mapping[str, float]
) -> float:
    used: set[str] = set()
    bound = 0.0
    for a, b in edges:
        if a not in used and b not in used:
            used.add(a)
            used.add(b)
            bound += min(weights[a], weights[b])
    return bound


def _bb_min_cover(
    adjacency: dict[str, set[str]], weights: Mapping[str, float]
) -> tuple[float, tuple[str, ...]]:
    """Branch and bound on the highest-degree vertex, LP lower bound.

    Ties in cover weight resolve to the lexicographically smallest member
    tuple, so equal-weight branches are explored rather than pruned.
    """
    best_weight = math.inf
    best_members: tuple[str, ...] | None = None

    def consider(chosen: set[str], weight: float) -> None:
        nonlocal best_weight, best_members
        members = tuple(sorted(chosen))
        if weight < best_weight - EPS or (
            abs(weight - best_weight) <= EPS
            and (best_members is None or members < best_members)
        ):
            best_weight = weight
            best_members = members

    def search(adj: dict[str, set[str]], chosen: set[str], weight: float) -> None:
        active = {v: ns for v, ns in adj.items() if ns}
        if not active:
            consider(chosen, weight)
            return
        if weight > best_weight + EPS:
            return
        edges = sorted(
            (a, b) for a, ns in active.items() for b in ns if a < b
        )
        if weight + _matching_bound(edges, weights) > best_weight + EPS:
            return
        _, lp_obj = _lp_core(sorted(active), weights, edges)
        if weight + lp_obj > best_weight + EPS:
            return
        v = max(active, key=lambda u: (len(active[u]), u))
        # include v
        sub = {u: ns - {v} for u, ns in active.items() if u != v}
        search(sub, chosen | {v}, weight + weights[v])
        # exclude v: all its neighbors join the cover
        ns = set(active[v])
        drop = ns | {v}
        sub = {u: adj_ns - drop for u, adj_ns in active.items() if u not in drop}
        search(sub, chosen | ns, weight + math.fsum(weights[u] for u in ns))

    search(adjacency, set(), 0.0)
    assert best_members is not None
    return best_weight, best_members


_small_cache: dict[CoverGraph, tuple[float, tuple[str, ...]]] = {}


def vc_exact_small(g: CoverGraph, max_component: int = 24) -> Cover:
    """Exact minimum-weight cover for small graphs.

    Connected components are solved independently; the size bound applies
    per component.
    """
    members: set[str] = set()
    for comp in g.components():
        if len(comp) > max_component:
            raise SolverBoundError(
                f"component of size {len(comp)} exceeds bound {max_component}"
            )
        if len(comp) == 1:
            continue
        sub = g.induced(comp)
        hit = _small_cache.get(sub)
        if hit is None:
            adjacency = {v: set(sub.adjacency[v]) for v in sub.vertices}
            hit = _bb_min_cover(adjacency, sub.weights)
            if len(_small_cache) > 200_000:
                _small_cache.clear()
            _small_cache[sub] = hit
        members.update(hit[1])
    result = _cover(g.weights, members)
    result.validate(g)
    return result


# ---------------------------------------------------------------------------
# Local-ratio 2-approximation


def vc_local_ratio_2approx(g: CoverGraph) -> Cover:
    """Weighted 2-approximation by local ratio.

    Scans edges in sorted order; each uncovered edge pays the smaller
    residual endpoint weight on both sides, and zero-residual vertices
    form the cover.
    """
    residual = dict(g.weights)
    for a, b in g.edges:
        if residual[a] == 0.0 or residual[b] == 0.0:
            continue
        delta = min(residual[a], residual[b])
        residual[a] -= delta
        residual[b] -= delta
    result = _cover(g.weights, (v for v in g.vertices if residual[v] == 0.0))
    result.validate(g)
    return result


# ---------------------------------------------------------------------------
# Exact cover through per-hyperedge enumeration


def vc_few_hyperedges(
    instance: Instance,
    weights: Mapping[str, float] | None = None,
    subset: Iterable[str] | None = None,
    max_hyperedges: int = 20,
) -> Cover:
    """Exact minimum cover of the cover graph when hyperedges are few.

    Any cover takes, per hyperedge, either the leftmost vertex or all the
    intersecting co-members, so enumerating the 2^k combinations and
    keeping the cheapest union is exact.  ``subset`` restricts to the
    induced cover graph on those vertices.
    """
    if weights is None:
        weights = instance.costs
    keep = set(subset) if subset is not None else None
    stars: list[tuple[str, tuple[str, ...]]] = []
    for members in instance.hyperedges:
        first = members[0]
        if keep is not None and first not in keep:
            continue
        iv = instance.interval(first)
        others = tuple(
            u
            for u in members[1:]
            if iv.intersects(instance.interval(u)) and (keep is None or u in keep)
        )
        if others:
            stars.append((first, others))
    if len(stars) > max_hyperedges:
        raise SolverBoundError(
            f"{len(stars)} hyperedges exceed enumeration bound {max_hyperedges}"
        )
    best: tuple[float, tuple[str, ...]] | None = None
    for mask in range(1 << len(stars)):
        union: set[str] = set()
        for bit, (first, others) in enumerate(stars):
            if mask >> bit & 1:
                union.update(others)
            else:
                union.add(first)
        weight = math.fsum(weights[v] for v in union)
        key = (weight, tuple(sorted(union)))
        if best is None or weight < best[0] - EPS or (
            abs(weight - best[0]) <= EPS and key[1] < best[1]
        ):
            best = key
    if best is None:
        return Cover(frozenset(), 0.0)
    return Cover(frozenset(best[1]), best[0])


# ---------------------------------------------------------------------------
# Clique removal (local ratio on cliques)


def clique_reduce(
    g: CoverGraph,
    find_clique: Callable[[CoverGraph], Optional[Sequence[str]]],
) -> tuple[CoverGraph, Cover, tuple[tuple[tuple[str, ...], float], ...]]:
    """Strip cliques of size >= 3 by local ratio.

    Repeatedly lowers every clique member's residual weight by the clique
    minimum; members hitting zero are forced into the query set and
    removed.  The returned log of (clique, delta) pairs lets callers
    verify the 3/2 charging argument: forced weight <= sum |C_i| delta_i,
    while any cover loses at least (|C_i| - 1) delta_i per step.
    """
    residual = dict(g.weights)
    edges = set(g.edges)
    forced: list[str] = []
    log: list[tuple[tuple[str, ...], float]] = []
    current = g
    while True:
        clique = find_clique(current)
        if clique is None:
            break
        clique = tuple(clique)
        if len(clique) < 3:
            raise ValueError("clique finder returned fewer than 3 vertices")
        adj = current.adjacency
        for a, b in itertools.combinations(clique, 2):
            if b not in adj[a]:
                raise ValueError(f"clique finder returned non-adjacent pair {a}, {b}")
        delta = min(residual[v] for v in clique)
        log.append((tuple(sorted(clique)), delta))
        dropped = set()
        for v in clique:
            residual[v] -= delta
            if residual[v] == 0.0:
                dropped.add(v)
                forced.append(v)
        edges = {e for e in edges if e[0] not in dropped and e[1] not in dropped}
        current = make_cover_graph(
            {v: residual[v] for v in residual if v not in set(forced)}, edges
        )
    forced_weight = math.fsum(g.weights[v] for v in forced)
    return current, Cover(frozenset(forced), forced_weight), tuple(log)


def interval_layer_clique_finder(
    layers: Sequence[Sequence[str]],
) -> Callable[[CoverGraph], Optional[tuple[str, ...]]]:
    """Clique enumerator for layered proper-interval graphs.

    Scans layers in index order and returns the leftmost maximal run of
    consecutive, pairwise-adjacent vertices of length >= 3.
    """

    def find(g: CoverGraph) -> Optional[tuple[str, ...]]:
        present = set(g.vertices)
        adj = g.adjacency
        for layer in layers:
            seq = [v for v in layer if v in present]
            i = 0
            while i < len(seq):
                j = i + 1
                while j < len(seq) and all(seq[j] in adj[seq[t]] for t in range(i, j)):
                    j += 1
                if j - i >= 3:
                    return tuple(seq[i:j])
                i += 1
        return None

    return find


# ---------------------------------------------------------------------------
# Exact cover of a union of triangle-free proper-interval layers


def _merge_layer_order(layers: Sequence[Sequence[str]]) -> list[str]:
    """Topological merge of the layer orders (ties: lexicographic)."""
    after: dict[str, set[str]] = {}
    indegree: dict[str, int] = {}
    for layer in layers:
        for v in layer:
            after.setdefault(v, set())
            indegree.setdefault(v, 0)
        for a, b in zip(layer, layer[1:]):
            if b not in after[a]:
                after[a].add(b)
                indegree[b] += 1
    ready = [v for v, d in indegree.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for w in sorted(after[v]):
            indegree[w] -= 1
            if indegree[w] == 0:
                heapq.heappush(ready, w)
    if len(order) != len(after):
        raise ValueError("layer orders are cyclic; not a consistent interval order")
    return order


def vc_interval_union_dp(
    g: CoverGraph,
    layers: Sequence[Sequence[str]],
    max_layers: int = 4,
) -> Cover:
    """Exact minimum cover when the edges split into few path layers.

    Each layer must be a disjoint union of paths whose edges join
    consecutive vertices of the layer order (triangle-free proper
    interval structure).  A shortest-path style sweep with one frontier
    bit per layer gives the optimum: a vertex may stay out of the cover
    only when every path predecessor adjacent to it is in.
    """
    if len(layers) > max_layers:
        raise SolverBoundError(f"{len(layers)} layers exceed bound {max_layers}")
    restricted = [[v for v in layer if v in g.weights] for layer in layers]
    edge_set = set(g.edges)
    layer_pairs: set[tuple[str, str]] = set()
    for layer in restricted:
        for a, b in zip(layer, layer[1:]):
            pair = (a, b) if a < b else (b, a)
            if pair in edge_set:
                layer_pairs.add(pair)
    if layer_pairs != edge_set:
        raise ValueError("graph has edges not explained by consecutive layer pairs")
    adj = g.adjacency
    for a, b in g.edges:
        if set(adj[a]) & set(adj[b]):
            raise ValueError("graph contains a triangle; reduce cliques first")

    order = _merge_layer_order(restricted)
    member_layers: dict[str, list[int]] = {v: [] for v in order}
    pred_in_layer: dict[tuple[str, int], str] = {}
    for i, layer in enumerate(restricted):
        for pos, v in enumerate(layer):
            member_layers[v].append(i)
            if pos > 0:
                pred_in_layer[(v, i)] = layer[pos - 1]

    k = len(restricted)
    # state: per-layer frontier bit (1 = frontier vertex is in the cover);
    # virtual start vertices have cost zero and sit in every cover.
    states: dict[tuple[int, ...], tuple[float, tuple[str, ...]]] = {
        tuple([1] * k): (0.0, ())
    }
    for v in order:
        nxt: dict[tuple[int, ...], tuple[float, tuple[str, ...]]] = {}
        lids = member_layers[v]
        for bits, (cost, chosen) in states.items():
            forced = False
            for i in lids:
                pred = pred_in_layer.get((v, i))
                if pred is not None and bits[i] == 0:
                    pair = (pred, v) if pred < v else (v, pred)
                    if pair in edge_set:
                        forced = True
                        break
            for b in ((1,) if forced else (0, 1)):
                nb = list(bits)
                for i in lids:
                    nb[i] = b
                key = tuple(nb)
                ncost = cost + (g.weights[v] if b else 0.0)
                nchosen = chosen + (v,) if b else chosen
                old = nxt.get(key)
                if (
                    old is None
                    or ncost < old[0] - EPS
                    or (abs(ncost - old[0]) <= EPS and tuple(sorted(nchosen)) < tuple(sorted(old[1])))
                ):
                    nxt[key] = (ncost, nchosen)
        states = nxt
    best = min(
        states.values(), key=lambda item: (item[0], tuple(sorted(item[1])))
    )
    result = _cover(g.weights, best[1])
    result.validate(g)
    return result
