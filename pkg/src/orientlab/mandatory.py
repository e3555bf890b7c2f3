"""Mandatory vertices, feasibility of query sets, and mandatory probabilities.

A vertex is mandatory for a realization when every feasible query set
contains it.  The characterization used throughout: v is mandatory iff
some hyperedge F containing v has either (i) v as its minimum-weight
vertex with another member's weight inside I_v, or (ii) v not minimum
while the minimum's weight lies inside I_v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .model import Instance, Realization, elementary_grid, probability_matrix

__all__ = [
    "MandatoryProfile",
    "mandatory_set",
    "mandatory_set_cells",
    "is_feasible",
    "orientation_state",
    "exact_prob_graph",
    "estimate_prob",
    "estimate_profile",
    "hoeffding_sample_count",
]


@dataclass(frozen=True)
class MandatoryProfile:
    """Per-vertex probability of being mandatory."""

    probs: Mapping[str, float]
    method: str  # "exact-graph" | "sampled"
    epsilon: float = 0.0
    delta: float = 0.0
    sample_count: int = 0

    def validate(self, instance: Instance) -> None:
        if set(self.probs) != set(instance.vertex_ids):
            raise ValueError("profile keys do not match the vertex set")
        if self.method == "sampled":
            need = hoeffding_sample_count(self.epsilon, self.delta)
            if self.sample_count < need:
                raise ValueError(f"sample_count {self.sample_count} < required {need}")


def mandatory_set(instance: Instance, realization: Realization) -> frozenset[str]:
    """All vertices that every feasible query set must contain."""
    out: set[str] = set()
    weights = realization.weights
    by_id = instance.by_id
    if instance.kind == "graph":
        # For an edge {u, v}: whoever is minimum, v is mandatory iff w_u in I_v.
        for v in instance.vertices:
            iv = v.interval
            lo, hi = iv.lo, iv.hi
            for u in instance.graph_neighbors[v.id]:
                if lo < weights[u] < hi:
                    out.add(v.id)
                    break
        return frozenset(out)
    for members in instance.hyperedges:
        m = min(members, key=lambda u: (weights[u], u))
        w_min = weights[m]
        interval_m = by_id[m].interval
        for u in members:
            if u == m:
                continue
            iu = by_id[u].interval
            if iu.lo < w_min < iu.hi:
                out.add(u)
            if m not in out and interval_m.lo < weights[u] < interval_m.hi:
                out.add(m)
    return frozenset(out)


def mandatory_set_cells(
    instance: Instance, cells: Mapping[str, int], grid: Sequence[float] | None = None
) -> frozenset[str]:
    """Mandatory set when only the elementary cell of each weight is known.

    ``cells[v] = i`` places w_v inside (grid[i], grid[i+1]).  Because no
    elementary cell straddles an interval endpoint, the predicate "weight
    inside I_v" is decided by cell containment, and the result coincides
    with :func:`mandatory_set` on any realization with those cells.
    """
    if grid is None:
        grid = elementary_grid(instance)
    out: set[str] = set()

    def covered(vid: str, cell: int) -> bool:
        iv = instance.interval(vid)
        return iv.lo <= grid[cell] and grid[cell + 1] <= iv.hi

    for members in instance.hyperedges:
        min_cell = min(cells[u] for u in members)
        in_min = [u for u in members if cells[u] == min_cell]
        if len(in_min) >= 2:
            out.update(u for u in members if covered(u, min_cell))
            continue
        m = in_min[0]
        for u in members:
            if u != m and covered(u, min_cell):
                out.add(u)
        interval_m = instance.interval(m)
        if any(
            u != m
            and interval_m.lo <= grid[cells[u]]
            and grid[cells[u] + 1] <= interval_m.hi
            for u in members
        ):
            out.add(m)
    return frozenset(out)


def is_feasible(
    instance: Instance, realization: Realization, query_set: frozenset[str] | set[str]
) -> bool:
    """Does querying exactly ``query_set`` orient every hyperedge?

    Per hyperedge with true minimum m: either m is queried along with
    every member whose interval contains w_m, or m stays unqueried but
    every member overlapping I_m is queried with weight at or beyond the
    right end of I_m.
    """
    weights = realization.weights
    by_id = instance.by_id
    for members in instance.hyperedges:
        m = min(members, key=lambda u: (weights[u], u))
        w_min = weights[m]
        interval_m = by_id[m].interval
        if m in query_set:
            for u in members:
                if u != m and u not in query_set:
                    iu = by_id[u].interval
                    if iu.lo < w_min < iu.hi:
                        return False
        else:
            for u in members:
                if u == m:
                    continue
                if by_id[u].interval.intersects(interval_m):
                    if u not in query_set or weights[u] < interval_m.hi:
                        return False
    return True


def _edge_state(
    instance: Instance, members: Sequence[str], revealed: Mapping[str, float]
) -> tuple[str, str]:
    """State of one hyperedge: ("solved", winner) or ("open", next vertex).

    The open vertex is the leftmost unqueried member whose interval could
    still hold the minimum; within the query loop of a cover-based run it
    is mandatory for every realization consistent with ``revealed``.
    """
    by_id = instance.by_id
    known: list[tuple[float, str]] = []
    unqueried: list[str] = []
    for u in members:
        w = revealed.get(u)
        if w is None:
            unqueried.append(u)
        else:
            known.append((w, u))
    if not unqueried:
        return ("solved", min(known)[1])
    if known:
        w_star, k_star = min(known)
        candidates = [u for u in unqueried if by_id[u].interval.lo < w_star]
        if not candidates:
            return ("solved", k_star)
    else:
        w_star = math.inf
        candidates = unqueried
    for x in candidates:
        rx = by_id[x].interval.hi
        if rx <= w_star and all(
            rx <= by_id[u].interval.lo for u in unqueried if u != x
        ):
            return ("solved", x)
    return ("open", min(candidates, key=lambda u: by_id[u].key))


def orientation_state(
    instance: Instance, revealed: Mapping[str, float]
) -> dict[int, tuple[str, str]]:
    """Per-hyperedge status under partially revealed weights."""
    for vid, w in revealed.items():
        if vid in instance.by_id and not instance.interval(vid).contains(w):
            raise ValueError(f"revealed weight {w} of {vid} outside {instance.interval(vid)}")
    return {
        i: _edge_state(instance, members, revealed)
        for i, members in enumerate(instance.hyperedges)
    }


def exact_prob_graph(instance: Instance) -> MandatoryProfile:
    """Exact mandatory probabilities for graphs.

    For an edge {u, v} the events "w_u in I_v" are independent across
    neighbors u, so p_v = 1 - prod_u P[w_u not in I_v].  Computed in
    rational arithmetic so that e.g. a single-neighbor vertex gets back
    exactly the overlap mass.
    """
    if instance.kind != "graph":
        raise ValueError("exact probabilities only for graphs; estimate instead")
    probs: dict[str, float] = {}
    for v in instance.vertices:
        miss = Fraction(1)
        for u in instance.graph_neighbors[v.id]:
            miss *= Fraction(1) - instance.by_id[u].pmf.mass_in_exact(v.interval)
        probs[v.id] = float(Fraction(1) - miss)
    return MandatoryProfile(probs, method="exact-graph")


def hoeffding_sample_count(epsilon: float, delta: float) -> int:
    """Samples needed so P[|estimate - p| >= epsilon] <= delta."""
    if not (0.0 < epsilon < 1.0 and 0.0 < delta < 1.0):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    return math.ceil(math.log(2.0 / delta) / (2.0 * epsilon**2))


def _sample_cell_batch(
    instance: Instance, count: int, rng: np.random.Generator
) -> tuple[list[str], np.ndarray]:
    """Draw ``count`` joint elementary-cell assignments (one row each)."""
    matrix = probability_matrix(instance)
    ids = list(instance.vertex_ids)
    columns = np.empty((count, len(ids)), dtype=np.int64)
    for j, vid in enumerate(ids):
        row = matrix[vid]
        idx = np.array([i for i, _ in row], dtype=np.int64)
        cum = np.cumsum([p for _, p in row])
        cum[-1] = 1.0 + 1e-12  # guard against mass rounding below 1
        u = rng.random(count)
        columns[:, j] = idx[np.searchsorted(cum, u, side="right")]
    return ids, columns


def estimate_prob(
    instance: Instance,
    vid: str,
    epsilon: float,
    delta: float,
    rng: np.random.Generator,
) -> float:
    """Estimate the mandatory probability of one vertex by sampling.

    Draws ceil(ln(2/delta) / (2 epsilon^2)) joint cell assignments at
    elementary-interval granularity and returns the mandatory fraction;
    the Hoeffding bound gives P[|estimate - p| >= epsilon] <= delta.
    """
    k = hoeffding_sample_count(epsilon, delta)
    grid = elementary_grid(instance)
    ids, cells = _sample_cell_batch(instance, k, rng)
    hits = 0
    for r in range(k):
        assignment = dict(zip(ids, cells[r]))
        if vid in mandatory_set_cells(instance, assignment, grid):
            hits += 1
    return hits / k


def estimate_profile(
    instance: Instance,
    epsilon: float,
    delta: float,
    rng: np.random.Generator,
    shared_batch: bool = True,
) -> MandatoryProfile:
    """Sampled mandatory probabilities for all vertices.

    With ``shared_batch`` one batch of realizations feeds every vertex's
    estimate; the per-vertex Hoeffding guarantee is unchanged, only the
    errors become correlated across vertices.
    """
    k = hoeffding_sample_count(epsilon, delta)
    grid = elementary_grid(instance)
    counts = {vid: 0 for vid in instance.vertex_ids}
    if shared_batch:
        ids, cells = _sample_cell_batch(instance, k, rng)
        for r in range(k):
            assignment = dict(zip(ids, cells[r]))
            for vid in mandatory_set_cells(instance, assignment, grid):
                counts[vid] += 1
        probs = {vid: counts[vid] / k for vid in counts}
    else:
        probs = {
            vid: estimate_prob(instance, vid, epsilon, delta, rng)
            for vid in instance.vertex_ids
        }
    return MandatoryProfile(
        probs, method="sampled", epsilon=epsilon, delta=delta, sample_count=k
    )
