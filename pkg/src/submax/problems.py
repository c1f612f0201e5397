"""Concrete problem families: builders, synthetic generators, data loaders.

All four families fit the composite shape f(x) = offset + sum_j w_j h_j(g_j(x)):

* summarization (sm): ground elements carry normalized rewards; each group's
  collected reward passes through log1p.
* influence (im): per cascade, the inner function is the expected fraction of
  nodes reached by the selected seeds; reach sets enter as single
  complement-product monomials.
* facility location (fl): per customer, the best weight among selected
  facilities, written in telescoping form over the customer's preference
  order (again complement products).
* cache networks (cn): per service edge, the expected load of requests not
  yet absorbed by caches closer to the requester; the queueing kernel turns
  loads into expected queue sizes, and the objective is the reduction
  relative to empty caches.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .analytic import AnalyticKernel, eval_kernel
from .errors import DomainError, InputError
from .matroid import PartitionMatroid
from .objective import CompositeObjective, ObjectiveTerm
from .polynomial import MultilinearPoly

_SUM_TOL = 1e-9


# ----------------------------------------------------------------------
# summarization


@dataclass(frozen=True)
class SummarizationSpec:
    """Element rewards (non-negative, summing to one), reward groups, and
    the selection constraint."""

    rewards: Tuple[float, ...]
    groups: Tuple[Tuple[int, ...], ...]
    matroid: PartitionMatroid


def build_sm(
    spec: SummarizationSpec, kernel: Optional[AnalyticKernel] = None
) -> Tuple[CompositeObjective, PartitionMatroid]:
    """One log1p term per group over its collected reward mass."""
    if kernel is None:
        kernel = AnalyticKernel("log1p")
    n = len(spec.rewards)
    r = np.asarray(spec.rewards, dtype=np.float64)
    if n == 0 or r.min() < 0.0:
        raise InputError("rewards must be non-negative and non-empty")
    if abs(r.sum() - 1.0) > _SUM_TOL:
        raise InputError(f"rewards must sum to 1, got {r.sum()}")
    if spec.matroid.ground_size != n:
        raise InputError("matroid ground size must match the reward count")
    terms = []
    for group in spec.groups:
        idx = sorted(set(int(i) for i in group))
        if idx and (idx[0] < 0 or idx[-1] >= n):
            raise InputError(f"group index out of range: {idx}")
        inner = MultilinearPoly(n, {((i,), ()): r[i] for i in idx})
        terms.append(ObjectiveTerm(1.0, kernel, inner))
    return CompositeObjective(n, terms), spec.matroid


# ----------------------------------------------------------------------
# influence


@dataclass(frozen=True)
class CascadeSet:
    """Per cascade, per node: the set of nodes whose selection reaches it."""

    n_nodes: int
    reach: Tuple[Tuple[Tuple[int, ...], ...], ...]


def simulate_ic(
    n_nodes: int,
    edges: Sequence[Tuple[int, int]],
    p: float,
    cascades: int,
    seed: int = 0,
) -> CascadeSet:
    """Independent-cascade reach sets by live-edge sampling.

    Each directed edge survives with probability p, independently per
    cascade; a node's reach set holds every node that can walk to it along
    surviving edges (itself included).  Each cascade draws from its own
    derived child seed, so cascades are independent of evaluation order.
    """
    if not 0.0 <= p <= 1.0:
        raise InputError(f"edge probability must be in [0, 1], got {p}")
    if cascades < 1:
        raise InputError(f"cascade count must be >= 1, got {cascades}")
    for u, v in edges:
        if not (0 <= u < n_nodes and 0 <= v < n_nodes):
            raise InputError(f"edge ({u}, {v}) out of range for {n_nodes} nodes")
    children = np.random.SeedSequence(seed).spawn(cascades)
    all_reach = []
    for child in children:
        rng = np.random.default_rng(child)
        live = np.asarray(rng.random(len(edges)) < p)
        rev: List[List[int]] = [[] for _ in range(n_nodes)]
        for keep, (u, v) in zip(live, edges):
            if keep:
                rev[v].append(u)
        cascade = []
        for v in range(n_nodes):
            seen = {v}
            stack = [v]
            while stack:
                w = stack.pop()
                for u in rev[w]:
                    if u not in seen:
                        seen.add(u)
                        stack.append(u)
            cascade.append(tuple(sorted(seen)))
        all_reach.append(tuple(cascade))
    return CascadeSet(n_nodes, tuple(all_reach))


def build_im(
    cascades: CascadeSet, kernel: Optional[AnalyticKernel] = None
) -> CompositeObjective:
    """Average over cascades of log1p(expected fraction of reached nodes)."""
    if kernel is None:
        kernel = AnalyticKernel("log1p")
    n = cascades.n_nodes
    m = len(cascades.reach)
    if m == 0:
        raise InputError("cascade set is empty")
    terms = []
    for reach in cascades.reach:
        if len(reach) != n:
            raise InputError("each cascade needs a reach set per node")
        poly_terms: Dict = {((), ()): 1.0}
        for v, sources in enumerate(reach):
            if v not in sources:
                raise InputError(f"node {v} missing from its own reach set")
            key = ((), tuple(sorted(sources)))
            poly_terms[key] = poly_terms.get(key, 0.0) - 1.0 / n
        terms.append(ObjectiveTerm(1.0 / m, kernel, MultilinearPoly(n, poly_terms)))
    return CompositeObjective(n, terms)


# ----------------------------------------------------------------------
# facility location


@dataclass(frozen=True)
class FacilitySpec:
    """weights[i][j] in [0, 1]: value of facility i for customer j."""

    weights: Tuple[Tuple[float, ...], ...]

    def orders(self) -> Tuple[Tuple[int, ...], ...]:
        """Per customer: all facilities by descending weight, ties toward
        the lower index (an implicit zero weight follows the last entry)."""
        w = np.asarray(self.weights, dtype=np.float64)
        return tuple(
            tuple(sorted(range(w.shape[0]), key=lambda i: (-w[i, j], i)))
            for j in range(w.shape[1])
        )


def build_fl(
    spec: FacilitySpec, kernel: Optional[AnalyticKernel] = None
) -> CompositeObjective:
    """Per customer: log1p of the best selected facility weight.

    The maximum is encoded in telescoping form over the customer's facilities
    sorted by decreasing weight (ties toward the lower index): each weight
    drop is earned unless none of the better facilities is selected.
    """
    if kernel is None:
        kernel = AnalyticKernel("log1p")
    try:
        w = np.asarray(spec.weights, dtype=np.float64)
    except ValueError as exc:
        raise InputError(
            "facility weights must be rectangular (same customers per row)"
        ) from exc
    if w.ndim != 2 or w.size == 0:
        raise InputError("facility weights must be a non-empty 2-D table")
    if w.min() < 0.0 or w.max() > 1.0:
        raise InputError("facility weights must lie in [0, 1]")
    n, m = w.shape
    orders = spec.orders()
    terms = []
    for j in range(m):
        order = [i for i in orders[j] if w[i, j] > 0.0]
        poly_terms: Dict = {}
        if order:
            poly_terms[((), ())] = float(w[order[0], j])
            prefix: List[int] = []
            for rank, i in enumerate(order):
                nxt = w[order[rank + 1], j] if rank + 1 < len(order) else 0.0
                drop = float(w[i, j] - nxt)
                prefix.append(i)
                if drop > 0.0:
                    key = ((), tuple(sorted(prefix)))
                    poly_terms[key] = poly_terms.get(key, 0.0) - drop
        terms.append(
            ObjectiveTerm(1.0 / m, kernel, MultilinearPoly(n, poly_terms))
        )
    return CompositeObjective(n, terms)


# ----------------------------------------------------------------------
# cache networks


@dataclass(frozen=True)
class CacheNetworkSpec:
    """Nodes cache items from a catalog; requests walk fixed paths.

    edges: (from_node, to_node, service_rate) for each directed service edge.
    requests: (item, path, arrival_rate); the path starts at the requesting
    node and each hop (path[k], path[k+1]) must be an edge.  A request loads
    a hop only when no node in path[0..k] caches its item.
    capacities: per-node cache budgets (0 allowed for cache-less routers).
    """

    nodes: int
    catalog: int
    edges: Tuple[Tuple[int, int, float], ...]
    requests: Tuple[Tuple[int, Tuple[int, ...], float], ...]
    capacities: Tuple[int, ...]


def cn_index(spec: CacheNetworkSpec, node: int, item: int) -> int:
    """Ground-set coordinate of (node, item)."""
    if not (0 <= node < spec.nodes and 0 <= item < spec.catalog):
        raise InputError(f"bad placement ({node}, {item})")
    return node * spec.catalog + item


def build_cn(
    spec: CacheNetworkSpec,
) -> Tuple[CompositeObjective, PartitionMatroid]:
    """Caching-gain objective and the per-node capacity matroid.

    f(x) = sum_edges [ h(load at empty caches) - h(load under x) ] with the
    queueing kernel h(s) = s / (1 - s); f(0) = 0 and caching only helps.
    The kernel's domain cap s_bar is the peak empty-cache load (available
    afterwards as ``obj.terms[0].kernel.s_bar``).  Raises if the empty-cache
    system is already unstable (a load >= 1).
    """
    if spec.nodes < 1 or spec.catalog < 1:
        raise InputError("need at least one node and one item")
    if len(spec.capacities) != spec.nodes:
        raise InputError("one cache capacity per node is required")
    rates = {}
    for u, v, mu in spec.edges:
        if not (0 <= u < spec.nodes and 0 <= v < spec.nodes):
            raise InputError(f"edge ({u}, {v}) out of range")
        if mu <= 0.0:
            raise InputError(f"service rate must be positive on edge ({u}, {v})")
        if (u, v) in rates:
            raise InputError(f"duplicate edge ({u}, {v})")
        rates[(u, v)] = float(mu)
    n = spec.nodes * spec.catalog
    load_terms: Dict[Tuple[int, int], Dict] = {}
    for item, path, lam in spec.requests:
        if not (0 <= item < spec.catalog):
            raise InputError(f"unknown item {item}")
        if lam < 0.0:
            raise InputError("arrival rates must be non-negative")
        if len(path) < 1:
            raise InputError("request path must contain its source node")
        prefix: List[int] = []
        for k in range(len(path) - 1):
            hop = (path[k], path[k + 1])
            if hop not in rates:
                raise InputError(f"request path uses missing edge {hop}")
            prefix.append(cn_index(spec, path[k], item))
            key = ((), tuple(sorted(prefix)))
            bucket = load_terms.setdefault(hop, {})
            bucket[key] = bucket.get(key, 0.0) + lam / rates[hop]
    if not load_terms:
        return CompositeObjective(n, [], 0.0), _cn_matroid(spec)
    inners = {hop: MultilinearPoly(n, terms) for hop, terms in load_terms.items()}
    zeros = np.zeros(n)
    empty_loads = {hop: poly.evaluate(zeros) for hop, poly in inners.items()}
    s_bar = max(empty_loads.values())
    if s_bar >= 1.0 - _SUM_TOL:
        raise DomainError(
            f"empty-cache load {s_bar} is at or beyond 1: system unstable"
        )
    kernel = AnalyticKernel("queue", s_bar)
    offset = sum(eval_kernel(kernel, s) for s in empty_loads.values())
    terms = [
        ObjectiveTerm(-1.0, kernel, inners[hop]) for hop in sorted(inners)
    ]
    return CompositeObjective(n, terms, offset), _cn_matroid(spec)


def _cn_matroid(spec: CacheNetworkSpec) -> PartitionMatroid:
    blocks = [
        tuple(range(v * spec.catalog, (v + 1) * spec.catalog))
        for v in range(spec.nodes)
    ]
    return PartitionMatroid(blocks, list(spec.capacities))


# ----------------------------------------------------------------------
# synthetic generators


def _contiguous_partition(n: int, parts: int) -> List[Tuple[int, ...]]:
    if parts < 1 or parts > n:
        raise InputError(f"cannot split {n} elements into {parts} parts")
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [tuple(range(bounds[i], bounds[i + 1])) for i in range(parts)]


def gen_sm_synth(
    seed: int,
    n: int = 200,
    groups: int = 5,
    blocks: int = 2,
    budget: int = 10,
) -> Tuple[CompositeObjective, PartitionMatroid]:
    """Random rewards (normalized), contiguous groups and matroid blocks."""
    rng = np.random.default_rng(seed)
    rewards = rng.random(n)
    rewards = rewards / rewards.sum()
    mat = PartitionMatroid(_contiguous_partition(n, blocks), [budget] * blocks)
    spec = SummarizationSpec(
        tuple(float(r) for r in rewards),
        tuple(_contiguous_partition(n, groups)),
        mat,
    )
    return build_sm(spec)


def _bipartite_edges_uniform(rng, side: int, count: int) -> List[Tuple[int, int]]:
    if count > side * side:
        raise InputError("more edges requested than bipartite pairs exist")
    flat = rng.choice(side * side, size=count, replace=False)
    return [(int(e // side), side + int(e % side)) for e in flat]


def _bipartite_edges_powerlaw(
    rng, side: int, count: int, exponent: float
) -> List[Tuple[int, int]]:
    """Preferential attachment on left out-degrees.

    Each new edge picks its left endpoint with probability proportional to
    (out-degree + kappa), kappa = 1 / (exponent - 2), which skews out-degrees
    toward a heavy tail with roughly the requested exponent; the right
    endpoint is uniform.  Duplicate pairs are resampled.
    """
    if exponent <= 2.0:
        raise InputError(f"power-law exponent must exceed 2, got {exponent}")
    kappa = 1.0 / (exponent - 2.0)
    degrees = np.zeros(side)
    chosen: set = set()
    out: List[Tuple[int, int]] = []
    if count > side * side:
        raise InputError("more edges requested than bipartite pairs exist")
    while len(out) < count:
        weights = degrees + kappa
        u = int(rng.choice(side, p=weights / weights.sum()))
        v = int(rng.integers(side))
        if (u, v) in chosen:
            continue
        chosen.add((u, v))
        degrees[u] += 1
        out.append((u, side + v))
    return out


def gen_im_synth(
    seed: int,
    kind: str = "uniform",
    side: int = 100,
    edges: int = 400,
    partitions: int = 10,
    budget: int = 3,
    exponent: float = 2.5,
) -> Tuple[CompositeObjective, PartitionMatroid]:
    """Bipartite influence instance: seeds on the left reach their neighbors.

    A single deterministic cascade whose reach sets are closed neighborhoods
    of the bipartite graph.  The matroid partitions the left side into equal
    blocks of budgeted seeds; the right side is locked (budget zero).
    """
    rng = np.random.default_rng(seed)
    if kind == "uniform":
        pairs = _bipartite_edges_uniform(rng, side, edges)
    elif kind == "powerlaw":
        pairs = _bipartite_edges_powerlaw(rng, side, edges, exponent)
    else:
        raise InputError(f"unknown bipartite kind {kind!r}")
    n = 2 * side
    nbrs: List[set] = [set() for _ in range(n)]
    for u, v in pairs:
        nbrs[u].add(v)
        nbrs[v].add(u)
    reach = tuple(tuple(sorted(nbrs[v] | {v})) for v in range(n))
    cascades = CascadeSet(n, (reach,))
    obj = build_im(cascades)
    left_blocks = _contiguous_partition(side, partitions)
    blocks = left_blocks + [tuple(range(side, n))]
    capacities = [budget] * partitions + [0]
    return obj, PartitionMatroid(blocks, capacities)


def gen_fl_synth(
    seed: int,
    facilities: int = 200,
    customers: int = 200,
    edges: int = 800,
    partitions: int = 10,
    budget: int = 5,
) -> Tuple[CompositeObjective, PartitionMatroid]:
    """Sparse random facility weights on a bipartite edge sample.

    Sampled edges get a weight drawn uniformly from {0, 0.2, ..., 1.0};
    absent pairs weigh nothing.
    """
    rng = np.random.default_rng(seed)
    if edges > facilities * customers:
        raise InputError("more edges requested than pairs exist")
    flat = rng.choice(facilities * customers, size=edges, replace=False)
    levels = np.arange(6) / 5.0
    w = np.zeros((facilities, customers))
    for e in flat:
        i, j = int(e // customers), int(e % customers)
        w[i, j] = levels[int(rng.integers(6))]
    spec = FacilitySpec(tuple(tuple(float(x) for x in row) for row in w))
    mat = PartitionMatroid(
        _contiguous_partition(facilities, partitions), [budget] * partitions
    )
    return build_fl(spec), mat


# ----------------------------------------------------------------------
# dataset loaders (small-scale preprocessing; tested on toy fixtures)


def load_snap_edges(path: str) -> List[Tuple[int, int]]:
    """Whitespace-separated directed edge list; '#' lines are comments."""
    out: List[Tuple[int, int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 2:
                raise InputError(f"{path}:{lineno}: expected two node ids")
            try:
                out.append((int(parts[0]), int(parts[1])))
            except ValueError as exc:
                raise InputError(
                    f"{path}:{lineno}: expected two node ids"
                ) from exc
    return out


def top_outdegree_subgraph(
    edges: Sequence[Tuple[int, int]], n: int
) -> Tuple[int, List[Tuple[int, int]]]:
    """Induced subgraph on the n highest out-degree nodes, relabeled 0..n-1.

    Ties prefer smaller original ids; kept nodes are relabeled in ascending
    original-id order.
    """
    outdeg: Dict[int, int] = {}
    nodes = set()
    for u, v in edges:
        outdeg[u] = outdeg.get(u, 0) + 1
        nodes.add(u)
        nodes.add(v)
    ranked = sorted(nodes, key=lambda v: (-outdeg.get(v, 0), v))
    kept = sorted(ranked[:n])
    relabel = {v: i for i, v in enumerate(kept)}
    sub = [
        (relabel[u], relabel[v]) for u, v in edges if u in relabel and v in relabel
    ]
    return len(kept), sub


def load_movielens_ratings(path: str) -> List[Tuple[int, int, float]]:
    """'user::movie::rating[::timestamp]' lines -> (user, movie, rating)."""
    out: List[Tuple[int, int, float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("::")
            if len(parts) < 3:
                raise InputError(f"{path}:{lineno}: expected user::movie::rating")
            try:
                out.append((int(parts[0]), int(parts[1]), float(parts[2])))
            except ValueError as exc:
                raise InputError(
                    f"{path}:{lineno}: expected user::movie::rating"
                ) from exc
    return out


def load_movielens_movies(path: str) -> Dict[int, str]:
    """'movie::title::Genre1|Genre2' lines -> movie id to first listed genre."""
    out: Dict[int, str] = {}
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("::")
            if len(parts) < 3:
                raise InputError(f"{path}:{lineno}: expected movie::title::genres")
            out[int(parts[0])] = parts[2].split("|")[0].strip()
    return out


def movielens_facility_spec(
    ratings: Sequence[Tuple[int, int, float]],
    facilities: int = 100,
    customers: int = 100,
    seed: int = 0,
) -> Tuple[FacilitySpec, List[int], List[int]]:
    """Facility instance from ratings: movies serve the most active users.

    Customers are the ``customers`` users with the most ratings (ties toward
    smaller ids).  Facilities are ``facilities`` movies sampled uniformly
    from those rated by the single most active user.  Weights are rating/5.
    Returns the spec plus the kept movie and user ids, in ground-set order.
    """
    counts: Dict[int, int] = {}
    for user, _, _ in ratings:
        counts[user] = counts.get(user, 0) + 1
    if not counts:
        raise InputError("no ratings")
    users = sorted(counts, key=lambda u: (-counts[u], u))[:customers]
    top_user = users[0]
    candidates = sorted({m for u, m, _ in ratings if u == top_user})
    if not candidates:
        raise InputError("most active user rated nothing")
    rng = np.random.default_rng(seed)
    take = min(facilities, len(candidates))
    movie_ids = sorted(
        int(candidates[i]) for i in rng.choice(len(candidates), take, replace=False)
    )
    user_pos = {u: j for j, u in enumerate(sorted(users))}
    movie_pos = {m: i for i, m in enumerate(movie_ids)}
    w = np.zeros((len(movie_ids), len(user_pos)))
    for user, movie, rating in ratings:
        if user in user_pos and movie in movie_pos:
            w[movie_pos[movie], user_pos[user]] = rating / 5.0
    spec = FacilitySpec(tuple(tuple(float(x) for x in row) for row in w))
    return spec, movie_ids, sorted(users)


def partition_by_genre(
    movie_ids: Sequence[int],
    genres: Dict[int, str],
    blocks: int = 10,
    budget: int = 2,
) -> PartitionMatroid:
    """Partition matroid over movies grouped by first genre.

    If more distinct genres than blocks exist, the smallest groups are merged
    into the final block; with fewer, each genre keeps its own block.
    """
    groups: Dict[str, List[int]] = {}
    for pos, movie in enumerate(movie_ids):
        groups.setdefault(genres.get(movie, "unknown"), []).append(pos)
    ordered = sorted(groups.values(), key=lambda g: (-len(g), g[0]))
    if len(ordered) > blocks:
        merged = sorted(i for g in ordered[blocks - 1 :] for i in g)
        ordered = ordered[: blocks - 1] + [merged]
    return PartitionMatroid(ordered, [budget] * len(ordered))


__all__ = [
    "SummarizationSpec",
    "build_sm",
    "CascadeSet",
    "simulate_ic",
    "build_im",
    "FacilitySpec",
    "build_fl",
    "CacheNetworkSpec",
    "cn_index",
    "build_cn",
    "gen_sm_synth",
    "gen_im_synth",
    "gen_fl_synth",
    "load_snap_edges",
    "top_outdegree_subgraph",
    "load_movielens_ratings",
    "load_movielens_movies",
    "movielens_facility_spec",
    "partition_by_genre",
]
