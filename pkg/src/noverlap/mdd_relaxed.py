"""Width-bounded relaxed sequence diagram for the No-Overlap constraint.

Layers are capped at W nodes by merging states, so root-to-sink paths
encode a superset of the feasible permutations; filtering stays sound but
may be weaker than exact bound consistency. Nodes carry both downward
properties (jobs on every / at least one prefix path, earliest next
start) and upward duals (suffix sets, latest allowed completion of the
job preceding the suffix). Merged nodes can be split back apart by edge
extraction, recovering filtering strength inside a budget.

Job sets are bitmasks over file order (documented limit n <= 64 shared
with the exact diagram).
"""

from __future__ import annotations

from .engine import ChangeResult, DomainStore, Infeasible, Propagator
from .model import Instance

__all__ = [
    "RNode",
    "REdge",
    "RelaxedMdd",
    "lambda_relaxed",
    "tau_relaxed",
    "merge",
    "bucket_layer",
    "compile_relaxed",
    "update_down",
    "update_up",
    "stabilize",
    "edge_check",
    "refine",
    "relaxed_bc_filter",
    "extract_precedences",
    "iter_label_paths",
    "to_dot",
    "mdd_propagator",
    "RelaxedBcPropagator",
    "PrecedencePropagator",
]


class RNode:
    __slots__ = (
        "layer",
        "pre_all",
        "pre_any",
        "ready",
        "suf_all",
        "suf_any",
        "latest",
        "inn",
        "out",
        "alive",
    )

    def __init__(self, layer: int, pre_all: int, pre_any: int, ready: int) -> None:
        self.layer = layer
        self.pre_all = pre_all
        self.pre_any = pre_any
        self.ready = ready
        self.suf_all = 0
        self.suf_any = 0
        self.latest = 0
        self.inn: list[REdge] = []
        self.out: list[REdge] = []
        self.alive = True


class REdge:
    __slots__ = ("src", "dst", "label", "alive")

    def __init__(self, src: RNode, dst: RNode, label: int) -> None:
        self.src = src
        self.dst = dst
        self.label = label
        self.alive = True


class RelaxedMdd:
    """Graph plus the bound snapshot it was compiled against."""

    __slots__ = ("n", "width", "horizon", "lo", "hi", "p", "layers", "root", "sink")

    def __init__(
        self,
        n: int,
        width: int,
        horizon: int,
        lo: list[int],
        hi: list[int],
        p: list[int],
        layers: list[list[RNode]],
    ) -> None:
        self.n = n
        self.width = width
        self.horizon = horizon
        self.lo = lo
        self.hi = hi
        self.p = p
        self.layers = layers
        self.root = layers[0][0]
        self.sink = layers[-1][0]

    def alive_nodes(self):
        for layer in self.layers:
            for node in layer:
                if node.alive:
                    yield node

    def alive_edges(self):
        for node in self.alive_nodes():
            for e in node.out:
                if e.alive and e.dst.alive:
                    yield e

    def edge_count(self) -> int:
        return sum(1 for _ in self.alive_edges())

    def max_width(self) -> int:
        return max(
            sum(1 for nd in layer if nd.alive) for layer in self.layers
        )

    def is_exact(self) -> bool:
        return all(nd.pre_all == nd.pre_any for nd in self.alive_nodes())


State = tuple[int, int, int, int]
"""Downward node state: (every-path set, some-path set, earliest next
start, jobs placed so far). Sets are bitmasks."""


def lambda_relaxed(
    state: State, lo: list[int], hi: list[int], p: list[int]
) -> list[int]:
    """Admissible next jobs for a downward state: not on every prefix path,
    able to finish by their own deadline from the node's ready time, minus
    the whole some-path set when its size equals the layer depth (then every
    path placed exactly those jobs, so they are all certainly placed)."""
    pre_all, pre_any, ready, depth = state
    skip = pre_all | (pre_any if pre_any.bit_count() == depth else 0)
    out = []
    for j in range(len(lo)):
        if skip >> j & 1:
            continue
        s = ready if ready > lo[j] else lo[j]
        if s + p[j] <= hi[j]:
            out.append(j)
    return out


def tau_relaxed(state: State, label: int, lo: list[int], p: list[int]) -> State:
    """Downward transition: add the job to both sets and push the ready
    time past its processing."""
    pre_all, pre_any, ready, depth = state
    s = ready if ready > lo[label] else lo[label]
    return (pre_all | 1 << label, pre_any | 1 << label, s + p[label], depth + 1)


def merge(a: State, b: State) -> State:
    """Relax two same-layer states into one covering both: intersect the
    every-path sets, union the some-path sets, keep the earlier ready time.
    Commutative, associative, idempotent."""
    if a[3] != b[3]:
        raise ValueError("cannot merge states from different layers")
    return (a[0] & b[0], a[1] | b[1], a[2] if a[2] < b[2] else b[2], a[3])


def _pick_bucket(est: int, lo: int, span: int, width: int) -> int:
    # half-open equal-width intervals, last one closed
    k = (est - lo) * width // span
    return width - 1 if k >= width else k


def _bucket_groups(ests: list[int], width: int) -> list[list[int]]:
    """Group state indices by ready time so merging caps a layer at
    ``width`` nodes.

    Layers that already fit stay untouched. When they do not, states are
    partitioned by ready-time value: one group per distinct value if there
    are at most ``width`` of them (merge no more than necessary), otherwise
    ``width`` equal-width sub-intervals of the value range.
    """
    if len(ests) <= width:
        return [[i] for i in range(len(ests))]
    values = sorted(set(ests))
    groups: dict[int, list[int]] = {}
    if len(values) <= width:
        for i, est in enumerate(ests):
            groups.setdefault(est, []).append(i)
        return [groups[v] for v in values]
    lo, hi = values[0], values[-1]
    span = hi - lo
    for i, est in enumerate(ests):
        groups.setdefault(_pick_bucket(est, lo, span, width), []).append(i)
    return [groups[k] for k in sorted(groups)]


def bucket_layer(states: list[State], width: int) -> list[State]:
    """Merge a deduplicated layer down to at most ``width`` states."""
    groups = _bucket_groups([st[2] for st in states], width)
    out = []
    for group in groups:
        st = states[group[0]]
        for i in group[1:]:
            st = merge(st, states[i])
        out.append(st)
    return out


def compile_relaxed(
    instance: Instance,
    width: int,
    bounds: list[tuple[int, int]] | None = None,
) -> RelaxedMdd:
    """Top-down expansion with per-layer dedup and bucket merging, then
    dead-end cleanup and update passes until the diagram is stable."""
    if width < 1:
        raise ValueError("width must be >= 1")
    if bounds is None:
        bounds = instance.start_windows()
    n = instance.n
    full = (1 << n) - 1
    horizon = instance.horizon
    lo = [b[0] for b in bounds]
    hi = [b[1] for b in bounds]
    p = [j.processing for j in instance.jobs]

    root = RNode(0, 0, 0, 0)
    layers: list[list[RNode]] = [[root]]
    frontier = [root]
    for k in range(n):
        # expansion: downward state -> list of (src node, label)
        specs: dict[State, list[tuple[RNode, int]]] = {}
        order: list[State] = []
        for u in frontier:
            u_state = (u.pre_all, u.pre_any, u.ready, k)
            for j in lambda_relaxed(u_state, lo, hi, p):
                if k == n - 1:
                    key: State = (full, full, horizon, n)
                else:
                    key = tau_relaxed(u_state, j, lo, p)
                bucket = specs.get(key)
                if bucket is None:
                    specs[key] = [(u, j)]
                    order.append(key)
                else:
                    bucket.append((u, j))
        if not order:
            raise Infeasible
        groups = _bucket_groups([st[2] for st in order], width)
        new_frontier: list[RNode] = []
        for group in groups:
            st = order[group[0]]
            for i in group[1:]:
                st = merge(st, order[i])
            node = RNode(k + 1, st[0], st[1], st[2])
            new_frontier.append(node)
            for i in group:
                for u, j in specs[order[i]]:
                    e = REdge(u, node, j)
                    u.out.append(e)
                    node.inn.append(e)
        layers.append(new_frontier)
        frontier = new_frontier
    mdd = RelaxedMdd(n, width, horizon, lo, hi, p, layers)
    mdd.sink.suf_all = 0
    mdd.sink.suf_any = 0
    mdd.sink.latest = horizon
    stabilize(mdd)
    return mdd


def edge_check(e: REdge, mdd: RelaxedMdd) -> bool:
    """True to keep the edge: its label must not already lie on every
    prefix path of the source or every suffix path of the target, and the
    job must fit between the source's earliest time and the tighter of its
    own deadline and the target's latest allowed completion."""
    j = e.label
    if e.src.pre_all >> j & 1:
        return False
    if e.dst.suf_all >> j & 1:
        return False
    s = e.src.ready if e.src.ready > mdd.lo[j] else mdd.lo[j]
    lim = mdd.hi[j] if mdd.hi[j] < e.dst.latest else e.dst.latest
    return s + mdd.p[j] <= lim


def _kill_node(node: RNode) -> None:
    node.alive = False
    for e in node.inn:
        e.alive = False
    for e in node.out:
        e.alive = False
    node.inn = []
    node.out = []


def update_down(mdd: RelaxedMdd) -> bool:
    """Recompute downward fields layer by layer as merge-folds over the
    incoming edges, dropping edges that fail the feasibility check and
    nodes left unreachable. Returns whether anything changed."""
    lo, hi, p = mdd.lo, mdd.hi, mdd.p
    changed = False
    for k in range(1, len(mdd.layers)):
        layer_alive = False
        for node in mdd.layers[k]:
            if not node.alive:
                continue
            kept: list[REdge] = []
            fa = fs = fest = None
            n_latest = node.latest
            n_suf_all = node.suf_all
            for e in node.inn:
                src = e.src
                if not e.alive or not src.alive:
                    e.alive = False
                    continue
                # inline edge_check: node is the target of every in-edge
                j = e.label
                bit = 1 << j
                s = src.ready if src.ready > lo[j] else lo[j]
                lim = hi[j] if hi[j] < n_latest else n_latest
                if src.pre_all & bit or n_suf_all & bit or s + p[j] > lim:
                    e.alive = False
                    changed = True
                    continue
                kept.append(e)
                a2, s2, est2 = src.pre_all | bit, src.pre_any | bit, s + p[j]
                if fa is None:
                    fa, fs, fest = a2, s2, est2
                else:
                    fa &= a2
                    fs |= s2
                    if est2 < fest:
                        fest = est2
            node.inn = kept
            if not kept:
                _kill_node(node)
                changed = True
                continue
            layer_alive = True
            if node is not mdd.sink and (
                fa != node.pre_all or fs != node.pre_any or fest != node.ready
            ):
                node.pre_all, node.pre_any, node.ready = fa, fs, fest
                changed = True
        if not layer_alive:
            raise Infeasible
    return changed


def update_up(mdd: RelaxedMdd) -> bool:
    """Mirror of update_down: recompute upward fields bottom-up as folds
    over outgoing edges (intersect/union sets, max of latest times),
    dropping failing edges and dead-end nodes."""
    lo, hi, p = mdd.lo, mdd.hi, mdd.p
    changed = False
    for k in range(len(mdd.layers) - 2, -1, -1):
        layer_alive = False
        for node in mdd.layers[k]:
            if not node.alive:
                continue
            kept: list[REdge] = []
            fa = fs = flst = None
            n_ready = node.ready
            n_pre_all = node.pre_all
            for e in node.out:
                dst = e.dst
                if not e.alive or not dst.alive:
                    e.alive = False
                    continue
                # inline edge_check: node is the source of every out-edge
                j = e.label
                bit = 1 << j
                s = n_ready if n_ready > lo[j] else lo[j]
                lim = hi[j] if hi[j] < dst.latest else dst.latest
                if n_pre_all & bit or dst.suf_all & bit or s + p[j] > lim:
                    e.alive = False
                    changed = True
                    continue
                kept.append(e)
                a2, s2, lst2 = dst.suf_all | bit, dst.suf_any | bit, lim - p[j]
                if fa is None:
                    fa, fs, flst = a2, s2, lst2
                else:
                    fa &= a2
                    fs |= s2
                    if lst2 > flst:
                        flst = lst2
            node.out = kept
            if not kept:
                _kill_node(node)
                changed = True
                continue
            layer_alive = True
            if fa != node.suf_all or fs != node.suf_any or flst != node.latest:
                node.suf_all, node.suf_any, node.latest = fa, fs, flst
                changed = True
        if not layer_alive:
            raise Infeasible
    return changed


def stabilize(mdd: RelaxedMdd) -> bool:
    """Alternate the two update passes until neither changes anything."""
    changed = False
    while True:
        step = update_up(mdd)
        step |= update_down(mdd)
        if not step:
            return changed
        changed = True


def _split_candidate(mdd: RelaxedMdd) -> RNode | None:
    """Relaxed node to split next: on the shallowest layer with spare
    width, the node mixing the most jobs that are on some but not all of
    its prefix paths (needs at least two incoming edges to be splittable)."""
    for k in range(1, len(mdd.layers) - 1):
        layer = [nd for nd in mdd.layers[k] if nd.alive]
        if len(layer) >= mdd.width:
            continue
        best = None
        best_score = 0
        for nd in layer:
            if nd.pre_all == nd.pre_any or len(nd.inn) < 2:
                continue
            score = (nd.pre_any & ~nd.pre_all).bit_count()
            if score > best_score:
                best, best_score = nd, score
        if best is not None:
            return best
    return None


def refine(mdd: RelaxedMdd, budget: int) -> bool:
    """Split merged nodes until the budget, width saturation, or exactness.

    One split extracts the incoming edge whose own transition time strays
    farthest from the node's merged earliest start into a fresh node, then
    replays the node's outgoing edges onto it (dropping the ones the fresh
    state rules out) and re-stabilizes the diagram.
    """
    changed = False
    lo, hi, p = mdd.lo, mdd.hi, mdd.p
    for _ in range(budget):
        u = _split_candidate(mdd)
        if u is None:
            break
        pick = None
        pick_gap = -1
        for e in u.inn:
            j = e.label
            s = e.src.ready if e.src.ready > lo[j] else lo[j]
            gap = abs(s + p[j] - u.ready)
            if gap > pick_gap:
                pick, pick_gap = e, gap
        e = pick
        j = e.label
        s = e.src.ready if e.src.ready > lo[j] else lo[j]
        fresh = RNode(
            u.layer,
            e.src.pre_all | 1 << j,
            e.src.pre_any | 1 << j,
            s + p[j],
        )
        # upward fields start as the split node's (a valid relaxation of
        # the fresh node's suffixes); the update passes tighten them
        fresh.suf_all = u.suf_all
        fresh.suf_any = u.suf_any
        fresh.latest = u.latest
        mdd.layers[u.layer].append(fresh)
        u.inn.remove(e)
        e.dst = fresh
        fresh.inn.append(e)
        for f in u.out:
            if not f.alive or not f.dst.alive:
                continue
            g = REdge(fresh, f.dst, f.label)
            if edge_check(g, mdd):
                fresh.out.append(g)
                f.dst.inn.append(g)
        stabilize(mdd)
        changed = True
    return changed


def relaxed_bc_filter(
    mdd: RelaxedMdd,
) -> tuple[list[tuple[int, int]], int]:
    """One pass over the edges: per job, earliest start from the smallest
    source ready time among its edges, latest end from the largest target
    latest time, clamped by the compile-time bounds. Returns the new
    (earliest start, latest end) pairs and the edge visit count."""
    n = mdd.n
    start_best: list[int | None] = [None] * n
    end_best: list[int | None] = [None] * n
    visits = 0
    for e in mdd.alive_edges():
        visits += 1
        j = e.label
        r = e.src.ready
        if start_best[j] is None or r < start_best[j]:
            start_best[j] = r
        t = e.dst.latest
        if end_best[j] is None or t > end_best[j]:
            end_best[j] = t
    out: list[tuple[int, int]] = []
    for j in range(n):
        if start_best[j] is None:
            raise Infeasible
        s_lo = max(mdd.lo[j], start_best[j])
        e_hi = min(mdd.hi[j], end_best[j])
        if s_lo + mdd.p[j] > e_hi:
            raise Infeasible
        out.append((s_lo, e_hi))
    return out, visits


def extract_precedences(mdd: RelaxedMdd) -> frozenset[tuple[int, int]]:
    """Pairs (i, j) with i before j on every path: i precedes j unless some
    node already carries j on a prefix path while i still waits on a suffix
    path. At most n membership folds per node."""
    n = mdd.n
    full = (1 << n) - 1
    blocked = [0] * n
    for node in mdd.alive_nodes():
        rest = node.suf_any
        while rest:
            bit = rest & -rest
            blocked[bit.bit_length() - 1] |= node.pre_any
            rest ^= bit
    pairs = set()
    for i in range(n):
        mask = full & ~blocked[i] & ~(1 << i)
        while mask:
            bit = mask & -mask
            pairs.add((i, bit.bit_length() - 1))
            mask ^= bit
    return frozenset(pairs)


def iter_label_paths(mdd: RelaxedMdd):
    """Yield every root-sink label sequence (test helper; exponential)."""
    path: list[int] = []

    def walk(u: RNode):
        if u is mdd.sink:
            yield tuple(path)
            return
        for e in u.out:
            if e.alive and e.dst.alive:
                path.append(e.label)
                yield from walk(e.dst)
                path.pop()

    yield from walk(mdd.root)


def to_dot(mdd: RelaxedMdd) -> str:
    """GraphViz text; node label shows both state halves."""

    def members(mask: int) -> str:
        return ",".join(str(j) for j in range(mdd.n) if mask >> j & 1)

    ids: dict[int, int] = {}
    lines = ["digraph relaxed_mdd {", "  rankdir=TB;"]
    for node in mdd.alive_nodes():
        nid = ids.setdefault(id(node), len(ids))
        lines.append(
            f'  n{nid} [label="{{{members(node.pre_all)}}}/{{{members(node.pre_any)}}},'
            f" {node.ready} | {{{members(node.suf_all)}}}/{{{members(node.suf_any)}}},"
            f' {node.latest}"];'
        )
    for e in mdd.alive_edges():
        lines.append(
            f"  n{ids[id(e.src)]} -> n{ids[id(e.dst)]} [label=\"{e.label}\"];"
        )
    lines.append("}")
    return "\n".join(lines)


class _MddPropagatorBase(Propagator):
    priority = 2

    def __init__(
        self,
        starts: list[int],
        instance: Instance,
        width: int,
        refine_budget: int | None,
    ) -> None:
        self._starts = starts
        self._instance = instance
        self._width = width
        self._budget = 2 * instance.n if refine_budget is None else refine_budget
        self._p = [j.processing for j in instance.jobs]
        self._memo_generation = -1

    def _build(self, store: DomainStore) -> RelaxedMdd:
        bounds = [
            (store.lo(v), store.hi(v) + p) for v, p in zip(self._starts, self._p)
        ]
        mdd = compile_relaxed(self._instance, self._width, bounds)
        refine(mdd, self._budget)
        return mdd

    def _apply_bounds(
        self, store: DomainStore, job: int, s_lo: int, e_hi: int
    ) -> None:
        v = self._starts[job]
        if store.tighten_lower(v, s_lo) is ChangeResult.EMPTY_DOMAIN:
            raise Infeasible
        if store.tighten_upper(v, e_hi - self._p[job]) is ChangeResult.EMPTY_DOMAIN:
            raise Infeasible

    def propagate(self, store: DomainStore) -> None:
        if store.generation == self._memo_generation:
            return
        while True:
            before = store.generation
            self._filter_once(store)
            if store.generation == before:
                break
        self._memo_generation = store.generation

    def _filter_once(self, store: DomainStore) -> None:
        raise NotImplementedError


class RelaxedBcPropagator(_MddPropagatorBase):
    """Width-bounded bound-strengthening for No-Overlap: rebuild, refine,
    then apply the one-pass start/end filter."""

    def _filter_once(self, store: DomainStore) -> None:
        mdd = self._build(store)
        bounds, _ = relaxed_bc_filter(mdd)
        for j, (s_lo, e_hi) in enumerate(bounds):
            self._apply_bounds(store, j, s_lo, e_hi)


class PrecedencePropagator(_MddPropagatorBase):
    """Width-bounded precedence extraction for No-Overlap: rebuild, refine,
    then propagate every extracted before/after pair to a local fixpoint."""

    def _filter_once(self, store: DomainStore) -> None:
        mdd = self._build(store)
        pairs = extract_precedences(mdd)
        p = self._p
        while True:
            before = store.generation
            for i, j in pairs:
                vi, vj = self._starts[i], self._starts[j]
                if (
                    store.tighten_lower(vj, store.lo(vi) + p[i])
                    is ChangeResult.EMPTY_DOMAIN
                ):
                    raise Infeasible
                # end_i <= end_j - p_j, expressed on start variables
                if (
                    store.tighten_upper(vi, store.hi(vj) - p[i])
                    is ChangeResult.EMPTY_DOMAIN
                ):
                    raise Infeasible
            if store.generation == before:
                return


def mdd_propagator(
    kind: str,
    width: int,
    starts: list[int],
    instance: Instance,
    refine_budget: int | None = None,
) -> Propagator:
    """Factory for the two diagram-backed propagator flavors."""
    if kind == "relaxed_bc":
        return RelaxedBcPropagator(starts, instance, width, refine_budget)
    if kind == "precedence":
        return PrecedencePropagator(starts, instance, width, refine_budget)
    raise ValueError(f"unknown mdd propagator kind {kind!r}")
