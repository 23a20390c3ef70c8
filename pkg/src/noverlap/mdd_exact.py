"""Exact sequence decision diagram for the No-Overlap constraint.

Layered DAG whose layer-k nodes are the reachable states (placed set,
earliest next start) after sequencing k jobs greedily at their earliest
times; root-to-sink paths are exactly the feasible permutations of all
jobs under the current bounds. One linear pass over the edges recovers
bound-consistent earliest starts; latest ends come from running the same
machinery on the time-mirrored instance.
"""

from __future__ import annotations

from .engine import ChangeResult, DomainStore, Infeasible, Propagator
from .model import Instance, Job

__all__ = [
    "ExactMdd",
    "compile_exact",
    "bc_filter",
    "bc_filter_ends",
    "mirror_instance",
    "mirror_bounds",
    "filter_bounds_exact",
    "count_paths",
    "iter_label_paths",
    "extract_precedences_exact",
    "to_dot",
    "ExactBcPropagator",
]


class ExactMdd:
    """Compact arrays for a pruned exact diagram.

    Node ids index ``placed`` (bitmask of sequenced jobs) and ``ready``
    (earliest start of the next job). ``edges`` holds (src, label, dst)
    for surviving edges only; every node lies on a root-sink path.
    """

    __slots__ = ("n", "horizon", "layers", "placed", "ready", "edges", "out")

    def __init__(
        self,
        n: int,
        horizon: int,
        layers: list[list[int]],
        placed: list[int],
        ready: list[int],
        edges: list[tuple[int, int, int]],
        out: list[list[int]],
    ) -> None:
        self.n = n
        self.horizon = horizon
        self.layers = layers
        self.placed = placed
        self.ready = ready
        self.edges = edges
        self.out = out

    @property
    def root(self) -> int:
        return self.layers[0][0]

    @property
    def sink(self) -> int:
        return self.layers[-1][0]

    @property
    def max_width(self) -> int:
        return max(len(layer) for layer in self.layers)


def _arrays(
    instance: Instance, bounds: list[tuple[int, int]] | None
) -> tuple[list[int], list[int], list[int]]:
    if bounds is None:
        bounds = instance.start_windows()
    return (
        [b[0] for b in bounds],
        [b[1] for b in bounds],
        [j.processing for j in instance.jobs],
    )


def compile_exact(
    instance: Instance, bounds: list[tuple[int, int]] | None = None
) -> ExactMdd:
    """Top-down layer construction with state dedup, then a bottom-up pass
    dropping every node that cannot reach the sink. Raises Infeasible when
    no feasible permutation remains."""
    lo, hi, p = _arrays(instance, bounds)
    n = instance.n
    full = (1 << n) - 1
    horizon = instance.horizon
    params = [(1 << j, lo[j], hi[j], p[j]) for j in range(n)]
    key_span = horizon + 1

    placed = [0]
    ready = [0]
    out: list[list[int]] = [[]]
    edges: list[tuple[int, int, int]] = []
    layers: list[list[int]] = [[0]]
    frontier = [0]
    for k in range(n):
        key_to_id: dict[int, int] = {}
        new_frontier: list[int] = []
        last = k == n - 1
        for u in frontier:
            pu = placed[u]
            ru = ready[u]
            ou = out[u]
            for j, (bit, lj, hj, pj) in enumerate(params):
                if pu & bit:
                    continue
                s = ru if ru > lj else lj
                e = s + pj
                if e > hj:
                    continue
                m = pu | bit
                key = 0 if last else m * key_span + e
                v = key_to_id.get(key)
                if v is None:
                    # drop states no path can complete: once the machine is
                    # busy through e, a leftover job whose window has passed
                    # can never be placed (ready times only grow)
                    rest = full & ~m
                    dead = False
                    while rest:
                        b2 = rest & -rest
                        j2 = b2.bit_length() - 1
                        s2 = e if e > lo[j2] else lo[j2]
                        if s2 + p[j2] > hi[j2]:
                            dead = True
                            break
                        rest ^= b2
                    if dead:
                        key_to_id[key] = -1
                        continue
                    v = len(placed)
                    placed.append(full if last else m)
                    ready.append(horizon if last else e)
                    out.append([])
                    key_to_id[key] = v
                    new_frontier.append(v)
                elif v < 0:
                    continue
                ou.append(len(edges))
                edges.append((u, j, v))
        if not new_frontier:
            raise Infeasible
        layers.append(new_frontier)
        frontier = new_frontier

    # bottom-up reachability of the sink
    alive = [False] * len(placed)
    alive[layers[-1][0]] = True
    for k in range(n - 1, -1, -1):
        for u in layers[k]:
            kept = [e for e in out[u] if alive[edges[e][2]]]
            out[u] = kept
            alive[u] = bool(kept)
    if not alive[0]:
        raise Infeasible

    # re-number survivors into compact arrays
    remap = [-1] * len(placed)
    new_layers: list[list[int]] = []
    new_placed: list[int] = []
    new_ready: list[int] = []
    for layer in layers:
        row = []
        for u in layer:
            if alive[u]:
                remap[u] = len(new_placed)
                row.append(remap[u])
                new_placed.append(placed[u])
                new_ready.append(ready[u])
        new_layers.append(row)
    new_edges: list[tuple[int, int, int]] = []
    new_out: list[list[int]] = [[] for _ in new_placed]
    for layer in layers:
        for u in layer:
            if not alive[u]:
                continue
            for e in out[u]:
                src, label, dst = edges[e]
                new_out[remap[src]].append(len(new_edges))
                new_edges.append((remap[src], label, remap[dst]))
    return ExactMdd(n, horizon, new_layers, new_placed, new_ready, new_edges, new_out)


def bc_filter(
    mdd: ExactMdd, lo: list[int]
) -> tuple[list[int], int]:
    """Bound-consistent earliest starts in one edge sweep.

    For each job the new earliest start is the minimum, over edges carrying
    that job, of the source node's ready time, floored by the current bound.
    Returns (new lower bounds, edges visited); the visit count always equals
    the edge count, and one pass suffices for interval domains.
    """
    n = mdd.n
    best = [None] * n
    visits = 0
    for src, label, _dst in mdd.edges:
        visits += 1
        r = mdd.ready[src]
        if best[label] is None or r < best[label]:
            best[label] = r
    new_lo = list(lo)
    for j in range(n):
        if best[j] is None:
            raise Infeasible
        if best[j] > new_lo[j]:
            new_lo[j] = best[j]
    return new_lo, visits


def bc_filter_ends(
    mdd: ExactMdd, e_hi: list[int], p: list[int]
) -> tuple[list[int], int]:
    """Bound-consistent latest ends from the forward diagram in one
    bottom-up edge sweep.

    Per node, the latest time the machine may become free while some
    suffix still completes is the max over outgoing edges of the label's
    capped end minus its processing; the cap min(ē_lbl, free(dst)) along
    the way is an attainable end for that label (take the argmax edge at
    every level and insert idle time), so folding it per label gives
    exactly the maximum end over feasible permutations. Equals the
    mirrored bc_filter route.
    """
    free = [0] * len(mdd.placed)
    free[mdd.sink] = mdd.horizon
    best = [None] * mdd.n
    visits = 0
    edges = mdd.edges
    for k in range(len(mdd.layers) - 2, -1, -1):
        for u in mdd.layers[k]:
            u_free = None
            for e in mdd.out[u]:
                visits += 1
                _src, j, v = edges[e]
                cap = free[v] if free[v] < e_hi[j] else e_hi[j]
                if best[j] is None or cap > best[j]:
                    best[j] = cap
                t = cap - p[j]
                if u_free is None or t > u_free:
                    u_free = t
            free[u] = u_free
    new_hi = list(e_hi)
    for j in range(mdd.n):
        if best[j] is None:
            raise Infeasible
        if best[j] < new_hi[j]:
            new_hi[j] = best[j]
    return new_hi, visits


def mirror_instance(instance: Instance, axis: int | None = None) -> Instance:
    """Reflect the instance across the horizon: job [r, dbar] becomes
    [axis - dbar, axis - r] with the same processing time; due dates map to
    axis - d + p so that mirroring twice (same axis) is the identity."""
    if axis is None:
        axis = instance.horizon
    jobs = tuple(
        Job(
            release=axis - j.deadline,
            processing=j.processing,
            deadline=axis - j.release,
            due=axis - j.due + j.processing,
        )
        for j in instance.jobs
    )
    return Instance(jobs)


def mirror_bounds(
    bounds: list[tuple[int, int]], axis: int
) -> list[tuple[int, int]]:
    """Reflected counterparts of live (earliest start, latest end) pairs."""
    return [(axis - e_hi, axis - s_lo) for s_lo, e_hi in bounds]


def filter_bounds_exact(
    instance: Instance, bounds: list[tuple[int, int]] | None = None
) -> tuple[list[tuple[int, int]], ExactMdd]:
    """Bound-consistent (earliest start, latest end) pairs for every job:
    one exact diagram for starts, one on the mirrored instance for ends.
    Returns the forward diagram alongside for reuse. Raises Infeasible when
    no permutation fits."""
    if bounds is None:
        bounds = instance.start_windows()
    axis = instance.horizon
    fwd = compile_exact(instance, bounds)
    new_lo, _ = bc_filter(fwd, [b[0] for b in bounds])
    mirrored = mirror_instance(instance, axis)
    bwd = compile_exact(mirrored, mirror_bounds(bounds, axis))
    mlo, _ = bc_filter(bwd, [axis - e_hi for _s, e_hi in bounds])
    new_hi = [axis - m for m in mlo]
    return (
        [(l, h) for l, h in zip(new_lo, new_hi)],
        fwd,
    )


def count_paths(mdd: ExactMdd) -> int:
    ways = [0] * len(mdd.placed)
    ways[mdd.sink] = 1
    for k in range(len(mdd.layers) - 2, -1, -1):
        for u in mdd.layers[k]:
            ways[u] = sum(ways[mdd.edges[e][2]] for e in mdd.out[u])
    return ways[mdd.root]


def iter_label_paths(mdd: ExactMdd):
    """Yield every root-sink label sequence (test helper; exponential)."""
    path: list[int] = []

    def walk(u: int):
        if u == mdd.sink:
            yield tuple(path)
            return
        for e in mdd.out[u]:
            _src, label, dst = mdd.edges[e]
            path.append(label)
            yield from walk(dst)
            path.pop()

    yield from walk(mdd.root)


def extract_precedences_exact(mdd: ExactMdd) -> frozenset[tuple[int, int]]:
    """Pairs (i, j) with i sequenced before j on every path: i precedes j
    unless some node has already placed j but not i."""
    n = mdd.n
    full = (1 << n) - 1
    blocked = [0] * n
    for layer in mdd.layers:
        for u in layer:
            pu = mdd.placed[u]
            rest = full & ~pu
            while rest:
                bit = rest & -rest
                blocked[bit.bit_length() - 1] |= pu
                rest ^= bit
    pairs = set()
    for i in range(n):
        mask = full & ~blocked[i] & ~(1 << i)
        while mask:
            bit = mask & -mask
            pairs.add((i, bit.bit_length() - 1))
            mask ^= bit
    return frozenset(pairs)


def to_dot(mdd: ExactMdd) -> str:
    """GraphViz text with one rank per layer; node label = placed set, ready."""
    lines = ["digraph exact_mdd {", "  rankdir=TB;"]
    for k, layer in enumerate(mdd.layers):
        for u in layer:
            members = ",".join(
                str(j) for j in range(mdd.n) if mdd.placed[u] >> j & 1
            )
            lines.append(
                f'  n{u} [label="L{k} {{{members}}} r={mdd.ready[u]}"];'
            )
    for src, label, dst in mdd.edges:
        lines.append(f'  n{src} -> n{dst} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines)


class ExactBcPropagator(Propagator):
    """Posts bound consistency for No-Overlap: rebuilds the exact diagram
    from live bounds and applies the filtered starts and ends.

    One pass suffices: the filtered bounds are the componentwise hull of
    the feasible permutations, and re-filtering the hull returns it
    unchanged."""

    priority = 2

    def __init__(self, starts: list[int], instance: Instance) -> None:
        self._starts = starts
        self._instance = instance
        self._p = [j.processing for j in instance.jobs]
        self._memo_generation = -1

    def propagate(self, store: DomainStore) -> None:
        if store.generation == self._memo_generation:
            return
        s_lo = [store.lo(v) for v in self._starts]
        e_hi = [store.hi(v) + p for v, p in zip(self._starts, self._p)]
        mdd = compile_exact(self._instance, list(zip(s_lo, e_hi)))
        new_lo, _ = bc_filter(mdd, s_lo)
        new_hi, _ = bc_filter_ends(mdd, e_hi, self._p)
        for v, p, lo_v, hi_v in zip(self._starts, self._p, new_lo, new_hi):
            if store.tighten_lower(v, lo_v) is ChangeResult.EMPTY_DOMAIN:
                raise Infeasible
            if store.tighten_upper(v, hi_v - p) is ChangeResult.EMPTY_DOMAIN:
                raise Infeasible
        self._memo_generation = store.generation
