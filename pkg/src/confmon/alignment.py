"""Optimal alignments between traces and a labeled accepting Petri net.

An alignment is a sequence of moves that simultaneously replays the trace and
a firing sequence of the net from its initial to its final marking:

  sync    (a, t)   trace event a matched by firing transition t with label a
  log     (a, >>)  trace event a not mirrored by the model
  model   (>>, t)  visible transition t fired without a matching trace event
  silent  (>>, t)  silent transition t fired (never a misalignment)

Move costs come from a CostScheme; the optimal alignment minimizes total
cost. The search is A* over the synchronous product of trace positions and
reachable markings. The heuristic is admissible: remaining events whose
activity no transition carries must each pay a log move, and the model still
needs at least its minimum visible completion distance, of which at most the
matchable remaining events can be covered by free synchronous moves. Ties
between equal-cost alignments break by preferring synchronous, then silent,
then visible model, then log moves, then lexicographic transition id, which
makes the returned move sequence deterministic.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .errors import AlignmentError, LogError
from .eventlog import EventLog, Trace
from .petri import PetriNet

SKIP = ">>"
UNKNOWN = "UNKNOWN"

DEFAULT_STATE_CAP = 1_000_000

_SYNC, _SILENT, _MODEL, _LOG = 0, 1, 2, 3
_KIND_NAMES = {_SYNC: "sync", _SILENT: "silent", _MODEL: "model", _LOG: "log"}


@dataclass(frozen=True)
class CostScheme:
    """Move costs. Synchronous moves are free by definition; silent moves
    default to free so only genuine mismatches cost anything."""

    c_log: float = 1.0
    c_model: float = 1.0
    c_silent: float = 0.0
    c_sync: float = 0.0

    def __post_init__(self) -> None:
        if self.c_log <= 0 or self.c_model <= 0:
            raise AlignmentError("c_log and c_model must be positive")
        if self.c_silent < 0:
            raise AlignmentError("c_silent must be >= 0")
        if self.c_sync != 0:
            raise AlignmentError("c_sync must be 0")


@dataclass(frozen=True)
class Move:
    """One alignment move.

    kind is "sync", "log", "model", or "silent". activity is the trace event
    for sync/log moves and the transition label for visible model moves;
    transition is the fired transition id (None for log moves).
    """

    kind: str
    activity: str | None
    transition: str | None

    @property
    def log_part(self) -> str:
        return self.activity if self.kind in ("sync", "log") else SKIP

    @property
    def model_part(self) -> str:
        if self.kind == "log":
            return SKIP
        if self.kind == "silent":
            return "tau"
        return self.activity

    def __str__(self) -> str:
        return f"({self.log_part},{self.model_part})"


@dataclass(frozen=True)
class Alignment:
    moves: tuple[Move, ...]
    cost: float

    def __len__(self) -> int:
        return len(self.moves)

    def render(self) -> str:
        """Two-row picture: trace on top, model below."""
        top = [m.log_part for m in self.moves]
        bottom = [m.model_part for m in self.moves]
        widths = [max(len(a), len(b)) for a, b in zip(top, bottom)]
        row1 = " | ".join(a.ljust(w) for a, w in zip(top, widths))
        row2 = " | ".join(b.ljust(w) for b, w in zip(bottom, widths))
        return row1 + "\n" + row2


def _events(trace) -> tuple[str, ...]:
    if isinstance(trace, Trace):
        return trace.events
    return tuple(trace)


def _state_space(net: PetriNet, state_cap: int):
    """Forward reachability graph of the net, cached on the net object.

    Returns (index map marking-key -> int, successor lists). Successor lists
    hold (transition, next marking index) sorted by transition id.
    """
    cached = net._caches.get("space")
    if cached is not None:
        return cached
    from .petri import fire

    m0 = net._to_key(net.initial_marking)
    index = {m0: 0}
    keys = [m0]
    succ: list[tuple] = []
    head = 0
    while head < len(keys):
        key = keys[head]
        marking = net._from_key(key)
        nexts = []
        for t in net.transition_order:
            pre = net.preset[t]
            if pre and all(marking.get(p, 0) >= 1 for p in pre):
                nxt = net._to_key(fire(net, marking, t))
                if nxt not in index:
                    if len(keys) >= state_cap:
                        raise AlignmentError(
                            f"alignment state-space exhausted: net {net.name} has more than "
                            f"{state_cap} reachable markings")
                    index[nxt] = len(keys)
                    keys.append(nxt)
                nexts.append((t, index[nxt]))
        succ.append(tuple(nexts))
        head += 1
    space = (index, tuple(succ), keys)
    net._caches["space"] = space
    return space


def _completion_tables(net: PetriNet, costs: CostScheme, state_cap: int):
    """Per reachable marking: cheapest model-only completion cost and the
    minimum number of visible firings to reach the final marking.

    Backward Dijkstra over the reachability graph. Markings that cannot reach
    the final marking are absent from both tables.
    """
    cache_key = ("completion", costs.c_model, costs.c_silent)
    cached = net._caches.get(cache_key)
    if cached is not None:
        return cached
    index, succ, keys = _state_space(net, state_cap)
    preds: list[list[tuple[str, int]]] = [[] for _ in keys]
    for src, nexts in enumerate(succ):
        for t, dst in nexts:
            preds[dst].append((t, src))
    mf = net._to_key(net.final_marking)
    n = len(keys)
    INF = float("inf")
    comp_cost = [INF] * n
    vis_min = [INF] * n
    if mf in index:
        for weights, table in (
            ({True: costs.c_model, False: costs.c_silent}, comp_cost),
            ({True: 1.0, False: 0.0}, vis_min),
        ):
            start = index[mf]
            table[start] = 0.0
            heap = [(0.0, start)]
            while heap:
                d, node = heapq.heappop(heap)
                if d > table[node]:
                    continue
                for t, prev in preds[node]:
                    w = weights[net.labels[t] is not None]
                    if d + w < table[prev]:
                        table[prev] = d + w
                        heapq.heappush(heap, (d + w, prev))
    tables = (comp_cost, vis_min)
    net._caches[cache_key] = tables
    return tables


def optimal_alignment(net: PetriNet, trace, costs: CostScheme = CostScheme(),
                      state_cap: int = DEFAULT_STATE_CAP) -> Alignment:
    """Minimum-cost alignment of one trace against the net.

    Deterministic: among equal-cost alignments the move-kind/transition-id
    tie-break picks a unique sequence. Raises AlignmentError when the final
    marking is unreachable or the search exceeds state_cap expanded states.
    """
    sigma = _events(trace)
    index, succ, keys = _state_space(net, state_cap)
    comp_cost, vis_min = _completion_tables(net, costs, state_cap)
    m0_idx = index[net._to_key(net.initial_marking)]
    mf_key = net._to_key(net.final_marking)
    if mf_key not in index or comp_cost[m0_idx] == float("inf"):
        raise AlignmentError(
            f"net {net.name}: final marking unreachable from initial marking")
    mf_idx = index[mf_key]
    n_events = len(sigma)
    matchable = net.visible_labels

    # unmatchable[i] = events in sigma[i:] that no transition can mirror
    unmatchable = [0] * (n_events + 1)
    for i in range(n_events - 1, -1, -1):
        unmatchable[i] = unmatchable[i + 1] + (0 if sigma[i] in matchable else 1)

    def heuristic(m_idx: int, pos: int) -> float:
        v = vis_min[m_idx]
        if v == float("inf"):
            return v
        unmatched = unmatchable[pos]
        usable = (n_events - pos) - unmatched
        return costs.c_log * unmatched + costs.c_model * max(0.0, v - usable)

    # Heap entries: (f, path key, tiebreak counter, g, marking idx, pos, moves).
    # The path key is the move-kind/id sequence, so equal-cost candidates pop
    # in tie-break order and the first settled goal is the canonical result.
    h0 = heuristic(m0_idx, 0)
    counter = 0
    heap = [(h0, (), 0, 0.0, m0_idx, 0, ())]
    settled = set()
    expanded = 0
    while heap:
        f, key, _, g, m_idx, pos, moves = heapq.heappop(heap)
        if (m_idx, pos) in settled:
            continue
        settled.add((m_idx, pos))
        if m_idx == mf_idx and pos == n_events:
            return Alignment(moves, g)
        expanded += 1
        if expanded > state_cap:
            raise AlignmentError(
                f"alignment state-space exhausted after {state_cap} expansions")
        if pos < n_events:
            act = sigma[pos]
            for t, nxt in succ[m_idx]:
                if net.labels[t] == act and (nxt, pos + 1) not in settled:
                    h = heuristic(nxt, pos + 1)
                    if h != float("inf"):
                        counter += 1
                        heapq.heappush(heap, (
                            g + costs.c_sync + h, key + ((_SYNC, t),), counter,
                            g + costs.c_sync, nxt, pos + 1,
                            moves + (Move("sync", act, t),)))
            if (m_idx, pos + 1) not in settled:
                h = heuristic(m_idx, pos + 1)
                if h != float("inf"):
                    counter += 1
                    heapq.heappush(heap, (
                        g + costs.c_log + h, key + ((_LOG, act),), counter,
                        g + costs.c_log, m_idx, pos + 1,
                        moves + (Move("log", act, None),)))
        for t, nxt in succ[m_idx]:
            if (nxt, pos) in settled:
                continue
            h = heuristic(nxt, pos)
            if h == float("inf"):
                continue
            lbl = net.labels[t]
            if lbl is None:
                counter += 1
                heapq.heappush(heap, (
                    g + costs.c_silent + h, key + ((_SILENT, t),), counter,
                    g + costs.c_silent, nxt, pos,
                    moves + (Move("silent", None, t),)))
            else:
                counter += 1
                heapq.heappush(heap, (
                    g + costs.c_model + h, key + ((_MODEL, t),), counter,
                    g + costs.c_model, nxt, pos,
                    moves + (Move("model", lbl, t),)))
    raise AlignmentError(f"no alignment found for trace against net {net.name}")


def worst_case_cost(net: PetriNet, trace, costs: CostScheme = CostScheme(),
                    state_cap: int = DEFAULT_STATE_CAP) -> float:
    """Reference cost of aligning nothing: every event as a log move plus the
    cheapest model-only run from the initial to the final marking."""
    sigma = _events(trace)
    index, _, _ = _state_space(net, state_cap)
    comp_cost, _ = _completion_tables(net, costs, state_cap)
    m0_idx = index[net._to_key(net.initial_marking)]
    best = comp_cost[m0_idx]
    if best == float("inf"):
        raise AlignmentError(
            f"net {net.name}: final marking unreachable from initial marking")
    return costs.c_log * len(sigma) + best


def trace_fitness(net: PetriNet, trace, costs: CostScheme = CostScheme(),
                  state_cap: int = DEFAULT_STATE_CAP) -> float:
    """1 - optimal cost / worst-case cost, in [0, 1]. 1 means perfect replay."""
    alignment = optimal_alignment(net, trace, costs, state_cap)
    return fitness_from_cost(net, trace, alignment.cost, costs, state_cap)


def fitness_from_cost(net: PetriNet, trace, cost: float,
                      costs: CostScheme = CostScheme(),
                      state_cap: int = DEFAULT_STATE_CAP) -> float:
    worst = worst_case_cost(net, trace, costs, state_cap)
    return 1.0 - cost / worst


def log_fitness(net: PetriNet, log: EventLog, costs: CostScheme = CostScheme(),
                state_cap: int = DEFAULT_STATE_CAP) -> float:
    """Mean trace fitness over the log."""
    if len(log) == 0:
        raise LogError("log fitness of an empty log is undefined")
    return sum(trace_fitness(net, tr, costs, state_cap) for tr in log) / len(log)


def misalignments(alignment: Alignment, labels) -> dict:
    """Count misaligned moves per activity.

    Log and visible model moves count against their activity; log moves whose
    activity is outside the given label set count under UNKNOWN. Synchronous
    and silent moves never count. Returns a dict over all labels plus UNKNOWN.
    """
    counts = {a: 0 for a in sorted(labels)}
    counts[UNKNOWN] = 0
    for mv in alignment.moves:
        if mv.kind == "log":
            if mv.activity in counts:
                counts[mv.activity] += 1
            else:
                counts[UNKNOWN] += 1
        elif mv.kind == "model":
            counts[mv.activity] += 1
    return counts


def coverage(net: PetriNet, log: EventLog, costs: CostScheme = CostScheme(),
             state_cap: int = DEFAULT_STATE_CAP) -> float:
    """Share of alignment moves that are not misalignments, over a whole log.

    1 - (total misaligned moves) / (total alignment length); 1.0 on logs that
    replay perfectly.
    """
    if len(log) == 0:
        raise LogError("coverage of an empty log is undefined")
    total_moves = 0
    total_mis = 0
    for tr in log:
        alignment = optimal_alignment(net, tr, costs, state_cap)
        total_moves += len(alignment)
        total_mis += sum(misalignments(alignment, net.visible_labels).values())
    if total_moves == 0:
        return 1.0
    return 1.0 - total_mis / total_moves
