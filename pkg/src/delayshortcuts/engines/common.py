"""Query, journey and Pareto-set types shared by all engines, plus journey replay."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

from ..delays import DelayedTimetable
from ..timetable import TransferGraph

INF = float("inf")
UNREACHABLE = None
ENGINE_KINDS = ("csa", "raptor", "tb", "td", "oracle")
ACTIVATION_MODES = ("use", "ignore")


@dataclass(frozen=True, order=True)
class Query:
    source: int
    target: int
    dep_time: int


@dataclass(frozen=True)
class TripLeg:
    trip: int
    board: int   # index within the trip
    alight: int


@dataclass(frozen=True)
class WalkLeg:
    path: tuple[int, ...]   # vertices, first and last are stops
    duration: int


Leg = Union[TripLeg, WalkLeg]


@dataclass(frozen=True)
class Journey:
    arrival_time: int
    num_trips: int
    legs: tuple[Leg, ...] = field(default=(), compare=False)

    @property
    def point(self) -> tuple[int, int]:
        return self.arrival_time, self.num_trips


@dataclass(frozen=True)
class ParetoSet:
    journeys: tuple[Journey, ...] = ()

    def __post_init__(self):
        js = tuple(sorted(self.journeys, key=lambda j: j.num_trips))
        for x, y in zip(js, js[1:]):
            if not (x.num_trips < y.num_trips and x.arrival_time > y.arrival_time):
                raise ValueError(f"dominated journey in Pareto set: {x.point} vs {y.point}")
        object.__setattr__(self, "journeys", js)

    def __len__(self) -> int:
        return len(self.journeys)

    def __iter__(self):
        return iter(self.journeys)

    def points(self) -> tuple[tuple[int, int], ...]:
        return tuple(j.point for j in self.journeys)


@dataclass(frozen=True)
class EngineConfig:
    kind: str = "oracle"
    max_rounds: int = 8
    early_pruning: bool = True
    activation: str = "use"

    def __post_init__(self):
        if self.kind not in ENGINE_KINDS:
            raise ValueError(f"unknown engine kind {self.kind!r}")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.activation not in ACTIVATION_MODES:
            raise ValueError(f"activation must be one of {ACTIVATION_MODES}")


def extract_earliest_arrival(ps: ParetoSet) -> int | None:
    return min((j.arrival_time for j in ps.journeys), default=UNREACHABLE)


def pareto_from_rounds(candidates: Iterable[Journey]) -> ParetoSet:
    """Keep journeys that strictly improve the arrival over all journeys with fewer trips."""
    out, best = [], INF
    for j in sorted(candidates, key=lambda j: (j.num_trips, j.arrival_time)):
        if j.arrival_time < best:
            out.append(j)
            best = j.arrival_time
    return ParetoSet(tuple(out))


def dominates_or_equals(ref: ParetoSet, other: ParetoSet) -> bool:
    """Every journey of ``other`` is matched by a ``ref`` journey no later with no more trips."""
    return all(any(r.arrival_time <= o.arrival_time and r.num_trips <= o.num_trips for r in ref)
               for o in other)


def walk_path(parent: list[int], start: int, end: int, reverse: bool = False) -> tuple[int, ...]:
    """Vertex path from a Dijkstra parent array.

    Forward trees store predecessors (walk back from ``end``); reverse trees
    store successors towards the root (walk forward from ``start``).
    """
    if reverse:
        path = [start]
        while path[-1] != end:
            path.append(parent[path[-1]])
        return tuple(path)
    path = [end]
    while path[-1] != start:
        path.append(parent[path[-1]])
    return tuple(reversed(path))


def path_duration(g: TransferGraph, path: tuple[int, ...]) -> int:
    return sum(g.weight(u, v) for u, v in zip(path, path[1:]))


def walk_leg(g: TransferGraph, path: tuple[int, ...]) -> WalkLeg | None:
    return WalkLeg(path, path_duration(g, path)) if len(path) > 1 else None


class ReplayError(AssertionError):
    pass


def replay(dtt: DelayedTimetable, g: TransferGraph, q: Query, j: Journey) -> int:
    """Re-execute ``j`` leg by leg; return the arrival or raise :class:`ReplayError`."""
    tt = dtt.timetable
    at, now = q.source, q.dep_time
    trips = 0
    for leg in j.legs:
        if isinstance(leg, WalkLeg):
            if leg.path[0] != at:
                raise ReplayError(f"walk starts at {leg.path[0]}, traveller is at {at}")
            total = 0
            for u, v in zip(leg.path, leg.path[1:]):
                w = g.weight(u, v)
                if w is None:
                    raise ReplayError(f"edge ({u},{v}) not in graph")
                total += w
            if total != leg.duration:
                raise ReplayError(f"walk duration {leg.duration} != edge sum {total}")
            at, now = leg.path[-1], now + total
        else:
            evs = tt.trips[leg.trip].events
            if not 0 <= leg.board < leg.alight < len(evs):
                raise ReplayError(f"bad leg indices {leg}")
            b, a = evs[leg.board], evs[leg.alight]
            if tt.events[b].stop != at:
                raise ReplayError(f"boarding trip {leg.trip} at stop {tt.events[b].stop}, traveller at {at}")
            if now + dtt.buffer[at] > dtt.dep[b]:
                raise ReplayError(f"trip {leg.trip} departs {dtt.dep[b]}, reached {now} + buffer {dtt.buffer[at]}")
            at, now = tt.events[a].stop, dtt.arr[a]
            trips += 1
    if at != q.target:
        raise ReplayError(f"journey ends at {at}, target is {q.target}")
    if now != j.arrival_time:
        raise ReplayError(f"replayed arrival {now} != reported {j.arrival_time}")
    if trips != j.num_trips:
        raise ReplayError(f"{trips} trip legs but num_trips = {j.num_trips}")
    return now
