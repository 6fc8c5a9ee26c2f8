"""Delay scenarios and their application to a timetable.

A scenario assigns an (arrival, departure) delay pair to stop events. Only
nonzero pairs are stored. Incident scenarios delay a suffix of each affected
trip by one shared magnitude, so arrival and departure delays coincide.
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .timetable import MAX_TIME, Connection, Timetable

DEFAULT_WINDOW = (12 * 3600, 13 * 3600)
INCIDENT_MAX = 3600
BUCKET = 60


class Incident(NamedTuple):
    trip: int
    start_index: int
    delay: int


class DelayedTimes(NamedTuple):
    arr: int
    dep: int


@dataclass(frozen=True)
class DelayScenario:
    delays: Mapping[int, tuple[int, int]] = field(default_factory=dict)
    delta_max: int = 0
    window: tuple[int, int] = (0, MAX_TIME)
    seed: int | None = None
    incidents: tuple[Incident, ...] = ()

    def __post_init__(self):
        clean = {int(e): (int(a), int(d)) for e, (a, d) in self.delays.items() if a or d}
        object.__setattr__(self, "delays", MappingProxyType(dict(sorted(clean.items()))))

    def __getitem__(self, event: int) -> tuple[int, int]:
        return self.delays.get(event, (0, 0))

    def arr_delay(self, event: int) -> int:
        return self.delays.get(event, (0, 0))[0]

    def is_zero(self) -> bool:
        return not self.delays

    @classmethod
    def zero(cls, delta_max: int = 0) -> "DelayScenario":
        return cls({}, delta_max)

    @classmethod
    def from_incidents(cls, tt: Timetable, incidents: Iterable[Incident], delta_max: int,
                       window: tuple[int, int] = (0, MAX_TIME), seed: int | None = None) -> "DelayScenario":
        incidents = tuple(Incident(*map(int, inc)) for inc in incidents)
        delays = {}
        for inc in incidents:
            if inc.delay:
                for e in tt.trips[inc.trip].events[inc.start_index:]:
                    delays[e] = (inc.delay, inc.delay)
        return cls(delays, delta_max, tuple(window), seed, incidents)

    @classmethod
    def uniform(cls, tt: Timetable, delay: int) -> "DelayScenario":
        """Every event delayed by ``delay``; ``uniform(tt, delta)`` is the worst case."""
        return cls.per_trip(tt, [delay] * len(tt.trips), delta_max=delay)

    @classmethod
    def per_trip(cls, tt: Timetable, trip_delays: list[int], delta_max: int | None = None) -> "DelayScenario":
        incs = [Incident(t, 0, int(d)) for t, d in enumerate(trip_delays)]
        dm = max(trip_delays, default=0) if delta_max is None else delta_max
        return cls.from_incidents(tt, incs, dm)

    def to_json(self) -> str:
        doc = {
            "seed": self.seed,
            "delta_max": self.delta_max,
            "window": list(self.window),
            "incidents": [inc._asdict() for inc in self.incidents],
        }
        if not self.incidents and self.delays:
            doc["events"] = [[e, a, d] for e, (a, d) in self.delays.items()]
        return json.dumps(doc, sort_keys=True, indent=1)

    def save(self, path) -> Path:
        p = Path(path)
        p.write_text(self.to_json() + "\n", encoding="utf-8")
        return p


def load_scenario(path, tt: Timetable) -> DelayScenario:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    window = tuple(doc.get("window") or (0, MAX_TIME))
    if doc.get("incidents"):
        incs = [Incident(i["trip"], i["start_index"], i["delay"]) for i in doc["incidents"]]
        return DelayScenario.from_incidents(tt, incs, doc["delta_max"], window, doc.get("seed"))
    delays = {int(e): (int(a), int(d)) for e, a, d in doc.get("events", [])}
    return DelayScenario(delays, doc["delta_max"], window, doc.get("seed"))


def apply_delay(tt: Timetable, event_id: int, sc: DelayScenario) -> DelayedTimes:
    ev = tt.events[event_id]
    da, dd = sc[event_id]
    return DelayedTimes(ev.arr + da, ev.dep + dd)


def validate_scenario(sc: DelayScenario, delta_max: int) -> bool:
    return all(0 <= a <= delta_max and 0 <= d <= delta_max for a, d in sc.delays.values())


def incident_magnitude(rng: np.random.Generator, mean_nonzero: float = 300.0,
                       zero_fraction: float = 0.5, max_delay: int = INCIDENT_MAX) -> int:
    """Draw one incident delay in whole minutes.

    Zero with probability ``zero_fraction``; otherwise a geometric number of
    60 s buckets truncated at ``max_delay``.
    """
    u_zero, u = rng.random(2)
    if u_zero < zero_fraction or max_delay < BUCKET:
        return 0
    k_max = max_delay // BUCKET
    p = min(1.0, BUCKET / mean_nonzero)
    if p >= 1.0:
        return BUCKET
    q = 1.0 - p
    # inverse CDF of the geometric law restricted to 1..k_max
    k = math.ceil(math.log1p(-u * (1.0 - q ** k_max)) / math.log(q))
    return BUCKET * min(max(k, 1), k_max)


def generate_incident_scenario(tt: Timetable, seed: int, delta_max: int = INCIDENT_MAX,
                               window: tuple[int, int] = DEFAULT_WINDOW,
                               mean_nonzero: float = 300.0, zero_fraction: float = 0.5) -> DelayScenario:
    """One incident per trip that departs some stop inside ``window``.

    The start index is uniform over the trip's in-window events; the delay
    then applies to that event and every later event of the trip.
    """
    start, end = window
    if start > end:
        raise ValueError(f"malformed window {window}")
    rng = np.random.default_rng(seed)
    incidents = []
    for trip in tt.trips:
        cand = [i for i, e in enumerate(trip.events) if start <= tt.events[e].dep < end]
        if not cand:
            continue
        idx = cand[int(rng.integers(len(cand)))]
        d = incident_magnitude(rng, mean_nonzero, zero_fraction, delta_max)
        incidents.append(Incident(trip.id, idx, d))
    return DelayScenario.from_incidents(tt, incidents, delta_max, (start, end), seed)


class DelayedTimetable:
    """A timetable with one scenario applied up front.

    Holds delayed arrival/departure times per event as plain lists, plus the
    connection array re-sorted by delayed departure. Engines hang their own
    per-scenario preprocessing off :attr:`cache`.
    """

    def __init__(self, tt: Timetable, sc: DelayScenario | None = None):
        self.timetable = tt
        self.scenario = sc if sc is not None else DelayScenario.zero()
        arr = tt.ev_arr.copy()
        dep = tt.ev_dep.copy()
        for e, (a, d) in self.scenario.delays.items():
            arr[e] += a
            dep[e] += d
        self.arr_np, self.dep_np = arr, dep
        self.arr: list[int] = arr.tolist()
        self.dep: list[int] = dep.tolist()
        self.buffer: list[int] = tt.buffer.tolist()
        self.cache: dict = {}
        self._connections = None
        self._stop_departures = None

    @property
    def connections(self) -> list[Connection]:
        if self._connections is None:
            tt, arr, dep = self.timetable, self.arr, self.dep
            conns = []
            for trip in tt.trips:
                evs = trip.events
                for i in range(len(evs) - 1):
                    a, b = evs[i], evs[i + 1]
                    conns.append(Connection(dep[a], arr[b], tt.events[a].stop, tt.events[b].stop, trip.id, i))
            conns.sort(key=lambda c: (c.dep_time, c.trip, c.event_index))
            self._connections = conns
        return self._connections

    def stop_departures(self) -> list[tuple[list[int], list[int]]]:
        """Per stop: (delayed departure times, event ids), sorted, last-of-trip events excluded."""
        if self._stop_departures is None:
            tt = self.timetable
            per: list[list[tuple[int, int]]] = [[] for _ in tt.stops]
            for trip in tt.trips:
                for e in trip.events[:-1]:
                    per[tt.events[e].stop].append((self.dep[e], e))
            out = []
            for lst in per:
                lst.sort()
                out.append(([d for d, _ in lst], [e for _, e in lst]))
            self._stop_departures = out
        return self._stop_departures

    def earliest_departure(self, stop: int, time: int, exclude_trip: int = -1) -> int | None:
        """Earliest boardable event at ``stop`` departing at or after ``time``."""
        deps, evs = self.stop_departures()[stop]
        ev_trip = self.timetable.events
        for k in range(bisect.bisect_left(deps, time), len(deps)):
            if ev_trip[evs[k]].trip != exclude_trip:
                return evs[k]
        return None

    def is_monotone(self) -> bool:
        for trip in self.timetable.trips:
            prev = None
            for e in trip.events:
                if self.arr[e] > self.dep[e] or (prev is not None and not self.dep[prev] < self.arr[e]):
                    return False
                prev = e
        return True


def apply_scenario(tt: Timetable, sc: DelayScenario | None = None) -> DelayedTimetable:
    return DelayedTimetable(tt, sc)
