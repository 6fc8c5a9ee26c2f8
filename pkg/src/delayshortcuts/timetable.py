"""Static network data model: stops, trips, routes, stop events and the transfer graph.

Times are integer seconds since the start of the service day. Stops, routes,
trips and stop events get dense integer ids in file order; transfer-graph
vertices that are not stops (street intersections and the like) are numbered
after the stops.
"""
from __future__ import annotations

import csv
import heapq
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

MAX_TIME = 172800  # two service days, allows after-midnight trips

STOPS_FILE = "stops.csv"
ROUTES_FILE = "routes.csv"
TRIPS_FILE = "trips.csv"
STOP_TIMES_FILE = "stop_times.csv"
TRANSFERS_FILE = "transfers.csv"


class TimetableError(ValueError):
    pass


class ParseError(TimetableError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.path, self.line = Path(path), line


class DanglingReferenceError(TimetableError):
    def __init__(self, kind: str, ident, where: str):
        super().__init__(f"unknown {kind} id {ident!r} referenced in {where}")
        self.kind, self.ident = kind, ident


class MonotonicityError(TimetableError):
    def __init__(self, trip, msg: str):
        super().__init__(f"trip {trip!r}: {msg}")
        self.trip = trip


@dataclass(frozen=True)
class Stop:
    id: int
    name: str = ""
    buffer_time: int = 0


@dataclass(frozen=True)
class StopEvent:
    stop: int
    arr: int
    dep: int
    trip: int
    index_in_trip: int


@dataclass(frozen=True)
class Trip:
    id: int
    route: int
    events: tuple[int, ...]  # global stop-event ids, contiguous and in order
    name: str = ""


@dataclass(frozen=True)
class Route:
    id: int
    stop_sequence: tuple[int, ...]
    trips: tuple[int, ...]  # sorted by first departure, then trip id
    name: str = ""


class Connection(NamedTuple):
    dep_time: int
    arr_time: int
    dep_stop: int
    arr_stop: int
    trip: int
    event_index: int  # index of the departing event within the trip


class TransferGraph:
    """Directed weighted graph over stops plus auxiliary vertices.

    Parallel edges collapse to the smallest travel time. Outgoing and incoming
    adjacency lists are kept sorted by ``(travel_time, head)``, which is what
    Early Pruning needs.
    """

    def __init__(self, num_vertices: int, edges: Iterable[tuple[int, int, int]] = ()):
        self.num_vertices = num_vertices
        self._w: dict[tuple[int, int], int] = {}
        for u, v, tt in edges:
            self._put(u, v, tt)
        self._rebuild()

    def _put(self, u: int, v: int, tt: int) -> None:
        if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
            raise DanglingReferenceError("vertex", u if not 0 <= u < self.num_vertices else v, "transfer graph")
        if tt < 1:
            raise TimetableError(f"edge ({u},{v}) has travel_time {tt} < 1")
        if u == v:
            return
        old = self._w.get((u, v))
        if old is None or tt < old:
            self._w[u, v] = tt

    def _rebuild(self) -> None:
        out: list[list[tuple[int, int]]] = [[] for _ in range(self.num_vertices)]
        inc: list[list[tuple[int, int]]] = [[] for _ in range(self.num_vertices)]
        for (u, v), tt in self._w.items():
            out[u].append((tt, v))
            inc[v].append((tt, u))
        self.out = [sorted(lst) for lst in out]
        self.inc = [sorted(lst) for lst in inc]

    def __len__(self) -> int:
        return len(self._w)

    def __eq__(self, other) -> bool:
        return (isinstance(other, TransferGraph) and self.num_vertices == other.num_vertices
                and self._w == other._w)

    def edges(self) -> list[tuple[int, int, int]]:
        return sorted((u, v, tt) for (u, v), tt in self._w.items())

    def weight(self, u: int, v: int) -> int | None:
        return self._w.get((u, v))

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._w

    def with_edges(self, edges: Iterable[tuple[int, int, int]]) -> "TransferGraph":
        """Copy of this graph with ``edges`` merged in (min rule on parallel edges)."""
        g = TransferGraph.__new__(TransferGraph)
        g.num_vertices = self.num_vertices
        g._w = dict(self._w)
        for u, v, tt in edges:
            g._put(u, v, tt)
        g._rebuild()
        return g

    def distances_from(self, source: int, reverse: bool = False) -> tuple[list[float], list[int]]:
        """Plain Dijkstra; returns (dist, parent) over all vertices, ``inf``/-1 if unreached."""
        adj = self.inc if reverse else self.out
        dist = [float("inf")] * self.num_vertices
        parent = [-1] * self.num_vertices
        dist[source] = 0
        heap = [(0, source)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for tt, v in adj[u]:
                nd = d + tt
                if nd < dist[v]:
                    dist[v], parent[v] = nd, u
                    heapq.heappush(heap, (nd, v))
        return dist, parent


def check_transitive_closure(g: TransferGraph) -> tuple[bool, tuple[int, int, int] | None]:
    """True iff every two-edge path a->b->c is matched by an edge (a,c) no longer than it.

    On failure the first violating triple ``(a, b, c)`` is returned as witness.
    Paths returning to their start (a == c) are ignored.
    """
    for a in range(g.num_vertices):
        for tt_ab, b in g.out[a]:
            for tt_bc, c in g.out[b]:
                if c == a:
                    continue
                w = g.weight(a, c)
                if w is None or w > tt_ab + tt_bc:
                    return False, (a, b, c)
    return True, None


@dataclass(eq=False)
class Timetable:
    stops: tuple[Stop, ...]
    routes: tuple[Route, ...]
    trips: tuple[Trip, ...]
    events: tuple[StopEvent, ...]
    transfer_graph: TransferGraph
    connections: tuple[Connection, ...] = field(default=())

    def __post_init__(self):
        n = len(self.events)
        self.ev_stop = np.fromiter((e.stop for e in self.events), dtype=np.int64, count=n)
        self.ev_arr = np.fromiter((e.arr for e in self.events), dtype=np.int64, count=n)
        self.ev_dep = np.fromiter((e.dep for e in self.events), dtype=np.int64, count=n)
        self.ev_trip = np.fromiter((e.trip for e in self.events), dtype=np.int64, count=n)
        self.ev_index = np.fromiter((e.index_in_trip for e in self.events), dtype=np.int64, count=n)
        self.buffer = np.fromiter((s.buffer_time for s in self.stops), dtype=np.int64,
                                  count=len(self.stops))
        if not self.connections:
            self.connections = build_connections(self)

    @property
    def num_stops(self) -> int:
        return len(self.stops)

    @property
    def num_events(self) -> int:
        return len(self.events)

    def is_last_event(self, e: int) -> bool:
        ev = self.events[e]
        return ev.index_in_trip == len(self.trips[ev.trip].events) - 1

    def has_buffers(self) -> bool:
        return any(s.buffer_time > 0 for s in self.stops)

    def structurally_equal(self, other: "Timetable") -> bool:
        return (self.stops == other.stops and self.routes == other.routes
                and self.trips == other.trips and self.events == other.events
                and self.transfer_graph == other.transfer_graph
                and self.connections == other.connections)


def build_connections(tt: Timetable) -> tuple[Connection, ...]:
    """One connection per consecutive event pair, sorted by (dep_time, trip, event_index)."""
    conns = []
    for trip in tt.trips:
        evs = trip.events
        for i in range(len(evs) - 1):
            a, b = tt.events[evs[i]], tt.events[evs[i + 1]]
            conns.append(Connection(a.dep, b.arr, a.stop, b.stop, trip.id, i))
    conns.sort(key=lambda c: (c.dep_time, c.trip, c.event_index))
    return tuple(conns)


def make_timetable(stops: list[Stop], route_seqs: list[tuple[int, ...]],
                   trip_rows: list[tuple[int, list[tuple[int, int, int]]]],
                   edges: Iterable[tuple[int, int, int]], num_vertices: int | None = None,
                   trip_names: list[str] | None = None, route_names: list[str] | None = None) -> Timetable:
    """Validate and assemble a timetable from dense-id parts.

    ``trip_rows`` holds ``(route, [(stop, arr, dep), ...])`` per trip in id order.
    """
    n_stops = len(stops)
    for i, s in enumerate(stops):
        if s.id != i:
            raise TimetableError(f"stop ids must be contiguous, got {s.id} at position {i}")
        if s.buffer_time < 0:
            raise TimetableError(f"stop {i} has negative buffer_time")
    for r, seq in enumerate(route_seqs):
        for s in seq:
            if not 0 <= s < n_stops:
                raise DanglingReferenceError("stop", s, f"route {r}")
    events: list[StopEvent] = []
    trips: list[Trip] = []
    for t, (route, rows) in enumerate(trip_rows):
        name = trip_names[t] if trip_names else str(t)
        if not 0 <= route < len(route_seqs):
            raise DanglingReferenceError("route", route, f"trip {name}")
        if not rows:
            raise TimetableError(f"trip {name!r} has no stop events")
        if tuple(s for s, _, _ in rows) != tuple(route_seqs[route]):
            raise TimetableError(f"trip {name!r} does not follow the stop sequence of its route")
        prev_dep = None
        for s, arr, dep in rows:
            if not (0 <= arr <= MAX_TIME and 0 <= dep <= MAX_TIME):
                raise MonotonicityError(name, f"time outside [0, {MAX_TIME}]")
            if arr > dep:
                raise MonotonicityError(name, f"arrival {arr} after departure {dep} at stop {s}")
            if prev_dep is not None and not prev_dep < arr:
                raise MonotonicityError(name, f"arrival {arr} at stop {s} not after previous departure {prev_dep}")
            prev_dep = dep
        first = len(events)
        for i, (s, arr, dep) in enumerate(rows):
            events.append(StopEvent(s, arr, dep, t, i))
        trips.append(Trip(t, route, tuple(range(first, len(events))), name))
    by_route: list[list[int]] = [[] for _ in route_seqs]
    for trip in trips:
        by_route[trip.route].append(trip.id)
    routes = tuple(
        Route(r, tuple(seq), tuple(sorted(by_route[r], key=lambda t: (events[trips[t].events[0]].dep, t))),
              route_names[r] if route_names else str(r))
        for r, seq in enumerate(route_seqs))
    nv = n_stops if num_vertices is None else num_vertices
    return Timetable(tuple(stops), routes, tuple(trips), tuple(events), TransferGraph(nv, edges))


def _read_csv(path: Path, columns: list[str]) -> list[tuple[int, dict[str, str]]]:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise ParseError(path, 0, "file not found") from None
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError(path, 1, "missing header row")
        missing = [c for c in columns if c not in reader.fieldnames]
        if missing:
            raise ParseError(path, 1, f"missing columns {missing}")
        return [(reader.line_num, row) for row in reader]


def _int(path, line, row, col) -> int:
    try:
        return int(row[col])
    except (TypeError, ValueError):
        raise ParseError(path, line, f"column {col!r}: expected integer, got {row[col]!r}") from None


def _vertex_key(x: str):
    try:
        return (0, int(x), "")
    except ValueError:
        return (1, 0, x)


def load_timetable(dataset_dir) -> Timetable:
    """Load and validate a CSV dataset directory."""
    d = Path(dataset_dir)
    if not d.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {d}")

    p = d / STOPS_FILE
    stop_ids: dict[str, int] = {}
    stops = []
    for line, row in _read_csv(p, ["id", "name", "buffer_time"]):
        sid = row["id"].strip()
        if sid in stop_ids:
            raise ParseError(p, line, f"duplicate stop id {sid!r}")
        buf = _int(p, line, row, "buffer_time") if row["buffer_time"].strip() else 0
        if buf < 0:
            raise ParseError(p, line, "buffer_time must be >= 0")
        stop_ids[sid] = len(stops)
        stops.append(Stop(len(stops), row["name"] or "", buf))

    p = d / ROUTES_FILE
    route_ids: dict[str, int] = {}
    route_seqs = []
    for line, row in _read_csv(p, ["id", "stop_sequence"]):
        rid = row["id"].strip()
        if rid in route_ids:
            raise ParseError(p, line, f"duplicate route id {rid!r}")
        seq = []
        for s in filter(None, (x.strip() for x in row["stop_sequence"].split(";"))):
            if s not in stop_ids:
                raise DanglingReferenceError("stop", s, f"{p}:{line}")
            seq.append(stop_ids[s])
        if not seq:
            raise ParseError(p, line, "empty stop_sequence")
        route_ids[rid] = len(route_seqs)
        route_seqs.append(tuple(seq))

    p = d / TRIPS_FILE
    trip_ids: dict[str, int] = {}
    trip_route = []
    for line, row in _read_csv(p, ["trip_id", "route_id"]):
        tid, rid = row["trip_id"].strip(), row["route_id"].strip()
        if tid in trip_ids:
            raise ParseError(p, line, f"duplicate trip id {tid!r}")
        if rid not in route_ids:
            raise DanglingReferenceError("route", rid, f"{p}:{line}")
        trip_ids[tid] = len(trip_route)
        trip_route.append(route_ids[rid])

    p = d / STOP_TIMES_FILE
    rows_by_trip: list[list[tuple[int, int, int, int]]] = [[] for _ in trip_route]
    for line, row in _read_csv(p, ["trip_id", "seq", "stop_id", "arr", "dep"]):
        tid, sid = row["trip_id"].strip(), row["stop_id"].strip()
        if tid not in trip_ids:
            raise DanglingReferenceError("trip", tid, f"{p}:{line}")
        if sid not in stop_ids:
            raise DanglingReferenceError("stop", sid, f"{p}:{line}")
        rows_by_trip[trip_ids[tid]].append((_int(p, line, row, "seq"), stop_ids[sid],
                                            _int(p, line, row, "arr"), _int(p, line, row, "dep")))
    trip_names = list(trip_ids)
    trip_rows = []
    for t, rows in enumerate(rows_by_trip):
        rows.sort()
        if len({r[0] for r in rows}) != len(rows):
            raise MonotonicityError(trip_names[t], "duplicate seq values")
        trip_rows.append((trip_route[t], [(s, a, dep) for _, s, a, dep in rows]))

    p = d / TRANSFERS_FILE
    raw_edges = []
    aux: set[str] = set()
    for line, row in _read_csv(p, ["from", "to", "travel_time"]):
        u, v = row["from"].strip(), row["to"].strip()
        tt = _int(p, line, row, "travel_time")
        if tt < 1:
            raise ParseError(p, line, "travel_time must be >= 1")
        for x in (u, v):
            if x not in stop_ids:
                aux.add(x)
        raw_edges.append((u, v, tt))
    vid = dict(stop_ids)
    n = len(stop_ids)
    if all(x.isdigit() and int(x) >= n for x in aux):
        # numeric auxiliary ids keep their numbering
        vid.update({x: int(x) for x in aux})
        num_vertices = max([n - 1] + [int(x) for x in aux]) + 1
    else:
        for x in sorted(aux, key=_vertex_key):
            vid[x] = len(vid)
        num_vertices = len(vid)
    edges = [(vid[u], vid[v], tt) for u, v, tt in raw_edges]
    return make_timetable(stops, route_seqs, trip_rows, edges, num_vertices=num_vertices,
                          trip_names=trip_names, route_names=list(route_ids))


def save_timetable(tt: Timetable, dataset_dir) -> Path:
    d = Path(dataset_dir)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / STOPS_FILE, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "name", "buffer_time"])
        for s in tt.stops:
            w.writerow([s.id, s.name, s.buffer_time])
    with open(d / ROUTES_FILE, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "stop_sequence"])
        for r in tt.routes:
            w.writerow([r.name or r.id, ";".join(map(str, r.stop_sequence))])
    with open(d / TRIPS_FILE, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["trip_id", "route_id"])
        for t in tt.trips:
            w.writerow([t.name or t.id, tt.routes[t.route].name or t.route])
    with open(d / STOP_TIMES_FILE, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["trip_id", "seq", "stop_id", "arr", "dep"])
        for t in tt.trips:
            for e in t.events:
                ev = tt.events[e]
                w.writerow([t.name or t.id, ev.index_in_trip, ev.stop, ev.arr, ev.dep])
    with open(d / TRANSFERS_FILE, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["from", "to", "travel_time"])
        for u, v, tt_ in tt.transfer_graph.edges():
            w.writerow([u, v, tt_])
    return d
