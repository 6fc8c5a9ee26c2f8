"""Projection of event-level shortcuts onto stop pairs."""
from __future__ import annotations

import time

from ..timetable import DanglingReferenceError, Timetable, TransferGraph
from .model import CompressionStats, EventShortcutSet, StopShortcutSet

EVENT_VERTEX_BYTES = 16
EVENT_EDGE_BYTES = 16
STOP_EDGE_BYTES = 8


def project(es: EventShortcutSet, tt: Timetable, active_only: bool = False) -> StopShortcutSet:
    """Map each shortcut to ``(stop(a), stop(b))`` keeping the minimum travel time per pair."""
    keep = es.active if active_only else None
    src, dst, w = es.src, es.dst, es.travel_time
    if keep is not None:
        src, dst, w = src[keep], dst[keep], w[keep]
    su = tt.ev_stop[src].tolist()
    sv = tt.ev_stop[dst].tolist()
    edges: dict[tuple[int, int], int] = {}
    for u, v, x in zip(su, sv, w.tolist()):
        old = edges.get((u, v))
        if old is None or x < old:
            edges[u, v] = x
    return StopShortcutSet(tt.num_stops, edges, es.delta_max)


def merge_into_transfer_graph(ss: StopShortcutSet, g: TransferGraph) -> TransferGraph:
    """Transfer graph plus stop shortcuts; parallel edges keep the smaller travel time."""
    for u, v, _ in ss.edges():
        for x in (u, v):
            if not 0 <= x < g.num_vertices:
                raise DanglingReferenceError("stop", x, "stop shortcut set")
    return g.with_edges(ss.edges())


def timed_project(es: EventShortcutSet, tt: Timetable, active_only: bool = False) -> tuple[StopShortcutSet, float]:
    t0 = time.perf_counter()
    ss = project(es, tt, active_only)
    return ss, time.perf_counter() - t0


def compression_stats(es: EventShortcutSet, ss: StopShortcutSet, projection_time: float = 0.0) -> CompressionStats:
    ev_count, st_count = len(es), len(ss)
    ev_bytes = EVENT_VERTEX_BYTES * es.num_events + EVENT_EDGE_BYTES * ev_count
    st_bytes = STOP_EDGE_BYTES * st_count
    return CompressionStats(
        event_count=ev_count,
        stop_count=st_count,
        count_ratio=ev_count / st_count if st_count else None,
        event_bytes=ev_bytes,
        stop_bytes=st_bytes,
        memory_ratio=ev_bytes / st_bytes if st_bytes else None,
        projection_time=projection_time,
    )
