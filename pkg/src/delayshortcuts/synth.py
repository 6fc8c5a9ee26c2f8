"""Seeded synthetic networks: geographic bus lines plus a walking graph with hubs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .timetable import Stop, Timetable, make_timetable

SERVICE_START = 6 * 3600
SERVICE_END = 22 * 3600


@dataclass(frozen=True)
class SynthConfig:
    n_stops: int = 50
    n_lines: int | None = None        # default n_stops // 8, at least 3
    line_length: tuple[int, int] = (5, 9)
    headways: tuple[int, ...] = (1200, 1800, 2400)
    area: float | None = None         # metres, square side; default 300 * sqrt(n_stops)
    speed: float = 8.0                # vehicle m/s
    walk_speed: float = 1.2
    walk_radius: float = 350.0
    hub_fraction: float = 0.25        # auxiliary vertices per stop
    buffers: bool = False             # random buffers from {0, 0, 60, 120}
    buffer_time: int | None = None    # same buffer at every stop; overrides ``buffers``
    trips_per_route: int | None = None  # default: fill the service span
    service: tuple[int, int] = (SERVICE_START, SERVICE_END)


def generate_network(seed: int, cfg: SynthConfig | None = None, **overrides) -> Timetable:
    """Deterministic given ``seed`` and config.

    Lines are chains of nearby stops run in both directions at a fixed
    headway. Walking goes stop-hub-stop or directly between very close
    stops, so the transfer graph is generally not transitively closed.
    """
    cfg = cfg or SynthConfig()
    if overrides:
        cfg = SynthConfig(**{**cfg.__dict__, **overrides})
    if cfg.n_stops < 2:
        raise ValueError("n_stops must be at least 2")
    if cfg.line_length[0] < 2 or cfg.line_length[0] > cfg.line_length[1] or cfg.line_length[1] > cfg.n_stops:
        raise ValueError(f"invalid line_length {cfg.line_length} for {cfg.n_stops} stops")
    if cfg.trips_per_route is not None and cfg.trips_per_route < 1:
        raise ValueError("trips_per_route must be positive")
    if cfg.buffer_time is not None and cfg.buffer_time < 0:
        raise ValueError("buffer_time must be non-negative")
    rng = np.random.default_rng(seed)
    n = cfg.n_stops
    area = cfg.area or 300.0 * np.sqrt(n)
    xy = rng.uniform(0, area, size=(n, 2))
    dist = np.linalg.norm(xy[:, None, :] - xy[None, :, :], axis=2)

    n_lines = cfg.n_lines or max(3, n // 8)
    route_seqs: list[tuple[int, ...]] = []
    for _ in range(n_lines):
        length = int(rng.integers(cfg.line_length[0], cfg.line_length[1] + 1))
        seq = [int(rng.integers(n))]
        heading = rng.uniform(0, 2 * np.pi)
        while len(seq) < length:
            cur = seq[-1]
            d = xy - xy[cur]
            ang = np.arctan2(d[:, 1], d[:, 0])
            score = dist[cur] * (1.5 - np.cos(ang - heading))
            score[seq] = np.inf
            nxt = int(np.argmin(score))
            heading = float(ang[nxt])
            seq.append(nxt)
        route_seqs.append(tuple(seq))
        route_seqs.append(tuple(reversed(seq)))

    trip_rows = []
    lo, hi = cfg.service
    for r, seq in enumerate(route_seqs):
        headway = int(rng.choice(cfg.headways))
        hops = [int(dist[a, b] / cfg.speed) + 30 for a, b in zip(seq, seq[1:])]
        dwell = [int(rng.integers(0, 3)) * 10 for _ in seq]
        t0 = lo + int(rng.integers(0, headway // 60)) * 60
        count = 0
        while (t0 < hi) if cfg.trips_per_route is None else (count < cfg.trips_per_route):
            count += 1
            rows, t = [], t0
            for i, s in enumerate(seq):
                if i:
                    t += hops[i - 1]
                d = t + (dwell[i] if 0 < i < len(seq) - 1 else 0)
                rows.append((s, t, d))
                t = d
            trip_rows.append((r, rows))
            t0 += headway

    n_hubs = max(1, int(round(n * cfg.hub_fraction)))
    hub_xy = rng.uniform(0, area, size=(n_hubs, 2))
    edges = []

    def walk(d: float) -> int:
        return max(1, int(round(d / cfg.walk_speed)))

    hub_d = np.linalg.norm(xy[:, None, :] - hub_xy[None, :, :], axis=2)
    for s in range(n):
        for h in np.flatnonzero(hub_d[s] <= cfg.walk_radius).tolist():
            w = walk(hub_d[s, h])
            edges.append((s, n + h, w))
            edges.append((n + h, s, w))
    used = sorted({v for _, v, _ in edges if v >= n})
    renum = {v: n + i for i, v in enumerate(used)}
    edges = [(renum.get(u, u), renum.get(v, v), w) for u, v, w in edges]
    n_hubs = len(used)
    for a in range(n):
        for b in range(a + 1, n):
            if dist[a, b] <= cfg.walk_radius / 3:
                w = walk(dist[a, b])
                edges.append((a, b, w))
                edges.append((b, a, w))

    if cfg.buffer_time is not None:
        buf = np.full(n, int(cfg.buffer_time))
    elif cfg.buffers:
        buf = rng.choice([0, 0, 60, 120], size=n)
    else:
        buf = np.zeros(n, dtype=int)
    stops = [Stop(i, f"S{i}", int(buf[i])) for i in range(n)]
    return make_timetable(stops, route_seqs, trip_rows, edges, num_vertices=n + n_hubs)
