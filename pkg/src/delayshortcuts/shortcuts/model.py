"""Event-level and stop-level shortcut containers and their binary file format."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

EVENT_MAGIC = b"DSCE"
STOP_MAGIC = b"DSCS"
FORMAT_VERSION = 1
_EVENT_HEADER = struct.Struct("<4sHiqq")  # magic, version, delta, |events|, |shortcuts|
_STOP_HEADER = struct.Struct("<4sHiqq")  # magic, version, delta, |stops|, |edges|
_EVENT_RECORD = np.dtype([("src", "<i4"), ("dst", "<i4"), ("tt", "<i4"), ("dmin", "<i4"), ("dmax", "<i4")])
_STOP_RECORD = np.dtype([("src", "<i4"), ("dst", "<i4"), ("tt", "<i4")])


class ShortcutFileError(ValueError):
    pass


class EventShortcutSet:
    """Delay-annotated transfers between stop events of different trips.

    Columns are parallel numpy arrays. ``active`` is flipped by the update
    phase; ``replacement`` marks shortcuts added by a replacement search.
    """

    def __init__(self, num_events: int, delta_max: int, src=(), dst=(), travel_time=(),
                 dmin=(), dmax=(), active=None, replacement=None):
        self.num_events = int(num_events)
        self.delta_max = int(delta_max)
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.travel_time = np.asarray(travel_time, dtype=np.int64)
        self.dmin = np.asarray(dmin, dtype=np.int64)
        self.dmax = np.asarray(dmax, dtype=np.int64)
        n = len(self.src)
        self.active = np.ones(n, dtype=bool) if active is None else np.asarray(active, dtype=bool).copy()
        self.replacement = (np.zeros(n, dtype=bool) if replacement is None
                            else np.asarray(replacement, dtype=bool).copy())
        self._out = None
        self._index = None

    def __len__(self) -> int:
        return len(self.src)

    @property
    def num_active(self) -> int:
        return int(self.active.sum())

    def copy(self) -> "EventShortcutSet":
        return EventShortcutSet(self.num_events, self.delta_max, self.src.copy(), self.dst.copy(),
                                self.travel_time.copy(), self.dmin.copy(), self.dmax.copy(),
                                self.active, self.replacement)

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.src.tolist(), self.dst.tolist()))

    def find(self, src: int, dst: int) -> int | None:
        if self._index is None:
            self._index = {p: i for i, p in enumerate(self.pairs())}
        return self._index.get((src, dst))

    def out(self, event: int) -> list[int]:
        """Indices of shortcuts leaving ``event`` (active or not)."""
        if self._out is None:
            out: list[list[int]] = [[] for _ in range(self.num_events)]
            for i, s in enumerate(self.src.tolist()):
                out[s].append(i)
            self._out = out
        return self._out[event]

    def extend(self, src, dst, travel_time, dmin, dmax, replacement: bool = True) -> None:
        k = len(src)
        if not k:
            return
        self.src = np.concatenate([self.src, np.asarray(src, dtype=np.int64)])
        self.dst = np.concatenate([self.dst, np.asarray(dst, dtype=np.int64)])
        self.travel_time = np.concatenate([self.travel_time, np.asarray(travel_time, dtype=np.int64)])
        self.dmin = np.concatenate([self.dmin, np.asarray(dmin, dtype=np.int64)])
        self.dmax = np.concatenate([self.dmax, np.asarray(dmax, dtype=np.int64)])
        self.active = np.concatenate([self.active, np.ones(k, dtype=bool)])
        self.replacement = np.concatenate([self.replacement, np.full(k, replacement, dtype=bool)])
        self._out = self._index = None

    def sorted(self) -> "EventShortcutSet":
        order = np.lexsort((self.dst, self.src))
        return EventShortcutSet(self.num_events, self.delta_max, self.src[order], self.dst[order],
                                self.travel_time[order], self.dmin[order], self.dmax[order],
                                self.active[order], self.replacement[order])

    def to_bytes(self, active_only: bool = False) -> bytes:
        s = self.sorted()
        keep = s.active if active_only else np.ones(len(s), dtype=bool)
        rec = np.empty(int(keep.sum()), dtype=_EVENT_RECORD)
        rec["src"], rec["dst"], rec["tt"] = s.src[keep], s.dst[keep], s.travel_time[keep]
        rec["dmin"], rec["dmax"] = s.dmin[keep], s.dmax[keep]
        head = _EVENT_HEADER.pack(EVENT_MAGIC, FORMAT_VERSION, self.delta_max, self.num_events, len(rec))
        return head + rec.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "EventShortcutSet":
        if len(data) < _EVENT_HEADER.size:
            raise ShortcutFileError("truncated event shortcut file")
        magic, version, delta, n_events, count = _EVENT_HEADER.unpack_from(data)
        if magic != EVENT_MAGIC or version != FORMAT_VERSION:
            raise ShortcutFileError(f"not an event shortcut file (magic={magic!r}, version={version})")
        body = data[_EVENT_HEADER.size:]
        if len(body) != count * _EVENT_RECORD.itemsize:
            raise ShortcutFileError(f"expected {count} records, got {len(body)} bytes")
        rec = np.frombuffer(body, dtype=_EVENT_RECORD)
        return cls(n_events, delta, rec["src"], rec["dst"], rec["tt"], rec["dmin"], rec["dmax"])

    def flag_bytes(self) -> bytes:
        """One byte per record in file order: bit 0 active, bit 1 replacement."""
        s = self.sorted()
        return (s.active.astype(np.uint8) | (s.replacement.astype(np.uint8) << 1)).tobytes()

    def save(self, path, active_only: bool = False) -> Path:
        """Write the record file; flags go to a ``.flags`` sidecar unless all are default."""
        p = Path(path)
        p.write_bytes(self.to_bytes(active_only))
        side = p.with_name(p.name + ".flags")
        if not active_only and (not self.active.all() or self.replacement.any()):
            side.write_bytes(self.flag_bytes())
        elif side.exists():
            side.unlink()
        return p

    @classmethod
    def load(cls, path) -> "EventShortcutSet":
        p = Path(path)
        es = cls.from_bytes(p.read_bytes())
        side = p.with_name(p.name + ".flags")
        if side.is_file():
            flags = np.frombuffer(side.read_bytes(), dtype=np.uint8)
            if len(flags) != len(es):
                raise ShortcutFileError(f"{side} has {len(flags)} flags for {len(es)} records")
            es.active = (flags & 1).astype(bool)
            es.replacement = (flags & 2).astype(bool)
        return es


class StopShortcutSet:
    """Stop-pair edges with travel times; no delay annotations."""

    def __init__(self, num_stops: int, edges: dict[tuple[int, int], int] | None = None, delta_max: int = 0):
        self.num_stops = num_stops
        self.delta_max = delta_max
        self._w = dict(sorted((edges or {}).items()))

    def __len__(self) -> int:
        return len(self._w)

    def __contains__(self, pair) -> bool:
        return pair in self._w

    def __eq__(self, other) -> bool:
        return isinstance(other, StopShortcutSet) and self._w == other._w

    def weight(self, s: int, t: int) -> int | None:
        return self._w.get((s, t))

    def edges(self) -> list[tuple[int, int, int]]:
        return [(s, t, w) for (s, t), w in self._w.items()]

    def to_bytes(self) -> bytes:
        rec = np.empty(len(self._w), dtype=_STOP_RECORD)
        if self._w:
            arr = np.array(self.edges(), dtype=np.int64)
            rec["src"], rec["dst"], rec["tt"] = arr[:, 0], arr[:, 1], arr[:, 2]
        return _STOP_HEADER.pack(STOP_MAGIC, FORMAT_VERSION, self.delta_max, self.num_stops, len(rec)) + rec.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "StopShortcutSet":
        if len(data) < _STOP_HEADER.size:
            raise ShortcutFileError("truncated stop shortcut file")
        magic, version, delta, n_stops, count = _STOP_HEADER.unpack_from(data)
        if magic != STOP_MAGIC or version != FORMAT_VERSION:
            raise ShortcutFileError(f"not a stop shortcut file (magic={magic!r}, version={version})")
        body = data[_STOP_HEADER.size:]
        if len(body) != count * _STOP_RECORD.itemsize:
            raise ShortcutFileError(f"expected {count} records, got {len(body)} bytes")
        rec = np.frombuffer(body, dtype=_STOP_RECORD)
        edges = {(int(s), int(t)): int(w) for s, t, w in zip(rec["src"], rec["dst"], rec["tt"])}
        return cls(n_stops, edges, delta)

    def save(self, path) -> Path:
        p = Path(path)
        p.write_bytes(self.to_bytes())
        return p

    @classmethod
    def load(cls, path) -> "StopShortcutSet":
        return cls.from_bytes(Path(path).read_bytes())


@dataclass(frozen=True)
class CompressionStats:
    event_count: int
    stop_count: int
    count_ratio: float | None
    event_bytes: int
    stop_bytes: int
    memory_ratio: float | None
    projection_time: float

    ROWS = (
        ("Event-level shortcuts", "event_count"),
        ("Stop-level shortcuts", "stop_count"),
        ("Count ratio", "count_ratio"),
        ("Event-level bytes", "event_bytes"),
        ("Stop-level bytes", "stop_bytes"),
        ("Memory ratio", "memory_ratio"),
        ("Projection computation time (s)", "projection_time"),
    )
