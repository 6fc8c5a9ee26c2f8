from .common import (ENGINE_KINDS, INF, UNREACHABLE, EngineConfig, Journey, ParetoSet, Query, ReplayError,
                     TripLeg, WalkLeg, dominates_or_equals, extract_earliest_arrival, replay)
from .csa import csa_query
from .oracle import oracle_query
from .raptor import build_lines, raptor_query
from .tb import tb_query
from .td_dijkstra import BufferTimeError, td_dijkstra_query

__all__ = [
    "ENGINE_KINDS", "INF", "UNREACHABLE", "BufferTimeError", "EngineConfig", "Journey", "ParetoSet", "Query",
    "ReplayError", "TripLeg", "WalkLeg", "build_lines", "csa_query", "dominates_or_equals",
    "extract_earliest_arrival", "oracle_query", "raptor_query", "replay", "tb_query", "td_dijkstra_query",
]
