from .builder import BudgetExceededError, build_event_shortcuts, builder_scenarios, feasible_event_transfers, stop_distances
from .model import CompressionStats, EventShortcutSet, ShortcutFileError, StopShortcutSet
from .projection import compression_stats, merge_into_transfer_graph, project, timed_project
from .update import UpdateReport, update_basic, update_with_replacement

__all__ = [
    "BudgetExceededError", "CompressionStats", "EventShortcutSet", "ShortcutFileError", "StopShortcutSet",
    "UpdateReport", "build_event_shortcuts", "builder_scenarios", "compression_stats", "feasible_event_transfers",
    "merge_into_transfer_graph", "project", "stop_distances", "timed_project", "update_basic",
    "update_with_replacement",
]
