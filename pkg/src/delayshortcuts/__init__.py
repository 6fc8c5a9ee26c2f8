"""Delay-aware transit routing over stop-level projections of event-level shortcuts."""
__version__ = "0.1.0"
