"""Simulator for head-set based hierarchical cluster routing in sensor networks."""

__version__ = "0.1.0"
