"""Desk-scale experiments for weighted multiple ergodic averages."""

__version__ = "0.1.0"
