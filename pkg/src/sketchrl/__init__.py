"""Sketch-driven trajectory generation and demonstration-bootstrapped RL."""

__version__ = "0.1.0"
