"""Trajectory synthesis for MTL specifications via lazy MILP constraint generation."""

__version__ = "0.1.0"
