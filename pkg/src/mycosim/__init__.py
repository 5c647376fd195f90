"""Excitation waves on mycelium networks: simulation, virtual electrodes, spike and gate analysis."""

__version__ = "0.1.0"
