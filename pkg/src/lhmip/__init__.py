"""Simulator for a constant-soundness multi-prover protocol for XZ local Hamiltonians."""

__version__ = "0.1.0"
