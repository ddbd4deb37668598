"""LDPC-BICM compute-and-forward relaying: simulation, density evolution and information rates."""

__version__ = "0.1.0"
