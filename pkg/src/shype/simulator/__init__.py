"""Integration kernels for the piecewise-deterministic executor."""
