"""Directed grey-box fuzzing lab with probabilistic early termination of unreachable runs."""

__version__ = "0.1.0"
