"""Periodic solutions of polynomial non-autonomous ODEs ``z' = z**n + sum P_i(t) z**i``."""

__version__ = "0.1.0"
