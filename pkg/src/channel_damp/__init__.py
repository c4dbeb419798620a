"""Numerical laboratory for inviscid damping of stratified channel flows."""

__version__ = "0.1.0"
