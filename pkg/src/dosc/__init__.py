"""Exact diagonalisation of a damped quantum oscillator.

See the README for the physics conventions and the CLI entry points.
"""

__version__ = "0.1.0"
