"""Characterization toolkit for short high-finesse Fabry-Perot cavities."""

__version__ = "0.1.0"
