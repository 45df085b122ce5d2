"""Quasicoherent-state geometry of single-mode CCR fuzzy D2-branes."""

__version__ = "0.1.0"
