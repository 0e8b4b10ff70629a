"""Polyhedral renormings of sequence spaces at finite truncation."""

__version__ = "0.1.0"
