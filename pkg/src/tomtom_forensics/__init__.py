"""Decode TomTom Android application and PND navigation artifacts."""

__version__ = "0.1.0"
