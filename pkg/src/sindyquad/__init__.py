"""Planar quadrotor simulation and sparse identification with control."""

__version__ = "0.1.0"
