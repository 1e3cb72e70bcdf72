"""Hybrid host-device transfer management simulator for out-of-core graph processing."""

__version__ = "0.1.0"
