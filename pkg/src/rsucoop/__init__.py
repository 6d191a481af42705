"""Cooperative roadside radar sensing: beam registration, beamforming and detection."""

__version__ = "0.1.0"
