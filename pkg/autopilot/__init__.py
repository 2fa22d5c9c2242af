"""Robust pitch-axis autopilot synthesis: plant family, v-gap nominal selection,
H-infinity loop shaping tuned by particle swarm, envelope verification."""

__version__ = "0.1.0"
