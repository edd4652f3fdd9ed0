"""Deterministic active V-SLAM simulator for an omnidirectional robot with a rotating camera."""
