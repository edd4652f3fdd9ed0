#!/usr/bin/env python3

"""
Schema validation of the raw experiment configuration
"""

from __future__ import annotations

from typing import Any

from jsonschema import validators

from rotcam_slam.utility.exceptions import ValidationError
from rotcam_slam.utility.logging_config import Subject, get_sim_logger

#
# GLOBALS
#
_number = {"type": "number"}
_positive = {"type": "number", "exclusiveMinimum": 0}
_non_negative = {"type": "number", "minimum": 0}
_count = {"type": "integer", "minimum": 1}
_flag = {"type": "boolean"}


def _section(properties: dict[str, Any]) -> dict[str, Any]:
    return {"type": "object", "properties": properties, "additionalProperties": False}


schema = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "mode": {"enum": ['A', 'HH', 'OC', 'Y0']},
        "merged": _flag,
        "duration": _positive,
        "trials": _count,
        "seed": {"type": "integer", "minimum": 0},
        "out_dir": {"type": "string"},
        "workers": _count,
        "env": _section({
            "path": {"type": "string"},
            "cell_size": _positive,
            "origin": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
            "start": {"type": "array", "items": _number, "minItems": 2, "maxItems": 3},
        }),
        "kin": _section({
            "D": _positive,
            "r": _positive,
            "alpha": {"type": "array", "items": _number, "minItems": 3, "maxItems": 3},
            "joint_gear": {"type": "number", "not": {"const": 0}},
            "wheel_limit": _positive,
            "joint_limit": _positive,
        }),
        "world": _section({
            "sim_dt": _positive,
            "robot_radius": _positive,
            "resolution": _positive,
        }),
        "sensors": _section({
            "sigma_gyro": _non_negative,
            "tick_deg": _positive,
            "a_t": _non_negative,
            "b_t": _non_negative,
            "a_r": _non_negative,
            "b_r": _non_negative,
            "sigma_wheel": _non_negative,
            "lrf_rays": _count,
            "lrf_max_range": _positive,
            "lrf_every": _count,
        }),
        "camera": _section({
            "fov_deg": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 360},
            "max_depth": _positive,
            "ray_spacing_deg": _positive,
        }),
        "estimation": _section({
            "q_position": _non_negative,
            "q_velocity": _non_negative,
            "q_yaw_rate": _non_negative,
            "q_camera_rate": _non_negative,
            "diff_imu_variance": _positive,
            "sync_tolerance": _non_negative,
            "initial_sigma_xy": _non_negative,
            "initial_sigma_theta": _non_negative,
            "initial_sigma_velocity": _non_negative,
        }),
        "slam": _section({
            "l_occ": _positive,
            "l_free": {"type": "number", "exclusiveMaximum": 0},
            "l_max": _positive,
            "free_threshold": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
            "occupied_threshold": {"type": "number", "exclusiveMinimum": 0.5, "exclusiveMaximum": 1},
            "node_translation": _positive,
            "node_rotation": _positive,
            "loop_min_separation": _count,
            "loop_radius": _positive,
            "loop_overlap": {"type": "number", "minimum": 0, "maximum": 1},
            "loop_sigma": {"type": "array", "items": _positive, "minItems": 3, "maxItems": 3},
            "max_iterations": _count,
            "tolerance": _positive,
        }),
        "planner": _section({
            "min_frontier_size": _count,
            "headings": _count,
            "utility_ray_step_deg": _positive,
            "max_candidates": _count,
            "replan_period": _positive,
            "goal_tolerance": _positive,
            "heading_tolerance": _positive,
            "inflation_extra_cells": {"type": "integer", "minimum": 0},
            "pursuit_gain": _positive,
            "lookahead": _positive,
        }),
        "ctrl": _section({
            "horizon_steps": _count,
            "step_dt": _positive,
            "v_max": _non_negative,
            "omega_max": _non_negative,
            "w_p": _non_negative,
            "w_psi": _non_negative,
            "w_u": _non_negative,
            "max_iterations": _count,
            "tolerance": _positive,
        }),
        "trial": _section({
            "fault_timeout": _positive,
        }),
        "record": _section({
            "window": _positive,
            "map_sample_period": _positive,
            "write_estimates": _flag,
            "write_maps": _flag,
            "write_graph": _flag,
        }),
        "batch": _section({
            "modes": {"type": "array", "items": {"enum": ['A', 'HH', 'OC', 'Y0']}, "minItems": 1},
            "merged": {"type": "array", "items": _flag, "minItems": 1},
        }),
    },
}


#
# FUNCTIONS
#


def validation_errors(config: dict[str, Any]) -> list[str]:
    """All schema violations as 'path: message' strings, ordered by path."""
    v = validators.Draft7Validator(schema)
    errors = sorted(v.iter_errors(config), key=lambda e: [str(p) for p in e.path])
    messages = []
    for error in errors:
        where = '.'.join(str(p) for p in error.path) or '<root>'
        messages.append(f'{where}: {error.message}')
    return messages


def check(config: dict[str, Any]) -> None:
    """
    Validate the raw experiment dict, reporting every error before failing.

    :raise ValidationError: If any schema error was found
    """
    logger = get_sim_logger(Subject.HARNESS)
    logger.debug('Validating configuration')
    messages = validation_errors(config)
    for message in messages:
        logger.error(message)
    if messages:
        raise ValidationError(f'Configuration validation failed ({len(messages)} error(s)): {messages[0]}')
