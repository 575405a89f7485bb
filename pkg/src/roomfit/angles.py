"""Angle wrapping and spherical direction helpers shared across modules.

World frame convention: y is up, the camera sits at the origin, and a
direction with longitude ``lon`` and latitude ``lat`` is

    dir(lon, lat) = (cos(lat) * sin(lon), sin(lat), cos(lat) * cos(lon))

so longitude 0 looks down +z and longitude pi/2 looks down +x.
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_pi(angle):
    """Wrap angle(s) to [-pi, pi). Works on scalars and arrays."""
    return (angle + math.pi) % TWO_PI - math.pi


def wrap_two_pi(angle):
    """Wrap angle(s) to [0, 2*pi)."""
    return angle % TWO_PI


def unit_from_lonlat(lon: float, lat: float) -> np.ndarray:
    """Unit direction vector for a (lon, lat) pair, y-up convention."""
    cl = math.cos(lat)
    return np.array([cl * math.sin(lon), math.sin(lat), cl * math.cos(lon)])


def lonlat_from_unit(v) -> tuple[float, float]:
    """Inverse of :func:`unit_from_lonlat` for a unit vector.

    The zero vector is rejected; at the poles longitude canonicalizes to 0.
    """
    x, y, z = float(v[0]), float(v[1]), float(v[2])
    norm = math.sqrt(x * x + y * y + z * z)
    if norm < 1e-12:
        raise ValueError("cannot convert zero vector to a direction")
    lat = math.asin(max(-1.0, min(1.0, y / norm)))
    lon = math.atan2(x, z)
    if abs(abs(lat) - math.pi / 2.0) < 1e-12:
        lon = 0.0
    return wrap_pi(lon), lat


def rot_y(yaw: float) -> np.ndarray:
    """Right-handed rotation matrix about +y; maps local +z to dir(yaw, 0)."""
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
