"""Node poses, rotation matrices, antenna placement and link geometry.

Orientation convention: ``Q = Rz(alpha) @ Ry(psi) @ Rx(phi)`` (yaw, pitch,
roll), angles in radians and never wrapped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError, InvalidArgumentError


@dataclass(frozen=True)
class EulerAngles:
    """Orientation offset of a node as (alpha, psi, phi) in radians."""

    alpha: float
    psi: float
    phi: float

    def __post_init__(self):
        if not all(math.isfinite(a) for a in (self.alpha, self.psi, self.phi)):
            raise InvalidArgumentError(f"non-finite Euler angles: {self}")

    @classmethod
    def from_array(cls, values) -> "EulerAngles":
        a, p, r = (float(v) for v in np.asarray(values, dtype=float).reshape(3))
        return cls(a, p, r)

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.psi, self.phi])


@dataclass(frozen=True)
class Pose:
    """Centroid position (global frame, meters) plus orientation."""

    position: np.ndarray
    angles: EulerAngles

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float).reshape(3)
        if not np.all(np.isfinite(pos)):
            raise InvalidArgumentError(f"non-finite position: {pos}")
        pos.setflags(write=False)
        object.__setattr__(self, "position", pos)

    @property
    def rotation(self) -> np.ndarray:
        return rotation_matrix(self.angles)


@dataclass(frozen=True)
class ArrayGeometry:
    """Antenna coordinates relative to the array centroid, before rotation.

    ``local_coords`` is 3 x N; column n is the element offset s~_n.
    """

    local_coords: np.ndarray
    count: int = field(init=False)

    def __post_init__(self):
        coords = np.array(self.local_coords, dtype=float)
        if coords.ndim != 2 or coords.shape[0] != 3 or coords.shape[1] < 1:
            raise InvalidArgumentError(f"local_coords must be 3 x N, got {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise InvalidArgumentError("local_coords contain non-finite entries")
        scale = max(1.0, float(np.max(np.abs(coords))))
        if np.max(np.abs(coords.mean(axis=1))) > 1e-12 * scale:
            raise InvalidArgumentError("array is not centered on its centroid")
        coords.setflags(write=False)
        object.__setattr__(self, "local_coords", coords)
        object.__setattr__(self, "count", coords.shape[1])

    @property
    def diameter(self) -> float:
        """Largest distance between any two elements (0 for a single element)."""
        diff = self.local_coords[:, :, None] - self.local_coords[:, None, :]
        return float(np.sqrt((diff**2).sum(axis=0)).max())


@dataclass(frozen=True)
class DirectionInfo:
    """Distance, unit vector and spherical angles from one point to another.

    When the elevation is 0 or pi the azimuth is undefined and reported as 0.
    """

    distance: float
    unit_vector: np.ndarray
    azimuth: float
    elevation: float


def _rx(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _ry(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rz(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


# derivatives of the elementary rotations with respect to their angle
def _drx(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[0.0, 0.0, 0.0], [0.0, -s, -c], [0.0, c, -s]])


def _dry(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[-s, 0.0, c], [0.0, 0.0, 0.0], [-c, 0.0, -s]])


def _drz(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[-s, -c, 0.0], [c, -s, 0.0], [0.0, 0.0, 0.0]])


def _as_angles(angles) -> EulerAngles:
    if isinstance(angles, EulerAngles):
        return angles
    return EulerAngles.from_array(angles)


def rotation_matrix(angles) -> np.ndarray:
    """Return ``Rz(alpha) @ Ry(psi) @ Rx(phi)``.

    Args:
        angles: ``EulerAngles`` or any length-3 sequence (alpha, psi, phi).

    Returns:
        3x3 proper rotation matrix.
    """
    ang = _as_angles(angles)
    return _rz(ang.alpha) @ _ry(ang.psi) @ _rx(ang.phi)


def rotation_derivatives(angles) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Partial derivatives of :func:`rotation_matrix` w.r.t. (alpha, psi, phi)."""
    ang = _as_angles(angles)
    rz, ry, rx = _rz(ang.alpha), _ry(ang.psi), _rx(ang.phi)
    return (
        _drz(ang.alpha) @ ry @ rx,
        rz @ _dry(ang.psi) @ rx,
        rz @ ry @ _drx(ang.phi),
    )


def global_antenna_positions(pose: Pose, array: ArrayGeometry) -> np.ndarray:
    """Antenna positions in the global frame, 3 x N (``p + Q s~_n``)."""
    return pose.position[:, None] + rotation_matrix(pose.angles) @ array.local_coords


def direction_info(p_from, p_to) -> DirectionInfo:
    """Distance and direction from ``p_from`` to ``p_to``.

    Raises:
        DegenerateGeometryError: if the two points coincide.
    """
    diff = np.asarray(p_to, dtype=float).reshape(3) - np.asarray(p_from, dtype=float).reshape(3)
    dist = float(np.linalg.norm(diff))
    if not dist > 0.0:
        raise DegenerateGeometryError("coincident points have no direction")
    unit = diff / dist
    # atan2 stays accurate near the poles, where acos(unit_z) does not
    elevation = math.atan2(math.hypot(unit[0], unit[1]), unit[2])
    if unit[0] == 0.0 and unit[1] == 0.0:
        azimuth = 0.0
    else:
        azimuth = math.atan2(unit[1], unit[0])
    return DirectionInfo(distance=dist, unit_vector=unit, azimuth=azimuth, elevation=elevation)


def fraunhofer_distance(max_diameter: float, wavelength: float) -> float:
    """Near/far-field boundary ``2 D^2 / lambda``."""
    if not (max_diameter > 0 and wavelength > 0):
        raise InvalidArgumentError("diameter and wavelength must be positive")
    return 2.0 * max_diameter**2 / wavelength


def upa_shape(n: int) -> tuple[int, int]:
    """Most-square factorization ``rows x cols`` of ``n`` with rows <= cols."""
    if n < 1:
        raise InvalidArgumentError(f"element count must be >= 1, got {n}")
    rows = int(math.isqrt(n))
    while n % rows:
        rows -= 1
    return rows, n // rows


def uniform_planar_array(n: int, spacing: float) -> ArrayGeometry:
    """Centered planar array in the local x-y plane.

    Elements sit on a ``rows x cols`` grid (see :func:`upa_shape`) with the
    given spacing; the grid is shifted so its centroid is the origin.
    """
    if not spacing > 0:
        raise InvalidArgumentError("spacing must be positive")
    rows, cols = upa_shape(n)
    xs = (np.arange(cols) - (cols - 1) / 2.0) * spacing
    ys = (np.arange(rows) - (rows - 1) / 2.0) * spacing
    gx, gy = np.meshgrid(xs, ys)
    coords = np.vstack([gx.ravel(), gy.ravel(), np.zeros(n)])
    return ArrayGeometry(coords)
