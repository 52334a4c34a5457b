"""Dimensions and single-piston deformation kinematics of one Datom module.

All lengths scale linearly with the module radius ``r`` (half the distance
between two opposite connectors). Angles are reported in degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SQRT2 = math.sqrt(2.0)

#: c / r for a zero-thickness module.
CONNECTOR_RATIO = 2.0 / (3.0 * SQRT2 - 1.0)
#: e / r for a zero-thickness module.
LINK_RATIO = (2.0 - SQRT2) / (3.0 * SQRT2 - 1.0)

#: Maximum connector rotation at full compression.
MAX_CONNECTOR_ANGLE = 45.0

REST_ANGLES = (-135.0, -135.0, 180.0)
COMPRESSED_ANGLES = (-90.0, -90.0, 90.0)


class GeometryError(ValueError):
    pass


class ThicknessTooLarge(GeometryError):
    """Part thickness leaves no room for the link part (t >= e')."""


class NoSolution(GeometryError):
    """The rigid-link constraint has no solution for the requested pose."""


def thickness_limit(r: float, outward_offset: bool = False) -> float:
    """Largest admissible part thickness, from solving ``t = e'``.

    With the strict convention ``r' = r - t/2`` this is ~0.165685 r. The
    compatibility convention ``r' = r + t/2`` gives ~0.198589 r.
    """
    k = LINK_RATIO
    return k * r / (1.0 - k / 2.0) if outward_offset else k * r / (1.0 + k / 2.0)


@dataclass(frozen=True)
class DatomParams:
    r: float
    t: float
    c: float
    e: float
    a: float
    r_corr: float
    c_corr: float
    e_corr: float
    core_edge: float
    outward_offset: bool = False

    @property
    def diagonal(self) -> float:
        """Width ``l = sqrt(2) (r + c/2)`` of the aligned connector plane."""
        return SQRT2 * (self.r + self.c / 2.0)

    def as_dict(self) -> dict[str, float]:
        return {
            "r": self.r,
            "t": self.t,
            "c": self.c,
            "e": self.e,
            "a": self.a,
            "r_corr": self.r_corr,
            "c_corr": self.c_corr,
            "e_corr": self.e_corr,
            "core_edge": self.core_edge,
        }


def derive_params(r: float, t: float = 0.0, outward_offset: bool = False) -> DatomParams:
    """Compute every dimension of a module of radius ``r`` and part thickness ``t``.

    Raises ``ThicknessTooLarge`` instead of clamping when ``t >= e'``.
    """
    if not r > 0:
        raise GeometryError(f"radius must be positive, got {r!r}")
    if t < 0:
        raise GeometryError(f"thickness must be non-negative, got {t!r}")
    c = CONNECTOR_RATIO * r
    e = LINK_RATIO * r
    r_corr = r + t / 2.0 if outward_offset else r - t / 2.0
    c_corr = CONNECTOR_RATIO * r_corr
    e_corr = LINK_RATIO * r_corr
    if t > 0 and not t < e_corr:
        raise ThicknessTooLarge(
            f"thickness {t:g} >= corrected link length {e_corr:g} "
            f"(limit {thickness_limit(r, outward_offset):g})"
        )
    return DatomParams(
        r=r,
        t=t,
        c=c,
        e=e,
        a=c,
        r_corr=r_corr,
        c_corr=c_corr,
        e_corr=e_corr,
        core_edge=c - t,
        outward_offset=outward_offset,
    )


# Connector directions, indices as in the module drawings.
_H = 1.0 / SQRT2
CONNECTOR_DIRECTIONS = np.array(
    [
        (1.0, 0.0, 0.0),
        (0.0, 1.0, 0.0),
        (0.5, 0.5, _H),
        (-0.5, 0.5, _H),
        (-0.5, -0.5, _H),
        (0.5, -0.5, _H),
        (-1.0, 0.0, 0.0),
        (0.0, -1.0, 0.0),
        (-0.5, -0.5, -_H),
        (0.5, -0.5, -_H),
        (0.5, 0.5, -_H),
        (-0.5, 0.5, -_H),
    ]
)
CONNECTOR_RINGS = tuple(
    "equatorial" if z == 0 else ("upper" if z > 0 else "lower")
    for z in CONNECTOR_DIRECTIONS[:, 2]
)

# Piston axes as unit vectors; opposite pairs are (0, 1), (2, 4), (3, 5).
PISTON_AXES = np.array(
    [
        (0.0, 0.0, 1.0),
        (0.0, 0.0, -1.0),
        (_H, _H, 0.0),
        (-_H, _H, 0.0),
        (-_H, -_H, 0.0),
        (_H, -_H, 0.0),
    ]
)
AXIS_NAMES = ("+z", "-z", "+x+y", "-x+y", "-x-y", "+x-y")
OPPOSITE_AXIS = (1, 0, 4, 5, 2, 3)


@dataclass(frozen=True)
class ConnectorLayout:
    positions: np.ndarray
    ring: tuple[str, ...]


def connector_layout(r: float) -> ConnectorLayout:
    if not r > 0:
        raise GeometryError(f"radius must be positive, got {r!r}")
    return ConnectorLayout(positions=r * CONNECTOR_DIRECTIONS, ring=CONNECTOR_RINGS)


def _group(axis: np.ndarray) -> tuple[int, ...]:
    dots = CONNECTOR_DIRECTIONS @ axis
    return tuple(int(i) for i in np.flatnonzero(np.isclose(dots, _H)))


def piston_groups() -> list[tuple[np.ndarray, tuple[int, ...]]]:
    """The 6 pistons, each with the 4 connectors surrounding its axis."""
    return [(axis.copy(), _group(axis)) for axis in PISTON_AXES]


PISTON_GROUPS = tuple(frozenset(g) for _, g in piston_groups())


# -- single-piston linkage --------------------------------------------------
#
# Planar cut through the piston axis u and one of its connectors. The
# connector (width c) pivots about its corner farthest from the piston; its
# other corner carries the link joint. At rest the link prolongs the piston
# face; at full compression it is parallel to u and the connector has turned
# by 45 degrees into the plane normal to u.

_U2 = np.array([1.0, 1.0]) / SQRT2
_W2 = np.array([1.0, -1.0]) / SQRT2


@dataclass(frozen=True)
class LinkagePose:
    fraction: float
    piston_displacement: float
    connector_angle: float
    angle_P0: float
    angle_Q0: float
    angle_Q1: float
    pivot: tuple[float, float]
    connector_joint: tuple[float, float]
    piston_joint: tuple[float, float]
    link_length: float

    @property
    def residual(self) -> float:
        """Deviation of the joint distance from the rigid link length."""
        q0 = np.asarray(self.connector_joint)
        q1 = np.asarray(self.piston_joint)
        return float(np.linalg.norm(q0 - q1) - self.link_length)


def _dims(params: DatomParams) -> tuple[float, float, float]:
    if params.t > 0:
        return params.r_corr, params.c_corr, params.e_corr
    return params.r, params.c, params.e


def _linkage_points(r: float, c: float, e: float, d: float):
    pivot = np.array([r, -c / 2.0])
    piston_joint = np.array([r, c / 2.0]) - e * _W2 - d * _U2
    return pivot, piston_joint


def _connector_joint(pivot: np.ndarray, c: float, theta: float) -> np.ndarray:
    return pivot + c * np.array([-math.sin(theta), math.cos(theta)])


def _solve_theta(pivot: np.ndarray, q1: np.ndarray, c: float, e: float) -> float:
    # Intersect circle(pivot, c) with circle(q1, e); keep the branch that
    # starts at theta = 0 for the rest pose.
    delta = q1 - pivot
    dist = float(np.linalg.norm(delta))
    if dist > c + e or dist < abs(c - e) or dist == 0.0:
        raise NoSolution(f"joint distance {dist:g} unreachable with c={c:g}, e={e:g}")
    along = (c * c - e * e + dist * dist) / (2.0 * dist)
    across = math.sqrt(max(c * c - along * along, 0.0))
    base = pivot + along * delta / dist
    normal = np.array([-delta[1], delta[0]]) / dist
    thetas = []
    for sign in (1.0, -1.0):
        q0 = base + sign * across * normal
        v = q0 - pivot
        thetas.append(math.atan2(-v[0], v[1]))
    return min(thetas)


def _angle_between(a: np.ndarray, b: np.ndarray) -> float:
    cosang = float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
    return math.degrees(math.acos(min(1.0, max(-1.0, cosang))))


def linkage_pose(params: DatomParams, fraction: float) -> LinkagePose:
    """Pose of the linkage when the piston has travelled ``fraction`` of ``a``."""
    if not 0.0 <= fraction <= 1.0:
        raise GeometryError(f"fraction must lie in [0, 1], got {fraction!r}")
    r, c, e = _dims(params)
    a = c
    d = fraction * a
    pivot, q1 = _linkage_points(r, c, e, d)
    if fraction == 0.0:
        theta = 0.0
    elif fraction == 1.0:
        theta = math.pi / 4.0
    else:
        theta = _solve_theta(pivot, q1, c, e)
    q0 = _connector_joint(pivot, c, theta)

    if fraction in (0.0, 1.0):
        p0, aq0, aq1 = REST_ANGLES if fraction == 0.0 else COMPRESSED_ANGLES
    else:
        connector = q0 - pivot
        link = q1 - q0
        p0 = -_angle_between(connector, -_U2)
        aq0 = -_angle_between(link, pivot - q0)
        aq1 = _angle_between(q0 - q1, -_W2)
    return LinkagePose(
        fraction=fraction,
        piston_displacement=d,
        connector_angle=math.degrees(theta),
        angle_P0=p0,
        angle_Q0=aq0,
        angle_Q1=aq1,
        pivot=(float(pivot[0]), float(pivot[1])),
        connector_joint=(float(q0[0]), float(q0[1])),
        piston_joint=(float(q1[0]), float(q1[1])),
        link_length=e,
    )


def compressed_connector_squares(
    params: DatomParams, axis_index: int, center=(0.0, 0.0, 0.0), c: float | None = None
) -> list[np.ndarray]:
    """Corner arrays (4x3) of the 4 connectors of one piston at full compression.

    Each connector turns by 45 degrees about its edge farthest from the piston
    axis. ``c`` overrides the connector width (for perturbation checks).
    """
    r, c0, _ = _dims(params)
    width = c0 if c is None else c
    u = PISTON_AXES[axis_index]
    squares = []
    for idx in piston_groups()[axis_index][1]:
        n = CONNECTOR_DIRECTIONS[idx]
        toward = u - (u @ n) * n
        toward /= np.linalg.norm(toward)
        side = np.cross(n, toward)
        hinge = r * n - (width / 2.0) * toward
        # rotate (toward, n) by 45 degrees about the hinge line
        new_toward = (toward - n) / SQRT2
        corners = [
            hinge + s * (width / 2.0) * side + h * width * new_toward
            for s, h in ((-1, 0), (1, 0), (1, 1), (-1, 1))
        ]
        squares.append(np.asarray(center, dtype=float) + np.array(corners))
    return squares


def aligned_connector_check(params: DatomParams, c: float | None = None, tol: float | None = None) -> bool:
    """Check the alignment of two modules compressed face to face.

    Module A compresses its +x+y piston, module B sits across the compressed
    face and compresses the opposite piston. The 8 connectors must be
    coplanar, pairwise face to face, edge-abutting around the piston square,
    and together span the diagonal width ``l = 3c``.
    """
    r, c0, e = _dims(params)
    width = c0 if c is None else c
    tol = 1e-9 * params.r if tol is None else tol
    axis = 2
    u = PISTON_AXES[axis]
    ell = SQRT2 * (r + c0 / 2.0)

    sq_a = compressed_connector_squares(params, axis, c=width)
    heights_a = [float(p @ u) for sq in sq_a for p in sq]
    h = heights_a[0]
    if max(abs(x - h) for x in heights_a) > tol:
        return False
    center_b = 2.0 * h * u
    sq_b = compressed_connector_squares(params, OPPOSITE_AXIS[axis], center=center_b, c=width)
    heights_b = [float(p @ u) for sq in sq_b for p in sq]
    if max(abs(x - h) for x in heights_b) > tol:
        return False

    # face to face: every A square coincides with some B square
    def same(sq1, sq2):
        return all(min(np.linalg.norm(p - q) for q in sq2) <= tol for p in sq1)

    if not all(any(same(sa, sb) for sb in sq_b) for sa in sq_a):
        return False

    # in-plane extent, and each connector's inner edge on the piston square
    e1 = np.array([_H, -_H, 0.0])
    e2 = np.array([0.0, 0.0, 1.0])
    pts = np.array([[p @ e1, p @ e2] for sq in sq_a for p in sq])
    span1 = pts[:, 0].max() - pts[:, 0].min()
    span2 = pts[:, 1].max() - pts[:, 1].min()
    if abs(span1 - ell) > tol or abs(span2 - ell) > tol:
        return False
    for sq in sq_a:
        inner = min(max(abs(p @ e1), abs(p @ e2)) for p in sq)
        if abs(inner - c0 / 2.0) > tol:
            return False
    return True
