"""Analytic 2-D domains, tagged boundary segments and deterministic samplers.

Domains are described by closed analytic curves (polygons and circles), never
meshes: physics-informed training only needs membership tests, arc-length
boundary sampling and, for the finite-difference oracle, exact intersections
of grid segments with the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels as K
from .tensor import Tensor

TAG_INTERIOR = "INTERIOR"
BOUNDARY_TAGS = ("HOLE", "OUTER", "LEFT", "RIGHT", "TOPBOT")


class GeometryError(ValueError):
    pass


class Line:
    """Straight boundary piece from a to b, parameterized by arc length."""

    def __init__(self, a, b):
        self.a = np.asarray(a, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        self.length = float(np.hypot(*(self.b - self.a)))

    def point_at(self, s):
        s = np.asarray(s, dtype=np.float64)
        return self.a + np.outer(s, self.b - self.a)

    def distance(self, pts):
        d = self.b - self.a
        L2 = d @ d
        t = np.clip(((pts - self.a) @ d) / L2, 0.0, 1.0)
        proj = self.a + t[:, None] * d
        return np.hypot(pts[:, 0] - proj[:, 0], pts[:, 1] - proj[:, 1])


class Arc:
    """Circular boundary piece (theta0 to theta1 on a center/radius circle)."""

    def __init__(self, center, radius, theta0=0.0, theta1=2.0 * math.pi):
        self.center = np.asarray(center, dtype=np.float64)
        self.radius = float(radius)
        self.theta0 = float(theta0)
        self.theta1 = float(theta1)
        self.length = self.radius * abs(self.theta1 - self.theta0)

    def point_at(self, s):
        s = np.asarray(s, dtype=np.float64)
        th = self.theta0 + s * (self.theta1 - self.theta0)
        return self.center + self.radius * np.stack(
            [np.cos(th), np.sin(th)], axis=-1
        )

    def distance(self, pts):
        r = np.hypot(pts[:, 0] - self.center[0], pts[:, 1] - self.center[1])
        return np.abs(r - self.radius)


class PolygonRegion:
    """Closed polygon region backed by the even-odd crossing test."""

    def __init__(self, vertices):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        if self.vertices.ndim != 2 or self.vertices.shape[0] < 3:
            raise GeometryError("polygon needs at least 3 vertices")

    def contains(self, pts):
        return K.points_in_polygon(pts, self.vertices)

    def boundary_distance(self, pts):
        out = np.full(pts.shape[0], np.inf)
        n = self.vertices.shape[0]
        for i in range(n):
            a = self.vertices[i]
            b = self.vertices[(i + 1) % n]
            out = np.minimum(out, Line(a, b).distance(pts))
        return out

    def segment_hits(self, p, q):
        """Parameters t in (0, 1] where segment p->q crosses the boundary."""
        hits = []
        d = q - p
        n = self.vertices.shape[0]
        for i in range(n):
            a = self.vertices[i]
            e = self.vertices[(i + 1) % n] - a
            det = d[0] * (-e[1]) - d[1] * (-e[0])
            if abs(det) < 1e-300:
                continue
            rx, ry = a[0] - p[0], a[1] - p[1]
            t = (rx * (-e[1]) - ry * (-e[0])) / det
            u = (d[0] * ry - d[1] * rx) / det
            if 1e-12 < t <= 1.0 + 1e-12 and -1e-12 <= u <= 1.0 + 1e-12:
                hits.append(min(t, 1.0))
        return hits

    def bbox(self):
        return (
            float(self.vertices[:, 0].min()),
            float(self.vertices[:, 1].min()),
            float(self.vertices[:, 0].max()),
            float(self.vertices[:, 1].max()),
        )


class CircleRegion:
    """Disk region."""

    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=np.float64)
        self.radius = float(radius)

    def contains(self, pts):
        r = np.hypot(pts[:, 0] - self.center[0], pts[:, 1] - self.center[1])
        return r <= self.radius + 1e-12

    def boundary_distance(self, pts):
        r = np.hypot(pts[:, 0] - self.center[0], pts[:, 1] - self.center[1])
        return np.abs(r - self.radius)

    def segment_hits(self, p, q):
        d = q - p
        f = p - self.center
        a = d @ d
        b = 2.0 * (f @ d)
        c = f @ f - self.radius**2
        disc = b * b - 4.0 * a * c
        if disc < 0.0 or a == 0.0:
            return []
        sq = math.sqrt(disc)
        out = []
        for t in ((-b - sq) / (2 * a), (-b + sq) / (2 * a)):
            if 1e-12 < t <= 1.0 + 1e-12:
                out.append(min(t, 1.0))
        return out

    def bbox(self):
        cx, cy = self.center
        r = self.radius
        return (cx - r, cy - r, cx + r, cy + r)


@dataclass
class PointSet:
    """Sampled coordinates with the tag of the set they were drawn from."""

    coords: Tensor
    tag: str

    @property
    def n(self):
        return self.coords.shape[0]


@dataclass
class GeometrySpec:
    """Domain = outer region minus holes, with tagged boundary pieces."""

    name: str
    outer: object
    holes: list = field(default_factory=list)
    segments: dict = field(default_factory=dict)

    def tags(self):
        return list(self.segments.keys())

    def bounding_box(self):
        return self.outer.bbox()

    def scale(self):
        x0, y0, x1, y1 = self.bounding_box()
        return max(x1 - x0, y1 - y0)

    def contains(self, pts, strict=False):
        pts = np.asarray(pts, dtype=np.float64)
        inside = self.outer.contains(pts)
        for h in self.holes:
            inside &= ~h.contains(pts)
        if strict:
            tol = 1e-12 * self.scale()
            inside &= self.boundary_distance(pts) > tol
        return inside

    def boundary_distance(self, pts):
        out = self.outer.boundary_distance(pts)
        for h in self.holes:
            out = np.minimum(out, h.boundary_distance(pts))
        return out

    def tag_distance(self, pts, tag):
        """Distance from each point to the tagged boundary pieces."""
        pieces = self.segments[tag]
        out = np.full(pts.shape[0], np.inf)
        for piece in pieces:
            out = np.minimum(out, piece.distance(pts))
        return out

    def first_exit(self, p, q):
        """Nearest boundary crossing of segment p->q (p inside, q outside).

        Returns (t, point) with t in (0, 1].
        """
        p = np.asarray(p, dtype=np.float64)
        q = np.asarray(q, dtype=np.float64)
        hits = self.outer.segment_hits(p, q)
        for h in self.holes:
            hits.extend(h.segment_hits(p, q))
        if not hits:
            raise GeometryError("segment does not cross the boundary")
        t = min(hits)
        return t, p + t * (q - p)


def build_pentagram(outer_radius=1.0, inner_radius=0.382, hole_radius=0.2):
    """Five-pointed star (10-vertex polygon) with a centered circular hole.

    Vertices alternate outer/inner radius every 36 degrees with the first tip
    pointing up, so vertex 0 sits at (0, outer_radius).
    """
    if not (0.0 < hole_radius < inner_radius < outer_radius):
        raise GeometryError(
            "radii must satisfy 0 < hole < inner < outer, got "
            f"({outer_radius}, {inner_radius}, {hole_radius})"
        )
    verts = []
    for k in range(10):
        r = outer_radius if k % 2 == 0 else inner_radius
        th = math.pi / 2.0 + k * (math.pi / 5.0)
        verts.append((r * math.cos(th), r * math.sin(th)))
    star = PolygonRegion(np.array(verts))
    hole = CircleRegion((0.0, 0.0), hole_radius)
    n = 10
    edges = [
        Line(star.vertices[i], star.vertices[(i + 1) % n]) for i in range(n)
    ]
    return GeometrySpec(
        name="pentagram",
        outer=star,
        holes=[hole],
        segments={"OUTER": edges, "HOLE": [Arc((0.0, 0.0), hole_radius)]},
    )


def build_plate(width=20.0, height=20.0, hole_diameter=5.0):
    """Rectangular plate with a centered circular hole and per-edge tags."""
    if not 0.0 < hole_diameter < min(width, height):
        raise GeometryError(
            f"hole diameter {hole_diameter} must be in (0, {min(width, height)})"
        )
    rect = PolygonRegion(
        np.array([(0.0, 0.0), (width, 0.0), (width, height), (0.0, height)])
    )
    c = (width / 2.0, height / 2.0)
    r = hole_diameter / 2.0
    hole = CircleRegion(c, r)
    return GeometrySpec(
        name="plate",
        outer=rect,
        holes=[hole],
        segments={
            "HOLE": [Arc(c, r)],
            "LEFT": [Line((0.0, height), (0.0, 0.0))],
            "RIGHT": [Line((width, 0.0), (width, height))],
            "TOPBOT": [
                Line((0.0, 0.0), (width, 0.0)),
                Line((width, height), (0.0, height)),
            ],
        },
    )


def build_square(side=1.0):
    """Axis-aligned square with a single OUTER boundary tag."""
    if side <= 0.0:
        raise GeometryError("side must be positive")
    s = float(side)
    corners = [(0.0, 0.0), (s, 0.0), (s, s), (0.0, s)]
    sq = PolygonRegion(np.array(corners))
    edges = [Line(corners[i], corners[(i + 1) % 4]) for i in range(4)]
    return GeometrySpec(name="square", outer=sq, segments={"OUTER": edges})


def build_disk(radius=1.0, center=(0.0, 0.0)):
    """Disk with a single OUTER boundary tag."""
    if radius <= 0.0:
        raise GeometryError("radius must be positive")
    return GeometrySpec(
        name="disk",
        outer=CircleRegion(center, radius),
        segments={"OUTER": [Arc(center, radius)]},
    )


def point_in_star(p, vertices):
    """Even-odd membership of a single point in a polygon (boundary counts)."""
    pts = np.asarray(p, dtype=np.float64).reshape(1, 2)
    return bool(K.points_in_polygon(pts, np.asarray(vertices, dtype=np.float64))[0])


def sample_boundary(geom, tag, m, seed):
    """m points uniform in arc length along the tagged pieces."""
    if m < 1:
        raise GeometryError("m must be >= 1")
    if tag not in geom.segments:
        raise GeometryError(f"unknown boundary tag {tag!r} for {geom.name}")
    pieces = geom.segments[tag]
    lengths = np.array([p.length for p in pieces])
    total = lengths.sum()
    rng = np.random.Generator(np.random.Philox(seed))
    u = rng.random(m) * total
    edges = np.concatenate([[0.0], np.cumsum(lengths)])
    idx = np.clip(np.searchsorted(edges, u, side="right") - 1, 0, len(pieces) - 1)
    pts = np.empty((m, 2))
    for i, piece in enumerate(pieces):
        sel = idx == i
        if np.any(sel):
            s = (u[sel] - edges[i]) / lengths[i]
            pts[sel] = piece.point_at(s)
    return PointSet(coords=Tensor(pts), tag=tag)


def sample_interior(geom, n, seed, chunk=8192, min_acceptance=1e-3):
    """n interior points by rejection sampling from the bounding box."""
    if n < 1:
        raise GeometryError("n must be >= 1")
    x0, y0, x1, y1 = geom.bounding_box()
    rng = np.random.Generator(np.random.Philox(seed))
    got = []
    accepted = 0
    attempts = 0
    while accepted < n:
        cand = rng.random((chunk, 2))
        cand[:, 0] = x0 + cand[:, 0] * (x1 - x0)
        cand[:, 1] = y0 + cand[:, 1] * (y1 - y0)
        keep = cand[geom.contains(cand, strict=True)]
        got.append(keep)
        accepted += keep.shape[0]
        attempts += chunk
        if attempts >= 50000 and accepted / attempts < min_acceptance:
            raise GeometryError(
                f"interior acceptance rate {accepted / attempts:.2e} below "
                f"{min_acceptance:.0e}; degenerate geometry?"
            )
    pts = np.concatenate(got, axis=0)[:n]
    return PointSet(coords=Tensor(pts), tag=TAG_INTERIOR)


def norm_map(geom):
    """Affine map of the bounding box onto [-1, 1]^2: X = (x - c) * s."""
    x0, y0, x1, y1 = geom.bounding_box()
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    sx = 2.0 / (x1 - x0)
    sy = 2.0 / (y1 - y0)
    return (cx, cy, sx, sy)
