"""Domains on which approximations are built and errors are measured.

Three kinds of geometry live here: filled circular sectors (with their
V-shaped boundary subsets), polygons whose edges may be straight or gently
curved, and the sample grids drawn on either.  Everything is immutable after
construction and all sampling is deterministic, so grids can be shared freely
between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "SectorDomain",
    "Edge",
    "Polygon",
    "SampleGrid",
    "interior_angles",
    "resolve_corner_exponents",
    "sample_sector",
    "sample_v_boundary",
    "boundary_samples",
    "polygon_from_file",
    "polygon_to_file",
]

_TWO_PI = 2.0 * math.pi


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SectorDomain:
    """Filled sector of half-opening ``beta * pi/2`` per side.

    ``beta = 0`` degenerates to the segment ``[apex, apex + radius*e^{i rot}]``;
    ``beta -> 2`` approaches the full slit disk (excluded).
    """

    beta: float
    radius: float = 1.0
    apex: complex = 0.0 + 0.0j
    axis_rotation: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.beta < 2.0:
            raise ValueError(f"beta must lie in [0, 2), got {self.beta}")
        if self.radius <= 0.0:
            raise ValueError("radius must be positive")

    def contains(self, z: complex, tol: float = 1e-12) -> bool:
        w = (complex(z) - self.apex) * np.exp(-1j * self.axis_rotation)
        if abs(w) <= tol:
            return True
        return abs(w) <= self.radius * (1 + tol) and abs(np.angle(w)) <= self.beta * math.pi / 2 + tol


@dataclass(frozen=True)
class Edge:
    """Polygon edge from ``start`` to ``end``.

    ``bulge`` adds a smooth sideways displacement ``bulge * L * sin^2(pi t)``
    (L = chord length, positive = left of travel, i.e. into a
    counterclockwise domain).  The sin^2 profile keeps the endpoint tangents
    chord-aligned, so corner angles are unchanged by bulging.  A ``curve``
    callable on [0, 1] overrides the analytic form entirely.
    """

    start: complex
    end: complex
    bulge: float = 0.0
    curve: Callable[[float], complex] | None = None

    @property
    def chord(self) -> complex:
        return self.end - self.start

    def point(self, t):
        t = np.asarray(t, float)
        if self.curve is not None:
            return np.vectorize(self.curve, otypes=[complex])(t)
        c = self.chord
        return self.start + t * c + self.bulge * 1j * c * np.sin(math.pi * t) ** 2

    def tangent(self, t):
        t = np.asarray(t, float)
        if self.curve is not None:
            dt = 1e-6
            lo, hi = np.clip(t - dt, 0.0, 1.0), np.clip(t + dt, 0.0, 1.0)
            return (self.point(hi) - self.point(lo)) / (hi - lo)
        c = self.chord
        return c + self.bulge * 1j * c * math.pi * np.sin(2 * math.pi * t)

    def arclength_table(self, n_panels: int = 32):
        """Cumulative arclength at panel ends, via Gauss-Legendre per panel."""
        nodes, weights = np.polynomial.legendre.leggauss(7)
        t_ends = np.linspace(0.0, 1.0, n_panels + 1)
        lo, hi = t_ends[:-1], t_ends[1:]
        tt = 0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * nodes
        speed = np.abs(self.tangent(tt.ravel())).reshape(n_panels, -1)
        panel_len = 0.5 * (hi - lo) * (speed @ weights)
        cum = np.concatenate([[0.0], np.cumsum(panel_len)])
        return t_ends, cum

    def length(self) -> float:
        return float(self.arclength_table()[1][-1])

    def point_at_arclength(self, s):
        """Points at arclength(s) measured from ``start``."""
        t_ends, cum = self.arclength_table()
        t = np.interp(np.asarray(s, float), cum, t_ends)
        return self.point(t)


def _shoelace(vertices: Sequence[complex]) -> float:
    v = np.asarray(vertices, complex)
    w = np.roll(v, -1)
    return 0.5 * float(np.sum(v.real * w.imag - v.imag * w.real))


def _proper_intersect(p1, p2, q1, q2) -> bool:
    def cross(a, b):
        return a.real * b.imag - a.imag * b.real

    d1 = cross(q2 - q1, p1 - q1)
    d2 = cross(q2 - q1, p2 - q1)
    d3 = cross(p2 - p1, q1 - p1)
    d4 = cross(p2 - p1, q2 - p1)
    return d1 * d2 < 0 and d3 * d4 < 0


@dataclass(frozen=True)
class Polygon:
    """Closed polygonal domain, vertices in counterclockwise order.

    ``betas[k]`` optionally pins the interior angle (in units of pi) at
    vertex k; ``alphas[k]`` is the singularity exponent there, or "auto" for
    the leading Laplace exponent 1/beta_k.
    """

    vertices: tuple
    edges: tuple
    betas: tuple = ()
    alphas: tuple = ()

    @classmethod
    def from_vertices(cls, vertices, bulges=None, betas=None, alphas=None,
                      curves=None) -> "Polygon":
        vs = tuple(complex(v) for v in vertices)
        m = len(vs)
        if m < 3:
            raise ValueError("need at least 3 vertices")
        bulges = list(bulges) if bulges is not None else [0.0] * m
        curves = list(curves) if curves is not None else [None] * m
        edges = tuple(
            Edge(vs[k], vs[(k + 1) % m], bulge=bulges[k], curve=curves[k])
            for k in range(m)
        )
        betas_t = tuple(betas) if betas is not None else (None,) * m
        alphas_t = tuple(alphas) if alphas is not None else ("auto",) * m
        poly = cls(vertices=vs, edges=edges, betas=betas_t, alphas=alphas_t)
        poly.validate()
        return poly

    def validate(self):
        m = len(self.vertices)
        scale = max(abs(v) for v in self.vertices) or 1.0
        for e in self.edges:
            if abs(e.chord) < 1e-14 * scale:
                raise ValueError("degenerate edge")
        for i in range(m):
            for j in range(i + 1, m):
                if j in (i, (i + 1) % m) or i == (j + 1) % m:
                    continue
                a, b = self.vertices[i], self.vertices[(i + 1) % m]
                c, d = self.vertices[j], self.vertices[(j + 1) % m]
                if _proper_intersect(a, b, c, d):
                    raise ValueError("self-intersecting boundary")
        geom = interior_angles(self)
        for k, b in enumerate(self.betas):
            if b is None:
                continue
            if not 0.0 < b < 2.0:
                raise ValueError(f"beta[{k}] must lie in (0, 2)")
            if abs(b - geom[k]) * math.pi > 1e-10:
                raise ValueError(
                    f"declared beta[{k}]={b} disagrees with geometry ({geom[k]:.12g})"
                )

    def orientation(self) -> int:
        return 1 if _shoelace(self.vertices) >= 0 else -1

    def contains(self, z: complex, n_densify: int = 128) -> bool:
        """Winding-number containment on a densified boundary polyline."""
        t = np.linspace(0.0, 1.0, n_densify, endpoint=False)
        pts = np.concatenate([e.point(t) for e in self.edges])
        rel = pts - complex(z)
        if np.min(np.abs(rel)) < 1e-12:
            return True
        ang = np.angle(np.roll(rel, -1) / rel)
        return abs(abs(ang.sum()) - _TWO_PI) < 1e-6


@dataclass(frozen=True, eq=False)
class SampleGrid:
    """Points drawn on a domain, tagged with how they are meant to be used."""

    points: np.ndarray
    weights_role: str  # "sup_norm" or "least_squares"
    cluster_ratio: float | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.weights_role not in ("sup_norm", "least_squares"):
            raise ValueError(f"unknown weights_role {self.weights_role!r}")
        pts = _readonly(np.asarray(self.points, complex).ravel())
        object.__setattr__(self, "points", pts)
        if pts.size == 0:
            raise ValueError("empty sample grid")
        if self.weights is not None:
            w = _readonly(np.asarray(self.weights, float).ravel())
            if w.size != pts.size:
                raise ValueError("weights length mismatch")
            object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.points.size


def interior_angles(polygon: Polygon) -> np.ndarray:
    """Interior angles beta_k (in units of pi) at each vertex.

    Computed from edge tangent directions, so it is exact for straight edges
    and for tangent-preserving bulges; reflex corners give beta_k > 1.  The
    result does not depend on the stored orientation.
    """
    m = len(polygon.vertices)
    orient = polygon.orientation()
    betas = np.empty(m)
    for k in range(m):
        t_in = complex(polygon.edges[(k - 1) % m].tangent(1.0))
        t_out = complex(polygon.edges[k].tangent(0.0))
        if abs(t_in) == 0 or abs(t_out) == 0:
            raise ValueError("degenerate edge")
        turn = np.angle(t_out / t_in)
        interior = math.pi - orient * turn
        betas[k] = interior / math.pi
        if not 0.0 < betas[k] < 2.0:
            raise ValueError(f"interior angle at vertex {k} outside (0, 2*pi)")
    return betas


def resolve_corner_exponents(polygon: Polygon):
    """Per-corner (alpha_k, needs_log) pairs.

    "auto" resolves to the leading exponent 1/beta_k; when that is an
    integer the corner singularity carries a log factor instead, which is
    reported through the flag (the exponent value is still returned).
    """
    betas = interior_angles(polygon)
    out = []
    for k, a in enumerate(polygon.alphas):
        if a == "auto" or a is None:
            val = 1.0 / betas[k]
            is_int = abs(val - round(val)) < 1e-12 and round(val) >= 1
            out.append((val, bool(is_int)))
        else:
            out.append((float(a), False))
    return out


def sample_sector(domain: SectorDomain, n_ray: int, n_arc: int,
                  cluster_ratio: float) -> SampleGrid:
    """Sup-norm grid on a sector: geometric radii times a fan of rays.

    Radii run from ``radius`` down to ``radius * cluster_ratio**n_ray`` and the
    apex itself is appended.  Rays always include both boundary rays and the
    axis, so the outer arc and the V-shaped boundary are covered.
    """
    if n_ray < 2:
        raise ValueError("n_ray must be >= 2")
    if n_arc < 1:
        raise ValueError("n_arc must be >= 1")
    if not 0.0 < cluster_ratio < 1.0:
        raise ValueError("cluster_ratio must lie in (0, 1)")
    radii = domain.radius * cluster_ratio ** np.arange(n_ray + 1)
    half = domain.beta * math.pi / 2
    thetas = np.linspace(-half, half, 2 * n_arc + 1) if domain.beta > 0 else np.array([0.0])
    pts = radii[:, None] * np.exp(1j * (thetas[None, :] + domain.axis_rotation))
    pts = np.concatenate([pts.ravel(), [0.0]]) + domain.apex
    return SampleGrid(points=pts, weights_role="sup_norm", cluster_ratio=cluster_ratio)


def sample_v_boundary(domain: SectorDomain, n_ray: int,
                      cluster_ratio: float) -> SampleGrid:
    """Grid on the V-shaped boundary rays only; a pointwise subset of the
    sector grid built with the same arguments."""
    if n_ray < 2:
        raise ValueError("n_ray must be >= 2")
    if not 0.0 < cluster_ratio < 1.0:
        raise ValueError("cluster_ratio must lie in (0, 1)")
    radii = domain.radius * cluster_ratio ** np.arange(n_ray + 1)
    half = domain.beta * math.pi / 2
    thetas = np.array([-half, half]) if domain.beta > 0 else np.array([0.0])
    pts = radii[:, None] * np.exp(1j * (thetas[None, :] + domain.axis_rotation))
    pts = np.concatenate([pts.ravel(), [0.0]]) + domain.apex
    return SampleGrid(points=pts, weights_role="sup_norm", cluster_ratio=cluster_ratio)


def _tapered_distances(n: int, sigma: float, half_length: float) -> np.ndarray:
    j = np.arange(1, n + 1)
    return half_length * np.exp(-sigma * (np.sqrt(n) - np.sqrt(j)))


def boundary_samples(polygon: Polygon, per_corner: int,
                     cluster_sigma: float) -> SampleGrid:
    """Collocation points on the polygon boundary, clustered toward corners.

    Along each edge, ``per_corner`` points approach each endpoint with
    arclength distances ``(L/2) * exp(-cluster_sigma*(sqrt(n)-sqrt(j)))``,
    matching the tapered pole clustering scale.  Weights are sqrt(local
    spacing), the usual stabilization for clustered least squares.
    """
    if per_corner < 4:
        raise ValueError("per_corner must be >= 4")
    pts, wts = [], []
    for e in polygon.edges:
        length = e.length()
        d = _tapered_distances(per_corner, cluster_sigma, length / 2)
        s = np.concatenate([d, length - d[::-1]])
        s.sort()
        pts.append(e.point_at_arclength(s))
        gaps_lo = np.diff(s, prepend=0.0)
        gaps_hi = np.diff(s, append=length)
        wts.append(np.sqrt(0.5 * (gaps_lo + gaps_hi)))
    return SampleGrid(
        points=np.concatenate(pts),
        weights_role="least_squares",
        weights=np.concatenate(wts),
    )


def polygon_from_file(path) -> Polygon:
    """Read a polygon description.

    Format: one vertex per line as ``re im`` with optional ``beta=<v>`` /
    ``alpha=<v>`` tokens; a line ``curve <edge_index> bulge=<s>`` declares a
    curved edge (edge k joins vertex k to k+1).  '#' starts a comment.
    """
    vertices, betas, alphas = [], [], []
    curve_decls = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "curve":
            idx = int(tok[1])
            spec = dict(t.split("=", 1) for t in tok[2:])
            curve_decls[idx] = float(spec.get("bulge", 0.0))
            continue
        re_s, im_s = tok[0], tok[1]
        beta = alpha = None
        for t in tok[2:]:
            key, val = t.split("=", 1)
            if key == "beta":
                beta = float(val)
            elif key == "alpha":
                alpha = val if val == "auto" else float(val)
            else:
                raise ValueError(f"unknown vertex attribute {key!r}")
        vertices.append(complex(float(re_s), float(im_s)))
        betas.append(beta)
        alphas.append("auto" if alpha is None else alpha)
    bulges = [curve_decls.get(k, 0.0) for k in range(len(vertices))]
    return Polygon.from_vertices(vertices, bulges=bulges, betas=betas, alphas=alphas)


def polygon_to_file(path, polygon: Polygon):
    lines = []
    for k, v in enumerate(polygon.vertices):
        extra = ""
        if polygon.betas[k] is not None:
            extra += f" beta={polygon.betas[k]:.17g}"
        a = polygon.alphas[k]
        if a != "auto":
            extra += f" alpha={a:.17g}"
        lines.append(f"{v.real:.17g} {v.imag:.17g}{extra}")
    for k, e in enumerate(polygon.edges):
        if e.bulge != 0.0:
            lines.append(f"curve {k} bulge={e.bulge:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")
