"""Mutual inductances of filament loops via the double-integral Neumann formula.

Geometry lives in micrometers, inductances are reported in picohenry; this
keeps every quantity of interest within a few orders of magnitude of unity.
Loops are closed polylines (the segment from the last vertex back to the
first is implicit). Wires are zero-radius filaments, so self-inductance is
out of scope and loop separations below a validity threshold are rejected.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .constants import MU0, PHI0
from .errors import DataFormatError, DomainError, GeometryError

# 4-point Gauss-Legendre rule on [0, 1]
_GAUSS_T = (np.array([-0.8611363115940526, -0.3399810435848563,
                      0.3399810435848563, 0.8611363115940526]) + 1.0) / 2.0
_GAUSS_W = np.array([0.3478548451374538, 0.6521451548625461,
                     0.6521451548625461, 0.3478548451374538]) / 2.0

# pairs closer than NEAR_FACTOR * segment length are refined by bisection
NEAR_FACTOR = 3.0
_MAX_DEPTH = 24

DEFAULT_MIN_SEPARATION_UM = 1.0


@dataclass
class Polyline:
    """Closed or open 3D polyline, vertices in um."""

    vertices: np.ndarray
    closed: bool = True
    name: str = ""

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] < 2:
            raise GeometryError("polyline needs an (N, 3) vertex array with N >= 2")
        seg = np.diff(np.vstack([v, v[:1]]) if self.closed else v, axis=0)
        if np.any(np.linalg.norm(seg, axis=1) == 0.0):
            raise GeometryError(f"polyline {self.name!r} has a zero-length segment")
        self.vertices = v

    def segments(self):
        """(starts, vectors) arrays for all segments, including the closing one."""
        v = self.vertices
        if self.closed:
            return v, np.roll(v, -1, axis=0) - v
        return v[:-1], np.diff(v, axis=0)

    def translated(self, offset) -> "Polyline":
        return Polyline(self.vertices + np.asarray(offset, float), self.closed, self.name)

    def rotated_z(self, angle: float, center=(0.0, 0.0)) -> "Polyline":
        """Rotate about the +z axis through (cx, cy)."""
        c, s = math.cos(angle), math.sin(angle)
        cx, cy = center
        v = self.vertices.copy()
        x, y = v[:, 0] - cx, v[:, 1] - cy
        v[:, 0] = cx + c * x - s * y
        v[:, 1] = cy + s * x + c * y
        return Polyline(v, self.closed, self.name)

    def mirrored(self, axis: int = 0) -> "Polyline":
        v = self.vertices.copy()
        v[:, axis] = -v[:, axis]
        return Polyline(v, self.closed, self.name)


@dataclass
class GradiometricLoop:
    """Two loops wound in opposite senses; flux response is loop1 minus loop2."""

    loop1: Polyline
    loop2: Polyline
    orientation: tuple[int, int] = (1, -1)

    def __post_init__(self):
        if self.orientation[0] * self.orientation[1] != -1:
            raise DomainError("gradiometer loops must carry opposite winding senses")


@dataclass
class CouplingEstimate:
    """Scaling estimate of the inductive ZZ coupling between neighbor qubits.

    g_z = g_ref * (M_ij / L) / beta, where beta = C_g/C is the capacitance
    ratio behind the reference coupling g_ref.
    """

    m_ij: float  # pH
    l_total: float  # nH
    beta: float
    g_ref: float  # Hz

    def __post_init__(self):
        if min(self.m_ij, self.l_total, self.beta, self.g_ref) <= 0:
            raise DomainError("all coupling-estimate inputs must be positive")


def z_coupling(est: CouplingEstimate) -> float:
    """Inductive Z-coupling frequency (Hz)."""
    return est.g_ref * (est.m_ij * 1e-12 / (est.l_total * 1e-9)) / est.beta


def flux_per_current(m_net: float) -> float:
    """Bias current (A) that threads one flux quantum, Phi0 / M_net(H)."""
    if m_net <= 0:
        raise DomainError("m_net must be positive")
    return PHI0 / m_net


def _pair_quadrature(a0, da, b0, db):
    """4x4 Gauss quadrature of 1/|ra - rb| for one segment pair."""
    pa = a0[None, :] + np.outer(_GAUSS_T, da)
    pb = b0[None, :] + np.outer(_GAUSS_T, db)
    diff = pa[:, None, :] - pb[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return float(np.einsum("i,j,ij->", _GAUSS_W, _GAUSS_W, 1.0 / r))


def _pair_refined(a0, da, b0, db, depth=0):
    """Bisect the longer segment until the pair is far compared to its length."""
    la = float(np.linalg.norm(da))
    lb = float(np.linalg.norm(db))
    gap = float(np.linalg.norm((a0 + 0.5 * da) - (b0 + 0.5 * db)))
    if gap >= NEAR_FACTOR * max(la, lb) or depth >= _MAX_DEPTH:
        if gap == 0.0:
            raise GeometryError("coincident segments: loops touch or intersect")
        return _pair_quadrature(a0, da, b0, db)
    if la >= lb:
        h = 0.5 * da
        return 0.5 * (_pair_refined(a0, h, b0, db, depth + 1)
                      + _pair_refined(a0 + h, h, b0, db, depth + 1))
    h = 0.5 * db
    return 0.5 * (_pair_refined(a0, da, b0, h, depth + 1)
                  + _pair_refined(a0, da, b0 + h, h, depth + 1))


def min_separation(a: Polyline, b: Polyline) -> float:
    """Minimum vertex-to-segment distance between two polylines (um)."""
    a0, da = a.segments()
    b0, db = b.segments()
    best = math.inf
    for p0, dv in ((a0, (b0, db)), (b0, (a0, da))):
        s0, sv = dv
        # distance from each vertex of one curve to each segment of the other
        w = p0[:, None, :] - s0[None, :, :]
        ll = np.einsum("jk,jk->j", sv, sv)
        t = np.clip(np.einsum("ijk,jk->ij", w, sv) / ll[None, :], 0.0, 1.0)
        closest = s0[None, :, :] + t[:, :, None] * sv[None, :, :]
        d = np.linalg.norm(p0[:, None, :] - closest, axis=2)
        best = min(best, float(d.min()))
    return best


def neumann_mutual(
    a: Polyline,
    b: Polyline,
    min_sep: float = DEFAULT_MIN_SEPARATION_UM,
) -> float:
    """Mutual inductance (pH) of two closed filament loops.

    M = (mu0 / 4 pi) oint oint (dl_a . dl_b) / |r_a - r_b|, accumulated
    segment-pair-wise with 4-point Gauss quadrature per segment; pairs closer
    than three segment lengths are bisected until the rule is accurate. The
    sign follows the winding senses of the two polylines.
    """
    if not (a.closed and b.closed):
        raise DomainError("neumann_mutual requires closed loops")
    if min_separation(a, b) < min_sep:
        raise GeometryError(
            f"loops {a.name!r} and {b.name!r} closer than {min_sep} um: "
            "filament model invalid"
        )
    a0, da = a.segments()
    b0, db = b.segments()
    la = np.linalg.norm(da, axis=1)
    lb = np.linalg.norm(db, axis=1)
    pb = b0[:, None, :] + db[:, None, :] * _GAUSS_T[None, :, None]
    midb = b0 + 0.5 * db
    w2 = _GAUSS_W[:, None] * _GAUSS_W[None, :]

    # far pairs in vectorized chunks, near pairs by recursive bisection;
    # fixed chunking and indexed summation keep the result schedule-independent
    total = 0.0
    chunk = max(1, int(2_000_000 / (16 * max(len(b0), 1))))
    for i0 in range(0, len(a0), chunk):
        sl = slice(i0, min(i0 + chunk, len(a0)))
        pa = a0[sl, None, :] + da[sl, None, :] * _GAUSS_T[None, :, None]
        diff = pa[:, :, None, None, :] - pb[None, None, :, :, :]
        r = np.sqrt(np.einsum("iajbk,iajbk->iajb", diff, diff))
        integral = np.einsum("ab,iajb->ij", w2, 1.0 / r)
        mida = a0[sl] + 0.5 * da[sl]
        gap = np.linalg.norm(mida[:, None, :] - midb[None, :, :], axis=2)
        near = gap < NEAR_FACTOR * np.maximum(la[sl, None], lb[None, :])
        for i, j in zip(*np.nonzero(near)):
            integral[i, j] = _pair_refined(a0[i0 + i], da[i0 + i], b0[j], db[j])
        total += float(np.sum((da[sl] @ db.T) * integral))

    m_um = (MU0 / (4.0 * math.pi)) * total
    return m_um * 1e-6 * 1e12  # um -> m, H -> pH


def gradiometric_mutual(
    q: GradiometricLoop,
    source: Polyline,
    min_sep: float = DEFAULT_MIN_SEPARATION_UM,
) -> float:
    """Net mutual inductance (pH) of a gradiometer to a source loop.

    M_net = M(loop1, source) - M(loop2, source); a spatially uniform source
    field cancels exactly.
    """
    s1, s2 = q.orientation
    return s1 * neumann_mutual(q.loop1, source, min_sep) + s2 * neumann_mutual(
        q.loop2, source, min_sep
    )


# --- geometry builders -----------------------------------------------------

def circle_loop(radius: float, n: int = 360, center=(0.0, 0.0, 0.0), name: str = "") -> Polyline:
    """Planar circular loop in a z = const plane, counterclockwise."""
    if radius <= 0 or n < 8:
        raise GeometryError("need radius > 0 and at least 8 segments")
    th = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    c = np.asarray(center, float)
    v = np.column_stack([c[0] + radius * np.cos(th), c[1] + radius * np.sin(th),
                         np.full(n, c[2])])
    return Polyline(v, closed=True, name=name)


def half_annulus_loop(
    r_inner: float,
    r_outer: float,
    half: str = "upper",
    n: int = 180,
    center=(0.0, 0.0),
    rotation: float = 0.0,
    name: str = "",
) -> Polyline:
    """D-shaped loop between two radii, bounded by the junction bridge chords.

    With rotation = 0 the bridges lie on the x axis, so 'upper' covers y > 0
    and 'lower' covers y < 0. Both halves are wound counterclockwise; a
    gradiometer takes their difference.
    """
    if not 0 < r_inner < r_outer:
        raise GeometryError("need 0 < r_inner < r_outer")
    t0, t1 = (0.0, math.pi) if half == "upper" else (math.pi, 2.0 * math.pi)
    th = np.linspace(t0, t1, n + 1)
    outer = np.column_stack([r_outer * np.cos(th), r_outer * np.sin(th)])
    inner = np.column_stack([r_inner * np.cos(th[::-1]), r_inner * np.sin(th[::-1])])
    pts = np.vstack([outer, inner])
    c, s = math.cos(rotation), math.sin(rotation)
    pts = pts @ np.array([[c, s], [-s, c]])
    pts[:, 0] += center[0]
    pts[:, 1] += center[1]
    return Polyline(np.column_stack([pts, np.zeros(len(pts))]), closed=True, name=name)


def gradiometer(
    r_inner: float,
    r_outer: float,
    n: int = 180,
    center=(0.0, 0.0),
    rotation: float = 0.0,
    name: str = "",
) -> GradiometricLoop:
    """Gradiometric SQUID pair: two opposite-sense half-annulus loops."""
    return GradiometricLoop(
        loop1=half_annulus_loop(r_inner, r_outer, "upper", n, center, rotation,
                                name=f"{name}.upper" if name else "upper"),
        loop2=half_annulus_loop(r_inner, r_outer, "lower", n, center, rotation,
                                name=f"{name}.lower" if name else "lower"),
    )


def bias_line(
    x_offset: float,
    y_end: float,
    length: float = 20000.0,
    segment_um: float = 40.0,
    name: str = "bias_line",
) -> Polyline:
    """On-chip flux bias line beside the qubit, grounded at one end.

    A straight leg runs along y at x = x_offset from y = -length up to
    y = y_end (the grounded termination beside the qubit); the return path
    closes far away. The near leg is finely segmented, the distant return
    coarsely.
    """
    near = resample(
        np.array([[x_offset, -length, 0.0], [x_offset, y_end, 0.0]]),
        segment_um,
        closed=False,
    )
    far = resample(
        np.array([
            [x_offset, y_end, 0.0],
            [x_offset + 2.0 * length, y_end, 0.0],
            [x_offset + 2.0 * length, -length, 0.0],
            [x_offset, -length, 0.0],
        ]),
        50.0 * segment_um,
        closed=False,
    )
    verts = np.vstack([near, far[1:-1]])
    return Polyline(verts, closed=True, name=name)


def resample(vertices, max_segment: float, closed: bool = True) -> np.ndarray:
    """Insert vertices so that no segment exceeds max_segment (um)."""
    v = np.asarray(vertices, float)
    out = []
    last = len(v) if closed else len(v) - 1
    for i in range(last):
        a, b = v[i], v[(i + 1) % len(v)]
        n = max(1, int(math.ceil(np.linalg.norm(b - a) / max_segment)))
        for k in range(n):
            out.append(a + (b - a) * (k / n))
    if not closed:
        out.append(v[-1])
    return np.array(out)


# --- geometry file format ---------------------------------------------------
#
# Plain text, micrometers. One block per polyline:
#
#   polyline <name> closed=yes winding=+1
#   <x> <y> <z>
#   ...
#   end
#
# Blank lines and '#' comments are ignored.

_HEADER_RE = re.compile(
    r"^polyline\s+(?P<name>\S+)\s+closed=(?P<closed>yes|no)\s+winding=(?P<w>[+-]1)$"
)


def write_geometry(path, polylines: dict[str, tuple[Polyline, int]]):
    """Write named polylines with winding flags; 17 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# qdesign geometry file, coordinates in um\n")
        for name, (poly, winding) in polylines.items():
            closed = "yes" if poly.closed else "no"
            fh.write(f"polyline {name} closed={closed} winding={winding:+d}\n")
            for x, y, z in poly.vertices:
                fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
            fh.write("end\n")


def read_geometry(path) -> dict[str, tuple[Polyline, int]]:
    """Read a geometry file; raises DataFormatError naming offending lines."""
    out: dict[str, tuple[Polyline, int]] = {}
    name = None
    winding = 1
    closed = True
    verts: list[list[float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("polyline"):
                if name is not None:
                    raise DataFormatError(f"line {lineno}: nested polyline block")
                m = _HEADER_RE.match(line)
                if not m:
                    raise DataFormatError(f"line {lineno}: malformed polyline header")
                name = m.group("name")
                closed = m.group("closed") == "yes"
                winding = int(m.group("w"))
                verts = []
            elif line == "end":
                if name is None:
                    raise DataFormatError(f"line {lineno}: 'end' outside a block")
                out[name] = (Polyline(np.array(verts), closed=closed, name=name), winding)
                name = None
            else:
                if name is None:
                    raise DataFormatError(f"line {lineno}: vertex outside a block")
                parts = line.split()
                if len(parts) != 3:
                    raise DataFormatError(f"line {lineno}: expected 3 coordinates")
                try:
                    verts.append([float(p) for p in parts])
                except ValueError:
                    raise DataFormatError(f"line {lineno}: non-numeric coordinate") from None
    if name is not None:
        raise DataFormatError("unterminated polyline block at end of file")
    return out
