"""平面多边形工具：面积、质心、点在多边形内判断。

坐标按平面欧氏坐标处理（经纬度也直接当作平面坐标）。
"""

from __future__ import annotations

import os

import numpy as np

from stfuse.exceptions import DomainError

# 判定点落在边界上的绝对距离容差
BOUNDARY_TOL = 1e-12


def as_ring(coords) -> np.ndarray:
    """Return an (K, 2) float ring without the optional repeated closing vertex."""
    ring = np.asarray(coords, dtype=float)
    if ring.ndim != 2 or ring.shape[1] != 2:
        raise DomainError(f"polygon must be an (K, 2) array of coordinates, got shape {ring.shape}")
    if len(ring) > 1 and np.allclose(ring[0], ring[-1], rtol=0.0, atol=BOUNDARY_TOL):
        ring = ring[:-1]
    if len(ring) < 3:
        raise DomainError(f"polygon needs at least 3 distinct vertices, got {len(ring)}")
    return ring


def signed_area(ring: np.ndarray) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_area(ring: np.ndarray) -> float:
    return abs(signed_area(ring))


def polygon_centroid(ring: np.ndarray) -> np.ndarray:
    """面积加权质心（shoelace 公式）。"""
    x, y = ring[:, 0], ring[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if area == 0.0:
        raise DomainError("polygon has zero area")
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return np.array([cx, cy])


def points_in_polygon(points, ring: np.ndarray, tol: float = BOUNDARY_TOL, chunk: int = 4096) -> np.ndarray:
    """射线法判断点是否在多边形内；落在边界上（距离 ≤ tol）的点也算在内。"""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.zeros(len(pts), dtype=bool)
    x0 = ring[:, 0][None, :]
    y0 = ring[:, 1][None, :]
    x1 = np.roll(ring[:, 0], -1)[None, :]
    y1 = np.roll(ring[:, 1], -1)[None, :]
    dx = x1 - x0
    dy = y1 - y0
    seg_len2 = dx * dx + dy * dy
    safe_len2 = np.where(seg_len2 > 0.0, seg_len2, 1.0)
    safe_dy = np.where(dy != 0.0, dy, 1.0)

    for start in range(0, len(pts), chunk):
        block = pts[start:start + chunk]
        x = block[:, 0][:, None]
        y = block[:, 1][:, None]

        crosses = (y0 > y) != (y1 > y)
        x_int = x0 + (y - y0) * dx / safe_dy
        inside = np.count_nonzero(crosses & (x < x_int), axis=1) % 2 == 1

        s = np.clip(((x - x0) * dx + (y - y0) * dy) / safe_len2, 0.0, 1.0)
        dist2 = (x - (x0 + s * dx)) ** 2 + (y - (y0 + s * dy)) ** 2
        on_edge = np.any(dist2 <= tol * tol, axis=1)

        out[start:start + chunk] = inside | on_edge
    return out


def sample_in_polygon(rng: np.random.Generator, ring: np.ndarray, n: int) -> np.ndarray:
    """Uniform points inside the polygon by rejection from its bounding box."""
    lo = ring.min(axis=0)
    hi = ring.max(axis=0)
    accepted = np.empty((0, 2))
    while len(accepted) < n:
        batch = rng.uniform(lo, hi, size=(max(2 * (n - len(accepted)), 16), 2))
        accepted = np.vstack([accepted, batch[points_in_polygon(batch, ring)]])
    return accepted[:n]


DEFAULT_DOMAIN_PATH = os.path.join(os.path.dirname(__file__), "..", "config", "lake_erie_west.csv")


def default_domain() -> np.ndarray:
    """内置的西伊利湖近似多边形（经纬度）。"""
    return as_ring(np.loadtxt(DEFAULT_DOMAIN_PATH, delimiter=",", skiprows=1))
