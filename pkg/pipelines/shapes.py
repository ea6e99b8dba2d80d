"""
pipelines/shapes.py

Deterministic synthetic shapes: the bundled data pairs (star / bent star,
ellipse / rectangle, beam / bent beam) and generators used by the tests.
All rings are returned counter-clockwise.
"""

from __future__ import annotations

import numpy as np

from pipelines.geometry import Polygon


def box(minx: float, miny: float, maxx: float, maxy: float) -> Polygon:
    return Polygon([(minx, miny), (maxx, miny), (maxx, maxy), (minx, maxy)])


def regular_polygon(n: int, radius: float = 1.0, center=(0.0, 0.0), phase: float = 0.0) -> Polygon:
    t = phase + 2.0 * np.pi * np.arange(n) / n
    return Polygon(np.column_stack([np.cos(t), np.sin(t)]) * radius + np.asarray(center, dtype=float))


def ellipse(a: float = 1.0, b: float = 0.5, n: int = 64) -> Polygon:
    t = 2.0 * np.pi * np.arange(n) / n
    return Polygon(np.column_stack([a * np.cos(t), b * np.sin(t)]))


def sampled_rectangle(width: float, height: float, nx: int, ny: int) -> Polygon:
    """Axis-aligned rectangle centred at the origin, nx samples on horizontal sides, ny on vertical ones."""
    hw, hh = 0.5 * width, 0.5 * height
    sx = np.arange(nx) / nx
    sy = np.arange(ny) / ny
    bottom = np.column_stack([-hw + width * sx, np.full(nx, -hh)])
    right = np.column_stack([np.full(ny, hw), -hh + height * sy])
    top = np.column_stack([hw - width * sx, np.full(nx, hh)])
    left = np.column_stack([np.full(ny, -hw), hh - height * sy])
    return Polygon(np.vstack([bottom, right, top, left]))


def rectangle(width: float = 1.8, height: float = 0.8) -> Polygon:
    return sampled_rectangle(width, height, nx=18, ny=8)


def beam(length: float = 2.0, height: float = 0.4, nx: int = 25, ny: int = 5) -> Polygon:
    return sampled_rectangle(length, height, nx=nx, ny=ny)


def bend(p: Polygon, radius: float = 3.0) -> Polygon:
    """Wrap a shape lying along the x axis around a circle of the given radius centred at (0, radius)."""
    x, y = p.vertices[:, 0], p.vertices[:, 1]
    r = radius - y
    return Polygon(np.column_stack([r * np.sin(x / radius), radius - r * np.cos(x / radius)]))


def star(arms: int = 5, r_out: float = 1.0, r_in: float = 0.5, samples_per_edge: int = 6) -> Polygon:
    """Star with its first tip on the positive x axis; every edge sampled uniformly."""
    j = np.arange(2 * arms)
    ang = np.pi * j / arms
    rad = np.where(j % 2 == 0, r_out, r_in)
    corners = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    nxt = np.roll(corners, -1, axis=0)
    s = np.arange(samples_per_edge) / samples_per_edge
    pts = corners[:, None, :] + s[None, :, None] * (nxt - corners)[:, None, :]
    return Polygon(pts.reshape(-1, 2))


def bend_arm(p: Polygon, pivot_x: float, tip_x: float, degrees: float) -> Polygon:
    """
    Articulate the arm along the positive x axis: points beyond pivot_x are
    rotated about (pivot_x, 0) by an angle growing linearly to `degrees` at tip_x.
    """
    v = p.vertices
    w = np.clip((v[:, 0] - pivot_x) / (tip_x - pivot_x), 0.0, 1.0)
    t = np.radians(degrees) * w
    dx, dy = v[:, 0] - pivot_x, v[:, 1]
    return Polygon(np.column_stack([pivot_x + np.cos(t) * dx - np.sin(t) * dy, np.sin(t) * dx + np.cos(t) * dy]))


def bent_star(arms: int = 5, r_out: float = 1.0, r_in: float = 0.5, samples_per_edge: int = 6,
              degrees: float = 20.0) -> Polygon:
    pivot = r_in * np.cos(np.pi / arms)
    return bend_arm(star(arms, r_out, r_in, samples_per_edge), pivot, r_out, degrees)


def random_star_shaped(rng: np.random.Generator, n: int = 24, r_min: float = 0.5, r_max: float = 1.0,
                       center=(0.0, 0.0)) -> Polygon:
    """Simple polygon from sorted random angles and random radii about a centre."""
    t = np.sort(rng.uniform(0.0, 2.0 * np.pi, n))
    t += np.linspace(0.0, 1e-6, n)  # keeps angles strictly increasing
    r = rng.uniform(r_min, r_max, n)
    return Polygon(np.column_stack([r * np.cos(t), r * np.sin(t)]) + np.asarray(center, dtype=float))
