"""Well regions (disc or rectangle) and the smooth step used for blending."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels.montecarlo import REGION_DISC, REGION_RECT


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t)."""
    t = np.asarray(t, dtype=float)
    tc = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        f0 = np.where(tc > 0, np.exp(-1.0 / np.where(tc > 0, tc, 1.0)), 0.0)
        f1 = np.where(tc < 1, np.exp(-1.0 / np.where(tc < 1, 1.0 - tc, 1.0)), 0.0)
        s = f0 / (f0 + f1)
    s = np.where(t <= 0, 0.0, np.where(t >= 1, 1.0, s))
    return s[()] if s.ndim == 0 else s


def smooth_step_deriv(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    tc = np.where(inside, t, 0.5)
    f0 = np.exp(-1.0 / tc)
    f1 = np.exp(-1.0 / (1.0 - tc))
    d0 = f0 / tc ** 2
    d1 = -f1 / (1.0 - tc) ** 2
    den = f0 + f1
    ds = (d0 * den - f0 * (d0 + d1)) / den ** 2
    out = np.where(inside, ds, 0.0)
    return out[()] if out.ndim == 0 else out


# sup of the step's derivative (attained at t = 1/2)
SMOOTH_STEP_MAX_SLOPE = 2.0


@dataclass(frozen=True)
class Disc:
    cx: float
    cy: float
    R: float
    shape = "disc"

    def contains(self, x, y):
        return (np.asarray(x) - self.cx) ** 2 + (np.asarray(y) - self.cy) ** 2 <= self.R ** 2

    def bbox(self):
        return (self.cx - self.R, self.cx + self.R, self.cy - self.R, self.cy + self.R)

    def boundary(self, n=720):
        t = np.linspace(0, 2 * np.pi, n, endpoint=False)
        return self.cx + self.R * np.cos(t), self.cy + self.R * np.sin(t)

    def core_weight(self, x, y, ramp):
        """1 inside, 0 beyond ``ramp`` outside, smooth radial blend between."""
        r = np.hypot(np.asarray(x) - self.cx, np.asarray(y) - self.cy)
        return 1.0 - smooth_step((r - self.R) / ramp)

    def grown(self, d):
        return Disc(self.cx, self.cy, self.R + d)

    def as_array(self):
        return np.array([REGION_DISC, self.cx, self.cy, self.R, 0.0])

    def to_dict(self):
        return {"shape": "disc", "center": [self.cx, self.cy], "radius": self.R}


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float
    shape = "rect"

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("degenerate rectangle")

    def contains(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        return (self.x0 <= x) & (x <= self.x1) & (self.y0 <= y) & (y <= self.y1)

    def bbox(self):
        return (self.x0, self.x1, self.y0, self.y1)

    def boundary(self, n=720):
        k = max(n // 4, 2)
        s = np.linspace(0, 1, k, endpoint=False)
        xs = np.concatenate([self.x0 + (self.x1 - self.x0) * s, np.full(k, self.x1),
                             self.x1 - (self.x1 - self.x0) * s, np.full(k, self.x0)])
        ys = np.concatenate([np.full(k, self.y0), self.y0 + (self.y1 - self.y0) * s,
                             np.full(k, self.y1), self.y1 - (self.y1 - self.y0) * s])
        return xs, ys

    def core_weight(self, x, y, ramp):
        x = np.asarray(x)
        y = np.asarray(y)
        dx = np.maximum(np.maximum(self.x0 - x, x - self.x1), 0.0)
        dy = np.maximum(np.maximum(self.y0 - y, y - self.y1), 0.0)
        return (1.0 - smooth_step(dx / ramp)) * (1.0 - smooth_step(dy / ramp))

    def grown(self, d):
        return Rect(self.x0 - d, self.x1 + d, self.y0 - d, self.y1 + d)

    def as_array(self):
        return np.array([REGION_RECT, self.x0, self.x1, self.y0, self.y1])

    def to_dict(self):
        return {"shape": "rect", "x": [self.x0, self.x1], "y": [self.y0, self.y1]}


def region_from_dict(d):
    d = dict(d)
    shape = d.pop("shape", None)
    if shape == "disc":
        c = d.pop("center", [0.0, 0.0])
        r = d.pop("radius")
        out = Disc(float(c[0]), float(c[1]), float(r))
    elif shape == "rect":
        xs = d.pop("x")
        ys = d.pop("y")
        out = Rect(float(xs[0]), float(xs[1]), float(ys[0]), float(ys[1]))
    else:
        raise ValueError(f"unknown region shape {shape!r}")
    if d:
        raise ValueError(f"unknown region keys {sorted(d)}")
    return out
