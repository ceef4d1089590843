"""Well surgery (fill the well / flatten the exterior), harmonic frequencies,
predicted levels and Weyl counts."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .potential import eval_total_potential

FILL = "fill"
FLATTEN = "flatten"


class SurgeryError(ValueError):
    pass


@dataclass(frozen=True)
class WellSurgery:
    """Total-potential evaluator obtained from ``base`` by blending with a
    constant ``level`` across a smooth collar of width ``ramp`` around
    ``region`` (the core).

    ``fill``: level on the core, base potential beyond the collar.
    ``flatten``: base potential on the core, level beyond the collar.
    """
    base: object
    region: object
    level: float
    ramp: float
    mode: str

    delta0 = math.inf

    def weight(self, x, y):
        return self.region.core_weight(x, y, self.ramp)

    def total(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y, dtype=float)
        xr = x.real if np.iscomplexobj(x) else x
        w = self.weight(xr, y)
        if np.iscomplexobj(x):
            bad = (w > 0) & (x.imag != 0)
            if np.any(bad):
                raise SurgeryError("complex evaluation inside the surgery collar")
        if self.mode == FILL:
            keep = w == 0
            u = eval_total_potential(self.base, np.where(keep, x, xr), y)
            out = np.where(keep, u, np.where(w == 1, self.level,
                                             w * self.level + (1.0 - w) * u))
        else:
            keep = w == 1
            u = eval_total_potential(self.base, xr, y)
            out = np.where(keep, u, np.where(w == 0, self.level,
                                             w * u + (1.0 - w) * self.level))
        return out[()] if np.ndim(out) == 0 else out

    def outer_extent(self):
        """Bounding box of the collar's outer edge."""
        x0, x1, y0, y1 = self.region.bbox()
        r = self.ramp
        return (x0 - r, x1 + r, y0 - r, y1 + r)

    def to_dict(self):
        return {"region": self.region.to_dict(), "level": self.level, "ramp": self.ramp,
                "mode": self.mode}


def check_region(spec, region, b):
    """Reject regions whose boundary dips to ``U <= b`` (the sublevel
    component of the well would leak out)."""
    bx, by = region.boundary()
    ub = eval_total_potential(spec, bx, by)
    k = int(np.argmin(ub))
    if ub[k] <= b:
        raise SurgeryError(
            f"region does not contain the well's sublevel set: U = {ub[k]:.4g} <= b = {b} "
            f"at ({bx[k]:.4g}, {by[k]:.4g})")


def barrier_height(spec, region):
    """Lowest value of U on the region boundary (a barrier estimate)."""
    bx, by = region.boundary(2880)
    return float(np.min(eval_total_potential(spec, bx, by)))


def default_delta(spec, region, b):
    return 0.05 * (barrier_height(spec, region) - b)


def _surgery(spec, region, level, ramp, mode, b):
    if not ramp > 0:
        raise SurgeryError("ramp must be positive")
    if b is not None:
        if not level > b:
            raise SurgeryError("level must exceed b")
        check_region(spec, region, b)
    return WellSurgery(spec, region, float(level), float(ramp), mode)


def fill_well(spec, region, level, ramp, b=None):
    """U^ext: the well raised to ``level`` (pass ``b`` to validate the region)."""
    return _surgery(spec, region, level, ramp, FILL, b)


def flatten_exterior(spec, region, level, ramp, b=None):
    """U^int: U on the well core, ``level`` outside."""
    return _surgery(spec, region, level, ramp, FLATTEN, b)


# ---------------------------------------------------------------- harmonic

def harmonic_frequencies(B, lam1, lam2):
    """(alpha1, alpha2), alpha1 <= alpha2, roots of
    a^4 - (B^2 + lam1 + lam2) a^2 + lam1 lam2 = 0."""
    if not (lam1 > 0 and lam2 > 0):
        raise ValueError("curvatures must be positive")
    s = B * B + lam1 + lam2
    p = lam1 * lam2
    r = math.sqrt(max(s * s - 4.0 * p, 0.0))
    a2 = 0.5 * (s + r)
    a1 = 2.0 * p / (s + r)  # cancellation-free form of (s - r)/2
    return math.sqrt(a1), math.sqrt(a2)


def z_independent_hint(a1, a2, max_den=50, tol=1e-9):
    """False when a1/a2 sits within ``tol`` of a fraction with denominator
    <= ``max_den`` (a heuristic, never enforced)."""
    ratio = a1 / a2
    frac = Fraction(ratio).limit_denominator(max_den)
    return abs(ratio - float(frac)) > tol


@dataclass(frozen=True)
class HarmonicModel:
    E: float
    B: float
    lam1: float
    lam2: float
    alpha1: float
    alpha2: float
    z_independent: bool

    @classmethod
    def from_bottom(cls, cp, B):
        a1, a2 = harmonic_frequencies(B, *cp.lambdas)
        return cls(cp.E, B, cp.lambdas[0], cp.lambdas[1], a1, a2, z_independent_hint(a1, a2))

    def levels(self, h, ceiling):
        return predicted_levels(self.E, self.alpha1, self.alpha2, h, ceiling)

    def lowest(self, h, n):
        """The ``n`` lowest predicted levels."""
        ceiling = self.E + h * (self.alpha1 + self.alpha2)
        while True:
            lv = self.levels(h, ceiling)
            if len(lv) >= n:
                return lv[:n]
            ceiling = self.E + 2.0 * (ceiling - self.E)

    def to_dict(self):
        return {"E": self.E, "B": self.B, "lambda1": self.lam1, "lambda2": self.lam2,
                "alpha1": self.alpha1, "alpha2": self.alpha2,
                "z_independent_hint": self.z_independent}


def predicted_levels(E, a1, a2, h, ceiling):
    """All ``E + h (a1 (k1 + 1/2) + a2 (k2 + 1/2)) <= ceiling`` ascending.

    Values within 1e-12 (relative) count as ties and are ordered by k2.
    """
    out = []
    k2 = 0
    while E + h * (0.5 * a1 + a2 * (k2 + 0.5)) <= ceiling:
        k1 = 0
        while True:
            v = E + h * (a1 * (k1 + 0.5) + a2 * (k2 + 0.5))
            if v > ceiling:
                break
            out.append((k1, k2, v))
            k1 += 1
        k2 += 1
    scale = max(abs(ceiling), abs(E), 1e-300)
    out.sort(key=lambda t: (t[2], t[1]))
    # merge near-ties into k2 order
    i = 0
    while i < len(out):
        j = i + 1
        while j < len(out) and out[j][2] - out[i][2] <= 1e-12 * scale:
            j += 1
        out[i:j] = sorted(out[i:j], key=lambda t: (t[1], t[0]))
        i = j
    return out


def weyl_count_prediction(vol, h):
    return vol / (2.0 * math.pi * h) ** 2
