"""Hamilton flow of the symbol, trapped/escaping classification and
trapped-set volumes."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .kernels import fields
from .kernels.flow import integrate_batch
from .kernels.montecarlo import count_hits
from .potential import eval_symbol, eval_total_potential

TRAPPED = "trapped"
ESCAPED = "escaped"
FAILED = "failed"
_STATUS = {0: TRAPPED, 1: ESCAPED, 2: FAILED}


class ClassicalState(NamedTuple):
    x: float
    y: float
    xi: float
    eta: float


@dataclass(frozen=True)
class TrajectoryVerdict:
    verdict: str
    time: float
    max_radius: float
    energy_drift: float


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    stderr: float
    method: str
    n_samples: int = 0
    seed: int | None = None


@dataclass(frozen=True)
class SamplingPlan:
    """Phase-space sample layout on the energy shell ``a <= p <= b``.

    Positions lie on an ``n_x`` by ``n_y`` grid over the given ranges; at each
    position ``n_energy`` energies (midpoints of ``[a, b]``) and ``n_angle``
    momentum directions are taken wherever the energy is allowed.
    """
    x_range: tuple
    y_range: tuple
    n_x: int = 8
    n_y: int = 8
    n_energy: int = 2
    n_angle: int = 4


def default_t_max(B):
    if B <= 0:
        raise ValueError("t_max must be given explicitly when B = 0")
    return 50.0 * 2.0 * math.pi / B


def hamilton_rhs(params, spec, state):
    x, y, xi, eta = state
    _, vx, vy = fields.value_grad(spec.as_array(), float(x), float(y))
    u = xi + params.B * y
    return np.array([u, eta, -1.0 - vx, -params.B * u - vy])


def integrate_states(params, spec, states, t_max=None, tol=1e-10, r_esc=20.0,
                     x_esc=math.inf):
    """Integrate a batch of initial states; returns (finals, verdicts)."""
    t_max = default_t_max(params.B) if t_max is None else t_max
    S0 = np.atleast_2d(np.asarray(states, dtype=float))
    if S0.size == 0:
        return [], []
    S, status, times, rmax = integrate_batch(spec.as_array(), params.B, S0, t_max,
                                             tol, r_esc, x_esc)
    p0 = eval_symbol(params, spec, S0.T)
    p1 = eval_symbol(params, spec, S.T)
    finals = [ClassicalState(*map(float, s)) for s in S]
    verdicts = [TrajectoryVerdict(_STATUS[int(st)], float(t), float(r), float(abs(e1 - e0)))
                for st, t, r, e0, e1 in zip(status, times, rmax, p0, p1)]
    return finals, verdicts


def integrate_flow(params, spec, state0, t_max=None, tol=1e-10, r_esc=20.0,
                   x_esc=math.inf):
    """Adaptive Dormand-Prince integration of one trajectory.

    Escape means ``|(x, y)| > r_esc`` or ``x < -x_esc``.  A verdict of
    ``failed`` marks step-size underflow, distinct from the other two.
    """
    finals, verdicts = integrate_states(params, spec, [tuple(state0)], t_max, tol,
                                        r_esc, x_esc)
    return finals[0], verdicts[0]


def shell_samples(params, spec, a, b, plan):
    """Initial states on the energy shell laid out by ``plan``."""
    if not a < b:
        raise ValueError("need a < b")
    xs = np.linspace(*plan.x_range, plan.n_x)
    ys = np.linspace(*plan.y_range, plan.n_y)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    U = eval_total_potential(spec, X, Y)
    energies = a + (b - a) * (np.arange(plan.n_energy) + 0.5) / plan.n_energy
    angles = 2 * np.pi * np.arange(plan.n_angle) / plan.n_angle
    out = []
    for x, y, u0 in zip(X.ravel(), Y.ravel(), U.ravel()):
        for E in energies:
            if E < u0:
                continue
            s = math.sqrt(2.0 * (E - u0))
            for ang in angles:
                u = s * math.cos(ang)
                out.append((x, y, u - params.B * y, s * math.sin(ang)))
    return np.array(out, dtype=float).reshape(-1, 4)


def classify_trapped_grid(params, spec, a, b, plan, r_esc, t_max=None, tol=1e-10,
                          x_esc=math.inf):
    """Sample the shell ``a <= p <= b`` and integrate every sample.

    Returns a list of ``(ClassicalState, TrajectoryVerdict)``; empty when no
    sampled position is energetically allowed.
    """
    S0 = shell_samples(params, spec, a, b, plan)
    if len(S0) == 0:
        return []
    _, verdicts = integrate_states(params, spec, S0, t_max, tol, r_esc, x_esc)
    return [(ClassicalState(*map(float, s)), v) for s, v in zip(S0, verdicts)]


def exterior_trapped(samples, region):
    """Samples outside ``region`` that did not escape (should be none)."""
    return [(s, v) for s, v in samples
            if not region.contains(s.x, s.y) and v.verdict != ESCAPED]


def _check_contained(spec, b, region):
    bx, by = region.boundary()
    ub = eval_total_potential(spec, bx, by)
    if np.min(ub) <= b:
        k = int(np.argmin(ub))
        raise ValueError(
            f"well not contained in region: U({bx[k]:.4g}, {by[k]:.4g}) = {ub[k]:.4g} <= b = {b}")


def trapped_volume_closed_form(spec, a, b, well_region, resolution=1200):
    """Vol = 2 pi * integral over the region of (b - max(a, U))_+ (midpoint rule).

    For fixed (x, y) the momentum fibre of ``a <= p <= b`` is an annulus of
    area ``2 pi (b - max(a, U))_+``; B only translates it.
    """
    if b <= a:
        return VolumeEstimate(0.0, 0.0, "closed_form")
    _check_contained(spec, b, well_region)
    x0, x1, y0, y1 = well_region.bbox()
    nx = ny = int(resolution)
    dx = (x1 - x0) / nx
    dy = (y1 - y0) / ny
    xs = x0 + dx * (np.arange(nx) + 0.5)
    total = 0.0
    for ystart in range(0, ny, 256):
        yrow = y0 + dy * (np.arange(ystart, min(ny, ystart + 256)) + 0.5)
        X, Y = np.meshgrid(xs, yrow, indexing="ij")
        U = eval_total_potential(spec, X, Y)
        w = np.clip(b - np.maximum(a, U), 0.0, None)
        total += float(np.sum(np.where(well_region.contains(X, Y), w, 0.0)))
    return VolumeEstimate(2.0 * math.pi * total * dx * dy, 0.0, "closed_form")


def phase_space_box(spec, B, b, region, pad=1e-9):
    """Bounding box in (x, y, xi, eta) of ``{p <= b, (x, y) in region}``."""
    x0, x1, y0, y1 = region.bbox()
    X, Y = np.meshgrid(np.linspace(x0, x1, 401), np.linspace(y0, y1, 401), indexing="ij")
    U = eval_total_potential(spec, X, Y)
    umin = float(np.min(np.where(region.contains(X, Y), U, np.inf)))
    # grid minimum can miss the true minimum slightly; widen by 5%
    s = math.sqrt(max(2.0 * (b - umin), 0.0)) * 1.05 + pad
    return ((x0, x1), (y0, y1), (-s - B * y1, s - B * y0), (-s, s))


CHUNK = 1 << 16


def _chunk_hits(args):
    terms, B, a, b, region_arr, lo, hi, seed, c, m = args
    rng = np.random.Generator(np.random.Philox(seed).jumped(c))
    S = lo + (hi - lo) * rng.random((m, 4))
    return count_hits(terms, B, a, b, region_arr, S)


def trapped_volume_monte_carlo(spec, a, b, box, n, seed, B=1.0, region=None,
                               threads=1):
    """Hit-or-miss volume of ``{a <= p <= b, (x, y) in region}`` inside ``box``.

    Samples are drawn in chunks of 65536; chunk ``c`` uses the Philox stream
    ``Philox(seed).jumped(c)``, so the estimate does not depend on ``threads``.
    """
    n = int(n)
    if n <= 0:
        return VolumeEstimate(0.0, math.inf, "monte_carlo", 0, seed)
    lo = np.array([r[0] for r in box], dtype=float)
    hi = np.array([r[1] for r in box], dtype=float)
    vol_box = float(np.prod(hi - lo))
    if region is None:
        from .regions import Rect
        region = Rect(lo[0], hi[0], lo[1], hi[1])
    terms = spec.as_array()
    jobs = []
    for c, start in enumerate(range(0, n, CHUNK)):
        jobs.append((terms, B, a, b, region.as_array(), lo, hi, seed, c, min(CHUNK, n - start)))
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            hits = sum(ex.map(_chunk_hits, jobs))
    else:
        hits = sum(map(_chunk_hits, jobs))
    frac = hits / n
    return VolumeEstimate(vol_box * frac, vol_box * math.sqrt(frac * (1 - frac) / n),
                          "monte_carlo", n, seed)
