"""Potential families, the total potential U = x + V, the classical symbol
and well-bottom location.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .kernels import fields


class PotentialError(ValueError):
    pass


class WellNotFound(RuntimeError):
    """Newton iteration found no critical point of U."""


@dataclass(frozen=True)
class HamiltonianParams:
    h: float
    B: float

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")
        # B = 0 is the plain Stark case; it is allowed for checks and controls.
        if not self.B >= 0:
            raise ValueError(f"B must be nonnegative, got {self.B}")


@dataclass(frozen=True)
class Zero:
    kind = "zero"


@dataclass(frozen=True)
class GaussianBump:
    """``A exp(-((x-x0)^2 + (y-y0)^2) / sigma^2)``."""
    A: float
    x0: float = 0.0
    y0: float = 0.0
    sigma: float = 1.0
    kind = "gaussian_bump"

    def __post_init__(self):
        if not self.sigma > 0:
            raise PotentialError("sigma must be positive")


@dataclass(frozen=True)
class EnvelopedQuadraticWell:
    """``(A + lam1 xt^2/2 + lam2 yt^2/2 - xt) exp(-(xt^2 + yt^2) / L^2)``.

    The ``-xt`` term cancels the Stark slope, so ``(x0, y0)`` is an exact
    critical point of U with energy ``x0 + A`` and Hessian
    ``diag(lam1, lam2) - 2A/L^2``.  ``L = inf`` gives the bare quadratic.
    """
    A: float = 0.0
    x0: float = 0.0
    y0: float = 0.0
    L: float = math.inf
    lambda1: float = 1.0
    lambda2: float = 1.0
    kind = "enveloped_quadratic_well"

    def __post_init__(self):
        if not (self.lambda1 > 0 and self.lambda2 > 0):
            raise PotentialError("lambda1 and lambda2 must be positive")
        if not self.L > 0:
            raise PotentialError("L must be positive")


_FAMILIES = {c.kind: c for c in (Zero, GaussianBump, EnvelopedQuadraticWell)}


@dataclass(frozen=True)
class PotentialSpec:
    terms: tuple = field(default_factory=tuple)
    # Strip half-width for complex x; the built-in families are entire.
    delta0: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    @property
    def kind(self):
        live = [t for t in self.terms if not isinstance(t, Zero)]
        if not live:
            return "zero"
        if len(live) == 1:
            return live[0].kind
        return "sum"

    def as_array(self):
        rows = []
        for t in self.terms:
            if isinstance(t, GaussianBump):
                rows.append((fields.KIND_BUMP, t.A, t.x0, t.y0, t.sigma, 0.0, 0.0))
            elif isinstance(t, EnvelopedQuadraticWell):
                rows.append((fields.KIND_WELL, t.A, t.x0, t.y0, t.L, t.lambda1, t.lambda2))
        if not rows:
            rows.append((fields.KIND_ZERO, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0))
        return np.array(rows, dtype=float)

    def total(self, x, y):
        return eval_total_potential(self, x, y)

    def to_records(self):
        out = []
        for t in self.terms:
            rec = {"kind": t.kind}
            rec.update(asdict(t))
            out.append(rec)
        return out

    @classmethod
    def from_records(cls, records):
        terms = []
        for rec in records:
            rec = dict(rec)
            kind = rec.pop("kind", None)
            if kind not in _FAMILIES:
                raise PotentialError(f"unknown potential kind {kind!r}")
            try:
                terms.append(_FAMILIES[kind](**{k: float(v) for k, v in rec.items()}))
            except TypeError as exc:
                raise PotentialError(f"bad parameters for {kind}: {exc}") from None
        return cls(tuple(terms))


@dataclass(frozen=True)
class CriticalPoint:
    x: float
    y: float
    E: float
    hessian: np.ndarray
    lambdas: tuple
    converged: bool
    nondegenerate: bool
    iterations: int
    grad_norm: float


def eval_potential(spec, x, y):
    """V alone; complex ``x`` is allowed inside the strip."""
    x = np.asarray(x)
    if np.iscomplexobj(x) and np.any(np.abs(x.imag) >= spec.delta0):
        raise PotentialError("complex x outside the analyticity strip")
    v, _, _ = fields.value_grad(spec.as_array(), x, np.asarray(y, dtype=float))
    return v


def eval_total_potential(spec, x, y):
    """U = x + V.  Real in, real out; complex x gives complex U."""
    x = np.asarray(x)
    u = x + eval_potential(spec, x, y)
    return u[()] if np.ndim(u) == 0 else u


def grad_hess(spec, x, y):
    terms = spec.as_array()
    _, vx, vy = fields.value_grad(terms, float(x), float(y))
    hxx, hxy, hyy = fields.hessian(terms, float(x), float(y))
    return (np.array([1.0 + vx, vy]),
            np.array([[hxx, hxy], [hxy, hyy]]))


def sym2_eigvals(H):
    """Closed-form eigenvalues of a real symmetric 2x2, ascending."""
    a, b, c = H[0, 0], H[0, 1], H[1, 1]
    m = 0.5 * (a + c)
    r = math.hypot(0.5 * (a - c), b)
    return (m - r, m + r)


def find_well_bottom(spec, seed=(0.0, 0.0), tol=1e-12, max_iter=50, max_step=1.0):
    """Newton iteration on grad U = 0 from ``seed``.

    Raises WellNotFound when the iteration stalls (singular Hessian or no
    convergence); a converged saddle or maximum comes back flagged
    ``nondegenerate=False``.
    """
    x, y = float(seed[0]), float(seed[1])
    g, H = grad_hess(spec, x, y)
    it = 0
    while np.linalg.norm(g) > tol:
        if it >= max_iter:
            raise WellNotFound(
                f"no critical point after {max_iter} Newton steps (|grad U| = {np.linalg.norm(g):.3e})")
        det = H[0, 0] * H[1, 1] - H[0, 1] ** 2
        scale = max(np.abs(H).max(), 1.0)
        if abs(det) <= 1e-14 * scale * scale:
            raise WellNotFound("singular Hessian during Newton iteration; no critical point")
        step = -np.linalg.solve(H, g)
        n = np.linalg.norm(step)
        if n > max_step:
            step *= max_step / n
        x += step[0]
        y += step[1]
        g, H = grad_hess(spec, x, y)
        it += 1
    lam = sym2_eigvals(H)
    return CriticalPoint(
        x=x, y=y, E=float(eval_total_potential(spec, x, y)), hessian=H,
        lambdas=lam, converged=True, nondegenerate=bool(lam[0] > 0),
        iterations=it, grad_norm=float(np.linalg.norm(g)))


def eval_symbol(params, spec, state):
    """p = (xi + B y)^2/2 + eta^2/2 + x + V(x, y)."""
    x, y, xi, eta = state
    u = xi + params.B * y
    return 0.5 * u * u + 0.5 * eta * eta + eval_total_potential(spec, x, y)
