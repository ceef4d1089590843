"""Exterior complex translation x -> phi(x, y) = x + theta (1 - chi0(x, y)).

The cutoff is a product ``chi0(x, y) = chi(x) chi(y)`` of one-dimensional
smooth plateaus, equal to 1 on the square ``|x|, |y| <= R0 + 1``.  Because
it depends on y, the pulled-back operator picks up a shear term:

    Q = (h m D_x + B y)^2 / 2 + (h (D_y - g D_x))^2 / 2 + phi + V(phi, y)

with ``m = 1 / phi_x`` and ``g = phi_y / phi_x``.  The Jacobian half-power of
the unitary version is dropped (a similarity, same eigenvalues).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .regions import SMOOTH_STEP_MAX_SLOPE, smooth_step, smooth_step_deriv


class DistortionError(ValueError):
    pass


@dataclass(frozen=True)
class CutoffProfile:
    R0: float
    w: float

    def __post_init__(self):
        if not (self.R0 > 0 and self.w > 0):
            raise DistortionError("R0 and w must be positive")

    @property
    def plateau(self):
        return self.R0 + 1.0

    @property
    def outer(self):
        return self.R0 + 1.0 + self.w

    @property
    def max_slope(self):
        return SMOOTH_STEP_MAX_SLOPE / self.w

    def chi1(self, t):
        return 1.0 - smooth_step((np.abs(t) - self.plateau) / self.w)

    def dchi1(self, t):
        t = np.asarray(t, dtype=float)
        return -np.sign(t) * smooth_step_deriv((np.abs(t) - self.plateau) / self.w) / self.w

    def __call__(self, x, y=0.0):
        return self.chi1(x) * self.chi1(y)

    def grad(self, x, y=0.0):
        return self.dchi1(x) * self.chi1(y), self.chi1(x) * self.dchi1(y)


def build_cutoff(R0, w):
    return CutoffProfile(float(R0), float(w))


@dataclass(frozen=True)
class DistortionParams:
    """``mode='fixed'`` uses ``theta``; ``mode='h-log-h'`` uses
    ``theta = -i M_tilde h log(1/h)`` (see :meth:`at`)."""
    R0: float
    w: float
    theta: complex = 0j
    mode: str = "fixed"
    M_tilde: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "theta", complex(self.theta))
        if self.mode not in ("fixed", "h-log-h"):
            raise DistortionError(f"unknown distortion mode {self.mode!r}")
        build_cutoff(self.R0, self.w)
        self.check_theta(self.theta)

    @property
    def cutoff(self):
        return build_cutoff(self.R0, self.w)

    def check_theta(self, theta, delta0=math.inf):
        # sup |theta d_x chi0| = |theta| * max slope; phi_x must stay away from 0
        if abs(theta) * self.cutoff.max_slope >= 1.0:
            raise DistortionError(
                f"|theta| * max|chi0'| = {abs(theta) * self.cutoff.max_slope:.3f} >= 1")
        if abs(theta.imag) >= delta0:
            raise DistortionError("|Im theta| exceeds the potential's strip")

    def at(self, h):
        """Concrete parameters for semiclassical parameter ``h``."""
        if self.mode == "fixed":
            return self
        th = -1j * self.M_tilde * h * math.log(1.0 / h)
        self.check_theta(th)
        return replace(self, theta=th, mode="fixed")

    def to_dict(self):
        return {"R0": self.R0, "ramp_width": self.w, "theta_re": self.theta.real,
                "theta_im": self.theta.imag, "mode": self.mode, "M_tilde": self.M_tilde}


def phi_theta(params, x, y=0.0):
    """Return ``(phi, phi_x, phi_y)`` at real points."""
    chi = params.cutoff
    th = params.theta
    c = chi(x, y)
    cx, cy = chi.grad(x, y)
    phi = x + th * (1.0 - c)
    px = 1.0 - th * cx
    if np.any(np.abs(th * cx) >= 1.0):
        raise DistortionError("|theta d_x chi0| >= 1: phi_x would vanish")
    return phi, px, -th * cy


@dataclass
class DistortedCoefficients:
    """Coefficient fields on the nodes ``(x_i, y_j)`` (arrays indexed [i, j]).

    ``m_half[i]`` and ``g_half[i]`` sit at ``x_i - dx/2`` (length n_x + 1 along
    x).  ``distorted`` marks nodes where ``chi0 < 1``.
    """
    x: np.ndarray
    y: np.ndarray
    theta: complex
    m: np.ndarray
    m_half: np.ndarray
    g: np.ndarray
    g_half: np.ndarray
    phi: np.ndarray
    W: np.ndarray
    By: np.ndarray
    distorted: np.ndarray

    @property
    def shape(self):
        return self.W.shape


def _coeffs_mg(params, x, y):
    """phi, m, g on the tensor grid; exactly (x, 1, 0) where undistorted."""
    X, Y = np.meshgrid(x, y, indexing="ij")
    phi, px, py = phi_theta(params, X, Y)
    plain = (phi - X) == 0
    m = np.where(plain, 1.0 + 0j, 1.0 / px).astype(complex)
    g = np.where(plain, 0j, py * m).astype(complex)
    phi = np.where(plain, X + 0j, phi).astype(complex)
    return phi, m, g, plain


def distorted_coefficients(params, potential, x, y, B):
    """Tabulate the coefficients of Q on the tensor grid ``x`` by ``y``.

    ``potential`` is anything with ``total(x, y)`` accepting complex x
    (a PotentialSpec or a surgery evaluator).  Nodes where the translation
    vanishes are evaluated in real arithmetic, so the plateau carries the
    undistorted values bit for bit.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = x[1] - x[0]
    th = params.theta
    delta0 = getattr(potential, "delta0", math.inf)
    params.check_theta(th, delta0)
    phi, m, g, plain = _coeffs_mg(params, x, y)
    xh = np.concatenate([x - 0.5 * dx, [x[-1] + 0.5 * dx]])
    _, m_half, g_half, _ = _coeffs_mg(params, xh, y)
    if np.any(np.abs(phi.imag) >= delta0):
        raise DistortionError("strip violation: |Im phi| >= delta0")
    X, Y = np.meshgrid(x, y, indexing="ij")
    W = np.asarray(potential.total(X, Y), dtype=complex)
    distorted = ~plain
    if distorted.any():
        W[distorted] = potential.total(phi[distorted], Y[distorted])
    return DistortedCoefficients(
        x=x, y=y, theta=th, m=m, m_half=m_half, g=g, g_half=g_half,
        phi=phi, W=W, By=B * Y, distorted=distorted)


def undistorted_coefficients(potential, x, y, B):
    """Identity coefficients (theta = 0) over a real potential."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    X, Y = np.meshgrid(x, y, indexing="ij")
    one = np.ones_like(X, dtype=complex)
    oneh = np.ones((len(x) + 1, len(y)), dtype=complex)
    return DistortedCoefficients(
        x=x, y=y, theta=0j, m=one, m_half=oneh, g=np.zeros_like(one),
        g_half=np.zeros_like(oneh), phi=X.astype(complex),
        W=np.asarray(potential.total(X, Y), dtype=complex), By=B * Y,
        distorted=np.zeros(X.shape, dtype=bool))


def validate_real_theta_similarity(grids, params, potential, hparams, k=4, shift=None):
    """Low eigenvalues of Q (real theta) against P on a refinement sequence.

    Returns a dict with per-grid eigenvalue lists, per-level differences and
    the observed decay order between consecutive grids.
    """
    from .assembly import assemble_operator
    from .eig import shift_invert_arnoldi, sort_by_real

    if params.theta.imag != 0:
        raise DistortionError("real theta required")
    rows = []
    for grid in grids:
        P = assemble_operator("P", grid, hparams, potential)
        cq = distorted_coefficients(params, potential, grid.x, grid.y, hparams.B)
        Q = assemble_operator("Q", grid, hparams, cq)
        z0 = shift if shift is not None else float(np.min(potential.total(grid.X, grid.Y))) - 0.01
        lp = sort_by_real(shift_invert_arnoldi(P, z0, k, tol=1e-13).pairs)
        lq = sort_by_real(shift_invert_arnoldi(Q, z0, k, tol=1e-13).pairs)
        ep = np.array([p.value for p in lp])
        eq = np.array([p.value for p in lq])
        rows.append({"n_x": grid.n_x, "n_y": grid.n_y, "dx": grid.dx, "P": ep, "Q": eq,
                     "diff": np.abs(eq - ep)})
    orders = []
    for r0, r1 in zip(rows, rows[1:]):
        with np.errstate(divide="ignore", invalid="ignore"):
            orders.append(np.log(r0["diff"] / r1["diff"]) / np.log(r0["dx"] / r1["dx"]))
    return {"rows": rows, "orders": orders}
