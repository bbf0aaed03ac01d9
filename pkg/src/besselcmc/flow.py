"""Integration of d Phi = Phi xi and monodromy analysis.

Paths live in the w = log z coordinate, where a circuit of the puncture is
the straight segment w -> w + 2 pi i and the simple pole of dz/z becomes a
constant coefficient.  The integrator is an adaptive embedded Cash-Karp
5(4) pair stepping a whole family of independent 2x2 systems (all lambda
samples, and all rays of a surface sweep) in lockstep: the step size is
controlled by the worst error across the family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig, DEFAULT_CONFIG
from .loops import LambdaGrid, LaurentLoop, coeffs_to_samples
from .potentials import (
    PotentialSpec,
    DelaunayResidue,
    delaunay_residue_matrix,
    mu_eigenvalue,
)

__all__ = [
    "PathSpec",
    "FrameSolution",
    "MonodromyReport",
    "integrate_frame",
    "monodromy",
    "exp_delaunay_monodromy",
    "trace_law_check",
    "closing_report",
]


# ---------------------------------------------------------------------------
# paths

@dataclass(frozen=True)
class PathSpec:
    """Piecewise-straight path in the w = log z coordinate.

    segments: tuple of (w_start, w_end) pairs, consecutive and oriented.
    """

    segments: tuple[tuple[complex, complex], ...]

    def __post_init__(self) -> None:
        for (a0, a1), (b0, b1) in zip(self.segments, self.segments[1:]):
            if abs(a1 - b0) > 1e-12:
                raise ValueError("path segments are not consecutive")

    @classmethod
    def circle(cls, radius: float = 1.0, w0: complex | None = None,
               turns: int = 1) -> "PathSpec":
        """turns counterclockwise circuits at |z| = radius, from arg z = 0."""
        start = math.log(radius) if w0 is None else w0
        return cls(((start, start + 2j * np.pi * turns),))

    @classmethod
    def line(cls, w0: complex, w1: complex) -> "PathSpec":
        return cls(((w0, w1),))

    @classmethod
    def radial(cls, z_from: float, z_to: float, theta: float = 0.0) -> "PathSpec":
        """Ray between radii at fixed angle (radii positive)."""
        return cls(((math.log(z_from) + 1j * theta, math.log(z_to) + 1j * theta),))

    def check_poles(self, xi: PotentialSpec) -> None:
        # in the w chart the only reachable pole would be one with z != 0
        for pole, _ in xi.pole_locations:
            if pole == 0:
                continue
            for w0, w1 in self.segments:
                s = np.linspace(0.0, 1.0, 64)
                if np.min(np.abs(np.exp(w0 + s * (w1 - w0)) - pole)) < 1e-9:
                    raise ValueError(f"path passes through pole z={pole}")


@dataclass(frozen=True)
class FrameSolution:
    """Frames along a path: frames[k] is the (m, 2, 2) family at stations[k]."""

    stations: tuple
    frames: np.ndarray
    z0: complex
    phi0: np.ndarray
    det_drift: float

    def end(self) -> np.ndarray:
        return self.frames[-1]


@dataclass(frozen=True)
class MonodromyReport:
    """Residuals of the closing conditions and the trace law.

    identity_sign records which of M(1) = I or M(1) = -I was closer.
    trace_law_error is NaN when no residue data was supplied.
    """

    unitarity_error: float
    identity_error: float
    derivative_error: float
    trace_law_error: float = float("nan")
    identity_sign: int = 1

    def fields(self) -> dict:
        return {
            "unitarity_error": self.unitarity_error,
            "identity_error": self.identity_error,
            "derivative_error": self.derivative_error,
            "trace_law_error": self.trace_law_error,
        }


# ---------------------------------------------------------------------------
# Cash-Karp 5(4) tableau

_CK_C = np.array([0.0, 1 / 5, 3 / 10, 3 / 5, 1.0, 7 / 8])
_CK_A = [
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (3 / 10, -9 / 10, 6 / 5),
    (-11 / 54, 5 / 2, -70 / 27, 35 / 27),
    (1631 / 55296, 175 / 512, 575 / 13824, 44275 / 110592, 253 / 4096),
]
_CK_B5 = np.array([37 / 378, 0.0, 250 / 621, 125 / 594, 0.0, 512 / 1771])
_CK_B4 = np.array([2825 / 27648, 0.0, 18575 / 48384, 13525 / 55296, 277 / 14336, 1 / 4])
_CK_E = _CK_B5 - _CK_B4


def _rk_segment(coeff, y, s0, s1, rtol, atol=1e-14, h0=None):
    """Advance Y' = Y @ coeff(s) from s0 to s1 for a stacked family.

    coeff maps a scalar s to an array broadcastable against y
    (shape (..., 2, 2)).  A single adaptive step size serves the whole
    family; the error norm is the worst scaled RMS across members.
    Returns (y_end, last_h) so a caller chaining segments can reuse h.
    """
    span = s1 - s0
    if span == 0:
        return y, h0
    h = h0 if h0 is not None else span / 32.0
    h = math.copysign(min(abs(h), abs(span)), span)
    s = s0
    k = [None] * 6
    while (s1 - s) * np.sign(span) > 1e-15 * abs(span):
        if abs(h) > abs(s1 - s):
            h = s1 - s
        k[0] = y @ coeff(s)
        for i in range(1, 6):
            yi = y + h * sum(a * kj for a, kj in zip(_CK_A[i], k[:i]))
            k[i] = yi @ coeff(s + _CK_C[i] * h)
        y5 = y + h * sum(b * ki for b, ki in zip(_CK_B5, k) if b != 0.0)
        err = h * sum(e * ki for e, ki in zip(_CK_E, k) if e != 0.0)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
        ratio = np.sqrt(np.mean((np.abs(err) / scale) ** 2, axis=(-2, -1)))
        worst = float(ratio.max())
        if worst <= 1.0:
            s = s + h
            y = y5
        grow = 0.9 * worst ** -0.2 if worst > 0 else 5.0
        h = h * min(5.0, max(0.2, grow))
        if abs(h) < 1e-13 * abs(span):
            raise RuntimeError(f"step-size underflow at path parameter {s!r}")
    return y, h


def _integrate_w_line(xi, lam, w0, w1, y0, rtol, stations=None):
    """Integrate along w(s) = w0 + s (w1 - w0), s in [0, 1].

    w0, w1: arrays (B,) — one straight w-segment per batch member, shared
    parameterization.  y0: (B, m, 2, 2) initial frames (m = len(lam)).
    stations: increasing s values where output is wanted (1.0 implied).
    Returns array (S, B, m, 2, 2).
    """
    w0 = np.atleast_1d(np.asarray(w0, dtype=complex))
    w1 = np.atleast_1d(np.asarray(w1, dtype=complex))
    lam = np.asarray(lam, dtype=complex)
    dw = (w1 - w0)[:, None]

    def coeff(s):
        w = w0[:, None] + s * (w1 - w0)[:, None]   # (B, 1) -> broadcast with lam
        z = np.exp(w)
        return xi(z, lam[None, :]) * (z * dw)[..., None, None]

    ss = [float(t) for t in (stations if stations is not None else [])]
    if not ss or ss[-1] < 1.0:
        ss = ss + [1.0]
    out = np.empty((len(ss),) + y0.shape, dtype=complex)
    y, h, s_prev = y0.astype(complex), None, 0.0
    for i, s in enumerate(ss):
        y, h = _rk_segment(coeff, y, s_prev, s, rtol, h0=h)
        out[i] = y
        s_prev = s
    return out


def _phi0_samples(phi0, grid: LambdaGrid) -> np.ndarray:
    if phi0 is None:
        return np.tile(np.eye(2, dtype=complex), (grid.m, 1, 1))
    if isinstance(phi0, LaurentLoop):
        return coeffs_to_samples(phi0, grid)
    phi0 = np.asarray(phi0, dtype=complex)
    if phi0.shape == (2, 2):
        return np.tile(phi0, (grid.m, 1, 1))
    if phi0.shape != (grid.m, 2, 2):
        raise ValueError(f"initial frame has shape {phi0.shape}, "
                         f"expected ({grid.m}, 2, 2)")
    return phi0


def integrate_frame(xi: PotentialSpec, path: PathSpec, phi0,
                    grid: LambdaGrid, cfg: PipelineConfig = DEFAULT_CONFIG) -> FrameSolution:
    """Solve d Phi = Phi xi along the path for every lambda sample.

    phi0 may be None (identity), a constant matrix, an (m, 2, 2) sample
    family, or a LaurentLoop.
    """
    path.check_poles(xi)
    y = _phi0_samples(phi0, grid)[None]           # batch of one
    det0 = np.linalg.det(y[0])
    stations = [path.segments[0][0]]
    frames = [y[0].copy()]
    for w0, w1 in path.segments:
        y = _integrate_w_line(xi, grid.points, [w0], [w1], y, cfg.ode_tol)[-1]
        stations.append(w1)
        frames.append(y[0].copy())
    drift = float(np.abs(np.linalg.det(frames[-1]) - det0).max())
    return FrameSolution(tuple(stations), np.array(frames),
                         z0=complex(np.exp(path.segments[0][0])),
                         phi0=frames[0], det_drift=drift)


# ---------------------------------------------------------------------------
# monodromy

def closing_report(M: np.ndarray, grid: LambdaGrid,
                   res: DelaunayResidue | None = None) -> MonodromyReport:
    """Residuals of the closing conditions for a sampled monodromy family.

    M: (m, 2, 2) on the grid (lambda = 1 must be the first sample).
    The derivative at lambda = 1 is computed spectrally: sum_k k M_k over
    the Fourier coefficients.  With residue data the trace law residual
    |tr M + 2 cos(2 pi mu)| is included (the sign is fixed by the
    half-integer gauge flipping under a circuit: M_gauged = -M).
    """
    m = grid.m
    star = np.conj(np.transpose(M, (0, 2, 1)))
    unitarity = float(np.abs(M @ star - np.eye(2)).max())

    eye = np.eye(2)
    d_plus = float(np.abs(M[0] - eye).max())
    d_minus = float(np.abs(M[0] + eye).max())
    sign = 1 if d_plus <= d_minus else -1
    identity = min(d_plus, d_minus)

    hat = np.fft.fft(M, axis=0) / m
    dM1 = np.einsum("k,kab->ab", grid.wavenumbers().astype(float), hat)
    derivative = float(np.abs(dM1).max())

    trace_law = float("nan")
    if res is not None:
        mu = mu_eigenvalue(res, grid.points)
        tr = np.trace(M, axis1=1, axis2=2)
        trace_law = float(np.abs(tr + 2.0 * np.cos(2.0 * np.pi * mu)).max())

    return MonodromyReport(unitarity, identity, derivative, trace_law, sign)


def monodromy(xi: PotentialSpec, grid: LambdaGrid,
              cfg: PipelineConfig = DEFAULT_CONFIG, frame0=None,
              res: DelaunayResidue | None = None):
    """Monodromy M = Phi(after one circuit) Phi(start)^-1 at basepoint z0 = 1.

    frame0 defaults to the identity.  Starting from a different frame
    conjugates M; the normalized cylinder frame of
    potentials.cylinder_basepoint_frame turns the cylinder monodromy into
    the unitary loop -exp(2 pi i A).
    Returns (M samples, MonodromyReport).
    """
    sol = integrate_frame(xi, PathSpec.circle(), frame0, grid, cfg)
    M = sol.end() @ np.linalg.inv(sol.frames[0])
    return M, closing_report(M, grid, res)


def exp_delaunay_monodromy(res: DelaunayResidue, lam) -> np.ndarray:
    """Closed-form monodromy exp(2 pi i A(lambda)) of the pure residue system.

    For trace-free A with eigenvalues +-mu:
        exp(2 pi i A) = cos(2 pi mu) I + i (sin(2 pi mu)/mu) A,
    continued through mu = 0 by sin(2 pi mu)/mu -> 2 pi.  (Printed
    expansions of this formula sometimes drop the factor i on the second
    term; the exponential itself is what the trace law and the numeric
    oracle confirm.)
    """
    lam = np.asarray(lam, dtype=complex)
    scalar = lam.ndim == 0
    lam = np.atleast_1d(lam)
    A = delaunay_residue_matrix(res, lam)
    mu = mu_eigenvalue(res, lam)
    # sin(2 pi mu)/mu = 2 pi sinc(2 mu), exact at mu = 0
    coeff = 2.0 * np.pi * np.sinc(2.0 * mu)
    M = (np.cos(2.0 * np.pi * mu)[..., None, None] * np.eye(2)
         + 1j * coeff[..., None, None] * A)
    return M[0] if scalar else M


def trace_law_check(xi_c: PotentialSpec, res: DelaunayResidue,
                    grid: LambdaGrid, cfg: PipelineConfig = DEFAULT_CONFIG) -> float:
    """max over the grid of |tr M_c(lambda) + 2 cos(2 pi mu(lambda))|.

    The plus sign: rewriting the cylinder system in residue form uses the
    gauge diag(z^1/2, z^-1/2), which flips sign under one circuit, so the
    residue-side monodromy is MINUS the cylinder one.  At lambda = 1 this
    is pinned by tr M_c = 2 against 2 cos(pi) = -2.
    """
    M, _ = monodromy(xi_c, grid, cfg)
    mu = mu_eigenvalue(res, grid.points)
    tr = np.trace(M, axis1=1, axis2=2)
    return float(np.abs(tr + 2.0 * np.cos(2.0 * np.pi * mu)).max())
