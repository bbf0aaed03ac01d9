"""Frame integration, monodromy closing conditions, and the trace law."""

import math

import numpy as np
import pytest

from besselcmc import (
    CylinderParams,
    DelaunayResidue,
    LambdaGrid,
    PathSpec,
    PipelineConfig,
    closing_report,
    cylinder_basepoint_frame,
    delaunay_ab,
    delaunay_residue_matrix,
    exp_delaunay_monodromy,
    integrate_frame,
    make_cylinder_potential,
    make_delaunay_potential,
    monodromy,
    mu_eigenvalue,
    trace_law_check,
)
from besselcmc.potentials import PotentialSpec

CFG = PipelineConfig(fourier_degree=4, lambda_samples=16)


def zero_potential():
    def evaluate(z, lam):
        z, lam = np.broadcast_arrays(np.asarray(z, dtype=complex),
                                     np.asarray(lam, dtype=complex))
        return np.zeros(z.shape + (2, 2), dtype=complex)

    return PotentialSpec(evaluate, (), "zero")


def _expm(X, order=24):
    """Dense matrix exponential by scaling-and-squaring a Taylor sum."""
    X = np.asarray(X, dtype=complex)
    n = max(0, int(math.ceil(math.log2(max(1.0, float(np.abs(X).max()))))) + 4)
    Y = X / 2.0**n
    out = np.eye(2, dtype=complex)
    term = np.eye(2, dtype=complex)
    for k in range(1, order + 1):
        term = term @ Y / k
        out = out + term
    for _ in range(n):
        out = out @ out
    return out


# -------------------------------------------------------------- integration


def test_zero_potential_keeps_frame():
    grid = LambdaGrid(8)
    rng = np.random.default_rng(0)
    phi0 = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    sol = integrate_frame(zero_potential(), PathSpec.line(0.0, 1.0 + 2.0j),
                          phi0, grid, CFG)
    assert np.abs(sol.end() - phi0).max() < 1e-12


def test_det_drift_small_on_radial_ray():
    xi = make_cylinder_potential(CylinderParams(1 / 3))
    sol = integrate_frame(xi, PathSpec.radial(1.0, 2.0), None, LambdaGrid(16),
                          PipelineConfig(fourier_degree=4, lambda_samples=16))
    assert sol.det_drift < 1e-10


def test_path_concatenation_matches_single_segment():
    xi = make_cylinder_potential(CylinderParams(-0.25))
    grid = LambdaGrid(16)
    one = integrate_frame(xi, PathSpec.line(0.0, math.log(2.0)), None, grid, CFG)
    mid = math.log(1.5)
    two = integrate_frame(
        xi, PathSpec(((0.0, mid), (mid, math.log(2.0)))), None, grid, CFG)
    assert np.abs(one.end() - two.end()).max() < 2e-9


def test_path_segments_must_be_consecutive():
    with pytest.raises(ValueError):
        PathSpec(((0.0, 1.0), (2.0, 3.0)))


def test_initial_frame_shape_checked():
    with pytest.raises(ValueError):
        integrate_frame(zero_potential(), PathSpec.circle(),
                        np.eye(2, dtype=complex)[None].repeat(4, 0),
                        LambdaGrid(8), CFG)


# ------------------------------------------------------- closed-form oracle


def test_delaunay_monodromy_matches_closed_form():
    res = DelaunayResidue(0.375, 0.125)
    grid = LambdaGrid(16)
    M, rep = monodromy(make_delaunay_potential(res), grid, CFG, res=res)
    want = exp_delaunay_monodromy(res, grid.points)
    assert np.abs(M - want).max() < 1e-8
    # the pure residue system closes on +exp(2 pi i A): its trace is
    # +2 cos(2 pi mu), the opposite sign from the gauged cylinder loop
    # that the report's trace_law_error is built for
    tr = np.trace(M, axis1=1, axis2=2)
    mu = mu_eigenvalue(res, grid.points)
    assert np.abs(tr - 2.0 * np.cos(2.0 * np.pi * mu)).max() < 1e-8
    assert abs(rep.trace_law_error - 4.0) < 1e-8


def test_exp_delaunay_at_lambda_one_is_minus_identity():
    # mu(1) = a + b = 1/2 for every admissible residue, so M(1) = -I exactly
    for a in (0.375, 0.25, 0.75):
        res = DelaunayResidue(a, 0.5 - a)
        M = exp_delaunay_monodromy(res, 1.0)
        assert np.abs(M + np.eye(2)).max() < 1e-15


def test_exp_delaunay_through_vanishing_residue():
    # a = b = 1/4: A(-1) = 0, mu = 0; the sinc continuation gives exactly I
    res = DelaunayResidue(0.25, 0.25)
    assert np.abs(delaunay_residue_matrix(res, -1.0)).max() == 0.0
    M = exp_delaunay_monodromy(res, -1.0)
    assert np.abs(M - np.eye(2)).max() == 0.0


def test_exp_delaunay_against_taylor_exponential():
    res = DelaunayResidue(0.375, 0.125)
    for lam in (1j, np.exp(0.3j), np.exp(-2.1j)):
        A = delaunay_residue_matrix(res, lam)
        want = _expm(2j * np.pi * A)
        assert np.abs(exp_delaunay_monodromy(res, lam) - want).max() < 1e-12


# ----------------------------------------------------------- cylinder runs


def test_cylinder_monodromy_is_identity_at_lambda_one():
    xi = make_cylinder_potential(CylinderParams(1 / 3))
    M, _ = monodromy(xi, LambdaGrid(16), CFG)
    assert np.abs(M[0] - np.eye(2)).max() < 1e-8


def test_dressed_cylinder_monodromy_unitary():
    p = CylinderParams(-0.25)
    grid = LambdaGrid(64)
    cfg = PipelineConfig(fourier_degree=16, lambda_samples=64)
    frame0 = cylinder_basepoint_frame(p, grid.points)
    _, rep = monodromy(make_cylinder_potential(p), grid, cfg, frame0=frame0)
    assert rep.unitarity_error < 1e-6
    # the identity-seeded run is only conjugate to the unitary loop
    _, raw = monodromy(make_cylinder_potential(p), grid, cfg)
    assert raw.unitarity_error > 1e-3


def test_closing_conditions_away_from_default_r():
    p = CylinderParams(1 / math.sqrt(2))
    grid = LambdaGrid(64)
    cfg = PipelineConfig(fourier_degree=16, lambda_samples=64)
    frame0 = cylinder_basepoint_frame(p, grid.points)
    _, rep = monodromy(make_cylinder_potential(p), grid, cfg, frame0=frame0)
    assert rep.identity_error < 1e-8
    assert rep.derivative_error < 1e-5


# ---------------------------------------------------------------- trace law


def test_trace_law_sign_pinned_at_lambda_one():
    p = CylinderParams(1 / 3)
    grid = LambdaGrid(16)
    xi = make_cylinder_potential(p)
    M, _ = monodromy(xi, grid, CFG)
    a, b = delaunay_ab(p)
    mu1 = mu_eigenvalue(DelaunayResidue(a, b), 1.0)
    # tr M(1) = 2 and 2 cos(2 pi mu(1)) = -2: only the plus sign closes
    assert abs(np.trace(M[0]) - 2.0) < 1e-8
    assert abs(np.trace(M[0]) + 2.0 * np.cos(2.0 * np.pi * mu1)) < 1e-8
    assert abs(np.trace(M[0]) - 2.0 * np.cos(2.0 * np.pi * mu1)) > 3.9


def test_trace_law_residual_small():
    p = CylinderParams(1 / 3)
    a, b = delaunay_ab(p)
    cfg = PipelineConfig(fourier_degree=16, lambda_samples=64)
    defect = trace_law_check(make_cylinder_potential(p), DelaunayResidue(a, b),
                             LambdaGrid(64), cfg)
    assert defect < 1e-6


def test_trace_law_wrong_residue_fails():
    p = CylinderParams(1 / 3)
    wrong = DelaunayResidue(0.75, -0.25)
    defect = trace_law_check(make_cylinder_potential(p), wrong,
                             LambdaGrid(16), CFG)
    assert defect > 0.1


# ------------------------------------------------------------ closing report


def test_closing_report_identity_family():
    grid = LambdaGrid(16)
    M = np.tile(np.eye(2, dtype=complex), (16, 1, 1))
    rep = closing_report(M, grid)
    assert rep.unitarity_error == 0.0
    assert rep.identity_error == 0.0
    assert rep.derivative_error < 1e-14
    assert rep.identity_sign == 1
    assert math.isnan(rep.trace_law_error)


def test_closing_report_spectral_derivative():
    grid = LambdaGrid(16)
    lam = grid.points
    M = np.zeros((16, 2, 2), dtype=complex)
    M[:, 0, 0] = lam
    M[:, 1, 1] = 1.0 / lam
    rep = closing_report(M, grid)
    # d/d-lambda of diag(lam, 1/lam) at lam = 1 is diag(1, -1)
    assert abs(rep.derivative_error - 1.0) < 1e-12
    assert rep.identity_error < 1e-14
    assert rep.unitarity_error < 1e-14


def test_closing_report_sign_tracking():
    grid = LambdaGrid(8)
    M = np.tile(-np.eye(2, dtype=complex), (8, 1, 1))
    rep = closing_report(M, grid)
    assert rep.identity_sign == -1
    assert rep.identity_error == 0.0


# ------------------------------------------------------------- invariances


def test_monodromy_conjugation_covariance():
    p = CylinderParams(1 / 3)
    grid = LambdaGrid(16)
    xi = make_cylinder_potential(p)
    M0, _ = monodromy(xi, grid, CFG)
    C = np.array([[1.0, 0.7], [0.3, 1.21]], dtype=complex)  # det = 1
    C /= np.sqrt(np.linalg.det(C))
    MC, _ = monodromy(xi, grid, CFG, frame0=C)
    want = C @ M0 @ np.linalg.inv(C)
    assert np.abs(MC - want).max() < 1e-8


def test_tighter_tolerance_reduces_defect():
    res = DelaunayResidue(0.375, 0.125)
    grid = LambdaGrid(16)
    xi = make_delaunay_potential(res)
    want = exp_delaunay_monodromy(res, grid.points)
    defects = []
    for tol in (1e-4, 1e-6, 1e-8):
        cfg = PipelineConfig(fourier_degree=4, lambda_samples=16, ode_tol=tol)
        M, _ = monodromy(xi, grid, cfg)
        defects.append(np.abs(M - want).max())
    assert defects[2] < defects[0] / 10
    assert defects[2] < 1e-8
