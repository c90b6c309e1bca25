"""Numerical checkers for the matrix- and subspace-perturbation bounds.

Each checker evaluates both sides of one inequality on concrete inputs and
returns a :class:`~linjunta.reporting.CheckResult`.  ``bound_scale`` shrinks
the right-hand side (negative-control fixtures use 1e-3) and is recorded in
the result.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InputError
from .linalg import (
    Subspace,
    eigenband_subspace,
    eigenspace_at_least,
    frobenius,
    nearest_subspace_inside,
    operator_norm,
    orthonormalize_rows,
    require_symmetric,
    symmetric_spectrum,
    truncated_pseudoinverse,
)
from .reporting import CheckResult, mc_mean

PSD_RTOL = 1e-10


def require_psd(a, rtol: float = PSD_RTOL) -> np.ndarray:
    sym = require_symmetric(a)
    vals = np.linalg.eigvalsh(sym)
    scale = max(abs(float(vals[-1])), 1.0)
    if float(vals[0]) < -rtol * scale:
        raise InputError(f"matrix is not PSD: min eigenvalue {vals[0]:.3e}")
    return sym


def check_pseudoinverse_stability(a, a_tilde, eta: float, *, bound_scale: float = 1.0) -> CheckResult:
    """Stability of the truncated pseudoinverse under a PSD perturbation.

    lhs = ||(A_{>=eta}^-1 - At_{>=eta/2}^-1) P_V||_2 with V the eigenspace of
    A above eta; rhs = 20 ||A||_F sqrt(||A - At||_2) / eta^{5/2}.
    """
    a = require_psd(a)
    a_tilde = require_psd(a_tilde)
    v = eigenspace_at_least(a, eta)
    diff_op = truncated_pseudoinverse(a, eta) - truncated_pseudoinverse(a_tilde, eta / 2.0)
    lhs = operator_norm(diff_op @ v.projector())
    pert = operator_norm(a - a_tilde)
    rhs = 20.0 * frobenius(a) * math.sqrt(pert) / eta ** 2.5
    return CheckResult.from_sides(
        "pseudoinverse-stability",
        lhs,
        rhs,
        bound_scale=bound_scale,
        tol=1e-12,
        vacuous=v.dim == 0,
        details={"eta": eta, "perturbation_2norm": pert, "v_dim": v.dim},
    )


def check_davis_kahan(a, b, interval, delta: float, *, bound_scale: float = 1.0) -> CheckResult:
    """Sin-theta bound between separated eigenspaces of two symmetric matrices.

    E1 spans A's eigenvectors with eigenvalues in [lo, hi]; E2 spans B's
    eigenvectors with eigenvalues outside [lo - delta, hi + delta].  Checks
    ||P_E1 P_E2|| <= (pi / (2 delta)) ||A - B|| in operator and Frobenius norm.
    """
    a = require_symmetric(a)
    b = require_symmetric(b)
    lo, hi = float(interval[0]), float(interval[1])
    e1 = eigenband_subspace(a, lo, hi)
    spec_b = symmetric_spectrum(b)
    outside = (spec_b.eigenvalues < lo - delta) | (spec_b.eigenvalues > hi + delta)
    e2 = Subspace(b.shape[0], spec_b.eigenvectors[:, outside])
    vacuous = e1.dim == 0 or e2.dim == 0
    if vacuous:
        lhs_2 = lhs_f = 0.0
    else:
        prod = e1.projector() @ e2.projector()
        lhs_2 = operator_norm(prod)
        lhs_f = frobenius(prod)
    factor = math.pi / (2.0 * delta)
    rhs_2 = factor * operator_norm(a - b)
    rhs_f = factor * frobenius(a - b)
    op_ok = vacuous or lhs_2 <= rhs_2 * bound_scale + 1e-12
    fr_ok = vacuous or lhs_f <= rhs_f * bound_scale + 1e-12
    result = CheckResult.from_sides(
        "davis-kahan",
        lhs_2,
        rhs_2,
        bound_scale=bound_scale,
        tol=1e-12,
        vacuous=vacuous,
        details={
            "interval": [lo, hi],
            "delta": delta,
            "lhs_frobenius": lhs_f,
            "rhs_frobenius": rhs_f * bound_scale,
            "e1_dim": e1.dim,
            "e2_dim": e2.dim,
        },
    )
    result.passed = bool(op_ok and fr_ok)
    return result


def check_subspace_distance(e: Subspace, eprime: Subspace, *, bound_scale: float = 1.0) -> CheckResult:
    """Existence bound for a nearby subspace contained in E'.

    lhs = ||P_E - P_T||_F^2 for the constructed T inside E';
    rhs = 8 ||P_E P_{E'perp}||_F^2.
    """
    t = nearest_subspace_inside(e, eprime)
    pe = e.projector()
    leak = pe @ (np.eye(e.ambient_dim) - eprime.projector())
    lhs = frobenius(pe - t.projector()) ** 2
    rhs = 8.0 * frobenius(leak) ** 2
    return CheckResult.from_sides(
        "subspace-distance",
        lhs,
        rhs,
        bound_scale=bound_scale,
        tol=1e-12,
        details={"dim_e": e.dim, "dim_eprime": eprime.dim, "leak_op": operator_norm(leak)},
    )


def check_almost_isometry(b, n_hat, eta: float, *, bound_scale: float = 1.0) -> CheckResult:
    """Near-orthonormality of the implicit coordinate rows.

    With W built from the PSD estimate N_hat (retain eigenvalues >= eta/4,
    scale eigenvectors by inverse singular value):
    lhs = ||I_m - W B^T B W^T||_F <= (4/eta) ||N_hat - B^T B||_F = rhs.
    """
    b = np.asarray(b, dtype=float)
    w = coordinate_map_from_gram(n_hat, eta)
    m = w.shape[0]
    gram = b.T @ b
    lhs = frobenius(np.eye(m) - w @ gram @ w.T)
    rhs = (4.0 / eta) * frobenius(n_hat - gram)
    return CheckResult.from_sides(
        "almost-isometry",
        lhs,
        rhs,
        bound_scale=bound_scale,
        tol=1e-12,
        details={"retained_rank": m, "eta": eta},
    )


def coordinate_map_from_gram(n_hat, eta: float) -> np.ndarray:
    """Rows (1/d_i) v_i^T of the PSD Gram estimate, for d_i = sqrt(lambda_i) >= sqrt(eta)/2."""
    spec = symmetric_spectrum(n_hat)
    keep = spec.selection(eta / 4.0)
    lam = spec.eigenvalues[keep]
    v = spec.eigenvectors[:, keep]
    if lam.size == 0:
        return np.zeros((0, np.asarray(n_hat).shape[0]))
    return (v / np.sqrt(lam)).T


def check_approximate_projection(x, *, bound_scale: float = 1.0) -> CheckResult:
    """Row-orthonormalization is as close as the Gram defect: ||X-Y||_F <= ||XX^T - I||_F."""
    x = np.asarray(x, dtype=float)
    y = orthonormalize_rows(x)
    lhs = frobenius(x - y)
    rhs = frobenius(x @ x.T - np.eye(x.shape[0]))
    return CheckResult.from_sides(
        "approximate-projection",
        lhs,
        rhs,
        bound_scale=bound_scale,
        tol=1e-12,
        details={"shape": list(x.shape)},
    )


def check_almost_same_eigen(r, lam: float, delta: float, w, *, bound_scale: float = 1.0) -> CheckResult:
    """Pseudoinverse acts like 1/lambda on an eigenvalue band.

    For PSD R and w in the span of eigenvectors with eigenvalues in
    [lam - delta, lam + delta] (lam > 2 delta):
    lhs = ||R^-1 w - w/lam|| <= (2 delta / lam^2) ||w|| = rhs.
    """
    r = require_psd(r)
    w = np.asarray(w, dtype=float)
    spec = symmetric_spectrum(r)
    nonzero = spec.eigenvalues > 1e-12 * max(1.0, float(spec.eigenvalues[0]))
    v = spec.eigenvectors[:, nonzero]
    pinv = (v / spec.eigenvalues[nonzero]) @ v.T
    lhs = float(np.linalg.norm(pinv @ w - w / lam))
    rhs = (2.0 * delta / lam ** 2) * float(np.linalg.norm(w))
    return CheckResult.from_sides(
        "almost-same-eigen",
        lhs,
        rhs,
        bound_scale=bound_scale,
        tol=1e-12,
        details={"lambda": lam, "delta": delta},
    )


def check_almost_same_subspace(b, n_hat, eta: float, *, bound_scale: float = 1.0) -> CheckResult:
    """High-eigenvalue directions of B B^T are nearly fixed by B W^T W B^T.

    lhs = ||P_{E_{>=eta}(B B^T)} (I - B W^T W B^T)||_2.  The printed bound
    mixes norms of B^T B; both that reading and the all-operator-norm variant
    are reported, and the pass verdict uses the printed (larger) one.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    w = coordinate_map_from_gram(n_hat, eta)
    gram = b.T @ b
    proj = eigenspace_at_least(b @ b.T, eta).projector()
    lhs = operator_norm(proj @ (np.eye(n) - b @ w.T @ w @ b.T))
    pert = operator_norm(n_hat - gram)
    rhs_printed = 20.0 * frobenius(gram) * operator_norm(gram) * math.sqrt(pert) / eta ** 2.5
    rhs_operator = 20.0 * operator_norm(gram) ** 2 * math.sqrt(pert) / eta ** 2.5
    return CheckResult.from_sides(
        "almost-same-subspace",
        lhs,
        rhs_printed,
        bound_scale=bound_scale,
        tol=1e-12,
        details={
            "rhs_all_operator_variant": rhs_operator * bound_scale,
            "passed_all_operator_variant": bool(lhs <= rhs_operator * bound_scale + 1e-12),
            "eta": eta,
            "perturbation_2norm": pert,
        },
    )


def check_correlation_subspace_stability(
    f_batch,
    lip_f: float,
    g_batch,
    e: Subspace,
    eprime: Subspace,
    *,
    n_outer: int,
    n_inner: int,
    rng: np.random.Generator,
    bound_scale: float = 1.0,
    k_sigma: float = 3.0,
) -> CheckResult:
    """Correlation against subspace-averaged g is stable when E moves into E'.

    Monte-Carlo check of
    |E[f avg_E g] - E[f avg_T g]| <= 4 lip_f ||P_E P_{E'perp}||_F + k_sigma stderr
    for T the nearest subspace of E' to E.  Each outer point draws its own
    inner panel (iid terms, valid stderr); the two averages share that panel
    so their difference is low-variance.
    """
    n = e.ambient_dim
    t = nearest_subspace_inside(e, eprime)
    x = rng.standard_normal((n_outer, n))
    z = rng.standard_normal((n_outer, n_inner, n))

    def averaged(sub: Subspace) -> np.ndarray:
        # points[i, j] = P x_i + (I - P) z_ij, flattened for one batched call
        px = x @ sub.projector().T
        pz = z - z @ sub.projector().T
        pts = px[:, None, :] + pz
        vals = g_batch(pts.reshape(-1, n)).reshape(n_outer, n_inner)
        return vals.mean(axis=1)

    fx = f_batch(x)
    terms = fx * (averaged(e) - averaged(t))
    est = mc_mean(terms)
    leak_f = frobenius(e.projector() @ (np.eye(n) - eprime.projector()))
    rhs = 4.0 * lip_f * leak_f
    return CheckResult.from_sides(
        "correlation-subspace-stability",
        abs(est.value),
        rhs,
        bound_scale=bound_scale,
        tol=k_sigma * est.stderr,
        details={
            "estimate": est.value,
            "stderr": est.stderr,
            "n_outer": n_outer,
            "n_inner": n_inner,
            "leak_frobenius": leak_f,
        },
    )


def slope_of_loglog_fit(ms, errors) -> float:
    """Least-squares slope of log(error) against log(M)."""
    ms = np.asarray(ms, dtype=float)
    errors = np.asarray(errors, dtype=float)
    coef = np.polyfit(np.log(ms), np.log(errors), 1)
    return float(coef[0])


def check_covariance_concentration(
    grad_batch,
    true_second_moment,
    dim: int,
    *,
    m_grid,
    n_reps: int,
    rng: np.random.Generator,
    slope_target: float = -0.5,
    slope_tol: float = 0.2,
) -> CheckResult:
    """Empirical gradient covariance converges at the sqrt(log M / M) rate.

    For each M in m_grid, averages ||(1/M) sum Z_j Z_j^T - E[Z Z^T]||_2 over
    n_reps draws and fits a log-log slope, required to be within slope_tol
    of slope_target.
    """
    truth = np.asarray(true_second_moment, dtype=float)
    mean_errors = []
    for m in m_grid:
        errs = []
        for _ in range(n_reps):
            x = rng.standard_normal((int(m), dim))
            z = grad_batch(x)
            emp = z.T @ z / float(m)
            errs.append(operator_norm(emp - truth))
        mean_errors.append(float(np.mean(errs)))
    slope = slope_of_loglog_fit(m_grid, mean_errors)
    return CheckResult.from_sides(
        "covariance-concentration-slope",
        abs(slope - slope_target),
        slope_tol,
        details={
            "slope": slope,
            "m_grid": list(map(int, m_grid)),
            "mean_errors": mean_errors,
            "n_reps": n_reps,
        },
    )
