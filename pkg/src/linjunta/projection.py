"""Gradient-based PCA through black-box queries.

The pipeline: sample anchor points, estimate the Gram matrix of smoothed
gradients pairwise, project it to the nearest PSD matrix, spectrally
truncate, and emit the implicit coordinate map W (rows (1/d_i) v_i^T).  The
rows of W B^T (B = matrix of true smoothed gradients) are then nearly an
orthonormal basis of the informative subspace, without ever materializing
n-dimensional gradients in the query path.

Three Gram modes:

* ``estimated``  - entries from the pair-correlation estimator (real queries);
* ``analytic``   - B from the target's closed forms, with seeded symmetric
  noise of scale eps_prime injected into B^T B (simulates estimator error
  with zero queries; isolates the linear algebra from sampling effects);
* eps_prime = 0 in analytic mode gives the exact-Gram path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .checks import check_almost_isometry, coordinate_map_from_gram
from .errors import CapacityError, InputError, ParameterError
from .linalg import Subspace, eigenspace_at_least, frobenius, operator_norm, symmetric_spectrum
from .oracle import (
    QueryOracle,
    rng_stream,
    sample_gaussian,
    spec_eval,
    spec_grad,
    spec_smoothed_eval,
    spec_smoothed_grad,
)
from .reporting import CheckResult, mc_mean
from .smoothing import grad_inner_product, gradient_coords_batch

FEASIBLE_M_CAP = 100_000


@dataclass(frozen=True)
class TheoryParams:
    """The projection algorithm's own parameter schedule.

    delta = 1/20, eta = nu^2 / (100 k), M = ceil((L^2/eta^2) log(L delta/eta)),
    eps_prime = eta^5 nu^2 / (L^8 C0^2 M^6) with C0 = 1e6.  These are computed
    verbatim; M is astronomically large for any useful inputs, so `feasible`
    flags whether the schedule is runnable.
    """

    L: float
    nu: float
    k: int
    delta: float = 1.0 / 20.0
    C0: float = 1e6
    M: int = field(init=False)
    eta: float = field(init=False)
    eps_prime: float = field(init=False)
    feasible: bool = field(init=False)

    def __post_init__(self):
        if self.L <= 0 or self.nu <= 0 or self.k < 1:
            raise ParameterError("L, nu must be positive and k >= 1")
        eta = self.nu ** 2 / (100.0 * self.k)
        m_real = (self.L ** 2 / eta ** 2) * math.log(self.L * self.delta / eta)
        m = int(math.ceil(m_real))
        eps_prime = eta ** 5 * self.nu ** 2 / (self.L ** 8 * self.C0 ** 2 * float(m) ** 6)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "M", m)
        object.__setattr__(self, "eps_prime", eps_prime)
        object.__setattr__(self, "feasible", m <= FEASIBLE_M_CAP)

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "nu": self.nu,
            "k": self.k,
            "delta": self.delta,
            "C0": self.C0,
            "M": self.M,
            "eta": self.eta,
            "eps_prime": self.eps_prime,
            "feasible": self.feasible,
        }


def theory_params(L: float, nu: float, k: int) -> TheoryParams:
    return TheoryParams(L=float(L), nu=float(nu), k=int(k))


@dataclass(frozen=True)
class PracticalParams:
    """Desk-scale override of the theory schedule."""

    M: int
    eta: float
    eps_prime: float
    t: float
    seed: int = 0

    def __post_init__(self):
        if self.M < 1 or self.eta <= 0 or self.eps_prime < 0 or self.t <= 0:
            raise ParameterError("practical parameters must be positive (eps_prime >= 0)")

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "eta": self.eta,
            "eps_prime": self.eps_prime,
            "t": self.t,
            "seed": self.seed,
        }


Params = Union[TheoryParams, PracticalParams]


@dataclass
class ProjectionOutput:
    """Anchor points plus the implicit coordinate map."""

    points: np.ndarray  # (M, n)
    w_hat: np.ndarray  # (m, M)
    m: int
    gram_raw: np.ndarray  # symmetric estimate before the PSD projection
    gram_psd: np.ndarray  # Frobenius-nearest PSD matrix
    eigenvalues: np.ndarray  # of gram_psd, descending
    eta: float
    t: float
    mode: str
    seed: int
    queries: int
    grad_matrix: Optional[np.ndarray] = None  # (n, M) columns, analytic mode only
    defect_bound: Optional[float] = None  # (4/eta) ||N - B^T B||_F when B known
    budget_log: dict = field(default_factory=dict)

    @property
    def w_operator_norm(self) -> float:
        return operator_norm(self.w_hat) if self.m else 0.0

    def implicit_basis(self, grad_matrix: Optional[np.ndarray] = None) -> np.ndarray:
        """Rows of W B^T: the near-orthonormal basis of the recovered subspace."""
        b = self.grad_matrix if grad_matrix is None else np.asarray(grad_matrix, float)
        if b is None:
            raise InputError("gradient matrix unavailable: supply one explicitly")
        return self.w_hat @ b.T

    def to_dict(self) -> dict:
        return {
            "points": self.points,
            "w_hat": self.w_hat,
            "m": self.m,
            "gram_raw": self.gram_raw,
            "gram_psd": self.gram_psd,
            "eigenvalues": self.eigenvalues,
            "eta": self.eta,
            "t": self.t,
            "mode": self.mode,
            "seed": self.seed,
            "queries": self.queries,
            "defect_bound": self.defect_bound,
            "budget_log": self.budget_log,
        }


def _symmetric_noise(rng: np.random.Generator, size: int, scale: float) -> np.ndarray:
    g = rng.standard_normal((size, size))
    upper = np.triu(g)
    return scale * (upper + np.triu(g, 1).T)


def perturbed_gram_output(out: ProjectionOutput, noise_scale: float, seed: int) -> ProjectionOutput:
    """Rebuild the coordinate map after adding symmetric noise to the Gram.

    Supports perturbation experiments (near-isometry defect growth) without
    rerunning any queries.
    """
    noisy = out.gram_raw + _symmetric_noise(rng_stream(seed, 31), out.gram_raw.shape[0], noise_scale)
    spec_psd = symmetric_spectrum(noisy)
    clipped = np.clip(spec_psd.eigenvalues, 0.0, None)
    gram_psd = (spec_psd.eigenvectors * clipped) @ spec_psd.eigenvectors.T
    w_hat = coordinate_map_from_gram(gram_psd, out.eta)
    return ProjectionOutput(
        points=out.points,
        w_hat=w_hat,
        m=w_hat.shape[0],
        gram_raw=noisy,
        gram_psd=gram_psd,
        eigenvalues=np.sort(clipped)[::-1],
        eta=out.eta,
        t=out.t,
        mode=out.mode + "+noise",
        seed=out.seed,
        queries=out.queries,
        grad_matrix=out.grad_matrix,
        defect_bound=None
        if out.grad_matrix is None
        else (4.0 / out.eta) * frobenius(gram_psd - out.grad_matrix.T @ out.grad_matrix),
        budget_log={**out.budget_log, "injected_noise_scale": noise_scale},
    )


def implicit_projection(
    f: QueryOracle,
    t: float,
    params: Params,
    seed: int,
    *,
    mode: str = "estimated",
    max_pair_samples: Optional[int] = None,
) -> ProjectionOutput:
    """Run the gradient-PCA projection and return the implicit coordinate map.

    The Gram entry (i, j) is estimated once per unordered pair and mirrored;
    the diagonal uses the same estimator at x_i = x_j.  Retained rank m may
    be zero, in which case downstream searches degenerate to constants.
    """
    if mode not in ("estimated", "analytic"):
        raise ParameterError(f"unknown gram mode {mode!r}")
    if isinstance(params, TheoryParams) and not params.feasible:
        raise CapacityError(
            f"theory schedule requires M = {params.M} anchor points; "
            f"cap is {FEASIBLE_M_CAP} (use PracticalParams)"
        )
    m_points = params.M
    eta = params.eta
    eps_prime = params.eps_prime
    delta = params.delta if isinstance(params, TheoryParams) else 1.0 / 20.0
    points = sample_gaussian(f.dim, m_points, seed, stream=29)
    start = f.query_count
    budget_log: dict = {"mode": mode, "eps_prime": eps_prime, "pair_delta": delta / m_points ** 2}
    grad_matrix = None

    if mode == "analytic":
        # Exact Gram from closed-form gradients: isolates the linear algebra
        # from estimator noise.  Perturbation experiments add noise to the
        # Gram explicitly (see perturbed_gram_output).
        spec = f.metadata.spec
        if spec is None:
            raise InputError("analytic gram mode needs an oracle built from a spec")
        grad_matrix = spec_smoothed_grad(spec, t, points).T  # (n, M)
        gram_raw = grad_matrix.T @ grad_matrix
    else:
        gram_raw = np.zeros((m_points, m_points))
        pair_delta = delta / m_points ** 2
        pair_queries = []
        pair = 0
        for i in range(m_points):
            for j in range(i, m_points):
                est = grad_inner_product(
                    f,
                    t,
                    points[i],
                    points[j],
                    eps=eps_prime,
                    delta=pair_delta,
                    seed=seed,
                    stream=pair,
                    max_samples=max_pair_samples,
                )
                gram_raw[i, j] = gram_raw[j, i] = est.value
                pair_queries.append(est.queries_used)
                pair += 1
        budget_log["pair_queries_total"] = int(np.sum(pair_queries))
        budget_log["pair_queries_max"] = int(np.max(pair_queries))

    spec_psd = symmetric_spectrum(gram_raw)
    clipped = np.clip(spec_psd.eigenvalues, 0.0, None)
    gram_psd = (spec_psd.eigenvectors * clipped) @ spec_psd.eigenvectors.T
    w_hat = coordinate_map_from_gram(gram_psd, eta)
    out = ProjectionOutput(
        points=points,
        w_hat=w_hat,
        m=w_hat.shape[0],
        gram_raw=gram_raw,
        gram_psd=gram_psd,
        eigenvalues=np.sort(clipped)[::-1],
        eta=eta,
        t=t,
        mode=mode,
        seed=seed,
        queries=f.query_count - start,
        grad_matrix=grad_matrix,
        budget_log=budget_log,
    )
    if grad_matrix is not None:
        out.defect_bound = (4.0 / eta) * frobenius(gram_psd - grad_matrix.T @ grad_matrix)
    norm = out.w_operator_norm
    if norm > 2.0 / math.sqrt(eta) + 1e-9:
        raise RuntimeError(
            f"coordinate map norm {norm:.4g} exceeds 2/sqrt(eta) = {2/math.sqrt(eta):.4g}"
        )
    return out


@dataclass
class CoordsEstimate:
    """Implicit coordinates W Xi for one or many targets, with its error bound."""

    values: np.ndarray  # (m,) or (m, T)
    error_bound: float  # || W Xi - W B^T z || <= 2 theta sqrt(m) ||W||_2
    queries: int
    info: dict = field(default_factory=dict)


def implicit_coords(
    out: ProjectionOutput,
    f: QueryOracle,
    t: float,
    targets,
    theta: float,
    delta: float,
    seed: int,
) -> CoordsEstimate:
    """Coordinates of targets in the recovered subspace frame.

    Estimates Xi_i ~= <grad S_t f(x_i), z> for each anchor within 2 theta and
    returns W Xi with the bound 2 theta sqrt(m) ||W||_2 attached.  In analytic
    mode Xi = B^T z exactly and the bound is zero.
    """
    z = np.atleast_2d(np.asarray(targets, dtype=float))
    single = np.asarray(targets).ndim == 1
    if out.m == 0:
        values = np.zeros((0,)) if single else np.zeros((0, z.shape[0]))
        return CoordsEstimate(values, 0.0, 0, {"m": 0})
    if out.grad_matrix is not None:
        xi = out.grad_matrix.T @ z.T  # (M, T)
        bound = 0.0
        queries = 0
        info = {"mode": "analytic"}
    else:
        xi, info = gradient_coords_batch(
            f, t, out.points, z, accuracy=2.0 * theta, delta=delta, seed=seed
        )
        queries = info["queries_used"]
        bound = 2.0 * theta * math.sqrt(out.m) * out.w_operator_norm
        info["mode"] = "estimated"
    values = out.w_hat @ xi
    if single:
        values = values[:, 0]
    return CoordsEstimate(values, bound, queries, info)


def isometry_defect(out: ProjectionOutput, grad_matrix: Optional[np.ndarray] = None) -> CheckResult:
    """Report ||I_m - W B^T B W^T||_F against its (4/eta)||N - B^T B||_F bound."""
    b = out.grad_matrix if grad_matrix is None else np.asarray(grad_matrix, float)
    if b is None:
        raise InputError("isometry defect needs the true gradient matrix")
    if b.shape[1] != out.points.shape[0]:
        raise InputError(
            f"gradient matrix has {b.shape[1]} columns; expected {out.points.shape[0]}"
        )
    return check_almost_isometry(b, out.gram_psd, out.eta)


# ---------------------------------------------------------------------------
# Analytic Lipschitz functions and the spectral-truncation correlation check
# ---------------------------------------------------------------------------


@dataclass
class AnalyticFunction:
    """A differentiable function with batched value/gradient closed forms."""

    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    dim: int


def smoothed_spec_function(spec, t: float) -> AnalyticFunction:
    """The noise-smoothed spec as an analytic Lipschitz function."""
    from .oracle import noise_scale, spec_dim

    lip_1d = 2.0 / math.sqrt(2.0 * math.pi) * math.exp(-t) / noise_scale(t)
    dirs = getattr(spec, "directions", None)
    arity = 1 if dirs is None else np.atleast_2d(dirs).shape[0]
    return AnalyticFunction(
        value=lambda pts: spec_smoothed_eval(spec, t, pts),
        grad=lambda pts: spec_smoothed_grad(spec, t, pts),
        lipschitz=lip_1d * math.sqrt(arity),
        dim=spec_dim(spec),
    )


def tanh_spec_function(spec) -> AnalyticFunction:
    """A tanh-product junta as an analytic Lipschitz function."""
    from .oracle import TanhJunta, spec_dim

    if not isinstance(spec, TanhJunta):
        raise InputError("expected a tanh-product spec")
    return AnalyticFunction(
        value=lambda pts: spec_eval(spec, pts),
        grad=lambda pts: spec_grad(spec, pts),
        lipschitz=float(np.sum(spec.gains)),
        dim=spec_dim(spec),
    )


def truncation_preserves_correlation_check(
    phi: AnalyticFunction,
    k: int,
    eta: float,
    m_points: int,
    h: QueryOracle,
    e_choice: Union[str, Subspace],
    n_outer: int,
    n_inner: int,
    seed: int,
    *,
    bound_scale: float = 1.0,
) -> CheckResult:
    """Truncating to the empirical gradient eigenspace preserves junta correlation.

    Builds A = (1/M) sum grad phi(x_j) grad phi(x_j)^T, forms the eigenvalue-
    >= eta/2 subspace E (or a caller-chosen one), and checks
    |E[phi avg_E h] - E[phi h]| <= sqrt(k eta) + 3 stderr by Monte Carlo.
    """
    n = phi.dim
    rng = rng_stream(seed, 37)
    anchors = rng.standard_normal((m_points, n))
    grads = phi.grad(anchors)
    a = grads.T @ grads / float(m_points)
    if isinstance(e_choice, Subspace):
        e = e_choice
    elif e_choice == "truncated":
        e = eigenspace_at_least(a, eta / 2.0)
    elif e_choice == "zero":
        e = Subspace.trivial(n)
    else:
        raise ParameterError(f"unknown subspace choice {e_choice!r}")

    x = rng.standard_normal((n_outer, n))
    z = rng.standard_normal((n_outer, n_inner, n))
    proj = e.projector()
    avg_pts = x @ proj.T
    orth = z - z @ proj.T
    pts = (avg_pts[:, None, :] + orth).reshape(-1, n)
    h_avg = h.evaluate_batch(pts).reshape(n_outer, n_inner).mean(axis=1)
    terms = phi.value(x) * (h_avg - h.evaluate_batch(x))
    est = mc_mean(terms)
    residual = operator_norm((np.eye(n) - proj) @ a @ (np.eye(n) - proj))
    return CheckResult.from_sides(
        "truncation-preserves-correlation",
        abs(est.value),
        math.sqrt(k * eta),
        bound_scale=bound_scale,
        tol=3.0 * est.stderr,
        details={
            "estimate": est.value,
            "stderr": est.stderr,
            "retained_dim": e.dim,
            "eta": eta,
            "empirical_offspace_residual": residual,
            "n_outer": n_outer,
            "n_inner": n_inner,
        },
    )


def ridge_gradient_second_moment(deriv_1d: Callable[[np.ndarray], np.ndarray], u) -> np.ndarray:
    """E[grad f grad f^T] = E[psi'(s)^2] u u^T for a ridge function f(x) = psi(<u,x>)."""
    u = np.asarray(u, dtype=float).ravel()
    nodes, weights = np.polynomial.hermite_e.hermegauss(128)
    weights = weights / math.sqrt(2.0 * math.pi)
    c = float(np.sum(weights * deriv_1d(nodes) ** 2))
    return c * np.outer(u, u)
