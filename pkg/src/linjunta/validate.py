"""The randomized validation battery for every perturbation and averaging bound.

Suites group checks by theme; each suite runs a configurable number of
seeded random instances and returns one CheckResult per instance.  The
negative-control suite reruns handcrafted instances with every bound shrunk
1000x and passes exactly when the shrunk checks fail.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from .checks import (
    check_almost_isometry,
    check_almost_same_eigen,
    check_almost_same_subspace,
    check_approximate_projection,
    check_correlation_subspace_stability,
    check_covariance_concentration,
    check_davis_kahan,
    check_pseudoinverse_stability,
    check_subspace_distance,
)
from .hermite import hermite_tail_mass, sign_hermite_coefficients
from .linalg import Subspace, nearest_psd, symmetric_spectrum
from .oracle import (
    Halfspace,
    QueryOracle,
    TanhJunta,
    make_oracle,
    rng_stream,
    spec_eval,
    spec_grad,
    spec_smoothed_eval,
)
from .projection import (
    ridge_gradient_second_moment,
    smoothed_spec_function,
    tanh_spec_function,
    truncation_preserves_correlation_check,
)
from .reporting import CheckResult, CheckSuiteResult, mc_mean
from .smoothing import smoothness_check

# ---------------------------------------------------------------------------
# Random instance helpers
# ---------------------------------------------------------------------------


def _random_subspace(rng: np.random.Generator, n: int, d: int) -> Subspace:
    q, _ = np.linalg.qr(rng.standard_normal((n, d)))
    return Subspace(n, q[:, :d])


def _random_psd(rng: np.random.Generator, n: int, eig_max: float = 2.0) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eigs = rng.uniform(0.0, eig_max, size=n)
    return (q * eigs) @ q.T


def _random_symmetric(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    g = rng.standard_normal((n, n))
    return scale * (g + g.T) / 2.0


def _nearby_subspace_pair(
    rng: np.random.Generator, n: int, k: int, k_prime: int, tilt: float
) -> tuple[Subspace, Subspace]:
    """E of dim k close to (inside-ish) a k'-dim E', with operator leak < 1."""
    eprime = _random_subspace(rng, n, k_prime)
    inside = eprime.basis[:, :k]
    raw = inside + tilt * rng.standard_normal((n, k))
    q, _ = np.linalg.qr(raw)
    e = Subspace(n, q[:, :k])
    leak = np.linalg.norm(e.projector() @ (np.eye(n) - eprime.projector()), 2)
    if leak >= 0.95:
        return _nearby_subspace_pair(rng, n, k, k_prime, tilt * 0.5)
    return e, eprime


# ---------------------------------------------------------------------------
# Averaging-operator checks (null differences within 3 stderr)
# ---------------------------------------------------------------------------


def check_averaging_self_adjoint(
    f: QueryOracle,
    g: QueryOracle,
    subspace: Subspace,
    n_outer: int,
    n_inner: int,
    seed: int,
    *,
    k_sigma: float = 3.0,
) -> CheckResult:
    """E[(avg f) g] = E[f (avg g)]: the difference is mean-zero within noise.

    Each outer point gets its own inner panel so the outer terms are iid and
    the reported standard error is valid.
    """
    rng = rng_stream(seed, 71)
    n = f.dim
    x = rng.standard_normal((n_outer, n))
    z = rng.standard_normal((n_outer, n_inner, n))
    proj = subspace.projector()
    px = x @ proj.T
    pz = z - z @ proj.T
    pts = (px[:, None, :] + pz).reshape(-1, n)
    avg_f = f.evaluate_batch(pts).reshape(n_outer, n_inner).mean(axis=1)
    avg_g = g.evaluate_batch(pts).reshape(n_outer, n_inner).mean(axis=1)
    terms = avg_f * g.evaluate_batch(x) - f.evaluate_batch(x) * avg_g
    est = mc_mean(terms)
    return CheckResult.from_sides(
        "averaging-self-adjoint",
        abs(est.value),
        k_sigma * est.stderr,
        details={"estimate": est.value, "stderr": est.stderr, "dim": n},
    )


def check_averaging_tower(
    f: QueryOracle,
    inner: Subspace,
    outer: Subspace,
    n_outer: int,
    n_inner: int,
    seed: int,
    *,
    k_sigma: float = 3.0,
) -> CheckResult:
    """avg_E avg_E' f = avg_E f for E inside E'.

    Writing P for projectors and decomposing along E, E' minus E, and the
    complement of E': the nested average re-randomizes the E'-complement
    with an independent panel while the single average keeps the original
    one; the shared in-between panel makes the difference low-variance.
    """
    rng = rng_stream(seed, 73)
    n = f.dim
    x = rng.standard_normal((n_outer, n))
    z_mid = rng.standard_normal((n_outer, n_inner, n))
    z_new = rng.standard_normal((n_outer, n_inner, n))
    pi_e = inner.projector()
    pi_ep = outer.projector()
    between = pi_ep - pi_e  # projector onto E' minus E
    comp = np.eye(n) - pi_ep
    base = (x @ pi_e.T)[:, None, :] + z_mid @ between.T
    nested = f.evaluate_batch(
        (base + z_new @ comp.T).reshape(-1, n)
    ).reshape(n_outer, n_inner).mean(axis=1)
    single = f.evaluate_batch(
        (base + z_mid @ comp.T).reshape(-1, n)
    ).reshape(n_outer, n_inner).mean(axis=1)
    est = mc_mean(nested - single)
    return CheckResult.from_sides(
        "averaging-tower",
        abs(est.value),
        k_sigma * est.stderr,
        details={"estimate": est.value, "stderr": est.stderr},
    )


def check_gradient_average_contraction(
    spec: TanhJunta,
    subspace: Subspace,
    n_outer: int,
    n_inner: int,
    seed: int,
    *,
    k_sigma: float = 3.0,
) -> CheckResult:
    """E ||grad avg_E f||^2 <= E ||P_E grad f||^2, with a split-panel unbiased square.

    The squared norm of the inner-average gradient is estimated as the inner
    product of two independent half-panel averages, removing the upward bias
    a plain squared mean would add to the left side.
    """
    rng = rng_stream(seed, 79)
    n = spec.dim
    x = rng.standard_normal((n_outer, n))
    half = n_inner // 2
    z = rng.standard_normal((n_outer, 2 * half, n))
    proj = subspace.projector()
    px = x @ proj.T
    pz = z - z @ proj.T
    pts = (px[:, None, :] + pz).reshape(-1, n)
    grads = spec_grad(spec, pts).reshape(n_outer, 2 * half, n) @ proj.T
    g1 = grads[:, :half].mean(axis=1)
    g2 = grads[:, half:].mean(axis=1)
    lhs_terms = np.sum(g1 * g2, axis=1)
    rhs_terms = np.sum((spec_grad(spec, x) @ proj.T) ** 2, axis=1)
    est = mc_mean(lhs_terms - rhs_terms)
    return CheckResult.from_sides(
        "gradient-average-contraction",
        est.value,
        0.0,
        tol=k_sigma * est.stderr,
        details={"estimate": est.value, "stderr": est.stderr},
    )


# ---------------------------------------------------------------------------
# Suite runners
# ---------------------------------------------------------------------------


def _suite_linalg_bounds(seed: int, n_instances: int, bound_scale: float = 1.0) -> list[CheckResult]:
    """almost-isometry, subspace-distance, pseudoinverse-stab, davis-kahan,
    approximate-projection, almost-same-eigen on random instances."""
    rng = rng_stream(seed, 83)
    results: list[CheckResult] = []
    for i in range(n_instances):
        # almost-isometry
        b = rng.standard_normal((10, 6))
        eta = rng.uniform(0.3, 1.0)
        noise = _random_symmetric(rng, 6, scale=rng.uniform(0.0, 0.2) * eta)
        n_hat = nearest_psd(b.T @ b + noise)
        results.append(check_almost_isometry(b, n_hat, eta, bound_scale=bound_scale))
        # subspace-distance
        k = int(rng.integers(1, 3))
        k_prime = int(rng.integers(k, 5))
        e, eprime = _nearby_subspace_pair(rng, 8, k, k_prime, tilt=rng.uniform(0.05, 0.4))
        results.append(check_subspace_distance(e, eprime, bound_scale=bound_scale))
        # pseudoinverse stability
        a = _random_psd(rng, 8, eig_max=2.0)
        eta2 = rng.uniform(0.3, 1.0)
        pert = _random_symmetric(rng, 8)
        pert *= (eta2 ** 2 / 100.0) * rng.uniform(0.1, 1.0) / max(
            np.linalg.norm(pert, 2), 1e-12
        )
        results.append(
            check_pseudoinverse_stability(a, nearest_psd(a + pert), eta2, bound_scale=bound_scale)
        )
        # davis-kahan
        a_sym = _random_symmetric(rng, 7, scale=1.5)
        b_sym = a_sym + _random_symmetric(rng, 7, scale=1e-3)
        eigs = np.sort(np.linalg.eigvalsh(a_sym))
        lo_idx = int(rng.integers(0, 6))
        lo, hi = eigs[lo_idx] - 0.05, eigs[int(rng.integers(lo_idx, 7))] + 0.05
        results.append(
            check_davis_kahan(
                a_sym, b_sym, (lo, hi), delta=rng.uniform(0.2, 0.5), bound_scale=bound_scale
            )
        )
        # approximate projection
        m_rows = int(rng.integers(1, 5))
        n_cols = int(rng.integers(m_rows, 9))
        u, _ = np.linalg.qr(rng.standard_normal((n_cols, m_rows)))
        v, _ = np.linalg.qr(rng.standard_normal((m_rows, m_rows)))
        x = (v * rng.uniform(0.5, 2.0, size=m_rows)) @ u[:, :m_rows].T
        results.append(check_approximate_projection(x, bound_scale=bound_scale))
        # almost-same-eigen
        r = _random_psd(rng, 8, eig_max=3.0)
        spectrum = symmetric_spectrum(r)
        lam = float(rng.uniform(1.0, 2.5))
        delta_band = float(rng.uniform(0.05, lam / 2.5))
        in_band = (spectrum.eigenvalues >= lam - delta_band) & (
            spectrum.eigenvalues <= lam + delta_band
        )
        if not np.any(in_band):
            lam = float(spectrum.eigenvalues[0])
            delta_band = min(0.3, lam / 2.5)
            in_band = (spectrum.eigenvalues >= lam - delta_band) & (
                spectrum.eigenvalues <= lam + delta_band
            )
        vecs = spectrum.eigenvectors[:, in_band]
        w = vecs @ rng.standard_normal(vecs.shape[1])
        results.append(check_almost_same_eigen(r, lam, delta_band, w, bound_scale=bound_scale))
    return results


def _suite_correlation_stability(
    seed: int, n_instances: int, bound_scale: float = 1.0
) -> list[CheckResult]:
    rng = rng_stream(seed, 89)
    results = []
    n = 8
    for i in range(n_instances):
        k = int(rng.integers(1, 3))
        k_prime = int(rng.integers(k, 4))
        e, eprime = _nearby_subspace_pair(rng, n, k, k_prime, tilt=rng.uniform(0.05, 0.3))
        gain = rng.uniform(0.5, 2.0)
        direction = e.basis[:, 0]
        f_spec = TanhJunta(directions=direction[None, :], gains=[gain])
        g_dir = rng.standard_normal(n)
        g_dir /= np.linalg.norm(g_dir)
        g_spec = Halfspace(g_dir, theta=float(rng.uniform(-0.5, 0.5)))
        results.append(
            check_correlation_subspace_stability(
                lambda pts: spec_eval(f_spec, pts),
                lip_f=gain,
                g_batch=lambda pts: spec_eval(g_spec, pts),
                e=e,
                eprime=eprime,
                n_outer=1200,
                n_inner=48,
                rng=rng_stream(seed, 89, i, 1),
                bound_scale=bound_scale,
            )
        )
    return results


def _suite_averaging(seed: int, n_instances: int) -> list[CheckResult]:
    rng = rng_stream(seed, 97)
    results = []
    n = 6
    for i in range(n_instances):
        dir1 = rng.standard_normal(n)
        dir1 /= np.linalg.norm(dir1)
        f = make_oracle(TanhJunta(directions=dir1[None, :], gains=[rng.uniform(0.5, 2)]))
        g_dir = rng.standard_normal(n)
        g_dir /= np.linalg.norm(g_dir)
        g = make_oracle(Halfspace(g_dir, theta=float(rng.uniform(-0.5, 0.5))))
        sub = _random_subspace(rng, n, int(rng.integers(1, 4)))
        results.append(
            check_averaging_self_adjoint(f, g, sub, 1500, 48, seed=seed * 1000 + i)
        )
        outer = _random_subspace(rng, n, int(rng.integers(2, 5)))
        inner = Subspace(n, outer.basis[:, : int(rng.integers(1, outer.dim))])
        results.append(check_averaging_tower(g, inner, outer, 1500, 48, seed=seed * 1000 + i))
        spec = TanhJunta(
            directions=np.linalg.qr(rng.standard_normal((n, 2)))[0].T[:2],
            gains=rng.uniform(0.5, 2.0, size=2),
        )
        results.append(
            check_gradient_average_contraction(spec, sub, 1200, 64, seed=seed * 1000 + i)
        )
    return results


def _suite_idealized(seed: int, n_instances: int, bound_scale: float = 1.0) -> list[CheckResult]:
    rng = rng_stream(seed, 101)
    results = []
    n = 8
    for i in range(n_instances):
        kind = i % 3
        eta = float(rng.uniform(0.05, 0.4))
        if kind == 0:
            direction = rng.standard_normal(n)
            direction /= np.linalg.norm(direction)
            phi = tanh_spec_function(
                TanhJunta(directions=direction[None, :], gains=[rng.uniform(0.8, 2.0)])
            )
            h_spec = Halfspace(direction, theta=float(rng.uniform(-0.5, 0.5)))
            k = 1
        elif kind == 1:
            q, _ = np.linalg.qr(rng.standard_normal((n, 2)))
            phi = tanh_spec_function(
                TanhJunta(directions=q[:, :2].T, gains=rng.uniform(0.8, 1.6, size=2))
            )
            h_spec = Halfspace(q[:, 0])
            k = 1
        else:
            direction = rng.standard_normal(n)
            direction /= np.linalg.norm(direction)
            phi = smoothed_spec_function(Halfspace(direction), t=0.3)
            h_dir = rng.standard_normal(n)
            h_dir /= np.linalg.norm(h_dir)
            h_spec = Halfspace(h_dir)
            k = 1
        h = make_oracle(h_spec)
        results.append(
            truncation_preserves_correlation_check(
                phi,
                k,
                eta,
                m_points=40,
                h=h,
                e_choice="truncated",
                n_outer=1500,
                n_inner=48,
                seed=seed * 977 + i,
                bound_scale=bound_scale,
            )
        )
    return results


def _suite_smoothing(seed: int, n_instances: int) -> list[CheckResult]:
    results = []
    u = np.zeros(4)
    u[0] = 1.0
    hs = Halfspace(u)
    f = make_oracle(hs)
    suite = smoothness_check(
        f,
        s=1.0,
        t_grid=[0.01, 0.05, 0.2, 1.0],
        n_samples=20000,
        seed=seed,
        smoothed_values=lambda t, pts: spec_smoothed_eval(hs, t, pts),
    )
    results.extend(suite.results)
    # too-small smoothness must fail at small t (negative control inside the suite)
    tiny = smoothness_check(
        f,
        s=0.01,
        t_grid=[0.01],
        n_samples=20000,
        seed=seed,
        smoothed_values=lambda t, pts: spec_smoothed_eval(hs, t, pts),
    )
    results.append(
        CheckResult.from_sides(
            "smoothness-underclaim-fails",
            0.0 if not tiny.results[0].passed else 1.0,
            0.5,
            details={"inner": tiny.results[0].summary()},
        )
    )
    # gradient of the smoothed halfspace stays under 1/sqrt(t)
    from .oracle import noise_scale

    for t in (0.05, 0.2, 1.0):
        lip = 2.0 / math.sqrt(2.0 * math.pi) * math.exp(-t) / noise_scale(t)
        results.append(
            CheckResult.from_sides(
                f"smoothed-gradient-growth[t={t:g}]",
                lip,
                1.0 / math.sqrt(t),
                details={"constant_bound": 1.0},
            )
        )
    return results


def _suite_hermite(seed: int, n_instances: int) -> list[CheckResult]:
    results = []
    for delta in (0.1, 0.05):
        degree_cap = int(round(1.0 / delta ** 2))
        coeffs = sign_hermite_coefficients(degree_cap)
        closed_tail = 1.0 - float(np.sum(coeffs ** 2))
        report = hermite_tail_mass(
            lambda x: np.sign(x), degree_cap, breakpoints=[0.0], smoothness=1.0
        )
        agreement = abs(report.tail_mass - closed_tail)
        results.append(
            CheckResult.from_sides(
                f"hermite-tail[delta={delta:g}]",
                report.tail_mass,
                4.0 * delta,
                details={
                    "closed_form_tail": closed_tail,
                    "quadrature_tail": report.tail_mass,
                    "agreement": agreement,
                    "degree_cap": degree_cap,
                },
            )
        )
        results.append(
            CheckResult.from_sides(
                f"hermite-tail-quadrature-agreement[delta={delta:g}]",
                agreement,
                1e-6,
                details={"degree_cap": degree_cap},
            )
        )
    return results


def _suite_concentration(seed: int, n_instances: int) -> list[CheckResult]:
    from .oracle import noise_scale

    u = np.zeros(10)
    u[0] = 1.0
    t = 0.2
    hs = Halfspace(u)

    def grad_batch(x):
        from .oracle import spec_smoothed_grad

        return spec_smoothed_grad(hs, t, x)

    sigma = noise_scale(t)
    decay = math.exp(-t)

    def deriv_1d(sv):
        return 2.0 * np.exp(-0.5 * (decay * sv / sigma) ** 2) / math.sqrt(
            2.0 * math.pi
        ) * decay / sigma

    truth = ridge_gradient_second_moment(deriv_1d, u)
    result = check_covariance_concentration(
        grad_batch,
        truth,
        dim=10,
        m_grid=[10, 22, 46, 100, 215, 464, 1000],
        n_reps=12,
        rng=rng_stream(seed, 103),
    )
    return [result]


def _negative_controls(seed: int) -> list[CheckResult]:
    """Handcrafted instances where each bound, shrunk 1000x, must fail."""
    rng = rng_stream(seed, 107)
    scale = 1e-3
    inner: list[CheckResult] = []
    # davis-kahan with a genuine rotation
    c, s = math.cos(0.4), math.sin(0.4)
    rot = np.array([[c, -s], [s, c]])
    a = np.diag([1.0, 0.0])
    b = rot @ a @ rot.T
    inner.append(check_davis_kahan(a, b, (0.9, 1.1), delta=0.3, bound_scale=scale))
    # pseudoinverse stability with a visible perturbation
    a_psd = np.diag([2.0, 1.0, 0.2])
    pert = _random_symmetric(rng, 3, scale=0.05)
    inner.append(
        check_pseudoinverse_stability(a_psd, nearest_psd(a_psd + pert), 0.8, bound_scale=scale)
    )
    # subspace distance between tilted lines
    e = Subspace.coordinate(3, [0])
    tilted = np.array([math.cos(0.5), math.sin(0.5), 0.0])
    inner.append(check_subspace_distance(e, Subspace(3, tilted[:, None]), bound_scale=scale))
    # almost isometry with gram noise
    b_mat = rng.standard_normal((8, 5))
    n_hat = nearest_psd(b_mat.T @ b_mat + _random_symmetric(rng, 5, scale=0.1))
    inner.append(check_almost_isometry(b_mat, n_hat, 0.5, bound_scale=scale))
    # approximate projection of a non-orthonormal matrix
    x = np.zeros((2, 3))
    x[0, 0], x[1, 1] = 2.0, 1.0
    inner.append(check_approximate_projection(x, bound_scale=scale))
    # eigen-band inverse with a genuinely spread band
    r = np.diag([2.0, 1.15, 0.85])
    w = np.array([0.0, 1.0, 1.0]) / math.sqrt(2.0)
    inner.append(check_almost_same_eigen(r, 1.0, 0.2, w, bound_scale=scale))
    # correlation stability across visibly different subspaces
    f_spec = TanhJunta(directions=np.eye(4)[:1], gains=[2.0])
    g_spec = Halfspace(np.eye(4)[0])
    eprime = Subspace(4, np.array([[math.cos(0.5), math.sin(0.5), 0, 0]]).T)
    inner.append(
        check_correlation_subspace_stability(
            lambda pts: spec_eval(f_spec, pts),
            lip_f=2.0,
            g_batch=lambda pts: spec_eval(g_spec, pts),
            e=Subspace.coordinate(4, [0]),
            eprime=eprime,
            n_outer=4000,
            n_inner=64,
            rng=rng_stream(seed, 107, 1),
            bound_scale=scale,
            k_sigma=0.0,
        )
    )
    results = []
    for chk in inner:
        results.append(
            CheckResult.from_sides(
                f"negative-control[{chk.name}]",
                0.0 if not chk.passed else 1.0,
                0.5,
                details={"shrunk_check": chk.summary()},
            )
        )
    return results


SUITES: dict[str, Callable[[int, int], list[CheckResult]]] = {
    "linalg-bounds": _suite_linalg_bounds,
    "correlation-stability": _suite_correlation_stability,
    "averaging": _suite_averaging,
    "idealized": _suite_idealized,
    "smoothing": _suite_smoothing,
    "hermite": _suite_hermite,
    "concentration": _suite_concentration,
}

SUITE_ALIASES = {
    "appendix-a": ["correlation-stability"],
    "appendix-b": ["linalg-bounds"],
    "default": list(SUITES.keys()) + ["negative-controls"],
    "all": list(SUITES.keys()) + ["negative-controls"],
}


def run_suites(
    selector: str,
    seeds,
    *,
    n_instances: Optional[int] = None,
) -> CheckSuiteResult:
    """Run the selected validation suites over the given seeds."""
    names = SUITE_ALIASES.get(selector, [selector])
    default_counts = {
        "linalg-bounds": 34,  # 6 checks per instance -> ~200 per bound
        "correlation-stability": 200,
        "averaging": 17,  # 3 checks per instance -> ~50 each
        "idealized": 50,
        "smoothing": 1,
        "hermite": 1,
        "concentration": 1,
    }
    total = CheckSuiteResult(name=selector)
    for name in names:
        if name == "negative-controls":
            for seed in seeds:
                total.extend(_negative_controls(seed))
            continue
        if name not in SUITES:
            from .errors import UsageError

            raise UsageError(f"unknown validation suite {name!r}")
        count = n_instances if n_instances is not None else default_counts[name]
        for seed in seeds:
            total.extend(SUITES[name](seed, count))
    return total
