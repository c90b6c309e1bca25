"""The Gaussian noise semigroup and its query-based derived estimators.

The smoothing operator used throughout is
``(S_t f)(x) = E_y[f(exp(-t) x + sigma_t y)]`` with
``sigma_t = sqrt(1 - exp(-2t))``, the scaling under which S_t S_t' = S_{t+t'}.

Estimators:

* :func:`smoothed_eval` - plain Monte-Carlo value of S_t f at a point, with
  a Hoeffding-driven sample budget.
* :func:`grad_inner_product` - <grad S_t f(x1), grad S_t f(x2)> via the
  correlation-derivative identity: for rho-correlated Gaussian pairs,
  Q(rho) = E[f(e^-t x1 + s y) f(e^-t x2 + s y')] satisfies
  <grad, grad> = (e^{-2t}/sigma_t^2) Q'(0).  Q'(0) is estimated by a central
  difference at +-rho0 with common random numbers; the odd-degree expansion
  of Q makes the central-difference bias at most rho0^2 in Q-units.  The
  per-pair query budget depends only on (t, eps, delta, pilot variance) --
  never on the ambient dimension.
* :func:`project_on_gradient` - <grad S_t f(x), y> via Gaussian integration
  by parts: grad S_t f(x) = (e^-t/sigma_t) E_g[f(e^-t x + sigma_t g) g].

Sample budgets are explicit: Hoeffding for bounded integrands, a two-stage
empirical-Bernstein rule where common-random-number cancellation makes the
a-priori range loose.  Every estimate reports the budget it used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import BudgetExceededError, ParameterError
from .oracle import QueryOracle, noise_scale, rng_stream, smoothed_sign_factor
from .reporting import CheckResult, CheckSuiteResult

_CHUNK = 1 << 16


@dataclass(frozen=True)
class SmoothingParams:
    """Accuracy contract for one smoothed-value estimate."""

    t: float
    eps: float
    delta: float

    def __post_init__(self):
        if self.t <= 0:
            raise ParameterError(f"smoothing time must be positive, got {self.t}")
        if not 0 < self.delta < 1:
            raise ParameterError(f"failure probability must be in (0,1), got {self.delta}")
        if self.eps <= 0:
            raise ParameterError(f"target accuracy must be positive, got {self.eps}")

    @property
    def n_samples(self) -> int:
        return hoeffding_samples(self.eps, self.delta)


@dataclass
class GradEstimate:
    """An estimate with its standard error, query usage, and budget trace."""

    value: float
    stderr: float
    queries_used: int
    budget: dict = field(default_factory=dict)


def hoeffding_samples(eps: float, delta: float, value_range: float = 2.0) -> int:
    """Samples so a mean of [range]-bounded terms is within eps w.p. 1-delta."""
    if eps <= 0 or not 0 < delta < 1:
        raise ParameterError("need eps > 0 and delta in (0,1)")
    return int(math.ceil(value_range ** 2 * math.log(2.0 / delta) / (2.0 * eps ** 2)))


def empirical_bernstein_samples(
    variance: float, value_range: float, eps: float, delta: float
) -> int:
    """Samples so sqrt(2 V ln(3/d)/n) + 3 R ln(3/d)/n <= eps."""
    log_term = math.log(3.0 / delta)
    a = 2.0 * max(variance, 1e-300) * log_term
    b = 3.0 * value_range * log_term
    s = (math.sqrt(a) + math.sqrt(a + 4.0 * eps * b)) / (2.0 * eps)
    return max(1, int(math.ceil(s * s)))


def _two_stage_mean(
    draw: Callable[[np.random.Generator, int], np.ndarray],
    *,
    eps: float,
    delta: float,
    value_range: float,
    seed: int,
    stream: tuple,
    pilot: int = 2048,
    variance_inflation: float = 1.5,
    max_samples: Optional[int] = None,
) -> tuple[float, float, int, dict]:
    """Mean of iid draws, budgeted by a pilot-variance empirical-Bernstein rule."""
    rng = rng_stream(seed, *stream)
    pilot_samples = draw(rng, pilot)
    v_hat = float(np.var(pilot_samples, ddof=1)) * variance_inflation
    n_needed = empirical_bernstein_samples(v_hat, value_range, eps, delta)
    n_needed = max(n_needed, pilot)
    if max_samples is not None:
        n_needed = min(n_needed, max_samples)
    chunks = [pilot_samples]
    total = pilot
    while total < n_needed:
        take = min(_CHUNK, n_needed - total)
        chunks.append(draw(rng, take))
        total += take
    samples = np.concatenate(chunks)
    mean = float(samples.mean())
    stderr = float(samples.std(ddof=1) / math.sqrt(samples.size))
    info = {
        "pilot": pilot,
        "pilot_variance": v_hat / variance_inflation,
        "variance_inflation": variance_inflation,
        "value_range": value_range,
        "eps": eps,
        "delta": delta,
        "n_samples": int(samples.size),
        "rule": "empirical-bernstein(pilot)",
    }
    return mean, stderr, int(samples.size), info


def smoothed_eval(
    f: QueryOracle,
    t: float,
    x,
    eps: float,
    delta: float,
    seed: int,
    stream: int = 0,
) -> GradEstimate:
    """Monte-Carlo value of S_t f at x, within +-eps w.p. >= 1-delta.

    Uses n = ceil(2 ln(2/delta) / eps^2) samples (Hoeffding on the
    [-1, 1]-bounded integrand).
    """
    params = SmoothingParams(t=t, eps=eps, delta=delta)
    x = np.asarray(x, dtype=float).ravel()
    sigma = noise_scale(t)
    decay = math.exp(-t)
    rng = rng_stream(seed, 11, stream)
    start = f.query_count
    total = params.n_samples
    acc = 0.0
    sq = 0.0
    done = 0
    while done < total:
        take = min(_CHUNK, total - done)
        y = rng.standard_normal((take, x.size))
        vals = f.evaluate_batch(decay * x[None, :] + sigma * y)
        acc += float(vals.sum())
        sq += float((vals ** 2).sum())
        done += take
    mean = acc / total
    var = max(sq / total - mean ** 2, 0.0)
    stderr = math.sqrt(var / total)
    return GradEstimate(
        value=mean,
        stderr=stderr,
        queries_used=f.query_count - start,
        budget={"n_samples": total, "rule": "hoeffding", "eps": eps, "delta": delta},
    )


def smoothed_halfspace_value(u, theta: float, t: float, x) -> float:
    """Closed form of the smoothed halfspace: 2 Phi((e^-t <u,x> - theta)/sigma_t) - 1."""
    u = np.asarray(u, dtype=float).ravel()
    if abs(np.linalg.norm(u) - 1.0) > 1e-8:
        raise ParameterError("direction must be a unit vector")
    x = np.asarray(x, dtype=float).ravel()
    return float(smoothed_sign_factor(np.array([x @ u]), theta, t)[0])


def grad_inner_product_plan(t: float, eps: float) -> dict:
    """Deterministic part of the per-pair budget: scale and probe correlation.

    Intentionally a function of (t, eps) only -- the plan has no ambient-
    dimension input, which is the dimension-independence contract.
    """
    sigma2 = noise_scale(t) ** 2
    scale = math.exp(-2.0 * t) / sigma2
    rho0 = min(0.5, math.sqrt(eps / (2.0 * scale)))
    return {
        "scale": scale,
        "rho0": rho0,
        "bias_bound": scale * rho0 ** 2,
        "term_range": 2.0 * scale / rho0,
    }


def grad_inner_product(
    f: QueryOracle,
    t: float,
    x1,
    x2,
    eps: float,
    delta: float,
    seed: int,
    stream: int = 0,
    *,
    pilot: int = 2048,
    max_samples: Optional[int] = None,
) -> GradEstimate:
    """Estimate <grad S_t f(x1), grad S_t f(x2)> within +-eps w.p. >= 1-delta.

    Central difference of the pair correlation at +-rho0 with common random
    numbers; the probe rho0 is chosen so the odd-series bias is at most
    eps/2 and the sampling budget targets the remaining eps/2.
    """
    if t <= 0:
        raise ParameterError(f"smoothing time must be positive, got {t}")
    x1 = np.asarray(x1, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    plan = grad_inner_product_plan(t, eps)
    scale, rho0 = plan["scale"], plan["rho0"]
    sigma = noise_scale(t)
    decay = math.exp(-t)
    comp = math.sqrt(1.0 - rho0 ** 2)
    base1 = decay * x1[None, :]
    base2 = decay * x2[None, :]
    start = f.query_count

    def draw(rng: np.random.Generator, count: int) -> np.ndarray:
        out = np.empty(count)
        done = 0
        while done < count:
            take = min(_CHUNK, count - done)
            y = rng.standard_normal((take, x1.size))
            w = rng.standard_normal((take, x1.size))
            g1 = f.evaluate_batch(base1 + sigma * y)
            plus = f.evaluate_batch(base2 + sigma * (rho0 * y + comp * w))
            minus = f.evaluate_batch(base2 + sigma * (-rho0 * y + comp * w))
            out[done : done + take] = scale * g1 * (plus - minus) / (2.0 * rho0)
            done += take
        return out

    try:
        mean, stderr, n, info = _two_stage_mean(
            draw,
            eps=eps / 2.0,
            delta=delta,
            value_range=plan["term_range"],
            seed=seed,
            stream=(13, stream),
            pilot=pilot,
            max_samples=max_samples,
        )
    except BudgetExceededError as exc:
        raise BudgetExceededError(
            "gradient inner-product estimation ran out of query budget",
            queries_used=f.query_count - start,
            partial=None,
        ) from exc
    info.update(plan)
    info["queries_per_sample"] = 3
    return GradEstimate(mean, stderr, f.query_count - start, info)


def _clip_level(pref_norm: float, bias_target: float) -> float:
    """Clip threshold q (in sd units) with truncation bias 2*pref_norm*phi(q) <= target."""
    target_phi = bias_target / (2.0 * max(pref_norm, 1e-300))
    phi0 = 1.0 / math.sqrt(2.0 * math.pi)
    if target_phi >= phi0:
        return 1.0
    q = math.sqrt(-2.0 * math.log(target_phi * math.sqrt(2.0 * math.pi)))
    return max(q, 1.0)


def project_on_gradient(
    f: QueryOracle,
    t: float,
    x,
    y,
    eta: float,
    nu: float,
    delta: float,
    seed: int,
    stream: int = 0,
    *,
    pilot: int = 2048,
    max_samples: Optional[int] = None,
) -> GradEstimate:
    """Estimate <grad S_t f(x), y> within +-nu w.p. >= 1-delta.

    Gaussian integration by parts turns the directional derivative into the
    bounded-ish integrand (e^-t/sigma_t) f(e^-t x + sigma_t g) <g, y>; the
    Gaussian factor is clipped at a level whose truncation bias is under
    nu/4 and the remaining 3 nu/4 is sampled with an empirical-Bernstein
    budget.  `eta` is the coarse per-point tolerance of the surrounding
    driver and is recorded for accounting only: the estimand here equals
    the true projection, so the eta tail contract holds with room to spare.
    """
    if t <= 0:
        raise ParameterError(f"smoothing time must be positive, got {t}")
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    sigma = noise_scale(t)
    decay = math.exp(-t)
    pref = decay / sigma
    y_norm = float(np.linalg.norm(y))
    start = f.query_count
    if y_norm == 0.0:
        return GradEstimate(0.0, 0.0, 0, {"n_samples": 0, "trivial": "zero direction"})
    q = _clip_level(pref * y_norm, nu / 4.0)
    clip = q * y_norm
    base = decay * x[None, :]

    def draw(rng: np.random.Generator, count: int) -> np.ndarray:
        out = np.empty(count)
        done = 0
        while done < count:
            take = min(_CHUNK, count - done)
            g = rng.standard_normal((take, x.size))
            vals = f.evaluate_batch(base + sigma * g)
            proj = np.clip(g @ y, -clip, clip)
            out[done : done + take] = pref * vals * proj
            done += take
        return out

    try:
        mean, stderr, n, info = _two_stage_mean(
            draw,
            eps=3.0 * nu / 4.0,
            delta=delta,
            value_range=2.0 * pref * clip,
            seed=seed,
            stream=(17, stream),
            pilot=pilot,
            max_samples=max_samples,
        )
    except BudgetExceededError as exc:
        raise BudgetExceededError(
            "gradient projection estimation ran out of query budget",
            queries_used=f.query_count - start,
            partial=None,
        ) from exc
    info.update({"clip_sd_units": q, "eta": eta, "truncation_bias_bound": nu / 4.0})
    return GradEstimate(mean, stderr, f.query_count - start, info)


def gradient_coords_batch(
    f: QueryOracle,
    t: float,
    anchor_points: np.ndarray,
    targets: np.ndarray,
    accuracy: float,
    delta: float,
    seed: int,
    stream: int = 0,
) -> tuple[np.ndarray, dict]:
    """All inner products <grad S_t f(x_i), z_j> with one sample batch per x_i.

    Same integration-by-parts estimator as :func:`project_on_gradient`; the
    linear functional in z commutes with the sample average, so one batch of
    N queries per anchor serves every target.  N is a CLT budget at the
    empirical 99th-percentile target norm: per pair,
    Var <= ||z_j||^2 / N, so N = ceil((z_{delta} ||z||_{.99} / accuracy)^2).
    """
    anchors = np.atleast_2d(np.asarray(anchor_points, dtype=float))
    z = np.atleast_2d(np.asarray(targets, dtype=float))
    sigma = noise_scale(t)
    decay = math.exp(-t)
    pref = decay / sigma
    norms = np.linalg.norm(z, axis=1)
    ref_norm = float(np.quantile(norms, 0.99)) if norms.size else 0.0
    from scipy.stats import norm as _norm

    z_delta = float(_norm.ppf(1.0 - delta / 2.0))
    n_samples = max(256, int(math.ceil((z_delta * max(ref_norm, 1e-9) / accuracy) ** 2)))
    start = f.query_count
    coords = np.empty((anchors.shape[0], z.shape[0]))
    for i, x in enumerate(anchors):
        rng = rng_stream(seed, 19, stream, i)
        grad_hat = np.zeros(anchors.shape[1])
        done = 0
        while done < n_samples:
            take = min(_CHUNK, n_samples - done)
            g = rng.standard_normal((take, anchors.shape[1]))
            vals = f.evaluate_batch(decay * x[None, :] + sigma * g)
            grad_hat += vals @ g
            done += take
        grad_hat *= pref / n_samples
        coords[i] = z @ grad_hat
    info = {
        "n_samples_per_anchor": n_samples,
        "accuracy": accuracy,
        "delta": delta,
        "reference_target_norm": ref_norm,
        "queries_used": f.query_count - start,
    }
    return coords, info


def smoothness_check(
    f: QueryOracle,
    s: float,
    t_grid,
    n_samples: int,
    seed: int,
    *,
    smoothed_values: Optional[Callable[[float, np.ndarray], np.ndarray]] = None,
    inner_eps: float = 0.02,
    inner_delta: float = 0.01,
) -> CheckSuiteResult:
    """Check E|f - S_t f| <= s sqrt(t) on a grid of smoothing times.

    When `smoothed_values(t, points)` is given (closed form), the inner
    expectation is exact; otherwise each S_t f(x) is estimated to
    +-inner_eps and that bias allowance is added to the tolerance.
    """
    if s <= 0:
        raise ParameterError(f"smoothness parameter must be positive, got {s}")
    suite = CheckSuiteResult(name="smoothness")
    sigma_of = noise_scale
    for idx, t in enumerate(t_grid):
        rng = rng_stream(seed, 23, idx)
        x = rng.standard_normal((n_samples, f.dim))
        fx = f.evaluate_batch(x)
        bias_allowance = 0.0
        if smoothed_values is not None:
            sx = np.asarray(smoothed_values(t, x), dtype=float)
        else:
            inner_n = hoeffding_samples(inner_eps, inner_delta)
            y = rng.standard_normal((inner_n, f.dim))
            decay = math.exp(-t)
            sigma = sigma_of(t)
            acc = np.zeros(n_samples)
            for chunk_start in range(0, inner_n, 256):
                block = y[chunk_start : chunk_start + 256]
                pts = decay * x[:, None, :] + sigma * block[None, :, :]
                acc += f.evaluate_batch(pts.reshape(-1, f.dim)).reshape(
                    n_samples, -1
                ).sum(axis=1)
            sx = acc / inner_n
            bias_allowance = inner_eps
        diffs = np.abs(fx - sx)
        mean = float(diffs.mean())
        stderr = float(diffs.std(ddof=1) / math.sqrt(n_samples))
        suite.add(
            CheckResult.from_sides(
                f"smoothness[t={t:g}]",
                mean,
                s * math.sqrt(t),
                tol=3.0 * stderr + bias_allowance,
                details={"stderr": stderr, "n_samples": n_samples, "s": s},
            )
        )
    return suite
