"""Top-level algorithms: correlation search over a class, tolerant accept/
reject testing, and list-decoding of near-optimal low-dimensional structure.

The correlation pipeline: smooth the target, recover the informative
subspace by gradient PCA, build a net of candidate low-dimensional functions
over the recovered coordinates, and return the best empirical correlation
over a shared panel of Gaussian sample points.  Tolerant testing thresholds
that estimate; list decoding returns every net element above a cutoff.

Distance/correlation bridge used throughout: for sign-valued functions,
E[f g] = 1 - 2 Pr[f != g], so distance thresholds (c_l, c_u) map to the
correlation threshold 1 - (c_l + c_u).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ParameterError
from .nets import ClassSpec, JuntaNet, NetCaps, averaged_class, class_smoothness, junta_net
from .oracle import QueryOracle, rng_stream, sample_gaussian, spec_smoothed_eval
from .projection import PracticalParams, ProjectionOutput, implicit_coords, implicit_projection
from .reporting import MCEstimate

_CHUNK_Z = 128
_CHUNK_SAMPLES = 4096


@dataclass
class CorrelationReport:
    """Everything the correlation search measured, with its error ledger."""

    rho_hat: float
    best_index: int
    best_label: str
    estimates: np.ndarray
    stderrs: np.ndarray
    labels: list[str]
    T: int
    zeta: float
    net_size: int
    m: int
    queries: dict
    tolerance_ledger: dict
    seed: int
    projection: Optional[ProjectionOutput] = None
    net: Optional[JuntaNet] = None

    def element_estimate(self, index: int) -> MCEstimate:
        return MCEstimate(float(self.estimates[index]), float(self.stderrs[index]), self.T)

    def to_dict(self) -> dict:
        return {
            "rho_hat": self.rho_hat,
            "best_index": self.best_index,
            "best_label": self.best_label,
            "estimates": self.estimates,
            "stderrs": self.stderrs,
            "labels": self.labels,
            "T": self.T,
            "zeta": self.zeta,
            "net_size": self.net_size,
            "m": self.m,
            "queries": self.queries,
            "tolerance_ledger": self.tolerance_ledger,
            "seed": self.seed,
        }


@dataclass
class TestVerdict:
    """Tolerant-test outcome: accept iff rho_hat >= threshold."""

    verdict: str
    rho_hat: float
    threshold: float
    eps: float
    c_l: float
    c_u: float
    queries: int
    report: CorrelationReport

    @property
    def accepted(self) -> bool:
        return self.verdict == "accept"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "rho_hat": self.rho_hat,
            "threshold": self.threshold,
            "eps": self.eps,
            "c_l": self.c_l,
            "c_u": self.c_u,
            "queries": self.queries,
            "report": self.report.to_dict(),
        }


@dataclass
class InvariantStructureSet:
    """Net elements whose estimated correlation clears rho - 4 eps."""

    members: list[dict]
    rho: float
    eps: float
    report: CorrelationReport

    def __len__(self) -> int:
        return len(self.members)

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "eps": self.eps,
            "members": [
                {k: v for k, v in member.items() if k != "direction_handle"}
                | {"direction_handle": member["direction_handle"]}
                for member in self.members
            ],
            "report": self.report.to_dict(),
        }


@dataclass(frozen=True)
class SearchKnobs:
    """Desk-scale accuracy knobs for the correlation search stages."""

    t_corr: Optional[float] = None  # smoothing time for value estimates; default (eps/4)^2/s^2
    coords_theta: float = 0.05
    coords_delta: float = 0.01
    eval_accuracy: Optional[float] = None  # per-point value accuracy; tightened to eps/10
    eval_delta: float = 0.01
    sample_constant: float = 2.0  # C in T = ceil(C eps^-2 log(1/zeta))
    mode: str = "estimated"


def _smoothed_values_many(
    f: QueryOracle, t: float, targets: np.ndarray, eps: float, delta: float, seed: int
) -> tuple[np.ndarray, int]:
    """Smoothed value at every target point with a shared Hoeffding budget."""
    from .smoothing import hoeffding_samples
    from .oracle import noise_scale

    n_samples = hoeffding_samples(eps, delta)
    sigma = noise_scale(t)
    decay = math.exp(-t)
    start = f.query_count
    values = np.empty(targets.shape[0])
    rng = rng_stream(seed, 67)
    for z0 in range(0, targets.shape[0], _CHUNK_Z):
        block = targets[z0 : z0 + _CHUNK_Z]
        acc = np.zeros(block.shape[0])
        done = 0
        while done < n_samples:
            take = min(_CHUNK_SAMPLES, n_samples - done)
            noise = rng.standard_normal((take, targets.shape[1]))
            pts = decay * block[:, None, :] + sigma * noise[None, :, :]
            acc += f.evaluate_batch(pts.reshape(-1, targets.shape[1])).reshape(
                block.shape[0], take
            ).sum(axis=1)
            done += take
        values[z0 : z0 + block.shape[0]] = acc / n_samples
    return values, f.query_count - start


def correlation_estimate(
    f: QueryOracle,
    k: int,
    s: float,
    eps: float,
    cls: ClassSpec,
    params: PracticalParams,
    caps: NetCaps,
    seed: int,
    *,
    knobs: SearchKnobs = SearchKnobs(),
) -> CorrelationReport:
    """Estimate the maximum correlation of f with the induced class.

    Pipeline: (1) value estimates use the smoothed target at
    t = (eps/4)^2 / s^2, the time at which the smoothing bias against any
    s-smooth candidate stays under eps/8; (2) gradient PCA at the coarser
    practical smoothing time recovers the informative subspace; (3) the net
    over recovered coordinates is built for the averaged class at accuracy
    eps/4; (4) T = ceil(C eps^-2 log(1/zeta)) shared sample points, with
    zeta = 1/(10 |net|) from the enumerated (not theoretical) net size;
    (5) implicit coordinates of each sample point; (6) the best empirical
    correlation, ties broken toward the lowest element index.
    """
    if eps <= 0:
        raise ParameterError("eps must be positive")
    kappa = eps / 4.0
    t_corr = knobs.t_corr if knobs.t_corr is not None else (kappa / s) ** 2
    start_queries = f.query_count

    out = implicit_projection(f, params.t, params, seed, mode=knobs.mode)
    net = junta_net(out.m, k, s, eps / 4.0, averaged_class(cls), caps)
    if len(net) == 0:
        raise ParameterError("net enumeration produced no elements")
    zeta = 1.0 / (10.0 * len(net))
    big_t = int(math.ceil(knobs.sample_constant * eps ** -2 * math.log(1.0 / zeta)))
    z = sample_gaussian(f.dim, big_t, seed, stream=61)

    coords = implicit_coords(
        out, f, params.t, z, theta=knobs.coords_theta, delta=knobs.coords_delta, seed=seed
    )
    coords_matrix = coords.values.T if out.m else np.zeros((big_t, 0))

    eval_eps = min(eps / 10.0, knobs.eval_accuracy) if knobs.eval_accuracy else eps / 10.0
    if knobs.mode == "analytic" and f.metadata.spec is not None:
        f_values = spec_smoothed_eval(f.metadata.spec, t_corr, z)
        eval_queries = 0
        eval_eps_used = 0.0
    else:
        f_values, eval_queries = _smoothed_values_many(
            f, t_corr, z, eval_eps, knobs.eval_delta, seed
        )
        eval_eps_used = eval_eps

    element_values = net.evaluate_all(coords_matrix)
    products = element_values * f_values[None, :]
    estimates = products.mean(axis=1)
    stderrs = products.std(axis=1, ddof=1) / math.sqrt(big_t)
    best = int(np.argmax(estimates))

    queries = {
        "projection": out.queries,
        "coords": coords.queries,
        "value_estimates": eval_queries,
        "total": f.query_count - start_queries,
    }
    ledger = {
        "eps": eps,
        "kappa": kappa,
        "t_corr": t_corr,
        "printed_roadmap_time": kappa / s,
        "smoothing_bias_bound": kappa / 2.0,
        "net_eps": eps / 4.0,
        "sampling_target": eps / 4.0,
        "coords_error_bound": coords.error_bound,
        "value_noise_per_point": eval_eps_used,
        "value_noise_averaged": eval_eps_used / math.sqrt(big_t),
        "projection_nu_proxy": math.sqrt(k * params.eta),
    }
    return CorrelationReport(
        rho_hat=float(estimates[best]),
        best_index=best,
        best_label=net.elements[best].label,
        estimates=estimates,
        stderrs=stderrs,
        labels=[el.label for el in net.elements],
        T=big_t,
        zeta=zeta,
        net_size=len(net),
        m=out.m,
        queries=queries,
        tolerance_ledger=ledger,
        seed=seed,
        projection=out,
        net=net,
    )


def robust_test(
    f: QueryOracle,
    k: int,
    s: float,
    c_l: float,
    c_u: float,
    cls: ClassSpec,
    params: PracticalParams,
    caps: NetCaps,
    seed: int,
    *,
    knobs: SearchKnobs = SearchKnobs(),
) -> TestVerdict:
    """Tolerant tester: accept when distance <= c_l is plausible, reject at >= c_u.

    Runs the correlation search at eps = c_u - c_l (correlation units: twice
    the distance gap's half-width) and accepts iff rho_hat clears the
    midpoint 1 - (c_l + c_u) of the two distance thresholds' images.
    """
    if not (0.0 <= c_l < c_u < 0.5):
        raise ParameterError(
            f"need 0 <= c_l < c_u < 1/2, got c_l={c_l}, c_u={c_u}"
        )
    eps_corr = c_u - c_l
    report = correlation_estimate(
        f, k, s, eps_corr, cls, params, caps, seed, knobs=knobs
    )
    threshold = 1.0 - (c_l + c_u)
    verdict = "accept" if report.rho_hat >= threshold else "reject"
    return TestVerdict(
        verdict=verdict,
        rho_hat=report.rho_hat,
        threshold=threshold,
        eps=eps_corr,
        c_l=c_l,
        c_u=c_u,
        queries=report.queries["total"],
        report=report,
    )


def learn_all(
    f: QueryOracle,
    k: int,
    s: float,
    rho: float,
    eps: float,
    cls: ClassSpec,
    params: PracticalParams,
    caps: NetCaps,
    seed: int,
    *,
    knobs: SearchKnobs = SearchKnobs(),
) -> InvariantStructureSet:
    """Return every net element whose estimated correlation is >= rho - 4 eps.

    Each member carries its implicit-direction handle: the element's
    coordinate basis composed with the recovered coordinate map (and, when
    the true gradient matrix is available, explicit ambient directions).
    """
    report = correlation_estimate(f, k, s, eps, cls, params, caps, seed, knobs=knobs)
    cutoff = rho - 4.0 * eps
    members = []
    out = report.projection
    for idx in np.flatnonzero(report.estimates >= cutoff):
        element = report.net.elements[int(idx)]
        handle: dict = {
            "coords_basis": element.basis,
            "w_hat_shape": list(out.w_hat.shape),
        }
        if out.grad_matrix is not None and out.m:
            rows = element.basis.T @ (out.w_hat @ out.grad_matrix.T)
            norms = np.linalg.norm(rows, axis=1, keepdims=True)
            norms[norms == 0] = 1.0
            handle["ambient_directions"] = rows / norms
        members.append(
            {
                "index": int(idx),
                "label": report.labels[int(idx)],
                "estimate": float(report.estimates[idx]),
                "stderr": float(report.stderrs[idx]),
                "direction_handle": handle,
            }
        )
    members.sort(key=lambda member: -member["estimate"])
    return InvariantStructureSet(members=members, rho=rho, eps=eps, report=report)
