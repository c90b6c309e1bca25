"""Orthonormal Hermite basis, Gaussian quadrature expansions, and tail mass.

Basis: products of probabilists' Hermite polynomials divided by sqrt(j!),
orthonormal under the standard Gaussian measure, so Parseval holds with unit
constant and bounded functions have total coefficient mass at most 1.

Coefficient expansion routes:

* tensor Gauss-Hermite quadrature for smooth integrands (arity <= 3);
* piecewise composite Gauss-Legendre against the Gaussian weight for 1-d
  integrands with known discontinuities (sign profiles), accurate far past
  what plain Gauss-Hermite achieves on jumps;
* a closed form for the 1-d sign coefficients, used as an independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as iter_product
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import CapacityError, ParameterError

MAX_QUADRATURE_ARITY = 3


def normalized_hermite_1d(max_degree: int, x: np.ndarray) -> np.ndarray:
    """Values h_0..h_max at the given points, shape (len(x), max_degree + 1).

    h_{j+1}(x) = (x h_j(x) - sqrt(j) h_{j-1}(x)) / sqrt(j+1).
    """
    x = np.asarray(x, dtype=float).ravel()
    out = np.empty((x.size, max_degree + 1))
    out[:, 0] = 1.0
    if max_degree >= 1:
        out[:, 1] = x
    for j in range(1, max_degree):
        out[:, j + 1] = (x * out[:, j] - math.sqrt(j) * out[:, j - 1]) / math.sqrt(j + 1)
    return out


def hermite_indices(arity: int, degree_cap: int) -> list[tuple[int, ...]]:
    """All multi-indices S with |S|_1 < degree_cap, lexicographic within degree."""
    if arity < 1 or degree_cap < 1:
        raise ParameterError("arity >= 1 and degree cap >= 1 required")
    indices: list[tuple[int, ...]] = []
    for total in range(degree_cap):
        indices.extend(_compositions(total, arity))
    return indices


def _compositions(total: int, parts: int) -> list[tuple[int, ...]]:
    if parts == 1:
        return [(total,)]
    out = []
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return out


def hermite_value(index: Sequence[int], points: np.ndarray) -> np.ndarray:
    """Product basis function h_S at row points in R^k."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    index = tuple(int(i) for i in index)
    if pts.shape[1] != len(index):
        raise ParameterError(
            f"index arity {len(index)} does not match point dimension {pts.shape[1]}"
        )
    out = np.ones(pts.shape[0])
    for coord, deg in enumerate(index):
        if deg:
            table = normalized_hermite_1d(deg, pts[:, coord])
            out = out * table[:, deg]
    return out


def hermite_design_matrix(indices: Sequence[tuple[int, ...]], points: np.ndarray) -> np.ndarray:
    """Matrix H with H[p, s] = h_{indices[s]}(points[p])."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    arity = pts.shape[1]
    max_deg = max((max(ix) for ix in indices), default=0)
    tables = [normalized_hermite_1d(max_deg, pts[:, c]) for c in range(arity)]
    h = np.ones((pts.shape[0], len(indices)))
    for s, index in enumerate(indices):
        for coord, deg in enumerate(index):
            if deg:
                h[:, s] *= tables[coord][:, deg]
    return h


def gauss_hermite_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights integrating against the standard Gaussian density."""
    nodes, weights = np.polynomial.hermite_e.hermegauss(order)
    return nodes, weights / math.sqrt(2.0 * math.pi)


def coefficients_quadrature(
    fn: Callable[[np.ndarray], np.ndarray],
    arity: int,
    degree_cap: int,
    order: int = 64,
) -> dict[tuple[int, ...], float]:
    """Coefficients of all |S|_1 < degree_cap by tensor Gauss-Hermite quadrature.

    Exact for polynomial integrands of 1-d degree < 2*order - degree_cap;
    accuracy degrades on discontinuous integrands (see the piecewise route).
    """
    if arity > MAX_QUADRATURE_ARITY:
        raise CapacityError(
            f"tensor quadrature supports arity <= {MAX_QUADRATURE_ARITY}, got {arity}"
        )
    nodes, weights = gauss_hermite_nodes(order)
    grids = np.array(list(iter_product(nodes, repeat=arity)))
    wgrid = np.prod(np.array(list(iter_product(weights, repeat=arity))), axis=1)
    values = np.asarray(fn(grids), dtype=float)
    indices = hermite_indices(arity, degree_cap)
    design = hermite_design_matrix(indices, grids)
    coeffs = design.T @ (wgrid * values)
    return {ix: float(c) for ix, c in zip(indices, coeffs)}


def _gauss_legendre_panels(breaks: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    base_x, base_w = np.polynomial.legendre.leggauss(order)
    los, his = breaks[:-1], breaks[1:]
    half = 0.5 * (his - los)
    mid = 0.5 * (his + los)
    x = (mid[:, None] + half[:, None] * base_x[None, :]).ravel()
    w = (half[:, None] * base_w[None, :]).ravel()
    return x, w


def coefficients_1d_piecewise(
    fn: Callable[[np.ndarray], np.ndarray],
    degree_cap: int,
    breakpoints: Sequence[float] = (),
    *,
    x_max: float = 14.0,
    panel_width: float = 0.05,
    order: int = 12,
) -> np.ndarray:
    """1-d coefficients c_0..c_{degree_cap - 1} by composite Gauss-Legendre.

    Integrates fn(x) h_j(x) phi(x) on panels that respect the declared
    discontinuities, so piecewise-smooth profiles (sign) expand to near
    machine precision even at degree several hundred.
    """
    pts = {-x_max, x_max}
    pts.update(float(b) for b in breakpoints if -x_max < float(b) < x_max)
    anchors = np.sort(np.array(list(pts)))
    breaks = [anchors[0]]
    for lo, hi in zip(anchors[:-1], anchors[1:]):
        n_panels = max(1, int(math.ceil((hi - lo) / panel_width)))
        breaks.extend(np.linspace(lo, hi, n_panels + 1)[1:])
    x, w = _gauss_legendre_panels(np.asarray(breaks), order)
    phi = np.exp(-0.5 * x ** 2) / math.sqrt(2.0 * math.pi)
    vals = np.asarray(fn(x), dtype=float)
    table = normalized_hermite_1d(degree_cap - 1, x)
    return table.T @ (w * phi * vals)


def sign_hermite_coefficients(degree_cap: int, theta: float = 0.0) -> np.ndarray:
    """Closed-form coefficients of sign(x - theta) up to degree_cap (exclusive).

    c_j = 2 phi(theta) He_{j-1}(theta) / sqrt(j!) for j >= 1 and
    c_0 = 1 - 2 Phi(theta); evaluated in log space for numerical range.
    """
    from scipy.stats import norm

    out = np.zeros(degree_cap)
    out[0] = 1.0 - 2.0 * norm.cdf(theta)
    if degree_cap == 1:
        return out
    if theta == 0.0:
        phi0 = 1.0 / math.sqrt(2.0 * math.pi)
        for j in range(1, degree_cap):
            if j % 2 == 0:
                continue
            m = (j - 1) // 2
            # log (2m-1)!! = lgamma(2m+1) - m log 2 - lgamma(m+1)
            log_dfact = math.lgamma(2 * m + 1) - m * math.log(2.0) - math.lgamma(m + 1)
            log_c = math.log(2.0 * phi0) + log_dfact - 0.5 * math.lgamma(j + 1)
            out[j] = ((-1.0) ** m) * math.exp(log_c)
        return out
    # general threshold: recurrence on the normalized values h_j(theta),
    # using c_j = 2 phi(theta) h_{j-1}(theta) / sqrt(j)
    phi_t = math.exp(-0.5 * theta ** 2) / math.sqrt(2.0 * math.pi)
    h_prev, h_curr = 1.0, theta  # h_0, h_1 at theta
    out[1] = 2.0 * phi_t * h_prev
    for j in range(2, degree_cap):
        out[j] = 2.0 * phi_t * h_curr / math.sqrt(j)
        # h_j = (theta h_{j-1} - sqrt(j-1) h_{j-2}) / sqrt(j)
        h_next = (theta * h_curr - math.sqrt(j - 1) * h_prev) / math.sqrt(j)
        h_prev, h_curr = h_curr, h_next
    return out


@dataclass(frozen=True)
class TailReport:
    """Hermite mass of a function beyond a degree cutoff."""

    tail_mass: float
    retained_mass: float
    degree_cap: int
    method: str
    smoothness_budget: Optional[float] = None  # 4*delta when derived from s-smoothness

    @property
    def within_budget(self) -> Optional[bool]:
        if self.smoothness_budget is None:
            return None
        return self.tail_mass < self.smoothness_budget


def hermite_tail_mass(
    f,
    degree_cap: int,
    quadrature_order: int = 64,
    *,
    breakpoints: Optional[Sequence[float]] = None,
    smoothness: Optional[float] = None,
    total_mass: float = 1.0,
) -> TailReport:
    """Coefficient mass of f beyond degree_cap: total_mass - sum_{|S|<cap} f_S^2.

    `f` is a :class:`~linjunta.oracle.QueryOracle` (queries are counted) or a
    plain batch callable with an `dim` hint of 1 when breakpoints are given.
    For sign-valued f, `total_mass` = E[f^2] = 1.  When `smoothness` is
    given, the report carries the 4*delta budget implied by the s-smooth
    tail bound at delta = s / sqrt(degree_cap).
    """
    from .oracle import QueryOracle, spec_breakpoints

    if isinstance(f, QueryOracle):
        dim = f.dim
        fn = f.evaluate_batch
        if breakpoints is None and f.metadata.spec is not None:
            breakpoints = spec_breakpoints(f.metadata.spec)
            if dim == 1:
                pass
            else:
                breakpoints = None
    else:
        fn = f
        dim = getattr(f, "dim", 1)
    if dim == 1 and breakpoints is not None:
        coeffs = coefficients_1d_piecewise(
            lambda x: fn(x[:, None] if isinstance(f, QueryOracle) else x),
            degree_cap,
            breakpoints,
        )
        method = "piecewise-gauss-legendre"
        retained = float(np.sum(coeffs ** 2))
    else:
        coeff_map = coefficients_quadrature(fn, dim, degree_cap, quadrature_order)
        method = "tensor-gauss-hermite"
        retained = float(sum(c * c for c in coeff_map.values()))
    budget = None
    if smoothness is not None:
        # tail <= delta e/(e-1) < 4 delta for s-smooth f at cap = 1/t, t = delta^2/s^2
        delta = smoothness / math.sqrt(degree_cap)
        budget = 4.0 * delta
    return TailReport(
        tail_mass=total_mass - retained,
        retained_mass=retained,
        degree_cap=degree_cap,
        method=method,
        smoothness_budget=budget,
    )
