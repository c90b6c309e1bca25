"""Black-box function oracles over Gaussian space.

Provides the built-in target families (halfspaces, intersections, boolean
tables over sign bits, tanh products, constants), deterministic adversarial
label corruption, seeded Gaussian sampling, exact query accounting with hard
budgets, the orthogonal-averaging operator, and Monte-Carlo correlation.

Corrupted oracles are genuine fixed functions: whether a point is flipped is
a pure function of (corruption seed, the point quantized to a 1e-9 grid), so
repeated queries at the same point always agree.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.stats import norm

from .errors import BudgetExceededError, InputError, ParameterError
from .linalg import Subspace
from .reporting import MCEstimate, mc_mean

# ---------------------------------------------------------------------------
# Seeded sampling
# ---------------------------------------------------------------------------


def rng_stream(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for (seed, stream indices); deterministic per tuple."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.default_rng(ss)


def sample_gaussian(dim: int, n_samples: int, seed: int, stream: int = 0) -> np.ndarray:
    """Standard normal points, shape (n_samples, dim), deterministic per (seed, stream)."""
    if dim < 1:
        raise ParameterError(f"dimension must be >= 1, got {dim}")
    return rng_stream(seed, stream).standard_normal((n_samples, dim))


# ---------------------------------------------------------------------------
# Noise scale for the Gaussian smoothing semigroup (shared with smoothing.py)
# ---------------------------------------------------------------------------


def noise_scale(t: float) -> float:
    """sqrt(1 - exp(-2t)): the noise standard deviation making the operator a semigroup."""
    if t <= 0:
        raise ParameterError(f"smoothing time must be positive, got {t}")
    return math.sqrt(-math.expm1(-2.0 * t))


# ---------------------------------------------------------------------------
# Function specifications
# ---------------------------------------------------------------------------


def _unit(vec) -> np.ndarray:
    arr = np.asarray(vec, dtype=float).ravel()
    norm_v = float(np.linalg.norm(arr))
    if not np.all(np.isfinite(arr)) or abs(norm_v - 1.0) > 1e-8:
        raise InputError(f"direction must be a unit vector, got norm {norm_v:.6g}")
    return arr / norm_v


@dataclass(frozen=True)
class Halfspace:
    """sign(<u, x> - theta), with sign(0) = +1."""

    u: np.ndarray
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "u", _unit(self.u))

    @property
    def dim(self) -> int:
        return self.u.size


@dataclass(frozen=True)
class SignTableJunta:
    """An arbitrary [-1, 1] table over the sign bits of k projections.

    directions: (k, n) unit rows; table indexed by bits b_i = 1{<u_i,x> >= theta_i}.
    Intersections of halfspaces and boolean-junta lifts are special cases.
    """

    directions: np.ndarray
    thetas: np.ndarray
    table: np.ndarray

    def __post_init__(self):
        dirs = np.atleast_2d(np.asarray(self.directions, dtype=float))
        dirs = np.stack([_unit(row) for row in dirs])
        thetas = np.asarray(self.thetas, dtype=float).ravel()
        k = dirs.shape[0]
        table = np.asarray(self.table, dtype=float)
        if table.shape != (2,) * k:
            raise InputError(f"table shape {table.shape} does not match arity {k}")
        if np.max(np.abs(table)) > 1.0 + 1e-12:
            raise InputError("table values must lie in [-1, 1]")
        if thetas.size != k:
            raise InputError("one threshold per direction is required")
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "table", np.clip(table, -1.0, 1.0))

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    @property
    def arity(self) -> int:
        return self.directions.shape[0]

    def directions_orthonormal(self) -> bool:
        gram = self.directions @ self.directions.T
        return bool(np.linalg.norm(gram - np.eye(self.arity)) < 1e-8)


def intersection_of_halfspaces(halfspaces: Sequence[Halfspace]) -> SignTableJunta:
    """+1 exactly where every halfspace is +1, else -1."""
    k = len(halfspaces)
    if k == 0:
        raise InputError("intersection requires at least one halfspace")
    dims = {h.dim for h in halfspaces}
    if len(dims) != 1:
        raise InputError("halfspaces live in different dimensions")
    table = -np.ones((2,) * k)
    table[(1,) * k] = 1.0
    return SignTableJunta(
        directions=np.stack([h.u for h in halfspaces]),
        thetas=np.array([h.theta for h in halfspaces]),
        table=table,
    )


def boolean_junta_lift(table, directions, thetas=None) -> SignTableJunta:
    """Lift a truth table over k sign bits to Gaussian space along given directions."""
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    k = dirs.shape[0]
    if thetas is None:
        thetas = np.zeros(k)
    return SignTableJunta(directions=dirs, thetas=np.asarray(thetas, float), table=table)


@dataclass(frozen=True)
class TanhJunta:
    """Product of tanh ridge factors: f(x) = prod_i tanh(gain_i * <u_i, x>)."""

    directions: np.ndarray
    gains: np.ndarray

    def __post_init__(self):
        dirs = np.atleast_2d(np.asarray(self.directions, dtype=float))
        dirs = np.stack([_unit(row) for row in dirs])
        gains = np.asarray(self.gains, dtype=float).ravel()
        if gains.size != dirs.shape[0]:
            raise InputError("one gain per direction is required")
        if np.any(gains <= 0):
            raise InputError("gains must be positive")
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "gains", gains)

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    @property
    def arity(self) -> int:
        return self.directions.shape[0]


@dataclass(frozen=True)
class Constant:
    c: float
    dim: int = 1

    def __post_init__(self):
        if abs(self.c) > 1.0:
            raise InputError(f"constant must lie in [-1, 1], got {self.c}")


FunctionSpec = Union[Halfspace, SignTableJunta, TanhJunta, Constant]


def spec_dim(spec: FunctionSpec) -> int:
    return spec.dim


def spec_directions(spec: FunctionSpec) -> Optional[np.ndarray]:
    """Orthonormal rows spanning the relevant subspace, when the spec is a junta."""
    if isinstance(spec, Halfspace):
        return spec.u[None, :]
    if isinstance(spec, (SignTableJunta, TanhJunta)):
        return np.asarray(spec.directions)
    return None


def spec_to_dict(spec: FunctionSpec) -> dict:
    if isinstance(spec, Halfspace):
        return {"type": "halfspace", "u": spec.u.tolist(), "theta": spec.theta}
    if isinstance(spec, SignTableJunta):
        return {
            "type": "sign-table",
            "directions": spec.directions.tolist(),
            "thetas": spec.thetas.tolist(),
            "table": spec.table.tolist(),
        }
    if isinstance(spec, TanhJunta):
        return {
            "type": "tanh-junta",
            "directions": spec.directions.tolist(),
            "gains": spec.gains.tolist(),
        }
    if isinstance(spec, Constant):
        return {"type": "constant", "c": spec.c, "dim": spec.dim}
    raise InputError(f"unknown spec type {type(spec)!r}")


def spec_from_dict(data: dict) -> FunctionSpec:
    kind = data.get("type")
    if kind == "halfspace":
        return Halfspace(u=np.asarray(data["u"], float), theta=float(data.get("theta", 0.0)))
    if kind == "sign-table":
        return SignTableJunta(
            directions=np.asarray(data["directions"], float),
            thetas=np.asarray(data["thetas"], float),
            table=np.asarray(data["table"], float),
        )
    if kind == "intersection":
        halfspaces = [
            Halfspace(u=np.asarray(h["u"], float), theta=float(h.get("theta", 0.0)))
            for h in data["halfspaces"]
        ]
        return intersection_of_halfspaces(halfspaces)
    if kind == "boolean-lift":
        return boolean_junta_lift(
            table=np.asarray(data["table"], float),
            directions=np.asarray(data["directions"], float),
            thetas=np.asarray(data["thetas"], float) if "thetas" in data else None,
        )
    if kind == "tanh-junta":
        return TanhJunta(
            directions=np.asarray(data["directions"], float),
            gains=np.asarray(data["gains"], float),
        )
    if kind == "constant":
        return Constant(c=float(data["c"]), dim=int(data.get("dim", 1)))
    raise InputError(f"unknown function spec type {kind!r}")


def corruption_to_dict(corruption: Optional[CorruptionSpec]) -> Optional[dict]:
    if corruption is None:
        return None
    return {"mode": corruption.mode, "rate": corruption.rate, "seed": corruption.seed}


def corruption_from_dict(data: Optional[dict]) -> Optional["CorruptionSpec"]:
    if not data:
        return None
    return CorruptionSpec(
        mode=data["mode"], rate=float(data["rate"]), seed=int(data.get("seed", 0))
    )


def _fourier_over_bits(table: np.ndarray) -> dict[tuple[int, ...], float]:
    """Coefficients of the +-1 bit expansion: table(b) = sum_S c_S prod_{i in S} b_i."""
    k = table.ndim
    coeffs: dict[tuple[int, ...], float] = {}
    bits = np.array(np.meshgrid(*[[-1.0, 1.0]] * k, indexing="ij"))  # (k, 2, 2, ...)
    flat_bits = bits.reshape(k, -1)
    flat_table = table.reshape(-1)
    for s_mask in range(2 ** k):
        subset = tuple(i for i in range(k) if (s_mask >> i) & 1)
        chi = np.prod(flat_bits[list(subset), :], axis=0) if subset else np.ones(flat_table.size)
        c = float(np.dot(flat_table, chi) / flat_table.size)
        if abs(c) > 1e-15:
            coeffs[subset] = c
    return coeffs


def spec_eval(spec: FunctionSpec, points: np.ndarray) -> np.ndarray:
    """Clean (uncorrupted) evaluation on a batch of row points."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(spec, Constant):
        return np.full(x.shape[0], spec.c)
    if isinstance(spec, Halfspace):
        proj = x @ spec.u
        return np.where(proj >= spec.theta, 1.0, -1.0)
    if isinstance(spec, SignTableJunta):
        proj = x @ spec.directions.T  # (N, k)
        bits = (proj >= spec.thetas).astype(int)
        idx = tuple(bits[:, i] for i in range(spec.arity))
        return spec.table[idx]
    if isinstance(spec, TanhJunta):
        proj = x @ spec.directions.T
        return np.prod(np.tanh(proj * spec.gains), axis=1)
    raise InputError(f"unknown spec type {type(spec)!r}")


def spec_grad(spec: FunctionSpec, points: np.ndarray) -> np.ndarray:
    """Analytic gradient for differentiable specs (tanh products, constants)."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(spec, Constant):
        return np.zeros_like(x)
    if isinstance(spec, TanhJunta):
        proj = x @ spec.directions.T
        th = np.tanh(proj * spec.gains)  # (N, k)
        sech2 = 1.0 - th ** 2
        grad = np.zeros_like(x)
        for i in range(spec.arity):
            others = np.prod(np.delete(th, i, axis=1), axis=1) if spec.arity > 1 else 1.0
            coeff = spec.gains[i] * sech2[:, i] * others
            grad += coeff[:, None] * spec.directions[i][None, :]
        return grad
    raise InputError(f"spec type {type(spec).__name__} has no analytic gradient")


# --- closed-form smoothed values and gradients ------------------------------
#
# The smoothing operator acts independently along orthonormal directions, so
# products of one-dimensional ridge factors smooth factor by factor.  Sign
# factors have Gaussian-cdf closed forms; tanh factors use Gauss-Hermite
# quadrature (deterministic, accurate to ~1e-12).

_GH_ORDER = 96
_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite_e.hermegauss(_GH_ORDER)
_GH_WEIGHTS = _GH_WEIGHTS / math.sqrt(2.0 * math.pi)


def smoothed_sign_factor(s: np.ndarray, theta: float, t: float) -> np.ndarray:
    sigma = noise_scale(t)
    return 2.0 * norm.cdf((math.exp(-t) * s - theta) / sigma) - 1.0


def smoothed_sign_factor_deriv(s: np.ndarray, theta: float, t: float) -> np.ndarray:
    sigma = noise_scale(t)
    e = math.exp(-t)
    return 2.0 * norm.pdf((e * s - theta) / sigma) * e / sigma


def _smoothed_tanh_factor(s: np.ndarray, gain: float, t: float) -> np.ndarray:
    sigma = noise_scale(t)
    e = math.exp(-t)
    args = gain * (e * s[..., None] + sigma * _GH_NODES)
    return np.tanh(args) @ _GH_WEIGHTS


def _smoothed_tanh_factor_deriv(s: np.ndarray, gain: float, t: float) -> np.ndarray:
    sigma = noise_scale(t)
    e = math.exp(-t)
    args = gain * (e * s[..., None] + sigma * _GH_NODES)
    return (gain * e * (1.0 - np.tanh(args) ** 2)) @ _GH_WEIGHTS


def _require_orthonormal_directions(spec) -> None:
    if isinstance(spec, SignTableJunta) and not spec.directions_orthonormal():
        raise InputError(
            "closed-form smoothing requires pairwise orthonormal directions"
        )
    if isinstance(spec, TanhJunta):
        gram = spec.directions @ spec.directions.T
        if np.linalg.norm(gram - np.eye(spec.arity)) > 1e-8:
            raise InputError(
                "closed-form smoothing requires pairwise orthonormal directions"
            )


def has_smoothed_closed_form(spec: FunctionSpec) -> bool:
    if isinstance(spec, (Constant, Halfspace)):
        return True
    if isinstance(spec, SignTableJunta):
        return spec.directions_orthonormal()
    if isinstance(spec, TanhJunta):
        gram = spec.directions @ spec.directions.T
        return bool(np.linalg.norm(gram - np.eye(spec.arity)) < 1e-8)
    return False


def spec_smoothed_eval(spec: FunctionSpec, t: float, points: np.ndarray) -> np.ndarray:
    """Closed-form value of the noise-smoothed spec at time t."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(spec, Constant):
        return np.full(x.shape[0], spec.c)
    if isinstance(spec, Halfspace):
        return smoothed_sign_factor(x @ spec.u, spec.theta, t)
    _require_orthonormal_directions(spec)
    proj = x @ spec.directions.T  # (N, k)
    if isinstance(spec, SignTableJunta):
        factors = np.stack(
            [smoothed_sign_factor(proj[:, i], spec.thetas[i], t) for i in range(spec.arity)],
            axis=1,
        )
        coeffs = _fourier_over_bits(spec.table)
        out = np.zeros(x.shape[0])
        for subset, c in coeffs.items():
            term = np.full(x.shape[0], c)
            for i in subset:
                term = term * factors[:, i]
            out += term
        return out
    if isinstance(spec, TanhJunta):
        factors = np.stack(
            [_smoothed_tanh_factor(proj[:, i], spec.gains[i], t) for i in range(spec.arity)],
            axis=1,
        )
        return np.prod(factors, axis=1)
    raise InputError(f"no closed-form smoothing for {type(spec).__name__}")


def spec_smoothed_grad(spec: FunctionSpec, t: float, points: np.ndarray) -> np.ndarray:
    """Closed-form gradient of the noise-smoothed spec at time t."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(spec, Constant):
        return np.zeros_like(x)
    if isinstance(spec, Halfspace):
        d = smoothed_sign_factor_deriv(x @ spec.u, spec.theta, t)
        return d[:, None] * spec.u[None, :]
    _require_orthonormal_directions(spec)
    proj = x @ spec.directions.T
    if isinstance(spec, SignTableJunta):
        vals = np.stack(
            [smoothed_sign_factor(proj[:, i], spec.thetas[i], t) for i in range(spec.arity)],
            axis=1,
        )
        ders = np.stack(
            [smoothed_sign_factor_deriv(proj[:, i], spec.thetas[i], t) for i in range(spec.arity)],
            axis=1,
        )
        coeffs = _fourier_over_bits(spec.table)
        grad = np.zeros_like(x)
        for subset, c in coeffs.items():
            for i in subset:
                term = np.full(x.shape[0], c) * ders[:, i]
                for j in subset:
                    if j != i:
                        term = term * vals[:, j]
                grad += term[:, None] * spec.directions[i][None, :]
        return grad
    if isinstance(spec, TanhJunta):
        vals = np.stack(
            [_smoothed_tanh_factor(proj[:, i], spec.gains[i], t) for i in range(spec.arity)],
            axis=1,
        )
        ders = np.stack(
            [_smoothed_tanh_factor_deriv(proj[:, i], spec.gains[i], t) for i in range(spec.arity)],
            axis=1,
        )
        grad = np.zeros_like(x)
        for i in range(spec.arity):
            others = np.prod(np.delete(vals, i, axis=1), axis=1) if spec.arity > 1 else 1.0
            grad += (ders[:, i] * others)[:, None] * spec.directions[i][None, :]
        return grad
    raise InputError(f"no closed-form smoothing for {type(spec).__name__}")


def spec_smoothness_bound(spec: FunctionSpec) -> float:
    """A safe smoothness parameter for the spec (not tight)."""
    if isinstance(spec, Constant):
        return 1e-9
    if isinstance(spec, Halfspace):
        return 1.0
    if isinstance(spec, SignTableJunta):
        return float(spec.arity)
    if isinstance(spec, TanhJunta):
        return float(1.2 * np.sqrt(spec.arity) * np.max(spec.gains))
    raise InputError(f"unknown spec type {type(spec)!r}")


def spec_breakpoints(spec: FunctionSpec):
    """Discontinuity locations of the 1-d profile, when the spec is a 1-d ridge."""
    if isinstance(spec, Halfspace):
        return [float(spec.theta)]
    if isinstance(spec, SignTableJunta) and spec.arity == 1:
        return [float(spec.thetas[0])]
    return []


# ---------------------------------------------------------------------------
# Deterministic corruption
# ---------------------------------------------------------------------------

_QUANT_GRID = 1e-9
_MIX_CONST_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_CONST_2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _mix64(v: np.ndarray) -> np.ndarray:
    v = v.astype(np.uint64, copy=True)
    v ^= v >> np.uint64(30)
    v *= _MIX_CONST_1
    v ^= v >> np.uint64(27)
    v *= _MIX_CONST_2
    v ^= v >> np.uint64(31)
    return v


def point_hash_uniform(seed: int, points: np.ndarray) -> np.ndarray:
    """Uniform [0,1) values that are a pure function of (seed, 1e-9-quantized point)."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    q = np.round(x / _QUANT_GRID).astype(np.int64).view(np.uint64)
    h = np.full(x.shape[0], np.uint64(seed) ^ _GOLDEN, dtype=np.uint64)
    for j in range(x.shape[1]):
        col_key = _mix64(np.array([np.uint64(j) + _GOLDEN], dtype=np.uint64))[0]
        h = _mix64(h ^ (q[:, j] * col_key | np.uint64(1)))
    return h.astype(np.float64) / float(2 ** 64)


@dataclass(frozen=True)
class CorruptionSpec:
    """Deterministic label corruption of measure `rate`.

    random-flip: flip on a pseudo-random measure-`rate` set (hash of the
    quantized point).  adversarial-band-flip: flip exactly on the band
    tau <= <u, x> < tau' adjacent to the target's decision threshold, with
    Gaussian band mass `rate`.
    """

    mode: str
    rate: float
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("random-flip", "adversarial-band-flip"):
            raise ParameterError(f"unknown corruption mode {self.mode!r}")
        if not 0.0 <= self.rate < 0.5:
            raise ParameterError(f"corruption rate must lie in [0, 1/2), got {self.rate}")


def _band_for_rate(theta: float, rate: float) -> tuple[float, float]:
    mass_above = 1.0 - norm.cdf(theta)
    if mass_above >= rate:
        return theta, float(norm.ppf(norm.cdf(theta) + rate))
    return float(norm.ppf(norm.cdf(theta) - rate)), theta


def _corrupted_eval(
    spec: FunctionSpec, corruption: CorruptionSpec, points: np.ndarray
) -> np.ndarray:
    clean = spec_eval(spec, points)
    if corruption.rate == 0.0:
        return clean
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if corruption.mode == "random-flip":
        flips = point_hash_uniform(corruption.seed, x) < corruption.rate
    else:
        dirs = spec_directions(spec)
        if dirs is None:
            raise ParameterError("adversarial-band-flip requires a junta target")
        theta = 0.0
        if isinstance(spec, Halfspace):
            theta = spec.theta
        elif isinstance(spec, SignTableJunta):
            theta = float(spec.thetas[0])
        lo, hi = _band_for_rate(theta, corruption.rate)
        proj = x @ dirs[0]
        flips = (proj >= lo) & (proj < hi)
    return np.where(flips, -clean, clean)


# ---------------------------------------------------------------------------
# Query oracle
# ---------------------------------------------------------------------------


@dataclass
class OracleMetadata:
    """Optional analytic descriptors attached to an oracle."""

    spec: Optional[FunctionSpec] = None
    corruption: Optional[CorruptionSpec] = None
    directions: Optional[np.ndarray] = None
    smoothness: Optional[float] = None
    junta_dim: Optional[int] = None
    extra: dict = field(default_factory=dict)


class QueryOracle:
    """A black-box map from points in R^n to values in [-1, 1].

    The query counter increments by exactly one per evaluated point and is
    guarded by a lock so concurrent readers share one monotone count.  When
    a budget is set, any batch that would exceed it raises
    :class:`BudgetExceededError` before evaluating.
    """

    def __init__(
        self,
        fn: Callable[[np.ndarray], np.ndarray],
        dim: int,
        *,
        metadata: Optional[OracleMetadata] = None,
        max_queries: Optional[int] = None,
        label: str = "oracle",
    ):
        self._fn = fn
        self.dim = int(dim)
        self.metadata = metadata or OracleMetadata()
        self.max_queries = max_queries
        self.label = label
        self._count = 0
        self._lock = threading.Lock()

    @property
    def query_count(self) -> int:
        with self._lock:
            return self._count

    def reset_counter(self) -> None:
        with self._lock:
            self._count = 0

    def _charge(self, n: int) -> None:
        with self._lock:
            if self.max_queries is not None and self._count + n > self.max_queries:
                raise BudgetExceededError(
                    f"query budget {self.max_queries} for {self.label} would be exceeded",
                    queries_used=self._count,
                )
            self._count += n

    def evaluate_batch(self, points: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(points, dtype=float))
        if x.shape[1] != self.dim:
            raise InputError(f"expected points in R^{self.dim}, got shape {x.shape}")
        self._charge(x.shape[0])
        values = np.asarray(self._fn(x), dtype=float)
        if values.shape != (x.shape[0],):
            raise InputError("oracle function returned a mis-shaped batch")
        peak = float(np.max(np.abs(values))) if values.size else 0.0
        if peak > 1.0 + 1e-9:
            raise InputError(f"oracle value out of [-1, 1]: magnitude {peak:.6g}")
        return np.clip(values, -1.0, 1.0)

    def evaluate(self, x) -> float:
        return float(self.evaluate_batch(np.asarray(x, dtype=float)[None, :])[0])


def make_oracle(
    spec: FunctionSpec,
    corruption: Optional[CorruptionSpec] = None,
    *,
    max_queries: Optional[int] = None,
) -> QueryOracle:
    """Build a counting oracle for a target spec, optionally label-corrupted."""
    if corruption is None:
        fn = lambda pts: spec_eval(spec, pts)  # noqa: E731
    else:
        fn = lambda pts: _corrupted_eval(spec, corruption, pts)  # noqa: E731
    meta = OracleMetadata(
        spec=spec,
        corruption=corruption,
        directions=spec_directions(spec),
        smoothness=spec_smoothness_bound(spec),
        junta_dim=None if spec_directions(spec) is None else spec_directions(spec).shape[0],
    )
    return QueryOracle(fn, spec_dim(spec), metadata=meta, max_queries=max_queries)


def oracle_from_callable(
    fn: Callable[[np.ndarray], np.ndarray],
    dim: int,
    *,
    max_queries: Optional[int] = None,
    label: str = "callable",
) -> QueryOracle:
    return QueryOracle(fn, dim, max_queries=max_queries, label=label)


# ---------------------------------------------------------------------------
# Averaging over directions orthogonal to a subspace, and correlations
# ---------------------------------------------------------------------------


def subspace_average(
    f: QueryOracle,
    subspace: Subspace,
    x,
    n_samples: int,
    seed: int,
    stream: int = 0,
) -> MCEstimate:
    """Monte-Carlo estimate of the orthogonal-average value at x.

    Averages f over re-randomized components orthogonal to the subspace:
    E_z[f(P x + (I - P) z)].
    """
    if subspace.ambient_dim != f.dim:
        raise InputError("subspace and oracle dimensions differ")
    x = np.asarray(x, dtype=float).ravel()
    z = sample_gaussian(f.dim, n_samples, seed, stream)
    pts = subspace.project(x[None, :]) + subspace.complement_project(z)
    return mc_mean(f.evaluate_batch(pts))


def correlation_mc(
    f: QueryOracle, g: QueryOracle, n_samples: int, seed: int, stream: int = 0
) -> MCEstimate:
    """Empirical Gaussian correlation E[f(x) g(x)] with standard error."""
    if f.dim != g.dim:
        raise InputError("oracles live in different ambient dimensions")
    x = sample_gaussian(f.dim, n_samples, seed, stream)
    return mc_mean(f.evaluate_batch(x) * g.evaluate_batch(x))


def disagreement_mc(
    f: QueryOracle, g: QueryOracle, n_samples: int, seed: int, stream: int = 0
) -> MCEstimate:
    """Empirical disagreement probability for (nearly) sign-valued oracles."""
    if f.dim != g.dim:
        raise InputError("oracles live in different ambient dimensions")
    x = sample_gaussian(f.dim, n_samples, seed, stream)
    fv = f.evaluate_batch(x)
    gv = g.evaluate_batch(x)
    return mc_mean((np.sign(fv) != np.sign(gv)).astype(float))
