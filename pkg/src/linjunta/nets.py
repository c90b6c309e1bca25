"""Enumerable nets of smooth low-dimensional functions and subspaces.

Three constructions combine into the search space used by the tester:

* :class:`SmoothNet` - truncated-Hermite functions on R^k whose coefficient
  vectors range over a lattice inside the unit ball (bounded functions have
  coefficient mass at most 1), smoothed by damping coefficients and clamped
  to [-1, 1].  Clamping cannot increase the L2 distance to any [-1,1]-valued
  target, so it never hurts coverage.
* :func:`subspace_net` - spans of k-tuples from a greedy covering of the
  unit sphere, pruned of nearly-degenerate tuples.
* :func:`junta_net` - the composition (function, subspace) covering induced
  low-dimensional functions on R^m, specialized per class: the averaged
  halfspace class keeps its exact Gaussian-cdf ramp form instead of lattice
  approximations.

Every net records the theoretical size formula next to the enumerated size
and refuses to enumerate past a configurable cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Union

import numpy as np
from scipy.stats import norm

from .errors import InputError, NetSizeError, ParameterError
from .hermite import hermite_design_matrix, hermite_indices
from .linalg import Subspace
from .oracle import rng_stream
from .reporting import CheckResult

# ---------------------------------------------------------------------------
# Net elements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HermiteNetFunction:
    """A clamped, noise-damped truncated Hermite expansion on R^k."""

    indices: tuple[tuple[int, ...], ...]
    coefficients: np.ndarray
    damping_u: float = 0.0
    clamped: bool = True

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=float)
        if coeffs.shape != (len(self.indices),):
            raise InputError("one coefficient per index is required")
        if float(coeffs @ coeffs) > 1.0 + 1e-9:
            raise InputError("coefficient mass exceeds the unit ball")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def arity(self) -> int:
        return len(self.indices[0]) if self.indices else 1

    def _damped(self) -> np.ndarray:
        if self.damping_u == 0.0:
            return self.coefficients
        degrees = np.array([sum(ix) for ix in self.indices], dtype=float)
        return self.coefficients * np.exp(-self.damping_u * degrees)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vals = hermite_design_matrix(list(self.indices), pts) @ self._damped()
        return np.clip(vals, -1.0, 1.0) if self.clamped else vals

    def lipschitz_estimate(self, n_probe: int = 4096, seed: int = 7) -> float:
        """Empirical sup of the pre-clamp gradient norm over Gaussian probes."""
        rng = rng_stream(seed, 41)
        pts = rng.standard_normal((n_probe, self.arity))
        c = self._damped()
        grad_sq = np.zeros(n_probe)
        for coord in range(self.arity):
            shifted = []
            scale = []
            for ix in self.indices:
                if ix[coord] == 0:
                    continue
                low = list(ix)
                low[coord] -= 1
                shifted.append(tuple(low))
                scale.append(math.sqrt(ix[coord]))
            if not shifted:
                continue
            design = hermite_design_matrix(shifted, pts)
            sel = [i for i, ix in enumerate(self.indices) if ix[coord] > 0]
            partial = design @ (c[sel] * np.array(scale))
            grad_sq += partial ** 2
        return float(np.sqrt(grad_sq.max())) * 1.05

    def label(self) -> str:
        nz = [(ix, c) for ix, c in zip(self.indices, self.coefficients) if abs(c) > 1e-12]
        inner = ",".join(f"{ix}:{c:.3g}" for ix, c in nz) or "0"
        return f"hermite[{inner}]"

    def to_dict(self) -> dict:
        return {
            "type": "hermite",
            "indices": [list(ix) for ix in self.indices],
            "coefficients": self.coefficients.tolist(),
            "damping_u": self.damping_u,
            "clamped": self.clamped,
        }


@dataclass(frozen=True)
class PhiRamp:
    """Gaussian-cdf ramp on R^1: 2 Phi(a y + b) - 1; slope None means sign(y + b).

    These are exactly the one-dimensional averages of halfspaces embedded
    along partially hidden directions, so the averaged halfspace class is
    represented in closed form.
    """

    slope: Optional[float]
    bias: float = 0.0

    @property
    def arity(self) -> int:
        return 1

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        y = np.atleast_2d(np.asarray(points, dtype=float))[:, 0]
        if self.slope is None:
            return np.where(y + self.bias >= 0.0, 1.0, -1.0)
        return 2.0 * norm.cdf(self.slope * y + self.bias) - 1.0

    @property
    def lipschitz(self) -> Optional[float]:
        if self.slope is None:
            return None
        return 2.0 * self.slope / math.sqrt(2.0 * math.pi)

    def label(self) -> str:
        a = "inf" if self.slope is None else f"{self.slope:g}"
        return f"ramp[a={a},b={self.bias:g}]"

    def to_dict(self) -> dict:
        return {"type": "phi-ramp", "slope": self.slope, "bias": self.bias}


@dataclass(frozen=True)
class AveragedElement:
    """Monte-Carlo average of a base element embedded along a hidden subspace.

    value(x) = mean_j base(W^T [x; z_j]) over a frozen Gaussian panel, for an
    orthonormal-column W of shape (2k, k).
    """

    base: "NetElement"
    w: np.ndarray
    z_panel: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        k = w.shape[1]
        if w.shape[0] != 2 * k:
            raise InputError("embedding matrix must have shape (2k, k)")
        if np.linalg.norm(w.T @ w - np.eye(k)) > 1e-8:
            raise InputError("embedding matrix must have orthonormal columns")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "z_panel", np.asarray(self.z_panel, dtype=float))

    @property
    def arity(self) -> int:
        return self.w.shape[1]

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(points, dtype=float))
        k = self.arity
        top, bottom = self.w[:k], self.w[k:]
        args = x @ top + 0.0  # (N, k)
        zargs = self.z_panel @ bottom  # (J, k)
        stacked = args[:, None, :] + zargs[None, :, :]
        vals = self.base.evaluate(stacked.reshape(-1, k))
        return vals.reshape(x.shape[0], -1).mean(axis=1)

    def label(self) -> str:
        return f"avg[{self.base.label()}]"

    def to_dict(self) -> dict:
        return {
            "type": "averaged",
            "base": self.base.to_dict(),
            "w": self.w.tolist(),
            "z_panel": self.z_panel.tolist(),
        }


NetElement = Union[HermiteNetFunction, PhiRamp, AveragedElement]


def element_from_dict(data: dict) -> NetElement:
    kind = data["type"]
    if kind == "hermite":
        return HermiteNetFunction(
            indices=tuple(tuple(ix) for ix in data["indices"]),
            coefficients=np.asarray(data["coefficients"], float),
            damping_u=data.get("damping_u", 0.0),
            clamped=data.get("clamped", True),
        )
    if kind == "phi-ramp":
        return PhiRamp(slope=data["slope"], bias=data["bias"])
    if kind == "averaged":
        return AveragedElement(
            base=element_from_dict(data["base"]),
            w=np.asarray(data["w"], float),
            z_panel=np.asarray(data["z_panel"], float),
        )
    raise InputError(f"unknown element type {kind!r}")


# ---------------------------------------------------------------------------
# Class specifications and averaging
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AllSmoothClass:
    """Every s-smooth function on R^k."""

    s: float
    arity: int = 1


@dataclass(frozen=True)
class HalfspaceClass:
    """Halfspaces sign(<w, y> - theta) on R^k."""

    arity: int = 1
    theta_grid: tuple[float, ...] = (-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5)


@dataclass(frozen=True)
class PhiRampClass:
    """Gaussian-cdf ramp ridges: the closed form of averaged halfspaces."""

    arity: int = 1
    slopes: tuple[Optional[float], ...] = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, None)
    biases: tuple[float, ...] = tuple(np.round(np.linspace(-2.4, 2.4, 13), 6))

    def members(self) -> list[PhiRamp]:
        return [PhiRamp(a, b) for a in self.slopes for b in self.biases]


@dataclass(frozen=True)
class ExplicitClass:
    """A finite list of concrete members on R^k."""

    members: tuple[NetElement, ...]
    arity: int
    s: float = 1.0


ClassSpec = Union[AllSmoothClass, HalfspaceClass, PhiRampClass, ExplicitClass]


def class_smoothness(cls: ClassSpec) -> float:
    if isinstance(cls, AllSmoothClass):
        return cls.s
    if isinstance(cls, (HalfspaceClass, PhiRampClass)):
        return 1.0
    return cls.s


def averaged_class(
    cls: ClassSpec, *, n_embeddings: int = 8, panel_size: int = 512, seed: int = 97
) -> ClassSpec:
    """Close the class under hidden-subspace embedding and re-averaging.

    all-smooth is already closed.  Halfspaces average to the Gaussian-cdf
    ramp family in closed form (the identity embedding keeps the original
    halfspaces: slope None).  Explicit classes are averaged by Monte Carlo
    over sampled orthonormal (2k) x k embeddings, keeping the identity
    embedding as the first member.
    """
    if isinstance(cls, AllSmoothClass):
        return cls
    if isinstance(cls, PhiRampClass):
        return cls
    if isinstance(cls, HalfspaceClass):
        biases = sorted({round(-t, 6) for t in cls.theta_grid} | {0.0})
        return PhiRampClass(arity=cls.arity, biases=tuple(biases) or (0.0,))
    if isinstance(cls, ExplicitClass):
        k = cls.arity
        rng = rng_stream(seed, 43)
        members: list[NetElement] = list(cls.members)
        identity = np.vstack([np.eye(k), np.zeros((k, k))])
        panel = rng.standard_normal((panel_size, k))
        for g in cls.members:
            members.append(AveragedElement(base=g, w=identity, z_panel=panel))
            for _ in range(n_embeddings):
                raw = rng.standard_normal((2 * k, k))
                q, _ = np.linalg.qr(raw)
                members.append(AveragedElement(base=g, w=q[:, :k], z_panel=panel))
        return ExplicitClass(members=tuple(members), arity=k, s=cls.s)
    raise InputError(f"unknown class spec {type(cls)!r}")


# ---------------------------------------------------------------------------
# Smooth-function net: coefficient lattice in the unit ball
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NetCaps:
    """Feasibility limits for net enumeration."""

    max_elements: int = 1_000_000
    degree_cap: int = 3
    grid_step: float = 0.5
    subspace_eps_floor: float = 0.1
    sphere_seed: int = 2024
    sphere_candidates: int = 60_000


def _ball_lattice_count(dim: int, budget: int) -> int:
    """Integer vectors v in Z^dim with sum v_i^2 <= budget, by dynamic programming."""
    ways = np.zeros(budget + 1, dtype=np.int64)
    ways[0] = 1
    values = [0] + [v for v in range(1, int(math.isqrt(budget)) + 1)]
    for _ in range(dim):
        new = np.zeros_like(ways)
        for v in values:
            sq = v * v
            mult = 1 if v == 0 else 2
            new[sq:] += mult * ways[: budget + 1 - sq]
        ways = new
    return int(ways.sum())


def _ball_lattice_iter(dim: int, budget: int) -> Iterator[tuple[int, ...]]:
    prefix: list[int] = []

    def rec(remaining_dims: int, remaining_budget: int):
        if remaining_dims == 0:
            yield tuple(prefix)
            return
        vmax = int(math.isqrt(remaining_budget))
        for v in range(-vmax, vmax + 1):
            prefix.append(v)
            yield from rec(remaining_dims - 1, remaining_budget - v * v)
            prefix.pop()

    yield from rec(dim, budget)


class SmoothNet:
    """Lattice net over truncated-Hermite coefficient vectors on R^k.

    The theoretical schedule (recorded, not enumerated) truncates at degree
    (40 s / eps)^2 and uses grid eps/40; the practical caps pick the degree
    and grid actually enumerated.  Elements are damped by u = eps^2/s^2 and
    clamped, matching the Lipschitz-smoothing step of the construction.
    """

    def __init__(self, k: int, s: float, eps: float, caps: NetCaps):
        if k < 1 or s <= 0 or eps <= 0:
            raise ParameterError("need k >= 1, s > 0, eps > 0")
        self.k = k
        self.s = s
        self.eps = eps
        self.caps = caps
        self.indices = tuple(hermite_indices(k, caps.degree_cap))
        self.grid = caps.grid_step
        self.damping_u = eps ** 2 / s ** 2
        self._budget = int(1.0 / self.grid ** 2 + 1e-9)
        delta_theory = eps / 40.0
        t_theory = delta_theory ** 2 / s ** 2
        self.theory = {
            "delta": delta_theory,
            "t": t_theory,
            "degree_cap": 1.0 / t_theory,
            "log10_size_bound": (s ** 2 / eps ** 2) * math.log10(max(k, 2))
            + math.log10(40.0 / eps),
        }

    @property
    def dim(self) -> int:
        return len(self.indices)

    def cardinality(self) -> int:
        return _ball_lattice_count(self.dim, self._budget)

    def _element(self, steps: Sequence[int]) -> HermiteNetFunction:
        coeffs = np.asarray(steps, dtype=float) * self.grid
        return HermiteNetFunction(
            indices=self.indices, coefficients=coeffs, damping_u=self.damping_u
        )

    def __iter__(self) -> Iterator[HermiteNetFunction]:
        size = self.cardinality()
        if size > self.caps.max_elements:
            raise NetSizeError(
                "smooth-function net too large to enumerate", size, self.caps.max_elements
            )
        for steps in _ball_lattice_iter(self.dim, self._budget):
            yield self._element(steps)

    def nearest(self, target_coefficients) -> HermiteNetFunction:
        """Lattice element nearest to a coefficient vector (rounded, ball-projected)."""
        target = np.asarray(target_coefficients, dtype=float)
        if target.shape != (self.dim,):
            raise InputError(f"expected {self.dim} coefficients, got {target.shape}")
        steps = np.round(target / self.grid).astype(int)
        while steps @ steps > self._budget:
            scale = math.sqrt(self._budget / float(steps @ steps))
            steps = np.round(steps * scale * 0.999).astype(int)
        return self._element(steps)


def smooth_net(k: int, s: float, eps: float, caps: NetCaps) -> SmoothNet:
    return SmoothNet(k, s, eps, caps)


# ---------------------------------------------------------------------------
# Sphere and subspace nets
# ---------------------------------------------------------------------------


def sphere_net(m: int, delta: float, caps: NetCaps) -> np.ndarray:
    """A delta-net of the unit sphere in R^m by greedy farthest-point covering."""
    if delta <= 0:
        raise ParameterError("net radius must be positive")
    if m == 1:
        return np.array([[1.0], [-1.0]])
    est = (1.0 + 2.0 / delta) ** m
    if est > 50 * caps.max_elements:
        raise NetSizeError(
            f"sphere net in R^{m} at radius {delta} is infeasible",
            int(min(est, 2 ** 62)),
            caps.max_elements,
        )
    rng = rng_stream(caps.sphere_seed, 47, m)
    cand = rng.standard_normal((caps.sphere_candidates, m))
    cand /= np.linalg.norm(cand, axis=1, keepdims=True)
    first = np.zeros(m)
    first[0] = 1.0
    net = [first]
    dist = np.linalg.norm(cand - first, axis=1)
    while True:
        idx = int(np.argmax(dist))
        if dist[idx] <= delta:
            break
        point = cand[idx]
        net.append(point)
        if len(net) > caps.max_elements:
            raise NetSizeError("sphere net exceeded the element cap", len(net), caps.max_elements)
        dist = np.minimum(dist, np.linalg.norm(cand - point, axis=1))
    return np.asarray(net)


def subspace_net_delta(eps: float, k: int) -> float:
    """Sphere-net radius guaranteeing projector coverage eps for k-tuples.

    The projector distance of spans built from delta-close tuples is at most
    (sqrt(2) k + 2 sqrt(k)) delta.
    """
    return eps / (math.sqrt(2.0) * k + 2.0 * math.sqrt(k))


def subspace_net(m: int, k: int, eps: float, caps: NetCaps) -> list[Subspace]:
    """Spans of k-tuples from a sphere net, covering k-subspaces of R^m.

    Guarantees that every k-dimensional subspace has a net member within
    projector Frobenius distance eps.  Nearly-degenerate tuples (smallest
    tuple singular value < 0.5) cannot approximate an orthonormal frame and
    are pruned.
    """
    if k > m:
        raise ParameterError(f"cannot cover {k}-subspaces of R^{m}")
    if k == m:
        return [Subspace(m, np.eye(m))]
    delta = subspace_net_delta(eps, k)
    points = sphere_net(m, delta, caps)
    n_points = len(points)
    card = math.comb(n_points, k)
    if card > caps.max_elements:
        raise NetSizeError("subspace net too large to enumerate", card, caps.max_elements)
    out: list[Subspace] = []
    from itertools import combinations

    for combo in combinations(range(n_points), k):
        tup = points[list(combo)]
        if k > 1:
            sv = np.linalg.svd(tup, compute_uv=False)
            if sv[-1] < 0.5:
                continue
        out.append(Subspace.from_span(tup))
    return out


def subspace_covering_audit(
    net: Sequence[Subspace], m: int, k: int, eps: float, n_probes: int, seed: int
) -> CheckResult:
    """Randomized audit: Haar-random k-subspaces all within eps of the net."""
    rng = rng_stream(seed, 53)
    worst = 0.0
    projectors = [sub.projector() for sub in net]
    for _ in range(n_probes):
        q, _ = np.linalg.qr(rng.standard_normal((m, k)))
        target = q[:, :k] @ q[:, :k].T
        best = min(float(np.linalg.norm(target - p)) for p in projectors)
        worst = max(worst, best)
    return CheckResult.from_sides(
        "subspace-net-covering",
        worst,
        eps,
        details={"n_probes": n_probes, "net_size": len(net)},
    )


# ---------------------------------------------------------------------------
# Composed junta net
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JuntaNetElement:
    func: NetElement
    basis: np.ndarray  # (m, arity) orthonormal columns mapping coords to the element input
    label: str

    def evaluate_coords(self, coords: np.ndarray) -> np.ndarray:
        """Element values given coordinate rows in R^m."""
        y = np.atleast_2d(coords) @ self.basis
        return self.func.evaluate(y)


@dataclass
class JuntaNet:
    """An enumerated net of (function on R^k, k-subspace of R^m) compositions."""

    elements: list[JuntaNetElement]
    eps: float
    m: int
    arity: int
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.elements)

    def evaluate_all(self, coords: np.ndarray) -> np.ndarray:
        """Matrix of element values at coordinate rows: shape (n_elements, T)."""
        coords = np.atleast_2d(coords)
        out = np.empty((len(self.elements), coords.shape[0]))
        for i, el in enumerate(self.elements):
            out[i] = el.evaluate_coords(coords)
        return out

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "m": self.m,
            "arity": self.arity,
            "provenance": self.provenance,
            "elements": [
                {"func": el.func.to_dict(), "basis": el.basis.tolist(), "label": el.label}
                for el in self.elements
            ],
        }

    @staticmethod
    def from_dict(data: dict) -> "JuntaNet":
        elements = [
            JuntaNetElement(
                func=element_from_dict(el["func"]),
                basis=np.asarray(el["basis"], float),
                label=el["label"],
            )
            for el in data["elements"]
        ]
        return JuntaNet(
            elements=elements,
            eps=data["eps"],
            m=data["m"],
            arity=data["arity"],
            provenance=data.get("provenance", {}),
        )


def _constant_elements(cls: ClassSpec) -> list[JuntaNetElement]:
    """Degenerate net when the recovered subspace is trivial: constants only."""
    if isinstance(cls, PhiRampClass):
        ramps = [PhiRamp(None, b) for b in (-1.0, 1.0)] + [
            PhiRamp(0.0, b) for b in cls.biases
        ]
    else:
        ramps = [PhiRamp(None, -1.0), PhiRamp(None, 1.0)] + [
            PhiRamp(0.0, b) for b in np.linspace(-2.4, 2.4, 13)
        ]
    return [
        JuntaNetElement(func=r, basis=np.zeros((0, 1)), label=f"const:{r.label()}")
        for r in ramps
    ]


def junta_net(
    m: int,
    k: int,
    s: float,
    eps: float,
    cls: ClassSpec,
    caps: NetCaps,
    *,
    prune_seed: int = 11,
    prune_samples: int = 4096,
) -> JuntaNet:
    """Net for class members composed with k-subspaces of R^m.

    The subspace accuracy follows the composition analysis (eps^2 / s),
    floored by the practical cap.  Ramp classes pair each ridge profile
    with a line direction; smooth/explicit classes pair lattice functions
    with subspaces, pruning (for explicit classes) lattice elements with no
    witness among member compositions within eps.
    """
    provenance: dict = {
        "theory_subspace_eps": eps ** 2 / max(s, 1e-12),
        "class": type(cls).__name__,
    }
    if isinstance(cls, HalfspaceClass):
        cls = averaged_class(cls)
        provenance["note"] = "halfspace class averaged to ramp form"
    if m == 0:
        elements = _constant_elements(cls)
        provenance["degenerate"] = "trivial recovered subspace: constants only"
        return JuntaNet(elements=elements, eps=eps, m=0, arity=k, provenance=provenance)

    eps_sub = max(eps ** 2 / max(s, 1e-12), caps.subspace_eps_floor)
    provenance["subspace_eps_used"] = eps_sub

    if isinstance(cls, PhiRampClass):
        directions = sphere_net(m, subspace_net_delta(eps_sub, 1), caps)
        ramps = cls.members()
        if len(ramps) * len(directions) > caps.max_elements:
            raise NetSizeError(
                "ramp net too large", len(ramps) * len(directions), caps.max_elements
            )
        elements = [
            JuntaNetElement(
                func=ramp,
                basis=np.asarray(v, float)[:, None],
                label=f"{ramp.label()}@dir{j}",
            )
            for j, v in enumerate(directions)
            for ramp in ramps
        ]
        provenance["n_directions"] = len(directions)
        provenance["n_profiles"] = len(ramps)
        return JuntaNet(elements=elements, eps=eps, m=m, arity=k, provenance=provenance)

    subspaces = subspace_net(m, k, eps_sub, caps)
    functions = list(smooth_net(k, s, eps, caps))
    total = len(functions) * len(subspaces)
    if total > caps.max_elements:
        raise NetSizeError("junta net too large", total, caps.max_elements)
    elements = [
        JuntaNetElement(
            func=fn,
            basis=sub.basis,
            label=f"{fn.label()}@sub{j}",
        )
        for j, sub in enumerate(subspaces)
        for fn in functions
    ]
    provenance["n_functions"] = len(functions)
    provenance["n_subspaces"] = len(subspaces)

    if isinstance(cls, ExplicitClass):
        rng = rng_stream(prune_seed, 59)
        probes = rng.standard_normal((prune_samples, m))
        member_values = []
        for g in cls.members:
            for sub in subspaces:
                member_values.append(g.evaluate(probes @ sub.basis))
        member_matrix = np.stack(member_values)
        kept = []
        for el in elements:
            vals = el.evaluate_coords(probes)
            dist_sq = np.mean((member_matrix - vals[None, :]) ** 2, axis=1)
            if math.sqrt(float(dist_sq.min())) <= eps + 3.0 / math.sqrt(prune_samples):
                kept.append(el)
        provenance["pruned_from"] = len(elements)
        elements = kept
    return JuntaNet(elements=elements, eps=eps, m=m, arity=k, provenance=provenance)


def save_net(net: JuntaNet, path) -> None:
    import json

    from .reporting import to_jsonable

    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_jsonable(net.to_dict()), fh)


def load_net(path) -> JuntaNet:
    import json

    with open(path, "r", encoding="utf-8") as fh:
        return JuntaNet.from_dict(json.load(fh))
