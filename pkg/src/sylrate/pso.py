"""Box-constrained inertia-weight particle swarm optimization."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class SearchSpace:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape or lo.size == 0:
            raise ValueError("lower and upper must be non-empty and equal length")
        # lower == upper pins a dimension (e.g. a fixed threshold)
        if np.any(lo > hi) or not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("need finite bounds with lower <= upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @classmethod
    def box(cls, low: float, high: float, dim: int) -> "SearchSpace":
        return cls(np.full(dim, low), np.full(dim, high))

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass(frozen=True)
class PsoConfig:
    n_particles: int = 50
    max_iterations: int = 200
    phi_p: float = 1.4962
    phi_g: float = 1.4962
    omega: float = 0.7298
    seed: int = 0
    stagnation_window: int = 25
    stagnation_tol: float = 1e-8

    def __post_init__(self):
        if self.n_particles < 2:
            raise ValueError("n_particles must be at least 2")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if min(self.phi_p, self.phi_g, self.omega) <= 0:
            raise ValueError("PSO coefficients must be positive")
        if self.stagnation_window < 0:
            raise ValueError("stagnation_window must be >= 0 (0 disables)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PsoConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown PsoConfig fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "PsoConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class SwarmResult:
    best_position: np.ndarray
    best_cost: float
    cost_trace: np.ndarray
    iterations_run: int
    evaluations: int

    def trace_csv(self) -> str:
        lines = ["iteration,best_cost"]
        lines += [f"{i},{c!r}" for i, c in enumerate(self.cost_trace.tolist())]
        return "\n".join(lines) + "\n"


def optimize(
    cost_fn: Callable[[np.ndarray], float],
    space: SearchSpace,
    config: PsoConfig = PsoConfig(),
    workers: int = 1,
    callback: Callable[[int, float], None] | None = None,
) -> SwarmResult:
    """Minimize ``cost_fn`` over ``space``.

    Each iteration moves every particle with
    ``v = omega*v + phi_p*r_p*(pbest - x) + phi_g*r_g*(gbest - x)`` and
    clamps it to the box, zeroing velocity on clamped dimensions.  The
    initial swarm evaluation counts as the first iteration.  The run stops
    after ``max_iterations`` or once the global best has improved by less
    than ``stagnation_tol`` over ``stagnation_window`` iterations.

    Particle costs may be evaluated on ``workers`` threads; the reduction is
    ordered by particle index so the result does not depend on scheduling.
    """
    rng = np.random.default_rng(config.seed)
    lo, hi = space.lower, space.upper
    span = hi - lo
    n, d = config.n_particles, space.dim

    pool = ThreadPoolExecutor(workers) if workers > 1 else None

    def evaluate(x):
        rows = list(x)
        costs = np.fromiter(
            pool.map(cost_fn, rows) if pool else map(cost_fn, rows),
            dtype=float,
            count=n,
        )
        bad = np.flatnonzero(~np.isfinite(costs))
        if bad.size:
            k = bad[0]
            raise ValueError(f"cost is {costs[k]} at position {x[k].tolist()}")
        return costs

    try:
        x = lo + rng.random((n, d)) * span
        v = (2.0 * rng.random((n, d)) - 1.0) * 0.1 * span
        costs = evaluate(x)
        pbest, pcost = x.copy(), costs.copy()
        g = int(np.argmin(costs))
        gbest, gcost = x[g].copy(), float(costs[g])
        trace = [gcost]
        if callback:
            callback(1, gcost)

        while len(trace) < config.max_iterations:
            rp = rng.random((n, d))
            rg = rng.random((n, d))
            v = config.omega * v + config.phi_p * rp * (pbest - x) + config.phi_g * rg * (gbest - x)
            x = x + v
            out = (x < lo) | (x > hi)
            x = np.clip(x, lo, hi)
            v[out] = 0.0

            costs = evaluate(x)
            better = costs < pcost
            pbest[better] = x[better]
            pcost[better] = costs[better]
            g = int(np.argmin(costs))
            if costs[g] < gcost:
                gbest, gcost = x[g].copy(), float(costs[g])
            trace.append(gcost)
            if callback:
                callback(len(trace), gcost)

            w = config.stagnation_window
            if w and len(trace) > w and trace[-1 - w] - trace[-1] < config.stagnation_tol:
                break
    finally:
        if pool:
            pool.shutdown()

    iters = len(trace)
    return SwarmResult(gbest, gcost, np.array(trace), iters, iters * n)
