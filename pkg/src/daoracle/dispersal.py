"""Chunk-to-node assignment and its feasibility arithmetic.

A design draws every slot of every node's chunk list i.i.d. uniformly from
the M chunk indices (so assignments are multisets and coverage counts
distinct indices). Feasibility of (gamma, eta, lam) follows the two-sided
test: infeasible when gamma/lam < eta by counting, feasible when
gamma/lam exceeds ln(1/(1-eta)); the gap is reported as indeterminate.
All logarithms are natural.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import _kernels
from .errors import ComplexityError, ParameterError
from .util import derive_seed

_MASK64 = (1 << 64) - 1


class Feasibility(enum.Enum):
    INFEASIBLE = "infeasible"
    FEASIBLE = "feasible"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class DispersalParams:
    gamma: float  # fraction of nodes queried
    eta: float  # fraction of distinct chunks required
    lam: float  # dispersal efficiency M/(N*k)

    def __post_init__(self):
        for name in ("gamma", "eta", "lam"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ParameterError(f"{name} must lie in (0, 1], got {v}")


@dataclass(frozen=True)
class DispersalDesign:
    n_chunks: int  # M
    n_nodes: int  # N
    k_per_node: int  # M / (N * lam)
    assignments: np.ndarray  # (N, k) int64, multisets of chunk indices
    seed: int

    def node_chunks(self, node: int) -> np.ndarray:
        return self.assignments[node]


def feasibility(params: DispersalParams) -> Feasibility:
    ratio = params.gamma / params.lam
    if ratio < params.eta:
        return Feasibility.INFEASIBLE
    if params.eta < 1 and ratio > math.log(1 / (1 - params.eta)):
        return Feasibility.FEASIBLE
    if params.eta == 1:
        return Feasibility.INDETERMINATE
    return Feasibility.INDETERMINATE


def assign_chunks(n_chunks: int, n_nodes: int, lam: float, seed: int) -> DispersalDesign:
    k = n_chunks / (n_nodes * lam)
    if abs(k - round(k)) > 1e-9 or round(k) < 1:
        raise ParameterError(
            f"chunks per node M/(N*lam) = {k} must be a positive integer"
        )
    k = int(round(k))
    rng = np.random.default_rng(np.uint64(seed & _MASK64))
    assignments = rng.integers(0, n_chunks, size=(n_nodes, k), dtype=np.int64)
    return DispersalDesign(n_chunks, n_nodes, k, assignments, seed & _MASK64)


def coverage(design: DispersalDesign, nodes) -> float:
    """Distinct-chunk fraction held by a node subset."""
    nodes = sorted(set(int(i) for i in nodes))
    if any(not 0 <= i < design.n_nodes for i in nodes):
        raise ParameterError("node subset out of range")
    if not nodes:
        return 0.0
    rows = design.assignments[nodes].reshape(1, -1)
    distinct = int(_kernels.count_distinct(rows, design.n_chunks)[0])
    return distinct / design.n_chunks


@dataclass(frozen=True)
class DesignCheck:
    failure_rate: float
    trials: int
    exhaustive: bool

    @property
    def stderr(self) -> float:
        if self.exhaustive or self.trials == 0:
            return 0.0
        p = self.failure_rate
        return math.sqrt(max(p * (1 - p), 0.0) / self.trials)


_EXHAUSTIVE_CAP = 10**6


def verify_design(
    design: DispersalDesign,
    gamma: float,
    eta: float,
    mode: str = "montecarlo",
    trials: int = 1000,
    seed: int = 0,
) -> DesignCheck:
    """Fraction of gamma-N node subsets whose coverage falls below eta."""
    n = design.n_nodes
    take = int(round(gamma * n))
    if not 1 <= take <= n:
        raise ParameterError(f"gamma*N = {gamma * n} must round into [1, N]")
    need = eta * design.n_chunks

    if mode == "exhaustive":
        total = math.comb(n, take)
        if total > _EXHAUSTIVE_CAP:
            raise ComplexityError(
                f"C({n},{take}) = {total} exceeds the exhaustive cap {_EXHAUSTIVE_CAP}"
            )
        failures = 0
        for subset in combinations(range(n), take):
            rows = design.assignments[list(subset)].reshape(1, -1)
            if int(_kernels.count_distinct(rows, design.n_chunks)[0]) < need:
                failures += 1
        return DesignCheck(failures / total, total, exhaustive=True)

    if mode != "montecarlo":
        raise ParameterError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(np.uint64(derive_seed("verify-design", seed)))
    batch = max(1, min(trials, (1 << 22) // max(take * design.k_per_node, 1)))
    failures = 0
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        subsets = np.stack([rng.choice(n, size=take, replace=False) for _ in range(b)])
        rows = design.assignments[subsets].reshape(b, take * design.k_per_node)
        distinct = _kernels.count_distinct(rows, design.n_chunks)
        failures += int(np.count_nonzero(distinct < need))
        done += b
    return DesignCheck(failures / trials, trials, exhaustive=False)


def tail_bound(eta: float, rho: float):
    """Balls-in-bins tail exponent f(eta, rho) with exp(-f*M) bounding
    P(fewer than eta*M distinct after rho*M uniform draws).

    Returns None when the bound does not apply, i.e. (1-eta)*e^rho <= 1.
    """
    x = (1 - eta) * math.exp(rho)
    if x <= 1:
        return None
    return (x - 1) ** 2 / (math.exp(rho) * (x + 1))


def invalid_design_bound(
    n_nodes: int, n_chunks: int, gamma: float, eta: float, lam: float
) -> float:
    """exp(N*H_e(gamma) - M*f(eta, gamma/lam)) in the feasible regime."""
    rho = gamma / lam
    f = tail_bound(eta, rho)
    if f is None:
        raise ParameterError(
            f"gamma/lam = {rho} is not above ln(1/(1-eta)); bound inapplicable"
        )
    h = _entropy_nats(gamma)
    return math.exp(n_nodes * h - n_chunks * f)


def _entropy_nats(p: float) -> float:
    if not 0 <= p <= 1:
        raise ParameterError("entropy argument must lie in [0, 1]")
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


def sample_distinct_fractions(
    n_chunks: int, n_draws: int, trials: int, seed: int
) -> np.ndarray:
    """Distinct-count fractions for `trials` rounds of n_draws uniform draws
    with replacement from n_chunks bins (the tail-bound experiment)."""
    rng = np.random.default_rng(np.uint64(seed & _MASK64))
    out = np.empty(trials, dtype=np.float64)
    batch = max(1, min(trials, (1 << 24) // max(n_draws, 1)))
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        draws = rng.integers(0, n_chunks, size=(b, n_draws), dtype=np.int64)
        out[done : done + b] = _kernels.count_distinct(draws, n_chunks) / n_chunks
        done += b
    return out


def design_to_text(design: DispersalDesign) -> str:
    """One node per line, assigned chunk indices space-separated."""
    return "\n".join(" ".join(str(i) for i in row) for row in design.assignments) + "\n"


def design_from_text(text: str, n_chunks: int, seed: int = 0) -> DispersalDesign:
    rows = [
        [int(tok) for tok in line.split()]
        for line in text.strip().splitlines()
        if line.strip()
    ]
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise ParameterError("design text must be rectangular and non-empty")
    arr = np.asarray(rows, dtype=np.int64)
    if arr.min() < 0 or arr.max() >= n_chunks:
        raise ParameterError("chunk index out of range in design text")
    return DispersalDesign(n_chunks, arr.shape[0], arr.shape[1], arr, seed)
