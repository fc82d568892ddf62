"""Seeded sparse-graph erasure codes over equal-length byte symbols.

A code is systematic: coded symbols [0, k) are the inputs verbatim, symbols
[k, n) are XOR parities. Construction is anchored pseudo-random: parity j
always includes systematic symbol ``j mod k`` (so every input is covered)
plus further distinct inputs drawn uniformly, capped so no equation exceeds
``max_eq_degree`` members including the parity itself. Duplicate input sets
are rejection-resampled. Tiny codes (k <= 2) degenerate to repetition.

Everything is a pure function of its arguments including seeds; two calls
with equal arguments produce bit-identical codes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence, Union

import numpy as np

from . import _kernels
from .errors import LengthMismatch, ParameterError
from .util import as_rate, exact_int

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ParityEquation:
    """Coded-symbol indices whose bytewise XOR must be the zero symbol."""

    symbol_indices: tuple[int, ...]

    def __post_init__(self):
        idx = self.symbol_indices
        if len(idx) < 2:
            raise ParameterError("parity equation needs at least 2 symbols")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ParameterError("equation indices must be strictly increasing")


@dataclass(frozen=True)
class CodeSpec:
    n_systematic: int
    n_coded: int
    rate: Fraction
    max_eq_degree: int
    seed: int
    parity_checks: tuple[ParityEquation, ...]

    def __post_init__(self):
        if self.n_systematic < 1:
            raise ParameterError("need at least one systematic symbol")
        if self.n_coded * self.rate != self.n_systematic:
            raise ParameterError("n_coded * rate must equal n_systematic exactly")
        if self.max_eq_degree < 2:
            raise ParameterError("max_eq_degree must be >= 2")
        for eq in self.parity_checks:
            if len(eq.symbol_indices) > self.max_eq_degree:
                raise ParameterError("equation degree exceeds max_eq_degree")
            if eq.symbol_indices[0] < 0 or eq.symbol_indices[-1] >= self.n_coded:
                raise ParameterError("equation index out of range")


@dataclass(frozen=True)
class Decoded:
    symbols: tuple[bytes, ...]


@dataclass(frozen=True)
class Stuck:
    unknown: frozenset[int]


@dataclass(frozen=True)
class Violation:
    equation_index: int
    known_symbols: tuple[tuple[int, bytes], ...]


DecodeOutcome = Union[Decoded, Stuck, Violation]


@dataclass(frozen=True)
class UndecodableEstimate:
    ratio: float
    trials: int


def generate_code(n_systematic: int, rate, max_eq_degree: int, seed: int) -> CodeSpec:
    """Build the deterministic code for (k, rate, d, seed).

    rate must be 1/m for an integer m >= 2, so the anchor assignment
    ``parity j -> input j mod k`` covers every systematic symbol.
    """
    k = n_systematic
    r = as_rate(rate)
    if k < 1:
        raise ParameterError("n_systematic must be >= 1")
    if r.numerator != 1 or r.denominator < 2:
        raise ParameterError("rate must be 1/m with integer m >= 2")
    if max_eq_degree < 2:
        raise ParameterError("max_eq_degree must be >= 2")
    n = exact_int(Fraction(k) / r)
    n_parity = n - k

    equations: list[ParityEquation] = []
    if k <= 2:
        for j in range(n_parity):
            equations.append(ParityEquation(tuple(sorted((j % k, k + j)))))
    else:
        rng = np.random.default_rng(np.uint64(seed & _MASK64))
        hi = min(max_eq_degree - 1, k)
        lo = min(2, hi)
        seen: set[frozenset[int]] = set()
        for j in range(n_parity):
            anchor = j % k
            pool = np.delete(np.arange(k), anchor)
            inputs = frozenset((anchor,))
            for _ in range(32):
                deg_in = int(rng.integers(lo, hi + 1))
                extra = rng.choice(pool, size=deg_in - 1, replace=False)
                inputs = frozenset((anchor, *extra.tolist()))
                if inputs not in seen:
                    break
            seen.add(inputs)
            equations.append(ParityEquation((*sorted(inputs), k + j)))
    return CodeSpec(k, n, r, max_eq_degree, seed & _MASK64, tuple(equations))


@lru_cache(maxsize=256)
def _csr(code: CodeSpec):
    """CSR member arrays plus the parity-output index of each equation."""
    counts = [len(eq.symbol_indices) for eq in code.parity_checks]
    eq_ptr = np.zeros(len(counts) + 1, dtype=np.int32)
    eq_ptr[1:] = np.cumsum(counts)
    eq_idx = np.fromiter(
        (i for eq in code.parity_checks for i in eq.symbol_indices),
        dtype=np.int32,
        count=int(eq_ptr[-1]),
    )
    parity_of = np.fromiter(
        (eq.symbol_indices[-1] for eq in code.parity_checks),
        dtype=np.int32,
        count=len(counts),
    )
    return eq_ptr, eq_idx, parity_of


def _as_matrix(symbols: Sequence[bytes]) -> np.ndarray:
    widths = {len(s) for s in symbols}
    if len(widths) > 1:
        raise LengthMismatch("symbols must all have equal length")
    width = widths.pop() if widths else 0
    out = np.empty((len(symbols), width), dtype=np.uint8)
    for i, s in enumerate(symbols):
        out[i] = np.frombuffer(bytes(s), dtype=np.uint8)
    return out


def encode_array(code: CodeSpec, inputs: np.ndarray) -> np.ndarray:
    """Encode a (k, width) uint8 array into the full (n, width) codeword."""
    if inputs.shape[0] != code.n_systematic:
        raise LengthMismatch(
            f"expected {code.n_systematic} input symbols, got {inputs.shape[0]}"
        )
    sym = np.zeros((code.n_coded, inputs.shape[1]), dtype=np.uint8)
    sym[: code.n_systematic] = inputs
    eq_ptr, eq_idx, parity_of = _csr(code)
    if len(parity_of):
        _kernels.xor_encode(eq_ptr, eq_idx, parity_of, sym)
    return sym


def encode(code: CodeSpec, inputs: Sequence[bytes]) -> tuple[bytes, ...]:
    sym = encode_array(code, _as_matrix(inputs))
    return tuple(row.tobytes() for row in sym)


def peel_decode(code: CodeSpec, known: Mapping[int, bytes]) -> DecodeOutcome:
    """Iterative peeling: check degree-0 equations, solve degree-1 ones.

    Equations are scanned in ascending index order each pass and solves take
    effect immediately, so the outcome (including which equation a Violation
    names) is deterministic.
    """
    n = code.n_coded
    for i in known:
        if not 0 <= i < n:
            raise ParameterError(f"known index {i} out of range")
    if not known:
        return Stuck(frozenset(range(n)))
    width = {len(s) for s in known.values()}
    if len(width) != 1:
        raise LengthMismatch("known symbols must all have equal length")
    sym = np.zeros((n, width.pop()), dtype=np.uint8)
    mask = np.zeros(n, dtype=np.bool_)
    for i, s in known.items():
        sym[i] = np.frombuffer(bytes(s), dtype=np.uint8)
        mask[i] = True
    eq_ptr, eq_idx, _ = _csr(code)
    status, viol = _kernels.peel_symbols(eq_ptr, eq_idx, sym, mask)
    if status == 0:
        return Decoded(tuple(row.tobytes() for row in sym))
    if status == 1:
        return Stuck(frozenset(int(i) for i in np.nonzero(~mask)[0]))
    members = code.parity_checks[viol].symbol_indices
    return Violation(int(viol), tuple((i, sym[i].tobytes()) for i in members))


def estimate_undecodable_ratio(
    code: CodeSpec, trials: int, rng_seed: int
) -> UndecodableEstimate:
    """Monte-Carlo estimate of the smallest erased fraction that stalls
    peeling, minimized over random erasure orders (conservative from below).
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    eq_ptr, eq_idx, _ = _csr(code)
    rng = np.random.default_rng(np.uint64(rng_seed & _MASK64))
    n = code.n_coded
    best = n
    for _ in range(trials):
        perm = rng.permutation(n).astype(np.int64)
        best = min(best, _kernels.first_fail_count(eq_ptr, eq_idx, perm))
        if best == 1:
            break
    return UndecodableEstimate(best / n, trials)


def is_bad_code(code: CodeSpec, alpha_target: float, trials: int, rng_seed: int) -> bool:
    """True when the estimated undecodable ratio misses the target gate."""
    return estimate_undecodable_ratio(code, trials, rng_seed).ratio < alpha_target


def code_to_text(code: CodeSpec) -> str:
    """Canonical sorted text form: one equation per line, space-separated."""
    lines = sorted(" ".join(str(i) for i in eq.symbol_indices) for eq in code.parity_checks)
    return "\n".join(lines) + "\n"
