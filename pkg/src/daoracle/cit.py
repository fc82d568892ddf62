"""Coded interleaving tree: layered coded commitments and membership proofs.

Layout. A tree over a block of ``block_len`` bytes has coded layers indexed
by depth u = 0..L, where u = L is the base layer (symbols of ``symbol_size``
bytes) and u = 0 is the root layer of exactly ``root_size`` y-byte values,
stored verbatim as the commitment. Layer u has ``sizes[u]`` coded symbols,
``sizes[u-1] = sizes[u] / (batch * rate)``; geometries where the shrink
never lands exactly on the root size are rejected.

Aggregation. Child x of layer u+1 feeds the parent systematic symbol
``x mod s`` of layer u, where s is layer u's systematic count. A parent's
value is the digest of its q children's digests concatenated in ascending
child index.

Membership. The proof for base index i carries one (systematic, parity)
value pair per intermediate layer, sampled by pure index arithmetic, plus
q-1 sibling digests per aggregation level. The two sampled symbols of a
layer always share one parent, which is itself the sampled systematic
symbol one layer up, so a single digest chain authenticates everything.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .codec import CodeSpec, encode_array, generate_code, is_bad_code
from .errors import BadCode, IndexOutOfRange, ParameterError
from .util import HASH_BYTES, as_rate, derive_seed, exact_int, sha256


@dataclass(frozen=True)
class TreeParams:
    """Geometry and code knobs for one tree family.

    symbol_size: bytes per base symbol (c); root_size: symbol count of the
    root layer (t); rate: coding ratio (r); batch: aggregation batch (q);
    max_eq_degree: parity equation cap (d); alpha: required undecodable
    ratio for every layer code; hash_size: digest width, fixed at 32.
    code_seed seeds deterministic per-layer code generation; gate_trials
    and max_code_attempts drive the bad-code gate (gate_trials=0 disables
    gating).
    """

    symbol_size: int
    root_size: int
    rate: Fraction
    batch: int
    max_eq_degree: int
    alpha: float
    hash_size: int = HASH_BYTES
    code_seed: int = 0
    gate_trials: int = 32
    max_code_attempts: int = 16

    def __post_init__(self):
        object.__setattr__(self, "rate", as_rate(self.rate))
        if self.batch < 2:
            raise ParameterError("batch (q) must be >= 2")
        if not 0 < self.rate < 1:
            raise ParameterError("tree rate must lie in (0, 1)")
        if self.batch * self.rate <= 1:
            raise ParameterError("batch * rate must exceed 1 so layers shrink")
        if self.root_size < 1:
            raise ParameterError("root_size (t) must be >= 1")
        if self.symbol_size < 1:
            raise ParameterError("symbol_size (c) must be >= 1")
        if self.hash_size != HASH_BYTES:
            raise ParameterError(f"hash_size is fixed at {HASH_BYTES}")
        if not 0 <= self.alpha < 1:
            raise ParameterError("alpha must lie in [0, 1)")

    def layer_sizes(self, block_len: int) -> tuple[int, ...]:
        """Coded layer sizes from root to base for a block of this length."""
        if block_len < 1:
            raise ParameterError("block must be non-empty")
        n_sys = -(-block_len // self.symbol_size)
        m = Fraction(n_sys) / self.rate
        if m.denominator != 1:
            raise ParameterError(
                f"{n_sys} base symbols at rate {self.rate} is not integral"
            )
        sizes = [int(m)]
        shrink = self.batch * self.rate
        while sizes[-1] > self.root_size:
            nxt = Fraction(sizes[-1]) / shrink
            if nxt.denominator != 1:
                raise ParameterError("layer sizes must stay integral")
            sizes.append(int(nxt))
        if sizes[-1] != self.root_size or len(sizes) < 2:
            raise ParameterError(
                f"layer sizes {sizes[::-1]} never land on root_size {self.root_size}"
            )
        for m in sizes:
            if (self.rate * m).denominator != 1 or self.rate * m < 1:
                raise ParameterError(
                    f"layer of {m} symbols has non-integral systematic count"
                )
        return tuple(reversed(sizes))

    def sys_count(self, layer_size: int) -> int:
        return exact_int(self.rate * layer_size)


@dataclass(frozen=True)
class Layer:
    symbols: np.ndarray  # (size, width) uint8, read-only
    hashes: np.ndarray  # (size, 32) uint8, digests of the rows
    code: CodeSpec


@dataclass(frozen=True)
class Commitment:
    root: tuple[bytes, ...]
    params: TreeParams
    block_len: int


@dataclass(frozen=True)
class ProofOfMembership:
    """Base symbol plus its sampled pairs and sibling digests.

    pairs[j] is (p_index, e_index, p_value, e_value) for layer L-1-j, for
    j = 0..L-2. levels[j] holds the q-1 sibling digests of the aggregation
    at parent layer L-1-j, for j = 0..L-1 (position of the on-path child is
    implied by index arithmetic).
    """

    base_index: int
    base_symbol: bytes
    block_len: int
    pairs: tuple[tuple[int, int, bytes, bytes], ...]
    levels: tuple[tuple[bytes, ...], ...]


@dataclass(frozen=True)
class MembershipPath:
    """Sibling digests binding one symbol (or just its digest) at
    (layer, index) to the commitment: one q-1 tuple per aggregation level
    from the symbol's own layer up to the root."""

    layer: int
    index: int
    levels: tuple[tuple[bytes, ...], ...]


@dataclass(frozen=True)
class CodedTree:
    params: TreeParams
    layers: tuple[Layer, ...]  # depth 0 = root layer ... depth L = base
    commitment: Commitment
    block_len: int

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(layer.symbols.shape[0] for layer in self.layers)

    @property
    def depth(self) -> int:
        return len(self.layers) - 1


def _hash_rows(arr: np.ndarray) -> np.ndarray:
    out = np.empty((arr.shape[0], HASH_BYTES), dtype=np.uint8)
    for i in range(arr.shape[0]):
        out[i] = np.frombuffer(sha256(arr[i].tobytes()), dtype=np.uint8)
    return out


@lru_cache(maxsize=512)
def layer_code(params: TreeParams, layer_size: int) -> CodeSpec:
    """Deterministic, gate-checked code for one layer size.

    Candidate seeds start at a stable derivation of (code_seed, layer_size)
    and advance by one per failed gate, so every party regenerating from
    the same parameters lands on the same accepted code.
    """
    k = params.sys_count(layer_size)
    base_seed = derive_seed("cit-code", params.code_seed, layer_size)
    for attempt in range(max(1, params.max_code_attempts)):
        seed = (base_seed + attempt) & ((1 << 64) - 1)
        cand = generate_code(k, params.rate, params.max_eq_degree, seed)
        if params.gate_trials == 0 or not is_bad_code(
            cand, params.alpha, params.gate_trials, rng_seed=seed
        ):
            return cand
    raise BadCode(
        f"no code of size {layer_size} met alpha={params.alpha} "
        f"within {params.max_code_attempts} attempts",
        layer_size=layer_size,
        code_seed=params.code_seed,
    )


def aggregate(child_symbols: np.ndarray, parent_size: int, params: TreeParams) -> np.ndarray:
    """Parent systematic symbols from one coded child layer."""
    s_par = params.sys_count(parent_size)
    hashes = _hash_rows(child_symbols)
    out = np.empty((s_par, HASH_BYTES), dtype=np.uint8)
    for k in range(s_par):
        out[k] = np.frombuffer(sha256(hashes[k::s_par].tobytes()), dtype=np.uint8)
    return out


def build_tree(block: bytes, params: TreeParams) -> CodedTree:
    sizes = params.layer_sizes(len(block))
    depth = len(sizes) - 1
    padded = block + bytes(-len(block) % params.symbol_size)
    base_inputs = (
        np.frombuffer(padded, dtype=np.uint8).reshape(-1, params.symbol_size).copy()
    )

    layers: dict[int, Layer] = {}
    cur = encode_array(layer_code(params, sizes[depth]), base_inputs)
    layers[depth] = Layer(cur, _hash_rows(cur), layer_code(params, sizes[depth]))
    for u in range(depth - 1, -1, -1):
        parent_sys = aggregate(cur, sizes[u], params)
        code = layer_code(params, sizes[u])
        cur = encode_array(code, parent_sys)
        layers[u] = Layer(cur, _hash_rows(cur), code)
    for layer in layers.values():
        layer.symbols.setflags(write=False)
        layer.hashes.setflags(write=False)

    root_vals = tuple(row.tobytes() for row in layers[0].symbols)
    commitment = Commitment(root=root_vals, params=params, block_len=len(block))
    return CodedTree(
        params=params,
        layers=tuple(layers[u] for u in range(depth + 1)),
        commitment=commitment,
        block_len=len(block),
    )


def pom_indices(
    base_index: int, layer_sizes: Sequence[int], rate
) -> list[tuple[int, int]]:
    """(systematic, parity) sample indices per layer, by pure arithmetic.

    layer_sizes lists the target layers (any subset/order); for each size m
    the pair is (i mod r*m, r*m + (i mod (1-r)*m)).
    """
    r = as_rate(rate)
    out = []
    for m in layer_sizes:
        s = exact_int(r * m)
        out.append((base_index % s, s + base_index % (m - s)))
    return out


def project_base_to_layer(
    base_indices: Iterable[int], layer_sizes: Sequence[int], rate
) -> list[set[int]]:
    """Per-layer index sets touched by the proofs of a base-symbol subset."""
    r = as_rate(rate)
    idx = np.asarray(sorted(set(base_indices)), dtype=np.int64)
    out = []
    for m in layer_sizes:
        s = exact_int(r * m)
        covered = set((idx % s).tolist()) | set((s + idx % (m - s)).tolist())
        out.append(covered)
    return out


def sample_pom(tree: CodedTree, base_index: int) -> ProofOfMembership:
    depth = tree.depth
    sizes = tree.sizes
    if not 0 <= base_index < sizes[depth]:
        raise IndexOutOfRange(f"base index {base_index} not in [0, {sizes[depth]})")

    pairs = []
    for u in range(depth - 1, 0, -1):
        (p_idx, e_idx), = pom_indices(base_index, [sizes[u]], tree.params.rate)
        layer = tree.layers[u]
        pairs.append((p_idx, e_idx, layer.symbols[p_idx].tobytes(), layer.symbols[e_idx].tobytes()))

    levels = []
    x = base_index
    for u in range(depth - 1, -1, -1):
        s_par = tree.params.sys_count(sizes[u])
        par, pos = x % s_par, x // s_par
        child_hashes = tree.layers[u + 1].hashes[par::s_par]
        levels.append(
            tuple(child_hashes[p].tobytes() for p in range(len(child_hashes)) if p != pos)
        )
        x = par

    return ProofOfMembership(
        base_index=base_index,
        base_symbol=tree.layers[depth].symbols[base_index].tobytes(),
        block_len=tree.block_len,
        pairs=tuple(pairs),
        levels=tuple(levels),
    )


@dataclass
class PomHarvest:
    """Everything a verified proof pins down: symbol values keyed by
    (layer, index) and full q-digest child tuples keyed by
    (parent_layer, parent_index)."""

    values: dict[tuple[int, int], bytes] = field(default_factory=dict)
    tuples: dict[tuple[int, int], tuple[bytes, ...]] = field(default_factory=dict)


def walk_pom(commitment: Commitment, params: TreeParams, pom: ProofOfMembership):
    """Recompute the digest chain of a proof. Returns a PomHarvest when the
    proof is consistent with the commitment, else None."""
    if params != commitment.params or pom.block_len != commitment.block_len:
        return None
    try:
        sizes = params.layer_sizes(pom.block_len)
    except ParameterError:
        return None
    depth = len(sizes) - 1
    q = params.batch
    i = pom.base_index
    if not 0 <= i < sizes[depth]:
        return None
    if len(pom.base_symbol) != params.symbol_size:
        return None
    if len(pom.pairs) != depth - 1 or len(pom.levels) != depth:
        return None

    want = pom_indices(i, [sizes[u] for u in range(depth - 1, 0, -1)], params.rate)
    for (p_idx, e_idx, p_val, e_val), (wp, we) in zip(pom.pairs, want):
        if (p_idx, e_idx) != (wp, we):
            return None
        if len(p_val) != HASH_BYTES or len(e_val) != HASH_BYTES:
            return None

    harvest = PomHarvest()
    harvest.values[(depth, i)] = pom.base_symbol
    h = sha256(pom.base_symbol)
    x = i
    for j, u in enumerate(range(depth - 1, -1, -1)):
        s_par = params.sys_count(sizes[u])
        par, pos = x % s_par, x // s_par
        sibs = pom.levels[j]
        if len(sibs) != q - 1 or any(len(s) != HASH_BYTES for s in sibs):
            return None
        tup = sibs[:pos] + (h,) + sibs[pos:]
        if j >= 1:
            # the previous layer's parity sample is a sibling here; its
            # digest must sit at its own child position
            _, e_idx, _, e_val = pom.pairs[j - 1]
            if e_idx % s_par != par:
                return None
            if tup[e_idx // s_par] != sha256(e_val):
                return None
        value = sha256(b"".join(tup))
        harvest.tuples[(u, par)] = tup
        if u >= 1:
            p_idx, e_idx, p_val, e_val = pom.pairs[j]
            if p_idx != par or value != p_val:
                return None
            harvest.values[(u, p_idx)] = p_val
            harvest.values[(u, e_idx)] = e_val
            h = sha256(value)
            x = par
        else:
            if value != commitment.root[par]:
                return None
    return harvest


def verify_symbol(commitment: Commitment, params: TreeParams, pom: ProofOfMembership) -> bool:
    """True iff the proof's digest chain reproduces a commitment entry."""
    try:
        return walk_pom(commitment, params, pom) is not None
    except Exception:
        return False


def verify_membership(
    commitment: Commitment, params: TreeParams, leaf_hash: bytes, path: MembershipPath
) -> bool:
    """Check a bare digest claim: the commitment binds a symbol hashing to
    ``leaf_hash`` at (path.layer, path.index)."""
    try:
        sizes = params.layer_sizes(commitment.block_len)
    except ParameterError:
        return False
    depth = len(sizes) - 1
    u = path.layer
    if not 1 <= u <= depth or not 0 <= path.index < sizes[u]:
        return False
    if len(path.levels) != u:
        return False
    h = leaf_hash
    x = path.index
    for j, w in enumerate(range(u - 1, -1, -1)):
        s_par = params.sys_count(sizes[w])
        par, pos = x % s_par, x // s_par
        sibs = path.levels[j]
        if len(sibs) != params.batch - 1 or any(len(s) != HASH_BYTES for s in sibs):
            return False
        value = sha256(b"".join(sibs[:pos] + (h,) + sibs[pos:]))
        if w >= 1:
            h = sha256(value)
            x = par
        else:
            return value == commitment.root[par]
    return False
