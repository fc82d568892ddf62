"""Protocol roles at desk scale: dispersing clients, storage/voting nodes,
and a trusted-chain mock that stores only commitments and fraud proofs.

Votes are identity-bound tokens (no signature aggregation); the chain
counts distinct accepting voters against the ceil((beta+gamma)*N)
threshold, keeps an append-only record log with strictly increasing block
ids, and never unmarks a commitment once a verified fraud proof lands.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .cit import (
    CodedTree,
    Commitment,
    TreeParams,
    aggregate,
    build_tree,
    layer_code,
    sample_pom,
    verify_symbol,
    _hash_rows,
)
from .codec import encode_array
from .dispersal import DispersalDesign
from .errors import BadCode
from .retrieval import (
    ChunkSet,
    Fraud,
    FraudProof,
    ReconstructionResult,
    reconstruct,
    verify_fraud_proof,
)
from .serialize import encode_commitment
from .util import sha256


class Behavior(enum.Enum):
    HONEST = "honest"
    SILENT = "silent"
    WITHHOLD_AFTER_VOTE = "withhold_after_vote"
    VOTE_WITHOUT_STORE = "vote_without_store"


def commit_key(commitment: Commitment) -> bytes:
    return sha256(encode_commitment(commitment))


@dataclass(frozen=True)
class DispersalMessage:
    commitment: Commitment
    units: tuple  # (chunk_index, base_symbol, pom) per distinct assigned index
    assigned: tuple[int, ...]  # full multiset the design assigns this node


@dataclass(frozen=True)
class Vote:
    node_id: int
    commitment_key: bytes
    accept: bool = True


@dataclass
class OracleNode:
    node_id: int
    behavior: Behavior = Behavior.HONEST
    stake: float = 1.0
    stored: dict = field(default_factory=dict)  # (key, chunk_index) -> (symbol, pom)
    assigned: dict = field(default_factory=dict)  # key -> tuple of chunk indices


@dataclass(frozen=True)
class CommitRecord:
    block_id: int
    key: bytes
    voters: frozenset[int]


@dataclass(frozen=True)
class FraudRecord:
    key: bytes
    proof: FraudProof


@dataclass(frozen=True)
class BadCodeRecord:
    key: bytes
    layer_size: int
    old_seed: int
    new_seed: int


@dataclass(frozen=True)
class CommitStatus:
    committed: bool
    block_id: Optional[int]
    distinct_votes: int


@dataclass
class TrustedChain:
    n_nodes: int
    beta: float
    gamma: float
    records: list = field(default_factory=list)
    votes: dict = field(default_factory=dict)  # key -> set of node ids
    committed: dict = field(default_factory=dict)  # key -> block id
    invalid: set = field(default_factory=set)
    next_block_id: int = 0

    @property
    def commit_threshold(self) -> int:
        return math.ceil((self.beta + self.gamma) * self.n_nodes)

    def log_lines(self) -> list[str]:
        lines = []
        for rec in self.records:
            if isinstance(rec, CommitRecord):
                lines.append(
                    f"COMMIT id={rec.block_id} key={rec.key.hex()[:16]} "
                    f"votes={len(rec.voters)}"
                )
            elif isinstance(rec, FraudRecord):
                lines.append(
                    f"FRAUD key={rec.key.hex()[:16]} layer={rec.proof.layer} "
                    f"eq={rec.proof.equation_no}"
                )
            else:
                lines.append(
                    f"BADCODE key={rec.key.hex()[:16]} size={rec.layer_size} "
                    f"seed={rec.old_seed}->{rec.new_seed}"
                )
        return lines


def chain_submit_votes(chain: TrustedChain, commitment: Commitment, votes) -> CommitStatus:
    """Record votes; append a Commit once distinct accepting voters reach
    the threshold. Idempotent per commitment, duplicates counted once."""
    key = commit_key(commitment)
    pool = chain.votes.setdefault(key, set())
    for vote in votes:
        if vote.accept and vote.commitment_key == key and 0 <= vote.node_id < chain.n_nodes:
            pool.add(vote.node_id)
    if key in chain.committed:
        return CommitStatus(True, chain.committed[key], len(pool))
    if key in chain.invalid or len(pool) < chain.commit_threshold:
        return CommitStatus(False, None, len(pool))
    block_id = chain.next_block_id
    chain.next_block_id += 1
    chain.committed[key] = block_id
    chain.records.append(CommitRecord(block_id, key, frozenset(pool)))
    return CommitStatus(True, block_id, len(pool))


def chain_submit_fraud(
    chain: TrustedChain, commitment: Commitment, proof: FraudProof
) -> bool:
    """Verify then record a fraud proof; a recorded fraud marks the
    commitment invalid forever."""
    if not verify_fraud_proof(commitment, commitment.params, proof):
        return False
    key = commit_key(commitment)
    if key not in chain.invalid:
        chain.invalid.add(key)
        chain.records.append(FraudRecord(key, proof))
    return True


def client_disperse(block: bytes, params: TreeParams, design: DispersalDesign):
    """Build the tree and bundle per-node dispersal messages.

    Returns (tree, {node_id: DispersalMessage}); the chunk count must match
    the design (base layer size == design.n_chunks)."""
    tree = build_tree(block, params)
    return tree, messages_for_tree(tree, design)


def messages_for_tree(tree: CodedTree, design: DispersalDesign):
    m_base = tree.sizes[-1]
    if design.n_chunks != m_base:
        raise ValueError(
            f"design covers {design.n_chunks} chunks but tree has {m_base}"
        )
    messages = {}
    base = tree.layers[-1].symbols
    pom_cache: dict[int, object] = {}
    for node in range(design.n_nodes):
        assigned = tuple(int(i) for i in design.assignments[node])
        units = []
        for idx in sorted(set(assigned)):
            if idx not in pom_cache:
                pom_cache[idx] = sample_pom(tree, idx)
            units.append((idx, base[idx].tobytes(), pom_cache[idx]))
        messages[node] = DispersalMessage(tree.commitment, tuple(units), assigned)
    return messages


def node_on_dispersal(node: OracleNode, message: DispersalMessage) -> Optional[Vote]:
    key = commit_key(message.commitment)
    if node.behavior is Behavior.SILENT:
        return None
    if node.behavior is Behavior.VOTE_WITHOUT_STORE:
        node.assigned[key] = message.assigned
        return Vote(node.node_id, key)
    # honest verification path (shared by WITHHOLD_AFTER_VOTE, which behaves
    # correctly at dispersal time)
    want = sorted(set(message.assigned))
    have = [idx for idx, _, _ in message.units]
    if have != want:
        return None
    for idx, symbol, pom in message.units:
        if pom.base_index != idx or pom.base_symbol != symbol:
            return None
        if not verify_symbol(message.commitment, message.commitment.params, pom):
            return None
    for idx, symbol, pom in message.units:
        node.stored[(key, idx)] = (symbol, pom)
    node.assigned[key] = message.assigned
    return Vote(node.node_id, key)


def node_on_retrieval(node: OracleNode, key: bytes):
    if node.behavior in (Behavior.SILENT, Behavior.WITHHOLD_AFTER_VOTE):
        return ()
    return tuple(
        (idx, symbol, pom)
        for (k, idx), (symbol, pom) in sorted(node.stored.items())
        if k == key
    )


def gather_units(nodes, key: bytes):
    """Distinct units collected by querying every node (first answer wins)."""
    units: dict[int, tuple] = {}
    for node in nodes:
        for idx, symbol, pom in node_on_retrieval(node, key):
            units.setdefault(idx, (idx, symbol, pom))
    return tuple(units[i] for i in sorted(units))


def client_retrieve(
    chain: TrustedChain, nodes, commitment: Commitment, params: TreeParams
) -> ReconstructionResult:
    """Query every node, reconstruct, and push any fraud proof on chain."""
    chunks = ChunkSet(commitment, gather_units(nodes, commit_key(commitment)))
    result = reconstruct(commitment, params, chunks)
    if isinstance(result, Fraud):
        chain_submit_fraud(chain, commitment, result.proof)
    return result


@dataclass(frozen=True)
class AuditOutcome:
    audited: Optional[int]
    passed: Optional[bool]
    slashed: float


def audit(
    chain: TrustedChain,
    nodes,
    commitment: Commitment,
    p_audit: float,
    rng: np.random.Generator,
    design: DispersalDesign,
    stake_penalty: float = 1.0,
) -> AuditOutcome:
    """With probability p_audit pick one voter; it must produce its exact
    assigned units or lose stake."""
    if rng.random() >= p_audit:
        return AuditOutcome(None, None, 0.0)
    key = commit_key(commitment)
    voters = sorted(chain.votes.get(key, ()))
    if not voters:
        return AuditOutcome(None, None, 0.0)
    picked = int(voters[rng.integers(0, len(voters))])
    node = next(n for n in nodes if n.node_id == picked)
    want = sorted(set(int(i) for i in design.assignments[picked]))
    ok = True
    for idx in want:
        entry = node.stored.get((key, idx))
        if entry is None:
            ok = False
            break
        symbol, pom = entry
        if pom.base_index != idx or not verify_symbol(commitment, commitment.params, pom):
            ok = False
            break
    if not ok:
        node.stake = max(0.0, node.stake - stake_penalty)
        return AuditOutcome(picked, False, stake_penalty)
    return AuditOutcome(picked, True, 0.0)


def bad_code_round(
    nodes,
    commitment: Commitment,
    signal: BadCode,
    chain: Optional[TrustedChain] = None,
) -> int:
    """Pool honest storage, confirm the stall, then agree on a replacement
    code seed (old seed + smallest bump whose codes pass the alpha gate).

    Returns the agreed code seed; unchanged when pooling reconstructs fine.
    """
    params = commitment.params
    key = commit_key(commitment)
    pooled: dict[int, tuple] = {}
    for node in nodes:
        for (k, idx), (symbol, pom) in node.stored.items():
            if k == key:
                pooled.setdefault(idx, (idx, symbol, pom))
    chunks = ChunkSet(commitment, tuple(pooled[i] for i in sorted(pooled)))
    try:
        result = reconstruct(commitment, params, chunks)
        confirmed = False
    except BadCode:
        confirmed = True
    if not confirmed:
        return params.code_seed

    for bump in range(1, 1 + max(1, params.max_code_attempts)):
        candidate = replace(params, code_seed=params.code_seed + bump)
        try:
            layer_code(candidate, signal.layer_size or candidate.root_size)
        except BadCode:
            continue
        if chain is not None:
            chain.records.append(
                BadCodeRecord(key, signal.layer_size or 0, params.code_seed, candidate.code_seed)
            )
        return candidate.code_seed
    raise BadCode("no replacement seed met the gate", layer_size=signal.layer_size)


def build_tree_with_base_corruption(
    block: bytes,
    params: TreeParams,
    corrupt_index: Optional[int] = None,
    xor_mask: int = 0x01,
) -> CodedTree:
    """Adversarial proposer harness: encode honestly, flip bits in one base
    coded symbol (default: the first parity symbol), then hash and aggregate
    so the tree is self-consistent (every proof verifies) while the base
    layer violates its code."""
    from .cit import Layer

    sizes = params.layer_sizes(len(block))
    depth = len(sizes) - 1
    padded = block + bytes(-len(block) % params.symbol_size)
    base_inputs = (
        np.frombuffer(padded, dtype=np.uint8).reshape(-1, params.symbol_size).copy()
    )
    base_code = layer_code(params, sizes[depth])
    cur = encode_array(base_code, base_inputs)
    if corrupt_index is None:
        corrupt_index = base_code.n_systematic
    cur[corrupt_index, 0] ^= xor_mask

    layers = {depth: Layer(cur, _hash_rows(cur), base_code)}
    for u in range(depth - 1, -1, -1):
        parent_sys = aggregate(cur, sizes[u], params)
        code = layer_code(params, sizes[u])
        cur = encode_array(code, parent_sys)
        layers[u] = Layer(cur, _hash_rows(cur), code)

    root_vals = tuple(row.tobytes() for row in layers[0].symbols)
    commitment = Commitment(root=root_vals, params=params, block_len=len(block))
    return CodedTree(
        params=params,
        layers=tuple(layers[u] for u in range(depth + 1)),
        commitment=commitment,
        block_len=len(block),
    )
