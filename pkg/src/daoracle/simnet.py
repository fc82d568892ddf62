"""Deterministic synchronous-round network hosting clients, oracle nodes
and the trusted-chain mock.

Each round runs propose -> disperse -> vote -> commit -> retrieve -> audit
with reliable in-round delivery. One master seed drives everything through
per-purpose derived streams (labels like "design"/round), so adding a new
consumer never perturbs existing behavior and a config replays to a
byte-identical trace.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import oracle as orc
from .cit import TreeParams, build_tree
from .dispersal import DispersalParams, assign_chunks
from .errors import BadCode, ConfigError
from .oracle import Behavior, DispersalMessage, OracleNode, TrustedChain
from .retrieval import Block, Fraud
from .serialize import encode_commitment, encode_pom
from .util import derive_seed, sha256

PROPOSER_STRATEGIES = ("honest", "invalid_coding", "equivocating")


@dataclass(frozen=True)
class ScenarioConfig:
    n_nodes: int
    beta: float
    tree: TreeParams
    dispersal: DispersalParams
    block_size: int
    behaviors: tuple[Behavior, ...]
    n_clients: int = 3
    proposer_strategy: str = "honest"
    rounds: int = 1
    audit_probability: float = 0.0
    master_seed: int = 0

    def __post_init__(self):
        if len(self.behaviors) != self.n_nodes:
            raise ConfigError("behaviors must list one entry per node")
        bad = sum(1 for b in self.behaviors if b is not Behavior.HONEST)
        if bad > int(self.beta * self.n_nodes):
            raise ConfigError(
                f"{bad} non-honest nodes exceeds beta*N = {self.beta * self.n_nodes}"
            )
        if self.proposer_strategy not in PROPOSER_STRATEGIES:
            raise ConfigError(f"unknown proposer strategy {self.proposer_strategy!r}")
        if self.n_clients < 1 or self.rounds < 0:
            raise ConfigError("need at least one client and rounds >= 0")
        if not 0 <= self.audit_probability <= 1:
            raise ConfigError("audit_probability must lie in [0, 1]")
        sizes = self.tree.layer_sizes(self.block_size)
        k = sizes[-1] / (self.n_nodes * self.dispersal.lam)
        if abs(k - round(k)) > 1e-9 or round(k) < 1:
            raise ConfigError(
                f"chunks per node M/(N*lambda) = {k} must be a positive integer"
            )


def behaviors_from_counts(
    n_nodes: int, counts: dict, seed: Optional[int] = None
) -> tuple[Behavior, ...]:
    """Expand {"silent": 3, ...} counts; ids are sampled by seed when given,
    else the highest ids take the non-honest roles."""
    order = []
    for name, cnt in sorted(counts.items()):
        order += [Behavior(name)] * int(cnt)
    if len(order) > n_nodes:
        raise ConfigError("more behavior assignments than nodes")
    out = [Behavior.HONEST] * n_nodes
    if seed is None:
        ids = range(n_nodes - len(order), n_nodes)
    else:
        rng = np.random.default_rng(np.uint64(derive_seed("behaviors", seed)))
        ids = sorted(rng.choice(n_nodes, size=len(order), replace=False).tolist())
    for node_id, behavior in zip(ids, order):
        out[node_id] = behavior
    return tuple(out)


def config_from_json(text: str) -> ScenarioConfig:
    raw = json.loads(text)
    tree = raw["tree"]
    params = TreeParams(
        symbol_size=tree["symbol_size"],
        root_size=tree["root_size"],
        rate=Fraction(tree["rate"]),
        batch=tree["batch"],
        max_eq_degree=tree["max_eq_degree"],
        alpha=tree["alpha"],
        code_seed=tree.get("code_seed", 0),
        gate_trials=tree.get("gate_trials", 32),
        max_code_attempts=tree.get("max_code_attempts", 16),
    )
    disp = raw["dispersal"]
    dparams = DispersalParams(disp["gamma"], disp["eta"], disp["lambda"])
    n_nodes = raw["n_nodes"]
    behaviors = raw.get("behaviors", {})
    if isinstance(behaviors, list):
        assignment = tuple(Behavior(b) for b in behaviors)
    else:
        assignment = behaviors_from_counts(
            n_nodes, behaviors, raw.get("behavior_seed")
        )
    return ScenarioConfig(
        n_nodes=n_nodes,
        beta=raw["beta"],
        tree=params,
        dispersal=dparams,
        block_size=raw["block_size"],
        behaviors=assignment,
        n_clients=raw.get("n_clients", 3),
        proposer_strategy=raw.get("proposer_strategy", "honest"),
        rounds=raw.get("rounds", 1),
        audit_probability=raw.get("audit_probability", 0.0),
        master_seed=raw.get("master_seed", 0),
    )


def config_to_json(config: ScenarioConfig) -> str:
    raw = {
        "n_nodes": config.n_nodes,
        "beta": config.beta,
        "tree": {
            "symbol_size": config.tree.symbol_size,
            "root_size": config.tree.root_size,
            "rate": str(config.tree.rate),
            "batch": config.tree.batch,
            "max_eq_degree": config.tree.max_eq_degree,
            "alpha": config.tree.alpha,
            "code_seed": config.tree.code_seed,
            "gate_trials": config.tree.gate_trials,
            "max_code_attempts": config.tree.max_code_attempts,
        },
        "dispersal": {
            "gamma": config.dispersal.gamma,
            "eta": config.dispersal.eta,
            "lambda": config.dispersal.lam,
        },
        "block_size": config.block_size,
        "behaviors": [b.value for b in config.behaviors],
        "n_clients": config.n_clients,
        "proposer_strategy": config.proposer_strategy,
        "rounds": config.rounds,
        "audit_probability": config.audit_probability,
        "master_seed": config.master_seed,
    }
    return json.dumps(raw, sort_keys=True, indent=2)


@dataclass
class Trace:
    config: str
    rounds: list = field(default_factory=list)
    chain_lines: list = field(default_factory=list)
    ledgers: dict = field(default_factory=dict)  # client -> [per-round outcome]
    bytes_sent: int = 0
    bytes_stored: dict = field(default_factory=dict)  # node -> bytes
    bytes_downloaded: dict = field(default_factory=dict)  # client -> bytes
    results: dict = field(default_factory=dict)  # (round, client) -> result object
    fraud_records: list = field(default_factory=list)  # FraudProof objects
    commitments: dict = field(default_factory=dict)  # round -> Commitment

    def to_json(self) -> str:
        payload = {
            "config": json.loads(self.config),
            "rounds": self.rounds,
            "chain": self.chain_lines,
            "ledgers": {str(k): v for k, v in self.ledgers.items()},
            "counters": {
                "bytes_sent": self.bytes_sent,
                "bytes_stored": {str(k): v for k, v in self.bytes_stored.items()},
                "bytes_downloaded": {
                    str(k): v for k, v in self.bytes_downloaded.items()
                },
            },
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    def counters_csv(self) -> str:
        lines = ["counter,entity,bytes"]
        lines.append(f"sent,all,{self.bytes_sent}")
        for node, b in sorted(self.bytes_stored.items()):
            lines.append(f"stored,node{node},{b}")
        for client, b in sorted(self.bytes_downloaded.items()):
            lines.append(f"downloaded,client{client},{b}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class MeasureReport:
    communication_bytes: int
    storage_bytes: dict
    download_bytes: dict

    @property
    def total_storage(self) -> int:
        return sum(self.storage_bytes.values())

    @property
    def total_download(self) -> int:
        return sum(self.download_bytes.values())


def measure(trace: Trace) -> MeasureReport:
    return MeasureReport(
        communication_bytes=trace.bytes_sent,
        storage_bytes=dict(trace.bytes_stored),
        download_bytes=dict(trace.bytes_downloaded),
    )


def _unit_size(pom, cache: dict) -> int:
    key = id(pom)
    if key not in cache:
        cache[key] = 8 + len(encode_pom(pom))
    return cache[key]


def _message_size(message: DispersalMessage, cache: dict) -> int:
    total = len(encode_commitment(message.commitment))
    for _idx, _symbol, pom in message.units:
        total += _unit_size(pom, cache)
    return total


def _propose(config: ScenarioConfig, round_no: int, design):
    rng = np.random.default_rng(
        np.uint64(derive_seed("block", config.master_seed, round_no))
    )
    block = rng.bytes(config.block_size)
    strategy = config.proposer_strategy
    if strategy == "honest":
        tree = build_tree(block, config.tree)
        return block, tree, orc.messages_for_tree(tree, design)
    if strategy == "invalid_coding":
        tree = orc.build_tree_with_base_corruption(block, config.tree, xor_mask=0x5A)
        return block, tree, orc.messages_for_tree(tree, design)
    # equivocating: commitment from one block, chunks from another
    other = rng.bytes(config.block_size)
    tree_a = build_tree(block, config.tree)
    tree_b = build_tree(other, config.tree)
    msgs_a = orc.messages_for_tree(tree_a, design)
    msgs_b = orc.messages_for_tree(tree_b, design)
    messages = {}
    for node_id, msg in msgs_a.items():
        if node_id % 2 == 1:
            messages[node_id] = DispersalMessage(
                tree_a.commitment, msgs_b[node_id].units, msg.assigned
            )
        else:
            messages[node_id] = msg
    return block, tree_a, messages


def run_scenario(config: ScenarioConfig) -> Trace:
    nodes = [OracleNode(i, config.behaviors[i]) for i in range(config.n_nodes)]
    chain = TrustedChain(config.n_nodes, config.beta, config.dispersal.gamma)
    sizes = config.tree.layer_sizes(config.block_size)
    trace = Trace(config=config_to_json(config))
    trace.bytes_stored = {n.node_id: 0 for n in nodes}
    trace.bytes_downloaded = {c: 0 for c in range(config.n_clients)}
    trace.ledgers = {c: [] for c in range(config.n_clients)}
    size_cache: dict = {}

    for round_no in range(config.rounds):
        proposer = round_no % config.n_clients
        design = assign_chunks(
            sizes[-1],
            config.n_nodes,
            config.dispersal.lam,
            seed=derive_seed("design", config.master_seed, round_no),
        )
        block, tree, messages = _propose(config, round_no, design)
        commitment = tree.commitment
        trace.commitments[round_no] = commitment
        key = orc.commit_key(commitment)

        votes = []
        for node in nodes:
            trace.bytes_sent += _message_size(messages[node.node_id], size_cache)
            vote = orc.node_on_dispersal(node, messages[node.node_id])
            if vote is not None:
                votes.append(vote)
        status = orc.chain_submit_votes(chain, commitment, votes)

        retrievals = []
        for client in range(config.n_clients):
            if not status.committed:
                retrievals.append({"client": client, "outcome": "none"})
                trace.ledgers[client].append({"round": round_no, "outcome": "none"})
                continue
            units = orc.gather_units(nodes, key)
            trace.bytes_downloaded[client] += sum(
                _unit_size(pom, size_cache) for _i, _s, pom in units
            )
            chunks = orc.ChunkSet(commitment, units)
            try:
                result = orc.reconstruct(commitment, config.tree, chunks)
            except BadCode as signal:
                new_seed = orc.bad_code_round(nodes, commitment, signal, chain)
                entry = {"client": client, "outcome": "bad_code", "new_seed": new_seed}
                retrievals.append(entry)
                trace.ledgers[client].append({"round": round_no, **entry})
                trace.results[(round_no, client)] = signal
                continue
            trace.results[(round_no, client)] = result
            if isinstance(result, Block):
                entry = {
                    "client": client,
                    "outcome": "block",
                    "sha256": sha256(result.data).hex(),
                    "matches_proposal": result.data == block,
                }
            elif isinstance(result, Fraud):
                orc.chain_submit_fraud(chain, commitment, result.proof)
                entry = {
                    "client": client,
                    "outcome": "fraud",
                    "layer": result.proof.layer,
                    "equation": result.proof.equation_no,
                }
            else:
                entry = {
                    "client": client,
                    "outcome": "insufficient",
                    "fractions": [[u, f] for u, f in result.known_fractions],
                }
            retrievals.append(entry)
            trace.ledgers[client].append({"round": round_no, **entry})

        audit_rng = np.random.default_rng(
            np.uint64(derive_seed("audit", config.master_seed, round_no))
        )
        audit_entry = None
        if status.committed and config.audit_probability > 0:
            outcome = orc.audit(
                chain,
                nodes,
                commitment,
                config.audit_probability,
                audit_rng,
                design,
            )
            if outcome.audited is not None:
                audit_entry = {
                    "node": outcome.audited,
                    "passed": outcome.passed,
                    "slashed": outcome.slashed,
                }

        for node in nodes:
            trace.bytes_stored[node.node_id] = sum(
                _unit_size(pom, size_cache)
                for (_k, _i), (_symbol, pom) in node.stored.items()
            )

        trace.rounds.append(
            {
                "round": round_no,
                "proposer": proposer,
                "strategy": config.proposer_strategy,
                "committed": status.committed,
                "block_id": status.block_id,
                "votes": status.distinct_votes,
                "key": key.hex()[:16],
                "retrievals": retrievals,
                "audit": audit_entry,
            }
        )

    trace.chain_lines = chain.log_lines()
    trace.fraud_records = [
        rec.proof for rec in chain.records if isinstance(rec, orc.FraudRecord)
    ]
    return trace
