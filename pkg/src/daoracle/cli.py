"""Command-line entry point tying the modules into reproducible runs.

Exit codes: 0 success; 2 parameter/config/IO error; 3 verification failed;
4 fraud detected (proof written); 5 insufficient chunks; 6 bad code.
File formats are documented in FORMATS.md.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import metrics as mx
from . import serialize as sz
from . import simnet
from .cit import TreeParams, build_tree, sample_pom, verify_symbol
from .dispersal import (
    DispersalParams,
    assign_chunks,
    design_to_text,
    feasibility,
)
from .errors import BadCode, ComplexityError, ConfigError, ParameterError
from .incentives import (
    IncentiveParams,
    check_allC_equilibrium,
    check_allO_equilibrium,
)
from .retrieval import Block, ChunkSet, Fraud, reconstruct

EXIT_OK = 0
EXIT_PARAMS = 2
EXIT_VERIFY_FAILED = 3
EXIT_FRAUD = 4
EXIT_INSUFFICIENT = 5
EXIT_BAD_CODE = 6


def _tree_params(raw: dict) -> TreeParams:
    return TreeParams(
        symbol_size=raw["symbol_size"],
        root_size=raw["root_size"],
        rate=Fraction(str(raw["rate"])),
        batch=raw["batch"],
        max_eq_degree=raw["max_eq_degree"],
        alpha=raw["alpha"],
        code_seed=raw.get("code_seed", 0),
        gate_trials=raw.get("gate_trials", 32),
        max_code_attempts=raw.get("max_code_attempts", 16),
    )


def cmd_commit(args) -> int:
    block = Path(args.block).read_bytes()
    params = _tree_params(json.loads(Path(args.params).read_text()))
    tree = build_tree(block, params)
    Path(args.out_commitment).write_bytes(sz.encode_commitment(tree.commitment))
    if args.out_tree:
        Path(args.out_tree).write_bytes(sz.encode_tree_cache(params, block))
    print(f"committed {len(block)} bytes; root of {len(tree.commitment.root)} digests")
    return EXIT_OK


def cmd_pom(args) -> int:
    params, block = sz.decode_tree_cache(Path(args.tree).read_bytes())
    tree = build_tree(block, params)
    m_base = tree.sizes[-1]
    if args.all:
        indices = list(range(m_base))
    elif args.indices:
        indices = [int(tok) for tok in args.indices.split(",")]
    else:
        indices = [args.index]
    base = tree.layers[-1].symbols
    if len(indices) == 1 and not args.all and args.indices is None:
        Path(args.out).write_bytes(sz.encode_pom(sample_pom(tree, indices[0])))
    else:
        units = [
            (i, base[i].tobytes(), sample_pom(tree, i)) for i in sorted(set(indices))
        ]
        Path(args.out).write_bytes(sz.encode_chunk_bundle(units))
    print(f"wrote proofs for {len(set(indices))} base symbols")
    return EXIT_OK


def cmd_verify(args) -> int:
    commitment = sz.decode_commitment(Path(args.commitment).read_bytes())
    pom = sz.decode_pom(Path(args.pom).read_bytes())
    if verify_symbol(commitment, commitment.params, pom):
        print(f"symbol {pom.base_index}: membership verified")
        return EXIT_OK
    print(f"symbol {pom.base_index}: verification FAILED")
    return EXIT_VERIFY_FAILED


def cmd_disperse(args) -> int:
    raw = json.loads(Path(args.params).read_text())
    design = assign_chunks(
        raw["n_chunks"], raw["n_nodes"], raw["lambda"], seed=args.design_seed
    )
    Path(args.out).write_text(design_to_text(design))
    line = (
        f"design: {design.n_chunks} chunks over {design.n_nodes} nodes, "
        f"{design.k_per_node} per node"
    )
    if "gamma" in raw and "eta" in raw:
        verdict = feasibility(
            DispersalParams(raw["gamma"], raw["eta"], raw["lambda"])
        )
        line += f"; feasibility: {verdict.value}"
    print(line)
    return EXIT_OK


def cmd_retrieve(args) -> int:
    if args.chunks:
        commitment = sz.decode_commitment(Path(args.commitment).read_bytes())
        units = sz.decode_chunk_bundle(Path(args.chunks).read_bytes())
        chunks = ChunkSet(commitment, units)
        try:
            result = reconstruct(commitment, commitment.params, chunks)
        except BadCode as exc:
            print(f"bad code: {exc}")
            return EXIT_BAD_CODE
    else:
        trace = json.loads(Path(args.trace).read_text())
        config = simnet.config_from_json(json.dumps(trace["config"]))
        replay = simnet.run_scenario(config)
        result = replay.results.get((0, 0))
        if result is None:
            print("round 0 was never committed; nothing to retrieve")
            return EXIT_INSUFFICIENT
        if isinstance(result, BadCode):
            print(f"bad code: {result}")
            return EXIT_BAD_CODE
    if isinstance(result, Block):
        Path(args.out_block).write_bytes(result.data)
        print(f"reconstructed {len(result.data)} bytes -> {args.out_block}")
        return EXIT_OK
    if isinstance(result, Fraud):
        if args.out_fraud:
            Path(args.out_fraud).write_bytes(sz.encode_fraud_proof(result.proof))
        print(
            f"incorrect coding at layer {result.proof.layer}, "
            f"equation {result.proof.equation_no}"
        )
        return EXIT_FRAUD
    fractions = ", ".join(f"{u}:{f:.3f}" for u, f in result.known_fractions)
    print(f"insufficient chunks (known fractions {fractions})")
    return EXIT_INSUFFICIENT


def cmd_simulate(args) -> int:
    config = simnet.config_from_json(Path(args.scenario).read_text())
    trace = simnet.run_scenario(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trace.json").write_text(trace.to_json())
    (out / "chain.log").write_text("\n".join(trace.chain_lines) + "\n")
    (out / "counters.csv").write_text(trace.counters_csv())
    for n, record in enumerate(trace.fraud_records):
        (out / f"fraud_{n}.bin").write_bytes(sz.encode_fraud_proof(record))
    summary = {
        "rounds": [
            {
                "round": r["round"],
                "committed": r["committed"],
                "outcomes": [x["outcome"] for x in r["retrievals"]],
            }
            for r in trace.rounds
        ]
    }
    (out / "report.json").write_text(json.dumps(summary, sort_keys=True, indent=2))
    frauds = [line for line in trace.chain_lines if line.startswith("FRAUD")]
    print(
        f"simulated {config.rounds} round(s); "
        f"{sum(1 for r in trace.rounds if r['committed'])} committed, "
        f"{len(frauds)} fraud record(s); outputs in {out}"
    )
    return EXIT_OK


def cmd_metrics(args) -> int:
    raw = json.loads(Path(args.params).read_text())
    lam = raw.get("lambda")
    if lam is None:
        lam = mx.lambda_from_beta(raw["beta"], raw["eta"])
    cost = mx.CostParams(
        block_size=raw["block_size"],
        n_nodes=raw["n_nodes"],
        symbol_size=raw["symbol_size"],
        root_size=raw["root_size"],
        rate=float(Fraction(str(raw["rate"]))),
        batch=raw["batch"],
        max_eq_degree=raw["max_eq_degree"],
        lam=lam,
    )
    rep = mx.report(cost)
    prefix = Path(args.out_prefix)
    prefix.with_suffix(".json").write_text(rep.to_json())
    rows = mx.baseline_table(cost.block_size, cost.n_nodes, raw.get("beta", 0.49), cost)
    prefix.with_name(prefix.name + "_baselines").with_suffix(".csv").write_text(
        mx.baseline_csv(rows)
    )
    print(
        f"storage {rep.storage_cost_bytes / 1e3:.1f} kB, "
        f"fraud proof {rep.fraud_proof_bytes / 1e3:.1f} kB, "
        f"communication {rep.communication_bytes / 1e9:.2f} GB, "
        f"chunks/node {rep.chunks_per_node:.2f}"
    )
    return EXIT_OK


def cmd_incentives(args) -> int:
    raw = json.loads(Path(args.params).read_text())
    params = IncentiveParams(
        p_audit=raw["p_audit"],
        stake_oracle=raw["stake_oracle"],
        stake_committee=raw["stake_committee"],
        stake_proposer=raw["stake_proposer"],
        submission_fee=raw["submission_fee"],
        block_reward=raw["block_reward"],
        reward_fraction=raw["reward_fraction"],
        verify_cost=raw["verify_cost"],
        aggregate_cost=raw["aggregate_cost"],
        n_signatures=raw["n_signatures"],
    )
    payload = {
        "all_cooperate": json.loads(check_allC_equilibrium(params).to_json()),
        "all_offline": json.loads(check_allO_equilibrium(params).to_json()),
    }
    text = json.dumps(payload, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="daoracle",
        description="Data availability oracle: commit, disperse, retrieve, simulate.",
        epilog=(
            "exit codes: 0 ok, 2 bad parameters, 3 verification failed, "
            "4 fraud detected, 5 insufficient chunks, 6 bad code"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("commit", help="build a coded tree and write its commitment")
    p.add_argument("--block", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--out-commitment", required=True)
    p.add_argument("--out-tree")
    p.set_defaults(func=cmd_commit)

    p = sub.add_parser("pom", help="sample membership proofs from a tree cache")
    p.add_argument("--tree", required=True)
    p.add_argument("--index", type=int)
    p.add_argument("--indices", help="comma-separated base indices (writes a bundle)")
    p.add_argument("--all", action="store_true", help="bundle every base symbol")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pom)

    p = sub.add_parser("verify", help="check one membership proof")
    p.add_argument("--commitment", required=True)
    p.add_argument("--pom", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("disperse", help="draw a chunk-to-node design")
    p.add_argument("--params", required=True)
    p.add_argument("--design-seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_disperse)

    p = sub.add_parser("retrieve", help="reconstruct a block from chunks")
    p.add_argument("--commitment")
    p.add_argument("--chunks")
    p.add_argument("--trace")
    p.add_argument("--out-block", default="block.out")
    p.add_argument("--out-fraud")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("simulate", help="run a scenario config")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="closed-form cost tables")
    p.add_argument("--params", required=True)
    p.add_argument("--out-prefix", default="metrics")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("incentives", help="equilibrium condition report")
    p.add_argument("--params", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_incentives)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "retrieve" and not (args.chunks or args.trace):
        parser.error("retrieve needs --chunks or --trace")
    if args.command == "retrieve" and args.chunks and not args.commitment:
        parser.error("--chunks needs --commitment")
    if args.command == "pom" and args.index is None and not (args.indices or args.all):
        parser.error("pom needs --index, --indices or --all")
    try:
        return args.func(args)
    except (ParameterError, ConfigError, ComplexityError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except BadCode as exc:
        print(f"bad code: {exc}", file=sys.stderr)
        return EXIT_BAD_CODE


if __name__ == "__main__":
    sys.exit(main())
