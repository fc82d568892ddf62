"""Exercise every subcommand and exit code through main(argv)."""

import json

import pytest

from daoracle import cit, cli, serialize as sz
from daoracle.oracle import build_tree_with_base_corruption

@pytest.fixture()
def workdir(tmp_path, small_block):
    params = {
        "symbol_size": 64,
        "root_size": 4,
        "rate": "1/4",
        "batch": 8,
        "max_eq_degree": 8,
        "alpha": 0.125,
        "code_seed": 5,
    }
    (tmp_path / "tree_params.json").write_text(json.dumps(params))
    (tmp_path / "block.bin").write_bytes(small_block)
    return tmp_path


def run(*argv) -> int:
    return cli.main([str(a) for a in argv])


class TestCommitVerifyRetrieve:
    def test_round_trip(self, workdir, small_block, capsys):
        d = workdir
        assert run(
            "commit", "--block", d / "block.bin", "--params", d / "tree_params.json",
            "--out-commitment", d / "c.bin", "--out-tree", d / "t.bin",
        ) == cli.EXIT_OK
        assert run("pom", "--tree", d / "t.bin", "--index", "15", "--out", d / "p.bin") == cli.EXIT_OK
        assert run("verify", "--commitment", d / "c.bin", "--pom", d / "p.bin") == cli.EXIT_OK
        assert run("pom", "--tree", d / "t.bin", "--all", "--out", d / "all.bundle") == cli.EXIT_OK
        assert run(
            "retrieve", "--commitment", d / "c.bin", "--chunks", d / "all.bundle",
            "--out-block", d / "out.bin",
        ) == cli.EXIT_OK
        assert (d / "out.bin").read_bytes() == small_block

    def test_verification_failure_code(self, workdir, small_tree):
        d = workdir
        run("commit", "--block", d / "block.bin", "--params", d / "tree_params.json",
            "--out-commitment", d / "c.bin", "--out-tree", d / "t.bin")
        pom = cit.sample_pom(small_tree, 3)
        import dataclasses

        bad = dataclasses.replace(pom, base_symbol=bytes(64))
        (d / "bad.pom").write_bytes(sz.encode_pom(bad))
        assert run("verify", "--commitment", d / "c.bin", "--pom", d / "bad.pom") == cli.EXIT_VERIFY_FAILED

    def test_fraud_exit_code(self, workdir, small_block, small_params):
        d = workdir
        bad_tree = build_tree_with_base_corruption(small_block, small_params, xor_mask=0x5A)
        (d / "bad_c.bin").write_bytes(sz.encode_commitment(bad_tree.commitment))
        base = bad_tree.layers[-1].symbols
        units = [
            (i, base[i].tobytes(), cit.sample_pom(bad_tree, i)) for i in range(32)
        ]
        (d / "bad.bundle").write_bytes(sz.encode_chunk_bundle(units))
        code = run(
            "retrieve", "--commitment", d / "bad_c.bin", "--chunks", d / "bad.bundle",
            "--out-block", d / "x.bin", "--out-fraud", d / "fraud.bin",
        )
        assert code == cli.EXIT_FRAUD
        proof = sz.decode_fraud_proof((d / "fraud.bin").read_bytes())
        from daoracle.retrieval import verify_fraud_proof

        assert verify_fraud_proof(bad_tree.commitment, small_params, proof)

    def test_insufficient_exit_code(self, workdir, small_tree):
        d = workdir
        run("commit", "--block", d / "block.bin", "--params", d / "tree_params.json",
            "--out-commitment", d / "c.bin", "--out-tree", d / "t.bin")
        run("pom", "--tree", d / "t.bin", "--indices", "0,1,2", "--out", d / "few.bundle")
        assert run(
            "retrieve", "--commitment", d / "c.bin", "--chunks", d / "few.bundle",
            "--out-block", d / "x.bin",
        ) == cli.EXIT_INSUFFICIENT

    def test_commit_outputs_byte_stable(self, workdir):
        d = workdir
        for tag in ("a", "b"):
            run("commit", "--block", d / "block.bin", "--params",
                d / "tree_params.json", "--out-commitment", d / f"c_{tag}.bin",
                "--out-tree", d / f"t_{tag}.bin")
        assert (d / "c_a.bin").read_bytes() == (d / "c_b.bin").read_bytes()
        assert (d / "t_a.bin").read_bytes() == (d / "t_b.bin").read_bytes()

    def test_missing_file_is_parameter_error(self, workdir):
        assert run(
            "commit", "--block", workdir / "nope.bin", "--params",
            workdir / "tree_params.json", "--out-commitment", workdir / "c.bin",
        ) == cli.EXIT_PARAMS


class TestDisperse:
    def test_writes_line_per_node(self, tmp_path):
        spec = {"n_chunks": 32, "n_nodes": 8, "lambda": 0.5, "gamma": 0.75, "eta": 0.875}
        (tmp_path / "d.json").write_text(json.dumps(spec))
        assert run(
            "disperse", "--params", tmp_path / "d.json", "--design-seed", 3,
            "--out", tmp_path / "design.txt",
        ) == cli.EXIT_OK
        lines = (tmp_path / "design.txt").read_text().strip().splitlines()
        assert len(lines) == 8
        assert all(len(line.split()) == 8 for line in lines)

    def test_byte_stable_under_seed(self, tmp_path):
        spec = {"n_chunks": 32, "n_nodes": 8, "lambda": 0.5}
        (tmp_path / "d.json").write_text(json.dumps(spec))
        run("disperse", "--params", tmp_path / "d.json", "--design-seed", 3,
            "--out", tmp_path / "a.txt")
        run("disperse", "--params", tmp_path / "d.json", "--design-seed", 3,
            "--out", tmp_path / "b.txt")
        assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()


class TestSimulate:
    def scenario(self, tmp_path, strategy="honest"):
        config = {
            "n_nodes": 20,
            "beta": 0.25,
            "block_size": 65536,
            "n_clients": 2,
            "rounds": 1,
            "master_seed": 7,
            "proposer_strategy": strategy,
            "behaviors": {},
            "tree": {
                "symbol_size": 2048, "root_size": 4, "rate": "1/4", "batch": 8,
                "max_eq_degree": 8, "alpha": 0.125, "code_seed": 11,
                "gate_trials": 24,
            },
            "dispersal": {"gamma": 0.5, "eta": 0.875, "lambda": 0.2},
        }
        path = tmp_path / f"scenario_{strategy}.json"
        path.write_text(json.dumps(config))
        return path

    def test_simulate_writes_artifacts(self, tmp_path):
        path = self.scenario(tmp_path)
        out = tmp_path / "sim"
        assert run("simulate", "--scenario", path, "--out", out) == cli.EXIT_OK
        assert (out / "trace.json").exists()
        assert (out / "chain.log").read_text().startswith("COMMIT")
        assert (out / "counters.csv").read_text().startswith("counter,")
        report = json.loads((out / "report.json").read_text())
        assert report["rounds"][0]["outcomes"] == ["block", "block"]

    def test_invalid_coding_scenario_records_fraud(self, tmp_path):
        path = self.scenario(tmp_path, strategy="invalid_coding")
        out = tmp_path / "sim_bad"
        assert run("simulate", "--scenario", path, "--out", out) == cli.EXIT_OK
        assert any(
            line.startswith("FRAUD")
            for line in (out / "chain.log").read_text().splitlines()
        )
        # the fraud proof itself is materialized and decodes
        assert (out / "fraud_0.bin").exists()
        sz.decode_fraud_proof((out / "fraud_0.bin").read_bytes())

    def test_retrieve_from_trace_replay(self, tmp_path):
        path = self.scenario(tmp_path)
        out = tmp_path / "sim_replay"
        run("simulate", "--scenario", path, "--out", out)
        code = run(
            "retrieve", "--trace", out / "trace.json",
            "--out-block", tmp_path / "replayed.bin",
        )
        assert code == cli.EXIT_OK
        assert (tmp_path / "replayed.bin").stat().st_size == 65536

    def test_retrieve_from_fraud_trace_replay(self, tmp_path):
        path = self.scenario(tmp_path, strategy="invalid_coding")
        out = tmp_path / "sim_replay_bad"
        run("simulate", "--scenario", path, "--out", out)
        code = run(
            "retrieve", "--trace", out / "trace.json",
            "--out-block", tmp_path / "x.bin", "--out-fraud", tmp_path / "f.bin",
        )
        assert code == cli.EXIT_FRAUD
        assert (tmp_path / "f.bin").exists()

    def test_outputs_byte_stable(self, tmp_path):
        path = self.scenario(tmp_path)
        run("simulate", "--scenario", path, "--out", tmp_path / "s1")
        run("simulate", "--scenario", path, "--out", tmp_path / "s2")
        assert (
            (tmp_path / "s1" / "trace.json").read_bytes()
            == (tmp_path / "s2" / "trace.json").read_bytes()
        )


class TestTables:
    def test_metrics_tables(self, tmp_path, capsys):
        spec = {
            "block_size": 12e6, "n_nodes": 9000, "beta": 0.49, "eta": 0.875,
            "symbol_size": 48e3, "root_size": 16, "rate": 0.25, "batch": 8,
            "max_eq_degree": 8,
        }
        (tmp_path / "m.json").write_text(json.dumps(spec))
        assert run(
            "metrics", "--params", tmp_path / "m.json",
            "--out-prefix", tmp_path / "tables",
        ) == cli.EXIT_OK
        report = json.loads((tmp_path / "tables.json").read_text())
        assert report["storage_cost_bytes"] == pytest.approx(597e3, rel=0.05)
        baselines = (tmp_path / "tables_baselines.csv").read_text()
        assert "uncoded (repetition)" in baselines

    def test_incentives_report(self, tmp_path, capsys):
        spec = {
            "p_audit": 0.2, "stake_oracle": 50, "stake_committee": 10,
            "stake_proposer": 20, "submission_fee": 0.5, "block_reward": 100,
            "reward_fraction": 0.6, "verify_cost": 1.0, "aggregate_cost": 2.0,
            "n_signatures": 10,
        }
        (tmp_path / "i.json").write_text(json.dumps(spec))
        assert run(
            "incentives", "--params", tmp_path / "i.json", "--out", tmp_path / "i_out.json",
        ) == cli.EXIT_OK
        report = json.loads((tmp_path / "i_out.json").read_text())
        assert report["all_cooperate"]["is_equilibrium"] is True
        assert report["all_offline"]["is_equilibrium"] is True
