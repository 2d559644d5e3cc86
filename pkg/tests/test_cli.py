"""End-to-end command-line behaviour: subcommands, exit codes, determinism."""
import json

import pytest

import gibbsflow as gf
from gibbsflow import cli
from gibbsflow.errors import AccuracyError

CONFIG = """
model:
  family: scalar
  a: 1.0
  b: {kind: linear, slope: 1.0}
n_list: [8, 16, 32]
scheme: [left, symmetric]
seed: 5
verify:
  lemma_instances: 25
  dim_max: 6
  lifting_ns: [4, 8]
  cocycle_triples: 2
  contraction_ns: [4]
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text(CONFIG)
    return str(path)


class TestRun:
    def test_exit_zero_and_valid_jsonl(self, config_path, tmp_path, capsys):
        out = tmp_path / "out.jsonl"
        assert cli.main(["run", "--config", config_path, "--output", str(out)]) == 0
        lines = out.read_text().splitlines()
        records = [json.loads(line) for line in lines]
        assert records[0]["kind"] == "meta"
        assert records[1]["kind"] == "constants"
        kinds = [r["kind"] for r in records[2:]]
        assert kinds == ["convergence", "convergence"]
        assert [r["scheme"] for r in records[2:]] == ["left", "symmetric"]

    def test_byte_identical_across_thread_counts(self, config_path, tmp_path):
        outs = []
        for threads, name in ((1, "a.jsonl"), (4, "b.jsonl")):
            out = tmp_path / name
            assert cli.main(["run", "--config", config_path,
                             "--output", str(out), "--threads", str(threads)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_stdout_output(self, config_path, capsys):
        assert cli.main(["run", "--config", config_path]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert all(json.loads(line)["kind"] in ("meta", "constants", "convergence")
                   for line in lines)

    def test_seed_override_changes_meta(self, config_path, capsys):
        cli.main(["run", "--config", config_path, "--seed", "99"])
        out = capsys.readouterr().out
        meta = json.loads(out.splitlines()[0])
        assert meta["seed"] == 99

    def test_csv_format_flag(self, config_path, capsys):
        assert cli.main(["run", "--config", config_path, "--format", "csv"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("scheme,n,err_op,err_tr,epsilon_theory,ratio")


class TestVerify:
    def test_exit_zero_all_hold(self, config_path, capsys):
        assert cli.main(["verify", "--config", config_path]) == 0
        records = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
        kinds = {r["kind"] for r in records}
        assert {"meta", "lemma21", "lifting", "cocycle", "contraction"} <= kinds
        assert all(r.get("holds", True) for r in records)
        # 1 lemma + 2 schemes x 2 lifting ns + 2 cocycle + 2 schemes x 1 contraction
        assert len(records) == 1 + 1 + 4 + 2 + 2


class TestConstants:
    def test_reports_xi(self, config_path, capsys):
        assert cli.main(["constants", "--config", config_path]) == 0
        records = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
        assert records[1]["kind"] == "constants"
        assert records[1]["xi"] == pytest.approx(1.0, rel=1e-10)


class TestReport:
    def test_reemits_csv(self, config_path, tmp_path, capsys):
        stored = tmp_path / "stored.jsonl"
        assert cli.main(["run", "--config", config_path,
                         "--output", str(stored)]) == 0
        assert cli.main(["report", str(stored), "--format", "csv"]) == 0
        reemitted = capsys.readouterr().out
        assert cli.main(["run", "--config", config_path, "--format", "csv"]) == 0
        direct = capsys.readouterr().out
        assert reemitted == direct

    def test_rejects_garbage_input(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("not json\n")
        assert cli.main(["report", str(bad)]) == 1

    def test_missing_input_is_io_error(self, tmp_path):
        assert cli.main(["report", str(tmp_path / "missing.jsonl")]) == 3


class TestExitCodes:
    def test_invalid_config_collects_all_messages(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("model: {family: scalar, a: 0.5}\nbeta: 0\ns: 2.0\n")
        assert cli.main(["run", "--config", str(bad)]) == 1
        err = capsys.readouterr().err
        assert "model.a" in err and "beta" in err and "s" in err

    def test_missing_config_file(self, tmp_path):
        assert cli.main(["run", "--config", str(tmp_path / "nope.yaml")]) == 3

    def test_unwritable_output(self, config_path, tmp_path):
        target = str(tmp_path / "no_dir" / "out.jsonl")
        assert cli.main(["run", "--config", config_path, "--output", target]) == 3

    def test_accuracy_failure_returns_two(self, config_path, monkeypatch, capsys):
        def always_fails(*args, **kwargs):
            raise AccuracyError("reference did not converge",
                                requested=1e-10, achieved=1e-3)

        monkeypatch.setattr(cli, "run_convergence", always_fails)
        assert cli.main(["run", "--config", config_path]) == 2
        records = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
        failures = [r for r in records if r["kind"] == "failure"]
        assert failures and failures[0]["error"] == "AccuracyError"

    def test_bad_threads_flag(self, config_path):
        assert cli.main(["run", "--config", config_path, "--threads", "0"]) == 1

    def test_threads_env_fallback(self, config_path, monkeypatch, capsys):
        monkeypatch.setenv("GIBBSFLOW_THREADS", "2")
        assert cli.main(["run", "--config", config_path]) == 0
        monkeypatch.setenv("GIBBSFLOW_THREADS", "zero")
        assert cli.main(["run", "--config", config_path]) == 1


class TestVerbose:
    def test_timings_go_to_stderr_not_stdout(self, config_path, capsys):
        assert cli.main(["run", "--config", config_path, "--verbose"]) == 0
        captured = capsys.readouterr()
        assert "finished in" in captured.err
        for line in captured.out.splitlines():
            json.loads(line)  # stdout stays pure jsonl
