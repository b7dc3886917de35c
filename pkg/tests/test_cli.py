"""Command-line contract: artifacts, determinism, and exit codes."""

import json
import subprocess
import sys
from pathlib import Path

import numpy as np

from sga.cli import main
from sga.serialize import load_parameters

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
FLIGHT = str(FIXTURES / "flight.conllu")
DOGS = str(FIXTURES / "dogs.conllu")
MINIMAL = str(FIXTURES / "minimal.conllu")
CORPUS = str(FIXTURES / "toy_corpus.conllu")

TOY = ["--toy", "--seed", "3"]


def read_tree(directory):
    return {
        p.name: p.read_bytes() for p in sorted(Path(directory).rglob("*")) if p.is_file()
    }


class TestGraphCommand:
    def test_writes_dot_and_json(self, tmp_path):
        out = tmp_path / "graphs"
        assert main(["graph", DOGS, "--out-dir", str(out)]) == 0
        dot = (out / "dogs_s0000.dot").read_text()
        assert dot.count("style=solid") == 2
        assert dot.count("style=dashed") == 2
        payload = json.loads((out / "dogs_s0000.json").read_text())
        n = payload["n"]
        assert len(payload["edges"]) == 2 * (n - 1) + n
        assert sum(1 for e in payload["edges"] if e["direction"] == "self") == n

    def test_flight_edge_counts(self, tmp_path):
        out = tmp_path / "graphs"
        assert main(["graph", FLIGHT, "--format", "json", "--out-dir", str(out)]) == 0
        payload = json.loads((out / "flight_s0000.json").read_text())
        assert len(payload["edges"]) == 22
        assert sum(1 for e in payload["edges"] if e["direction"] == "self") == 8

    def test_missing_file_exits_2(self, tmp_path, capsys):
        assert main(["graph", str(tmp_path / "nope.conllu")]) == 2
        assert "nope.conllu" in capsys.readouterr().err

    def test_malformed_file_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.conllu"
        bad.write_text("1\tonly\tfour\tcolumns\n")
        assert main(["graph", str(bad)]) == 2
        assert "columns" in capsys.readouterr().err


class TestPathsCommand:
    def test_tsv_to_stdout(self, capsys):
        assert main(["paths", MINIMAL]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].split("\t") == [
            "sentence", "from", "to", "from_form", "to_form", "path",
        ]
        assert "0\t1\t2\tDogs\tbark\tnsubj:rev" in lines
        assert len(lines) == 1 + 4  # header + 2x2 ordered pairs


class TestEncodeCommand:
    def test_needs_param_source(self, capsys):
        assert main(["encode", DOGS]) == 2
        assert "--random-init" in capsys.readouterr().err

    def test_attention_csv_count_at_defaults(self, tmp_path):
        out = tmp_path / "enc"
        code = main(
            ["encode", FLIGHT, "--random-init", "--seed", "1", "--out-dir", str(out)]
        )
        assert code == 0
        assert len(list(out.glob("attn_*.csv"))) == 6 * 4
        assert (out / "embeddings.sga").exists()

    def test_seeded_runs_are_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for directory in (a, b):
            assert (
                main(["encode", DOGS, "--random-init", *TOY, "--out-dir", str(directory)])
                == 0
            )
        assert read_tree(a) == read_tree(b)

    def test_separate_processes_are_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for directory in (a, b):
            proc = subprocess.run(
                [sys.executable, "-m", "sga.cli", "encode", DOGS, "--random-init",
                 *TOY, "--out-dir", str(directory)],
                capture_output=True,
            )
            assert proc.returncode == 0, proc.stderr
        assert read_tree(a) == read_tree(b)

    def test_zero_relations_equals_baseline_bytes(self, tmp_path):
        zero, base = tmp_path / "zero", tmp_path / "base"
        assert main(
            ["encode", DOGS, "--random-init", *TOY, "--zero-relations",
             "--out-dir", str(zero)]
        ) == 0
        assert main(
            ["encode", DOGS, "--random-init", *TOY, "--baseline",
             "--out-dir", str(base)]
        ) == 0
        assert read_tree(zero) == read_tree(base)

    def test_scores_dumped_on_request(self, tmp_path):
        out = tmp_path / "enc"
        assert main(
            ["encode", DOGS, "--random-init", *TOY, "--dump-scores",
             "--out-dir", str(out)]
        ) == 0
        assert len(list(out.glob("scores_*.csv"))) == len(list(out.glob("attn_*.csv")))

    def test_relations_json_written(self, tmp_path):
        out = tmp_path / "enc"
        assert main(
            ["encode", MINIMAL, "--random-init", *TOY, "--out-dir", str(out)]
        ) == 0
        payload = json.loads((out / "relations_s0000.json").read_text())
        assert payload["n"] == len("Dogsbark")
        assert ["self"] in payload["paths"]
        table = np.asarray(payload["pair_index"])
        assert table.shape == (payload["n"], payload["n"])

    def test_embeddings_have_expected_shape(self, tmp_path):
        out = tmp_path / "enc"
        assert main(
            ["encode", MINIMAL, "--random-init", *TOY, "--out-dir", str(out)]
        ) == 0
        loaded = load_parameters(out / "embeddings.sga")
        assert loaded["sentence0000"].shape == (8, 16)

    def test_param_roundtrip_requires_matching_config(self, tmp_path, capsys):
        # Parameters drawn at toy dimensions cannot back a default-size model.
        from sga.config import PipelineConfig
        from sga.conllu import read_conllu
        from sga.pipeline import Model
        from sga.serialize import save_parameters

        trees = read_conllu(Path(DOGS).read_text())
        model = Model.create(PipelineConfig.toy(seed=3), trees)
        params_file = tmp_path / "toy.sga"
        save_parameters(params_file, model.parameters())

        out = tmp_path / "enc"
        code = main(
            ["encode", DOGS, "--params", str(params_file), "--out-dir", str(out)]
        )
        assert code == 2
        assert "match" in capsys.readouterr().err

        assert main(
            ["encode", DOGS, "--params", str(params_file), "--toy",
             "--out-dir", str(out)]
        ) == 0


class TestVerifyCommand:
    def test_algebra_suite_passes(self, capsys):
        assert main(["verify", "algebra"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["passed"] is True
        names = {c["name"] for s in report["suites"] for c in s["checks"]}
        assert "four_term_identity" in names

    def test_graph_suite_passes(self, capsys):
        assert main(["verify", "graph"]) == 0
        report = json.loads(capsys.readouterr().out)
        (suite,) = report["suites"]
        assert suite["suite"] == "graph"
        assert all(c["measured"] <= c["tolerance"] for c in suite["checks"])

    def test_unknown_suite_exits_2(self, capsys):
        assert main(["verify", "bogus"]) == 2

    def test_report_written_to_file(self, tmp_path):
        out = tmp_path / "report.json"
        assert main(["verify", "dedup", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["passed"] is True

    def test_failing_suite_exits_1(self, capsys, monkeypatch):
        from sga.verify import SUITES, CheckResult, SuiteResult

        def broken(seed):
            result = SuiteResult(suite="algebra")
            result.checks.append(
                CheckResult("forced", passed=False, measured=1.0, tolerance=0.0)
            )
            return result

        monkeypatch.setitem(SUITES, "algebra", broken)
        assert main(["verify", "algebra"]) == 1
        assert json.loads(capsys.readouterr().out)["passed"] is False


class TestToytrainCommand:
    def test_zero_epochs_writes_initial_loss_only(self, tmp_path):
        out = tmp_path / "loss.csv"
        code = main(
            ["toytrain", CORPUS, "--epochs", "0", *TOY, "--out", str(out)]
        )
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "epoch,loss"
        assert len(lines) == 2
        assert lines[1].startswith("0,")

    def test_same_seed_gives_identical_curves(self, tmp_path):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (first, second):
            assert main(
                ["toytrain", CORPUS, "--epochs", "2", *TOY, "--out", str(out)]
            ) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_empty_corpus_exits_2(self, tmp_path, capsys):
        empty = tmp_path / "empty.conllu"
        empty.write_text("# nothing here\n")
        assert main(["toytrain", str(empty), "--epochs", "1"]) == 2

    def test_oversized_corpus_exits_2(self, tmp_path, capsys):
        blob = []
        for _ in range(101):
            blob.append("1\ta\t_\t_\t_\t_\t0\troot\t_\t_\n")
        big = tmp_path / "big.conllu"
        big.write_text("\n".join(blob))
        assert main(["toytrain", str(big), "--epochs", "1"]) == 2
        assert "100" in capsys.readouterr().err


class TestConfigHandling:
    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# toy run\n"
            "d_model=12\nd_e=6\nd_h=6\nn_blocks=1\nheads=2\nd_ff=24\n"
            "use_positions=false\n"
        )
        out = tmp_path / "enc"
        code = main(
            ["encode", MINIMAL, "--random-init", "--seed", "0",
             "--config", str(cfg), "--heads", "3", "--out-dir", str(out)]
        )
        assert code == 0
        # 1 block x 3 heads worth of attention maps
        assert len(list(out.glob("attn_*.csv"))) == 3

    def test_bad_config_key_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("nonsense=1\n")
        assert main(
            ["encode", MINIMAL, "--random-init", "--config", str(cfg)]
        ) == 2
        assert "nonsense" in capsys.readouterr().err

    def test_max_chars_enforced(self, tmp_path, capsys):
        assert main(
            ["encode", FLIGHT, "--random-init", *TOY, "--max-chars", "10",
             "--out-dir", str(tmp_path / "enc")]
        ) == 2
        assert "maximum" in capsys.readouterr().err

    def test_seed_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SGA_SEED", "3")
        a = tmp_path / "env"
        assert main(["encode", DOGS, "--random-init", "--toy", "--out-dir", str(a)]) == 0
        b = tmp_path / "flag"
        assert main(
            ["encode", DOGS, "--random-init", *TOY, "--out-dir", str(b)]
        ) == 0
        assert read_tree(a) == read_tree(b)
