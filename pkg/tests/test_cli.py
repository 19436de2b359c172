import json

from dualcheck.cli import EXIT_BACKEND, EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from dualcheck.ingest import fixture_path

CLOCK = "2024-06-01T12:00:00+00:00"

C005_TEXT = "Chancellor resigns after marathon budget talks"


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestVerify:
    def test_markdown_to_stdout(self, fixture_mock_server, capsys):
        code, out, err = run(
            [
                "--backend",
                fixture_mock_server.base_url,
                "verify",
                "--text",
                C005_TEXT,
                "--id",
                "c005",
                "--clock",
                CLOCK,
            ],
            capsys,
        )
        assert code == EXIT_OK
        assert "refuted" in out
        assert "Manipulation analysis" in out

    def test_save_outcome_then_rerender(self, fixture_mock_server, capsys, tmp_path):
        envelope = tmp_path / "outcome.json"
        code, _, _ = run(
            [
                "--backend",
                fixture_mock_server.base_url,
                "verify",
                "--text",
                C005_TEXT,
                "--id",
                "c005",
                "--save-outcome",
                str(envelope),
            ],
            capsys,
        )
        assert code == EXIT_OK
        code, out, _ = run(["report", "--outcome", str(envelope), "--format", "json", "--clock", CLOCK], capsys)
        assert code == EXIT_OK
        assert json.loads(out)["final_label"] == "refuted"

    def test_unreachable_backend_is_exit_3(self, capsys):
        code, _, err = run(
            ["--backend", "http://127.0.0.1:1", "verify", "--text", "anything"],
            capsys,
        )
        assert code == EXIT_BACKEND
        assert "backend error" in err

    def test_injection_mode_flag(self, fixture_mock_server, capsys):
        code, out, _ = run(
            [
                "--backend",
                fixture_mock_server.base_url,
                "verify",
                "--text",
                C005_TEXT,
                "--id",
                "c005",
                "--mode",
                "injection",
                "--format",
                "json",
                "--clock",
                CLOCK,
            ],
            capsys,
        )
        assert code == EXIT_OK
        assert json.loads(out)["final_label"] == "refuted"


class TestBatchAndEval:
    def test_batch_then_eval(self, fixture_mock_server, capsys, tmp_path):
        out_dir = tmp_path / "run"
        code, out, _ = run(
            [
                "--backend",
                fixture_mock_server.base_url,
                "batch",
                "--dataset",
                str(fixture_path("claims.jsonl")),
                "--out",
                str(out_dir),
                "--clock",
                CLOCK,
            ],
            capsys,
        )
        assert code == EXIT_OK
        assert "12/12 completed" in out
        pred = out_dir / "predictions.jsonl"

        code, out, _ = run(["eval", "--pred", str(pred), "--gold", str(fixture_path("claims.jsonl"))], capsys)
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["n"] == 12
        assert payload["correct"]["strict"] == 4

        code, out, _ = run(["eval", "--pred", str(pred), "--rule", "manip"], capsys)
        assert code == EXIT_OK
        assert out.startswith("manip_aware:")

        code, out, _ = run(["eval", "--pred", str(pred), "--table"], capsys)
        assert code == EXIT_OK
        assert "strict" in out and "interv-aware" in out

        code, out, _ = run(["eval", "--pred", str(pred), "--collapse-first"], capsys)
        assert code == EXIT_OK
        collapsed = json.loads(out)
        assert collapsed["strict_acc"] == collapsed["manip_aware_acc"]

    def test_batch_all_backends_down_is_exit_3(self, capsys, tmp_path):
        code, _, err = run(
            [
                "--backend",
                "http://127.0.0.1:1",
                "batch",
                "--dataset",
                str(fixture_path("claims.jsonl")),
                "--out",
                str(tmp_path / "run"),
            ],
            capsys,
        )
        assert code == EXIT_BACKEND

    def test_eval_binary(self, capsys, tmp_path):
        path = tmp_path / "bin.jsonl"
        rows = [{"post_id": f"b{i}", "pred_fake": True, "gold_fake": True} for i in range(5)]
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        code, out, _ = run(["eval", "--pred", str(path), "--binary"], capsys)
        assert code == EXIT_OK
        assert json.loads(out)["binary_acc"] == 1.0

    def test_missing_dataset_is_exit_2(self, capsys, tmp_path):
        code, _, err = run(
            ["batch", "--dataset", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "o")], capsys
        )
        assert code == EXIT_DATA

    def test_malformed_gold_is_exit_2(self, capsys, tmp_path):
        pred = tmp_path / "pred.jsonl"
        pred.write_text('{"post_id": "a", "pred": "nei"}\n')
        gold = tmp_path / "gold.jsonl"
        gold.write_text('{"post_id": "a", "gold": "maybe"}\n')
        code, _, err = run(["eval", "--pred", str(pred), "--gold", str(gold)], capsys)
        assert code == EXIT_DATA


class TestUsageAndData:
    def test_missing_required_flag_is_exit_1(self, capsys):
        code, _, err = run(["verify"], capsys)
        assert code == EXIT_USAGE

    def test_unknown_subcommand_is_exit_1(self, capsys):
        code, _, _ = run(["frobnicate"], capsys)
        assert code == EXIT_USAGE

    def test_bad_mock_profile_is_exit_2(self, capsys, tmp_path):
        path = tmp_path / "profile.json"
        path.write_text('{"mode": "nonsense"}')
        code, _, _ = run(["mock-serve", "--profile", str(path)], capsys)
        assert code == EXIT_DATA

    def test_config_file_round_trip(self, fixture_mock_server, capsys, tmp_path):
        config = {
            "factcheck_backend": {"base_url": fixture_mock_server.base_url, "max_retries": 0},
            "manipulation_backend": {"base_url": fixture_mock_server.base_url, "max_retries": 0},
            "mode": "routing",
            "policy": {"uncertainty_threshold": 0.0},
            "parallelism": 2,
            "report_format": "markdown",
        }
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps(config))
        code, out, _ = run(
            ["--config", str(cfg_path), "verify", "--text", C005_TEXT, "--id", "c005", "--clock", CLOCK],
            capsys,
        )
        assert code == EXIT_OK
        assert "refuted" in out
