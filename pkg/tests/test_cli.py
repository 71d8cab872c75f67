from __future__ import annotations

import json
from pathlib import Path

import pytest

from editsynth.cli import main
from editsynth.pipeline import FORMAT_TRIPLETS, export_dataset
from editsynth.records import STYLE_DESCRIPTIVE, STYLE_LAZY
from conftest import write_corpus_dir
from helpers import edit_lines, make_triplet, numbered_code

pytestmark = pytest.mark.filterwarnings("ignore::editsynth.errors.StyleExhausted")


@pytest.fixture
def config_file(tmp_path, corpus_dir) -> Path:
    path = tmp_path / "run.toml"
    path.write_text(
        f"""
master_seed = 41

[corpus]
kind = "dir"
path = "{corpus_dir}"

[gen]
parallelism = 4

[hdp]
iterations = 40

[pipeline]
target_total = 12
""",
        encoding="utf-8",
    )
    return path


def triplet_file(path: Path, per_style: int = 15, theme: str = "cache") -> Path:
    triplets = []
    pre = "\n".join(f"{theme}_val{i} = read_{theme}({i})" for i in range(10))
    for style in (STYLE_LAZY, STYLE_DESCRIPTIVE):
        for i in range(per_style):
            post = edit_lines(pre, [i % 10], tag=theme)
            triplets.append(
                make_triplet(
                    pre_edit=pre,
                    post_edit=post,
                    style=style,
                    instruction=f"update {theme} entry handling slot {i % 10}",
                )
            )
    export_dataset(triplets, path, FORMAT_TRIPLETS)
    return path


class TestSynthesizeCommand:
    def test_mock_run_writes_outputs(self, tmp_path, config_file):
        out = tmp_path / "out"
        code = main(
            ["synthesize", "--config", str(config_file), "--out", str(out),
             "--pairs", "10", "--backend", "mock"]
        )
        assert code == 0
        triplets = (out / "triplets.jsonl").read_text().splitlines()
        discards = json.loads((out / "discards.json").read_text())
        manifest = json.loads((out / "manifest.json").read_text())
        assert len(triplets) == 2 * discards["pairs_succeeded"]
        assert discards["pairs_attempted"] == 10
        assert manifest["seed"] == 41
        assert manifest["config"]["master_seed"] == 41

    def test_missing_api_key_exits_2(self, tmp_path, config_file, monkeypatch, capsys):
        monkeypatch.delenv("OCE_API_KEY", raising=False)
        code = main(
            ["synthesize", "--config", str(config_file), "--out", str(tmp_path / "o"),
             "--pairs", "2", "--backend", "remote"]
        )
        assert code == 2
        assert "OCE_API_KEY" in capsys.readouterr().err

    def test_two_runs_identical(self, tmp_path, config_file):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert (
                main(["synthesize", "--config", str(config_file), "--out", str(out),
                      "--pairs", "8", "--backend", "mock"]) == 0
            )
            outs.append(out)
        for name in ("triplets.jsonl", "manifest.json", "discards.json"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()

    def test_bad_config_exits_2(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("[corpus]\nkind = 'dir'\nmystery_key = 1\n", encoding="utf-8")
        code = main(["synthesize", "--config", str(bad), "--out", str(tmp_path / "o"),
                     "--pairs", "1", "--backend", "mock"])
        assert code == 2


class TestFilterCommand:
    def test_single_input(self, tmp_path, config_file):
        data = triplet_file(tmp_path / "in.jsonl")
        out = tmp_path / "filtered"
        code = main(["filter", "--config", str(config_file), "--out", str(out),
                     "--input", str(data), "--target", "10"])
        assert code == 0
        rows = [json.loads(l) for l in (out / "curated.jsonl").read_text().splitlines()]
        assert len(rows) == 10
        styles = [r["style"] for r in rows]
        assert styles.count(STYLE_LAZY) == 5
        assert styles.count(STYLE_DESCRIPTIVE) == 5

    def test_two_inputs_mixed(self, tmp_path, config_file):
        a = triplet_file(tmp_path / "a.jsonl", per_style=15, theme="cache")
        b = triplet_file(tmp_path / "b.jsonl", per_style=15, theme="parse")
        out = tmp_path / "filtered"
        code = main(["filter", "--config", str(config_file), "--out", str(out),
                     "--input", str(a), str(b), "--target", "20"])
        assert code == 0
        rows = [json.loads(l) for l in (out / "curated.jsonl").read_text().splitlines()]
        assert len(rows) == 20
        styles = [r["style"] for r in rows]
        assert styles.count(STYLE_LAZY) == 10

    def test_target_above_survivors_warns_but_succeeds(self, tmp_path, config_file, capsys):
        data = triplet_file(tmp_path / "in.jsonl", per_style=3)
        out = tmp_path / "filtered"
        code = main(["filter", "--config", str(config_file), "--out", str(out),
                     "--input", str(data), "--target", "100"])
        assert code == 0
        rows = (out / "curated.jsonl").read_text().splitlines()
        assert len(rows) == 6
        assert "survivors" in capsys.readouterr().err

    def test_unreadable_input_exits_2(self, tmp_path, config_file):
        code = main(["filter", "--config", str(config_file), "--out", str(tmp_path / "f"),
                     "--input", str(tmp_path / "missing.jsonl")])
        assert code == 2

    def test_manifest_records_rejections(self, tmp_path, config_file):
        pre = numbered_code(10)
        triplets = [
            make_triplet(pre_edit=pre, post_edit=pre, style=STYLE_LAZY),
            make_triplet(pre_edit=pre, post_edit=edit_lines(pre, [2]), style=STYLE_LAZY),
            make_triplet(pre_edit=pre, post_edit=edit_lines(pre, [3]), style=STYLE_DESCRIPTIVE),
        ]
        data = tmp_path / "in.jsonl"
        export_dataset(triplets, data, FORMAT_TRIPLETS)
        out = tmp_path / "filtered"
        assert main(["filter", "--config", str(config_file), "--out", str(out),
                     "--input", str(data), "--target", "4"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["rejections_by_reason"] == {"zero_hunks": 1}


class TestStatsCommand:
    def test_report_files(self, tmp_path, config_file):
        data = triplet_file(tmp_path / "in.jsonl", per_style=5)
        out = tmp_path / "report"
        assert main(["stats", "--config", str(config_file), "--out", str(out),
                     "--input", str(data)]) == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == sorted(
            [
                "summary.json",
                "modified_lines.csv",
                "hunks.csv",
                "topics.csv",
                "instr_len_lazy.csv",
                "instr_len_descriptive.csv",
                "verb_object.csv",
            ]
        )

    def test_empty_dataset(self, tmp_path, config_file):
        data = tmp_path / "empty.jsonl"
        data.write_text("", encoding="utf-8")
        out = tmp_path / "report"
        assert main(["stats", "--config", str(config_file), "--out", str(out),
                     "--input", str(data)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["records"] == 0

    def test_rerun_identical(self, tmp_path, config_file):
        data = triplet_file(tmp_path / "in.jsonl", per_style=4)
        for name in ("r1", "r2"):
            assert main(["stats", "--config", str(config_file),
                         "--out", str(tmp_path / name), "--input", str(data)]) == 0
        for p in sorted((tmp_path / "r1").iterdir()):
            assert p.read_bytes() == (tmp_path / "r2" / p.name).read_bytes()

    def test_parse_failure_exits_2(self, tmp_path, config_file):
        data = tmp_path / "broken.jsonl"
        data.write_text('{"not a triplet": true}\n', encoding="utf-8")
        assert main(["stats", "--config", str(config_file), "--out", str(tmp_path / "r"),
                     "--input", str(data)]) == 2


class TestExportCommand:
    def test_finetune_export(self, tmp_path, config_file):
        data = triplet_file(tmp_path / "in.jsonl", per_style=4)
        out = tmp_path / "exported"
        assert main(["export", "--config", str(config_file), "--out", str(out),
                     "--input", str(data)]) == 0
        rows = [json.loads(l) for l in (out / "finetune.jsonl").read_text().splitlines()]
        assert len(rows) == 8
        assert all(r["input_text"].endswith("## Code After:\n") for r in rows)

    def test_flagged_without_skip_exits_2(self, tmp_path, config_file):
        flagged = make_triplet(flags=frozenset({"parse_failed"}))
        data = tmp_path / "in.jsonl"
        export_dataset([make_triplet(), flagged], data, FORMAT_TRIPLETS)
        assert main(["export", "--config", str(config_file), "--out", str(tmp_path / "e"),
                     "--input", str(data)]) == 2

    def test_skip_flagged_drops(self, tmp_path, config_file, capsys):
        flagged = make_triplet(flags=frozenset({"parse_failed"}))
        data = tmp_path / "in.jsonl"
        export_dataset([make_triplet(), flagged], data, FORMAT_TRIPLETS)
        out = tmp_path / "e"
        assert main(["export", "--config", str(config_file), "--out", str(out),
                     "--input", str(data), "--skip-flagged"]) == 0
        rows = (out / "finetune.jsonl").read_text().splitlines()
        assert len(rows) == 1
        assert "dropped 1" in capsys.readouterr().err


class TestRunAll:
    def test_chain(self, tmp_path, config_file):
        out = tmp_path / "all"
        code = main(["run-all", "--config", str(config_file), "--out", str(out),
                     "--pairs", "16", "--backend", "mock", "--target", "12"])
        assert code == 0
        assert (out / "synthesize" / "triplets.jsonl").is_file()
        curated = (out / "filter" / "curated.jsonl").read_text().splitlines()
        assert len(curated) == 12
        assert (out / "report" / "summary.json").is_file()
        exported = (out / "export" / "finetune.jsonl").read_text().splitlines()
        assert len(exported) == 12
