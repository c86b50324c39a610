import json
from pathlib import Path

import numpy as np
import pytest

from faultlab.cli import load_config_file, main
from faultlab.corpus import (
    generate_corpus,
    load_corpus,
    load_version,
    write_corpus,
)
from faultlab.diffusion import TrainConfig
from faultlab.errors import FaultlabError, TemplateError
from faultlab.minilang import execute
from faultlab.pipeline import RunConfig, emit_report, run_pipeline


def _hash_tree(root: Path) -> dict:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*")) if p.is_file()
    }


def test_corpus_counts_and_layout(tmp_path):
    versions = generate_corpus(8, seed=3)
    out = write_corpus(versions, tmp_path / "corpus")
    manifest = json.loads((out / "manifest.json").read_text())
    assert len(manifest["versions"]) == 8
    assert manifest["versions"][0] == "v000_illustrative"
    for vid in manifest["versions"]:
        vdir = out / vid
        for name in ("program.txt", "faulty.txt", "mutation.json",
                     "tests.json", "meta.json"):
            assert (vdir / name).exists()


def test_corpus_bytes_deterministic(tmp_path):
    a = write_corpus(generate_corpus(6, seed=11), tmp_path / "a")
    b = write_corpus(generate_corpus(6, seed=11), tmp_path / "b")
    assert _hash_tree(a) == _hash_tree(b)
    c = write_corpus(generate_corpus(6, seed=12), tmp_path / "c")
    assert _hash_tree(a) != _hash_tree(c)


def test_corpus_roundtrip_and_imbalance(tmp_path):
    out = write_corpus(generate_corpus(6, seed=5), tmp_path / "corpus")
    for version in load_corpus(out):
        records = [execute(version.faulty, t.inputs, t.oracle, f"t{i}")
                   for i, t in enumerate(version.suite)]
        n_fail = sum(r.failing for r in records)
        assert 0 < n_fail < len(records) - n_fail
        assert version.faulty_statements == {version.mutation.target}
        # the mutated statement differs between correct and faulty source
        assert version.program.source != version.faulty.source


def test_unsatisfiable_template_raises():
    from faultlab.corpus import TemplateInstance, build_suite
    from faultlab.minilang import Mutation

    # the mutation never changes behavior, so no failing test exists
    inst = TemplateInstance(
        name="hopeless",
        source="a = x * 0\noutput(a)\n",
        mutation=Mutation(target=1, kind="constant-replacement", payload="0"),
        sample_inputs=lambda r: {"x": int(r.integers(0, 5))},
    )
    with pytest.raises(TemplateError):
        build_suite(inst, np.random.default_rng(0), n_fail=1, n_pass=2)


def test_pipeline_reports_are_reproducible(tmp_path):
    versions = generate_corpus(3, seed=9)
    cfg = RunConfig(scenarios=("origin", "resample"), methods=("gp02", "dstar"),
                    seed=9, train=TrainConfig(epochs=50, seed=9))
    r1 = run_pipeline(cfg, versions=versions)
    r2 = run_pipeline(cfg, versions=versions)
    emit_report(r1, tmp_path / "r1")
    emit_report(r2, tmp_path / "r2")
    assert _hash_tree(tmp_path / "r1") == _hash_tree(tmp_path / "r2")


def test_pipeline_isolates_version_failures(tmp_path):
    versions = generate_corpus(3, seed=9)
    # break one version: make every test pass so slicing cannot start
    broken = versions[1]
    broken.faulty = broken.program
    cfg = RunConfig(scenarios=("origin", "pcd"), methods=("gp02",), seed=9,
                    train=TrainConfig(epochs=30, seed=9))
    report = run_pipeline(cfg, versions=versions)
    assert len(report.errors) == 1
    assert report.errors[0]["version"] == broken.version_id
    done = {row["version"] for row in report.per_version}
    assert done == {versions[0].version_id, versions[2].version_id}


def test_cli_corpus_run_report_roundtrip(tmp_path, capsys):
    corpus_dir = tmp_path / "corpus"
    run_dir = tmp_path / "run"
    assert main(["corpus", "gen", "--out", str(corpus_dir),
                 "--count", "3", "--seed", "4"]) == 0
    code = main([
        "run", "--corpus", str(corpus_dir), "--out", str(run_dir),
        "--scenarios", "origin,undersample", "--methods", "gp02",
        "--seed", "4", "--epochs", "40",
    ])
    assert code == 0
    payload = json.loads((run_dir / "report.json").read_text())
    assert set(payload["results"]) == {"origin", "undersample"}
    assert payload["config"]["op"] == "adamw"
    # re-emit from the stored json
    out2 = tmp_path / "again"
    assert main(["report", "--input", str(run_dir / "report.json"),
                 "--out", str(out2), "--formats", "txt,csv"]) == 0
    assert (out2 / "report.txt").read_text() == (run_dir / "report.txt").read_text()


def test_cli_nonzero_exit_on_version_error(tmp_path):
    corpus_dir = tmp_path / "corpus"
    main(["corpus", "gen", "--out", str(corpus_dir), "--count", "2", "--seed", "4"])
    # sabotage one version: oracle that always matches (no failing tests)
    vdir = corpus_dir / "v001_masked_scale"
    program_src = (vdir / "program.txt").read_text()
    (vdir / "faulty.txt").write_text(program_src)
    code = main(["run", "--corpus", str(corpus_dir), "--out", str(tmp_path / "r"),
                 "--scenarios", "origin,pcd", "--methods", "gp02",
                 "--seed", "4", "--epochs", "30"])
    assert code == 1


def test_config_file_parsing(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text(
        "steps = 500\n"
        "lr = 0.001\n"
        "op = adamw\n"
        "beta1 = 0.0002\n"
        "betaT = 0.03\n"
        "alpha = 0.5\n"
        "gamma = 1.5\n"
        "# a comment\n"
        "scenarios = origin\n"
        "seed = 13\n"
    )
    values = load_config_file(cfg_file)
    assert values["steps"] == 500
    assert values["lr"] == 0.001
    assert values["alpha"] == 0.5
    assert values["scenarios"] == "origin"
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense = 1\n")
    with pytest.raises(FaultlabError):
        load_config_file(bad)


def test_cli_flags_override_config(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    corpus_dir = tmp_path / "corpus"
    main(["corpus", "gen", "--out", str(corpus_dir), "--count", "2", "--seed", "6"])
    cfg_file.write_text(f"corpus = {corpus_dir}\nscenarios = origin\nseed = 6\n")
    out = tmp_path / "out"
    code = main(["run", "--config", str(cfg_file), "--out", str(out),
                 "--methods", "ochiai", "--epochs", "30"])
    assert code == 0
    payload = json.loads((out / "report.json").read_text())
    assert list(payload["results"]["origin"].keys()) == ["ochiai"]
    assert payload["config"]["seed"] == 6


def test_version_dir_loads_back(tmp_path):
    out = write_corpus(generate_corpus(2, seed=2), tmp_path / "c")
    v = load_version(out / "v000_illustrative")
    assert v.program.size == 16
    assert v.mutation.target == 3
    assert len(v.suite) == 6
