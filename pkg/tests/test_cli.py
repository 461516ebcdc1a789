import os

import pytest

from egolearn.cli import main
from egolearn.pipeline import load_config, save_config, PipelineConfig


def _base_args(snap_path, out, extra=()):
    return list(extra) + ["--data", str(snap_path), "--out", str(out)]


def _write_cfg(snap_path, out, path, **kw):
    base = dict(
        data_dir=str(snap_path), out_dir=str(out), kind="facebook",
        seed=3, walks_per_node=2, walk_length=8, dim=6, embed_epochs=1,
        sim_features=24, hidden_units=8, clf_epochs=3, folds=2,
        variants=("gloglo", "locglosim"),
    )
    base.update(kw)
    save_config(PipelineConfig(**base), path)
    return path


def test_stats_command(snap_dir, capsys):
    directory, info = snap_dir
    assert main(["stats", "--data", str(directory)]) == 0
    out = capsys.readouterr().out.splitlines()
    got = dict(line.split() for line in out)
    assert set(got) == {"nodes", "edges", "egos", "circles", "features"}
    assert int(got["egos"]) == len(info["egos"])
    assert int(got["features"]) == info["n_features"]


def test_stats_missing_directory_exits_one(tmp_path, capsys):
    assert main(["stats", "--data", str(tmp_path / "nope")]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error:")


def test_init_config_is_parseable(tmp_path, capsys):
    target = tmp_path / "my.cfg"
    assert main(["init-config", "--out", str(target)]) == 0
    assert load_config(target) == PipelineConfig()
    assert "wrote" in capsys.readouterr().out


def test_pipeline_single_stage(snap_dir, tmp_path, capsys):
    directory, _ = snap_dir
    out = tmp_path / "run"
    cfg_path = _write_cfg(directory, out, tmp_path / "c.cfg")
    code = main(["pipeline", "--config", str(cfg_path), "--stage", "walks"])
    assert code == 0
    assert os.path.exists(out / "global_corpus.txt")
    assert os.path.exists(out / "ego_corpus.txt")
    assert "stage walks: done" in capsys.readouterr().out


def test_stage_aliases_match_pipeline(snap_dir, tmp_path):
    directory, _ = snap_dir
    out = tmp_path / "run"
    cfg_path = _write_cfg(directory, out, tmp_path / "c.cfg")
    assert main(["walks", "--config", str(cfg_path)]) == 0
    assert main(["train-global", "--config", str(cfg_path)]) == 0
    assert os.path.exists(out / "glo.emb")
    assert main(["train-local", "--config", str(cfg_path)]) == 0
    assert os.path.exists(out / "loc.emb")
    assert main(["features", "--config", str(cfg_path)]) == 0
    assert os.path.exists(out / "features_gloglo.X.txt")


def test_evaluate_prints_table(snap_dir, tmp_path, capsys):
    directory, _ = snap_dir
    out = tmp_path / "run"
    cfg_path = _write_cfg(directory, out, tmp_path / "c.cfg")
    for cmd in ("walks", "train-global", "train-local", "features",
                "train-clf"):
        assert main([cmd, "--config", str(cfg_path)]) == 0
    capsys.readouterr()
    assert main(["evaluate", "--config", str(cfg_path)]) == 0
    table = capsys.readouterr().out
    header = table.splitlines()[0].split()
    assert header == ["features", "softmax", "sigmoid"]
    assert "gloglo" in table and "locglosim" in table
    assert os.path.exists(out / "report.txt")


def test_evaluate_without_training_fails(snap_dir, tmp_path, capsys):
    directory, _ = snap_dir
    out = tmp_path / "run"
    cfg_path = _write_cfg(directory, out, tmp_path / "c.cfg")
    for cmd in ("walks", "train-global", "train-local", "features"):
        assert main([cmd, "--config", str(cfg_path)]) == 0
    assert main(["evaluate", "--config", str(cfg_path)]) == 1
    assert "train" in capsys.readouterr().err


def test_cli_overrides(snap_dir, tmp_path):
    directory, _ = snap_dir
    out = tmp_path / "run"
    cfg_path = _write_cfg(directory, tmp_path / "ignored", tmp_path / "c.cfg")
    code = main([
        "walks", "--config", str(cfg_path), "--out", str(out), "--seed", "99",
    ])
    assert code == 0
    assert os.path.exists(out / "global_corpus.txt")
    assert not os.path.exists(tmp_path / "ignored")


def test_workers_flag_disables_determinism(snap_dir, tmp_path, capsys):
    directory, _ = snap_dir
    cfg_path = _write_cfg(directory, tmp_path / "a", tmp_path / "c.cfg")
    cfg = load_config(cfg_path)
    assert cfg.deterministic

    from egolearn.cli import build_parser, _resolve_config

    args = build_parser().parse_args(["walks", "--config", str(cfg_path),
                                      "--workers", "4"])
    resolved = _resolve_config(args)
    assert resolved.workers == 4
    assert resolved.deterministic is False

    args = build_parser().parse_args(["walks", "--config", str(cfg_path),
                                      "--workers", "4", "--deterministic"])
    resolved = _resolve_config(args)
    assert resolved.deterministic is True


def test_module_entry_point(snap_dir, tmp_path):
    import subprocess
    import sys

    directory, _ = snap_dir
    proc = subprocess.run(
        [sys.executable, "-m", "egolearn", "stats", "--data", str(directory)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("nodes ")
