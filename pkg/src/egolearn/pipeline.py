"""Stage-oriented pipeline with on-disk artifacts and manifests.

Stages: walks -> glo -> loc -> features -> train / eval.  Every stage
reads only files written by earlier stages, so any prefix of the chain
can be rerun or shipped to another machine.  Each stage writes a
``manifest_<stage>.json`` recording the config hash and sha256 of every
input and output; reruns with the same config are byte-identical.
"""

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from .classifier import TrainHyper, save_model, train
from .embedding import TrainConfig, load_embeddings, save_embeddings, train_global, train_local
from .errors import CorruptFile, ParseError, StageDependencyError
from .evaluation import ExperimentConfig, Report, cross_validate, make_plan
from .features import FeatureVariant, build_dataset
from .graph import DATASET_KINDS, load_ego_dataset
from .seeding import derive_uint64
from .walks import (
    WalkConfig,
    generate_ego_corpus,
    generate_global_corpus,
    load_corpus,
    load_tagged_corpus,
    save_corpus,
    save_tagged_corpus,
)

STAGES = ("walks", "glo", "loc", "features", "train", "eval")

_ALL_TAGS = tuple(v.value for v in FeatureVariant)


@dataclass(frozen=True)
class PipelineConfig:
    data_dir: str = "data/facebook"
    kind: str = "facebook"
    out_dir: str = "out"
    seed: int = 0
    deterministic: bool = True
    workers: int = 1
    walks_per_node: int = 10
    walk_length: int = 40
    ego_walk_cap: int | None = None  # None: n-1 capped at 10x ego size
    dim: int = 300
    context: int = 2
    negatives: int = 5
    embed_epochs: int = 5
    embed_lr: float = 0.025
    noise_power: float = 0.75
    sim_features: int = 500
    match_ones_only: bool = False
    variants: tuple = _ALL_TAGS
    output_modes: tuple = ("softmax", "sigmoid")
    hidden_units: int = 128
    batch_size: int | None = None  # None: 32 for facebook, 64 otherwise
    clf_epochs: int = 50
    clf_lr: float = 0.001
    folds: int = 10
    split: str = "kfold"
    holdout_fraction: float = 0.3

    def __post_init__(self):
        if self.kind not in DATASET_KINDS:
            raise ValueError(f"kind must be one of {DATASET_KINDS}")
        for tag in self.variants:
            FeatureVariant.from_tag(tag)
        if not self.variants:
            raise ValueError("need at least one feature variant")
        if self.split not in ("kfold", "holdout"):
            raise ValueError("split must be 'kfold' or 'holdout'")

    def resolved_workers(self):
        return 1 if self.deterministic else self.workers

    def resolved_batch_size(self):
        if self.batch_size is not None:
            return self.batch_size
        return 32 if self.kind == "facebook" else 64


# ---------------------------------------------------------------------------
# key = value config files


def _format_value(value):
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def config_text(cfg):
    """Canonical text form; parsing it back gives an equal config."""
    lines = []
    for f in dataclasses.fields(PipelineConfig):
        lines.append(f"{f.name} = {_format_value(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"


# Location fields do not affect results, so they stay out of the hash:
# the same computation at a different path keeps its identity.
_LOCATION_FIELDS = ("data_dir", "out_dir")


def config_hash(cfg):
    lines = [
        f"{f.name} = {_format_value(getattr(cfg, f.name))}"
        for f in dataclasses.fields(PipelineConfig)
        if f.name not in _LOCATION_FIELDS
    ]
    text = "\n".join(lines) + "\n"
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _parse_bool(raw):
    low = raw.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_optional_int(raw):
    return None if raw.lower() == "auto" else int(raw)


def _parse_tuple(raw):
    return tuple(part.strip() for part in raw.split(",") if part.strip())


_PARSERS = {
    str: lambda raw: raw,
    int: int,
    float: float,
    bool: _parse_bool,
    tuple: _parse_tuple,
    int | None: _parse_optional_int,
}


def parse_config(text, path="<config>"):
    """Parse ``key = value`` lines; '#' starts a comment; keys may repeat."""
    values = {}
    fields = {f.name: f for f in dataclasses.fields(PipelineConfig)}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(path, lineno, "expected 'key = value'")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if key not in fields:
            raise ParseError(path, lineno, f"unknown key {key!r}")
        ftype = fields[key].type
        parser = _PARSERS.get(ftype)
        if parser is None:
            parser = _PARSERS[str]
        try:
            values[key] = parser(raw_value)
        except ValueError as exc:
            raise ParseError(path, lineno, f"bad value for {key}: {exc}") from None
    try:
        return PipelineConfig(**values)
    except ValueError as exc:
        raise ParseError(path, 0, str(exc)) from None


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), path=str(path))


def save_config(cfg, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config_text(cfg))


# ---------------------------------------------------------------------------
# artifacts


def _features_file(tag):
    return f"features_{tag}.X.txt"


def _model_file(tag, mode):
    return f"clf_{tag}_{mode}.model"


def save_matrix(arr, path, integer=False):
    arr = np.atleast_2d(np.asarray(arr))
    fmt = "%d" if integer else "%.17g"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{arr.shape[0]} {arr.shape[1]}\n")
        for row in arr:
            fh.write(" ".join(fmt % x for x in row))
            fh.write("\n")


def load_matrix(path, dtype=np.float64):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise CorruptFile(path, "header must be '<rows> <cols>'")
        try:
            rows, cols = int(header[0]), int(header[1])
        except ValueError:
            raise CorruptFile(path, "non-integer header") from None
        out = np.empty((rows, cols), dtype=dtype)
        seen = 0
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if seen >= rows:
                raise CorruptFile(path, f"more than {rows} data rows")
            parts = line.split()
            if len(parts) != cols:
                raise CorruptFile(path, f"row {seen} has {len(parts)} values")
            try:
                out[seen] = [float(p) for p in parts]
            except ValueError:
                raise CorruptFile(path, f"row {seen} has non-numeric values") from None
            seen += 1
    if seen != rows:
        raise CorruptFile(path, f"header promised {rows} rows, found {seen}")
    return out


def save_pairs(pairs, path):
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in pairs:
            fh.write(f"{u} {v}\n")


def load_pairs(path):
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(path, lineno, "expected 'ego alter'")
            pairs.append((int(parts[0]), int(parts[1])))
    return pairs


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(cfg, stage, inputs, outputs, settings):
    out_dir = cfg.out_dir
    manifest = {
        "stage": stage,
        "config_hash": config_hash(cfg),
        "inputs": {name: _sha256(os.path.join(out_dir, name)) for name in inputs},
        "outputs": {name: _sha256(os.path.join(out_dir, name)) for name in outputs},
        "settings": settings,
    }
    path = os.path.join(out_dir, f"manifest_{stage}.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _require(cfg, filename, missing_stage, wanted_by):
    path = os.path.join(cfg.out_dir, filename)
    if not os.path.exists(path):
        raise StageDependencyError(missing_stage, wanted_by,
                                   detail=f"missing {filename}")
    return path


# ---------------------------------------------------------------------------
# stages


def walk_config(cfg):
    return WalkConfig(
        walks_per_node=cfg.walks_per_node,
        walk_length=cfg.walk_length,
        ego_walk_length_cap=cfg.ego_walk_cap,
        seed=cfg.seed,
    )


def embed_config(cfg):
    return TrainConfig(
        dim=cfg.dim, context=cfg.context, negatives=cfg.negatives,
        epochs=cfg.embed_epochs, initial_lr=cfg.embed_lr,
        noise_power=cfg.noise_power, seed=cfg.seed,
        workers=cfg.resolved_workers(),
    )


def experiment_config(cfg):
    return ExperimentConfig(
        variants=tuple(FeatureVariant.from_tag(t) for t in cfg.variants),
        output_modes=cfg.output_modes, split=cfg.split, folds=cfg.folds,
        holdout_fraction=cfg.holdout_fraction, seed=cfg.seed,
        sim_features=cfg.sim_features, match_ones_only=cfg.match_ones_only,
        hidden_units=cfg.hidden_units, batch_size=cfg.resolved_batch_size(),
        clf_epochs=cfg.clf_epochs, clf_lr=cfg.clf_lr,
    )


def stage_walks(cfg):
    os.makedirs(cfg.out_dir, exist_ok=True)
    ds = load_ego_dataset(cfg.data_dir, cfg.kind)
    wcfg = walk_config(cfg)
    corpus = generate_global_corpus(ds.combined, wcfg)
    save_corpus(corpus, os.path.join(cfg.out_dir, "global_corpus.txt"))
    tagged = generate_ego_corpus(ds, wcfg)
    save_tagged_corpus(tagged, os.path.join(cfg.out_dir, "ego_corpus.txt"))
    return _write_manifest(
        cfg, "walks", [], ["global_corpus.txt", "ego_corpus.txt"],
        {"walks_per_node": cfg.walks_per_node, "walk_length": cfg.walk_length,
         "ego_walk_cap": cfg.ego_walk_cap, "seed": cfg.seed,
         "n_global_walks": len(corpus), "n_ego_walks": len(tagged)},
    )


def stage_glo(cfg):
    path = _require(cfg, "global_corpus.txt", "walks", "glo")
    corpus = load_corpus(path)
    table = train_global(corpus, embed_config(cfg))
    save_embeddings(table, os.path.join(cfg.out_dir, "glo.emb"))
    return _write_manifest(
        cfg, "glo", ["global_corpus.txt"], ["glo.emb"],
        {"dim": cfg.dim, "context": cfg.context, "negatives": cfg.negatives,
         "epochs": cfg.embed_epochs, "workers": cfg.resolved_workers(),
         "vectors": len(table)},
    )


def stage_loc(cfg):
    path = _require(cfg, "ego_corpus.txt", "walks", "loc")
    tagged = load_tagged_corpus(path)
    table = train_local(tagged, embed_config(cfg))
    save_embeddings(table, os.path.join(cfg.out_dir, "loc.emb"))
    return _write_manifest(
        cfg, "loc", ["ego_corpus.txt"], ["loc.emb"],
        {"dim": cfg.dim, "context": cfg.context, "negatives": cfg.negatives,
         "epochs": cfg.embed_epochs, "workers": cfg.resolved_workers(),
         "vectors": len(table)},
    )


def stage_features(cfg):
    glo_path = _require(cfg, "glo.emb", "glo", "features")
    needs_loc = any(FeatureVariant.from_tag(t).uses_loc for t in cfg.variants)
    glo_table = load_embeddings(glo_path)
    loc_table = None
    inputs = ["glo.emb"]
    if needs_loc:
        loc_table = load_embeddings(_require(cfg, "loc.emb", "loc", "features"))
        inputs.append("loc.emb")
    ds = load_ego_dataset(cfg.data_dir, cfg.kind)

    outputs = []
    shared = None
    for tag in cfg.variants:
        variant = FeatureVariant.from_tag(tag)
        X, Y, pairs = build_dataset(
            ds, variant, glo_table,
            loc_table=loc_table if variant.uses_loc else None,
            sim_features=cfg.sim_features,
            match_ones_only=cfg.match_ones_only,
        )
        save_matrix(X, os.path.join(cfg.out_dir, _features_file(tag)))
        outputs.append(_features_file(tag))
        if shared is None:
            shared = (Y, pairs)
            save_matrix(Y, os.path.join(cfg.out_dir, "labels.Y.txt"), integer=True)
            save_pairs(pairs, os.path.join(cfg.out_dir, "pairs.txt"))
            outputs.extend(["labels.Y.txt", "pairs.txt"])
    return _write_manifest(
        cfg, "features", inputs, outputs,
        {"variants": list(cfg.variants), "sim_features": cfg.sim_features,
         "match_ones_only": cfg.match_ones_only,
         "n_instances": len(shared[1]), "n_labels": int(shared[0].shape[1])},
    )


def _final_clf_seed(cfg, tag, mode):
    return int(derive_uint64(cfg.seed, "clf-final", tag, mode) % (2 ** 31))


def stage_train(cfg):
    y_path = _require(cfg, "labels.Y.txt", "features", "train")
    Y = load_matrix(y_path, dtype=np.int8)
    inputs = ["labels.Y.txt"]
    outputs = []
    for tag in cfg.variants:
        x_path = _require(cfg, _features_file(tag), "features", "train")
        inputs.append(_features_file(tag))
        X = load_matrix(x_path)
        for mode in cfg.output_modes:
            hyper = TrainHyper(
                batch_size=cfg.resolved_batch_size(), epochs=cfg.clf_epochs,
                hidden_units=cfg.hidden_units, lr=cfg.clf_lr,
                seed=_final_clf_seed(cfg, tag, mode),
            )
            model, _ = train(X, Y, mode, hyper)
            name = _model_file(tag, mode)
            save_model(model, os.path.join(cfg.out_dir, name))
            outputs.append(name)
    return _write_manifest(
        cfg, "train", inputs, outputs,
        {"batch_size": cfg.resolved_batch_size(), "epochs": cfg.clf_epochs,
         "hidden_units": cfg.hidden_units, "lr": cfg.clf_lr,
         "output_modes": list(cfg.output_modes)},
    )


def stage_eval(cfg):
    y_path = _require(cfg, "labels.Y.txt", "features", "eval")
    # Cross-validation retrains per fold, but the stage contract still
    # places eval after train: refuse to score a run that was never trained.
    for tag in cfg.variants:
        for mode in cfg.output_modes:
            _require(cfg, _model_file(tag, mode), "train", "eval")
    Y = load_matrix(y_path, dtype=np.int8)
    exp = experiment_config(cfg)
    plan = make_plan(Y.shape[0], exp)
    report = Report(metadata={
        "split": exp.split,
        "folds": plan.k,
        "seed": exp.seed,
        "config_hash": config_hash(cfg),
        "n_instances": int(Y.shape[0]),
        "undefined_label_f1": 1.0,
    })
    inputs = ["labels.Y.txt"]
    for tag in cfg.variants:
        x_path = _require(cfg, _features_file(tag), "features", "eval")
        inputs.append(_features_file(tag))
        X = load_matrix(x_path)
        for mode in cfg.output_modes:
            report.rows.extend(cross_validate(X, Y, mode, plan, exp, tag))
    with open(os.path.join(cfg.out_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.format_table())
    with open(os.path.join(cfg.out_dir, "report.tsv"), "w", encoding="utf-8") as fh:
        fh.write(report.to_tsv())
    _write_manifest(
        cfg, "eval", inputs, ["report.txt", "report.tsv"],
        {"split": exp.split, "folds": plan.k,
         "output_modes": list(cfg.output_modes)},
    )
    return report


_STAGE_FN = {
    "walks": stage_walks,
    "glo": stage_glo,
    "loc": stage_loc,
    "features": stage_features,
    "train": stage_train,
    "eval": stage_eval,
}


def run_pipeline(cfg, stage="all"):
    """Run one stage, or every stage in dependency order for 'all'."""
    if stage == "all":
        results = {}
        for name in STAGES:
            results[name] = _STAGE_FN[name](cfg)
        return results
    if stage not in _STAGE_FN:
        raise ValueError(f"unknown stage {stage!r}; one of {STAGES + ('all',)}")
    return {stage: _STAGE_FN[stage](cfg)}
