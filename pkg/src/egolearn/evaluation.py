"""Cross-validated evaluation of the circle classifier.

Instances are (ego, alter) pairs; folds are drawn over instances after a
seeded shuffle.  Scores are micro and macro F1 over the multi-hot label
matrix.  Embeddings are trained once on the full graph and shared by all
folds, so the protocol is transductive on the node side.
"""

from dataclasses import dataclass, field

import numpy as np

from .classifier import OUTPUT_MODES, TrainHyper, predict_batch, train
from .embedding import TrainConfig, train_global, train_local
from .errors import TooFewInstances
from .features import FeatureVariant, build_dataset
from .seeding import derive_rng, derive_uint64
from .walks import WalkConfig, generate_ego_corpus, generate_global_corpus

# Per-label F1 when a label never occurs and is never predicted.
UNDEFINED_F1 = 1.0


@dataclass(frozen=True)
class F1Summary:
    micro: float
    macro: float
    per_label: np.ndarray


def _as_multi_hot(y, n_labels):
    """Accept a multi-hot matrix or a sequence of label-index sets."""
    if isinstance(y, np.ndarray) and y.ndim == 2:
        return y.astype(bool)
    rows = list(y)
    if rows and isinstance(rows[0], (set, frozenset, list, tuple)):
        out = np.zeros((len(rows), n_labels), dtype=bool)
        for i, labels in enumerate(rows):
            for j in labels:
                out[i, j] = True
        return out
    return np.asarray(y).astype(bool)


def f1_scores(y_true, y_pred):
    """Micro and macro F1 for multi-hot predictions.

    ``y_pred`` may be a multi-hot matrix or a list of label-index sets.
    A label with no true and no predicted positives contributes
    ``UNDEFINED_F1`` to the macro average.
    """
    yt = np.asarray(y_true).astype(bool)
    if yt.ndim != 2 or yt.shape[1] == 0:
        raise ValueError("y_true must be a (n, labels) matrix")
    yp = _as_multi_hot(y_pred, yt.shape[1])
    if yt.shape != yp.shape:
        raise ValueError("y_true and y_pred must be matching (n, labels) arrays")
    tp = (yt & yp).sum(axis=0).astype(np.float64)
    fp = (~yt & yp).sum(axis=0).astype(np.float64)
    fn = (yt & ~yp).sum(axis=0).astype(np.float64)

    denom = 2.0 * tp + fp + fn
    per_label = np.full(yt.shape[1], UNDEFINED_F1)
    ok = denom > 0
    per_label[ok] = 2.0 * tp[ok] / denom[ok]

    micro_denom = denom.sum()
    micro = 2.0 * tp.sum() / micro_denom if micro_denom > 0 else UNDEFINED_F1
    return F1Summary(micro=float(micro), macro=float(per_label.mean()),
                     per_label=per_label)


@dataclass(frozen=True)
class FoldPlan:
    test_folds: tuple

    @property
    def k(self):
        return len(self.test_folds)

    def splits(self):
        for i, test_idx in enumerate(self.test_folds):
            train_idx = np.concatenate(
                [f for j, f in enumerate(self.test_folds) if j != i]
            )
            yield train_idx, test_idx


def kfold_split(n_instances, k, seed=0):
    if k < 2:
        raise ValueError("need at least 2 folds")
    if n_instances < k:
        raise TooFewInstances(f"{n_instances} instances cannot fill {k} folds")
    perm = derive_rng(seed, "kfold").permutation(n_instances)
    return FoldPlan(tuple(np.array_split(perm, k)))


def holdout_split(n_instances, test_fraction=0.3, seed=0):
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    if n_instances < 2:
        raise TooFewInstances("need at least 2 instances for a holdout split")
    perm = derive_rng(seed, "holdout").permutation(n_instances)
    n_test = min(max(1, int(round(n_instances * test_fraction))), n_instances - 1)
    return perm[n_test:], perm[:n_test]


ALL_VARIANTS = tuple(FeatureVariant)


@dataclass(frozen=True)
class ExperimentConfig:
    variants: tuple = ALL_VARIANTS
    output_modes: tuple = OUTPUT_MODES
    split: str = "kfold"
    folds: int = 10
    holdout_fraction: float = 0.3
    seed: int = 0
    sim_features: int = 500
    match_ones_only: bool = False
    hidden_units: int = 128
    batch_size: int = 32
    clf_epochs: int = 50
    clf_lr: float = 0.001

    def __post_init__(self):
        if not self.variants:
            raise ValueError("need at least one feature variant")
        for mode in self.output_modes:
            if mode not in OUTPUT_MODES:
                raise ValueError(f"unknown output mode {mode!r}")
        if self.split not in ("kfold", "holdout"):
            raise ValueError("split must be 'kfold' or 'holdout'")
        if self.split == "kfold" and self.folds < 2:
            raise ValueError("kfold evaluation needs folds >= 2")


@dataclass(frozen=True)
class ReportRow:
    variant: str
    mode: str
    fold: int
    micro_f1: float
    macro_f1: float
    per_label: np.ndarray
    n_test: int


@dataclass
class Report:
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def _select(self, variant, mode):
        rows = [r for r in self.rows
                if r.variant == variant and r.mode == mode]
        if not rows:
            raise KeyError(f"no rows for ({variant}, {mode})")
        return rows

    def mean_micro(self, variant, mode):
        return float(np.mean([r.micro_f1 for r in self._select(variant, mode)]))

    def std_micro(self, variant, mode):
        return float(np.std([r.micro_f1 for r in self._select(variant, mode)]))

    def mean_macro(self, variant, mode):
        return float(np.mean([r.macro_f1 for r in self._select(variant, mode)]))

    def std_macro(self, variant, mode):
        return float(np.std([r.macro_f1 for r in self._select(variant, mode)]))

    def variants(self):
        seen = []
        for r in self.rows:
            if r.variant not in seen:
                seen.append(r.variant)
        return seen

    def modes(self):
        seen = []
        for r in self.rows:
            if r.mode not in seen:
                seen.append(r.mode)
        return seen

    def format_table(self):
        """Micro-F1 mean and fold std per (variant, output mode)."""
        variants, modes = self.variants(), self.modes()
        name_w = max([len("features")] + [len(v) for v in variants])
        header = "features".ljust(name_w) + "".join(f"  {m:>16}" for m in modes)
        lines = [header, "-" * len(header)]
        for v in variants:
            cells = ""
            for m in modes:
                cell = f"{self.mean_micro(v, m):.4f}+-{self.std_micro(v, m):.4f}"
                cells += f"  {cell:>16}"
            lines.append(v.ljust(name_w) + cells)
        for key in sorted(self.metadata):
            lines.append(f"# {key}: {self.metadata[key]}")
        return "\n".join(lines) + "\n"

    def to_tsv(self):
        """Long-form dump: one (variant, mode, fold, metric) value per line."""
        seed = self.metadata.get("seed", "")
        config = self.metadata.get("config_hash", "")
        lines = ["variant\tmode\tfold\tmetric\tvalue\tseed\tconfig_hash"]

        def emit(r, metric, value):
            lines.append(
                f"{r.variant}\t{r.mode}\t{r.fold}\t{metric}\t"
                f"{value:.10g}\t{seed}\t{config}"
            )

        for r in self.rows:
            emit(r, "micro_f1", r.micro_f1)
            emit(r, "macro_f1", r.macro_f1)
            for j, score in enumerate(r.per_label):
                emit(r, f"f1_label_{j}", float(score))
        return "\n".join(lines) + "\n"


def _clf_seed(seed, variant_tag, mode, fold):
    return int(derive_uint64(seed, "clf", variant_tag, mode, fold) % (2 ** 31))


def make_plan(n_instances, cfg):
    if cfg.split == "kfold":
        return kfold_split(n_instances, cfg.folds, seed=cfg.seed)
    train_idx, test_idx = holdout_split(
        n_instances, cfg.holdout_fraction, seed=cfg.seed
    )
    # single split expressed as a plan over its own test fold
    return _HoldoutPlan(train_idx, test_idx)


class _HoldoutPlan:
    def __init__(self, train_idx, test_idx):
        self._train = train_idx
        self._test = test_idx

    @property
    def k(self):
        return 1

    def splits(self):
        yield self._train, self._test


def cross_validate(X, Y, output_mode, plan, cfg, variant_tag):
    """Train and score the classifier on every split of the plan."""
    rows = []
    for fold, (train_idx, test_idx) in enumerate(plan.splits()):
        hyper = TrainHyper(
            batch_size=cfg.batch_size, epochs=cfg.clf_epochs,
            hidden_units=cfg.hidden_units, lr=cfg.clf_lr,
            seed=_clf_seed(cfg.seed, variant_tag, output_mode, fold),
        )
        model, _ = train(X[train_idx], Y[train_idx], output_mode, hyper)
        pred = predict_batch(model, X[test_idx])
        score = f1_scores(Y[test_idx], pred)
        rows.append(ReportRow(
            variant=variant_tag, mode=output_mode, fold=fold,
            micro_f1=score.micro, macro_f1=score.macro,
            per_label=score.per_label, n_test=len(test_idx),
        ))
    return rows


def evaluate_variants(ds, glo_table, loc_table, cfg):
    """Cross-validate every requested variant and output mode.

    One fold plan is shared by all variants and modes, so scores differ
    only through the features and the head, never the split.
    """
    report = Report(metadata={
        "split": cfg.split,
        "folds": cfg.folds if cfg.split == "kfold" else 1,
        "seed": cfg.seed,
        "undefined_label_f1": UNDEFINED_F1,
    })
    plan = None
    for variant in cfg.variants:
        X, Y, pairs = build_dataset(
            ds, variant, glo_table,
            loc_table=loc_table if variant.uses_loc else None,
            sim_features=cfg.sim_features,
            match_ones_only=cfg.match_ones_only,
        )
        if plan is None:
            plan = make_plan(len(pairs), cfg)
            report.metadata["n_instances"] = len(pairs)
        for mode in cfg.output_modes:
            report.rows.extend(
                cross_validate(X, Y, mode, plan, cfg, variant.value)
            )
    return report


def run_experiment(ds, cfg, glo_table=None, loc_table=None, walk_cfg=None,
                   embed_cfg=None):
    """Full protocol: walks, embeddings (unless given), then evaluation."""
    needs_loc = any(v.uses_loc for v in cfg.variants)
    if glo_table is None or (needs_loc and loc_table is None):
        if walk_cfg is None:
            walk_cfg = WalkConfig(seed=cfg.seed)
        if embed_cfg is None:
            embed_cfg = TrainConfig(seed=cfg.seed)
        if glo_table is None:
            corpus = generate_global_corpus(ds.combined, walk_cfg)
            glo_table = train_global(corpus, embed_cfg)
        if needs_loc and loc_table is None:
            tagged = generate_ego_corpus(ds, walk_cfg)
            loc_table = train_local(tagged, embed_cfg)
    return evaluate_variants(ds, glo_table, loc_table, cfg)


def shuffled_instance_order(n_instances, seed=0):
    """Seeded instance permutation, exposed for auditing fold contents."""
    return derive_rng(seed, "kfold").permutation(n_instances)
