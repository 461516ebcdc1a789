"""Node and ego embeddings trained from walk corpora.

Two trainers live here: skip-gram with negative sampling over the global
walk corpus (one vector per node), and a distributed-memory predictor over
tagged ego-walks where the ego vector is concatenated with a fixed window
of alter vectors (one vector per ego).  Both expose exact, numerically
checkable loss kernels; the hot loops run through compiled kernels that
apply the very same math.
"""

import math
import threading
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import CorruptFile, EmptyCorpus, NonFiniteInput
from .seeding import derive_rng, derive_uint64
from .walks import TaggedWalk

KIND_NODE_INPUT = "node-input"
KIND_NODE_OUTPUT = "node-output"
KIND_EGO = "ego"
KIND_PVDM_OUTPUT = "pvdm-output"

_EGO_TOKEN_PREFIX = "ego:"


# ---------------------------------------------------------------------------
# Vocabulary and noise distribution


class Vocabulary:
    """Bijection between corpus tokens and contiguous indices, with counts."""

    def __init__(self, tokens, counts):
        self._tokens = tuple(tokens)
        self._counts = np.asarray(counts, dtype=np.int64)
        self._index = {tok: i for i, tok in enumerate(self._tokens)}
        if len(self._index) != len(self._tokens):
            raise ValueError("duplicate tokens in vocabulary")
        if np.any(self._counts <= 0):
            raise ValueError("vocabulary counts must be positive")

    def __len__(self):
        return len(self._tokens)

    def __contains__(self, token):
        return token in self._index

    @property
    def tokens(self):
        return self._tokens

    @property
    def counts(self):
        return self._counts

    def index(self, token):
        return self._index[token]

    def token(self, idx):
        return self._tokens[idx]


def _walk_tokens(walk):
    return walk.nodes if isinstance(walk, TaggedWalk) else walk


def build_vocabulary(corpus):
    """Index every distinct token of a walk corpus; no pruning.

    Tokens are sorted, so the index does not depend on walk order.
    """
    counts = {}
    for walk in corpus:
        for token in _walk_tokens(walk):
            counts[token] = counts.get(token, 0) + 1
    if not counts:
        raise EmptyCorpus("corpus has no tokens")
    tokens = sorted(counts)
    return Vocabulary(tokens, [counts[t] for t in tokens])


class NoiseSampler:
    """Draws token indices with probability proportional to count^power."""

    def __init__(self, probabilities):
        p = np.asarray(probabilities, dtype=np.float64)
        if np.any(p <= 0):
            raise ValueError("every token needs positive noise probability")
        self.probabilities = p / p.sum()
        self.cumulative = np.cumsum(self.probabilities)
        self.cumulative[-1] = 1.0

    def sample(self, rng, size=None):
        u = rng.random(size)
        return np.searchsorted(self.cumulative, u, side="right")


def noise_distribution(vocab, power):
    if power < 0:
        raise ValueError("noise power must be >= 0")
    weights = np.power(vocab.counts.astype(np.float64), power)
    return NoiseSampler(weights)


# ---------------------------------------------------------------------------
# Loss kernels (reference implementations with exact gradients)


def _sigmoid_scalar(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _softplus_scalar(x):
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _softplus(x):
    return np.logaddexp(0.0, x)


def _check_finite(*arrays):
    for a in arrays:
        if a.size and not np.all(np.isfinite(a)):
            raise NonFiniteInput("loss kernel received non-finite input")


@dataclass
class SkipGramGrads:
    center: np.ndarray
    context: np.ndarray
    negatives: np.ndarray


def skipgram_pair_loss(center_vec, context_out_vec, negative_out_vecs):
    """Negative-sampling logistic loss for one (center, context) pair.

    loss = -log sigma(ctx . cen) - sum_j log sigma(-neg_j . cen), with the
    exact analytic gradient for every input vector.
    """
    cen = np.asarray(center_vec, dtype=np.float64)
    ctx = np.asarray(context_out_vec, dtype=np.float64)
    negs = np.asarray(negative_out_vecs, dtype=np.float64)
    if negs.ndim == 1:
        negs = negs.reshape(0, cen.shape[0]) if negs.size == 0 else negs.reshape(1, -1)
    if ctx.shape != cen.shape or (negs.size and negs.shape[1] != cen.shape[0]):
        raise ValueError("all vectors must share the embedding dimension")
    _check_finite(cen, ctx, negs)

    s_pos = float(cen @ ctx)
    s_neg = negs @ cen
    loss = _softplus_scalar(-s_pos) + float(_softplus(s_neg).sum())

    pos_coef = _sigmoid_scalar(s_pos) - 1.0
    neg_coef = _sigmoid(s_neg)
    g_center = pos_coef * ctx + negs.T @ neg_coef
    g_context = pos_coef * cen
    g_negatives = neg_coef[:, None] * cen[None, :]
    return loss, SkipGramGrads(center=g_center, context=g_context, negatives=g_negatives)


@dataclass
class PvdmStepGrads:
    ego: np.ndarray
    contexts: np.ndarray
    target: np.ndarray
    negatives: np.ndarray


def pvdm_step_loss(ego_vec, context_vecs, padding_mask, target_out_vec,
                   negative_out_vecs):
    """One distributed-memory prediction step with concatenation.

    The predictor h is [ego | context slots]; slots flagged by
    ``padding_mask`` are zeroed and receive zero gradient.  Output vectors
    live in the concatenated space of width (slots + 1) * d.
    """
    ego = np.asarray(ego_vec, dtype=np.float64)
    ctx = np.asarray(context_vecs, dtype=np.float64)
    mask = np.asarray(padding_mask, dtype=bool)
    tgt = np.asarray(target_out_vec, dtype=np.float64)
    negs = np.asarray(negative_out_vecs, dtype=np.float64)
    d = ego.shape[0]
    n_slots = ctx.shape[0]
    width = (n_slots + 1) * d
    if ctx.ndim != 2 or ctx.shape[1] != d:
        raise ValueError("context_vecs must be (slots, d)")
    if mask.shape != (n_slots,):
        raise ValueError("padding_mask must have one flag per context slot")
    if negs.ndim == 1:
        negs = negs.reshape(0, width) if negs.size == 0 else negs.reshape(1, -1)
    if tgt.shape != (width,) or (negs.size and negs.shape[1] != width):
        raise ValueError(f"output vectors must have width {width}")
    _check_finite(ego, ctx, tgt, negs)

    active = ctx * ~mask[:, None]
    h = np.concatenate([ego, active.ravel()])

    s_pos = float(tgt @ h)
    s_neg = negs @ h
    loss = _softplus_scalar(-s_pos) + float(_softplus(s_neg).sum())

    pos_coef = _sigmoid_scalar(s_pos) - 1.0
    neg_coef = _sigmoid(s_neg)
    g_h = pos_coef * tgt + negs.T @ neg_coef
    g_ego = g_h[:d]
    g_contexts = g_h[d:].reshape(n_slots, d) * ~mask[:, None]
    g_target = pos_coef * h
    g_negatives = neg_coef[:, None] * h[None, :]
    return loss, PvdmStepGrads(
        ego=g_ego, contexts=g_contexts, target=g_target, negatives=g_negatives
    )


# ---------------------------------------------------------------------------
# Embedding tables and their on-disk format


class EmbeddingTable:
    """token -> dense vector, with a kind marking its role."""

    def __init__(self, tokens, vectors, kind):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise ValueError("vectors must be a 2-D array")
        if len(tokens) != vectors.shape[0]:
            raise ValueError("one token per vector row required")
        if vectors.size and not np.all(np.isfinite(vectors)):
            raise ValueError("embedding vectors must be finite")
        self._tokens = tuple(tokens)
        self._index = {tok: i for i, tok in enumerate(self._tokens)}
        if len(self._index) != len(self._tokens):
            raise ValueError("duplicate tokens in embedding table")
        self.vectors = vectors
        self.kind = kind

    @property
    def dim(self):
        return self.vectors.shape[1]

    @property
    def tokens(self):
        return self._tokens

    def __len__(self):
        return len(self._tokens)

    def __contains__(self, token):
        return token in self._index

    def row_index(self, token):
        return self._index[token]

    def vector(self, token):
        return self.vectors[self._index[token]]


def save_embeddings(table, path):
    """Header ``<rows> <dim>`` then one ``<token> <x1> ... <xd>`` per row.

    Values carry 17 significant digits, so loading restores float64 exactly.
    """
    prefix = _EGO_TOKEN_PREFIX if table.kind == KIND_EGO else ""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table)} {table.dim}\n")
        for token, row in zip(table.tokens, table.vectors):
            fh.write(prefix + str(token))
            for x in row:
                fh.write(f" {x:.17g}")
            fh.write("\n")


def load_embeddings(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise CorruptFile(path, "header must be '<rows> <dim>'")
        try:
            n_rows, dim = int(header[0]), int(header[1])
        except ValueError:
            raise CorruptFile(path, "non-integer header") from None
        if n_rows < 0 or dim < 1:
            raise CorruptFile(path, "invalid header dimensions")
        tokens = []
        vectors = np.empty((n_rows, dim), dtype=np.float64)
        n_seen = 0
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if n_seen >= n_rows:
                raise CorruptFile(path, f"more than {n_rows} data rows")
            toks = line.split()
            if len(toks) != dim + 1:
                raise CorruptFile(
                    path, f"row {n_seen} has {len(toks) - 1} values, expected {dim}"
                )
            tokens.append(toks[0])
            try:
                vectors[n_seen] = [float(t) for t in toks[1:]]
            except ValueError:
                raise CorruptFile(path, f"row {n_seen} has non-numeric values") from None
            n_seen += 1
    if n_seen != n_rows:
        raise CorruptFile(path, f"header promised {n_rows} rows, found {n_seen}")

    ego_flags = [t.startswith(_EGO_TOKEN_PREFIX) for t in tokens]
    if any(ego_flags) and not all(ego_flags):
        raise CorruptFile(path, "mixed ego and node tokens")
    kind = KIND_EGO if (ego_flags and ego_flags[0]) else KIND_NODE_INPUT
    try:
        if kind == KIND_EGO:
            ids = [int(t[len(_EGO_TOKEN_PREFIX):]) for t in tokens]
        else:
            ids = [int(t) for t in tokens]
    except ValueError:
        raise CorruptFile(path, "non-integer token id") from None
    return EmbeddingTable(ids, vectors, kind)


# ---------------------------------------------------------------------------
# Training


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 300
    context: int = 2
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    min_lr: float | None = None  # None: initial_lr / 1e4
    noise_power: float = 0.75
    seed: int = 0
    workers: int = 1  # 1: deterministic; >1: lock-free threads

    def __post_init__(self):
        if self.dim < 1 or self.context < 1 or self.negatives < 1:
            raise ValueError("dim, context and negatives must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if not (self.initial_lr > self.resolved_min_lr() > 0):
            raise ValueError("need initial_lr > min_lr > 0")

    def resolved_min_lr(self):
        return self.initial_lr / 1e4 if self.min_lr is None else self.min_lr


def window_pair_count(length, context):
    """Number of (center, context) pairs a walk of this length schedules."""
    if length < 2:
        return 0
    if context >= length:
        return length * (length - 1)
    return 2 * context * length - context * (context + 1)


def _encode_walks(walks, vocab):
    lengths = np.array([len(_walk_tokens(w)) for w in walks], dtype=np.int64)
    starts = np.zeros(len(walks), dtype=np.int64)
    if len(walks) > 1:
        starts[1:] = np.cumsum(lengths)[:-1]
    flat = np.empty(int(lengths.sum()), dtype=np.int64)
    pos = 0
    index = vocab.index
    for walk in walks:
        for token in _walk_tokens(walk):
            flat[pos] = index(token)
            pos += 1
    return flat, starts, lengths


def _launch_slices(run_slice, n_walks, workers):
    """Run a compiled epoch kernel, single-threaded or lock-free."""
    if workers <= 1 or n_walks < 2:
        out = np.zeros(1)
        run_slice(0, n_walks, out)
        return float(out[0])
    workers = min(workers, n_walks)
    bounds = np.linspace(0, n_walks, workers + 1).astype(np.int64)
    outs = [np.zeros(1) for _ in range(workers)]
    threads = [
        threading.Thread(
            target=run_slice, args=(int(bounds[i]), int(bounds[i + 1]), outs[i])
        )
        for i in range(workers)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    return float(sum(o[0] for o in outs))


def _uniform_init(rng, rows, dim):
    # word2vec-style small uniform init
    return (rng.random((rows, dim)) - 0.5) / dim


class SkipGramTrainer:
    """Skip-gram with negative sampling over a walk corpus.

    After ``fit``: ``input_vectors`` (one row per vocabulary token),
    ``output_vectors`` and ``epoch_losses`` (mean loss per scheduled pair).
    """

    def __init__(self, cfg):
        self.cfg = cfg
        self.vocab = None
        self.input_vectors = None
        self.output_vectors = None
        self.epoch_losses = []

    def fit(self, corpus):
        cfg = self.cfg
        corpus = list(corpus)
        vocab = build_vocabulary(corpus)
        flat, starts, lengths = _encode_walks(corpus, vocab)

        rng = derive_rng(cfg.seed, "sgns-init")
        w_in = _uniform_init(rng, len(vocab), cfg.dim)
        w_out = np.zeros((len(vocab), cfg.dim))
        cum = noise_distribution(vocab, cfg.noise_power).cumulative

        pair_counts = np.array(
            [window_pair_count(int(n), cfg.context) for n in lengths], dtype=np.int64
        )
        prefix = np.zeros(len(corpus), dtype=np.int64)
        if len(corpus) > 1:
            prefix[1:] = np.cumsum(pair_counts)[:-1]
        per_epoch = int(pair_counts.sum())
        total_updates = max(1, per_epoch * cfg.epochs)
        lr0, lr1 = cfg.initial_lr, cfg.resolved_min_lr()
        seed_base = np.uint64(derive_uint64(cfg.seed, "sgns-neg"))

        self.epoch_losses = []
        for epoch in range(cfg.epochs):
            epoch_base = epoch * per_epoch

            def run_slice(lo, hi, out, _epoch=epoch, _base=epoch_base):
                _kernels.sgns_train_slice(
                    w_in, w_out, flat, starts, lengths, lo, hi,
                    prefix, _base, total_updates, lr0, lr1,
                    cfg.context, cfg.negatives, cum, seed_base, _epoch, out,
                )

            loss = _launch_slices(run_slice, len(corpus), cfg.workers)
            self.epoch_losses.append(loss / per_epoch if per_epoch else 0.0)

        self.vocab = vocab
        self.input_vectors = w_in
        self.output_vectors = w_out
        return self

    def input_table(self):
        return EmbeddingTable(self.vocab.tokens, self.input_vectors, KIND_NODE_INPUT)

    def output_table(self):
        return EmbeddingTable(self.vocab.tokens, self.output_vectors, KIND_NODE_OUTPUT)


class PvdmTrainer:
    """Distributed-memory ego-vector trainer over tagged walks.

    Learns the ego matrix jointly with local alter vectors and output
    weights in the concatenated space.  Ego rows are ordered by first
    appearance in the corpus.
    """

    def __init__(self, cfg):
        self.cfg = cfg
        self.vocab = None
        self.ego_ids = None
        self.ego_vectors = None
        self.word_vectors = None
        self.output_vectors = None
        self.epoch_losses = []

    def fit(self, tagged_walks):
        cfg = self.cfg
        walks = list(tagged_walks)
        if not walks:
            raise EmptyCorpus("no tagged walks")
        vocab = build_vocabulary(walks)
        flat, starts, lengths = _encode_walks(walks, vocab)

        ego_ids = []
        tag_of = {}
        for tw in walks:
            if tw.ego not in tag_of:
                tag_of[tw.ego] = len(ego_ids)
                ego_ids.append(tw.ego)
        tags = np.array([tag_of[tw.ego] for tw in walks], dtype=np.int64)

        width = (2 * cfg.context + 1) * cfg.dim
        word_rng = derive_rng(cfg.seed, "pvdm-init-words")
        ego_rng = derive_rng(cfg.seed, "pvdm-init-egos")
        word_vecs = _uniform_init(word_rng, len(vocab), cfg.dim)
        ego_vecs = _uniform_init(ego_rng, len(ego_ids), cfg.dim)
        w_out = np.zeros((len(vocab), width))
        cum = noise_distribution(vocab, cfg.noise_power).cumulative

        prefix = np.zeros(len(walks), dtype=np.int64)
        if len(walks) > 1:
            prefix[1:] = np.cumsum(lengths)[:-1]
        per_epoch = int(lengths.sum())
        total_updates = max(1, per_epoch * cfg.epochs)
        lr0, lr1 = cfg.initial_lr, cfg.resolved_min_lr()
        seed_base = np.uint64(derive_uint64(cfg.seed, "pvdm-neg"))

        self.epoch_losses = []
        for epoch in range(cfg.epochs):
            epoch_base = epoch * per_epoch

            def run_slice(lo, hi, out, _epoch=epoch, _base=epoch_base):
                _kernels.pvdm_train_slice(
                    ego_vecs, word_vecs, w_out, flat, starts, lengths, tags,
                    lo, hi, prefix, _base, total_updates, lr0, lr1,
                    cfg.context, cfg.negatives, cum, seed_base, _epoch, out,
                )

            loss = _launch_slices(run_slice, len(walks), cfg.workers)
            self.epoch_losses.append(loss / per_epoch if per_epoch else 0.0)

        self.vocab = vocab
        self.ego_ids = tuple(ego_ids)
        self.ego_vectors = ego_vecs
        self.word_vectors = word_vecs
        self.output_vectors = w_out
        return self

    def ego_table(self):
        return EmbeddingTable(self.ego_ids, self.ego_vectors, KIND_EGO)

    def word_table(self):
        return EmbeddingTable(self.vocab.tokens, self.word_vectors, KIND_NODE_INPUT)

    def output_table(self):
        return EmbeddingTable(self.vocab.tokens, self.output_vectors, KIND_PVDM_OUTPUT)


def train_global(corpus, cfg):
    """Node vectors from skip-gram with negative sampling (input table)."""
    return SkipGramTrainer(cfg).fit(corpus).input_table()


def train_local(tagged_walks, cfg):
    """Ego vectors from distributed-memory training over ego-walks."""
    return PvdmTrainer(cfg).fit(tagged_walks).ego_table()
