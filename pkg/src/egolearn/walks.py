"""Random-walk corpora: global walks over the combined graph and tagged
ego-walks confined to each ego's neighborhood.

Every walk draws from its own generator keyed by (seed, purpose, start,
pass), so corpora are reproducible and independent of scheduling.
"""

from dataclasses import dataclass

from .errors import UnknownNode
from .graph import ego_network
from .seeding import derive_rng


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 40
    ego_walk_length_cap: int | None = None  # None: min(n - 1, 10 * |A_u + ego|)
    ego_walk_concat: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.walks_per_node < 1:
            raise ValueError("walks_per_node must be >= 1")
        if self.walk_length < 2:
            raise ValueError("walk_length must be >= 2")
        if self.ego_walk_length_cap is not None and self.ego_walk_length_cap < 1:
            raise ValueError("ego_walk_length_cap must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class TaggedWalk:
    """A node sequence carrying the ego whose neighborhood produced it."""

    ego: int
    nodes: tuple

    def __len__(self):
        return len(self.nodes)


def random_walk(g, start, length, rng):
    """Uniform random walk of ``length`` nodes starting at ``start``.

    Each successor is drawn uniformly from the current node's neighbors.
    A degree-0 start terminates the walk at length 1.
    """
    if start not in g:
        raise UnknownNode(start)
    if length < 1:
        raise ValueError("walk length must be >= 1")
    walk = [start]
    if length == 1:
        return walk
    draws = rng.random(length - 1)
    cur = start
    for r in draws:
        nbrs = g.neighbors(cur)
        if not nbrs:
            break
        cur = nbrs[int(r * len(nbrs))]
        walk.append(cur)
    return walk


def generate_global_corpus(g, cfg):
    """walks_per_node seeded passes over the node set, one walk per node.

    Node order is reshuffled every pass.  Returns a list of walks
    (lists of node ids); degree-0 nodes contribute length-1 walks.
    """
    corpus = []
    nodes = list(g.nodes)
    for p in range(cfg.walks_per_node):
        order = list(nodes)
        derive_rng(cfg.seed, "global-order", p).shuffle(order)
        for start in order:
            rng = derive_rng(cfg.seed, "global-walk", p, start)
            corpus.append(random_walk(g, start, cfg.walk_length, rng))
    return corpus


def default_ego_walk_cap(n_total, n_ego_nodes):
    # The stream must stay shorter than the graph, but scale with the
    # neighborhood; never below 1 so a lone ego still emits itself.
    return max(1, min(n_total - 1, 10 * n_ego_nodes))


def _effective_cap(e, cfg, n_total):
    if n_total is None:
        n_total = e.subgraph.num_nodes
    cap = cfg.ego_walk_length_cap
    if cap is None:
        cap = default_ego_walk_cap(n_total, e.subgraph.num_nodes)
    return max(1, min(cap, max(1, n_total - 1)))


def _ego_walk_pieces(e, cfg, n_total):
    cap = _effective_cap(e, cfg, n_total)
    starts = sorted(set(e.alters) | {e.ego})
    derive_rng(cfg.seed, "ego-order", e.ego).shuffle(starts)
    pieces = []
    emitted = 0
    for start in starts:
        budget = cap - emitted
        if budget <= 0:
            break
        length = min(cfg.walk_length, budget)
        rng = derive_rng(cfg.seed, "ego-walk", e.ego, start)
        piece = random_walk(e.subgraph, start, length, rng)
        pieces.append(piece)
        emitted += len(piece)
    return pieces


def ego_walk(e, cfg, n_total=None):
    """One concatenated ego-walk stream for an EgoNetwork.

    Short walks start from every node of the neighborhood (ego included)
    in seeded shuffled order and are concatenated until the length cap is
    reached.  ``n_total`` is the loaded graph's node count; it bounds the
    stream below the graph size.
    """
    pieces = _ego_walk_pieces(e, cfg, n_total)
    stream = [node for piece in pieces for node in piece]
    return TaggedWalk(ego=e.ego, nodes=tuple(stream))


def ego_walk_pieces(e, cfg, n_total=None):
    """Same walks as :func:`ego_walk` but kept as separate tagged walks."""
    pieces = _ego_walk_pieces(e, cfg, n_total)
    return [TaggedWalk(ego=e.ego, nodes=tuple(p)) for p in pieces]


def generate_ego_corpus(ds, cfg):
    """Tagged ego-walk corpus for every ego of a dataset.

    With ``cfg.ego_walk_concat`` (the default) the corpus holds exactly one
    TaggedWalk per ego; otherwise each ego's short walks stay separate but
    share the ego tag.
    """
    n_total = ds.combined.num_nodes
    corpus = []
    for rec in ds.records:
        e = ego_network(ds.combined, rec.ego)
        if cfg.ego_walk_concat:
            corpus.append(ego_walk(e, cfg, n_total))
        else:
            corpus.extend(ego_walk_pieces(e, cfg, n_total))
    return corpus


# ---------------------------------------------------------------------------
# Plain-text corpus files


def save_corpus(walks, path):
    """One walk per line, space-separated node ids."""
    with open(path, "w", encoding="utf-8") as fh:
        for walk in walks:
            fh.write(" ".join(str(n) for n in walk))
            fh.write("\n")


def load_corpus(path):
    walks = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                walks.append([int(tok) for tok in line.split()])
    return walks


def save_tagged_corpus(tagged_walks, path):
    """``<ego><TAB><node ids...>`` per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for tw in tagged_walks:
            fh.write(str(tw.ego))
            fh.write("\t")
            fh.write(" ".join(str(n) for n in tw.nodes))
            fh.write("\n")


def load_tagged_corpus(path):
    tagged = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip()
            if not line:
                continue
            tag, _, rest = line.partition("\t")
            nodes = tuple(int(tok) for tok in rest.split())
            tagged.append(TaggedWalk(ego=int(tag), nodes=nodes))
    return tagged
