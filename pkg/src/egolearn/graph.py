"""Ego-network datasets: parsing, the combined graph, induced subgraphs.

Datasets follow the standard SNAP ego-nets layout: for every ego X the
directory holds ``X.edges``, ``X.circles``, ``X.feat``, ``X.egofeat`` and
``X.featnames``.  Node ids are kept exactly as they appear in the files
(arbitrary-precision ints, so Google+ ids are fine).
"""

import os
from dataclasses import dataclass

import numpy as np

from .errors import MissingDataset, MissingFile, ParseError, UnknownNode

DATASET_KINDS = ("facebook", "gplus", "twitter")
EGO_FILE_SUFFIXES = (".edges", ".circles", ".feat", ".egofeat", ".featnames")


class Graph:
    """Undirected graph over integer node ids, read-only once built.

    Adjacency is stored as sorted tuples: iteration order is reproducible
    and uniform neighbor sampling is a constant-time index.
    """

    __slots__ = ("_adj", "_nodes", "_num_edges")

    def __init__(self, adjacency):
        adj = {}
        for u, nbrs in adjacency.items():
            uniq = sorted(set(nbrs))
            if u in uniq:
                raise ValueError(f"self-loop on node {u}")
            adj[u] = tuple(uniq)
        for u, nbrs in adj.items():
            for v in nbrs:
                if v not in adj or u not in adj[v]:
                    raise ValueError(f"asymmetric adjacency at edge {u}-{v}")
        self._adj = adj
        self._nodes = tuple(sorted(adj))
        self._num_edges = sum(len(nbrs) for nbrs in adj.values()) // 2

    @classmethod
    def from_edges(cls, edges, isolated=()):
        """Build from an iterable of (u, v) pairs plus extra edge-less nodes.

        Duplicate edges are deduplicated and self-loops dropped silently.
        """
        adj = {u: set() for u in isolated}
        for u, v in edges:
            if u == v:
                continue
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
        return cls(adj)

    @property
    def nodes(self):
        return self._nodes

    @property
    def num_nodes(self):
        return len(self._nodes)

    @property
    def num_edges(self):
        return self._num_edges

    def __contains__(self, node):
        return node in self._adj

    def __len__(self):
        return len(self._adj)

    def neighbors(self, node):
        try:
            return self._adj[node]
        except KeyError:
            raise UnknownNode(node) from None

    def degree(self, node):
        return len(self.neighbors(node))

    def edges(self):
        """Yield each undirected edge once, as (u, v) with u < v."""
        for u in self._nodes:
            for v in self._adj[u]:
                if u < v:
                    yield u, v

    def subgraph(self, keep):
        """Induced subgraph over ``keep`` (nodes absent from self ignored)."""
        keep = set(keep)
        adj = {
            u: [v for v in self._adj[u] if v in keep]
            for u in keep
            if u in self._adj
        }
        return Graph(adj)


@dataclass(frozen=True)
class EgoNetwork:
    """One ego's neighborhood: the ego, its alters, the induced subgraph."""

    ego: int
    alters: tuple
    subgraph: Graph

    @property
    def num_alters(self):
        return len(self.alters)


def ego_network(g, ego):
    """Induced subgraph over the ego's neighborhood, ego included."""
    if ego not in g:
        raise UnknownNode(ego)
    alters = g.neighbors(ego)
    sub = g.subgraph(set(alters) | {ego})
    return EgoNetwork(ego=ego, alters=alters, subgraph=sub)


@dataclass
class EgoRecord:
    """Ground truth and profile bits parsed from one ego's files.

    ``circles`` keeps the raw per-file circle names; the dataset-level
    label index namespaces them as ``<ego>/<name>``.
    """

    ego: int
    circles: dict
    ego_features: np.ndarray
    alter_features: dict
    feature_names: list

    @property
    def num_features(self):
        return int(self.ego_features.shape[0])


@dataclass
class Dataset:
    kind: str
    records: list
    combined: Graph
    egos: tuple
    label_index: dict

    @property
    def num_labels(self):
        return len(self.label_index)

    def record_for(self, ego):
        for rec in self.records:
            if rec.ego == ego:
                return rec
        raise KeyError(f"no record for ego {ego}")

    def circle_labels(self, record):
        """(label_id, members) pairs for one ego, in file order."""
        out = []
        for name, members in record.circles.items():
            out.append((self.label_index[f"{record.ego}/{name}"], members))
        return out


@dataclass(frozen=True)
class GraphStats:
    num_nodes: int
    num_edges: int
    num_egos: int
    num_circles: int
    num_features: int

    def as_tuple(self):
        return (
            self.num_nodes,
            self.num_edges,
            self.num_egos,
            self.num_circles,
            self.num_features,
        )


def dataset_stats(ds):
    """(|V|, |E|, egos, circles, max profile length) for a loaded dataset."""
    num_features = max((r.num_features for r in ds.records), default=0)
    return GraphStats(
        num_nodes=ds.combined.num_nodes,
        num_edges=ds.combined.num_edges,
        num_egos=len(ds.records),
        num_circles=len(ds.label_index),
        num_features=num_features,
    )


# ---------------------------------------------------------------------------
# SNAP file parsing


def _data_lines(path):
    # Blank lines and trailing whitespace are tolerated everywhere.
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if line:
                yield lineno, line


def _parse_int(tok, path, lineno, what):
    try:
        value = int(tok)
    except ValueError:
        raise ParseError(path, lineno, f"expected integer {what}, got {tok!r}") from None
    if value < 0:
        raise ParseError(path, lineno, f"negative {what}: {tok}")
    return value


def _parse_bits(toks, path, lineno):
    bits = np.empty(len(toks), dtype=np.int8)
    for i, tok in enumerate(toks):
        if tok == "0":
            bits[i] = 0
        elif tok == "1":
            bits[i] = 1
        else:
            raise ParseError(path, lineno, f"profile bit must be 0 or 1, got {tok!r}")
    return bits


def _parse_edges_file(path):
    edges = []
    for lineno, line in _data_lines(path):
        toks = line.split()
        if len(toks) != 2:
            raise ParseError(path, lineno, f"expected 'a b' edge, got {len(toks)} tokens")
        a = _parse_int(toks[0], path, lineno, "node id")
        b = _parse_int(toks[1], path, lineno, "node id")
        edges.append((a, b))
    return edges


def _parse_circles_file(path):
    circles = {}
    for lineno, line in _data_lines(path):
        toks = line.split()
        name = toks[0]
        if name in circles:
            raise ParseError(path, lineno, f"duplicate circle name {name!r}")
        members = frozenset(
            _parse_int(tok, path, lineno, "circle member") for tok in toks[1:]
        )
        circles[name] = members
    return circles


def _parse_feat_file(path):
    rows = {}
    width = None
    for lineno, line in _data_lines(path):
        toks = line.split()
        node = _parse_int(toks[0], path, lineno, "node id")
        bits = _parse_bits(toks[1:], path, lineno)
        if width is None:
            width = bits.shape[0]
        elif bits.shape[0] != width:
            raise ParseError(
                path, lineno,
                f"feature row has {bits.shape[0]} bits, expected {width}",
            )
        rows[node] = bits
    return rows, (width or 0)


def _parse_egofeat_file(path, width):
    bits = None
    for lineno, line in _data_lines(path):
        if bits is not None:
            raise ParseError(path, lineno, "more than one ego feature line")
        bits = _parse_bits(line.split(), path, lineno)
        if width and bits.shape[0] != width:
            raise ParseError(
                path, lineno,
                f"ego features have {bits.shape[0]} bits, expected {width}",
            )
    if bits is None:
        bits = np.zeros(width, dtype=np.int8)
    return bits


def _parse_featnames_file(path, width):
    names = []
    for lineno, line in _data_lines(path):
        toks = line.split(None, 1)
        idx = _parse_int(toks[0], path, lineno, "feature index")
        if idx != len(names):
            raise ParseError(path, lineno, f"feature index {idx} out of order")
        names.append(toks[1] if len(toks) > 1 else "")
    if names and width and len(names) != width:
        raise ParseError(
            path, len(names),
            f"{len(names)} feature names for {width}-bit vectors",
        )
    return names


def _discover_egos(directory):
    if not os.path.isdir(directory):
        raise MissingDataset(directory, "not a directory")
    egos = []
    for entry in os.listdir(directory):
        if not entry.endswith(".edges"):
            continue
        stem = entry[: -len(".edges")]
        try:
            egos.append(int(stem))
        except ValueError:
            continue
    if not egos:
        raise MissingDataset(directory, "no <ego>.edges files found")
    return sorted(egos)


def load_ego_dataset(directory, kind="facebook"):
    """Parse a SNAP ego-nets directory into a Dataset.

    The combined graph is the union over egos of the ego-alter star edges
    and the alter-alter edges from each ``X.edges``.  Alters that appear
    only in ``X.feat`` still get their star edge; ids that appear only in
    circles join the graph as isolated nodes.
    """
    if kind not in DATASET_KINDS:
        raise ValueError(f"unknown dataset kind {kind!r}; expected one of {DATASET_KINDS}")
    directory = os.fspath(directory)

    records = []
    edge_set = set()
    extra_nodes = set()
    for ego in _discover_egos(directory):
        paths = {}
        for suffix in EGO_FILE_SUFFIXES:
            p = os.path.join(directory, f"{ego}{suffix}")
            if not os.path.isfile(p):
                raise MissingFile(ego, suffix)
            paths[suffix] = p

        edges = _parse_edges_file(paths[".edges"])
        circles = _parse_circles_file(paths[".circles"])
        alter_feats, width = _parse_feat_file(paths[".feat"])
        ego_feats = _parse_egofeat_file(paths[".egofeat"], width)
        names = _parse_featnames_file(paths[".featnames"], max(width, ego_feats.shape[0]))

        alters = set(alter_feats)
        for a, b in edges:
            alters.add(a)
            alters.add(b)
            if a != b:
                edge_set.add((a, b) if a < b else (b, a))
        alters.discard(ego)
        for alter in alters:
            edge_set.add((ego, alter) if ego < alter else (alter, ego))

        extra_nodes.add(ego)
        for members in circles.values():
            extra_nodes.update(members)

        records.append(
            EgoRecord(
                ego=ego,
                circles=circles,
                ego_features=ego_feats,
                alter_features=alter_feats,
                feature_names=names,
            )
        )

    combined = Graph.from_edges(edge_set, isolated=extra_nodes)

    # Circles are namespaced per ego, so the label universe counts every
    # ego's circles separately even when names repeat.
    label_index = {}
    for rec in records:
        for name in rec.circles:
            label_index[f"{rec.ego}/{name}"] = len(label_index)

    return Dataset(
        kind=kind,
        records=records,
        combined=combined,
        egos=tuple(rec.ego for rec in records),
        label_index=label_index,
    )
