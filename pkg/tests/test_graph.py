import numpy as np
import pytest

from conftest import make_snap_dataset
from egolearn.errors import MissingDataset, MissingFile, ParseError, UnknownNode
from egolearn.graph import (
    Graph,
    dataset_stats,
    ego_network,
    load_ego_dataset,
)
from egolearn.seeding import derive_rng


# ---------------------------------------------------------------------------
# Graph core


def test_from_edges_dedupes_and_drops_self_loops():
    g = Graph.from_edges([(1, 2), (2, 1), (1, 2), (3, 3), (2, 5)])
    # the self-loop contributes nothing, so 3 is not even a node
    assert g.num_nodes == 3
    assert g.num_edges == 2
    assert 3 not in g.nodes
    assert g.neighbors(1) == (2,)
    assert g.neighbors(2) == (1, 5)
    g2 = Graph.from_edges([(1, 2)], isolated=[3])
    assert 3 in g2.nodes and g2.neighbors(3) == ()


def test_symmetry_invariant():
    g = Graph.from_edges([(1, 2), (2, 3), (3, 1), (3, 9)])
    for u in g.nodes:
        for v in g.neighbors(u):
            assert u in g.neighbors(v)


def test_edge_count_matches_half_degree_sum():
    rng = derive_rng(0, "graph-random")
    edges = set()
    while len(edges) < 40:
        a, b = rng.integers(0, 30, 2)
        if a != b:
            edges.add((min(a, b), max(a, b)))
    g = Graph.from_edges(edges)
    assert sum(g.degree(u) for u in g.nodes) == 2 * g.num_edges


def test_unknown_node_errors():
    g = Graph.from_edges([(1, 2)])
    with pytest.raises(UnknownNode):
        g.neighbors(99)
    with pytest.raises(UnknownNode):
        ego_network(g, 99)


def test_isolated_nodes_kept():
    g = Graph.from_edges([(1, 2)], isolated=[7, 8])
    assert 7 in g and 8 in g
    assert g.neighbors(7) == ()
    assert g.num_nodes == 4


def test_huge_node_ids_survive():
    # gplus-scale ids exceed int64; adjacency must not coerce them
    big = 2 ** 70 + 3
    g = Graph.from_edges([(big, 5)])
    assert g.neighbors(5) == (big,)


def test_subgraph_filters_edges():
    g = Graph.from_edges([(1, 2), (2, 3), (3, 4), (4, 1)])
    sub = g.subgraph({1, 2, 3})
    assert sub.num_nodes == 3
    assert set(sub.edges()) == {(1, 2), (2, 3)}


# ---------------------------------------------------------------------------
# ego_network


def test_ego_network_isolated_ego():
    g = Graph.from_edges([(1, 2)], isolated=[5])
    e = ego_network(g, 5)
    assert e.alters == ()
    assert e.subgraph.num_nodes == 1
    assert e.subgraph.num_edges == 0


def test_ego_network_triangle_keeps_alter_edge():
    g = Graph.from_edges([(0, 1), (0, 2), (1, 2)])
    e = ego_network(g, 0)
    assert set(e.alters) == {1, 2}
    assert set(e.subgraph.edges()) == {(0, 1), (0, 2), (1, 2)}


def test_ego_network_matches_brute_force_filter():
    """Subgraph edges equal a brute-force filter of E by endpoint membership."""
    rng = derive_rng(3, "gnp")
    n, p = 50, 0.1
    edges = [(a, b) for a in range(n) for b in range(a + 1, n)
             if rng.random() < p]
    g = Graph.from_edges(edges, isolated=range(n))
    for u in range(0, n, 7):
        e = ego_network(g, u)
        keep = set(e.alters) | {u}
        expected = {(a, b) for a, b in edges if a in keep and b in keep}
        assert set(e.subgraph.edges()) == expected


# ---------------------------------------------------------------------------
# SNAP parsing


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def _write_minimal_ego(directory, ego=0):
    _write(directory / f"{ego}.edges", "1 2\n")
    _write(directory / f"{ego}.circles", "circle0\t1\t2\n")
    _write(directory / f"{ego}.feat", "1 1 0\n2 0 1\n3 1 1\n")
    _write(directory / f"{ego}.egofeat", "1 1\n")
    _write(directory / f"{ego}.featnames", "0 birthday\n1 school\n")


def test_toy_dataset_star_plus_alter_edges(tmp_path):
    """feat rows for 1,2,3 and edge (1,2) give edges {0-1,0-2,0-3,1-2}."""
    _write_minimal_ego(tmp_path)
    ds = load_ego_dataset(tmp_path, "facebook")
    g = ds.combined
    assert g.num_nodes == 4
    assert set(g.edges()) == {(0, 1), (0, 2), (0, 3), (1, 2)}


def test_empty_edges_file_star_from_feat(tmp_path):
    _write(tmp_path / "0.edges", "\n")
    _write(tmp_path / "0.circles", "circle0\t4\n")
    _write(tmp_path / "0.feat", "4 1\n5 0\n")
    _write(tmp_path / "0.egofeat", "1\n")
    _write(tmp_path / "0.featnames", "0 x\n")
    ds = load_ego_dataset(tmp_path, "facebook")
    assert set(ds.combined.edges()) == {(0, 4), (0, 5)}


def test_missing_file_error(tmp_path):
    _write_minimal_ego(tmp_path)
    (tmp_path / "0.egofeat").unlink()
    with pytest.raises(MissingFile) as exc:
        load_ego_dataset(tmp_path, "facebook")
    assert exc.value.suffix == ".egofeat"


def test_missing_or_empty_directory(tmp_path):
    with pytest.raises(MissingDataset):
        load_ego_dataset(tmp_path / "nowhere", "facebook")
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(MissingDataset, match="no <ego>.edges"):
        load_ego_dataset(empty, "facebook")


def test_malformed_line_reports_position(tmp_path):
    _write_minimal_ego(tmp_path)
    _write(tmp_path / "0.edges", "1 2\n3 not-a-number\n")
    with pytest.raises(ParseError) as exc:
        load_ego_dataset(tmp_path, "facebook")
    assert exc.value.lineno == 2
    assert "0.edges" in str(exc.value)


def test_blank_lines_and_trailing_whitespace_ok(tmp_path):
    _write(tmp_path / "0.edges", "1 2  \n\n\n")
    _write(tmp_path / "0.circles", "circle0\t1\t2  \n\n")
    _write(tmp_path / "0.feat", "1 1 0 \n2 0 1\n\n")
    _write(tmp_path / "0.egofeat", "1 1  \n")
    _write(tmp_path / "0.featnames", "0 a\n1 b\n\n")
    ds = load_ego_dataset(tmp_path, "facebook")
    assert ds.combined.num_nodes == 3


def test_unknown_kind_rejected(tmp_path):
    _write_minimal_ego(tmp_path)
    with pytest.raises(ValueError):
        load_ego_dataset(tmp_path, "myspace")


def test_circle_only_member_is_isolated(dataset, snap_dir):
    _, info = snap_dir
    for ego in info["egos"]:
        for ghost in info["circle_only"][ego]:
            assert ghost in dataset.combined
            assert dataset.combined.neighbors(ghost) == ()


def test_alters_are_neighbors_of_ego(dataset, snap_dir):
    _, info = snap_dir
    for ego in info["egos"]:
        assert set(dataset.combined.neighbors(ego)) == set(info["alters"][ego])


def test_label_index_is_bijection_in_file_order(dataset, snap_dir):
    _, info = snap_dir
    ids = sorted(dataset.label_index.values())
    assert ids == list(range(dataset.num_labels))
    # per-ego blocks appear in ego order, names in file (sorted) order
    expected = []
    for ego in info["egos"]:
        for name in sorted(info["circles"][ego]):
            expected.append(f"{ego}/{name}")
    got = [k for k, _ in sorted(dataset.label_index.items(), key=lambda kv: kv[1])]
    assert got == expected


def test_dataset_stats_counts(dataset, snap_dir):
    _, info = snap_dir
    stats = dataset_stats(dataset)
    n_alters = sum(len(v) for v in info["alters"].values())
    n_ghosts = sum(len(v) for v in info["circle_only"].values())
    assert stats.num_nodes == len(info["egos"]) + n_alters + n_ghosts
    assert stats.num_egos == len(info["egos"])
    assert stats.num_circles == sum(len(c) for c in info["circles"].values())
    assert stats.num_features == info["n_features"]


def test_reload_determinism(snap_dir):
    directory, _ = snap_dir
    a = load_ego_dataset(directory, "facebook")
    b = load_ego_dataset(directory, "facebook")
    assert dataset_stats(a) == dataset_stats(b)
    for u in a.combined.nodes:
        assert a.combined.neighbors(u) == b.combined.neighbors(u)


def test_feature_rows_have_equal_length(dataset):
    for rec in dataset.records:
        widths = {len(bits) for bits in rec.alter_features.values()}
        widths.add(len(rec.ego_features))
        assert widths == {rec.num_features}


def test_circle_members_in_node_universe(dataset):
    for rec in dataset.records:
        for members in rec.circles.values():
            for v in members:
                assert v in dataset.combined


def test_generator_matches_planted_structure(tmp_path):
    info = make_snap_dataset(tmp_path / "d", n_egos=3, alters_per_ego=8,
                             n_circles=2, n_features=10, seed=11)
    ds = load_ego_dataset(tmp_path / "d", "facebook")
    assert len(ds.records) == 3
    for rec in ds.records:
        planted = info["circles"][rec.ego]
        assert {n: set(m) for n, m in rec.circles.items()} == planted
