"""Shared fixtures: a synthetic SNAP-layout ego dataset with planted circles.

The generator writes real files in the five-per-ego SNAP format so every
parser code path is exercised.  Circle structure is planted as cliques and
profile bits correlate with circle membership, which gives downstream
training something learnable at tiny scale.
"""

import os
from pathlib import Path

import numpy as np
import pytest

from egolearn.graph import load_ego_dataset

FACEBOOK_ENV = "EGOLEARN_FACEBOOK_DIR"


def make_snap_dataset(directory, n_egos=2, alters_per_ego=12, n_circles=3,
                      n_features=24, seed=7, circle_only_member=True,
                      unlabeled_per_ego=1, missing_feat_rows=1):
    """Write a synthetic dataset; returns ground truth for assertions.

    Per ego: alters split round-robin into circle cliques, a couple of
    cross-circle edges, the configured number of alters left out of every
    circle, optionally one circle member that never appears in edges or
    features (must load as an isolated node), and optionally alters with
    no .feat row.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    info = {
        "egos": [],
        "alters": {},
        "circles": {},
        "circle_only": {},
        "unlabeled": {},
        "no_feat_row": {},
        "edges": {},
        "n_features": n_features,
    }
    next_id = 0
    bits_per_circle = max(1, n_features // (n_circles + 1))

    for _ in range(n_egos):
        ego = next_id
        next_id += 1
        alters = list(range(next_id, next_id + alters_per_ego))
        next_id += alters_per_ego

        labeled = alters[: len(alters) - unlabeled_per_ego]
        unlabeled = alters[len(alters) - unlabeled_per_ego:]
        groups = [labeled[k::n_circles] for k in range(n_circles)]
        circles = {f"circle{k}": set(groups[k]) for k in range(n_circles)}
        # one multi-circle member so multi-hot rows exist
        if n_circles >= 2 and groups[0]:
            circles["circle1"].add(groups[0][0])

        edges = set()
        for group in groups:
            for i, a in enumerate(group):
                for b in group[i + 1:]:
                    edges.add((min(a, b), max(a, b)))
        # cross-circle bridges and edges for unlabeled alters
        for k in range(n_circles - 1):
            if groups[k] and groups[k + 1]:
                a, b = groups[k][0], groups[k + 1][0]
                edges.add((min(a, b), max(a, b)))
        for v in unlabeled:
            a = labeled[int(rng.integers(len(labeled)))]
            edges.add((min(a, v), max(a, v)))

        ghost = []
        if circle_only_member:
            ghost = [next_id]
            next_id += 1
            circles["circle0"] = circles["circle0"] | set(ghost)

        feat_rows = {}
        # drop the profile row of a *labeled* alter so the similarity
        # fallback path is exercised on instances that reach the classifier
        skip_feat = set(labeled[-missing_feat_rows:]) if missing_feat_rows else set()
        for v in alters:
            if v in skip_feat:
                continue
            bits = (rng.random(n_features) < 0.2).astype(np.int8)
            for k, group in enumerate(groups):
                if v in group:
                    bits[k * bits_per_circle:(k + 1) * bits_per_circle] = 1
            feat_rows[v] = bits
        ego_bits = (rng.random(n_features) < 0.5).astype(np.int8)

        with open(directory / f"{ego}.edges", "w") as fh:
            for a, b in sorted(edges):
                fh.write(f"{a} {b}\n")
        with open(directory / f"{ego}.circles", "w") as fh:
            for name in sorted(circles):
                members = "\t".join(str(v) for v in sorted(circles[name]))
                fh.write(f"{name}\t{members}\n")
        with open(directory / f"{ego}.feat", "w") as fh:
            for v in sorted(feat_rows):
                fh.write(f"{v} " + " ".join(str(b) for b in feat_rows[v]) + "\n")
        with open(directory / f"{ego}.egofeat", "w") as fh:
            fh.write(" ".join(str(b) for b in ego_bits) + "\n")
        with open(directory / f"{ego}.featnames", "w") as fh:
            for i in range(n_features):
                fh.write(f"{i} feature;{i};anonymized\n")

        info["egos"].append(ego)
        info["alters"][ego] = alters
        info["circles"][ego] = circles
        info["circle_only"][ego] = ghost
        info["unlabeled"][ego] = unlabeled
        info["no_feat_row"][ego] = sorted(skip_feat)
        info["edges"][ego] = edges
    return info


@pytest.fixture(scope="session")
def snap_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("snap")
    info = make_snap_dataset(directory)
    return directory, info


@pytest.fixture(scope="session")
def snap_info(snap_dir):
    _, info = snap_dir
    return info


@pytest.fixture(scope="session")
def dataset(snap_dir):
    directory, _ = snap_dir
    return load_ego_dataset(directory, "facebook")


@pytest.fixture(scope="session")
def facebook_dir():
    directory = os.environ.get(FACEBOOK_ENV)
    if not directory or not os.path.isdir(directory):
        pytest.skip(
            f"set {FACEBOOK_ENV} to a directory with the SNAP Facebook "
            "ego-network files to run this test"
        )
    return directory


def rel_err(analytic, numeric):
    """Relative error with a unit floor, elementwise max."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
    return float(np.max(np.abs(a - n) / scale)) if a.size else 0.0
