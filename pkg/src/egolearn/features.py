"""Pair feature assembly for the circle classifier.

Each training instance describes an (ego u, alter v) pair.  Six variants
combine the global node vectors glo(.), the ego vector loc(u) and a binary
profile-match vector sim(u, v); the variant fixes which blocks appear and
in what order.
"""

import enum

import numpy as np

from .errors import MissingEmbedding


class FeatureVariant(enum.Enum):
    GLOGLO = "gloglo"
    LOCGLO = "locglo"
    LOCGLOGLO = "locgloglo"
    GLOGLOSIM = "gloglosim"
    LOCGLOSIM = "locglosim"
    LOCGLOGLOSIM = "locgloglosim"

    @classmethod
    def from_tag(cls, tag):
        try:
            return cls(tag.strip().lower())
        except ValueError:
            valid = ", ".join(v.value for v in cls)
            raise ValueError(f"unknown feature variant {tag!r}; one of: {valid}") from None

    @property
    def blocks(self):
        return _BLOCKS[self]

    @property
    def uses_loc(self):
        return "loc_u" in _BLOCKS[self]

    @property
    def uses_glo_u(self):
        return "glo_u" in _BLOCKS[self]

    @property
    def uses_sim(self):
        return "sim" in _BLOCKS[self]

    def width(self, dim, sim_features):
        total = 0
        for block in _BLOCKS[self]:
            total += sim_features if block == "sim" else dim
        return total


_BLOCKS = {
    FeatureVariant.GLOGLO: ("glo_u", "glo_v"),
    FeatureVariant.LOCGLO: ("loc_u", "glo_v"),
    FeatureVariant.LOCGLOGLO: ("loc_u", "glo_u", "glo_v"),
    FeatureVariant.GLOGLOSIM: ("glo_u", "glo_v", "sim"),
    FeatureVariant.LOCGLOSIM: ("loc_u", "glo_v", "sim"),
    FeatureVariant.LOCGLOGLOSIM: ("loc_u", "glo_u", "glo_v", "sim"),
}

# Distinct pad sentinels so positions past either profile never match.
_PAD_U = -1
_PAD_V = -2


def profile_similarity(ego_features, alter_features, sim_features,
                       match_ones_only=False):
    """Binary agreement vector over the first ``sim_features`` profile bits.

    Bit i is 1 when both profiles carry the same value at position i
    (matching zeros count).  With ``match_ones_only`` a bit is set only
    when both profiles have a 1 there.  Positions beyond either profile
    are 0.
    """
    u = np.full(sim_features, _PAD_U, dtype=np.int64)
    v = np.full(sim_features, _PAD_V, dtype=np.int64)
    eu = np.asarray(ego_features, dtype=np.int64)[:sim_features]
    ev = np.asarray(alter_features, dtype=np.int64)[:sim_features]
    u[: len(eu)] = eu
    v[: len(ev)] = ev
    if match_ones_only:
        agree = (u == 1) & (v == 1)
    else:
        agree = u == v
    return agree.astype(np.float64)


def assemble_instance(variant, glo_table, loc_table, sim_vec, u, v):
    """Concatenate the variant's blocks for one (ego, alter) pair."""
    parts = []
    for block in variant.blocks:
        if block == "loc_u":
            if loc_table is None or u not in loc_table:
                raise MissingEmbedding(u, ego=u, alter=v)
            parts.append(loc_table.vector(u))
        elif block == "glo_u":
            if u not in glo_table:
                raise MissingEmbedding(u, ego=u, alter=v)
            parts.append(glo_table.vector(u))
        elif block == "glo_v":
            if v not in glo_table:
                raise MissingEmbedding(v, ego=u, alter=v)
            parts.append(glo_table.vector(v))
        else:
            parts.append(sim_vec)
    return np.concatenate(parts)


_EMPTY_PROFILE = np.zeros(0, dtype=np.int8)


def labeled_pairs(ds):
    """Yield (ego, alter, label_ids) for every circle-labeled alter.

    Alters are the ego's neighbors in the combined graph; ones belonging
    to no circle of their ego are skipped.  Order is deterministic: egos
    in file order, alters sorted.
    """
    for ego in ds.egos:
        record = ds.record_for(ego)
        circles = [
            (ds.label_index[f"{ego}/{name}"], members)
            for name, members in record.circles.items()
        ]
        for v in ds.combined.neighbors(ego):
            labels = [lid for lid, members in circles if v in members]
            if labels:
                yield ego, v, labels


def build_dataset(ds, variant, glo_table, loc_table=None, sim_features=500,
                  match_ones_only=False):
    """Feature matrix X, multi-hot label matrix Y and the pair list.

    Labels are namespaced per ego, so Y has one column per circle across
    the whole dataset.  The sim block is all zeros for alters without a
    profile row.
    """
    dim = glo_table.dim
    width = variant.width(dim, sim_features)
    pairs = list(labeled_pairs(ds))
    X = np.empty((len(pairs), width), dtype=np.float64)
    Y = np.zeros((len(pairs), ds.num_labels), dtype=np.int8)
    for i, (u, v, labels) in enumerate(pairs):
        sim = None
        if variant.uses_sim:
            record = ds.record_for(u)
            sim = profile_similarity(
                record.ego_features,
                record.alter_features.get(v, _EMPTY_PROFILE),
                sim_features,
                match_ones_only=match_ones_only,
            )
        X[i] = assemble_instance(variant, glo_table, loc_table, sim, u, v)
        Y[i, labels] = 1
    return X, Y, [(u, v) for u, v, _ in pairs]
