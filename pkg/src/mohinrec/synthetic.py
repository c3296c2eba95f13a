"""Synthetic social-rating data whose rating signal lives in closed trust triangles.

Users and items are split into taste groups. Trust inside a group comes in
fully reciprocated triads; every user also trusts a few random users from
other groups with a one-way edge. A user rates items from their own group
highly and everything else poorly, so the items of triad partners are
informative and the items of one-way contacts are mostly noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import HinGraph, RatingDataset, binarize, build_hin
from .sparse import SparseMatrix


@dataclass(frozen=True)
class SyntheticConfig:
    n_users: int = 500
    n_items: int = 300
    n_ratings: int = 5000
    n_groups: int = 10
    in_group_share: float = 0.5
    noise_edges: int = 3
    like: float = 4.5
    dislike: float = 2.0
    rating_noise: float = 0.5
    seed: int = 0


def triadic_trust_graph(cfg: SyntheticConfig = SyntheticConfig()) -> HinGraph:
    rng = np.random.default_rng(cfg.seed)
    ug = rng.permutation(cfg.n_users) % cfg.n_groups
    ig = rng.permutation(cfg.n_items) % cfg.n_groups

    rows, cols = [], []
    for g in range(cfg.n_groups):
        members = rng.permutation(np.flatnonzero(ug == g))
        for t in range(0, members.size - 2, 3):
            tri = members[t:t + 3]
            for a in tri:
                for b in tri:
                    if a != b:
                        rows.append(a)
                        cols.append(b)
    for u in range(cfg.n_users):
        others = np.flatnonzero(ug != ug[u])
        for v in rng.choice(others, size=cfg.noise_edges, replace=False):
            rows.append(u)
            cols.append(v)
    trust = binarize(SparseMatrix.from_coo(rows, cols, np.ones(len(rows)),
                                           (cfg.n_users, cfg.n_users)))

    per_user = cfg.n_ratings // cfg.n_users
    users, items, ratings = [], [], []
    for u in range(cfg.n_users):
        own = np.flatnonzero(ig == ug[u])
        n_in = int(round(per_user * cfg.in_group_share))
        chosen = set(rng.choice(own, size=min(n_in, own.size), replace=False).tolist())
        while len(chosen) < per_user:
            chosen.add(int(rng.integers(cfg.n_items)))
        for b in sorted(chosen):
            mean = cfg.like if ig[b] == ug[u] else cfg.dislike
            r = float(np.clip(np.round(mean + rng.normal(0.0, cfg.rating_noise)), 1, 5))
            users.append(u)
            items.append(b)
            ratings.append(r)
    ds = RatingDataset(users, items, ratings, cfg.n_users, cfg.n_items)
    return build_hin(ds, trust, [f"u{i}" for i in range(cfg.n_users)],
                     [f"b{i}" for i in range(cfg.n_items)])


def write_files(graph: HinGraph, ratings_path, trust_path, sep="\t"):
    """Write the graph as ratings/trust text files the ingest command reads."""
    with open(ratings_path, "w") as f:
        for u, b, r in graph.ratings:
            f.write(f"{graph.user_labels[u]}{sep}{graph.item_labels[b]}{sep}{r:g}\n")
    rows, cols, _ = graph.w_uu.coo()
    with open(trust_path, "w") as f:
        for a, b in zip(rows.tolist(), cols.tolist()):
            f.write(f"{graph.user_labels[a]}{sep}{graph.user_labels[b]}\n")
