"""Embedding similarity matrices and average-linkage hierarchical clustering.

Used to inspect learned emoji embeddings: the most frequent emojis are
ranked, their pairwise cosine similarities computed, and an agglomerative
clustering (average linkage over cosine distance) produces a dendrogram
whose leaf order arranges the similarity matrix for heatmap rendering.
Tie-breaking is by smallest cluster index, so output is fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def cosine_matrix(vectors: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarities; rows with zero norm get similarity 0."""
    v = np.asarray(vectors, dtype=np.float64)
    norms = np.sqrt((v * v).sum(axis=1))
    safe = np.where(norms > 0, norms, 1.0)
    unit = v / safe[:, None]
    sim = unit @ unit.T
    zero = norms == 0
    sim[zero, :] = 0.0
    sim[:, zero] = 0.0
    return sim


@dataclass(frozen=True)
class Merge:
    left: int      # cluster ids; 0..n-1 are leaves, n+step are merge results
    right: int
    distance: float


def average_linkage(distance: np.ndarray) -> list[Merge]:
    """Agglomerate by smallest average pairwise distance until one cluster remains."""
    d = np.asarray(distance, dtype=np.float64)
    n = d.shape[0]
    if d.shape != (n, n):
        raise ValueError(f"distance matrix must be square, got {d.shape}")
    active: dict[int, list[int]] = {i: [i] for i in range(n)}
    dist: dict[tuple[int, int], float] = {}
    ids = sorted(active)
    for a_pos, a in enumerate(ids):
        for b in ids[a_pos + 1:]:
            dist[(a, b)] = float(d[a, b])
    merges: list[Merge] = []
    next_id = n
    while len(active) > 1:
        best = min(dist.items(), key=lambda item: (item[1], item[0]))
        (a, b), best_distance = best
        size_a, size_b = len(active[a]), len(active[b])
        members = active.pop(a) + active.pop(b)
        del dist[(a, b)]
        updated: dict[tuple[int, int], float] = {}
        for (x, y), value in dist.items():
            if x in (a, b) or y in (a, b):
                other = y if x in (a, b) else x
                prior = updated.get(other)
                weighted = value * (size_a if x == a or y == a else size_b)
                updated[other] = weighted if prior is None else prior + weighted
            # untouched pairs stay as they are
        dist = {pair: value for pair, value in dist.items()
                if pair[0] not in (a, b) and pair[1] not in (a, b)}
        for other, weighted_sum in updated.items():
            dist[(min(other, next_id), max(other, next_id))] = weighted_sum / (size_a + size_b)
        active[next_id] = members
        merges.append(Merge(left=a, right=b, distance=best_distance))
        next_id += 1
    return merges


def leaf_order(merges: list[Merge], n: int) -> list[int]:
    """Dendrogram leaf order: expand each merge left before right."""
    if n == 1:
        return [0]
    children = {n + step: (m.left, m.right) for step, m in enumerate(merges)}
    order: list[int] = []
    stack = [n + len(merges) - 1]
    while stack:
        node = stack.pop()
        if node < n:
            order.append(node)
        else:
            left, right = children[node]
            stack.append(right)
            stack.append(left)
    return order


@dataclass
class ClusterResult:
    labels: list[str]        # leaf order
    similarity: np.ndarray   # reordered to match labels
    merges: list[Merge]      # over the pre-reorder indices
    ranked_ids: list[str]    # frequency order before clustering


def cluster_similarity(embeddings, occurrence_counts, top_k: int) -> ClusterResult:
    """Cluster the top_k most frequent emojis by embedding similarity.

    Frequency ranking is by descending occurrence count with lexicographic
    ties. Distance for the linkage is 1 - cosine similarity.
    """
    if top_k < 2:
        raise ValueError(f"top_k must be >= 2, got {top_k}")
    known = [e for e in embeddings.ids if e in occurrence_counts]
    ranked = sorted(known, key=lambda e: (-occurrence_counts[e], e))[:top_k]
    if len(ranked) < 2:
        raise ValueError(f"need at least 2 ranked emojis, got {len(ranked)}")
    rows = np.stack([embeddings.get(e) for e in ranked])
    similarity = cosine_matrix(rows)
    merges = average_linkage(1.0 - similarity)
    order = leaf_order(merges, len(ranked))
    reordered = similarity[np.ix_(order, order)]
    return ClusterResult(
        labels=[ranked[i] for i in order],
        similarity=reordered,
        merges=merges,
        ranked_ids=ranked,
    )


def write_similarity_tsv(path, result: ClusterResult):
    """Leaf-ordered similarity matrix as TSV with row and column labels."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("emoji\t" + "\t".join(result.labels) + "\n")
        for label, row in zip(result.labels, result.similarity):
            fh.write(label)
            for value in row:
                fh.write(f"\t{float(value)!r}")
            fh.write("\n")
