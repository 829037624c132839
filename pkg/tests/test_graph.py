import math
from collections import Counter
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from emofuse.graph import (
    binarize_edges,
    build_adjacency,
    build_cooc_graph,
    count_cooccurrences,
    load_graph,
    normalize_adjacency,
    save_graph,
)
from emofuse.senses import load_emojinet, tfidf_sense_vectors
from emofuse.tokenization import tokenize


# --- independent scalar oracles ---------------------------------------------

def brute_force_pairs(texts):
    """Recount pairs with plain loops over raw texts."""
    pairs = Counter()
    for text in texts:
        unique = sorted({t.surface for t in tokenize(text) if t.kind == "emoji"})
        for a, b in combinations(unique, 2):
            pairs[(a, b)] += 1
    return pairs


def brute_force_tfidf(docs):
    """Scalar TF-IDF over {emoji: [terms]} documents."""
    total = len(docs)
    df = {}
    for terms in docs.values():
        for term in set(terms):
            df[term] = df.get(term, 0) + 1
    out = {}
    for key, terms in docs.items():
        vec = {}
        for term in terms:
            vec[term] = vec.get(term, 0) + 1
        out[key] = {t: c * math.log(total / df[t]) for t, c in vec.items()
                    if c * math.log(total / df[t]) != 0.0}
    return out


def brute_force_cosine(a, b):
    dot = 0.0
    for term, weight in a.items():
        if term in b:
            dot += weight * b[term]
    na = math.sqrt(sum(w * w for w in a.values()))
    nb = math.sqrt(sum(w * w for w in b.values()))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


class TestCountCooccurrences:
    def test_three_unique_emojis_form_triangle(self):
        counts = count_cooccurrences([tokenize("\U0001F600 \U0001F622 \U0001F355")])
        assert len(counts.pairs) == 3
        assert all(c == 1 for c in counts.pairs.values())

    def test_repeats_within_post_count_once(self):
        counts = count_cooccurrences([tokenize("\U0001F600 \U0001F600 \U0001F622")])
        assert sum(counts.pairs.values()) == 1

    def test_two_posts_accumulate(self):
        texts = ["\U0001F600 \U0001F622", "\U0001F600 \U0001F622"]
        counts = count_cooccurrences([tokenize(t) for t in texts])
        assert counts.pairs == brute_force_pairs(texts)
        assert list(counts.pairs.values()) == [2]

    def test_single_emoji_posts_register_nodes(self):
        counts = count_cooccurrences([tokenize("just \U0001F600")])
        assert counts.pairs == Counter()
        assert counts.occurrences["\U0001F600"] == 1


@given(st.lists(st.lists(st.sampled_from(["\U0001F600", "\U0001F622", "\U0001F355", "❤"]),
                         min_size=0, max_size=4), min_size=0, max_size=10),
       st.integers(min_value=0, max_value=10))
def test_shard_merge_associativity(posts, cut):
    seqs = [tokenize(" ".join(p)) for p in posts]
    cut = min(cut, len(seqs))
    merged = count_cooccurrences(seqs[:cut]).merge(count_cooccurrences(seqs[cut:]))
    whole = count_cooccurrences(seqs)
    assert merged.pairs == whole.pairs
    assert merged.occurrences == whole.occurrences
    assert merged.posts == whole.posts


class TestBuildAdjacency:
    def test_weight_is_cosine_times_count(self):
        # cosine({x:1}, {x:1, y:sqrt(3)}) = 1/2, count 4 -> weight 2
        vectors = {"a": {"x": 1.0}, "b": {"x": 1.0, "y": math.sqrt(3.0)}}
        a = build_adjacency({("a", "b"): 4}, vectors, ["a", "b"])
        assert a[0, 1] == pytest.approx(2.0, abs=1e-12)
        assert a[1, 0] == a[0, 1]

    def test_never_cooccurring_pair_is_zero(self):
        a = build_adjacency({}, {"a": {"x": 1.0}, "b": {"x": 1.0}}, ["a", "b"])
        assert a[0, 1] == 0.0

    def test_weight_bounded_by_count(self, inventory):
        texts = ["\U0001F600 \U0001F602 fun", "\U0001F600 \U0001F602", "\U0001F622 \U0001F494 sad"]
        counts = count_cooccurrences([tokenize(t) for t in texts])
        vectors = tfidf_sense_vectors(inventory)
        node_ids = sorted(counts.occurrences)
        a = build_adjacency(counts.pairs, vectors, node_ids)
        index = {e: i for i, e in enumerate(node_ids)}
        for (e1, e2), count in counts.pairs.items():
            assert a[index[e1], index[e2]] <= count + 1e-12

    def test_full_matrix_matches_brute_force(self, inventory):
        texts = [
            "\U0001F600 \U0001F602 nice", "\U0001F600 \U0001F622",
            "\U0001F622 \U0001F494 loss", "\U0001F600 \U0001F602 \U0001F494",
            "❤ \U0001F494 ache",
        ]
        counts = count_cooccurrences([tokenize(t) for t in texts])
        node_ids = sorted(counts.occurrences)
        production = build_adjacency(counts.pairs, tfidf_sense_vectors(inventory), node_ids)

        docs = {}
        for e in node_ids:
            entry = inventory.get(e)
            terms = []
            if entry is not None:
                for sense in entry.senses:
                    terms.extend(t.surface for t in tokenize(sense) if t.kind == "word")
            docs[e] = terms
        # oracle idf counts all inventory documents, mirroring production
        all_docs = {}
        for key, entry in inventory.entries.items():
            terms = []
            for sense in entry.senses:
                terms.extend(t.surface for t in tokenize(sense) if t.kind == "word")
            all_docs[key] = terms
        oracle_vectors = brute_force_tfidf(all_docs)
        oracle_pairs = brute_force_pairs(texts)
        n = len(node_ids)
        expected = np.zeros((n, n))
        for (e1, e2), count in oracle_pairs.items():
            i, j = node_ids.index(e1), node_ids.index(e2)
            w = brute_force_cosine(oracle_vectors.get(e1, {}), oracle_vectors.get(e2, {})) * count
            expected[i, j] = expected[j, i] = w
        np.testing.assert_allclose(production, expected, atol=1e-12)


class TestNormalizeAdjacency:
    def test_isolated_node(self):
        np.testing.assert_array_equal(normalize_adjacency(np.zeros((1, 1))), [[1.0]])

    def test_two_connected_nodes(self):
        a = np.array([[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_allclose(normalize_adjacency(a), [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(0)
        a = rng.uniform(0, 2, (5, 5))
        a = (a + a.T) / 2
        np.fill_diagonal(a, 0.0)
        perm = rng.permutation(5)
        direct = normalize_adjacency(a[np.ix_(perm, perm)])
        permuted = normalize_adjacency(a)[np.ix_(perm, perm)]
        np.testing.assert_allclose(direct, permuted, atol=1e-12)

    def test_symmetric_and_bounded(self):
        rng = np.random.default_rng(1)
        a = rng.uniform(0, 3, (6, 6))
        a = (a + a.T) / 2
        np.fill_diagonal(a, 0.0)
        t = normalize_adjacency(a)
        np.testing.assert_allclose(t, t.T, atol=1e-15)
        assert (t >= 0).all() and (t <= 1 + 1e-12).all()


class TestBinarizeEdges:
    def test_positive_weight_becomes_one(self):
        a = np.array([[0.0, 2.37], [2.37, 0.0]])
        binary = binarize_edges(a)
        assert binary[0, 1] == 1.0

    def test_zero_stays_zero_off_diagonal(self):
        binary = binarize_edges(np.zeros((3, 3)))
        assert binary.sum() == 3.0  # diagonal only

    def test_diagonal_is_one(self):
        binary = binarize_edges(np.zeros((4, 4)))
        np.testing.assert_array_equal(np.diag(binary), np.ones(4))


class TestGraphRoundTrip:
    def test_save_load_identity(self, tmp_path, inventory, word_table):
        texts = ["\U0001F600 \U0001F602 fun", "\U0001F622 \U0001F494", "\U0001F600 \U0001F622"]
        counts = count_cooccurrences([tokenize(t) for t in texts])
        graph = build_cooc_graph(counts, inventory, word_table)
        save_graph(graph, tmp_path / "g")
        loaded = load_graph(tmp_path / "g")
        assert loaded.node_ids == graph.node_ids
        assert loaded.pair_counts == graph.pair_counts
        np.testing.assert_array_equal(loaded.adjacency, graph.adjacency)
        np.testing.assert_array_equal(loaded.attributes, graph.attributes)

    def test_min_pair_count_filters(self, inventory, word_table):
        texts = ["\U0001F600 \U0001F602", "\U0001F600 \U0001F602", "\U0001F622 \U0001F494"]
        counts = count_cooccurrences([tokenize(t) for t in texts])
        graph = build_cooc_graph(counts, inventory, word_table, min_pair_count=2)
        assert len(graph.pair_counts) == 1

    def test_unknown_emoji_gets_zero_attributes(self, tmp_path, word_table):
        inv = load_emojinet(write_minimal_inventory(tmp_path))
        counts = count_cooccurrences([tokenize("\U0001F600 \U0001FAE0")])  # second not in inventory
        graph = build_cooc_graph(counts, inv, word_table)
        i = graph.node_ids.index("\U0001FAE0")
        assert not graph.attributes[i].any()
        assert graph.adjacency.sum() == 0.0  # cosine against empty vector


def write_minimal_inventory(tmp_path):
    import json
    path = tmp_path / "mini.json"
    path.write_text(json.dumps([{
        "unicode": "U+1F600", "name": "grin", "shortcode": ":g:",
        "description": "", "keywords": ["happy"], "senses": ["happy (adjective)"],
    }]), encoding="utf-8")
    return path
