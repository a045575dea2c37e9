import numpy as np
import pytest

from emberlink import (
    EmbeddingDictionary,
    PreconditionError,
    Record,
    RetrofitConfig,
    Schema,
    Table,
    build_graph,
    init_oov,
    retrofit,
)
from emberlink.retrofit import CoocGraph, objective


def one_attr_table(*values):
    schema = Schema(attributes=("id", "text"), id_attribute="id")
    return Table(
        schema=schema,
        records=[Record(id=f"r{i}", values=(v,)) for i, v in enumerate(values)],
    )


class TestBuildGraph:
    def test_single_tuple_connects_all_words(self, toy_dictionary, toy_table):
        single = Table(schema=toy_table.schema, records=toy_table.records[:1])
        g = build_graph(single, toy_dictionary)
        assert g.vertices == {"bill", "gates", "seattle"}
        assert len(g.edges) == 3
        assert all(c == 1 for c in g.edges.values())

    def test_counts_accumulate_per_tuple(self, toy_dictionary, toy_table):
        g = build_graph(toy_table, toy_dictionary)
        assert g.edges[frozenset(("gates", "seattle"))] == 2
        assert g.edges[frozenset(("bill", "gates"))] == 1

    def test_oov_detection(self, toy_dictionary):
        g = build_graph(one_attr_table("p53 cancer seattle"), toy_dictionary)
        assert "p53" in g.oov and "cancer" in g.oov
        assert "seattle" not in g.oov

    def test_empty_table_empty_graph(self, toy_dictionary):
        g = build_graph(one_attr_table(), toy_dictionary)
        assert g.vertices == set() and g.edges == {}

    def test_word_in_both_tables(self, toy_dictionary, toy_table):
        g = build_graph([toy_table, toy_table], toy_dictionary)
        assert g.edges[frozenset(("gates", "seattle"))] == 4


class TestInitOov:
    def test_single_known_neighbor(self, toy_dictionary):
        g = build_graph(one_attr_table("newword seattle"), toy_dictionary)
        d2 = init_oov(g, toy_dictionary, init_neighbors=5)
        np.testing.assert_array_equal(d2.lookup("newword"), [0.1, 0.1, 0.2])

    def test_isolated_word_gets_unk(self, toy_dictionary):
        g = build_graph(one_attr_table("lonely"), toy_dictionary)
        d2 = init_oov(g, toy_dictionary)
        np.testing.assert_array_equal(d2.lookup("lonely"), toy_dictionary.unk_vector)

    def test_top_1_by_count(self, toy_dictionary):
        table = one_attr_table("x bill", "x bill", "x bill", "x gates")
        g = build_graph(table, toy_dictionary)
        d2 = init_oov(g, toy_dictionary, init_neighbors=1)
        np.testing.assert_array_equal(d2.lookup("x"), toy_dictionary.lookup("bill"))

    def test_tie_broken_lexicographically(self, toy_dictionary):
        g = build_graph(one_attr_table("x bill", "x gates"), toy_dictionary)
        d2 = init_oov(g, toy_dictionary, init_neighbors=1)
        np.testing.assert_array_equal(d2.lookup("x"), toy_dictionary.lookup("bill"))

    def test_base_dictionary_untouched(self, toy_dictionary):
        g = build_graph(one_attr_table("newword seattle"), toy_dictionary)
        init_oov(g, toy_dictionary)
        assert "newword" not in toy_dictionary


def two_node_setup():
    d = EmbeddingDictionary(
        1, {"a": np.array([0.0]), "b": np.array([2.0])}, np.array([1.0])
    )
    g = CoocGraph(
        vertices={"a", "b"}, edges={frozenset(("a", "b")): 1}, oov=set()
    )
    return d, g


class TestRetrofit:
    def test_zero_iterations_is_identity(self, toy_dictionary, toy_table):
        g = build_graph(toy_table, toy_dictionary)
        out = retrofit(toy_dictionary, g, RetrofitConfig(iterations=0))
        for w in g.vertices:
            np.testing.assert_array_equal(out.lookup(w), toy_dictionary.lookup(w))

    def test_edge_free_graph_is_identity(self, toy_dictionary):
        g = CoocGraph(vertices={"bill", "gates"}, edges={}, oov=set())
        out = retrofit(toy_dictionary, g, RetrofitConfig(iterations=5))
        for w in g.vertices:
            np.testing.assert_array_equal(out.lookup(w), toy_dictionary.lookup(w))

    def test_two_node_hand_example(self):
        d, g = two_node_setup()
        out = retrofit(d, g, RetrofitConfig(alpha=1.0, beta=1.0, iterations=1))
        np.testing.assert_allclose(out.lookup("a"), [1.0], atol=1e-15)
        np.testing.assert_allclose(out.lookup("b"), [1.5], atol=1e-15)

    def test_missing_vector_is_precondition_error(self, toy_dictionary):
        g = CoocGraph(vertices={"bill", "ghost"}, edges={}, oov={"ghost"})
        with pytest.raises(PreconditionError):
            retrofit(toy_dictionary, g, RetrofitConfig())

    def _random_instance(self, seed, n_words=30, dim=5):
        rng = np.random.default_rng(seed)
        words = [f"w{i:02d}" for i in range(n_words)]
        entries = {w: rng.standard_normal(dim) for w in words}
        d = EmbeddingDictionary(dim, entries, np.zeros(dim))
        edges = {}
        for _ in range(60):
            a, b = rng.choice(n_words, size=2, replace=False)
            key = frozenset((words[a], words[b]))
            edges[key] = edges.get(key, 0) + int(rng.integers(1, 4))
        g = CoocGraph(vertices=set(words), edges=edges, oov=set())
        return d, g

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_objective_non_increasing_per_sweep(self, seed):
        # k sweeps from the same start retrace one descent trajectory, so
        # psi after k sweeps must be non-increasing in k
        d, g = self._random_instance(seed)
        cfg = RetrofitConfig(alpha=1.0, beta=0.7)
        anchors = {w: d.lookup(w) for w in g.vertices}
        psis = []
        for k in range(11):
            out = retrofit(d, g, RetrofitConfig(alpha=1.0, beta=0.7, iterations=k))
            psis.append(
                objective({w: out.lookup(w) for w in g.vertices}, anchors, g, cfg)
            )
        for prev, nxt in zip(psis, psis[1:]):
            assert nxt <= prev + 1e-9

    def test_fixed_point_idempotence(self):
        d, g = self._random_instance(7)
        settled = retrofit(d, g, RetrofitConfig(iterations=200))
        one_more_sweep = retrofit(d, g, RetrofitConfig(iterations=201))
        for w in g.vertices:
            assert np.max(np.abs(one_more_sweep.lookup(w) - settled.lookup(w))) < 1e-9

    def test_isolated_vertex_never_moves(self, toy_dictionary):
        g = CoocGraph(
            vertices={"bill", "gates", "seattle"},
            edges={frozenset(("bill", "gates")): 3},
            oov=set(),
        )
        out = retrofit(toy_dictionary, g, RetrofitConfig(iterations=25))
        np.testing.assert_array_equal(out.lookup("seattle"), [0.1, 0.1, 0.2])

    def test_nongraph_words_unchanged(self, toy_dictionary):
        g = CoocGraph(vertices={"bill"}, edges={}, oov=set())
        out = retrofit(toy_dictionary, g, RetrofitConfig(iterations=3))
        np.testing.assert_array_equal(out.lookup("william"), toy_dictionary.lookup("william"))
