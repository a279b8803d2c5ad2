import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import graphs
from simplexsched.topology import (
    EnumerationCapError,
    InterferenceGraph,
    NotIndependentError,
    build_named_graph,
    enumerate_independent_sets,
    independent_set_matrix,
    is_independent,
    max_uniform_rate,
    max_weight_independent_set,
    parse_graph_spec,
)


def brute_force_sets(g):
    return [bits for bits in itertools.product((0, 1), repeat=g.n)
            if all(not (bits[i] and bits[j]) for i, j in g.edges)]


def independence_count(n, edges):
    # I(G) = I(G - v) + I(G - N[v]) on the last vertex
    if n == 0:
        return 1
    v = n - 1
    nbrs = {j for i, j in edges if i == v} | {i for i, j in edges if j == v}

    def drop(keep):
        idx = {old: new for new, old in enumerate(sorted(keep))}
        return len(keep), [(idx[i], idx[j]) for i, j in edges if i in idx and j in idx]

    without = drop(set(range(n)) - {v})
    closed = drop(set(range(n)) - {v} - nbrs)
    return independence_count(*without) + independence_count(*closed)


class TestNamedGraphs:
    def test_star7_edges_all_touch_center(self, star7):
        assert len(star7.edges) == 6
        assert all(0 in e for e in star7.edges)

    def test_ring6_is_cycle(self, ring6):
        one_based = {(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 1)}
        expected = {(min(i, j) - 1, max(i, j) - 1) for i, j in one_based}
        assert ring6.edges == expected

    def test_path3(self, path3):
        assert path3.edges == {(0, 1), (1, 2)}

    @pytest.mark.parametrize("kind,size", [("ring", 2), ("ring", 0), ("star", 0), ("path", 0), ("tree", 4)])
    def test_bad_sizes_rejected(self, kind, size):
        with pytest.raises(ValueError):
            build_named_graph(kind, size)

    def test_parse_spec(self, tmp_path):
        assert parse_graph_spec("ring:6") == build_named_graph("ring", 6)
        f = tmp_path / "g.txt"
        build_named_graph("star", 4).save(f)
        assert parse_graph_spec(str(f)) == build_named_graph("star", 4)
        with pytest.raises(ValueError):
            parse_graph_spec("nonsense")


class TestGraphValidation:
    def test_self_loop(self):
        with pytest.raises(ValueError):
            InterferenceGraph.from_edges(3, [(1, 1)])

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            InterferenceGraph.from_edges(3, [(0, 3)])

    def test_edges_symmetric(self):
        assert InterferenceGraph.from_edges(3, [(2, 0)]).edges == {(0, 2)}

    def test_file_roundtrip_and_comments(self, tmp_path):
        text = "# a triangle\n3\n0 1\n# middle comment\n1 2\n2 0\n"
        g = InterferenceGraph.loads(text)
        assert g.edges == {(0, 1), (1, 2), (0, 2)}
        assert InterferenceGraph.loads(g.dumps()) == g

    @pytest.mark.parametrize("text", ["", "3 4\n", "3\n0\n", "3\n0 1 2\n"])
    def test_malformed_files(self, text):
        with pytest.raises(ValueError):
            InterferenceGraph.loads(text)


class TestIndependence:
    def test_star_leaves(self, star7):
        assert is_independent(star7, [0, 1, 1, 1, 1, 1, 1])

    def test_star_center_and_leaf(self, star7):
        assert not is_independent(star7, [1, 1, 0, 0, 0, 0, 0])

    @given(graphs())
    def test_empty_always_independent(self, g):
        assert is_independent(g, np.zeros(g.n, dtype=int))

    def test_length_mismatch(self, path3):
        with pytest.raises(ValueError):
            is_independent(path3, [1, 0])

    def test_schedule_rejects_conflict(self, path3):
        with pytest.raises(NotIndependentError):
            path3.schedule([1, 1, 0])
        s = path3.schedule_of([0, 2])
        assert s.members == (0, 2) and s.bitstring == "101" and str(s) == "{0,2}"

    @given(graphs(), st.data())
    def test_subsets_of_independent_sets(self, g, data):
        sets = independent_set_matrix(g)
        row = sets[data.draw(st.integers(0, len(sets) - 1))]
        drop = data.draw(st.lists(st.booleans(), min_size=g.n, max_size=g.n))
        assert is_independent(g, row * (1 - np.array(drop, dtype=int)))


class TestEnumeration:
    def test_path3(self, path3):
        sets = {s.members for s in enumerate_independent_sets(path3)}
        assert sets == {(), (0,), (1,), (2,), (0, 2)}

    def test_ring6_count(self, ring6):
        assert len(independent_set_matrix(ring6)) == 18 == len(brute_force_sets(ring6))

    def test_single_link(self):
        g = build_named_graph("path", 1)
        assert [s.members for s in enumerate_independent_sets(g)] == [(), (0,)]

    def test_cap(self):
        with pytest.raises(EnumerationCapError):
            independent_set_matrix(build_named_graph("path", 5), cap=4)

    @given(graphs())
    def test_sorted_as_binary_numbers(self, g):
        rows = independent_set_matrix(g)
        codes = [int("".join(map(str, r)), 2) for r in rows]
        assert codes == sorted(codes)
        assert rows[0].sum() == 0

    @given(graphs())
    def test_matches_brute_force(self, g):
        assert [tuple(r) for r in independent_set_matrix(g).tolist()] == brute_force_sets(g)

    @given(graphs(max_n=9))
    def test_count_matches_independence_polynomial(self, g):
        assert len(independent_set_matrix(g)) == independence_count(g.n, sorted(g.edges))


class TestMaxWeight:
    def test_star_unit(self, star7):
        s = max_weight_independent_set(star7, np.ones(7))
        assert s.members == (1, 2, 3, 4, 5, 6)

    def test_ring_unit_tie_break(self, ring6):
        assert max_weight_independent_set(ring6, np.ones(6)).members == (0, 2, 4)

    def test_star_heavy_center(self, star7):
        assert max_weight_independent_set(star7, [10, 1, 1, 1, 1, 1, 1]).members == (0,)

    def test_length_mismatch(self, path3):
        with pytest.raises(ValueError):
            max_weight_independent_set(path3, [1.0, 2.0])

    def test_negative_weights_give_empty(self, path3):
        assert max_weight_independent_set(path3, [-1.0, -2.0, -0.5]).size == 0

    def test_against_exhaustive_scan(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(1, 13))
            pairs = [p for p in itertools.combinations(range(n), 2) if rng.random() < 0.3]
            g = InterferenceGraph.from_edges(n, pairs)
            w = rng.normal(size=n)
            best = max(np.dot(b, w) for b in brute_force_sets(g))
            s = max_weight_independent_set(g, w)
            assert is_independent(g, s.array())
            assert np.dot(s.array(), w) == pytest.approx(best, abs=1e-12)

    @given(graphs(), st.lists(st.integers(-3, 3), min_size=8, max_size=8))
    def test_ties_pick_largest_vector(self, g, ints):
        w = np.array(ints[: g.n], dtype=float)
        s = max_weight_independent_set(g, w)
        best = max(np.dot(b, w) for b in brute_force_sets(g))
        ties = [b for b in brute_force_sets(g) if np.dot(b, w) == best]
        assert s.bits == max(ties)


class TestMaxUniformRate:
    def test_star7(self, star7):
        assert max_uniform_rate(star7) == pytest.approx(0.5, abs=1e-9)

    def test_ring6(self, ring6):
        assert max_uniform_rate(ring6) == pytest.approx(0.5, abs=1e-9)

    def test_single_link(self):
        assert max_uniform_rate(build_named_graph("path", 1)) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_complete_graph(self, n):
        g = InterferenceGraph.from_edges(n, itertools.combinations(range(n), 2))
        assert max_uniform_rate(g) == pytest.approx(1.0 / n, abs=1e-9)

    @pytest.mark.parametrize("k", [4, 6, 8])
    def test_even_cycles_and_paths(self, k):
        # bipartite graphs with an edge: the two sides alternate
        assert max_uniform_rate(build_named_graph("ring", k)) == pytest.approx(0.5, abs=1e-9)
        assert max_uniform_rate(build_named_graph("path", k)) == pytest.approx(0.5, abs=1e-9)

    def test_odd_cycle(self):
        # fractional chromatic number of C5 is 5/2
        assert max_uniform_rate(build_named_graph("ring", 5)) == pytest.approx(0.4, abs=1e-9)
