import itertools

import numpy as np
import pytest

from emberlink import (
    ContractError,
    IntegrityError,
    LshConfig,
    TuningGoal,
    block_pairs,
    build_index,
    candidates_multiprobe,
    hash_code,
    sample_hyperplanes,
    topn_filter,
    tune_params,
)
from emberlink.blocking import (
    HyperplaneFamily,
    load_index,
    pack_code,
    save_index,
)

EXAMPLE_PLANES = np.array(
    [[-1, 1, 1], [1, 1, 1], [-1, -1, 1], [-1, 1, -1]], dtype=float
)


def random_vectors(n, dim, seed):
    rng = np.random.default_rng(seed)
    return {f"v{i:04d}": rng.standard_normal(dim) for i in range(n)}


def brute_force_pairs(index, left, right=None):
    """Oracle: recompute every tuple's codes directly and enumerate
    bucket collisions across all tables."""
    out = set()
    normals = index.family.normals
    if right is None:
        items = sorted(left.items())
        for (ida, va), (idb, vb) in itertools.combinations(items, 2):
            for t in range(normals.shape[0]):
                if np.array_equal(hash_code(va, normals[t]), hash_code(vb, normals[t])):
                    out.add(tuple(sorted((ida, idb))))
                    break
    else:
        for ida, va in left.items():
            for idb, vb in right.items():
                for t in range(normals.shape[0]):
                    if np.array_equal(
                        hash_code(va, normals[t]), hash_code(vb, normals[t])
                    ):
                        out.add((ida, idb))
                        break
    return out


class TestHyperplanes:
    def test_deterministic_per_seed(self):
        a = sample_hyperplanes(5, 4, 3, seed=11)
        b = sample_hyperplanes(5, 4, 3, seed=11)
        np.testing.assert_array_equal(a.normals, b.normals)

    def test_different_seed_differs(self):
        a = sample_hyperplanes(5, 4, 3, seed=11)
        b = sample_hyperplanes(5, 4, 3, seed=12)
        assert not np.allclose(a.normals, b.normals)

    def test_unit_norms(self):
        fam = sample_hyperplanes(16, 8, 4, seed=0)
        np.testing.assert_allclose(
            np.linalg.norm(fam.normals, axis=2), 1.0, atol=1e-9
        )

    def test_collision_law_at_known_angles(self):
        # single-bit collision probability for vectors at angle theta is
        # 1 - theta/pi; checked by Monte Carlo over many sampled planes
        n_planes = 20000
        planes = sample_hyperplanes(3, 1, n_planes, seed=123).normals[:, 0, :]
        for theta in (np.pi / 6, np.pi / 4, np.pi / 2, 3 * np.pi / 4):
            u = np.array([1.0, 0.0, 0.0])
            v = np.array([np.cos(theta), np.sin(theta), 0.0])
            su = (planes @ u) >= 0
            sv = (planes @ v) >= 0
            rate = float(np.mean(su == sv))
            assert abs(rate - (1 - theta / np.pi)) <= 0.02


class TestHashCode:
    def test_worked_example_both_tuples(self, toy_dictionary, toy_records):
        from emberlink import compose_avg

        v1 = compose_avg(toy_records[0], toy_dictionary).attribute_slice(0)
        v2 = compose_avg(toy_records[1], toy_dictionary).attribute_slice(0)
        np.testing.assert_array_equal(hash_code(v1, EXAMPLE_PLANES), [1, 1, -1, -1])
        np.testing.assert_array_equal(hash_code(v2, EXAMPLE_PLANES), [1, 1, -1, -1])

    def test_antisymmetric_without_zero_dots(self):
        rng = np.random.default_rng(0)
        planes = rng.standard_normal((6, 4))
        v = rng.standard_normal(4)
        np.testing.assert_array_equal(hash_code(v, planes), -hash_code(-v, planes))

    def test_zero_vector_all_plus_one(self):
        planes = np.eye(3)
        np.testing.assert_array_equal(hash_code(np.zeros(3), planes), [1, 1, 1])

    def test_dimension_mismatch(self):
        with pytest.raises(ContractError):
            hash_code(np.ones(3), np.ones((2, 4)))


class TestBuildIndex:
    def test_empty_input_gives_empty_tables(self):
        idx = build_index({}, LshConfig(k=4, l=3, seed=0))
        assert len(idx.buckets) == 3
        assert all(not t for t in idx.buckets)
        assert block_pairs(idx) == []

    def test_identical_drs_share_every_bucket(self):
        v = np.array([1.0, -2.0, 0.5])
        idx = build_index({"a": v, "b": v.copy()}, LshConfig(k=6, l=4, seed=1))
        for t in range(4):
            assert idx.left_codes[t][0] == idx.left_codes[t][1]

    def test_worked_example_same_bucket(self, toy_dictionary, toy_records):
        from emberlink import compose_avg

        normals = EXAMPLE_PLANES / np.linalg.norm(EXAMPLE_PLANES, axis=1, keepdims=True)
        fam = HyperplaneFamily(dimension=3, normals=normals[None, :, :], seed=0)
        drs = {
            r.id: compose_avg(r, toy_dictionary).attribute_slice(0)
            for r in toy_records
        }
        idx = build_index(drs, LshConfig(k=4, l=1, seed=0), family=fam)
        assert block_pairs(idx) == [("t1", "t2")]

    def test_dimension_drift_rejected(self):
        with pytest.raises(IntegrityError):
            build_index({"a": np.ones(3), "b": np.ones(4)}, LshConfig(k=2, l=1))

    def test_each_tuple_in_one_bucket_per_table(self):
        drs = random_vectors(50, 8, seed=5)
        idx = build_index(drs, LshConfig(k=3, l=4, seed=2))
        for table in idx.buckets:
            rows = np.concatenate([lrows for lrows, _ in table.values()])
            assert sorted(rows.tolist()) == list(range(50))

    def test_occupancy_histogram_accounts_for_all(self):
        drs = random_vectors(64, 8, seed=6)
        idx = build_index(drs, LshConfig(k=4, l=2, seed=3))
        for hist in idx.occupancy():
            assert sum(size * count for size, count in hist.items()) == 64


class TestBlockPairs:
    def test_single_bucket_combinatorics(self):
        v = np.array([1.0, 1.0])
        idx = build_index(
            {"a": v, "b": v + 1e-9, "c": v + 2e-9}, LshConfig(k=2, l=1, seed=0)
        )
        assert block_pairs(idx) == [("a", "b"), ("a", "c"), ("b", "c")]

    def test_pair_in_many_tables_emitted_once(self):
        v = np.array([0.5, 0.25, -1.0])
        idx = build_index({"a": v, "b": v.copy()}, LshConfig(k=2, l=5, seed=1))
        assert block_pairs(idx) == [("a", "b")]

    def test_no_self_pairs_and_no_duplicates(self):
        drs = random_vectors(40, 4, seed=7)
        pairs = block_pairs(build_index(drs, LshConfig(k=2, l=3, seed=4)))
        assert len(pairs) == len(set(pairs))
        assert all(a != b for a, b in pairs)

    def test_matches_brute_force_single_table(self):
        drs = random_vectors(100, 6, seed=8)
        idx = build_index(drs, LshConfig(k=1, l=1, seed=5))
        assert set(block_pairs(idx)) == brute_force_pairs(idx, drs)

    @pytest.mark.parametrize("k,l", [(1, 1), (3, 2), (6, 4)])
    def test_matches_brute_force_two_sided(self, k, l):
        left = random_vectors(60, 6, seed=9)
        right = {f"r{i}": v for i, v in enumerate(random_vectors(70, 6, seed=10).values())}
        idx = build_index(left, LshConfig(k=k, l=l, seed=6), right=right)
        assert set(block_pairs(idx)) == brute_force_pairs(idx, left, right)

    def test_cross_side_only(self):
        v = np.ones(3)
        idx = build_index(
            {"a": v, "b": v.copy()},
            LshConfig(k=2, l=1, seed=0),
            right={"x": v.copy()},
        )
        assert block_pairs(idx) == [("a", "x"), ("b", "x")]

    def test_adding_a_table_never_removes_pairs(self):
        drs = random_vectors(80, 6, seed=11)
        base = sample_hyperplanes(6, 3, 4, seed=77)
        small = HyperplaneFamily(dimension=6, normals=base.normals[:3], seed=77)
        idx_small = build_index(drs, LshConfig(k=3, l=3, seed=77), family=small)
        idx_big = build_index(drs, LshConfig(k=3, l=4, seed=77), family=base)
        assert set(block_pairs(idx_small)) <= set(block_pairs(idx_big))


class TestMultiprobe:
    def make_index(self, n=120, dim=6, k=4, l=2, seed=12):
        drs = random_vectors(n, dim, seed=seed)
        return drs, build_index(drs, LshConfig(k=k, l=l, seed=seed))

    def test_radius_zero_is_own_buckets(self):
        drs, idx = self.make_index()
        for qid in list(drs)[:10]:
            got = candidates_multiprobe(idx, drs[qid], 0, exclude_id=qid)
            expected = set()
            for t in range(idx.config.l):
                code = pack_code(hash_code(drs[qid], idx.family.normals[t]))
                lrows, _ = idx.buckets[t].get(code, (np.zeros(0, int), None))
                expected.update(idx.left_ids[r] for r in lrows)
            expected.discard(qid)
            assert got == expected

    def test_radius_k_reaches_everyone(self):
        drs, idx = self.make_index(n=40)
        qid = "v0000"
        got = candidates_multiprobe(idx, drs[qid], idx.config.k, exclude_id=qid)
        assert got == set(drs) - {qid}

    def test_monotone_in_radius(self):
        drs, idx = self.make_index()
        for qid in list(drs)[:20]:
            prev: set = set()
            for radius in range(idx.config.k + 1):
                cur = candidates_multiprobe(idx, drs[qid], radius, exclude_id=qid)
                assert prev <= cur
                prev = cur

    def test_radius_above_k_rejected(self):
        drs, idx = self.make_index()
        with pytest.raises(ContractError):
            candidates_multiprobe(idx, drs["v0000"], idx.config.k + 1)

    def test_side_filter(self):
        left = {"a": np.ones(3)}
        right = {"x": np.ones(3), "y": -np.ones(3)}
        idx = build_index(left, LshConfig(k=1, l=1, seed=3), right=right)
        got = candidates_multiprobe(idx, np.ones(3), 0, side="right")
        assert got == {"x"}


class TestTopN:
    def test_all_returned_when_few(self):
        q = np.array([1.0, 0.0])
        cands = [("b", np.array([0.9, 0.1])), ("a", np.array([1.0, 0.05]))]
        assert topn_filter(q, cands, 10) == ["a", "b"]

    def test_exact_duplicate_ranks_first(self):
        q = np.array([0.3, -0.7])
        cands = [("far", np.array([-1.0, 1.0])), ("dup", q * 2.0)]
        assert topn_filter(q, cands, 1) == ["dup"]

    def test_ties_broken_by_ascending_id(self):
        q = np.array([1.0, 0.0])
        v = np.array([1.0, 0.0])
        assert topn_filter(q, [("z", v), ("m", v * 3)], 2) == ["m", "z"]

    def test_top1_equals_brute_force(self):
        rng = np.random.default_rng(13)
        q = rng.standard_normal(8)
        cands = [(f"c{i}", rng.standard_normal(8)) for i in range(50)]
        got = topn_filter(q, cands, 1)
        best = max(
            cands,
            key=lambda cv: (cv[1] @ q / (np.linalg.norm(cv[1]) * np.linalg.norm(q)), ),
        )
        assert got == [best[0]]


class TestTuneParams:
    def test_worked_tuning(self):
        assert tune_params(TuningGoal(p1=0.95, p2=0.5, n=2616)) == (12, 2)

    def test_hand_evaluated_case(self):
        assert tune_params(TuningGoal(p1=0.9, p2=0.5, n=1000)) == (10, 3)

    def test_degenerate_n(self):
        assert tune_params(TuningGoal(p1=0.9, p2=0.5, n=1)) == (1, 1)

    def test_limit_p1_to_p2(self):
        k, l = tune_params(TuningGoal(p1=0.5 + 1e-9, p2=0.5, n=500))
        assert l == 500  # rho -> 1 so L -> n

    def test_p1_not_above_p2_rejected(self):
        with pytest.raises(ContractError):
            TuningGoal(p1=0.5, p2=0.5, n=10)
        with pytest.raises(ContractError):
            TuningGoal(p1=0.4, p2=0.5, n=10)


class TestPersistence:
    def test_round_trip_same_buckets(self, tmp_path):
        left = random_vectors(30, 5, seed=14)
        right = random_vectors(25, 5, seed=15)
        idx = build_index(left, LshConfig(k=4, l=3, seed=9), right=right)
        path = str(tmp_path / "index.npz")
        save_index(idx, path)
        again = load_index(path)
        assert again.left_ids == idx.left_ids
        assert again.right_ids == idx.right_ids
        np.testing.assert_array_equal(again.left_codes, idx.left_codes)
        assert set(block_pairs(again)) == set(block_pairs(idx))
        for t in range(3):
            assert set(again.buckets[t]) == set(idx.buckets[t])
