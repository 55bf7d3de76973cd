"""Heuristic layer: candidate scoring, row selection, annealing, extraction."""

import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photonclust.biclustering import (
    EMPTY_COST,
    AnnealSchedule,
    Bicluster,
    bs_bicluster_main,
    evaluate_candidate,
    find_bicluster_sa,
    gbs_bicluster_main,
    get_rows,
    pad_rectangular,
    shrink_columns,
    success_counts,
    success_estimate,
)
from photonclust.numerics import sigma_max


def naive_permanent(M):
    n = M.shape[0]
    return sum(
        np.prod([M[i, p[i]] for i in range(n)]) for p in itertools.permutations(range(n))
    )


class TestEvaluateCandidate:
    def test_all_ones_2x2(self):
        ones = np.ones((2, 2))
        assert evaluate_candidate(ones, "permanent") == 2.0
        assert evaluate_candidate(ones, "frobenius_norm") == 2.0
        assert evaluate_candidate(ones, "mean_value") == 1.0

    def test_permanent_matches_naive(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            M = rng.uniform(0, 1, (4, 4))
            got = evaluate_candidate(M, "permanent")
            assert got == pytest.approx(float(naive_permanent(M)), rel=1e-9)

    def test_rejections(self):
        with pytest.raises(ValueError, match="square"):
            evaluate_candidate(np.ones((2, 3)), "permanent")
        with pytest.raises(ValueError, match="empty"):
            evaluate_candidate(np.zeros((0, 0)), "mean_value")
        with pytest.raises(ValueError, match="unknown cost"):
            evaluate_candidate(np.ones((2, 2)), "determinant")

    @given(st.floats(0.1, 10.0))
    @settings(max_examples=25, deadline=None)
    def test_scaling_preserves_ranking(self, alpha):
        rng = np.random.default_rng(9)
        mats = [rng.uniform(0, 1, (3, 3)) for _ in range(4)]
        for kind, power in (("permanent", 3), ("frobenius_norm", 1), ("mean_value", 1)):
            base = [evaluate_candidate(M, kind) for M in mats]
            scaled = [evaluate_candidate(alpha * M, kind) for M in mats]
            assert np.argmax(base) == np.argmax(scaled)
            for s, b in zip(scaled, base):
                assert s == pytest.approx(alpha**power * b, rel=1e-9)


class TestAnnealSchedule:
    def test_exact_decade_steps(self):
        temps = AnnealSchedule(t0=100.0, tf=0.01, steps=4).temperatures()
        assert np.allclose(temps, [100.0, 10.0, 1.0, 0.1], rtol=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            AnnealSchedule(t0=0.01, tf=100.0, steps=5)
        with pytest.raises(ValueError):
            AnnealSchedule(t0=1.0, tf=-1.0, steps=5)
        with pytest.raises(ValueError):
            AnnealSchedule(steps=0)

    def test_defaults(self):
        sched = AnnealSchedule()
        temps = sched.temperatures()
        assert len(temps) == 200
        assert temps[0] == 100.0
        assert np.all(np.diff(temps) < 0)


def planted_binary(d, rows, cols):
    M = np.zeros((d, d))
    M[np.ix_(rows, cols)] = 1.0
    return M


class TestGetRows:
    def test_planted_block_exact_and_sampled(self):
        D = planted_binary(12, range(3, 9), range(3, 9))
        D_s = D / sigma_max(D)
        block_cols = tuple(range(3, 9))
        rows, diag = get_rows(D_s, block_cols, num_samples=0, exact=True)
        assert rows == tuple(range(3, 9))
        assert diag["tau"] == 1
        rows_s, diag_s = get_rows(D_s, block_cols, num_samples=2000, seed=3)
        assert rows_s == tuple(range(3, 9))
        assert not diag_s["empty"]

    def test_all_zero_columns_give_empty(self):
        D = planted_binary(12, range(3, 9), range(3, 9))
        D_s = D / sigma_max(D)
        for exact in (True, False):
            rows, diag = get_rows(D_s, (0, 1, 2), num_samples=500, seed=1, exact=exact)
            assert rows == ()
            assert diag["empty"]
            assert diag["tau"] is None

    def test_identity_routes_photons_straight_through(self):
        rows, _ = get_rows(np.eye(4), (1, 2), num_samples=0, exact=True)
        assert rows == (1, 2)
        rows_s, _ = get_rows(np.eye(4), (1, 2), num_samples=50, seed=7)
        assert rows_s == (1, 2)

    def test_tau_escalation(self):
        # rows 0 and 1 only; three photons must bunch, so tau=1 never survives
        D_s = np.array([[0.6, 0.6, 0.0], [0.0, 0.0, 0.6], [0.0, 0.0, 0.0]])
        rows, diag = get_rows(D_s, (0, 1, 2), num_samples=0, exact=True)
        assert rows == (0, 1)
        assert diag["tau"] == 2
        rows_s, diag_s = get_rows(D_s, (0, 1, 2), num_samples=300, seed=11)
        assert rows_s == (0, 1)
        assert diag_s["tau"] == 2

    def test_cache_reuse(self):
        cache = {}
        D_s = np.eye(3)
        first, _ = get_rows(D_s, (0, 1), num_samples=0, exact=True, cache=cache)
        assert len(cache) == 1
        again, _ = get_rows(D_s, (1, 0), num_samples=0, exact=True, cache=cache)
        assert len(cache) == 1
        assert first == again

    def test_determinism(self):
        D = planted_binary(8, range(2, 5), range(2, 5))
        D_s = D / sigma_max(D)
        a = get_rows(D_s, (2, 3, 4), num_samples=400, seed=5)
        b = get_rows(D_s, (2, 3, 4), num_samples=400, seed=5)
        assert a == b


class TestShrinkColumns:
    def test_square_unchanged(self):
        cols, beta = shrink_columns((0, 1, 2), (0, 1, 2), np.eye(3))
        assert cols == (0, 1, 2)
        assert np.array_equal(beta, np.eye(3))

    def test_drops_lowest_norm(self):
        D = np.array([[0.9, 0.1, 0.8], [0.0, 0.0, 0.0]])
        cols, beta = shrink_columns((0, 1, 2), (0, 1), D)
        assert cols == (0, 2)
        assert np.array_equal(beta, np.array([[0.9, 0.8], [0.0, 0.0]]))

    def test_tie_drops_lowest_index(self):
        D = np.ones((2, 3)) * 0.5
        cols, _ = shrink_columns((0, 1, 2), (0,), D)
        assert cols == (2,)

    def test_protected_columns_survive(self):
        D = np.array([[0.2, 0.1, 0.3]])
        cols, _ = shrink_columns((0, 1, 2), (0,), D, protected={1})
        assert cols == (1,)

    def test_rejections(self):
        with pytest.raises(ValueError, match="empty row set"):
            shrink_columns((0, 1), (), np.eye(2))
        with pytest.raises(ValueError, match="more rows"):
            shrink_columns((0,), (0, 1), np.eye(2))
        with pytest.raises(ValueError, match="unprotected"):
            shrink_columns((0, 1), (0,), np.eye(2), protected={0, 1})


class TestFindBiclusterSA:
    def test_lone_block_always_found(self):
        # any column set missing the block hits an all-zero column, which
        # strands every photon in the auxiliary modes: cost -1000
        D_s = 0.5 * planted_binary(4, (1, 2), (1, 2))
        sched = AnnealSchedule(steps=30)
        for seed in (0, 1, 2):
            bic = find_bicluster_sa(D_s, b=2, num_samples=0, schedule=sched,
                                    seed=seed, exact=True)
            assert bic.rows == (1, 2)
            assert bic.cols == (1, 2)
            assert bic.cost == pytest.approx(0.5, rel=1e-12)
            assert np.array_equal(bic.values, np.full((2, 2), 0.5))

    def test_trace_records_every_step(self, tmp_path):
        D = planted_binary(4, (1, 2), (1, 2))
        D_s = D / sigma_max(D)
        trace = tmp_path / "trace.jsonl"
        find_bicluster_sa(D_s, b=2, num_samples=0, schedule=AnnealSchedule(steps=12),
                          seed=3, exact=True, trace=str(trace))
        records = [json.loads(line) for line in trace.read_text().splitlines()]
        assert len(records) == 12
        for rec in records:
            assert set(rec) == {"step", "temperature", "cols", "rows", "cost",
                                "accepted", "tau"}
        temps = [rec["temperature"] for rec in records]
        assert temps == sorted(temps, reverse=True)

    def test_no_downhill_acceptance_at_tiny_temperature(self, tmp_path):
        # mild noise floor gives the landscape several cost levels
        rng = np.random.default_rng(0)
        D = rng.uniform(0.0, 0.3, (6, 6))
        D[np.ix_((0, 1), (0, 1))] = 0.9
        D_s = D / sigma_max(D)
        trace = tmp_path / "cold.jsonl"
        sched = AnnealSchedule(t0=1e-6, tf=1e-9, steps=40)
        find_bicluster_sa(D_s, b=2, num_samples=0, schedule=sched, seed=1,
                          exact=True, trace=str(trace))
        current = 0.0
        for rec in map(json.loads, trace.read_text().splitlines()):
            delta = rec["cost"] - current
            if rec["accepted"]:
                assert delta > 0
                current = rec["cost"]

    def test_uphill_always_accepted(self, tmp_path):
        D = planted_binary(5, (0, 1), (0, 1))
        D_s = D / sigma_max(D)
        trace = tmp_path / "t.jsonl"
        find_bicluster_sa(D_s, b=2, num_samples=0, schedule=AnnealSchedule(steps=25),
                          seed=9, exact=True, trace=str(trace))
        current = 0.0
        for rec in map(json.loads, trace.read_text().splitlines()):
            if rec["cost"] > current:
                assert rec["accepted"]
            if rec["accepted"]:
                current = rec["cost"]

    def test_returns_best_accepted_not_last(self, tmp_path):
        rng = np.random.default_rng(4)
        D = rng.uniform(0.0, 0.4, (6, 6))
        D[np.ix_((2, 3), (2, 3))] = 0.95
        D_s = D / sigma_max(D)
        trace = tmp_path / "best.jsonl"
        bic = find_bicluster_sa(D_s, b=2, num_samples=0,
                                schedule=AnnealSchedule(steps=60), seed=2,
                                exact=True, trace=str(trace))
        accepted = [rec["cost"] for rec in map(json.loads, trace.read_text().splitlines())
                    if rec["accepted"]]
        assert accepted
        assert bic.cost == pytest.approx(max(accepted), rel=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError, match="outside"):
            find_bicluster_sa(np.eye(3), b=4, num_samples=10)
        with pytest.raises(ValueError, match="unknown cost"):
            find_bicluster_sa(np.eye(3), b=2, num_samples=10, cost_fn="nope")
        with pytest.raises(ValueError, match="anchors"):
            find_bicluster_sa(np.eye(3), b=1, num_samples=10, anchored_cols=(0,))


class TestMainLoop:
    def test_single_bicluster_and_ledger(self):
        # seed chosen so the column walk reaches the block: with all-zero
        # columns around, a start disjoint from it has nowhere to move
        D = planted_binary(4, (1, 2), (1, 2))
        found, ledger = bs_bicluster_main(D, b=2, k=1, num_samples=0,
                                          schedule=AnnealSchedule(steps=25),
                                          seed=2, exact=True)
        assert len(found) == 1
        assert found[0].rows == (1, 2)
        assert sorted(ledger) == [(1, 1), (1, 2), (2, 1), (2, 2)]

    def test_two_disjoint_blocks_recovered(self):
        D = np.zeros((6, 6))
        D[np.ix_((0, 1), (0, 1))] = 0.9
        D[np.ix_((3, 4), (3, 4))] = 0.8
        found, ledger = bs_bicluster_main(D, b=2, k=2, num_samples=0,
                                          schedule=AnnealSchedule(steps=60),
                                          seed=1, exact=True)
        got = {(bic.rows, bic.cols) for bic in found}
        assert got == {((0, 1), (0, 1)), ((3, 4), (3, 4))}
        assert len(ledger) == 8
        assert len(set(ledger)) == 8

    def test_rerun_never_overlaps_ledger(self):
        # background noise keeps every column set viable, so the walk always
        # mixes; three planted blocks, find two, then rerun on the residual
        rng = np.random.default_rng(8)
        D = rng.uniform(0.0, 0.1, (8, 8))
        for i, v in zip((0, 3, 6), (0.9, 0.85, 0.8)):
            D[np.ix_((i, i + 1), (i, i + 1))] = v
        blocks = {((0, 1), (0, 1)), ((3, 4), (3, 4)), ((6, 7), (6, 7))}
        found, ledger = bs_bicluster_main(D, b=2, k=2, num_samples=0,
                                          schedule=AnnealSchedule(steps=60),
                                          seed=1, exact=True)
        assert len(found) == 2
        got = {(bic.rows, bic.cols) for bic in found}
        assert got <= blocks
        residual = D.copy()
        for r, c in ledger:
            residual[r, c] = 0.0
        again, _ = bs_bicluster_main(residual, b=2, k=1, num_samples=0,
                                     schedule=AnnealSchedule(steps=60),
                                     seed=11, exact=True)
        assert len(again) == 1
        assert (again[0].rows, again[0].cols) in blocks - got
        for r in again[0].rows:
            for c in again[0].cols:
                assert (r, c) not in set(ledger)

    def test_termination_short_circuits(self):
        D = planted_binary(4, (1, 2), (1, 2))
        found, ledger = bs_bicluster_main(D, b=2, k=3, num_samples=0,
                                          schedule=AnnealSchedule(steps=5),
                                          termination=lambda found: True,
                                          seed=0, exact=True)
        assert found == []
        assert ledger == []

    def test_all_zero_matrix(self):
        found, ledger = bs_bicluster_main(np.zeros((4, 4)), b=2, k=1, num_samples=0,
                                          exact=True)
        assert (found, ledger) == ([], [])


class TestPadRectangular:
    def test_pad_two_columns(self):
        D = np.random.default_rng(0).uniform(0, 1, (5, 5))
        padded = pad_rectangular(D, b1=4, b2=2)
        assert padded.values.shape == (5, 7)
        assert padded.d1 == 5 and padded.d2 == 7
        assert not padded.transpose_flag
        assert padded.anchored_cols == (5, 6)
        assert np.array_equal(padded.values[:, 5:], np.ones((5, 2)))
        assert np.array_equal(padded.values[:, :5], D)

    def test_transpose_branch(self):
        D = np.random.default_rng(1).uniform(0, 1, (3, 5))
        padded = pad_rectangular(D, b1=2, b2=4)
        assert padded.transpose_flag
        assert padded.values.shape == (5, 5)
        assert padded.anchored_cols == (3, 4)
        assert np.array_equal(padded.values[:, :3], D.T)

    def test_square_request_unchanged(self):
        D = np.random.default_rng(2).uniform(0, 1, (4, 4))
        padded = pad_rectangular(D, b1=3, b2=3)
        assert np.array_equal(padded.values, D)
        assert padded.anchored_cols == ()
        assert not padded.transpose_flag

    def test_validation(self):
        with pytest.raises(ValueError):
            pad_rectangular(np.eye(3), b1=0, b2=1)


class TestAnchoredSearch:
    def test_rectangular_block_found_with_anchors(self, tmp_path):
        # 3 x 2 block of high values; one all-ones anchor column makes the
        # candidate square (b = 3)
        D = np.zeros((5, 5))
        D[np.ix_((0, 1, 2), (0, 1))] = 0.9
        padded = pad_rectangular(D, b1=3, b2=2)
        D_s = padded.values / sigma_max(padded.values)
        trace = tmp_path / "anchored.jsonl"
        bic = find_bicluster_sa(D_s, b=3, num_samples=0,
                                schedule=AnnealSchedule(steps=60), seed=0,
                                anchored_cols=padded.anchored_cols, exact=True,
                                trace=str(trace))
        anchor = padded.anchored_cols[0]
        for rec in map(json.loads, trace.read_text().splitlines()):
            assert anchor in rec["cols"]
        assert bic.rows == (0, 1, 2)
        assert bic.cols == (0, 1)
        assert anchor not in bic.cols
        assert bic.values.shape == (3, 2)


class TestGBSMain:
    def two_block_binary(self):
        D = np.zeros((6, 6))
        D[np.ix_((0, 1, 2), (0, 1, 2))] = 1.0
        D[np.ix_((3, 4, 5), (3, 4, 5))] = 1.0
        return D

    def test_two_blocks_extracted(self):
        D = self.two_block_binary()
        found, ledger = gbs_bicluster_main(D, k=2, nbar_target=4.0, num_samples=1500,
                                           accept_threshold=0.9, min_dims=3, seed=0)
        assert len(found) == 2
        got = {(bic.rows, bic.cols) for bic in found}
        assert got == {((0, 1, 2), (0, 1, 2)), ((3, 4, 5), (3, 4, 5))}
        assert len(ledger) == len(set(ledger)) == 18
        for bic in found:
            assert bic.cost == pytest.approx(1.0)
            assert bic.cost_fn == "mean_value"

    def test_rectangular_candidate_permanent_cost(self):
        # seed 11 with defaults surfaces a 2x3 first hit; the permanent must
        # score its ones-padded square instead of raising
        D = self.two_block_binary()
        found, _ = gbs_bicluster_main(D, k=2, nbar_target=4.0, num_samples=1200,
                                      cost_fn="permanent", seed=11)
        assert found
        saw_rect = False
        for bic in found:
            beta = bic.values
            if beta.shape[0] != beta.shape[1]:
                saw_rect = True
                wide = beta.T if beta.shape[1] > beta.shape[0] else beta
                r, c = wide.shape
                padded = np.hstack([wide, np.ones((r, r - c))])
                assert bic.cost == pytest.approx(float(naive_permanent(padded)))
            else:
                assert bic.cost == pytest.approx(float(naive_permanent(beta)))
            assert bic.cost_fn == "permanent"
        assert saw_rect

    def test_threshold_too_high_yields_nothing(self):
        D = np.full((4, 4), 0.3)
        found, ledger = gbs_bicluster_main(D, k=1, nbar_target=2.0, num_samples=200,
                                           accept_threshold=0.99, min_dims=2, seed=1)
        assert found == [] and ledger == []

    def test_all_zero_matrix(self):
        found, ledger = gbs_bicluster_main(np.zeros((4, 4)), k=1, nbar_target=2.0,
                                           num_samples=100, seed=0)
        assert (found, ledger) == ([], [])

    def test_range_validation(self):
        with pytest.raises(ValueError, match="lie in"):
            gbs_bicluster_main(np.full((3, 3), 1.5), k=1, nbar_target=2.0,
                               num_samples=10)

    def test_determinism(self):
        D = self.two_block_binary()
        a = gbs_bicluster_main(D, k=1, nbar_target=4.0, num_samples=800,
                               accept_threshold=0.9, min_dims=3, seed=5)
        b = gbs_bicluster_main(D, k=1, nbar_target=4.0, num_samples=800,
                               accept_threshold=0.9, min_dims=3, seed=5)
        assert a[0][0].rows == b[0][0].rows and a[0][0].cols == b[0][0].cols


class TestSuccessEstimate:
    def test_exact_rows_ratio(self):
        truth = Bicluster((0, 1), (0, 1), np.ones((2, 2)), 1.0, "permanent")
        match = [1, 1, 0, 0]
        survive_miss = [1, 0, 0, 0]
        rejected = [0, 0, 1, 0]
        samples = np.array([match] * 219 + [survive_miss] * 26 + [rejected] * 700)
        num, den = success_counts(samples, truth, "exact_rows_tau1", d1=2)
        assert (num, den) == (219, 245)
        assert success_estimate(samples, truth, "exact_rows_tau1", d1=2) == pytest.approx(
            219 / 245
        )

    def test_all_match(self):
        truth = ((0, 2), ())
        samples = np.array([[1, 0, 1, 0, 0]] * 10)
        assert success_estimate(samples, truth, "exact_rows_tau1", d1=3) == 1.0

    def test_subset_mode_counts_partial_hits(self):
        truth = ((0, 1), ())
        inside = [2, 1, 0, 0]     # occupied {0,1}, subset holds
        partial = [3, 0, 0, 0]    # occupied {0}, still a subset
        outside = [1, 1, 1, 0]    # touches row 2
        too_many = [4, 0, 0, 0]   # fails tau=3
        samples = np.array([inside, partial, outside, too_many])
        num, den = success_counts(samples, truth, "subset_rows_tau3", d1=3)
        assert (num, den) == (2, 3)

    def test_exact_clicks(self):
        truth = ((0, 1), (1,))
        hit = [1, 1, 0, 0, 1, 0]
        near = [1, 1, 0, 1, 1, 0]
        samples = np.array([hit, hit, near], dtype=bool)
        num, den = success_counts(samples, truth, "exact_clicks", d1=3)
        assert (num, den) == (2, 3)

    def test_empty_denominator_is_none(self):
        truth = ((0,), ())
        samples = np.array([[0, 0, 5, 5]])
        assert success_estimate(samples, truth, "exact_rows_tau1", d1=2) is None

    def test_unknown_mode(self):
        with pytest.raises(ValueError, match="unknown mode"):
            success_counts(np.zeros((1, 4)), ((0,), ()), "majority", d1=2)
