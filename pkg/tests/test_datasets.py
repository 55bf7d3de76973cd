"""Dataset generators: value ranges, determinism, shuffling, serialization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photonclust.datasets import (
    Dataset,
    GroundTruth,
    binarize,
    gen_bs_problem1,
    gen_bs_problem1_binary,
    gen_bs_problem2,
    gen_gbs_problem2,
    generate,
    load_csv,
    save_csv,
    shuffle,
)

BLOCK = tuple(range(3, 9))


def block_cells(values, rows, cols):
    return values[np.ix_(list(rows), list(cols))]


def background_cells(values, rows, cols):
    mask = np.ones(values.shape, dtype=bool)
    mask[np.ix_(list(rows), list(cols))] = False
    return values[mask]


class TestBSProblem1:
    def test_shape_and_block_position(self):
        ds = gen_bs_problem1(alpha=2, seed=7)
        assert ds.values.shape == (12, 12)
        assert ds.truth.blocks == ((BLOCK, BLOCK),)
        assert ds.truth.row_perm is None

    def test_value_sets(self):
        for alpha in (1, 3, 5):
            ds = gen_bs_problem1(alpha=alpha, seed=3)
            blk = block_cells(ds.values, BLOCK, BLOCK)
            assert set(np.round(blk, 10).flat) <= {0.7, 0.8, 0.9}
            bg = background_cells(ds.values, BLOCK, BLOCK)
            allowed = {round(0.1 * k, 10) for k in range(alpha + 1)}
            assert set(np.round(bg, 10).flat) <= allowed

    def test_block_values_shared_across_alpha(self):
        blocks = [
            block_cells(gen_bs_problem1(alpha=a, seed=11).values, BLOCK, BLOCK)
            for a in range(1, 6)
        ]
        for other in blocks[1:]:
            assert np.array_equal(blocks[0], other)

    def test_unshared_block_differs(self):
        a = gen_bs_problem1(alpha=1, seed=11, shared_block=False)
        b = gen_bs_problem1(alpha=5, seed=11, shared_block=False)
        assert not np.array_equal(
            block_cells(a.values, BLOCK, BLOCK), block_cells(b.values, BLOCK, BLOCK)
        )

    def test_determinism_and_seed_sensitivity(self):
        x = gen_bs_problem1(alpha=3, seed=5)
        y = gen_bs_problem1(alpha=3, seed=5)
        z = gen_bs_problem1(alpha=3, seed=6)
        assert np.array_equal(x.values, y.values)
        assert not np.array_equal(x.values, z.values)

    def test_alpha_out_of_range(self):
        with pytest.raises(ValueError):
            gen_bs_problem1(alpha=0, seed=1)
        with pytest.raises(ValueError):
            gen_bs_problem1(alpha=6, seed=1)

    def test_threshold_out_of_range(self):
        ds = gen_bs_problem1_binary(seed=1)
        with pytest.raises(ValueError, match="threshold"):
            binarize(ds, 0.0)
        with pytest.raises(ValueError, match="threshold"):
            binarize(ds, 1.2)


class TestBinaryAndGBS:
    def test_binary_instance(self):
        ds = gen_bs_problem1_binary(seed=4)
        assert ds.values.sum() == 36.0
        assert np.array_equal(block_cells(ds.values, BLOCK, BLOCK), np.ones((6, 6)))
        assert set(ds.values.flat) == {0.0, 1.0}

    def test_gbs_problem2_blocks(self):
        ds = gen_gbs_problem2(seed=9)
        assert ds.values.shape == (12, 12)
        assert len(ds.truth.blocks) == 3
        assert ds.truth.row_perm is not None
        seen_rows = set()
        for rows, cols in ds.truth.blocks:
            blk = block_cells(ds.values, rows, cols)
            assert np.all((blk >= 0.7) & (blk < 0.9))
            seen_rows.update(rows)
        # the three blocks tile disjoint rows
        assert len(seen_rows) == 12
        bg = ds.values[ds.values < 0.7]
        assert bg.size == 144 - 48
        assert np.all(bg < 0.2)

    def test_gbs_binarized_ones_count(self):
        ds = binarize(gen_gbs_problem2(seed=2), threshold=0.6)
        assert ds.values.sum() == 48.0
        assert ds.threshold == 0.6
        for rows, cols in ds.truth.blocks:
            assert np.array_equal(block_cells(ds.values, rows, cols), np.ones((4, 4)))

    @given(st.integers(0, 10_000))
    @settings(max_examples=20, deadline=None)
    def test_binarize_idempotent(self, seed):
        ds = gen_gbs_problem2(seed=seed)
        once = binarize(ds, 0.5)
        twice = binarize(once, 0.5)
        assert np.array_equal(once.values, twice.values)


class TestShuffle:
    def test_multiset_preserved_and_truth_relocated(self):
        base = gen_bs_problem1(alpha=4, seed=13)
        shuf = shuffle(base, seed=21)
        assert sorted(base.values.flat) == sorted(shuf.values.flat)
        rows, cols = shuf.truth.blocks[0]
        orig = block_cells(base.values, BLOCK, BLOCK)
        moved = block_cells(shuf.values, rows, cols)
        assert sorted(orig.flat) == sorted(moved.flat)

    def test_recorded_perm_inverts(self):
        base = gen_bs_problem1(alpha=4, seed=13)
        shuf = shuffle(base, seed=21)
        rp = np.asarray(shuf.truth.row_perm)
        cp = np.asarray(shuf.truth.col_perm)
        assert np.array_equal(shuf.values, base.values[np.ix_(rp, cp)])

    def test_double_shuffle_composes(self):
        base = gen_bs_problem1(alpha=2, seed=1)
        twice = shuffle(shuffle(base, seed=5), seed=6)
        rp = np.asarray(twice.truth.row_perm)
        cp = np.asarray(twice.truth.col_perm)
        assert np.array_equal(twice.values, base.values[np.ix_(rp, cp)])

    def test_block_cells_exactly_relocated(self):
        # each current-frame block cell equals the original at the permuted spot
        base = gen_gbs_problem2(seed=0)
        rp = np.asarray(base.truth.row_perm)
        for rows, cols in base.truth.blocks:
            blk = block_cells(base.values, rows, cols)
            assert np.all((blk >= 0.7) & (blk < 0.9))
        assert rp.shape == (12,)

    def test_bs_problem2_is_shuffled_alpha2(self):
        ds = gen_bs_problem2(seed=8)
        assert ds.generator == "bs_problem2"
        assert ds.alpha == 2
        base = gen_bs_problem1(alpha=2, seed=8)
        assert sorted(ds.values.flat) == sorted(base.values.flat)
        assert not np.array_equal(ds.values, base.values)


class TestSerialization:
    def test_roundtrip_bit_exact(self, tmp_path):
        for make in (
            lambda: gen_bs_problem1(alpha=3, seed=42),
            lambda: gen_bs_problem2(seed=42),
            lambda: binarize(gen_gbs_problem2(seed=42), 0.6),
        ):
            ds = make()
            p = tmp_path / f"{ds.generator}.csv"
            save_csv(ds, p)
            back = load_csv(p)
            assert np.array_equal(ds.values, back.values)
            assert back.values.dtype == np.float64
            assert back.truth == ds.truth
            assert back.generator == ds.generator
            assert back.seed == ds.seed
            assert back.alpha == ds.alpha
            assert back.threshold == ds.threshold

    def test_header_required(self, tmp_path):
        p = tmp_path / "bare.csv"
        p.write_text("1,2\n3,4\n")
        with pytest.raises(ValueError, match="header"):
            load_csv(p)

    def test_generate_dispatch(self):
        ds = generate("bs_problem1", seed=3, alpha=2)
        assert np.array_equal(ds.values, gen_bs_problem1(alpha=2, seed=3).values)
        binary = generate("gbs_problem2", seed=3, threshold=0.6)
        assert set(binary.values.flat) == {0.0, 1.0}
        with pytest.raises(ValueError, match="unknown generator"):
            generate("nope", seed=1)

    @given(st.integers(0, 10_000), st.integers(1, 5))
    @settings(max_examples=15, deadline=None)
    def test_roundtrip_property(self, seed, alpha):
        import tempfile

        ds = gen_bs_problem1(alpha=alpha, seed=seed)
        with tempfile.TemporaryDirectory() as d:
            p = f"{d}/d.csv"
            save_csv(ds, p)
            assert np.array_equal(load_csv(p).values, ds.values)
