import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from precedent_mi.stats import (
    PairedLosses,
    apply_bh_correction,
    benjamini_hochberg,
    paired_permutation_test,
)


def pairs_of(a, b):
    ids = tuple(f"c{i}" for i in range(len(a)))
    return PairedLosses(ids, np.asarray(a, float), np.asarray(b, float))


class TestPairedPermutation:
    def test_identical_losses_p_one(self):
        res = paired_permutation_test(pairs_of([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]))
        assert res.statistic == 0.0
        assert res.p_value == 1.0
        assert res.method == "exact"

    def test_identical_losses_monte_carlo_path(self):
        a = list(np.linspace(0, 5, 40))
        res = paired_permutation_test(pairs_of(a, a), n_permutations=500, seed=1)
        assert res.method == "monte-carlo"
        assert res.p_value == 1.0

    def test_ten_unit_differences_exact(self):
        """All 2^10 sign patterns enumerated; only +/-1 vectors tie the observed."""
        res = paired_permutation_test(pairs_of([1.0] * 10, [0.0] * 10))
        assert res.method == "exact"
        assert res.n_permutations == 1024
        assert res.p_value == 2 / 1024

    def test_exact_threshold_is_twenty(self):
        res20 = paired_permutation_test(pairs_of([1.0] * 20, [0.0] * 20))
        assert res20.method == "exact"
        res21 = paired_permutation_test(pairs_of([1.0] * 21, [0.0] * 21),
                                        n_permutations=100, seed=0)
        assert res21.method == "monte-carlo"

    def test_strong_signal_small_p_many_seeds(self):
        """Differences ~ N(0.5, 0.1), n=100: p below 0.001 for every seed."""
        for seed in range(20):
            rng = np.random.default_rng(1000 + seed)
            diffs = rng.normal(0.5, 0.1, size=100)
            res = paired_permutation_test(
                pairs_of(diffs, np.zeros(100)), n_permutations=10_000, seed=seed
            )
            assert res.p_value < 0.001

    def test_add_one_floor(self):
        rng = np.random.default_rng(3)
        diffs = rng.normal(1.0, 0.01, size=50)
        res = paired_permutation_test(pairs_of(diffs, np.zeros(50)),
                                      n_permutations=777, seed=5)
        assert res.p_value >= 1 / (777 + 1)
        assert res.n_permutations == 777

    def test_shift_invariance(self):
        rng = np.random.default_rng(8)
        a = rng.normal(2.0, 1.0, 30)
        b = rng.normal(1.8, 1.0, 30)
        r1 = paired_permutation_test(pairs_of(a, b), n_permutations=2000, seed=11)
        r2 = paired_permutation_test(pairs_of(a + 7.5, b + 7.5), n_permutations=2000, seed=11)
        assert r1.p_value == r2.p_value
        assert r1.statistic == pytest.approx(r2.statistic, abs=1e-12)

    def test_swap_negates_statistic_preserves_p(self):
        rng = np.random.default_rng(21)
        a = rng.normal(1.0, 0.5, 25)
        b = rng.normal(0.7, 0.5, 25)
        r_ab = paired_permutation_test(pairs_of(a, b), n_permutations=4000, seed=2)
        r_ba = paired_permutation_test(pairs_of(b, a), n_permutations=4000, seed=2)
        assert r_ab.statistic == pytest.approx(-r_ba.statistic, abs=1e-15)
        assert r_ab.p_value == r_ba.p_value

    def test_seed_reproducibility(self):
        rng = np.random.default_rng(4)
        a = rng.normal(0.2, 1.0, 60)
        b = np.zeros(60)
        r1 = paired_permutation_test(pairs_of(a, b), n_permutations=3000, seed=9)
        r2 = paired_permutation_test(pairs_of(a, b), n_permutations=3000, seed=9)
        assert r1 == r2

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            PairedLosses(("a",), np.asarray([1.0]), np.asarray([1.0, 2.0]))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            PairedLosses((), np.asarray([]), np.asarray([]))

    def test_bad_permutation_count(self):
        with pytest.raises(ValueError):
            paired_permutation_test(pairs_of([1.0], [0.0]), n_permutations=0)


class TestBenjaminiHochberg:
    def test_worked_example(self):
        mask = benjamini_hochberg([0.01, 0.02, 0.30], q=0.05)
        assert mask.tolist() == [True, True, False]

    def test_all_ones_reject_none(self):
        assert not benjamini_hochberg([1.0, 1.0, 1.0], q=0.05).any()

    def test_single_pvalue_raw_threshold(self):
        assert benjamini_hochberg([0.04], q=0.05).tolist() == [True]
        assert benjamini_hochberg([0.06], q=0.05).tolist() == [False]

    def test_original_order_returned(self):
        mask = benjamini_hochberg([0.30, 0.01, 0.02], q=0.05)
        assert mask.tolist() == [False, True, True]

    def test_empty(self):
        assert benjamini_hochberg([], q=0.05).size == 0

    def test_invalid_q(self):
        with pytest.raises(ValueError):
            benjamini_hochberg([0.5], q=1.5)

    def test_invalid_pvalues(self):
        with pytest.raises(ValueError):
            benjamini_hochberg([-0.1], q=0.05)

    @given(st.data())
    @settings(max_examples=80, deadline=None)
    def test_monotone_in_lowered_pvalues(self, data):
        m = data.draw(st.integers(1, 8))
        p = data.draw(st.lists(st.floats(0, 1, allow_nan=False), min_size=m, max_size=m))
        idx = data.draw(st.integers(0, m - 1))
        new_val = data.draw(st.floats(0, 1, allow_nan=False))
        lowered = list(p)
        lowered[idx] = min(p[idx], new_val)
        before = benjamini_hochberg(p, q=0.1)
        after = benjamini_hochberg(lowered, q=0.1)
        rejected_before = {i for i, r in enumerate(before) if r}
        rejected_after = {i for i, r in enumerate(after) if r}
        assert rejected_before <= rejected_after

    def test_apply_bh_marks_results(self):
        results = [
            paired_permutation_test(pairs_of([1.0] * 10, [0.0] * 10), comparison="strong"),
            paired_permutation_test(pairs_of([1.0, -1.0] * 5, [0.0] * 10), comparison="null"),
        ]
        marked = apply_bh_correction(results, q=0.05)
        by_name = {r.comparison: r for r in marked}
        assert by_name["strong"].bh_rejected is True
        assert by_name["null"].bh_rejected is False
