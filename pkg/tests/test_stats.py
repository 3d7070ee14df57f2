import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evalaudit.records import ValidationError
from evalaudit.stats import (
    ContingencyTable2x2,
    f_sf,
    fisher_exact_two_sided,
    holm_bonferroni,
    krippendorff_alpha,
    odds_ratio,
    one_way_anova,
    pooled_t_test,
    student_t_sf,
    welch_t_test,
)

from .oracles import (
    alpha_pairwise,
    f_tail_quadrature,
    fisher_two_sided_exact,
    holm_stepdown,
    t_tail_quadrature,
)


class TestDistributionTails:
    @pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 2.5, 4.0, 7.8])
    @pytest.mark.parametrize("df", [1.0, 2.0, 5.9734513274336285, 30.0, 200.0])
    def test_t_survival_matches_quadrature(self, t, df):
        assert student_t_sf(t, df) == pytest.approx(t_tail_quadrature(t, df), abs=1e-10)

    @pytest.mark.parametrize("f", [0.5, 1.0, 4.0, 13.0])
    @pytest.mark.parametrize("dfs", [(1, 5), (2, 6), (3, 40), (7, 3)])
    def test_f_survival_matches_quadrature(self, f, dfs):
        assert f_sf(f, *dfs) == pytest.approx(f_tail_quadrature(f, *dfs), abs=1e-10)

    def test_t_negative_argument(self):
        assert student_t_sf(-1.5, 7) == pytest.approx(1 - student_t_sf(1.5, 7), abs=1e-12)


class TestWelch:
    def test_identical_samples(self):
        result = welch_t_test([1, 2, 3], [1, 2, 3])
        assert result.statistic == 0.0
        assert result.p_value == 1.0

    def test_hand_example(self):
        # mean_a = 2.275, var_a = 0.0875/3; mean_b = 1.3, var_b = 0.1/3
        # se = 0.125, t = 0.975/0.125 = 7.8; Satterthwaite df = 5.97345...
        result = welch_t_test([2.1, 2.5, 2.3, 2.2], [1.1, 1.4, 1.2, 1.5])
        assert result.statistic == pytest.approx(7.8, abs=1e-12)
        assert result.df == pytest.approx(5.9734513274336285, abs=1e-9)
        assert result.p_value == pytest.approx(2 * t_tail_quadrature(7.8, result.df), abs=1e-10)

    def test_zero_variance_degenerate(self):
        result = welch_t_test([0, 0, 0], [0, 0, 0])
        assert result.degenerate
        assert result.reason == "zero variance"

    def test_minimum_sample_size(self):
        with pytest.raises(ValidationError):
            welch_t_test([1.0], [1.0, 2.0])

    @given(
        st.lists(st.floats(-10, 10), min_size=2, max_size=12),
        st.lists(st.floats(-10, 10), min_size=2, max_size=12),
    )
    def test_swap_symmetry(self, a, b):
        r1 = welch_t_test(a, b)
        r2 = welch_t_test(b, a)
        if r1.degenerate:
            assert r2.degenerate
            return
        assert r1.statistic == pytest.approx(-r2.statistic, abs=1e-12)
        assert r1.p_value == pytest.approx(r2.p_value, abs=1e-12)

    def test_pooled_variant_exists(self):
        result = pooled_t_test([2.1, 2.5, 2.3, 2.2], [1.1, 1.4, 1.2, 1.5])
        assert result.df == 6.0
        assert result.p_value < 0.01


class TestAnova:
    def test_equal_means_nonzero_spread(self):
        result = one_way_anova([[1, 2, 3], [1, 2, 3], [1, 2, 3]])
        assert result.statistic == 0.0
        assert result.p_value == 1.0

    def test_hand_example(self):
        # groups [1,2,3],[2,3,4],[5,6,7]: SSB = 26, SSW = 6, F = 13 on (2, 6)
        result = one_way_anova([[1, 2, 3], [2, 3, 4], [5, 6, 7]])
        assert result.statistic == pytest.approx(13.0, abs=1e-12)
        assert result.df == (2.0, 6.0)
        assert result.p_value == pytest.approx(f_tail_quadrature(13.0, 2, 6), abs=1e-10)

    def test_two_groups_nonnegative(self):
        result = one_way_anova([[1.0, 2.0, 2.5], [4.0, 4.5, 3.5]])
        assert result.statistic >= 0.0

    def test_fully_degenerate(self):
        result = one_way_anova([[2, 2, 2], [2, 2, 2]])
        assert result.degenerate

    def test_zero_within_nonzero_between(self):
        result = one_way_anova([[1, 1, 1], [2, 2, 2]])
        assert not result.degenerate
        assert result.p_value == 0.0

    def test_group_size_precondition(self):
        with pytest.raises(ValidationError):
            one_way_anova([[1.0], [2.0, 3.0]])


class TestFisher:
    def test_symmetric_table(self):
        assert fisher_exact_two_sided(ContingencyTable2x2(5, 5, 5, 5)) == 1.0

    def test_paper_scale_table(self):
        p = fisher_exact_two_sided(ContingencyTable2x2(146, 1621, 257, 1138))
        assert p == pytest.approx(fisher_two_sided_exact(146, 1621, 257, 1138), rel=1e-9)
        assert 1e-18 < p < 1e-16

    def test_zero_cells_are_valid(self):
        p = fisher_exact_two_sided(ContingencyTable2x2(0, 10, 5, 5))
        assert 0.0 < p <= 1.0

    def test_zero_column_margin(self):
        # theme absent everywhere: only one table has these margins
        assert fisher_exact_two_sided(ContingencyTable2x2(0, 10, 0, 8)) == 1.0

    def test_matches_enumeration_on_random_small_tables(self):
        rng = random.Random(2024)
        for _ in range(300):
            n = rng.randint(1, 24)
            a_plus_b = rng.randint(0, n)
            split = rng.randint(0, n)
            r1, r2 = a_plus_b, n - a_plus_b
            a = rng.randint(max(0, split - r2), min(r1, split))
            table = ContingencyTable2x2(a, r1 - a, split - a, r2 - (split - a))
            if sum(table.cells) == 0:
                continue
            expected = fisher_two_sided_exact(*table.cells)
            assert fisher_exact_two_sided(table) == pytest.approx(expected, abs=1e-10)

    def test_negative_cell_rejected(self):
        with pytest.raises(ValidationError):
            ContingencyTable2x2(-1, 2, 3, 4)


class TestOddsRatio:
    def test_balanced(self):
        assert odds_ratio(ContingencyTable2x2(5, 5, 5, 5)).value == 1.0

    def test_paper_table(self):
        result = odds_ratio(ContingencyTable2x2(146, 1621, 257, 1138))
        assert not result.corrected
        assert result.value == pytest.approx(0.401, abs=0.01)

    def test_zero_cell_haldane(self):
        result = odds_ratio(ContingencyTable2x2(0, 10, 5, 5))
        assert result.corrected
        assert result.value == pytest.approx((0.5 * 5.5) / (10.5 * 5.5))

    @given(st.tuples(*(st.integers(1, 50) for _ in range(4))))
    def test_row_swap_inverse(self, cells):
        a, b, c, d = cells
        forward = odds_ratio(ContingencyTable2x2(a, b, c, d)).value
        swapped = odds_ratio(ContingencyTable2x2(c, d, a, b)).value
        assert forward * swapped == pytest.approx(1.0, rel=1e-12)


class TestHolm:
    def test_single_value(self):
        assert holm_bonferroni([0.2]) == [0.2]

    def test_hand_example(self):
        assert holm_bonferroni([0.01, 0.04, 0.03]) == pytest.approx([0.03, 0.06, 0.06])

    def test_sixteen_theme_factor(self):
        ps = [3.675e-17] + [0.5] * 15
        adjusted = holm_bonferroni(ps)
        assert min(adjusted) == pytest.approx(5.88e-16, rel=1e-9)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            holm_bonferroni([0.5, 1.2])

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=20))
    def test_matches_stepdown_definition(self, ps):
        result = holm_bonferroni(ps)
        assert result == pytest.approx(holm_stepdown(ps), abs=1e-12)
        # dominance and monotonicity along the sorted order
        assert all(adj >= raw for adj, raw in zip(result, ps))
        order = sorted(range(len(ps)), key=lambda i: ps[i])
        ordered = [result[i] for i in order]
        assert all(x <= y for x, y in zip(ordered, ordered[1:]))

    def test_ties_stable(self):
        # equal raw p-values keep input order in the stable sort, so both
        # receive the same adjusted value
        result = holm_bonferroni([0.02, 0.02, 0.5])
        assert result[0] == result[1]


# Hand-checkable 3-rater x 4-item matrix (one missing cell). Coincidence
# matrix: o[0][0]=1, o[0][1]=o[1][0]=1, o[1][1]=1, o[1][2]=o[2][1]=1,
# o[2][3]=o[3][2]=1, o[3][3]=3; marginals (2, 3, 2, 4), n=11.
# Interval: alpha = 1 - 10 * 6/312 = 21/26. Nominal: 1 - 10 * 6/88 = 7/22.
TOY_MATRIX = [
    [0, 0, 1],
    [1, 1, 2],
    [2, 3, 3],
    [3, 3, None],
]


class TestKrippendorff:
    def test_perfect_agreement(self):
        matrix = [[1, 1, 1], [3, 3, 3], [0, 0, 0]]
        result = krippendorff_alpha(matrix, metric="interval")
        assert result.value == 1.0

    def test_toy_matrix_interval(self):
        result = krippendorff_alpha(TOY_MATRIX, metric="interval")
        assert result.value == pytest.approx(21 / 26, abs=1e-12)
        assert result.value == pytest.approx(alpha_pairwise(TOY_MATRIX, "interval"), abs=1e-10)

    def test_toy_matrix_nominal(self):
        result = krippendorff_alpha(TOY_MATRIX, metric="nominal")
        assert result.value == pytest.approx(7 / 22, abs=1e-12)
        assert result.value == pytest.approx(alpha_pairwise(TOY_MATRIX, "nominal"), abs=1e-10)

    def test_toy_matrix_ordinal(self):
        result = krippendorff_alpha(TOY_MATRIX, metric="ordinal")
        assert result.value == pytest.approx(alpha_pairwise(TOY_MATRIX, "ordinal"), abs=1e-10)

    def test_single_value_degenerate(self):
        result = krippendorff_alpha([[2, 2], [2, 2], [2, 2]])
        assert result.degenerate
        assert "expected" in result.reason

    def test_too_few_pairable_items(self):
        result = krippendorff_alpha([[1, None], [None, 2]])
        assert result.degenerate

    def test_rater_permutation_invariance(self):
        shuffled = [[row[2], row[0], row[1]] for row in TOY_MATRIX]
        for metric in ("nominal", "interval", "ordinal"):
            original = krippendorff_alpha(TOY_MATRIX, metric=metric)
            permuted = krippendorff_alpha(shuffled, metric=metric)
            assert original.value == pytest.approx(permuted.value, abs=1e-12)

    def test_unknown_metric(self):
        with pytest.raises(ValidationError):
            krippendorff_alpha(TOY_MATRIX, metric="ratio")

    @settings(max_examples=60)
    @given(
        st.lists(
            st.lists(st.one_of(st.none(), st.integers(0, 3)), min_size=3, max_size=3),
            min_size=3,
            max_size=10,
        )
    )
    def test_matches_pairwise_definition(self, matrix):
        result = krippendorff_alpha(matrix, metric="interval")
        pairable_units = sum(1 for row in matrix if sum(v is not None for v in row) >= 2)
        if pairable_units < 2:
            assert result.degenerate
            return
        expected = alpha_pairwise(matrix, "interval")
        if expected is None:
            assert result.degenerate
        else:
            assert not result.degenerate
            assert result.value == pytest.approx(expected, abs=1e-10)
