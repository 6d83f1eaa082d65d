import unittest

import numpy as np

from lib.starframe.errors import ArgumentError
from lib.starframe.fitting import DEFAULT_LAMBDAS, contraction_lambdas, fit_order
from lib.starframe.identities import (
    MatmulCounter,
    accelerated_partial_sum,
    acceleration_order,
    check_cube_trick,
    check_simple_split,
    check_square_trick,
    check_symmetric_split,
    check_triframe_identity,
    neumann_partial_sum_matrix,
    random_contraction,
    run_trials,
    simple_split_rhs,
    spectral_radius,
    symmetric_split_rhs,
)
from lib.starframe.models import ContractionPair

NIL_M0 = np.array([[0, 0.3], [0, 0]], dtype=complex)
NIL_M1 = np.array([[0, 0], [0.2, 0]], dtype=complex)


def _pair(*parts):
    total = sum(parts[1:], parts[0])
    return ContractionPair(dim=parts[0].shape[0], parts=tuple(parts), rho=spectral_radius(total))


class RandomContractionTests(unittest.TestCase):
    def test_same_seed_same_pair(self):
        a = random_contraction(7, 4, 2, 0.5)
        b = random_contraction(7, 4, 2, 0.5)
        for x, y in zip(a.parts, b.parts):
            np.testing.assert_array_equal(x, y)

    def test_target_radius_is_hit(self):
        pair = random_contraction(3, 6, 3, 0.5)
        self.assertTrue(0.4999 <= pair.rho <= 0.5001)
        self.assertLess(np.max(np.abs(np.linalg.eigvals(pair.total))), 1.0)

    def test_scalar_case(self):
        pair = random_contraction(11, 1, 2, 0.3)
        self.assertAlmostEqual(abs(pair.total[0, 0]), 0.3, places=12)

    def test_bad_target_rejected(self):
        with self.assertRaises(ArgumentError):
            random_contraction(0, 2, 2, 1.0)
        with self.assertRaises(ArgumentError):
            random_contraction(0, 0, 2, 0.5)


class SplitIdentityTests(unittest.TestCase):
    def test_zero_part_gives_zero_residual(self):
        m0 = random_contraction(1, 4, 2, 0.5).m0
        zero = np.zeros_like(m0)
        self.assertLess(check_simple_split(_pair(m0, zero)), 1e-15)
        self.assertLess(check_symmetric_split(_pair(zero, m0)), 1e-15)

    def test_nilpotent_pair_closed_form(self):
        expected = np.array([[1, 0.3], [0.2, 1]]) / 0.94
        np.testing.assert_allclose(simple_split_rhs(NIL_M0, NIL_M1), expected, atol=1e-15)
        np.testing.assert_allclose(symmetric_split_rhs(NIL_M0, NIL_M1), expected, atol=1e-15)

    def test_symmetric_split_is_role_symmetric(self):
        pair = random_contraction(5, 6, 2, 0.9)
        swapped = _pair(pair.m1, pair.m0)
        self.assertLess(abs(check_symmetric_split(pair) - check_symmetric_split(swapped)), 1e-12)

    def test_random_pairs(self):
        worst = 0.0
        for seed in range(100):
            pair = random_contraction(seed, 8, 2, 0.9)
            worst = max(worst, check_simple_split(pair), check_symmetric_split(pair))
        self.assertLess(worst, 1e-11)

    def test_triframe_identity(self):
        worst = 0.0
        for seed in range(100):
            worst = max(worst, check_triframe_identity(random_contraction(seed, 6, 3, 0.9)))
        self.assertLess(worst, 1e-11)

    def test_triframe_reductions(self):
        pair = random_contraction(2, 4, 2, 0.5)
        zero = np.zeros_like(pair.m0)
        self.assertLess(check_triframe_identity(_pair(pair.m0, zero, zero)), 1e-15)
        self.assertAlmostEqual(
            check_triframe_identity(_pair(pair.m0, pair.m1, zero)),
            check_symmetric_split(pair),
            delta=1e-14,
        )
        with self.assertRaises(ArgumentError):
            check_triframe_identity(pair)


class TrickTests(unittest.TestCase):
    def test_zero_matrix(self):
        zero = np.zeros((3, 3), dtype=complex)
        for check in (check_square_trick(zero, 2), check_cube_trick(zero, 1)):
            self.assertEqual(check.identity_residual, 0.0)
            self.assertEqual(check.polynomial_residual, 0.0)
            self.assertTrue(np.isnan(check.slope))

    def test_order_zero_polynomials(self):
        m = random_contraction(4, 4, 2, 0.8).total
        self.assertLess(check_square_trick(m, 0).polynomial_residual, 1e-15)
        self.assertLess(check_cube_trick(m, 0).polynomial_residual, 1e-15)

    def test_square_trick_slope(self):
        m = random_contraction(4, 4, 2, 0.8).total
        check = check_square_trick(m, 2)
        self.assertLess(check.identity_residual, 1e-13)
        self.assertLess(check.polynomial_residual, 1e-13)
        self.assertEqual(check.expected_slope, 6.0)
        self.assertAlmostEqual(check.slope, 6.0, delta=0.2)

    def test_cube_trick_slope(self):
        m = random_contraction(9, 4, 2, 0.8).total
        for order in (0, 1):
            check = check_cube_trick(m, order)
            self.assertLess(check.polynomial_residual, 1e-13)
            self.assertAlmostEqual(check.slope, 3 * order + 3, delta=0.2)


class AcceleratedSumTests(unittest.TestCase):
    def test_converges_to_resolvent(self):
        pair = random_contraction(12, 4, 2, 0.5)
        direct = np.linalg.inv(np.eye(4) - pair.total)
        approx = accelerated_partial_sum(pair, 200)
        self.assertLess(np.linalg.norm(approx - direct) / np.linalg.norm(direct), 1e-12)

    def test_zero_second_part_is_exact(self):
        m0 = random_contraction(13, 3, 2, 0.5).m0
        pair = _pair(m0, np.zeros_like(m0))
        direct = np.linalg.inv(np.eye(3) - m0)
        np.testing.assert_allclose(accelerated_partial_sum(pair, 0), direct, atol=1e-14)

    def test_nilpotent_pair_converges_geometrically(self):
        # M1 R1 M0 R0 = diag(0, 0.06), so the remainder after order m is O(0.06^{m+1})
        pair = _pair(NIL_M0, NIL_M1)
        direct = np.array([[1, 0.3], [0.2, 1]]) / 0.94
        err1 = np.linalg.norm(accelerated_partial_sum(pair, 1) - direct)
        err3 = np.linalg.norm(accelerated_partial_sum(pair, 3) - direct)
        self.assertLess(err1, 1e-2)
        self.assertLess(err3, 1e-4)

    def test_matmul_count(self):
        pair = random_contraction(14, 4, 2, 0.5)
        for order in (0, 1, 2, 3, 5):
            counter = MatmulCounter()
            accelerated_partial_sum(pair, order, counter)
            self.assertEqual(counter.count, order + 1)

    def test_product_form_matches_direct_sum(self):
        pair = random_contraction(16, 5, 2, 0.9)
        eye = np.eye(5)
        r0 = np.linalg.inv(eye - pair.m0)
        r1 = np.linalg.inv(eye - pair.m1)
        x = pair.m1 @ r1 @ pair.m0 @ r0
        for order in (0, 1, 2, 4, 7):
            direct = r0 @ neumann_partial_sum_matrix(x, order) @ r1
            approx = accelerated_partial_sum(pair, order)
            self.assertLess(np.linalg.norm(approx - direct) / np.linalg.norm(direct), 1e-12)

    def test_matches_standard_series_order(self):
        pair = random_contraction(15, 4, 2, 0.5)
        for order in (1, 2):
            self.assertAlmostEqual(acceleration_order(pair, order), 2 * order + 2, delta=0.2)

    def test_order_holds_for_non_contractive_parts(self):
        # ρ(M) = 0.9 in dimension 2 leaves M_0 and M_1 well outside the unit ball
        for seed in range(20):
            pair = random_contraction(seed, 2, 2, 0.9)
            self.assertAlmostEqual(acceleration_order(pair, 1), 4.0, delta=0.2, msg=f"seed={seed}")

    def test_neumann_partial_sum_matrix(self):
        m = np.array([[0.5]], dtype=complex)
        self.assertAlmostEqual(neumann_partial_sum_matrix(m, 2)[0, 0].real, 1.75)
        with self.assertRaises(ArgumentError):
            neumann_partial_sum_matrix(m, -1)


class FitOrderTests(unittest.TestCase):
    def test_recovers_slope_with_prefactor_drift(self):
        lambdas = (0.2, 0.1, 0.05, 0.025)
        errors = [3.0 * lam**4 * (1.0 + 0.8 * lam + 0.5 * lam**2) for lam in lambdas]
        self.assertAlmostEqual(fit_order(lambdas, errors), 4.0, delta=0.05)

    def test_default_ladders_have_four_points(self):
        self.assertEqual(len(DEFAULT_LAMBDAS), 4)
        m = 8.0 * np.eye(2)
        ladder = contraction_lambdas(m, 0.5 * m)
        self.assertEqual(len(ladder), 4)
        self.assertAlmostEqual(ladder[0] * 8.0, 0.25)
        self.assertAlmostEqual(ladder[0] / ladder[-1], 8.0)
        self.assertEqual(contraction_lambdas(np.zeros((2, 2)))[0], 0.5)

    def test_rejects_bad_input(self):
        with self.assertRaises(ArgumentError):
            fit_order([0.5, 0.25], [1e-2, 1e-3])
        with self.assertRaises(ArgumentError):
            fit_order([0.5, 0.25, 0.125], [1e-2, 0.0, 1e-4])
        with self.assertRaises(ArgumentError):
            contraction_lambdas(np.eye(2), points=2)


class TrialRunnerTests(unittest.TestCase):
    def test_rows_and_tolerances(self):
        rows = run_trials(5, [2, 4], [0.5, 0.9], seed=0)
        self.assertEqual(len(rows), 5 * 2 * 2 * 6)
        for row in rows:
            self.assertLess(row.residual, 1e-10, msg=f"{row.check} seed={row.seed}")
            if row.slope is not None:
                self.assertAlmostEqual(
                    row.slope, row.expected_slope, delta=0.2, msg=f"{row.check} seed={row.seed}"
                )

    def test_zero_trials(self):
        self.assertEqual(run_trials(0, [2], [0.5]), [])


if __name__ == "__main__":
    unittest.main()
