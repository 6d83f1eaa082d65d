import unittest
from dataclasses import replace
from unittest import mock

import numpy as np
from scipy.integrate import quad

from lib.cache_manager import clear_reference_cache
from lib.starframe.errors import ConfigurationError
from lib.starframe.frames import (
    acceleration_slope,
    biframe_operator,
    biframe_U,
    table_deviation,
    triframe_U,
)
from lib.starframe.models import EPSILON_FLOOR, BiframeForm, Frame, RabiParams
from lib.starframe.properties import ACCELERATION_LAMBDAS, prop_acceleration_order
from lib.starframe.rabi import (
    SIGMA_X,
    SIGMA_Z,
    biframe_closed_form,
    frame_equivalence,
    h_std,
    hamiltonian,
    quadrature_floor,
    rabi_generator,
    rabi_grid,
    rabi_reference,
    rabi_split,
    rabi_split_three,
    run_figure1,
    sc_integrals,
    u0_closed,
    u1_closed,
    validate_params,
)
from lib.starframe.reference import epsilon_error

PARAMS = RabiParams()
SMALL = RabiParams(n_grid=201)


def _dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


class ParamTests(unittest.TestCase):
    def test_defaults_match_scaled_ratios(self):
        self.assertAlmostEqual(PARAMS.omega0 / PARAMS.omega, 2 / 3)
        self.assertAlmostEqual(PARAMS.beta / PARAMS.omega, 1.6 / 3)
        self.assertAlmostEqual(PARAMS.omega * PARAMS.t_total, 6.0)
        self.assertEqual(PARAMS.orders, tuple(range(13)))
        self.assertAlmostEqual(rabi_grid(PARAMS).step, 2.0 / 600)

    def test_invalid_params(self):
        for bad in (
            replace(PARAMS, omega0=0.0),
            replace(PARAMS, beta=-1.0),
            replace(PARAMS, n_grid=1),
            replace(PARAMS, orders=()),
            replace(PARAMS, orders=(0, -1)),
        ):
            with self.assertRaises(ConfigurationError):
                validate_params(bad)


class ClosedFormPartTests(unittest.TestCase):
    def test_part_evolutions_are_unitary(self):
        nodes = rabi_grid(PARAMS).nodes
        for u in (u0_closed(PARAMS, nodes), u1_closed(PARAMS, nodes)):
            defect = np.abs(_dagger(u) @ u - np.eye(2))
            self.assertLess(np.max(defect), 1e-14)

    def test_closed_form_drive_evolution_matches_resolvent(self):
        split = rabi_split(SMALL, closed_form=False)
        closed = u1_closed(SMALL, split.grid.nodes)
        err = np.max(np.abs(split.part_evolutions[1].univariate - closed))
        self.assertLess(err, 5e-3)

    def test_generator_at_zero(self):
        split = rabi_split(SMALL)
        total = split.parts[0].samples[0] + split.parts[1].samples[0]
        expected = -1j * (0.5 * SMALL.omega0 * SIGMA_Z + 2 * SMALL.beta * SIGMA_X)
        np.testing.assert_allclose(total, expected, atol=1e-15)

    def test_generator_callable(self):
        fn = rabi_generator(PARAMS)
        for t in (0.0, 0.7, 2.0):
            np.testing.assert_array_equal(fn(t), -1j * hamiltonian(PARAMS, t))

    def test_three_part_split_sums_to_generator(self):
        for rotated in (False, True):
            split = rabi_split_three(SMALL, rotated=rotated)
            total = sum(p.samples for p in split.parts)
            expected = np.array([-1j * hamiltonian(SMALL, t) for t in split.grid.nodes])
            np.testing.assert_allclose(total, expected, atol=1e-14)

    def test_halved_drive_split(self):
        split = rabi_split_three(SMALL)
        np.testing.assert_array_equal(split.parts[1].samples, split.parts[2].samples)
        drive = 2 * SMALL.beta * np.cos(SMALL.omega * split.grid.nodes)
        np.testing.assert_allclose(
            split.parts[1].samples, -0.5j * drive[:, None, None] * SIGMA_X, atol=1e-15
        )


class TransformedHamiltonianTests(unittest.TestCase):
    def test_values_at_zero(self):
        expected = 2 * PARAMS.beta * SIGMA_X + 0.5 * PARAMS.omega0 * SIGMA_Z
        np.testing.assert_allclose(h_std(PARAMS, 1, 0.0), expected, atol=1e-15)

    def test_static_frame_diagonal(self):
        for t in (0.0, 0.3, 1.7):
            h0 = h_std(PARAMS, 0, t)
            self.assertAlmostEqual(h0[0, 0].real, PARAMS.omega0 / 2)
            self.assertAlmostEqual(h0[1, 1].real, -PARAMS.omega0 / 2)

    def test_closed_forms_match_conjugation(self):
        rng = np.random.default_rng(0)
        times = rng.uniform(0, PARAMS.t_total, 50)
        u0 = u0_closed(PARAMS, times)
        u1 = u1_closed(PARAMS, times)
        worst = 0.0
        for k, t in enumerate(times):
            h = hamiltonian(PARAMS, t)
            worst = max(
                worst,
                np.max(np.abs(_dagger(u0[k]) @ h @ u0[k] - h_std(PARAMS, 0, t))),
                np.max(np.abs(_dagger(u1[k]) @ h @ u1[k] - h_std(PARAMS, 1, t))),
            )
        self.assertLess(worst, 1e-12)

    def test_bad_frame_index(self):
        with self.assertRaises(ConfigurationError):
            h_std(PARAMS, 2, 0.0)


class SCIntegralTests(unittest.TestCase):
    def test_diagonal_vanishes(self):
        sc = sc_integrals(SMALL)
        idx = np.arange(SMALL.n_grid)
        self.assertFalse(np.any(sc.s_kernel[idx, idx]))
        self.assertFalse(np.any(sc.c_kernel[idx, idx]))

    def test_zero_drive_limit(self):
        params = replace(SMALL, beta=0.0)
        grid = rabi_grid(params)
        sc = sc_integrals(params, grid)
        self.assertFalse(np.any(sc.s_kernel))
        w = 0.5 * params.omega0
        t, s = grid.nodes[150], grid.nodes[40]
        expected = np.exp(1j * w * s) * (np.exp(-1j * w * t) - np.exp(-1j * w * s)) / (-1j * w)
        self.assertAlmostEqual(sc.c_kernel[150, 40], expected, delta=1e-4)

    def test_spot_values_against_adaptive_quadrature(self):
        grid = rabi_grid(PARAMS)
        sc = sc_integrals(PARAMS, grid, method="gauss")
        w = 0.5 * PARAMS.omega0
        k = 2 * PARAMS.beta / PARAMS.omega
        T = PARAMS.t_total

        def oracle(trig):
            def part(weight):
                fn = lambda x: weight(w * x) * trig(k * np.sin(PARAMS.omega * x))  # noqa: E731
                return quad(fn, 0, T, limit=200, epsabs=1e-13, epsrel=1e-13)[0]

            return part(np.cos) - 1j * part(np.sin)

        self.assertAlmostEqual(sc.s_kernel[-1, 0], oracle(np.sin), delta=1e-8)
        self.assertAlmostEqual(sc.c_kernel[-1, 0], oracle(np.cos), delta=1e-8)

    def test_unknown_method(self):
        with self.assertRaises(ConfigurationError):
            sc_integrals(SMALL, method="simpson")


class ClosedFormBiframeTests(unittest.TestCase):
    def test_matches_generic_operator(self):
        split = rabi_split(SMALL)
        generic = biframe_operator(split).kernel
        closed = biframe_closed_form(SMALL, split.grid).kernel
        rel = np.linalg.norm(closed - generic) / np.linalg.norm(generic)
        self.assertLess(rel, 1e-8)

    def test_conjugation_structure(self):
        kernel = biframe_closed_form(SMALL).kernel
        np.testing.assert_allclose(kernel[..., 1, 1], np.conj(kernel[..., 0, 0]), atol=1e-14)
        np.testing.assert_allclose(kernel[..., 1, 0], -np.conj(kernel[..., 0, 1]), atol=1e-14)

    def test_diagonal_and_zero_drive(self):
        kernel = biframe_closed_form(SMALL).kernel
        idx = np.arange(SMALL.n_grid)
        self.assertFalse(np.any(kernel[idx, idx]))
        self.assertFalse(np.any(biframe_closed_form(replace(SMALL, beta=0.0)).kernel))


class ExperimentTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        clear_reference_cache()
        cls.params = replace(SMALL, orders=tuple(range(7)))
        cls.records = run_figure1(cls.params)
        cls.floor = quadrature_floor(cls.params)

    @classmethod
    def tearDownClass(cls):
        clear_reference_cache()

    def _curve(self, frame):
        return {r.m: r.epsilon for r in self.records if r.frame == frame}

    def test_record_layout(self):
        self.assertEqual(len(self.records), 3 * 7)
        keys = [(r.frame, r.m) for r in self.records]
        self.assertEqual(keys, sorted(keys))
        self.assertEqual([r.frame for r in self.records[:7]], ["biframe"] * 7)
        self.assertEqual([r.m for r in self.records[7:14]], list(range(7)))
        self.assertEqual({r.frame for r in self.records}, {"lab", "std", "biframe"})

    def test_imaginary_overlap_is_recorded(self):
        for r in self.records:
            self.assertTrue(np.isfinite(r.imag_overlap))
            self.assertLessEqual(abs(r.imag_overlap), 1.0)
        self.assertTrue(any(r.imag_overlap != 0.0 for r in self.records))

    def test_frames_improve_with_order(self):
        for frame in ("std", "biframe"):
            curve = self._curve(frame)
            self.assertLess(curve[6], curve[1])
        self.assertLess(self._curve("biframe")[6], 1e-3)

    def test_biframe_beats_standard_frame_beyond_first_order(self):
        # at m=1 the biframe sits above std (1.9e-2 against 1.1e-2)
        std, bi = self._curve("std"), self._curve("biframe")
        self.assertGreater(bi[1], std[1])
        for m in range(2, 7):
            if std[m] > 10 * self.floor:
                self.assertLess(bi[m], std[m], msg=f"m={m}")

    def test_biframe_tracks_standard_frame_at_doubled_order(self):
        std, bi = self._curve("std"), self._curve("biframe")
        for m in (1, 2):
            if std[2 * m + 1] > 10 * self.floor:
                gap = abs(np.log10(bi[m]) - np.log10(std[2 * m + 1]))
                self.assertLess(gap, 1.25, msg=f"m={m}")

    def test_laboratory_frame_is_worst(self):
        lab, std = self._curve("lab"), self._curve("std")
        for m in range(4, 7):
            self.assertGreater(lab[m], std[m])

    def test_floor_is_small(self):
        self.assertLess(self.floor, 1e-4)

    def test_non_positive_epsilon_is_logged(self):
        params = replace(self.params, n_grid=41, orders=(0,))
        with mock.patch("lib.starframe.rabi.epsilon_components", return_value=(0.0, 0.0)):
            with self.assertLogs("lib.starframe.rabi", level="WARNING") as logs:
                records = run_figure1(params, frames=[Frame.LAB])
        self.assertIn("[figure1] frame=lab m=0", logs.output[0])
        self.assertEqual(records[0].log10_epsilon, np.log10(EPSILON_FLOOR))

    def test_std0_frame_is_available(self):
        records = run_figure1(replace(self.params, orders=(0, 2)), frames=[Frame.STD0])
        self.assertEqual([r.m for r in records], [0, 2])
        self.assertTrue(all(r.frame == "std0" for r in records))


class FrameEquivalenceTests(unittest.TestCase):
    def test_every_pipeline_matches_reference(self):
        clear_reference_cache()
        eps = frame_equivalence(SMALL)
        self.assertEqual(
            set(eps), {"lab", "std", "biframe_blue", "biframe_red", "triframe"}
        )
        for name, value in eps.items():
            self.assertLess(value, 1e-4, msg=name)

    def test_blue_red_agree(self):
        split = rabi_split(SMALL)
        dev = table_deviation(biframe_U(split, BiframeForm.BLUE), biframe_U(split, BiframeForm.RED))
        self.assertLess(dev, 1e-8)

    def test_triframe_splits_match_reference(self):
        clear_reference_cache()
        ref = rabi_reference(SMALL)
        for rotated in (False, True):
            eps = epsilon_error(ref, triframe_U(rabi_split_three(SMALL, rotated=rotated)))
            self.assertLess(eps, 1e-4, msg=f"rotated={rotated}")


class AccelerationOrderTests(unittest.TestCase):
    def test_biframe_order_doubles_standard_order(self):
        base = replace(SMALL, n_grid=101)

        def make_split(lam):
            return rabi_split(
                replace(base, omega0=lam * base.omega0, beta=lam * base.beta),
                closed_form=False,
            )

        for m in (1, 2):
            slope = acceleration_slope(make_split, m, ACCELERATION_LAMBDAS)
            self.assertAlmostEqual(slope, 2 * m + 2, delta=0.3, msg=f"m={m}")

    def test_property_checks_both_orders(self):
        res = prop_acceleration_order(replace(SMALL, n_grid=101))
        self.assertTrue(res.passed, msg=f"value={res.value}")


if __name__ == "__main__":
    unittest.main()
