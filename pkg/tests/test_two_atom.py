import unittest
import math
import numpy as np
from nmqed import two_atom
from nmqed.two_atom import TwoAtomParams, Trajectory, DARK_STATE, \
    BRIGHT_STATE
from nmqed.analysis import fit_exponential


class TestTwoAtomParams(unittest.TestCase):

    def test_derived(self):
        params = TwoAtomParams(gamma0=1.0, beta=0.5, T=1.0)
        self.assertAlmostEqual(params.gamma1d, 1.0)
        self.assertAlmostEqual(params.gamma, 2.0)
        self.assertAlmostEqual(params.distance, 1.0)
        self.assertTrue(params.zero_phase)
        self.assertFalse(params.lossless)
        self.assertAlmostEqual(params.feedback, 0.5)

    def test_lossless(self):
        params = TwoAtomParams(gamma0=0.0, beta=1.0, T=2.0, lossless_rate=3)
        self.assertTrue(params.lossless)
        self.assertEqual(params.gamma1d, 3.0)
        self.assertEqual(params.gamma, 3.0)
        with self.assertRaises(ValueError):
            TwoAtomParams(gamma0=0.0, beta=0.5)

    def test_invalid(self):
        for kwargs in (
            {"beta": 1.0},
            {"beta": -0.1},
            {"gamma0": -1.0},
            {"T": -1.0},
            {"v_g": 0.0},
            {"T": float("inf")},
        ):
            with self.assertRaises(ValueError, msg=str(kwargs)):
                TwoAtomParams(**kwargs)


class TestEvolve(unittest.TestCase):

    def test_population(self):
        traj = Trajectory(
            times=np.zeros(2),
            cA=np.array([DARK_STATE[0], 0]),
            cB=np.array([DARK_STATE[1], 0])
        )
        self.assertTrue(np.allclose(two_atom.population(traj), [1, 0]))

    def test_uncoupled(self):
        params = TwoAtomParams(gamma0=1.0, beta=0.0, T=1.0)
        traj = two_atom.evolve_dark_state(params, 5.0)
        self.assertTrue(np.allclose(traj.P, np.exp(-traj.times), rtol=1e-8))

    def test_antisymmetry(self):
        params = TwoAtomParams(gamma0=1.0, beta=0.8, T=1.0)
        traj = two_atom.evolve_dark_state(params, 10.0)
        self.assertLessEqual(np.max(np.abs(traj.cA + traj.cB)), 1e-12)
        self.assertAlmostEqual(traj.P[0], 1.0)
        self.assertTrue(np.all(traj.P >= 0))
        self.assertTrue(np.all(traj.P <= 1 + 1e-12))

    def test_pre_arrival(self):
        params = TwoAtomParams(gamma0=1.0, beta=0.5, T=1.0)
        traj = two_atom.evolve_dark_state(params, 3.0, 1e-3)
        before = traj.times <= 0.99 + 1e-12
        self.assertLessEqual(
            np.max(np.abs(traj.P[before] - np.exp(-2 * traj.times[before]))),
            1e-8
        )
        index = int(np.argmin(np.abs(traj.times - 0.5)))
        self.assertAlmostEqual(traj.P[index], math.exp(-1.0), places=8)

    def test_series_oracle(self):
        for beta in (0.2, 0.5, 0.8):
            for T in (0.5, 1.0, 2.0):
                params = TwoAtomParams(gamma0=1.0, beta=beta, T=T)
                traj = two_atom.evolve_dark_state(params, 10 * T, 1e-3)
                series = two_atom.series_solution(params, traj.times)
                error = np.abs(traj.cA - series) / np.abs(series)
                self.assertLessEqual(
                    error.max(), 1e-8, msg=f"beta={beta}, T={T}"
                )

    def test_series(self):
        params = TwoAtomParams(gamma0=1.0, beta=0.5, T=1.0)
        c0 = DARK_STATE[0]
        self.assertAlmostEqual(
            two_atom.series_solution(params, 0.5), math.exp(-0.5) * c0
        )
        self.assertAlmostEqual(
            two_atom.series_solution(params, 1.5),
            (math.exp(-1.5) + 0.25 * math.exp(-0.5)) * c0
        )
        markovian = TwoAtomParams(gamma0=1.0, beta=0.5, T=0.0)
        self.assertAlmostEqual(
            two_atom.series_solution(markovian, 2.0), math.exp(-1.0) * c0
        )
        with self.assertRaises(ValueError):
            two_atom.series_solution(params, -1.0)

    def test_series_long_times(self):
        params = TwoAtomParams(gamma0=1.0, beta=0.8, T=0.01)
        value = two_atom.series_solution(params, 20.0)
        self.assertTrue(math.isfinite(abs(value)))
        self.assertGreater(abs(value), 0)

    def test_bright_state(self):
        params = TwoAtomParams(gamma0=1.0, beta=0.5, T=1.0)
        dark = two_atom.evolve(params, 8.0, 1e-3, DARK_STATE)
        bright = two_atom.evolve(params, 8.0, 1e-3, BRIGHT_STATE)
        self.assertTrue(np.allclose(bright.cA, bright.cB))
        before = bright.times < 1.0
        self.assertTrue(np.allclose(bright.P[before], dark.P[before]))
        self.assertLess(bright.P[-1], dark.P[-1])

    def test_suppression(self):
        rates = {}
        for beta in (0.2, 0.5, 0.8):
            params = TwoAtomParams(gamma0=1.0, beta=beta, T=1.0)
            traj = two_atom.evolve_dark_state(params, 8.0)
            fit = fit_exponential(traj.P, traj.times, (5.0, 8.0))
            self.assertLess(fit.gamma_fit, 1.0)
            rates[beta] = fit.gamma_fit
        self.assertGreater(rates[0.2], rates[0.5])
        self.assertGreater(rates[0.5], rates[0.8])

        rates = {}
        for T in (0.5, 1.0, 2.0):
            params = TwoAtomParams(gamma0=1.0, beta=0.5, T=T)
            traj = two_atom.evolve_dark_state(params, 8 * T)
            fit = fit_exponential(traj.P, traj.times, (5 * T, 8 * T))
            self.assertLess(fit.gamma_fit, 1.0)
            rates[T] = fit.gamma_fit
        self.assertGreater(rates[0.5], rates[1.0])
        self.assertGreater(rates[1.0], rates[2.0])

    def test_lossless_bound_state(self):
        params = TwoAtomParams(gamma0=0.0, beta=1.0, T=1e-3)
        traj = two_atom.evolve_dark_state(params, 5.0, 1e-4)
        bound = two_atom.bound_state_population(params)
        self.assertGreater(traj.P.min(), 0.998)
        self.assertAlmostEqual(traj.P[-1], bound, places=5)

    def test_bound_state_population(self):
        params = TwoAtomParams(gamma0=0.0, beta=1.0, T=1e-6)
        self.assertAlmostEqual(
            two_atom.bound_state_population(params), 1.0, places=5
        )
        params = TwoAtomParams(gamma0=0.0, beta=1.0, T=2.0)
        self.assertAlmostEqual(two_atom.bound_state_population(params), 0.25)
        with self.assertRaises(ValueError):
            two_atom.bound_state_population(TwoAtomParams())


class TestField(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.params = TwoAtomParams(gamma0=1.0, beta=0.5, T=1.0)
        cls.traj = two_atom.evolve_dark_state(cls.params, 6.0)

    def test_default_grids(self):
        x = two_atom.default_x_grid(self.params)
        self.assertEqual(x.size, 801)
        self.assertAlmostEqual(x[0], -2.0)
        self.assertAlmostEqual(x[-1], 3.0)
        t = two_atom.default_t_grid(self.traj)
        self.assertLessEqual(t.size, 600)
        self.assertEqual(t[0], 0)

    def test_causality(self):
        x = np.linspace(-3.0, 4.0, 141)
        t = np.array([0.0, 0.5, 1.2, 2.0])
        grid = two_atom.field_intensity_map(self.params, self.traj, x, t)
        for i, t_i in enumerate(t):
            dark = (np.abs(x) > t_i + 1e-9) & (np.abs(x - 1.0) > t_i + 1e-9)
            self.assertTrue(np.all(grid.intensity[i, dark] == 0))
        self.assertGreater(grid.intensity[1, 65], 0)

    def test_range(self):
        with self.assertRaises(ValueError):
            two_atom.field_intensity_map(
                self.params, self.traj, np.zeros(1), np.array([7.0])
            )

    def test_confinement(self):
        x = np.linspace(-1.0, 2.0, 601)
        grid = two_atom.field_intensity_map(
            self.params, self.traj, x, np.array([3.0, 6.0])
        )
        ratio = two_atom.confinement_ratio(grid, self.params, 6.0)
        self.assertLessEqual(ratio, 0.10)
        # the reabsorption transient still leaks past 5% at 3T
        early = two_atom.confinement_ratio(grid, self.params, 3.0)
        self.assertGreater(early, 0.05)
        self.assertLessEqual(early, 0.10)

    def test_normalized(self):
        grid = two_atom.field_intensity_map(self.params, self.traj)
        normalized = grid.normalized()
        self.assertAlmostEqual(normalized.peak, 1.0)
        t, trace = two_atom.field_trace(self.params, self.traj)
        self.assertEqual(t.size, trace.size)
        self.assertAlmostEqual(trace.max(), 1.0)

    def test_conservation(self):
        params = TwoAtomParams(gamma0=0.0, beta=1.0, T=1.0)
        traj = two_atom.evolve_dark_state(params, 5.0, 1e-3)
        x = np.arange(-5.0, 6.0 + 5e-4, 1e-3)
        t = np.linspace(0.0, 5.0, 11)
        grid = two_atom.field_intensity_map(params, traj, x, t)
        energy = two_atom.field_energy(grid)
        P = np.interp(t, traj.times, traj.P)
        self.assertLessEqual(np.max(np.abs(P + energy - 1.0)), 1e-3)


if __name__ == '__main__':
    unittest.main()
