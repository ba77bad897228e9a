import unittest
import cmath
import math
import numpy as np
from scipy.special import lambertw as scipy_lambertw
from nmqed import spectral, two_atom
from nmqed.analysis import fit_exponential
from nmqed.errors import ConvergenceError
from nmqed.two_atom import TwoAtomParams


class TestLambertW(unittest.TestCase):

    def test_against_scipy(self):
        for z in (1e-8, 0.1, 0.5, 1.0, 2.5, 10.0, 1e3, 0.3 + 0.4j):
            for k in (0, -1, 1, -2, 2):
                expected = complex(scipy_lambertw(z, k))
                value = spectral.lambertw(z, k)
                self.assertLessEqual(
                    abs(value - expected), 1e-10 * max(1.0, abs(expected)),
                    msg=f"z={z}, k={k}"
                )
        self.assertAlmostEqual(
            spectral.lambertw(-0.2), complex(scipy_lambertw(-0.2)), places=12
        )

    def test_defining_equation(self):
        for k in range(-3, 4):
            w = spectral.lambertw(0.7, k)
            self.assertAlmostEqual(w * cmath.exp(w), 0.7, places=12)

    def test_origin(self):
        self.assertEqual(spectral.lambertw(0.0), 0)
        with self.assertRaises(ValueError):
            spectral.lambertw(0.0, -1)

    def test_branch_order(self):
        self.assertEqual(spectral.branch_order(1), [0])
        self.assertEqual(spectral.branch_order(5), [0, -1, 1, -2, 2])
        self.assertEqual(spectral.branch_order(4), [0, -1, 1, -2])


class TestCharacteristicRoots(unittest.TestCase):

    def test_residuals(self):
        for beta in (0.2, 0.5, 0.8):
            for T in (0.5, 1.0, 2.0):
                params = TwoAtomParams(gamma0=1.0, beta=beta, T=T)
                roots = spectral.characteristic_roots(params)
                self.assertEqual(len(roots), spectral.DEFAULT_BRANCHES)
                for root in roots:
                    self.assertLessEqual(root.residual, 1e-12 * params.gamma)
                real_parts = [root.s.real for root in roots]
                self.assertEqual(real_parts, sorted(real_parts, reverse=True))
                self.assertAlmostEqual(roots[0].s.imag, 0.0, places=12)

    def test_worked_example(self):
        params = TwoAtomParams(gamma0=1.0, beta=0.5, T=1.0)
        roots = spectral.characteristic_roots(params)
        principal = roots[0].s
        self.assertAlmostEqual(
            principal + 1.0, 0.5 * cmath.exp(-principal), places=12
        )
        self.assertAlmostEqual(principal.real, -0.3149, places=3)
        self.assertAlmostEqual(roots[0].rate, -2 * principal.real)
        self.assertLess(spectral.dominant_decay_rate(roots), 1.0)

    def test_degenerate(self):
        uncoupled = TwoAtomParams(gamma0=1.0, beta=0.0, T=1.0)
        roots = spectral.characteristic_roots(uncoupled)
        self.assertEqual(len(roots), 1)
        self.assertAlmostEqual(spectral.dominant_decay_rate(roots), 1.0)
        markovian = TwoAtomParams(gamma0=1.0, beta=0.5, T=0.0)
        self.assertAlmostEqual(spectral.spectral_rate(markovian), 1.0)

    def test_markovian_limit(self):
        params = TwoAtomParams(gamma0=1.0, beta=0.5, T=1e-6)
        self.assertAlmostEqual(
            spectral.spectral_rate(params, 1), 1.0, delta=1e-4
        )

    def test_invalid(self):
        with self.assertRaises(ValueError):
            spectral.characteristic_roots(TwoAtomParams(phase_phi=0.5))
        with self.assertRaises(ValueError):
            spectral.characteristic_roots(TwoAtomParams(), 0)
        with self.assertRaises(ValueError):
            spectral.dominant_decay_rate([])

    def test_long_retardation(self):
        # a T e^{gamma T/2} is far beyond the float range here
        for T in (600.0, 1000.0, 5000.0):
            roots = spectral.characteristic_roots(
                TwoAtomParams(gamma0=1.0, beta=0.5, T=T)
            )
            for root in roots:
                self.assertLessEqual(root.residual, 1e-9)
            self.assertAlmostEqual(roots[0].s.imag, 0.0, places=12)
            # s + 1 = e^{-sT}/2 gives s -> -ln(2)/T
            self.assertAlmostEqual(roots[0].rate * T / 2, math.log(2),
                                   delta=0.01)

    def test_no_convergence(self):
        with self.assertRaises(ConvergenceError):
            spectral.lambertw(1e6, 3, max_iter=1)

    def test_phase_two_pi(self):
        params = TwoAtomParams(gamma0=1.0, beta=0.5, T=1.0,
                               phase_phi=2 * math.pi)
        self.assertAlmostEqual(
            spectral.spectral_rate(params),
            spectral.spectral_rate(TwoAtomParams(gamma0=1.0, beta=0.5)),
            places=10
        )


class TestRates(unittest.TestCase):

    def test_asymptotic_agreement(self):
        for T in (0.01, 0.05, 0.1):
            params = TwoAtomParams(gamma0=1.0, beta=0.5, T=T)
            rate = spectral.spectral_rate(params)
            estimate = spectral.asymptotic_rate(params)
            self.assertLessEqual(abs(rate - estimate) / rate, 0.01)
        params = TwoAtomParams(gamma0=1.0, beta=0.5, T=1.0)
        rate = spectral.spectral_rate(params)
        estimate = spectral.asymptotic_rate(params)
        self.assertLessEqual(abs(rate - estimate) / rate, 0.15)

    def test_fit_agreement(self):
        params = TwoAtomParams(gamma0=1.0, beta=0.5, T=1.0)
        traj = two_atom.evolve_dark_state(params, 8.0)
        fit = fit_exponential(traj.P, traj.times, (5.0, 8.0))
        rate = spectral.spectral_rate(params)
        self.assertLess(fit.gamma_fit, 1.0)
        self.assertLessEqual(abs(fit.gamma_fit - rate) / rate, 0.02)

    def test_monotonic(self):
        previous = None
        for beta in (0.1, 0.3, 0.5, 0.7, 0.9):
            rates = [
                spectral.spectral_rate(TwoAtomParams(beta=beta, T=T))
                for T in (0.5, 1.0, 2.0, 4.0)
            ]
            self.assertTrue(np.all(np.diff(rates) < 0))
            self.assertTrue(all(rate < 1.0 for rate in rates))
            if previous is not None:
                self.assertTrue(np.all(np.array(rates) < previous))
            previous = np.array(rates)


if __name__ == '__main__':
    unittest.main()
