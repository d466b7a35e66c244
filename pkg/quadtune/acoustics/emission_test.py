import math
import tempfile
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from quadtune.acoustics.bands import broadband
from quadtune.acoustics.emission import (DirectivityPattern, ParametricEmission, PolynomialEmission, _EmissionBase,
                                         directivity_index, emit_spectrum, load_emission_model,
                                         parse_emission_model, save_emission_model)
from quadtune.errors import DomainError
from quadtune.testing import TestCase

UNIFORM = DirectivityPattern(intensity=[[1.0] * 18])


class TestEmissionBase(TestCase):

    def test_abstract(self):
        with self.assertRaises(TypeError):
            _EmissionBase()

        class Silent(_EmissionBase):

            def rotor_levels(self, omega, zeta=None):
                return np.zeros(np.shape(omega) + (self.centers().size, ))

        model = Silent()
        expected = np.full(model.centers().size, 10.0 * math.log10(4.0))
        self.assertArrayAlmostEqual(model.source_levels([2000.0] * 4), expected)


class TestParametricEmission(TestCase):

    def setUp(self):
        self.ref = np.linspace(70.0, 55.0, 31)
        self.model = ParametricEmission(reference_levels=self.ref.tolist(), directivity=UNIFORM)

    def test_reference_point(self):
        spec = emit_spectrum(self.model, 2500.0)
        self.assertArrayEqual(spec.levels, self.ref - 6.0)
        spec = emit_spectrum(self.model, 2500.0, zeta=0.7)
        self.assertArrayAlmostEqual(spec.levels, self.ref - 6.0)

    def test_speed_shift(self):
        base = emit_spectrum(self.model, 2500.0).levels
        fast = emit_spectrum(self.model, 5000.0).levels
        self.assertArrayAlmostEqual(fast - base, [50.0 * math.log10(2.0)] * 31)
        self.assertAlmostEqual(50.0 * math.log10(2.0), 15.05, places=2)

    def test_four_rotors(self):
        total = self.model.source_levels([2500.0] * 4)
        self.assertArrayAlmostEqual(total - self.ref, [10 * math.log10(4.0) - 6.0] * 31, atol=1e-12)

    def test_silent(self):
        spec = emit_spectrum(self.model, 0.0, zeta=0.2)
        self.assertArrayEqual(spec.levels, np.zeros(31))
        with self.assertRaises(DomainError):
            emit_spectrum(self.model, -1.0)

    def test_vectorized(self):
        levels = self.model.rotor_levels(np.array([1000.0, 2500.0, 3000.0]), zeta=np.array([0.0, 1.0, 2.0]))
        self.assertEqual(levels.shape, (3, 31))
        self.assertArrayAlmostEqual(levels[1], self.ref - 6.0)

    def test_default_reference(self):
        model = ParametricEmission()
        self.assertAlmostEqual(broadband(model.reference()), 85.0)
        peak = model.centers()[np.argmax(model.reference().levels)]
        self.assertAlmostEqual(peak, 79.43, places=1)

    def test_directivity(self):
        model = ParametricEmission(reference_levels=self.ref.tolist())
        below = emit_spectrum(model, 2500.0, zeta=0.0).levels
        side = emit_spectrum(model, 2500.0, zeta=math.pi / 2).levels
        self.assertTrue(np.all(below > side))

    def test_invalid(self):
        with self.assertRaises(ValidationError):
            ParametricEmission(reference_levels=[1.0, 2.0])
        with self.assertRaises(ValidationError):
            ParametricEmission(omega_ref=0.0)


class TestPolynomialEmission(TestCase):

    def setUp(self):
        coef = np.zeros((31, 5))
        coef[:, 0] = 80.0
        coef[:, 1] = 10.0
        coef[:, 3] = -2.0
        self.model = PolynomialEmission(coefficients=coef.tolist())

    def test_levels(self):
        self.assertArrayAlmostEqual(emit_spectrum(self.model, 2500.0).levels, [74.0] * 31)
        self.assertArrayAlmostEqual(emit_spectrum(self.model, 5000.0).levels, [84.0] * 31)
        self.assertArrayAlmostEqual(emit_spectrum(self.model, 2500.0, zeta=0.5).levels, [73.0] * 31)
        self.assertArrayEqual(emit_spectrum(self.model, 0.0).levels, np.zeros(31))

    def test_shape(self):
        with self.assertRaises(ValidationError):
            PolynomialEmission(coefficients=[[1.0] * 5] * 3)


class TestModelFiles(TestCase):

    def test_discriminator(self):
        model = parse_emission_model({'kind': 'parametric', 'rpm_exponent': 4.0})
        self.assertIsInstance(model, ParametricEmission)
        self.assertEqual(model.rpm_exponent, 4.0)
        coef = [[70.0, 0.0, 0.0, 0.0, 0.0]] * 31
        model = parse_emission_model({'kind': 'polynomial', 'coefficients': coef})
        self.assertIsInstance(model, PolynomialEmission)
        with self.assertRaises(ValidationError):
            parse_emission_model({'kind': 'neural'})

    def test_file(self):
        model = ParametricEmission(rpm_exponent=6.0, directivity=UNIFORM)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'emission.json'
            save_emission_model(path, model)
            loaded = load_emission_model(path)
        self.assertEqual(loaded.model_dump(), model.model_dump())
        self.assertArrayAlmostEqual(emit_spectrum(loaded, 3000.0).levels, emit_spectrum(model, 3000.0).levels)


class TestDirectivity(TestCase):

    def test_uniform(self):
        di = directivity_index(1000.0, np.linspace(0.0, math.pi, 13), UNIFORM)
        self.assertArrayAlmostEqual(di, np.zeros(13), atol=1e-12)

    def test_two_level(self):
        pattern = DirectivityPattern(intensity=[[2.0] * 9 + [1.0] * 9])
        self.assertAlmostEqual(float(pattern.spherical_mean()[0]), 1.5, places=6)
        self.assertAlmostEqual(float(directivity_index(500.0, 0.3, pattern)), 10 * math.log10(2.0 / 1.5), places=6)
        self.assertAlmostEqual(float(directivity_index(500.0, 2.0, pattern)), 10 * math.log10(1.0 / 1.5), places=6)
        self.assertAlmostEqual(10 * math.log10(2.0 / 1.5), 1.2494, places=4)

    def test_normalized(self):
        pattern = DirectivityPattern()
        edges = pattern.edges()
        weights = 0.5 * (np.cos(edges[:-1]) - np.cos(edges[1:]))
        mid = 0.5 * (edges[:-1] + edges[1:])
        di = directivity_index(1000.0, mid, pattern)
        self.assertAlmostEqual(float(np.sum(weights * 10**(di / 10))), 1.0, places=9)

    def test_frequency_rows(self):
        pattern = DirectivityPattern(intensity=[[1.0, 1.0], [3.0, 1.0]], frequencies=[100.0, 4000.0])
        self.assertAlmostEqual(float(directivity_index(125.0, 0.1, pattern)), 0.0)
        self.assertAlmostEqual(float(directivity_index(3150.0, 0.1, pattern)), 10 * math.log10(1.5))
        with self.assertRaises(ValidationError):
            DirectivityPattern(intensity=[[1.0], [2.0]])

    def test_non_positive(self):
        with self.assertRaises(DomainError):
            directivity_index(1000.0, 0.1, DirectivityPattern(intensity=[[1.0, 0.0]]))
