from io import StringIO
from os.path import join
from tempfile import TemporaryDirectory
from unittest import TestCase

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from dimerdiscord.fitting import (
    DegenerateData,
    FitConfig,
    InsufficientData,
    InvalidDataset,
    InvalidFitConfig,
    SusceptibilityDataset,
    fit_bleaney_bowers,
    predict,
    read_dataset,
    synthesize,
    write_dataset,
)
from dimerdiscord.magnetics import DimerModel, curie_susceptibility

IRON = DimerModel(j_over_kb=-68, g_factor=2)
COPPER = DimerModel(j_over_kb=35.4, g_factor=2.13)
TEMPERATURES = np.linspace(5, 300, 30)


def write_text(directory, name, text):
    path = join(directory, name)
    with open(path, 'w') as fh:
        fh.write(text)
    return path


class TestSusceptibilityDataset(TestCase):
    def test_valid(self):
        data = SusceptibilityDataset([5, 10], [1e-3, 2e-3], source='lab')
        self.assertEqual(2, len(data))
        self.assertEqual([(5.0, 1e-3), (10.0, 2e-3)], list(data))
        self.assertEqual('lab', data.source)
        with self.assertRaises(ValueError):
            data.chi[0] = 1

    def test_invalid(self):
        """Test ordering, sign and shape requirements."""
        for temperatures, chi in (
            ([10, 5], [1e-3, 1e-3]),
            ([5, 5], [1e-3, 1e-3]),
            ([0, 5], [1e-3, 1e-3]),
            ([5, 10], [1e-3, -1e-6]),
            ([5, 10], [1e-3]),
            ([5, float('nan')], [1e-3, 1e-3]),
        ):
            with self.assertRaises(InvalidDataset):
                SusceptibilityDataset(temperatures, chi)


class TestPredict(TestCase):
    def test_empty(self):
        self.assertEqual(0, len(predict(IRON, [])))

    def test_uncoupled(self):
        """Test J=0 is two independent Curie spins."""
        temperatures = [2, 50, 300]
        assert_allclose(
            [curie_susceptibility(2.1, t) for t in temperatures],
            predict(DimerModel(0, 2.1), temperatures),
            rtol=1e-14,
        )

    def test_matches_synthesize(self):
        data = synthesize(COPPER, TEMPERATURES)
        assert_array_equal(data.chi, predict(COPPER, TEMPERATURES))


class TestFitConfig(TestCase):
    def test_defaults(self):
        config = FitConfig()
        self.assertEqual(('j_over_kb', 'g'), config.free_parameters)
        self.assertEqual(DimerModel(-1), config.initial_guess)
        self.assertEqual((-500.0, 500.0), config.bounds['j_over_kb'])
        self.assertEqual(8, config.starts)

    def test_bounds_merge(self):
        config = FitConfig(bounds={'g': (1.9, 2.3)})
        self.assertEqual((1.9, 2.3), config.bounds['g'])
        self.assertEqual((0.0, 0.2), config.bounds['impurity_fraction'])

    def test_invalid(self):
        """Test every rejected configuration."""
        for kwargs in (
            {'free_parameters': ('j_over_kb', 'spin')},
            {'free_parameters': ()},
            {'free_parameters': ('g', 'g')},
            {'bounds': {'g': (2.5, 2.0)}},
            {'tolerance': 0},
            {'starts': 0},
            {'max_iterations': 0},
            {'initial_guess': DimerModel(-600)},
        ):
            with self.assertRaises(InvalidFitConfig):
                FitConfig(**kwargs)

    def test_fixed_parameter_outside_bounds(self):
        """Test only free parameters are held to their bounds."""
        config = FitConfig(
            free_parameters=('g',), initial_guess=DimerModel(-600)
        )
        self.assertEqual(-600, config.initial_guess.j_over_kb)


class TestFitBleaneyBowers(TestCase):
    def test_iron_noise_free(self):
        """Test the antiferromagnetic dimer comes back exactly."""
        data = synthesize(IRON, TEMPERATURES)
        result = fit_bleaney_bowers(data, FitConfig())
        self.assertAlmostEqual(-68, result.model.j_over_kb, delta=0.01)
        self.assertAlmostEqual(2.0, result.model.g, delta=0.001)
        self.assertLessEqual(result.cost, 1e-18)

    def test_copper_noise_free(self):
        """Test the ferromagnetic dimer comes back exactly."""
        data = synthesize(COPPER, TEMPERATURES)
        result = fit_bleaney_bowers(data, FitConfig())
        self.assertAlmostEqual(35.4, result.model.j_over_kb, delta=0.01)
        self.assertAlmostEqual(2.13, result.model.g, delta=0.001)
        self.assertLessEqual(result.cost, 1e-18)

    def test_copper_noisy(self):
        """Test 1% multiplicative noise with relative weighting."""
        data = synthesize(COPPER, TEMPERATURES, noise=0.01, seed=42)
        result = fit_bleaney_bowers(data, FitConfig(weighted=True))
        # J spread over seeds is about 2.9 K with 1/chi^2 weights
        self.assertAlmostEqual(35.4, result.model.j_over_kb, delta=3)
        self.assertAlmostEqual(2.13, result.model.g, delta=0.03)
        self.assertEqual(30, len(result.residuals))

    def test_residuals(self):
        data = synthesize(COPPER, TEMPERATURES, noise=0.01, seed=1)
        result = fit_bleaney_bowers(data, FitConfig(starts=2))
        assert_array_equal(
            data.chi - predict(result.model, data.temperatures),
            result.residuals,
        )
        self.assertAlmostEqual(
            float(np.sum(result.residuals**2)), result.cost, delta=1e-30
        )

    def test_impurity_free(self):
        """Test a clean dataset fits no impurity."""
        data = synthesize(IRON, TEMPERATURES)
        config = FitConfig(
            free_parameters=('j_over_kb', 'g', 'impurity_fraction')
        )
        result = fit_bleaney_bowers(data, config)
        self.assertLessEqual(result.model.impurity_fraction, 1e-6)
        self.assertAlmostEqual(-68, result.model.j_over_kb, delta=0.1)

    def test_fixed_g_keeps_components(self):
        """Test a fixed anisotropic g survives the fit untouched."""
        model = DimerModel(-20, g_factor=(2, 2, 2.39))
        data = synthesize(model, TEMPERATURES)
        config = FitConfig(
            free_parameters=('j_over_kb',),
            initial_guess=DimerModel(-5, g_factor=(2, 2, 2.39)),
        )
        result = fit_bleaney_bowers(data, config)
        self.assertEqual((2.0, 2.0, 2.39), result.model.g_factor)
        self.assertAlmostEqual(-20, result.model.j_over_kb, delta=0.01)

    def test_deterministic(self):
        data = synthesize(COPPER, TEMPERATURES, noise=0.02, seed=3)
        config = FitConfig(starts=3, seed=9)
        first = fit_bleaney_bowers(data, config)
        second = fit_bleaney_bowers(data, config)
        self.assertEqual(first.model, second.model)
        self.assertEqual(first.cost, second.cost)
        self.assertEqual(first.start, second.start)

    def test_insufficient_data(self):
        """Test two records cannot fit two parameters."""
        data = SusceptibilityDataset([5, 300], [1e-3, 2e-3])
        with self.assertRaises(InsufficientData) as ctx:
            fit_bleaney_bowers(data, FitConfig())
        self.assertIn('at least 4', str(ctx.exception))

    def test_degenerate_data(self):
        """Test a sub-kelvin temperature window is rejected."""
        temperatures = [10, 10.2, 10.4, 10.6, 10.8]
        data = synthesize(IRON, temperatures)
        with self.assertRaises(DegenerateData):
            fit_bleaney_bowers(data, FitConfig())

    def test_weighted_needs_positive_chi(self):
        data = SusceptibilityDataset([5, 50, 100, 200], [0, 1e-3, 2e-3, 1e-3])
        with self.assertRaises(InvalidFitConfig):
            fit_bleaney_bowers(data, FitConfig(weighted=True))


class TestSynthesize(TestCase):
    def test_noise(self):
        """Test seeded noise is reproducible and relative."""
        clean = synthesize(COPPER, TEMPERATURES)
        first = synthesize(COPPER, TEMPERATURES, noise=0.01, seed=5)
        second = synthesize(COPPER, TEMPERATURES, noise=0.01, seed=5)
        other = synthesize(COPPER, TEMPERATURES, noise=0.01, seed=6)
        assert_array_equal(first.chi, second.chi)
        self.assertFalse(np.array_equal(first.chi, other.chi))
        self.assertLess(np.max(np.abs(first.chi / clean.chi - 1)), 0.06)

    def test_source(self):
        self.assertIn('synthetic', synthesize(IRON, [5, 10]).source)
        self.assertEqual('x', synthesize(IRON, [5, 10], source='x').source)


class TestDatasetFiles(TestCase):
    def test_write_then_read(self):
        """Test comments carry the source and values keep 12 digits."""
        data = synthesize(COPPER, TEMPERATURES, source='SYNTHETIC copper')
        out = StringIO()
        write_dataset(data, out)
        text = out.getvalue()
        self.assertTrue(text.startswith('# SYNTHETIC copper\n'))
        self.assertIn('\ntemperature_K,chi_emu_per_mol\n', text)

        with TemporaryDirectory() as directory:
            path = write_text(directory, 'copper.csv', text)
            read = read_dataset(path)
        self.assertEqual('SYNTHETIC copper', read.source)
        assert_allclose(data.temperatures, read.temperatures, rtol=1e-11)
        assert_allclose(data.chi, read.chi, rtol=1e-11)

    def test_source_defaults_to_path(self):
        with TemporaryDirectory() as directory:
            path = write_text(
                directory,
                'plain.csv',
                'temperature_K,chi_emu_per_mol\n5,0.01\n\n10,0.02\n',
            )
            data = read_dataset(path)
        self.assertEqual(path, data.source)
        self.assertEqual([(5.0, 0.01), (10.0, 0.02)], list(data))

    def test_header_only(self):
        with TemporaryDirectory() as directory:
            path = write_text(
                directory,
                'empty.csv',
                '# nothing\ntemperature_K,chi_emu_per_mol\n',
            )
            self.assertEqual(0, len(read_dataset(path)))

    def test_invalid_files(self):
        """Test each malformed file raises InvalidDataset."""
        for name, text, message in (
            ('header.csv', 'T,chi\n5,0.01\n', 'expected temperature_K'),
            (
                'text.csv',
                'temperature_K,chi_emu_per_mol\n5,abc\n',
                'non-numeric',
            ),
            ('comments.csv', '# only a comment\n', 'no header'),
            (
                'order.csv',
                'temperature_K,chi_emu_per_mol\n10,0.01\n5,0.02\n',
                'increasing',
            ),
            (
                'negative.csv',
                'temperature_K,chi_emu_per_mol\n5,0.01\n10,-0.02\n',
                '>= 0',
            ),
        ):
            with TemporaryDirectory() as directory:
                path = write_text(directory, name, text)
                with self.assertRaises(InvalidDataset) as ctx:
                    read_dataset(path)
            self.assertIn(message, str(ctx.exception))

    def test_missing_file(self):
        with TemporaryDirectory() as directory:
            with self.assertRaises(InvalidDataset) as ctx:
                read_dataset(join(directory, 'missing.csv'))
        self.assertIn('unable to read', str(ctx.exception))
