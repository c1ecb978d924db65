import json
import tempfile
from pathlib import Path

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase, tag
from hypothesis import given, settings as hypothesis_settings, strategies as st

from netmodel.types import RadioConfig
from nettwin.exceptions import DegenerateSpreadError, InvalidArgument
from plannet.config import GENERIC_GNN, LINK_PATH_ONLY, PLAN_NET, ModelConfig
from plannet.services import build_params
from simcore.types import SimConfig
from trainer.services import Standardizer, build_dataset, train
from trainer.services.ensemble import Member
from trainer.types import GeneratorSpec, TrainConfig
from .services import (
    EnsemblePredictor, GroundTruth, SimulatorAverage, box_stats, compare, iqr,
    mae, nmae, signif_lower,
)


def small_dataset(n, seed, duration=2.0, **overrides):
    values = dict(family='nsfnet', num_paths=4, max_hops=3, sim=SimConfig(duration=duration))
    values.update(overrides)
    return build_dataset(GeneratorSpec(**values), n, seed=seed)


def tiny_member(variant='plan_net', **overrides):
    config = ModelConfig(iterations=1, path_dim=4, link_dim=3, node_dim=3, link_mlp_hidden=(4,),
                         readout_hidden=(4,), variant=variant, **overrides)
    params = build_params(config, seed=0) if variant != GENERIC_GNN else None
    return Member(params, config, 'delay', Standardizer(0.0, 1.0), {})


class MaeTests(SimpleTestCase):
    def test_exact_prediction(self):
        self.assertEqual(mae([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]).mean, 0.0)

    def test_unit_errors(self):
        result = mae([0.0, 2.0], [1.0, 1.0])
        np.testing.assert_array_equal(result.errors, [1.0, 1.0])
        self.assertEqual(result.mean, 1.0)

    def test_matches_direct_recomputation(self):
        rng = np.random.default_rng(0)
        truth = rng.normal(size=1000)
        pred = rng.permutation(truth)
        expected = sum(abs(t - p) for t, p in zip(truth.tolist(), pred.tolist())) / 1000
        self.assertAlmostEqual(mae(truth, pred).mean, expected, delta=1e-12)

    def test_undefined_truth_is_excluded(self):
        result = mae([None, 1.0, np.nan, 4.0], [9.0, 2.0, 9.0, 4.0])
        np.testing.assert_array_equal(result.errors, [1.0, 0.0])

    def test_length_mismatch(self):
        with self.assertRaises(InvalidArgument):
            mae([1.0, 2.0], [1.0])

    def test_no_defined_pairs(self):
        with self.assertRaises(InvalidArgument):
            mae([None, None], [1.0, 2.0])


class IqrTests(SimpleTestCase):
    def test_odd_symmetric(self):
        self.assertEqual(iqr([1, 2, 3, 4, 5]), 2.0)

    def test_constant(self):
        self.assertEqual(iqr([7.0] * 6), 0.0)

    def test_uniform_sample(self):
        values = np.random.default_rng(3).uniform(0, 1, 10_000)
        self.assertAlmostEqual(iqr(values), 0.5, delta=0.02)

    def test_too_few_values(self):
        with self.assertRaises(InvalidArgument):
            iqr([1.0, 2.0, None, 3.0])


class NmaeTests(SimpleTestCase):
    def test_shifted_prediction(self):
        truth = np.array([0.0, 1.0, 2.0, 3.0])
        self.assertEqual(nmae(truth, truth + 1), 2 / 3)

    def test_exact_prediction(self):
        self.assertEqual(nmae([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 2.0, 3.0]), 0.0)

    def test_zero_spread(self):
        with self.assertRaises(DegenerateSpreadError):
            nmae([2.0] * 5, [1.0] * 5)

    @hypothesis_settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 32 - 1),
           st.floats(min_value=1e-3, max_value=1e3))
    def test_joint_rescaling(self, seed, scale):
        rng = np.random.default_rng(seed)
        truth = rng.normal(size=40)
        pred = truth + rng.normal(size=40)
        self.assertAlmostEqual(nmae(truth * scale, pred * scale), nmae(truth, pred), delta=1e-12)


class BoxStatsTests(SimpleTestCase):
    def test_constant_values(self):
        box = box_stats([4.0] * 7)
        self.assertEqual(box[:5], (4.0,) * 5)
        self.assertEqual(box.outliers, [])

    def test_far_point_is_an_outlier(self):
        box = box_stats(list(range(1, 10)) + [100])
        self.assertEqual(box.outliers, [100.0])
        self.assertEqual(box.high_whisker, 9.0)
        self.assertEqual(box.low_whisker, 1.0)

    def test_order_does_not_matter(self):
        values = np.random.default_rng(5).exponential(size=51)
        self.assertEqual(box_stats(values), box_stats(values[::-1]))

    def test_quartiles_agree_with_iqr(self):
        values = np.random.default_rng(6).normal(size=37)
        box = box_stats(values)
        self.assertAlmostEqual(box.q3 - box.q1, iqr(values), delta=1e-15)

    def test_needs_a_value(self):
        with self.assertRaises(InvalidArgument):
            box_stats([])


class SignificanceTests(SimpleTestCase):
    def test_identical_errors(self):
        errors = np.arange(20.0)
        self.assertFalse(signif_lower(errors, errors))

    def test_uniformly_lower(self):
        b = np.random.default_rng(1).uniform(1, 2, 50)
        self.assertTrue(signif_lower(b - 1, b))
        self.assertFalse(signif_lower(b, b - 1))

    def test_small_samples_use_exact_test(self):
        b = np.arange(1.0, 13.0)
        self.assertTrue(signif_lower(b - 0.5, b))

    def test_length_mismatch(self):
        with self.assertRaises(InvalidArgument):
            signif_lower(np.ones(12), np.ones(11))

    def test_too_few_pairs(self):
        with self.assertRaises(InvalidArgument):
            signif_lower(np.ones(5), np.zeros(5))

    def test_false_positive_rate_matches_level(self):
        rng = np.random.default_rng(2)
        rejections = sum(
            signif_lower(rng.exponential(size=30), rng.exponential(size=30), alpha=0.05)
            for _ in range(1000))
        self.assertAlmostEqual(rejections / 1000, 0.05, delta=0.02)


class CompareTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.dataset = small_dataset(6, seed=13)
        cls.sim = SimConfig(duration=2.0)

    def test_ground_truth_scores_zero(self):
        report = compare(self.dataset, [GroundTruth()], ['delay', 'throughput'])
        self.assertEqual(len(report.rows), 2)
        self.assertTrue((report.rows['nmae_mean'] == 0).all())
        self.assertTrue((report.rows['mae_mean'] == 0).all())

    def test_one_row_per_simulator_average(self):
        predictors = [SimulatorAverage(runs, self.sim) for runs in (1, 2, 3)]
        report = compare(self.dataset, predictors, ['delay', 'drops'])
        for kpi in ('delay', 'drops'):
            methods = report.rows[report.rows['kpi'] == kpi]['method'].tolist()
            self.assertEqual(methods, ['sim_avg_1', 'sim_avg_2', 'sim_avg_3'])

    def test_ensemble_covers_its_kpi_only(self):
        predictors = [GroundTruth(), EnsemblePredictor([tiny_member()], name='plan_net')]
        report = compare(self.dataset, predictors, ['delay', 'jitter'])
        jitter_methods = report.rows[report.rows['kpi'] == 'jitter']['method'].tolist()
        self.assertEqual(jitter_methods, ['ground_truth'])
        self.assertEqual(report.winners()[('delay', 'all')], 'ground_truth')
        delay = report.rows[(report.rows['kpi'] == 'delay') & (report.rows['method'] == 'ground_truth')]
        self.assertEqual(delay['significant_vs'].iloc[0], ['plan_net'])

    def test_fixed_width_model_is_skipped(self):
        generic = EnsemblePredictor([tiny_member(GENERIC_GNN, output_width=3)], name='generic')
        report = compare(self.dataset, [GroundTruth(), generic], ['delay'])
        self.assertIn('generic', report.skipped)
        self.assertEqual(report.rows['method'].tolist(), ['ground_truth'])

    def test_groups_never_mix(self):
        other = small_dataset(4, seed=14, data_rate=200.0)
        mixed = type(self.dataset)(samples=self.dataset.samples + other.samples)
        report = compare(mixed, [GroundTruth()], ['throughput'], group_by='data_rate')
        self.assertEqual(report.rows['group'].tolist(), ['data_rate=100', 'data_rate=200'])
        self.assertEqual(report.rows['n'].tolist(), [24, 16])

    def test_unknown_grouping(self):
        with self.assertRaises(InvalidArgument):
            compare(self.dataset, [GroundTruth()], ['delay'], group_by='weekday')

    def test_written_report_is_reproducible(self):
        predictors = [GroundTruth(), SimulatorAverage(1, self.sim)]
        with tempfile.TemporaryDirectory() as tmp:
            first = compare(self.dataset, predictors, ['delay']).write(Path(tmp) / 'a')
            second = compare(self.dataset, predictors, ['delay']).write(Path(tmp) / 'b')
            for name in ('report.csv', 'report.json', 'boxplot.csv'):
                self.assertEqual((first / name).read_bytes(), (second / name).read_bytes())
            payload = json.loads((first / 'report.json').read_text())
        self.assertEqual({row['method'] for row in payload['rows']}, {'ground_truth', 'sim_avg_1'})

    @tag('slow')
    def test_more_runs_lower_the_error(self):
        dataset = small_dataset(100, seed=17, duration=10.0, num_paths=10)
        sim = SimConfig(duration=10.0)
        predictors = [SimulatorAverage(runs, sim) for runs in (1, 2, 3)]
        report = compare(dataset, predictors, ['delay'])
        rows = report.rows.set_index('method')
        self.assertLessEqual(rows.loc['sim_avg_3', 'nmae_mean'], rows.loc['sim_avg_2', 'nmae_mean'])
        self.assertLessEqual(rows.loc['sim_avg_2', 'nmae_mean'], rows.loc['sim_avg_1', 'nmae_mean'])
        self.assertIn('sim_avg_2', rows.loc['sim_avg_3', 'significant_vs'])
        self.assertIn('sim_avg_1', rows.loc['sim_avg_2', 'significant_vs'])


class VariantOrderingTests(SimpleTestCase):
    """Trained plan_net against link_path_only on the grid Wi-Fi delay task."""

    def nmae_of(self, variant, train_set, test_set, seed):
        train_config = TrainConfig(kpi='delay', seed=seed)
        model_config = ModelConfig(variant=variant)
        result = train(train_set, model_config, train_config, workers=settings.DEFAULT_WORKERS)
        members = [Member(fold.params, model_config, 'delay', fold.standardizer, {})
                   for fold in result.folds]
        report = compare(test_set, [EnsemblePredictor(members, name=variant)], ['delay'],
                         workers=settings.DEFAULT_WORKERS)
        return float(report.rows.set_index('method').loc[variant, 'nmae_mean'])

    @tag('slow')
    def test_plan_net_beats_link_path_only(self):
        spec = GeneratorSpec(family='grid', radio=RadioConfig(ptx_dbm=16.0))
        scores = {PLAN_NET: [], LINK_PATH_ONLY: []}
        for seed in (1, 2, 3):
            train_set = build_dataset(spec, settings.TRAIN_SAMPLES, seed=seed,
                                      workers=settings.DEFAULT_WORKERS)
            test_set = build_dataset(spec, settings.TEST_SAMPLES, seed=seed + 1000,
                                     workers=settings.DEFAULT_WORKERS, role='test')
            for variant in scores:
                scores[variant].append(self.nmae_of(variant, train_set, test_set, seed))
        self.assertLess(np.mean(scores[PLAN_NET]), np.mean(scores[LINK_PATH_ONLY]), scores)
