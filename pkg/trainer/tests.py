import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase, tag

from autodiff.tensor import no_grad
from netmodel.services import gen_nsfnet, scenario_from_pairs
from netmodel.types import TrafficMatrix
from nettwin.exceptions import (
    DatasetBuildError, FixedOutputWidthError, InvalidArgument, TrainingError,
)
from plannet.config import GENERIC_GNN, ModelConfig
from plannet.services import predict
from simcore.services import simulate
from simcore.types import FlowKpis, SimConfig
from .serializers import sample_from_line, sample_to_line, spec_from_dict, train_config_from_dict
from .services import (
    Standardizer, build_dataset, load_ensemble, predict_ensemble, read_dataset,
    split_cv, train, write_dataset, write_ensemble,
)
from .services.ensemble import Member
from .types import Dataset, GeneratorSpec, Sample, TrainConfig


def quick_spec(**overrides):
    values = dict(family='nsfnet', num_paths=4, max_hops=3,
                  sim=SimConfig(duration=1.0, packet_size=512, queue_capacity=50,
                                backoff_mean=0.001, prop_delay=1e-5))
    values.update(overrides)
    return GeneratorSpec(**values)


def tiny_model(**overrides):
    values = dict(iterations=2, path_dim=6, link_dim=4, node_dim=4,
                  link_mlp_hidden=(8,), readout_hidden=(8,))
    values.update(overrides)
    return ModelConfig(**values)


def quick_train(**overrides):
    values = dict(kpi='delay', folds=3, epochs=4, batch_size=4, lr=1e-2, l2=1e-4, patience=3, seed=1)
    values.update(overrides)
    return TrainConfig(**values)


def undefined_kpis(count):
    return [FlowKpis(None, None, 0.0, 0, 0, 0) for _ in range(count)]


class GeneratorSpecTests(SimpleTestCase):
    def test_defaults_come_from_settings(self):
        spec = GeneratorSpec()
        self.assertEqual(spec.num_paths, 10)
        self.assertEqual(spec.mean_set, (1.0, 10.0, 20.0))
        self.assertEqual(spec.data_rate, 100.0)

    def test_rejects_unknown_family(self):
        with self.assertRaises(InvalidArgument):
            GeneratorSpec(family='ring')

    def test_survives_metadata(self):
        spec = quick_spec(family='perturbed-grid')
        self.assertEqual(spec_from_dict(spec.as_dict()), spec)


class TrainConfigTests(SimpleTestCase):
    def test_zero_learning_rate_rejected(self):
        with self.assertRaises(InvalidArgument):
            TrainConfig(lr=0)

    def test_single_fold_rejected(self):
        with self.assertRaises(InvalidArgument):
            TrainConfig(folds=1)

    def test_unknown_kpi_rejected(self):
        with self.assertRaises(InvalidArgument):
            TrainConfig(kpi='loss')

    def test_manifest_round_trip(self):
        config = quick_train(kpi='jitter')
        self.assertEqual(train_config_from_dict(config.as_dict()), config)


class BuildDatasetTests(SimpleTestCase):
    def test_zero_samples(self):
        dataset = build_dataset(quick_spec(), 0, seed=3)
        self.assertEqual(len(dataset), 0)
        self.assertEqual(dataset.metadata['samples'], 0)

    def test_same_seed_same_bytes(self):
        with tempfile.TemporaryDirectory() as tmp:
            first = write_dataset(build_dataset(quick_spec(), 3, seed=5), Path(tmp) / 'a.jsonl')
            second = write_dataset(build_dataset(quick_spec(), 3, seed=5), Path(tmp) / 'b.jsonl')
            self.assertEqual(first.read_bytes(), second.read_bytes())

    def test_nsfnet_paths_and_traffic(self):
        spec = quick_spec(num_paths=10, sim=SimConfig(duration=0.5))
        dataset = build_dataset(spec, 100, seed=7)
        self.assertEqual(len(dataset), 100)
        for sample in dataset:
            self.assertEqual(sample.scenario.num_paths, 10)
            self.assertEqual(len(sample.kpis), 10)
            for row in sample.scenario.traffic.rows:
                self.assertTrue(set(row) <= {1.0, 10.0, 20.0})
        self.assertEqual(dataset.metadata['data_rate_kbps'], 100.0)

    def test_perturbed_grid_draws_new_topologies(self):
        dataset = build_dataset(quick_spec(family='perturbed-grid'), 3, seed=2)
        positions = {tuple(n.position for n in s.scenario.graph.nodes) for s in dataset}
        self.assertEqual(len(positions), 3)

    def test_unroutable_spec_aborts(self):
        with self.assertRaises(DatasetBuildError):
            build_dataset(quick_spec(num_paths=200, max_hops=1), 5, seed=0)

    def test_rare_failures_are_skipped(self):
        calls = []

        def flaky(*args, **kwargs):
            calls.append(1)
            if len(calls) == 1:
                raise RuntimeError("simulated crash")
            return simulate(*args, **kwargs)

        spec = quick_spec(sim=SimConfig(duration=0.2))
        with mock.patch('trainer.services.dataset.simulate', side_effect=flaky):
            dataset = build_dataset(spec, 120, seed=1)
        self.assertEqual(len(dataset), 119)
        self.assertEqual(dataset.metadata['skipped'], [0])

    def test_file_round_trip(self):
        dataset = build_dataset(quick_spec(), 2, seed=9)
        with tempfile.TemporaryDirectory() as tmp:
            path = write_dataset(dataset, Path(tmp) / 'data.jsonl')
            self.assertTrue((Path(tmp) / 'data.meta.json').exists())
            loaded = read_dataset(path)
        self.assertEqual(loaded.metadata, dataset.metadata)
        for original, copy in zip(dataset, loaded):
            self.assertEqual(copy.kpis, original.kpis)
            self.assertEqual(copy.scenario.paths, original.scenario.paths)
            self.assertEqual(sample_to_line(copy), sample_to_line(original))

    def test_role_sets_the_reference_scale(self):
        self.assertEqual(build_dataset(quick_spec(), 2, seed=9).metadata['reference_scale'], 2 / 1500)
        metadata = build_dataset(quick_spec(), 2, seed=9, role='test').metadata
        self.assertEqual(metadata['reference_samples'], 1000)
        self.assertEqual(metadata['reference_scale'], 2 / 1000)

    def test_unknown_role(self):
        with self.assertRaises(InvalidArgument):
            build_dataset(quick_spec(), 1, seed=9, role='holdout')

    def test_inconsistent_line_rejected(self):
        dataset = build_dataset(quick_spec(), 1, seed=9)
        line = sample_to_line(dataset[0]).replace('"paths": [[', '"paths": [[999, ', 1)
        with self.assertRaises(InvalidArgument):
            sample_from_line(line)


class SplitTests(SimpleTestCase):
    def test_even_split(self):
        self.assertEqual([len(val) for _, val in split_cv(9, 3, seed=0)], [3, 3, 3])

    def test_remainder_goes_to_first_folds(self):
        self.assertEqual([len(val) for _, val in split_cv(10, 3, seed=0)], [4, 3, 3])

    def test_partition(self):
        splits = split_cv(23, 4, seed=11)
        union = np.concatenate([val for _, val in splits])
        self.assertEqual(sorted(union.tolist()), list(range(23)))
        for train_idx, val_idx in splits:
            self.assertFalse(set(train_idx) & set(val_idx))
            self.assertEqual(len(train_idx) + len(val_idx), 23)

    def test_seeded(self):
        first, second = split_cv(12, 3, seed=4), split_cv(12, 3, seed=4)
        for (_, a), (_, b) in zip(first, second):
            np.testing.assert_array_equal(a, b)

    def test_more_folds_than_samples(self):
        with self.assertRaises(InvalidArgument):
            split_cv(2, 3, seed=0)


class TrainTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.dataset = build_dataset(quick_spec(sim=SimConfig(duration=2.0)), 12, seed=21)

    def test_curves_and_fold_isolation(self):
        result = train(self.dataset, tiny_model(), quick_train())
        self.assertEqual(len(result.folds), 3)
        self.assertLessEqual(len(result.curves), 4 * 3)
        self.assertEqual(list(result.curves.columns), ['fold', 'epoch', 'train_loss', 'val_mae'])
        for fold in result.folds:
            self.assertFalse(set(fold.updated_on) & set(fold.val_indices))
            self.assertLessEqual(set(fold.updated_on), set(fold.train_indices))
            self.assertEqual(fold.best_val_mae, min(mae for _, _, mae in fold.curve))

    def test_deterministic(self):
        first = train(self.dataset, tiny_model(), quick_train(epochs=2))
        second = train(self.dataset, tiny_model(), quick_train(epochs=2))
        for a, b in zip(first.folds, second.folds):
            for name in a.params:
                np.testing.assert_array_equal(a.params[name].values, b.params[name].values)

    def test_undefined_targets_fail(self):
        samples = [Sample(s.scenario, undefined_kpis(s.scenario.num_paths), s.seed) for s in self.dataset]
        with self.assertRaises(TrainingError):
            train(Dataset(samples=samples), tiny_model(), quick_train())

    def test_non_finite_validation_fails(self):
        with mock.patch('trainer.services.training.validation_mae', return_value=float('nan')):
            with self.assertRaises(TrainingError) as cm:
                train(self.dataset, tiny_model(), quick_train(epochs=2))
        self.assertIn('finite validation MAE', str(cm.exception))

    def test_empty_dataset_fails(self):
        with self.assertRaises(TrainingError):
            train(Dataset(), tiny_model(), quick_train())

    def test_generic_model_refuses_variable_path_counts(self):
        graph = gen_nsfnet()
        short = scenario_from_pairs(graph, [(0, 1)], TrafficMatrix([(1.0, 1.0)], 100.0))
        samples = list(self.dataset.samples) + [Sample(short, undefined_kpis(1), 0)]
        with self.assertRaises(FixedOutputWidthError):
            train(Dataset(samples=samples), tiny_model(variant=GENERIC_GNN, output_width=4), quick_train())

    def test_generic_model_trains_on_fixed_width(self):
        result = train(self.dataset, tiny_model(variant=GENERIC_GNN, output_width=4), quick_train(epochs=2))
        self.assertEqual(len(result.folds), 3)

    @tag('slow')
    def test_training_loss_decreases(self):
        dataset = build_dataset(quick_spec(num_paths=10, sim=SimConfig(duration=5.0)), 50, seed=8)
        result = train(dataset, ModelConfig(), quick_train(epochs=50, patience=50, lr=1e-3, batch_size=16))
        for fold in result.folds:
            self.assertLess(fold.curve[49][1], fold.curve[0][1])


class EnsembleTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.dataset = build_dataset(quick_spec(sim=SimConfig(duration=2.0)), 9, seed=31)
        cls.model = tiny_model()
        cls.config = quick_train(epochs=2)
        cls.result = train(cls.dataset, cls.model, cls.config)

    def member(self, fold, kpi='delay'):
        result = self.result.folds[fold]
        return Member(result.params, self.model, kpi, result.standardizer, {})

    def raw(self, fold, scenarios):
        result = self.result.folds[fold]
        with no_grad():
            return result.standardizer.invert(predict(scenarios, result.params, self.model).values)

    def test_single_member_is_its_own_output(self):
        scenario = self.dataset[0].scenario
        np.testing.assert_allclose(predict_ensemble([self.member(0)], scenario),
                                   self.raw(0, [scenario]), atol=1e-12)

    def test_two_members_average(self):
        scenarios = self.dataset.scenarios([0, 1])
        expected = (self.raw(0, scenarios) + self.raw(1, scenarios)) / 2
        np.testing.assert_allclose(predict_ensemble([self.member(0), self.member(1)], scenarios),
                                   expected, atol=1e-12)

    def test_mixed_kpis_rejected(self):
        with self.assertRaises(InvalidArgument):
            predict_ensemble([self.member(0), self.member(1, kpi='jitter')], self.dataset[0].scenario)

    def test_empty_ensemble_rejected(self):
        with self.assertRaises(InvalidArgument):
            predict_ensemble([], self.dataset[0].scenario)

    def test_directory_round_trip(self):
        scenarios = self.dataset.scenarios()
        members = [self.member(i) for i in range(3)]
        with tempfile.TemporaryDirectory() as tmp:
            write_ensemble(tmp, self.result, self.model, self.config, dataset_hash='abc')
            loaded = load_ensemble(tmp)
            single = load_ensemble(Path(tmp) / 'fold1.ckpt')
        self.assertEqual(len(loaded), 3)
        self.assertEqual(loaded[0].manifest['dataset_hash'], 'abc')
        np.testing.assert_array_equal(predict_ensemble(loaded, scenarios), predict_ensemble(members, scenarios))
        np.testing.assert_array_equal(predict_ensemble(single, scenarios), predict_ensemble(members[1:2], scenarios))


class StandardizerTests(SimpleTestCase):
    def test_ignores_undefined_values(self):
        scaler = Standardizer.fit([1.0, np.nan, 3.0])
        self.assertEqual((scaler.mean, scaler.std), (2.0, 1.0))
        np.testing.assert_allclose(scaler.invert(scaler.apply([5.0, -1.0])), [5.0, -1.0])

    def test_constant_targets_keep_unit_scale(self):
        self.assertEqual(Standardizer.fit([4.0, 4.0]).std, 1.0)
