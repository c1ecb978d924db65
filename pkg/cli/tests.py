import json
import os
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import pandas as pd
from decouple import Csv
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings, tag

from netmodel.serializers import read_topology
from nettwin.exceptions import DatasetBuildError, InvalidArgument
from simcore.types import SimConfig
from trainer.services import build_dataset, write_dataset
from trainer.types import Dataset, GeneratorSpec
from .models import RunRecord
from .runconfig import RUN_CONFIG_FILE, RunConfig

TINY_MODEL_INI = """
[model]
iterations = 1
path_dim = 4
link_dim = 3
node_dim = 3
link_mlp_hidden = 4
readout_hidden = 4

[train]
folds = 2
epochs = 2
batch_size = 4
lr = 0.01
patience = 2
"""


def write_ini(directory, text):
    path = Path(directory) / 'run.ini'
    path.write_text(text, encoding='utf-8')
    return path


def run(command, **options):
    out = StringIO()
    call_command(command, stdout=out, **options)
    return out.getvalue()


def small_dataset_file(directory, n=6, seed=13, **overrides):
    values = dict(family='nsfnet', num_paths=4, max_hops=3, sim=SimConfig(duration=2.0))
    values.update(overrides)
    dataset = build_dataset(GeneratorSpec(**values), n, seed=seed)
    return write_dataset(dataset, Path(directory) / 'test.jsonl')


class RunConfigTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.ini = write_ini(self.tmp.name, "[run]\nseed = 11\n\n[dataset]\nn = 7\nmean_set = 1,2\n")

    def test_flag_beats_file_beats_default(self):
        config = RunConfig(self.ini)
        self.assertEqual(config.get('run', 'seed', 5, 0, int), 5)
        self.assertEqual(config.get('dataset', 'n', None, 300, int), 7)
        self.assertEqual(config.get('dataset', 'num_paths', None, 10, int), 10)

    def test_values_are_cast(self):
        config = RunConfig(self.ini)
        self.assertEqual(config.get('dataset', 'mean_set', None, (), Csv(cast=float)), [1.0, 2.0])

    def test_environment_overrides_file(self):
        with mock.patch.dict(os.environ, {'seed': '99'}):
            self.assertEqual(RunConfig(self.ini).get('run', 'seed', None, 0, int), 99)

    def test_without_file_defaults_apply(self):
        self.assertEqual(RunConfig().get('train', 'epochs', None, 200, int), 200)

    def test_missing_file(self):
        with self.assertRaises(InvalidArgument):
            RunConfig(Path(self.tmp.name) / 'absent.ini')

    def test_bad_value(self):
        write_ini(self.tmp.name, "[train]\nepochs = many\n")
        with self.assertRaises(InvalidArgument):
            RunConfig(Path(self.tmp.name) / 'run.ini').get('train', 'epochs', None, 200, int)

    def test_unknown_section(self):
        with self.assertRaises(InvalidArgument):
            RunConfig(self.ini).get('deploy', 'host')

    def test_written_config_reads_back(self):
        config = RunConfig(self.ini)
        config.get('run', 'seed', None, 0, int)
        config.get('dataset', 'mean_set', None, (), Csv(cast=float))
        config.get('dataset', 'data_rate', 100.0)
        config.get('model', 'output_width', None, None, int)
        path = config.write(Path(self.tmp.name) / 'out')
        replay = RunConfig(path)
        self.assertEqual(replay.get('run', 'seed', cast=int), 11)
        self.assertEqual(replay.get('dataset', 'data_rate', cast=float), 100.0)
        self.assertEqual(replay.get('dataset', 'mean_set', cast=Csv(cast=float)), [1.0, 2.0])
        self.assertIsNone(replay.get('model', 'output_width', cast=int))

    def test_unused_keys_are_reported(self):
        config = RunConfig(self.ini)
        config.get('run', 'seed', None, 0, int)
        self.assertEqual(sorted(config.unused_keys()), ['dataset.mean_set', 'dataset.n'])


class TopologyCommandTests(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.out = Path(self.tmp.name)

    def test_nsfnet_counts(self):
        output = run('topology', family='nsfnet', out=str(self.out))
        graph = read_topology(self.out / 'topology.json')
        self.assertEqual((graph.num_nodes, graph.num_links), (14, 42))
        self.assertIn('Links: 42', output)
        record = RunRecord.objects.get(command='topology')
        self.assertEqual(record.status, 'succeeded')
        self.assertEqual(record.summary['links'], 42)
        self.assertTrue((self.out / RUN_CONFIG_FILE).exists())

    def test_more_power_more_links(self):
        counts = []
        for ptx in (12.0, 16.0, 20.0):
            out = self.out / f'ptx{ptx:g}'
            run('topology', family='grid', ptx=ptx, out=str(out))
            counts.append(read_topology(out / 'topology.json').num_links)
        self.assertEqual(counts, [48, 84, 164])

    def test_family_is_required(self):
        with self.assertRaises(CommandError) as cm:
            run('topology', out=str(self.out))
        self.assertEqual(cm.exception.returncode, 2)

    def test_out_of_budget_radio_is_a_usage_error(self):
        with self.assertRaises(CommandError) as cm:
            run('topology', family='grid', ptx=-60.0, out=str(self.out))
        self.assertEqual(cm.exception.returncode, 2)

    def test_replay_from_written_config(self):
        run('topology', family='perturbed-grid', seed=4, out=str(self.out / 'a'))
        run('topology', config=str(self.out / 'a' / RUN_CONFIG_FILE), out=str(self.out / 'b'))
        self.assertEqual((self.out / 'a' / 'topology.json').read_bytes(),
                         (self.out / 'b' / 'topology.json').read_bytes())


class DatasetCommandTests(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.out = Path(self.tmp.name)
        self.options = dict(family='nsfnet', num_paths=3, duration=1.0, workers=1)

    def test_zero_samples(self):
        run('dataset', n=0, out=str(self.out), **self.options)
        self.assertEqual((self.out / 'dataset.jsonl').read_text(), '')

    def test_same_seed_same_bytes(self):
        run('dataset', n=3, seed=5, out=str(self.out / 'a'), **self.options)
        run('dataset', n=3, seed=5, out=str(self.out / 'b'), **self.options)
        for name in ('dataset.jsonl', 'dataset.meta.json'):
            self.assertEqual((self.out / 'a' / name).read_bytes(), (self.out / 'b' / name).read_bytes())

    def test_replay_from_written_config(self):
        run('dataset', n=2, seed=8, out=str(self.out / 'a'), **self.options)
        run('dataset', config=str(self.out / 'a' / RUN_CONFIG_FILE), out=str(self.out / 'b'))
        self.assertEqual((self.out / 'a' / 'dataset.jsonl').read_bytes(),
                         (self.out / 'b' / 'dataset.jsonl').read_bytes())

    def test_metadata_records_rate_and_summary(self):
        output = run('dataset', n=2, data_rate=100.0, out=str(self.out), **self.options)
        metadata = json.loads((self.out / 'dataset.meta.json').read_text())
        self.assertEqual(metadata['data_rate_kbps'], 100.0)
        self.assertIn('2 samples, 0 skipped', output)
        self.assertIn('delay:', output)

    def test_spec_file_supplies_defaults(self):
        spec = GeneratorSpec(family='grid', num_paths=2, max_hops=2, sim=SimConfig(duration=0.5))
        spec_path = self.out / 'spec.json'
        spec_path.write_text(json.dumps(spec.as_dict()))
        run('dataset', spec=str(spec_path), n=1, out=str(self.out / 'run'), workers=1)
        metadata = json.loads((self.out / 'run' / 'dataset.meta.json').read_text())
        self.assertEqual(metadata['family'], 'grid')
        self.assertEqual(metadata['spec']['num_paths'], 2)
        self.assertEqual(metadata['spec']['sim']['duration'], 0.5)

    @override_settings(TEST_SAMPLES=2)
    def test_test_role_takes_the_test_sample_count(self):
        run('dataset', role='test', out=str(self.out), **self.options)
        metadata = json.loads((self.out / 'dataset.meta.json').read_text())
        self.assertEqual(metadata['samples'], 2)
        self.assertEqual(metadata['role'], 'test')
        self.assertAlmostEqual(metadata['reference_scale'], 2 / 1000)

    def test_failed_build_exits_one(self):
        with mock.patch('cli.management.commands.dataset.build_dataset',
                        side_effect=DatasetBuildError("5 of 5 samples failed")):
            with self.assertRaises(CommandError) as cm:
                run('dataset', n=5, out=str(self.out), **self.options)
        self.assertEqual(cm.exception.returncode, 1)
        record = RunRecord.objects.get(command='dataset')
        self.assertEqual(record.status, 'failed')
        self.assertIn('samples failed', record.error_message)


class TrainCommandTests(TestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = tempfile.TemporaryDirectory()
        cls.dataset = small_dataset_file(cls.tmp.name, n=8, seed=21)
        cls.ini = write_ini(cls.tmp.name, TINY_MODEL_INI)

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()
        super().tearDownClass()

    def train(self, out, **options):
        return run('train', config=str(self.ini), dataset=str(self.dataset), workers=1,
                   out=str(Path(self.tmp.name) / out), **options)

    def test_writes_checkpoints_and_curves(self):
        self.train('plain', kpi='delay')
        out = Path(self.tmp.name) / 'plain'
        self.assertEqual(sorted(p.name for p in (out / 'checkpoints').glob('*.ckpt')),
                         ['fold0.ckpt', 'fold1.ckpt'])
        self.assertTrue((out / 'checkpoints' / 'ensemble.json').exists())
        curves = pd.read_csv(out / 'curves.csv')
        self.assertLessEqual(len(curves), 2 * 2)
        self.assertEqual(list(curves.columns), ['fold', 'epoch', 'train_loss', 'val_mae'])

    def test_rerun_is_identical(self):
        self.train('first', seed=3)
        self.train('second', seed=3)
        first, second = Path(self.tmp.name) / 'first', Path(self.tmp.name) / 'second'
        for name in ('checkpoints/fold0.ckpt', 'checkpoints/fold1.ckpt', 'curves.csv'):
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes())

    def test_generic_model_refuses_variable_path_counts(self):
        a = build_dataset(GeneratorSpec(family='nsfnet', num_paths=3, sim=SimConfig(duration=1.0)), 3, seed=1)
        b = build_dataset(GeneratorSpec(family='nsfnet', num_paths=4, sim=SimConfig(duration=1.0)), 3, seed=2)
        mixed = write_dataset(Dataset(samples=a.samples + b.samples), Path(self.tmp.name) / 'mixed.jsonl')
        with self.assertRaises(CommandError) as cm:
            run('train', config=str(self.ini), dataset=str(mixed), variant='generic_gnn',
                out=str(Path(self.tmp.name) / 'generic'), workers=1)
        self.assertEqual(cm.exception.returncode, 1)
        self.assertIn('predefined', str(cm.exception))

    def test_missing_dataset_is_a_usage_error(self):
        with self.assertRaises(CommandError) as cm:
            run('train', dataset=str(Path(self.tmp.name) / 'absent.jsonl'),
                out=str(Path(self.tmp.name) / 'absent'))
        self.assertEqual(cm.exception.returncode, 2)


class EvalCommandTests(TestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = tempfile.TemporaryDirectory()
        cls.dataset = small_dataset_file(cls.tmp.name)

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()
        super().tearDownClass()

    def evaluate(self, out, **options):
        out = Path(self.tmp.name) / out
        output = run('eval', dataset=str(self.dataset), out=str(out), workers=1, **options)
        return output, json.loads((out / 'report.json').read_text())

    def test_ground_truth_scores_zero(self):
        output, report = self.evaluate('truth', ground_truth=True, kpi=['delay', 'throughput'])
        self.assertEqual({row['nmae_mean'] for row in report['rows']}, {0.0})
        self.assertIn('delay [all]: ground_truth', output)

    def test_three_simulator_averages(self):
        _, report = self.evaluate('ladder', sim_avg=[1, 2, 3], kpi=['delay'])
        self.assertEqual([row['method'] for row in report['rows']],
                         ['sim_avg_1', 'sim_avg_2', 'sim_avg_3'])

    def test_unreadable_ensemble_is_skipped(self):
        missing = str(Path(self.tmp.name) / 'no-such-ensemble')
        output, report = self.evaluate('skip', ground_truth=True, ensemble=[f'plan_net={missing}'],
                                       kpi=['delay'])
        self.assertIn('plan_net', report['skipped'])
        self.assertIn('Skipping ensemble', output)

    def test_no_predictors_is_a_usage_error(self):
        with self.assertRaises(CommandError) as cm:
            self.evaluate('empty')
        self.assertEqual(cm.exception.returncode, 2)


class BenchCommandTests(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.out = Path(self.tmp.name)

    def test_too_few_repetitions(self):
        with self.assertRaises(CommandError) as cm:
            run('bench', repetitions=2, out=str(self.out))
        self.assertEqual(cm.exception.returncode, 2)

    def test_reports_every_variant_and_the_ratio(self):
        output = run('bench', family='grid', num_paths=3, duration=0.5, repetitions=3,
                     out=str(self.out))
        table = pd.read_csv(self.out / 'bench.csv')
        self.assertEqual(table['target'].tolist(),
                         ['plan_net', 'link_path_only', 'generic_gnn', 'simulation'])
        self.assertTrue((table['median_s'] > 0).all())
        self.assertIn('faster than one simulation run', output)
        self.assertGreater(RunRecord.objects.get(command='bench').summary['ratio'], 0)

    def test_benchmarks_a_congested_scenario(self):
        output = run('bench', family='grid', num_paths=3, data_rate=4000.0, duration=2.0,
                     repetitions=3, out=str(self.out))
        summary = RunRecord.objects.get(command='bench').summary
        self.assertGreater(summary['drops'], 0)
        self.assertGreaterEqual(summary['data_rate_kbps'], 4000.0)
        self.assertIn('drops', output)

    def test_non_positive_data_rate(self):
        with self.assertRaises(CommandError) as cm:
            run('bench', data_rate=0.0, repetitions=3, out=str(self.out))
        self.assertEqual(cm.exception.returncode, 2)

    @tag('slow')
    def test_forward_pass_beats_simulation(self):
        run('bench', family='grid', repetitions=5, out=str(self.out))
        summary = RunRecord.objects.get(command='bench').summary
        self.assertGreater(summary['drops'], 0)
        self.assertGreaterEqual(summary['ratio'], 100)
