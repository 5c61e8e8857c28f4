import json
import os
import tempfile
import unittest

from sdph import builtin, cli, fileio
from sdph.config import PipelineConfig
from tests import SLOW, capture

REDUCED = dict(
    phase_sizes={'O': 2, 'I': 2, 'II': 2},
    size_range=(1, 3),
    phantom_dims=(64, 64, 64),
    phantoms_per_class=2,
    bootstrap_b=2,
)


class ReducedRunTestCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.dir = tempfile.TemporaryDirectory()
        cls.first = os.path.join(cls.dir.name, 'first')
        cls.second = os.path.join(cls.dir.name, 'second')
        cls.summary = cli.cmd_reproduce(PipelineConfig(output_dir=cls.first, **REDUCED))
        cli.cmd_reproduce(PipelineConfig(output_dir=cls.second, **REDUCED))

    @classmethod
    def tearDownClass(cls):
        cls.dir.cleanup()

    def readBytes(self, *parts):
        with open(os.path.join(*parts), 'rb') as f:
            return f.read()

    def test_accuracy(self):
        self.assertGreaterEqual(self.summary['accuracy'], 0.0)
        self.assertLessEqual(self.summary['accuracy'], 1.0)
        self.assertEqual(self.summary['n_test'] + len(self.summary['skipped']), 3)

    def test_outputs(self):
        for phase in builtin.PHASES:
            model = fileio.readModel(os.path.join(self.first, 'models', f"{phase}.json"))
            self.assertEqual(model.phase, phase)
            self.assertEqual(model.c, 2)
        for name in ('evaluation_hellinger.csv', 'evaluation_kl.csv', 'distances.csv',
                     'tree.nwk', 'report.json'):
            self.assertTrue(os.path.exists(os.path.join(self.first, name)), name)
        self.assertEqual(len(os.listdir(os.path.join(self.first, 'diagrams'))), 6)

    def test_report_is_reproducible(self):
        self.assertEqual(self.readBytes(self.first, 'report.json'),
                         self.readBytes(self.second, 'report.json'))
        self.assertEqual(self.readBytes(self.first, 'tree.nwk'),
                         self.readBytes(self.second, 'tree.nwk'))

    def test_distances_cover_every_phantom(self):
        labels, dist = fileio.readMatrix(os.path.join(self.first, 'distances.csv'))
        self.assertEqual(len(labels), 6)
        self.assertEqual(dist.shape, (6, 6))

    def test_confusion_matches_predictions(self):
        report = fileio.readJSON(os.path.join(self.first, 'report.json'))
        total = sum(sum(row.values()) for row in report['confusion'].values())
        self.assertEqual(total, len(report['predictions']))


class ReproduceCommandTestCase(unittest.TestCase):
    def setUp(self):
        self.cwd = os.getcwd()
        self.dir = tempfile.TemporaryDirectory()
        os.chdir(self.dir.name)

    def tearDown(self):
        os.chdir(self.cwd)
        self.dir.cleanup()

    def test_command_line(self):
        with open('reduced.toml', 'w') as f:
            f.write(
                'size_range = [1, 3]\n'
                'phantoms_per_class = 2\n'
                'bootstrap_b = 2\n'
                '[phase_sizes]\n'
                'O = 2\n'
                'I = 2\n'
                'II = 2\n'
            )
        status, out, err = capture(['reproduce', '--config', 'reduced.toml', '-o', 'run'])
        self.assertEqual(status, 0, err)
        summary = json.loads(out)
        self.assertEqual(summary['command'], 'reproduce')
        self.assertIn(os.path.join('run', 'report.json'), summary['outputs'])

    @unittest.skipUnless(SLOW, "full staging run")
    def test_full_run(self):
        status, out, err = capture(['reproduce', '--seed', '42', '-o', 'full'])
        self.assertEqual(status, 0, err)
        self.assertGreaterEqual(json.loads(out)['accuracy'], 0.9)
