import math
import os
import tempfile
import unittest
from unittest import mock

import numpy as np

from sdph import builtin, cubical, fileio, lang, phantom, sdt
from tests import fieldOf, randomIntegerField


class FileTestCase(unittest.TestCase):
    def setUp(self):
        self.dir = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.dir.cleanup()

    def path(self, name):
        return os.path.join(self.dir.name, name)

    def writeRaw(self, name, data):
        path = self.path(name)
        with open(path, 'wb') as f:
            f.write(data)
        return path


class GridFileTestCase(FileTestCase):
    def test_volume(self):
        vol = phantom.make_ball((9, 7, 7), (4, 3, 3), 2)
        vol = lang.BinaryVolume(vol.dims, (1.0, 1.0, 2.0), vol.voxels, seed=3)
        fileio.writeVolume(self.path('ball.vol'), vol)
        self.assertEqual(fileio.readVolume(self.path('ball.vol')), vol)

    def test_field(self):
        field = sdt.signed_distance(phantom.make_ball((9, 7, 7), (4, 3, 3), 2))
        fileio.writeField(self.path('ball.fld'), field)
        self.assertEqual(fileio.readField(self.path('ball.fld')), field)

    def test_bad_magic(self):
        path = self.writeRaw('x.vol', b'NOTAVOL\n{}\n')
        with self.assertRaises(builtin.FormatError) as ctx:
            fileio.readVolume(path)
        self.assertEqual(ctx.exception.line, 1)

    def test_truncated_body(self):
        header = b'{"dims": [2, 2, 2], "seed": null, "spacing": [1, 1, 1]}\n'
        path = self.writeRaw('short.vol', builtin.VOLUME_MAGIC + header + b'\x00' * 7)
        with self.assertRaises(builtin.FormatError) as ctx:
            fileio.readVolume(path)
        self.assertEqual(ctx.exception.line, 3)

    def test_missing_file(self):
        with self.assertRaises(builtin.FormatError) as ctx:
            fileio.readField(self.path('absent.fld'))
        self.assertEqual(ctx.exception.file, self.path('absent.fld'))


class DiagramFileTestCase(FileTestCase):
    def test_diagram(self):
        diagram = cubical.persistence(randomIntegerField(2), source_id='s2')
        fileio.writeDiagram(self.path('s2.csv'), diagram)
        self.assertEqual(fileio.readDiagram(self.path('s2.csv')), diagram)

    def test_essential_row(self):
        diagram = lang.Diagram((lang.PersistencePoint(0, -1.5, math.inf, (1, 2, 3)),))
        fileio.writeDiagram(self.path('e.csv'), diagram)
        (point,) = fileio.readDiagram(self.path('e.csv'))
        self.assertTrue(point.essential)
        self.assertEqual(point.birth_cell, (1, 2, 3))
        self.assertIsNone(point.death_cell)

    def test_bad_number_line(self):
        header = ','.join(builtin.DIAGRAM_HEADER)
        path = self.writeRaw('bad.csv', (
            '# sdph {}\n' + header + '\n'
            '1,-1.0,2.0,0,0,0,1,1,1,0\n'
            '1,abc,2.0,0,0,0,1,1,1,0\n'
        ).encode())
        with self.assertRaises(builtin.FormatError) as ctx:
            fileio.readDiagram(path)
        self.assertEqual(ctx.exception.line, 4)

    def test_wrong_header(self):
        path = self.writeRaw('bad.csv', b'degree,birth\n0,1\n')
        with self.assertRaises(builtin.FormatError) as ctx:
            fileio.readDiagram(path)
        self.assertEqual(ctx.exception.line, 1)

    def test_column_count(self):
        header = ','.join(builtin.DIAGRAM_HEADER)
        path = self.writeRaw('bad.csv', (header + '\n1,-1.0\n').encode())
        with self.assertRaises(builtin.FormatError) as ctx:
            fileio.readDiagram(path)
        self.assertEqual(ctx.exception.line, 2)


class TableFileTestCase(FileTestCase):
    def test_features(self):
        centres = np.array([[0, 0, 0], [5, 0, 0]])
        matrix = np.arange(30, dtype=float).reshape(2, 15) / 7
        fileio.writeFeatures(self.path('f.csv'), [('a', centres, matrix)], {'seed': 1})
        ids, readCentres, readMatrix = fileio.readFeatures(self.path('f.csv'))
        self.assertEqual(ids, ['a', 'a'])
        self.assertTrue(np.array_equal(readCentres, centres))
        self.assertTrue(np.array_equal(readMatrix, matrix))

    def test_matrix(self):
        dist = np.array([[0.0, 0.1], [0.1, 0.0]])
        fileio.writeMatrix(self.path('d.csv'), ['x', 'y'], dist, {})
        labels, matrix = fileio.readMatrix(self.path('d.csv'))
        self.assertEqual(labels, ['x', 'y'])
        self.assertTrue(np.array_equal(matrix, dist))

    def test_density(self):
        grid = lang.DensityGrid((-1.0, 2.0, 0.0, 3.0), (3, 4), np.arange(12.0).reshape(3, 4) / 3)
        fileio.writeDensity(self.path('g.density.csv'), grid, {'source_id': 'g'})
        self.assertEqual(fileio.readDensity(self.path('g.density.csv')), grid)

    def test_pgm(self):
        grid = lang.DensityGrid((0.0, 1.0, 0.0, 1.0), (3, 2), [[0.0, 1.0], [2.0, 0.5], [4.0, 0.0]])
        fileio.writePGM(self.path('g.pgm'), grid)
        image = fileio.readPGM(self.path('g.pgm'))
        self.assertEqual(image.shape, (2, 3))
        # top row is the highest death cell
        self.assertEqual(image.tolist(), [[64, 32, 0], [0, 128, 255]])

    def test_model(self):
        model = lang.MixtureModel((
            lang.Component(0.25, np.array([-1.0, 2.0]), np.eye(2)),
            lang.Component(0.75, np.array([-3.0, 5.0]), np.array([[2.0, 0.3], [0.3, 1.0]])),
        ), phase='I', quadrant='PH1NW')
        fileio.writeModel(self.path('I.json'), model)
        back = fileio.readModel(self.path('I.json'))
        self.assertEqual((back.phase, back.quadrant), ('I', 'PH1NW'))
        self.assertTrue(np.array_equal(back.means, model.means))
        self.assertTrue(np.array_equal(back.covariances, model.covariances))

    def test_invalid_model(self):
        path = self.writeRaw('m.json', b'{"components": [{"alpha": 0.5, "mu": [0, 0], '
                                       b'"sigma": [[1, 0], [0, 1]]}]}')
        with self.assertRaises(builtin.FormatError):
            fileio.readModel(path)

    def test_evaluation(self):
        row = lang.EvaluationRow('s', 'O', {'O': 1.5, 'I': 2.0}, {'O': 0.1, 'I': 0.4}, 'O')
        fileio.writeEvaluation(self.path('e.csv'), [row], {})
        ((sample, phase, sums, predicted),) = fileio.readEvaluation(self.path('e.csv'))
        self.assertEqual((sample, phase, predicted), ('s', 'O', 'O'))
        self.assertEqual(sums, {'O': 1.5, 'I': 2.0})


class AtomicWriteTestCase(FileTestCase):
    def test_replaces_target(self):
        path = self.path('out.txt')
        fileio.writeText(path, 'first')
        fileio.writeText(path, 'second')
        with open(path) as f:
            self.assertEqual(f.read(), 'second')
        self.assertEqual(os.listdir(self.dir.name), ['out.txt'])

    def test_interrupted_write_keeps_old(self):
        path = self.path('out.txt')
        fileio.writeText(path, 'old')
        with mock.patch('sdph.fileio.os.replace', side_effect=KeyboardInterrupt):
            with self.assertRaises(KeyboardInterrupt):
                fileio.writeText(path, 'new')
        with open(path) as f:
            self.assertEqual(f.read(), 'old')
        self.assertEqual(os.listdir(self.dir.name), ['out.txt'])

    def test_creates_parents(self):
        path = os.path.join(self.dir.name, 'a', 'b', 'x.json')
        fileio.writeJSON(path, {'k': [1, 2]})
        self.assertEqual(fileio.readJSON(path), {'k': [1, 2]})

    def test_field_from_file_is_usable(self):
        field = fieldOf([[[0.0, 5.0, 1.0]]])
        fileio.writeField(self.path('line.fld'), field)
        diagram = cubical.persistence(fileio.readField(self.path('line.fld')))
        self.assertEqual(len(diagram.finite()), 1)
