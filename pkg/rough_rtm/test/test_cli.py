import sys; import os; sys.path.insert(1, os.path.join(os.getcwd(), "rough_rtm", "test")); sys.path.insert(1, os.getcwd())

import contextlib
import io
import tempfile
import unittest

import numpy as np

from test_kernel import TestKernel
from rough_rtm import cli
from rough_rtm.modules.config import load_config
from rough_rtm.modules.data_io import read_grid, read_pgm, write_grid, write_scatter_data
from rough_rtm.modules.forward import ScatterData
from rough_rtm.modules.geometry import ImageGrid

SMALL_INI = """
[surface]
profile = f1
dip_radius = 5.0

[medium]
kind = D
k1 = 2.0

[acquisition]
source_radius = 6.0
receiver_radius = 7.0
n_sources = 4
n_receivers = 4

[imaging]
x1_min = -1.0
x1_max = 1.0
x2_min = -0.5
x2_max = 0.5
n1 = 4
n2 = 3
"""


class TestCommandLine(TestKernel):

    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.ini = self._path('run.ini')
        with open(self.ini, 'w') as stream:
            stream.write(SMALL_INI)

    def tearDown(self) -> None:
        self.tmp.cleanup()

    def _path(self, name: str) -> str:
        return os.path.join(self.tmp.name, name)

    def _run(self, *argv: str):
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            code = cli.main(['--log-level', 'ERROR', *argv])
        return code, out.getvalue()

    def test_forward_then_image(self):
        data, image, pgm = self._path('data.rtmd'), self._path('image.rtmg'), self._path('image.pgm')
        code, out = self._run('forward', '--config', self.ini, '--out', data)
        self.assertEqual(code, 0, out)
        self.assertIn('medium.k1', out)
        self.assertIn('(file)', out)
        code, out = self._run('image', '--config', self.ini, '--data', data, '--out', image, '--pgm', pgm)
        self.assertEqual(code, 0, out)
        self.assertIn('argmax at', out)
        self.assertEqual(read_grid(image).values.shape, (3, 4))
        self.assertEqual(read_pgm(pgm).shape, (3, 4))

    def test_constant_image_cannot_be_rendered(self):
        config = load_config(self.ini)
        acquisition = config.acquisition()
        zeros = ScatterData('near', 'D', np.zeros((4, 4), dtype=complex), acquisition, 2.0, 2.0, 5.0)
        data = self._path('zeros.rtmd')
        write_scatter_data(zeros, data)
        code, _ = self._run('image', '--config', self.ini, '--data', data, '--out', self._path('zeros.rtmg'),
                            '--pgm', self._path('zeros.pgm'))
        self.assertEqual(code, 2)

    def test_render(self):
        grid = ImageGrid(-1.0, 1.0, -0.5, 0.5, 4, 3).with_values(np.arange(12.0).reshape(3, 4))
        write_grid(grid, self._path('grid.rtmg'))
        code, _ = self._run('render', self._path('grid.rtmg'), self._path('grid.pgm'))
        self.assertEqual(code, 0)
        self.assertEqual(read_pgm(self._path('grid.pgm'))[0, 3], 65535)

    def test_configuration_errors(self):
        bad = self._path('bad.ini')
        with open(bad, 'w') as stream:
            stream.write("[medium]\nkk = 1\n")
        code, _ = self._run('forward', '--config', bad, '--out', self._path('x.rtmd'))
        self.assertEqual(code, 2)
        code, _ = self._run('forward', '--config', self._path('missing.ini'), '--out', self._path('x.rtmd'))
        self.assertEqual(code, 4)
        code, _ = self._run('image', '--config', self.ini, '--data', self._path('missing.rtmd'),
                            '--out', self._path('x.rtmg'))
        self.assertEqual(code, 4)

    def test_greens(self):
        code, out = self._run('greens', '--field', 'halfplane', '--point', '0.5', '1.0', '--source', '0', '2')
        self.assertEqual(code, 0)
        self.assertIn('value    =', out)
        code, _ = self._run('greens', '--field', 'halfplane', '--point', '0.5', '1.0')
        self.assertEqual(code, 2)
        code, out = self._run('greens', '--field', 'fresnel-field', '--point', '0.5', '-0.5', '--angle', '-1.2')
        self.assertEqual(code, 0)
        self.assertIn('critical angle', out)
        code, _ = self._run('greens', '--field', 'planewave', '--point', '0.5', '1.0', '--angle', '1.0')
        self.assertEqual(code, 2)

    def test_preset_names(self):
        args = cli.build_parser().parse_args(['forward', '--preset', 'paper-scale', '--out', 'x.rtmd'])
        self.assertEqual(args.preset, 'paper-scale')
        with contextlib.redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit):
                cli.build_parser().parse_args(['forward', '--preset', 'full-scale', '--out', 'x.rtmd'])

    def test_selftest_quick(self):
        code, out = self._run('selftest', 'quick')
        self.assertEqual(code, 0, out)
        self.assertIn('7/7 passed', out)


if __name__ == '__main__':
    unittest.main()
