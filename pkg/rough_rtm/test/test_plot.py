import sys; import os; sys.path.insert(1, os.path.join(os.getcwd(), "rough_rtm", "test")); sys.path.insert(1, os.getcwd())

import contextlib
import io
import tempfile
import unittest

import matplotlib
matplotlib.use('Agg')
import numpy as np

from test_kernel import TestKernel
from rough_rtm import cli
from rough_rtm.modules.data_io import write_grid
from rough_rtm.modules.geometry import BumpProfile, ImageGrid
from utils.plot import get_extent, plot_indicator, plot_remainder_decay


class TestPlots(TestKernel):

    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        values = np.outer(np.linspace(0.0, 1.0, 3), np.linspace(-1.0, 1.0, 4))
        self.grid = ImageGrid(-1.0, 1.0, -0.5, 0.5, 4, 3).with_values(values, indicator='near-impenetrable')

    def tearDown(self) -> None:
        self.tmp.cleanup()

    def _path(self, name: str) -> str:
        return os.path.join(self.tmp.name, name)

    def test_extent(self):
        self.assertEqual(get_extent(self.grid), [-1.0, 1.0, -0.5, 0.5])

    def test_indicator_with_profile(self):
        path = self._path('indicator.png')
        plot_indicator(self.grid, BumpProfile('f1'), img_name=path)
        self.assertGreater(os.path.getsize(path), 0)

    def test_remainder_decay(self):
        path = self._path('decay.png')
        plot_remainder_decay({'D': ([30.0, 60.0, 120.0], [1e-2, 5e-3, 2.5e-3])}, img_name=path)
        self.assertGreater(os.path.getsize(path), 0)

    def test_render_png(self):
        write_grid(self.grid, self._path('grid.rtmg'))
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            code = cli.main(['--log-level', 'ERROR', 'render', self._path('grid.rtmg'), self._path('grid.pgm'),
                             '--png', self._path('grid.png')])
        self.assertEqual(code, 0)
        self.assertTrue(os.path.isfile(self._path('grid.png')))


if __name__ == '__main__':
    unittest.main()
