import sys
import  os
project_root = os.path.dirname(os.path.dirname(sys.path[0]))
if project_root not in sys.path:
    sys.path.append(project_root)


import unittest
from datetime import datetime
import pickle
from typing import Callable, Optional, Any

import numpy as np


class TestKernel(unittest.TestCase):
    """
    Base class of the test suite. Failed comparisons pickle their inputs
    into rough_rtm/test/failed_tests_dumps for offline inspection.
    """

    def _get_default_test_data_save_path(self):
        failed_tests_dir_name = 'failed_tests_dumps'
        failed_tests_path = os.path.join('.',
                                         'rough_rtm',
                                         'test',
                                         failed_tests_dir_name)
        if not os.path.exists(failed_tests_path):
            os.makedirs(failed_tests_path)
        str_date = datetime.now().strftime("%Y_%m_%d_%H_%M_%S_%f")
        this_test_name = f'test_{str_date}.pickle'
        return os.path.join(failed_tests_path, this_test_name)

    def assertNpCloseWithDumping(self,
                                 arr1,
                                 arr2,
                                 atol,
                                 msg: str,
                                 save_obj: Any = None,
                                 save_path: Optional[str] = None,
                                 rtol: float = 0.0):
        expression_result = np.allclose(arr1, arr2, atol=atol, rtol=rtol)
        if not expression_result and save_obj is None:
            save_obj = {'actual': arr1, 'expected': arr2}
        self.assertTrueWithDumping(expression_result, msg, save_obj, save_path)

    def assertTrueWithDumping(self,
                              expression_result: bool,
                              msg: str,
                              save_obj: Any = None,
                              save_path: Optional[str] = None):
        if not expression_result:
            if not save_path:
                save_path = self._get_default_test_data_save_path()
            with open(save_path, 'wb') as f:
                pickle.dump(save_obj, f)

        self.assertTrue(
            bool(expression_result),
            msg
        )

    def _test_against_reference(self,
                                my_function: Callable,
                                reference_function: Callable,
                                inputs: np.ndarray,
                                atol: float = 1e-10,
                                rtol: float = 0.0,
                                label: str = "") -> None:
        """
        Compares my_function with a reference implementation on the same inputs.

        Args:
            my_function: implementation under test.
            reference_function: trusted implementation (scipy, closed form).
            inputs: array of arguments, passed as is to both functions.
            atol, rtol: tolerances of np.allclose.
            label: prefix of the failure message.
        """
        mine = np.asarray(my_function(inputs))
        reference = np.asarray(reference_function(inputs))
        self.assertEqual(mine.shape, reference.shape, f"{label}: shapes differ")
        self.assertNpCloseWithDumping(
            mine,
            reference,
            atol,
            f"{label}: values differ from the reference",
            {'inputs': inputs, 'mine': mine, 'reference': reference},
            rtol=rtol,
        )
