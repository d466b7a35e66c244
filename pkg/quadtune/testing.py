from unittest import TestCase as _TestCase

import numpy as np


class TestCase(_TestCase):

    def assertArrayEqual(self, first, second):
        np.testing.assert_array_equal(np.asarray(first), np.asarray(second))

    def assertArrayAlmostEqual(self, first, second, rtol: float = 1e-7, atol: float = 0.0):
        np.testing.assert_allclose(np.asarray(first, dtype=float),
                                   np.asarray(second, dtype=float),
                                   rtol=rtol,
                                   atol=atol)
