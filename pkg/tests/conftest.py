import os

# pin BLAS to one thread before numpy loads: deterministic reductions for
# the byte-identical trace comparisons
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import numpy as np
import pytest

from nslp import DenseLP


@pytest.fixture
def unit_square() -> DenseLP:
    """x1 <= 1, x2 <= 1 plus the implicit nonnegativity bound."""
    return DenseLP(A=np.eye(2), b=np.ones(2), c=np.ones(2))


@pytest.fixture
def unit_square_explicit() -> DenseLP:
    """The unit square with the lower bounds as explicit rows, so that
    translation through b moves the whole box."""
    A = np.vstack([np.eye(2), -np.eye(2)])
    b = np.array([1.0, 1.0, 0.0, 0.0])
    return DenseLP(A=A, b=b, c=np.ones(2))
