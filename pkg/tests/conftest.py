import os
import sys

import numpy as np
import pytest

# Ensure the repository root is in sys.path
root_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if root_dir not in sys.path:
    sys.path.insert(0, root_dir)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))
