"""Shared fixtures for the THz semi-blind test suite."""

import os
import sys

import numpy as np
import pytest

# Add the project root to the path so we can import from src/
project_root = os.path.join(os.path.dirname(__file__), '..')
sys.path.insert(0, os.path.abspath(project_root))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)