import os
import sys

import numpy as np
import pytest

# Add project root and backend to sys.path
project_root = os.path.dirname(os.path.dirname(__file__))
if project_root not in sys.path:
    sys.path.append(project_root)
backend_path = os.path.join(project_root, "backend")
if backend_path not in sys.path:
    sys.path.append(backend_path)

from oscdom.config import load_config
from oscdom.field import Grid, GridFunction
from oscdom.registry import OperatorRegistry
from oscdom.storage import MemoryArtifactStore

CONFIG_DIR = os.path.join(project_root, "configs")
PLUGIN_DIR = os.path.join(backend_path, "plugins")


@pytest.fixture
def registry():
    """Registry with the shipped components and the demo plugins."""
    reg = OperatorRegistry(PLUGIN_DIR)
    reg.discover_plugins()
    return reg


@pytest.fixture
def hilbert(registry):
    return registry.resolve("hilbert")


@pytest.fixture
def line_grid():
    """[-2, 2] with 256 cells (spacing 1/64)"""
    return Grid.centered(2.0, 256, 1)


@pytest.fixture
def plane_grid():
    """[-2, 2]^2 with 32 cells per axis (spacing 1/8)"""
    return Grid.centered(2.0, 32, 2)


@pytest.fixture
def dyadic_function(line_grid):
    """Integer multiples of 1/8: every cube statistic is exact in floating point"""
    rng = np.random.default_rng(3)
    return GridFunction(line_grid, rng.integers(-16, 17, size=line_grid.shape) / 8.0, compact=True)


@pytest.fixture
def memory_store():
    return MemoryArtifactStore()


@pytest.fixture
def smoke_config():
    """configs/smoke.toml, output kept in memory"""
    return load_config(os.path.join(CONFIG_DIR, "smoke.toml"), {"out": "mem://smoke", "workers": 2})
