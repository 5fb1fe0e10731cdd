import sys
from pathlib import Path

import pytest

# Add project root to Python path so `src` imports resolve under pytest
sys.path.append(str(Path(__file__).parent.parent))

from src.geometry.cone import ConeChart  # noqa: E402


@pytest.fixture
def chart():
    return ConeChart(3, 0.02)
