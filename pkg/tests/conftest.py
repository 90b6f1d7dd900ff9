from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from slicemetrics import Table, read_csv  # noqa: E402

from helpers import FIG2_CSV  # noqa: E402


@pytest.fixture
def fig2() -> Table:
    """The six-row region/experiment/lost churn example."""
    return read_csv(FIG2_CSV)


@pytest.fixture
def fig2_csv_path(tmp_path) -> str:
    path = tmp_path / "events.csv"
    path.write_bytes(FIG2_CSV)
    return str(path)


@pytest.fixture
def employment() -> Table:
    """Four-cell state/period table whose difference-in-differences is 2."""
    return Table.from_dict({
        "STATE_NAME": ["NJ", "NJ", "PA", "PA"],
        "PERIOD": ["Before", "After", "Before", "After"],
        "EMP": [17.0, 18.0, 20.0, 19.0],
    })


@pytest.fixture
def mixed() -> Table:
    """Two dims and two numeric columns, used by the golden SQL suite."""
    return Table.from_dict({
        "g": ["a", "a", "b", "b", "a", "b", "a", "b"],
        "h": ["x", "y", "x", "y", "x", "y", "y", "x"],
        "v": [1, 2, 3, 4, 5, 6, 7, 8],
        "w": [1.5, 2.5, 0.5, 4.0, 2.0, 3.0, 1.0, 6.0],
    })
