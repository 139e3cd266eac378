import json
from pathlib import Path

import numpy as np
import pytest

from phmin.jordan import build_problem
from phmin.pipeline import load_input, parse_document
from phmin.poly import build_lst_from_coeffs
from shared.models import BetaJordanInput

FIXTURES = Path(__file__).parent / "fixtures"

# (s+1)((s+2.8)^2 + 0.16) with L(0) = 1
EX51_P = [8.0, 4.7536, 0.701]
EX51_Q = [8.0, 13.6, 6.6, 1.0]


def robustness_jordan(h: float) -> np.ndarray:
    return np.array([[-1.0, 0.0, 0.0], [0.0, -3.0, h], [0.0, -h, -3.0]])


def robustness_lst(h: float):
    doc = BetaJordanInput(
        form="beta_jordan", beta=[0.2, 0.3, 0.5], jordan=robustness_jordan(h).tolist()
    )
    return parse_document(doc).lst


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def ex51_lst():
    return load_input(FIXTURES / "ex51.json").lst


@pytest.fixture
def ex51_problem(ex51_lst):
    return build_problem(ex51_lst)


@pytest.fixture
def ex53_lst():
    return load_input(FIXTURES / "ex53.json").lst


@pytest.fixture
def exponential_lst():
    return build_lst_from_coeffs([2.0], [2.0, 1.0])


@pytest.fixture
def write_input(tmp_path):
    """Write a document to a temporary JSON file and return its path."""

    def _write(doc, name: str = "input.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(doc), encoding="utf-8")
        return str(path)

    return _write
