from pathlib import Path

import numpy as np
import pytest

from ewps import Binomial, Geometric, Logarithmic, Poisson

DATA_DIR = Path(__file__).resolve().parents[1] / "data"

FAMILIES = [Geometric(), Poisson(), Logarithmic(), Binomial(5)]
# a representative theta inside each family's support
THETAS = {"geometric": 0.5, "poisson": 1.5, "logarithmic": 0.6, "binomial": 0.8}


def load_column(name):
    path = DATA_DIR / name
    if not path.exists():
        return None
    vals = np.genfromtxt(path, comments="#")
    return vals[np.isfinite(vals)]


@pytest.fixture(params=FAMILIES, ids=lambda f: f.name)
def family(request):
    return request.param


@pytest.fixture
def kevlar():
    y = load_column("kevlar49.csv")
    if y is None:
        pytest.skip("kevlar49.csv fixture not present")
    return y


@pytest.fixture
def aluminum():
    y = load_column("aluminum_6061_t6.csv")
    if y is None:
        pytest.skip("aluminum_6061_t6.csv fixture not present")
    return y
