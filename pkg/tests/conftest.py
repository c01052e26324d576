import os
import sys

import numpy as np
import pytest

# Add the app directory to Python path
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), ".."))

from griddata.types import FieldSeries, GridSpec, monsoon_days


def make_series(data, mask=None, days=None, spec=None) -> FieldSeries:
    """Series over a 0.25 degree grid; full mask and monsoon day stamps by default"""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 2:
        data = data[None]
    n_t, h, w = data.shape
    spec = spec or GridSpec(n_lat=h, n_lon=w, lat0=10.0, lon0=70.0)
    mask = np.ones((h, w), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    days = monsoon_days(n_t) if days is None else days
    return FieldSeries(spec=spec, mask=mask, days=days, data=np.where(mask, data, 0.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_spec():
    return GridSpec(n_lat=8, n_lon=8, lat0=10.0, lon0=70.0)


@pytest.fixture
def disk_mask():
    r = np.arange(8) - 3.5
    return r[:, None] ** 2 + r[None, :] ** 2 <= 14.0


@pytest.fixture
def rain_series(rng, disk_mask):
    """40 days of gamma-distributed rain on an 8x8 disk"""
    data = rng.gamma(0.8, 8.0, size=(40, 8, 8))
    return make_series(data, disk_mask)
