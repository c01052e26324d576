import struct

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st
from hypothesis.extra import numpy as hnp

from conftest import make_series
from griddata.export import write_field_csv, write_pgm
from griddata.gfb import HEADER_SIZE, decode_series, encode_series, read_series, write_series
from griddata.resample import (
    bicubic_resample,
    bilinear_resample,
    block_mean_downsample,
    catmull_rom_weights,
    resample_series,
)
from griddata.splits import season_subset, split_at_index, split_by_years
from griddata.synthetic import SyntheticConfig, generate_synthetic, land_mask
from griddata.types import FieldSeries, GridField, GridSpec, monsoon_days
from utils.exceptions import GridFormatError, GridInvariantError, ShapeError
from utils.helper import read_csv


def field(values, mask=None):
    values = np.asarray(values, dtype=np.float64)
    spec = GridSpec(n_lat=values.shape[0], n_lon=values.shape[1])
    mask = np.ones(values.shape, dtype=bool) if mask is None else mask
    return GridField(spec=spec, values=values, mask=mask)


def hand_encoded(values, magic=b"GFB1", version=1):
    t, h, w = values.shape
    header = struct.pack("<4s4I4f", magic, version, t, h, w, 0.0, 0.0, 0.25, 0.25)
    return header + bytes([1] * (h * w)) + np.asarray(values, dtype="<f4").tobytes()


class TestGridTypes:
    def test_masked_out_cell_must_be_zero(self):
        mask = np.array([[True, False], [True, True]])
        with pytest.raises(GridInvariantError, match=r"\(i, j\) = \(0, 1\)"):
            field([[1.0, 2.0], [3.0, 4.0]], mask)

    def test_negative_valid_cell_rejected(self):
        with pytest.raises(GridInvariantError, match="negative"):
            field([[1.0, -2.0], [3.0, 4.0]])

    def test_nan_valid_cell_rejected(self):
        with pytest.raises(GridInvariantError, match="not finite"):
            field([[1.0, np.nan], [3.0, 4.0]])

    def test_sanitized_clips_and_zeroes(self):
        mask = np.array([[True, False], [True, True]])
        f = GridField.sanitized(GridSpec(n_lat=2, n_lon=2), [[-1.0, 5.0], [2.0, 3.0]], mask)
        np.testing.assert_array_equal(f.values, [[0.0, 0.0], [2.0, 3.0]])

    def test_days_must_increase(self):
        days = np.array([[2000, 152], [2000, 152]])
        with pytest.raises(GridInvariantError, match="strictly increasing"):
            make_series(np.ones((2, 2, 2)), days=days)

    def test_monsoon_days_roll_over_years(self):
        days = monsoon_days(124)
        assert tuple(days[0]) == (2000, 152)
        assert tuple(days[121]) == (2000, 273)
        assert tuple(days[122]) == (2001, 152)

    def test_series_is_read_only(self, rain_series):
        with pytest.raises(ValueError):
            rain_series.data[0, 0, 0] = 1.0


class TestGfb:
    def test_round_trip_bit_exact(self, tmp_path, rain_series):
        path = write_series(rain_series, str(tmp_path / "s.gfb"))
        back = read_series(path)
        assert back.spec == rain_series.spec
        np.testing.assert_array_equal(back.mask, rain_series.mask)
        np.testing.assert_array_equal(back.days, rain_series.days)
        assert back.data.tobytes() == rain_series.data.tobytes()

    def test_hand_assembled_file(self):
        values = np.arange(8, dtype=np.float64).reshape(2, 2, 2)
        series = decode_series(hand_encoded(values))
        assert series.n_days == 2
        assert series.data[0, 1, 1] == 3.0
        assert series.data[1, 0, 0] == 4.0

    def test_bad_magic_named(self):
        with pytest.raises(GridFormatError, match="XXXX"):
            decode_series(hand_encoded(np.zeros((1, 2, 2)), magic=b"XXXX"))

    def test_bad_version(self):
        with pytest.raises(GridFormatError, match="version"):
            decode_series(hand_encoded(np.zeros((1, 2, 2)), version=2))

    def test_truncated_body_is_overflow(self):
        payload = hand_encoded(np.zeros((3, 2, 2)))
        with pytest.raises(GridFormatError, match="overflow"):
            decode_series(payload[:-5])

    def test_negative_cell_rejected_with_coordinates(self):
        values = np.zeros((1, 2, 2))
        values[0, 1, 0] = -1.0
        with pytest.raises(GridInvariantError, match=r"\(0, 1, 0\)"):
            decode_series(hand_encoded(values))

    def test_empty_series_is_header_plus_mask(self):
        series = make_series(np.zeros((0, 3, 5)))
        payload = encode_series(series)
        assert len(payload) == HEADER_SIZE + 15
        assert decode_series(payload).n_days == 0

    def test_missing_day_table_defaults(self):
        series = decode_series(hand_encoded(np.ones((3, 2, 2))))
        np.testing.assert_array_equal(series.days, monsoon_days(3))

    def test_day_table_follows_the_core_layout(self, rain_series):
        payload = encode_series(rain_series)
        core = HEADER_SIZE + 8 * 8 + 4 * 40 * 8 * 8
        assert len(payload) == core + 4 + 4 * 40
        assert payload[core:core + 4] == b"DAY1"
        bare = decode_series(payload[:core])
        assert bare.data.tobytes() == rain_series.data.tobytes()

    @hsettings(max_examples=30, deadline=None)
    @given(
        hnp.arrays(np.float32, st.tuples(st.integers(0, 4), st.integers(1, 5), st.integers(1, 5)),
                   elements=st.floats(0, 1e6, width=32)),
    )
    def test_round_trip_property(self, data):
        series = make_series(data.astype(np.float64))
        back = decode_series(encode_series(series))
        assert back.data.tobytes() == series.data.tobytes()
        np.testing.assert_array_equal(back.days, series.days)


class TestResample:
    def test_bilinear_hand_case(self):
        out = bilinear_resample(field([[0.0, 1.0], [1.0, 2.0]]), GridSpec(n_lat=3, n_lon=3))
        assert out.values[1, 1] == pytest.approx(1.0)
        assert out.values[0, 0] == 0.0
        assert out.values[2, 2] == 2.0
        assert out.values[0, 2] == 1.0

    @pytest.mark.parametrize("resample", [bilinear_resample, bicubic_resample])
    def test_constant_reproduced(self, resample):
        out = resample(field(np.full((4, 5), 3.25)), GridSpec(n_lat=9, n_lon=7))
        np.testing.assert_array_equal(out.values, np.full((9, 7), 3.25))

    @pytest.mark.parametrize("resample", [bilinear_resample, bicubic_resample])
    def test_same_grid_is_identity(self, resample, rng):
        values = rng.uniform(0, 10, size=(5, 6))
        f = field(values)
        np.testing.assert_allclose(resample(f, f.spec).values, values, atol=1e-12)

    def test_bicubic_ramp_densified(self):
        ramp = np.tile(np.arange(5, dtype=np.float64), (3, 1))
        out = bicubic_resample(field(ramp), GridSpec(n_lat=3, n_lon=9))
        # away from the clamped edges the cubic reproduces the ramp
        np.testing.assert_allclose(out.values[1, 2:7], np.arange(2, 7) / 2.0, atol=1e-12)
        np.testing.assert_array_equal(out.values[1, ::2], np.arange(5, dtype=np.float64))

    def test_catmull_rom_midpoint(self):
        np.testing.assert_allclose(catmull_rom_weights(np.array([0.5]))[0], [-1 / 16, 9 / 16, 9 / 16, -1 / 16])

    def test_bicubic_midpoint_value(self):
        # columns 0..4 map onto 0, 0.5, ..., 4; output column 5 is halfway between cells 2 and 3
        row = np.array([[0.0, 0.0, 1.0, 0.0, 0.0]] * 2)
        out = bicubic_resample(field(row), GridSpec(n_lat=2, n_lon=9))
        assert out.values[0, 5] == pytest.approx(0.5625)
        assert out.values.min() >= 0.0

    def test_single_cell_cannot_upsample(self):
        with pytest.raises(ShapeError):
            bilinear_resample(field([[1.0]]), GridSpec(n_lat=2, n_lon=2))

    def test_block_mean(self):
        out = block_mean_downsample(field([[0.0, 2.0], [4.0, 6.0]]), 2)
        np.testing.assert_array_equal(out.values, [[3.0]])
        ones = block_mean_downsample(field(np.ones((4, 4))), 4)
        assert ones.values[0, 0] == 1.0

    def test_block_mean_divisibility(self):
        with pytest.raises(ShapeError):
            block_mean_downsample(field(np.ones((128, 128))), 3)

    def test_block_with_any_valid_cell_is_valid(self):
        mask = np.array([[True, False], [False, False]])
        out = block_mean_downsample(field([[4.0, 0.0], [0.0, 0.0]], mask), 2)
        assert out.mask[0, 0]
        assert out.values[0, 0] == 1.0

    def test_series_resample_keeps_days(self, rain_series):
        out = resample_series(rain_series, GridSpec(n_lat=16, n_lon=16), "bicubic")
        np.testing.assert_array_equal(out.days, rain_series.days)
        assert out.data.shape == (40, 16, 16)
        assert np.all(out.data[:, ~out.mask] == 0)


class TestSynthetic:
    def test_deterministic(self):
        cfg = SyntheticConfig(n_days=6, spec=GridSpec(n_lat=16, n_lon=16))
        a, b = generate_synthetic(cfg), generate_synthetic(cfg)
        for x, y in zip(a, b):
            assert x.data.tobytes() == y.data.tobytes()

    def test_noise_free_bias_is_exact(self):
        cfg = SyntheticConfig(n_days=5, spec=GridSpec(n_lat=16, n_lon=16), noise_sigma=0.0)
        triple = generate_synthetic(cfg)
        expected = np.maximum(1.3 * triple.truth.as_float64() + 2.0, 0.0)
        expected = np.where(triple.truth.mask, expected, 0.0).astype(np.float32)
        np.testing.assert_array_equal(triple.biased.data, expected)

    def test_identity_bias(self):
        cfg = SyntheticConfig(n_days=4, spec=GridSpec(n_lat=16, n_lon=16),
                              noise_sigma=0.0, bias_gain=1.0, bias_offset=0.0)
        triple = generate_synthetic(cfg)
        np.testing.assert_array_equal(triple.biased.data, triple.truth.data)

    def test_lowres_and_mask(self):
        cfg = SyntheticConfig(n_days=3, spec=GridSpec(n_lat=32, n_lon=32))
        triple = generate_synthetic(cfg)
        assert triple.lowres.spec.shape == (8, 8)
        assert land_mask(cfg.spec).mean() >= 0.5
        assert np.all(triple.truth.data[:, ~triple.truth.mask] == 0)

    def test_factor_must_divide(self):
        with pytest.raises(ValueError):
            SyntheticConfig(spec=GridSpec(n_lat=30, n_lon=30), lowres_factor=4)


class TestSplitsAndExport:
    def test_split_at_index(self, rain_series):
        first, rest = split_at_index(rain_series, 30)
        assert first.n_days == 30 and rest.n_days == 10
        with pytest.raises(ShapeError):
            split_at_index(rain_series, 41)

    def test_season_and_years(self):
        days = np.array([[2000, 100], [2000, 160], [2001, 200], [2001, 300]])
        series = make_series(np.ones((4, 2, 2)), days=days)
        assert season_subset(series).n_days == 2
        assert split_by_years(series, [2001]).n_days == 2

    def test_field_csv_one_row_per_valid_cell(self, tmp_path, disk_mask):
        f = field(np.where(disk_mask, 2.0, 0.0), disk_mask)
        rows = read_csv(write_field_csv(f, str(tmp_path / "f.csv")))
        assert len(rows) == int(disk_mask.sum())
        assert set(rows[0]) == {"lat", "lon", "value"}

    def test_pgm_header(self, tmp_path, disk_mask):
        path = write_pgm(np.where(disk_mask, 1.0, np.nan), disk_mask, str(tmp_path / "m.pgm"))
        with open(path, "rb") as handle:
            assert handle.read(2) == b"P5"
