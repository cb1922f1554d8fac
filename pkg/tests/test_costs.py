"""Measured-table fidelity, the linear fit, and estimation."""

import numpy as np
import pytest

from aapl.costs import (
    AAPL_INTERVALS,
    aapl_rows,
    estimate,
    fit_linear,
    lookup_cost,
    save_tradeoff,
)

RAW_EXPECTED = {
    "beoid": {"full": 3.72, "video": 1.11, "point": 2.44, 3: 2.09, 5: 1.43, 10: 0.94, 30: 0.45},
    "gtea": {"full": 4.49, "video": 0.93, "point": 3.03, 3: 1.98, 5: 1.60, 10: 1.09, 30: 0.53},
    "thumos14": {
        "full": 1.92, "video": 0.45, "point": 1.10, 3: 1.31, 5: 0.95, 10: 0.64, 30: 0.36,
    },
}
SELF_CHECK_EXPECTED = {
    "thumos14": {
        "full": 2.994, "video": 0.810, "point": 1.863,
        3: 2.272, 5: 1.648, 10: 1.072, 30: 0.644,
    },
    "gtea": {
        "full": 6.105, "video": 1.591, "point": 4.594,
        3: 3.138, 5: 2.481, 10: 1.690, 30: 0.855,
    },
    "beoid": {
        "full": 5.205, "video": 1.976, "point": 3.873,
        3: 3.305, 5: 2.312, 10: 1.483, 30: 0.827,
    },
}


class TestLookup:
    def test_spot_values(self):
        assert lookup_cost("THUMOS'14", "aapl", "raw", 30) == 0.36
        assert lookup_cost("BEOID", "full", "raw") == 3.72
        assert lookup_cost("GTEA", "point", "with_self_check") == 4.594

    @pytest.mark.parametrize("dataset", sorted(RAW_EXPECTED))
    def test_every_raw_cell(self, dataset):
        for key, want in RAW_EXPECTED[dataset].items():
            if isinstance(key, str):
                assert lookup_cost(dataset, key, "raw") == want
            else:
                assert lookup_cost(dataset, "aapl", "raw", key) == want

    @pytest.mark.parametrize("dataset", sorted(SELF_CHECK_EXPECTED))
    def test_every_self_check_cell(self, dataset):
        for key, want in SELF_CHECK_EXPECTED[dataset].items():
            if isinstance(key, str):
                assert lookup_cost(dataset, key, "with_self_check") == want
            else:
                assert lookup_cost(dataset, "aapl", "with_self_check", key) == want

    def test_unknown_keys_rejected(self):
        with pytest.raises(KeyError, match="dataset"):
            lookup_cost("kinetics", "full")
        with pytest.raises(KeyError, match="scheme"):
            lookup_cost("gtea", "segment")
        with pytest.raises(KeyError, match="variant"):
            lookup_cost("gtea", "full", "fast")
        with pytest.raises(KeyError, match="interval"):
            lookup_cost("gtea", "aapl", "raw", 7)


class TestLinearFit:
    def test_collinear_rows_fit_exactly(self):
        rows = [(10.0, 1.0 + 0.1 * 6.0), (30.0, 1.0 + 0.1 * 2.0)]  # y = 1 + 0.1 * (60/iv)
        fit = fit_linear(rows)
        assert fit.per_frame_cost == pytest.approx(0.1, abs=1e-12)
        assert fit.base_cost == pytest.approx(1.0, abs=1e-12)
        assert max(abs(r) for r in fit.residuals) < 1e-12

    def test_thumos_rows_match_polyfit_oracle(self):
        rows = aapl_rows("thumos14", "raw")
        fit = fit_linear(rows)
        x = np.array([60.0 / iv for iv, _ in rows])
        y = np.array([t for _, t in rows])
        slope, intercept = np.polyfit(x, y, 1)
        assert fit.per_frame_cost == pytest.approx(slope, rel=1e-9)
        assert fit.base_cost == pytest.approx(intercept, rel=1e-9)
        assert fit.r_squared >= 0.99

    def test_constant_rows_zero_per_frame_cost(self):
        fit = fit_linear([(3.0, 0.8), (30.0, 0.8)])
        assert fit.per_frame_cost == pytest.approx(0.0, abs=1e-12)
        assert fit.base_cost == pytest.approx(0.8)

    def test_too_few_rows(self):
        with pytest.raises(ValueError):
            fit_linear([(3.0, 1.0)])

    def test_monotone_decreasing_in_interval_for_all_datasets(self):
        for dataset in ("thumos14", "gtea", "beoid"):
            for variant in ("raw", "with_self_check"):
                fit = fit_linear(aapl_rows(dataset, variant))
                assert fit.per_frame_cost > 0
                intervals = np.linspace(2, 60, 30)
                values = [fit.relative_time(iv) for iv in intervals]
                assert all(a >= b for a, b in zip(values, values[1:]))


class TestEstimate:
    def test_table_backed_estimate(self):
        assert estimate("thumos14", "aapl", 100.0, "raw", 30) == pytest.approx(36.0)

    def test_zero_minutes(self):
        assert estimate("gtea", "full", 0.0) == 0.0

    def test_interpolated_interval_between_neighbors(self):
        value = estimate("thumos14", "aapl", 1.0, "raw", 7)
        assert lookup_cost("thumos14", "aapl", "raw", 10) < value
        assert value < lookup_cost("thumos14", "aapl", "raw", 5)

    def test_linear_in_minutes(self):
        one = estimate("beoid", "point", 1.0)
        assert estimate("beoid", "point", 250.0) == pytest.approx(250 * one)

    def test_extrapolation_warns(self):
        with pytest.warns(RuntimeWarning, match="extrapolating"):
            estimate("thumos14", "aapl", 10.0, "raw", 120)
        with pytest.warns(RuntimeWarning, match="extrapolating"):
            estimate("thumos14", "aapl", 10.0, "raw", 1.0)


class TestTradeoffEmission:
    def test_csv_and_json(self, tmp_path):
        entries = [("aapl-30s", 0.36, 0.443), ("point", 1.10, 0.518)]
        csv_path = tmp_path / "tradeoff.csv"
        save_tradeoff(entries, csv_path)
        text = csv_path.read_text()
        assert "relative_annotation_time" in text.splitlines()[0]
        assert "aapl-30s" in text
        json_path = tmp_path / "tradeoff.json"
        save_tradeoff(entries, json_path)
        assert "0.518" in json_path.read_text()
