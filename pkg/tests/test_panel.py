import datetime as dt
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskfactors.errors import (
    DateParseError,
    DuplicateLabelError,
    InsufficientDataError,
    NonPositivePriceError,
    PanelError,
    ZeroVarianceError,
)
from riskfactors.panel import (
    ReturnPanel,
    WindowSpec,
    load_categories,
    load_panel,
    month_end_indices,
    rolling_windows,
    standardize,
    to_returns,
    write_panel,
)
from riskfactors.synthetic import business_dates, panel_from_values


def csv_panel(text):
    return load_panel(io.StringIO(text))


class TestLoadPanel:
    def test_blank_cell_drops_row(self):
        panel = csv_panel(
            "date,A,B\n"
            "2020-01-01,0.1,0.2\n"
            "2020-01-02,,0.3\n"
            "2020-01-03,0.0,-0.1\n")
        assert panel.n == 2
        assert panel.dropped_rows == 1
        assert panel.dates == (dt.date(2020, 1, 1), dt.date(2020, 1, 3))

    def test_duplicate_header_rejected(self):
        with pytest.raises(DuplicateLabelError):
            csv_panel("date,UK,UK\n2020-01-01,1,2\n2020-01-02,3,4\n")

    def test_paper_scale_panel(self, rng):
        # 6214 observations x 27 columns, the size of the reference data set
        lines = ["date," + ",".join(f"F{j}" for j in range(27))]
        for i, date in enumerate(business_dates(6214)):
            row = rng.standard_normal(27)
            lines.append(date.isoformat() + "," + ",".join(map(str, row)))
        panel = csv_panel("\n".join(lines))
        assert (panel.n, panel.d) == (6214, 27)

    def test_unparseable_date(self):
        with pytest.raises(DateParseError):
            csv_panel("date,A\n01/02/2020,1\n01/03/2020,2\n")

    def test_too_few_rows(self):
        with pytest.raises(InsufficientDataError):
            csv_panel("date,A\n2020-01-01,1\n")

    def test_non_numeric_row_dropped(self):
        panel = csv_panel(
            "date,A\n2020-01-01,1\n2020-01-02,x\n2020-01-03,3\n2020-01-06,4\n")
        assert panel.n == 3
        assert panel.dropped_rows == 1

    def test_dates_must_increase(self):
        with pytest.raises(PanelError):
            csv_panel("date,A\n2020-01-02,1\n2020-01-01,2\n")


class TestRoundTrip:
    @given(st.integers(2, 30), st.integers(1, 6), st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_write_then_load_is_identity(self, n, d, seed):
        rng = np.random.default_rng(seed)
        panel = panel_from_values(rng.standard_normal((n, d)) * 10.0 ** rng.integers(-6, 4))
        import os
        import tempfile
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "panel.csv")
            write_panel(panel, path)
            again = load_panel(path)
        assert again.dates == panel.dates
        assert again.labels == panel.labels
        assert np.array_equal(again.values, panel.values)


class TestToReturns:
    def test_flat_prices_log(self):
        prices = panel_from_values(np.array([[100.0], [100.0]]))
        returns = to_returns(prices, "log")
        assert returns.n == 1
        assert returns.values[0, 0] == 0.0

    def test_arithmetic(self):
        prices = panel_from_values(np.array([[100.0], [110.0]]))
        returns = to_returns(prices, "arithmetic")
        np.testing.assert_allclose(returns.values[0, 0], 0.10)

    def test_log_of_e(self):
        prices = panel_from_values(np.array([[100.0], [100.0 * math.e]]))
        returns = to_returns(prices, "log")
        np.testing.assert_allclose(returns.values[0, 0], 1.0, rtol=1e-13)

    def test_nonpositive_price_rejected(self):
        prices = panel_from_values(np.array([[100.0], [-1.0]]))
        with pytest.raises(NonPositivePriceError):
            to_returns(prices, "log")


class TestStandardize:
    def test_two_point_column(self):
        std = standardize(panel_from_values(np.array([[1.0], [-1.0]])))
        # sample sd of [1, -1] is sqrt(2); entries become +-1/sqrt(2)
        np.testing.assert_allclose(std.values[:, 0],
                                   [1 / np.sqrt(2), -1 / np.sqrt(2)])

    def test_constant_column(self):
        with pytest.raises(ZeroVarianceError):
            standardize(panel_from_values(np.array([[1.0], [1.0], [1.0]])))

    def test_idempotent(self, rng):
        std = standardize(panel_from_values(rng.standard_normal((40, 3))))
        again = standardize(panel_from_values(std.values))
        assert np.max(np.abs(again.values - std.values)) <= 1e-10

    def test_self_sourced_moments(self, rng):
        std = standardize(panel_from_values(rng.standard_normal((60, 4)) * 3 + 1))
        assert np.max(np.abs(std.values.mean(axis=0))) <= 1e-10
        assert np.max(np.abs(std.values.std(axis=0, ddof=1) - 1)) <= 1e-10

    def test_external_stats(self, rng):
        values = rng.standard_normal((50, 2))
        ref = standardize(panel_from_values(values[:25]))
        out = standardize(panel_from_values(values), stats=(ref.mean, ref.std))
        np.testing.assert_allclose(out.values, (values - ref.mean) / ref.std)


class TestRollingWindows:
    def test_counting(self, rng):
        panel = panel_from_values(rng.standard_normal((5, 2)))
        windows = rolling_windows(panel, WindowSpec(width=3))
        assert len(windows) == 3
        for k, (end, win) in enumerate(windows):
            assert win.n == 3
            assert win.dates == panel.dates[k:k + 3]
            assert end == win.dates[-1]

    def test_single_window(self, rng):
        panel = panel_from_values(rng.standard_normal((250, 2)))
        windows = rolling_windows(panel, WindowSpec(width=250))
        assert len(windows) == 1

    def test_too_short(self, rng):
        panel = panel_from_values(rng.standard_normal((10, 2)))
        with pytest.raises(InsufficientDataError):
            rolling_windows(panel, WindowSpec(width=11))

    def test_stride_partition(self, rng):
        panel = panel_from_values(rng.standard_normal((30, 2)))
        for stride in (1, 3, 7):
            windows = rolling_windows(panel, WindowSpec(width=5, stride=stride))
            for k, (_, win) in enumerate(windows):
                start = k * stride
                assert np.array_equal(win.values, panel.values[start:start + 5])

    def test_month_end_anchoring(self, rng):
        panel = panel_from_values(rng.standard_normal((500, 2)))
        windows = rolling_windows(panel, WindowSpec(width=250, month_end=True))
        # oracle: enumerate the calendar directly
        expected = [i for i in month_end_indices(panel.dates) if i + 1 >= 250]
        assert len(windows) == len(expected)
        for (end, win), i in zip(windows, expected):
            assert end == panel.dates[i]
            assert win.n == 250
            if end == panel.dates[-1]:
                continue  # a trailing partial month still anchors a window
            # otherwise the window ends on the last trading day of its month
            nxt = end + dt.timedelta(days=1)
            while nxt.weekday() >= 5:
                nxt += dt.timedelta(days=1)
            assert nxt.month != end.month


class TestCategories:
    def test_sidecar_parsing(self):
        cats = load_categories(io.StringIO("label,category\nUK,Europe\nUS,NA\n"))
        assert cats == {"UK": "Europe", "US": "NA"}

    def test_missing_category_rejected(self):
        values = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        with pytest.raises(PanelError):
            panel_from_values(values, labels=("A", "B"), categories={"A": "x"})
