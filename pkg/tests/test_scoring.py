"""Statistical metrics, threshold ladders, and the semantic judge."""

from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chatinsights.dataset import ingest_csv
from chatinsights.gateway import ChatMessage, ScriptedProvider
from chatinsights.model import AnalyticalAction, DataContext
from chatinsights.scoring import (
    DEFAULT_STAT_SCORE,
    METRICS,
    MetricReading,
    coeff_variation,
    linear_r2,
    max_abs_z,
    parse_semantic_reply,
    pearson_r,
    relative_diff,
    semantic_score,
    statistical_metric,
    statistical_score,
    top_gap_ratio,
    top_share,
)

from oracles import (
    oracle_cv,
    oracle_group_means,
    oracle_max_abs_z,
    oracle_pearson,
    oracle_r2,
    oracle_relative_diff,
    oracle_stat_score,
    oracle_top_gap_ratio,
    oracle_top_share,
)


def ctx(*attrs: str) -> DataContext:
    return DataContext(frozenset(attrs), (AnalyticalAction("aggregation", "x"),))


CARS = (
    "Name,MPG,Horsepower,Year,Origin\n"
    "a,18,130,1970-01-01,USA\n"
    "b,16,165,1971-01-01,USA\n"
    "c,24,95,1972-01-01,Japan\n"
    "d,30,88,1973-01-01,Japan\n"
    "e,22,105,1974-01-01,Europe\n"
    "f,20,112,1975-01-01,Europe\n"
)


@pytest.fixture(scope="module")
def table():
    profile, table = ingest_csv(CARS.encode(), "cars")
    return profile, table


class TestMetricFunctions:
    def test_pearson_matches_oracle(self):
        xs = [1.0, 2.0, 4.0, 8.0]
        ys = [1.2, 1.9, 4.4, 7.6]
        assert abs(pearson_r(xs, ys) - oracle_pearson(xs, ys)) < 1e-12

    def test_pearson_constant_input_undefined(self):
        assert pearson_r([1.0, 1.0, 1.0], [2.0, 3.0, 4.0]) is None

    def test_r2_is_squared_correlation_for_simple_fit(self):
        xs = [0.0, 1.0, 2.0, 3.0, 4.0]
        ys = [1.0, 2.2, 2.8, 4.1, 5.2]
        assert abs(linear_r2(xs, ys) - oracle_pearson(xs, ys) ** 2) < 1e-12
        assert abs(linear_r2(xs, ys) - oracle_r2(xs, ys)) < 1e-12

    def test_max_abs_z_uses_population_stddev(self):
        values = [10.0, 10.0, 10.0, 10.0, 30.0]
        assert abs(max_abs_z(values) - oracle_max_abs_z(values)) < 1e-12
        assert abs(max_abs_z(values) - 2.0) < 1e-12

    def test_cv_and_share_and_gap(self):
        values = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]
        assert abs(coeff_variation(values) - oracle_cv(values)) < 1e-12
        labels = ["a", "a", "b", "c"]
        assert abs(top_share(labels) - 0.5) < 1e-12
        assert abs(top_gap_ratio([27.0, 17.0, 22.0]) - oracle_top_gap_ratio(
            {"J": 27.0, "U": 17.0, "E": 22.0}
        )) < 1e-12

    def test_relative_diff(self):
        assert abs(relative_diff(27.0, 17.0) - (10.0 / 27.0)) < 1e-12
        assert relative_diff(0.0, 0.0) is None

    @settings(max_examples=80)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50))
    def test_max_abs_z_oracle_property(self, values):
        ours, ref = max_abs_z(values), oracle_max_abs_z(values)
        if ref is None:
            assert ours is None
        else:
            assert ours == pytest.approx(ref, abs=1e-9)


class TestRouting:
    """Category -> metric selection over a real ingested table."""

    def test_correlation_uses_first_two_numerics_in_schema_order(self, table):
        profile, tab = table
        reading, note = statistical_metric("correlation", ctx("Horsepower", "MPG"), tab, profile)
        assert reading.metric == "pearson_r"
        # schema order is MPG then Horsepower regardless of context set order
        assert "MPG, Horsepower" in note
        xs = [18.0, 16.0, 24.0, 30.0, 22.0, 20.0]
        ys = [130.0, 165.0, 95.0, 88.0, 105.0, 112.0]
        assert reading.value == pytest.approx(oracle_pearson(xs, ys), abs=1e-12)

    def test_trend_prefers_temporal_axis(self, table):
        profile, tab = table
        reading, note = statistical_metric("trend", ctx("MPG", "Year"), tab, profile)
        assert reading.metric == "linear_r2"
        assert "vs Year" in note

    def test_outlier_and_distribution(self, table):
        profile, tab = table
        reading, _ = statistical_metric("outlier", ctx("MPG"), tab, profile)
        assert reading.metric == "max_abs_z"
        reading, _ = statistical_metric("distribution", ctx("MPG"), tab, profile)
        assert reading.metric == "coeff_variation"

    def test_extremum_over_group_means(self, table):
        profile, tab = table
        reading, note = statistical_metric("extremum", ctx("Horsepower", "Origin"), tab, profile)
        means = oracle_group_means(
            [("USA", 130.0), ("USA", 165.0), ("Japan", 95.0), ("Japan", 88.0),
             ("Europe", 105.0), ("Europe", 112.0)]
        )
        assert reading.value == pytest.approx(oracle_top_gap_ratio(means), abs=1e-12)
        assert reading.sample_size == 3

    def test_proportion_needs_categorical(self, table):
        profile, tab = table
        reading, _ = statistical_metric("proportion", ctx("Origin"), tab, profile)
        assert reading.value == pytest.approx(oracle_top_share(["U", "U", "J", "J", "E", "E"]))
        reading, note = statistical_metric("proportion", ctx("MPG"), tab, profile)
        assert reading is None
        assert "categorical" in note

    def test_difference_group_means_extremes(self, table):
        profile, tab = table
        reading, _ = statistical_metric("difference", ctx("MPG", "Origin"), tab, profile)
        means = oracle_group_means(
            [("USA", 18.0), ("USA", 16.0), ("Japan", 24.0), ("Japan", 30.0),
             ("Europe", 22.0), ("Europe", 20.0)]
        )
        hi, lo = max(means.values()), min(means.values())
        assert reading.value == pytest.approx(oracle_relative_diff(hi, lo), abs=1e-12)

    def test_other_category_has_no_metric(self, table):
        profile, tab = table
        reading, note = statistical_metric("other", ctx("MPG"), tab, profile)
        assert reading is None
        assert statistical_score(reading) == DEFAULT_STAT_SCORE == 3


class TestLadders:
    BOUNDARIES = {
        "pearson_r": [(0.19, 1), (0.2, 2), (0.39, 2), (0.4, 3), (0.6, 4), (0.8, 5), (1.0, 5)],
        "linear_r2": [(0.0, 1), (0.2, 2), (0.4, 3), (0.6, 4), (0.8, 5)],
        "max_abs_z": [(1.49, 1), (1.5, 2), (1.996, 2), (2.0, 3), (2.5, 4), (3.0, 5)],
        "coeff_variation": [(0.09, 1), (0.1, 2), (0.25, 3), (0.5, 4), (1.0, 5)],
        "top_gap_ratio": [(0.049, 1), (0.05, 2), (0.15, 3), (0.3, 4), (0.5, 5)],
        "relative_diff": [(0.0, 1), (0.05, 2), (0.15, 3), (0.3, 4), (0.5, 5), (3.0, 5)],
        "top_share": [(0.29, 1), (0.3, 2), (0.45, 3), (0.6, 4), (0.8, 5), (1.0, 5)],
    }

    def test_half_open_boundaries(self):
        for metric, cases in self.BOUNDARIES.items():
            for value, expected in cases:
                reading = MetricReading(metric, value, 10)
                assert statistical_score(reading) == expected, (metric, value)

    def test_pearson_scored_by_magnitude(self):
        assert statistical_score(MetricReading("pearson_r", -0.95, 10)) == 5
        assert statistical_score(MetricReading("pearson_r", -0.1, 10)) == 1

    def test_custom_ladder_override(self):
        # past the last configured rung falls in the open top bucket (5)
        ladders = {"pearson_r": ((0.5, 1),)}
        assert statistical_score(MetricReading("pearson_r", 0.4, 10), ladders) == 1
        assert statistical_score(MetricReading("pearson_r", 0.9, 10), ladders) == 5

    @settings(max_examples=200)
    @given(st.sampled_from(METRICS), st.floats(-10, 10, allow_nan=False))
    def test_total_and_matches_oracle(self, metric, value):
        reading = MetricReading(metric, value, 5)
        got = statistical_score(reading)
        assert 1 <= got <= 5
        assert got == oracle_stat_score(metric, value)


class TestSemantic:
    @pytest.mark.parametrize(
        "reply,expected",
        [
            ("4: strong separation between groups", (4, "strong separation between groups", False)),
            ("3", (3, "", False)),
            ("Score: 5. Clearly the headline.", (5, "Clearly the headline.", False)),
            ("7: off the scale", (5, "off the scale", True)),
            ("0: nothing here", (1, "nothing here", True)),
            ("no digits at all", None),
        ],
    )
    def test_parse_semantic_reply(self, reply, expected):
        assert parse_semantic_reply(reply) == expected

    def prompt(self):
        return [ChatMessage("user", "rate this insight")]

    def test_judgment_from_clean_reply(self):
        provider = ScriptedProvider({"chat": {"semantic_score": ["4: compelling gap"]}})
        judgment = semantic_score(provider, self.prompt())
        assert (judgment.value, judgment.rationale) == (4, "compelling gap")
        assert not judgment.defaulted and not judgment.clamped

    def test_one_repair_then_success(self):
        provider = ScriptedProvider(
            {"chat": {"semantic_score": ["hmm, hard to say", "2: weak support"]}}
        )
        judgment = semantic_score(provider, self.prompt())
        assert judgment.value == 2
        assert provider.remaining()["semantic_score"] == 0

    def test_defaults_to_three_after_repair_fails(self):
        provider = ScriptedProvider(
            {"chat": {"semantic_score": ["no rating", "still no rating"]}}
        )
        judgment = semantic_score(provider, self.prompt())
        assert judgment.value == 3
        assert judgment.defaulted

    def test_out_of_range_clamped_and_marked(self):
        provider = ScriptedProvider({"chat": {"semantic_score": ["9: wild"]}})
        judgment = semantic_score(provider, self.prompt())
        assert judgment.value == 5
        assert judgment.clamped
