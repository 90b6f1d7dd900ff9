from __future__ import annotations

import random

import pytest

from slicemetrics import (
    AbsoluteChange,
    Bootstrap,
    Composite,
    Count,
    Distribution,
    DslError,
    Jackknife,
    Mean,
    PercentChange,
    Quantile,
    Sum,
    parse,
    print_metric,
    print_program,
)
from slicemetrics.dsl import set_n_rep

from helpers import random_pipeline as _random_pipeline


class TestParse:
    def test_churn_pipeline_matches_tree(self):
        src = 'sum(lost) / count(lost) as "churn" | percent_change(experiment, "control")'
        metric = parse(src).metrics[0]
        expected = (Sum("lost") / Count("lost")).set_names(["churn"]) | PercentChange(
            "experiment", "control"
        )
        assert metric == expected

    def test_did_chain_depth(self):
        src = 'mean(EMP) | absolute_change(STATE_NAME, "PA") | absolute_change(PERIOD, "Before")'
        metric = parse(src).metrics[0]
        assert isinstance(metric, AbsoluteChange)
        assert isinstance(metric.child, AbsoluteChange)
        assert metric.child.child == Mean("EMP")

    def test_pipe_binds_loosest(self):
        metric = parse('sum(a) / count(a) | distribution(g)').metrics[0]
        assert isinstance(metric, Distribution)
        assert isinstance(metric.child, Composite)

    def test_arithmetic_precedence(self):
        metric = parse("sum(a) + count(b) * 2").metrics[0]
        assert metric.op == "add"
        assert metric.right.op == "mul"

    def test_power_binds_tightest(self):
        metric = parse("1.96 / count(x) ** 0.5").metrics[0]
        assert metric.op == "div"
        assert metric.right.op == "pow"

    def test_parenthesized_pipeline_as_atom(self):
        metric = parse('(sum(x) | distribution(g)) + 1').metrics[0]
        assert metric.op == "add"
        assert isinstance(metric.left, Distribution)

    def test_bootstrap_seed_comes_from_context(self):
        metric = parse("mean(x) | bootstrap(250)", seed=17).metrics[0]
        assert metric == Bootstrap(250, seed=17, child=Mean("x"))

    def test_bootstrap_default_n_rep(self):
        metric = parse("mean(x) | bootstrap()", default_n_rep=64).metrics[0]
        assert metric.n_rep == 64

    def test_quantile_and_jackknife(self):
        program = parse("quantile(x, 0.25); mean(x) | jackknife(cookie)")
        assert program.metrics[0] == Quantile("x", 0.25)
        assert program.metrics[1] == Jackknife("cookie", child=Mean("x"))

    def test_numeric_baseline_becomes_int_cell(self):
        metric = parse('sum(x) | absolute_change(year, 2020)').metrics[0]
        assert metric.baseline == 2020 and isinstance(metric.baseline, int)

    def test_spans_cover_each_metric(self):
        src = "sum(a); count(b)"
        program = parse(src)
        lo, hi = program.spans[0]
        assert src[lo:hi].strip() == "sum(a)"
        lo, hi = program.spans[1]
        assert src[lo:hi].strip() == "count(b)"


class TestParseErrors:
    def test_unterminated_call_position(self):
        with pytest.raises(DslError) as err:
            parse("sum(")
        assert err.value.line == 1 and err.value.col == 5

    def test_unknown_function_suggests(self):
        with pytest.raises(DslError, match="did you mean 'percent_change'"):
            parse('sum(x) | persent_change(a, "b")')

    def test_expected_token_set_reported(self):
        with pytest.raises(DslError) as err:
            parse("sum(lost) +")
        assert err.value.expected

    def test_operation_atom_rejected(self):
        with pytest.raises(DslError, match="must modify another metric"):
            parse('percent_change(a, "b")')

    def test_piping_non_operation_rejected(self):
        with pytest.raises(DslError, match="not an operation"):
            parse("sum(x) | count(y)")

    def test_bare_identifier_baseline_rejected(self):
        with pytest.raises(DslError, match="quoted string or a number"):
            parse("sum(x) | percent_change(arm, control)")

    def test_error_carries_line_number(self):
        with pytest.raises(DslError) as err:
            parse("sum(a) +\nmax(")
        assert err.value.line == 2

    def test_exponent_must_be_number(self):
        with pytest.raises(DslError, match="exponent"):
            parse("sum(x) ** count(y)")


class TestPrint:
    @pytest.mark.parametrize(
        "src",
        [
            "sum(lost)",
            "sum(lost) / count(lost)",
            'sum(lost) / count(lost) as "churn"',
            "mean(x) + 1.96 / count(x) ** 0.5 * sd(x)",
            "count(pitchtype) | distribution(pitchtype)",
            'sum(lost) / count(lost) as "churn" | percent_change(experiment, "control")',
            'mean(EMP) | absolute_change(STATE_NAME, "PA") | absolute_change(PERIOD, "Before")',
            "mean(x) | bootstrap(100)",
            "(sum(a) + count(b)) * 2.0",
            "sum(a); count(b) | jackknife(u)",
            '(sum(x) as "inner") + 1.0',
            'sum(x) | absolute_change(year, 2020)',
        ],
    )
    def test_round_trip_fixpoint(self, src):
        first = parse(src)
        text = print_program(first)
        second = parse(text)
        assert second.metrics == first.metrics
        assert print_program(second) == text

    def test_subtraction_keeps_grouping(self):
        metric = parse("sum(a) - (count(b) - count(c))").metrics[0]
        text = print_metric(metric)
        assert parse(text).metrics[0] == metric

    def test_generated_programs_round_trip(self):
        rng = random.Random(61)
        for _ in range(60):
            metric = _random_pipeline(rng)
            text = print_metric(metric)
            reparsed = parse(text).metrics[0]
            assert reparsed == metric, text
            assert print_metric(reparsed) == text


class TestNRepOverride:
    def test_override_rewrites_every_bootstrap(self):
        metric = parse("mean(x) | bootstrap(5) | absolute_change(g, \"a\")").metrics[0]
        replaced = set_n_rep(metric, 99)
        assert isinstance(replaced.child, Bootstrap)
        assert replaced.child.n_rep == 99
        assert replaced.condition == "g"


DSL_SQL_FIXTURES = [
    ("sum(lost)", ()),
    ("count(lost) | distribution(region)", ()),
    ('sum(lost) / count(lost) as "churn" | percent_change(experiment, "control")', ()),
    ('sum(lost) / count(lost) as "churn" | percent_change(experiment, "control")'
     " | bootstrap(25)", ()),
    ('mean(lost) | absolute_change(experiment, "control")', ("region",)),
    ("sum(lost); count(lost)", ("region",)),
]


class TestDslFixturesExecuteAsPortableSql:
    @pytest.mark.parametrize("src,split", DSL_SQL_FIXTURES, ids=[f[0][:40] for f in DSL_SQL_FIXTURES])
    def test_portable_sql_runs_on_harness_engine(self, src, split, fig2):
        from slicemetrics import Dialect, to_sql
        from helpers import execute_query

        for metric in parse(src, seed=3).metrics:
            query = to_sql(metric, "fig2", split, Dialect.PORTABLE)
            rows = execute_query(query, {"fig2": fig2})
            assert rows, query.render()
