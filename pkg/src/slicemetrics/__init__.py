"""Composable metrics over dimensions.

Build a metric once as an expression tree, then either evaluate it on an
in-memory table (``compute_on``) or compile it to SQL (``to_sql``). Metrics
combine with ordinary arithmetic and are transformed by chainable operations
such as ``Distribution``, ``PercentChange``, and ``Bootstrap``::

    churn = (Sum("lost") / Count("lost")).set_names(["churn"])
    change = churn | PercentChange("experiment", "control")
    frame = compute_on(change, table, split_by=["region"])
    query = to_sql(change, "events", split_by=["region"])
"""

from .compute import ComputeWarning, EvalContext, compute_on, eval_composite
from .dsl import DslProgram, parse, print_metric, print_program
from .errors import (
    DslError,
    EmptyInput,
    MetricsError,
    NameArityError,
    NestedBootstrap,
    ParseError,
    SchemaError,
    TypeMismatch,
    UnknownColumn,
    UnsupportedInDialect,
)
from .frames import ResultFrame
from .metrics import (
    AbsoluteChange,
    Bootstrap,
    Composite,
    Count,
    Distribution,
    Jackknife,
    Max,
    Mean,
    Metric,
    Min,
    Operation,
    PercentChange,
    Quantile,
    ScalarLiteral,
    StdDev,
    Sum,
    Variance,
    combine,
    pipe,
)
from .sqlgen import Dialect, SqlQuery, resample_n_times_sql, sql_aggregate, sql_expr, to_sql
from .table import (
    Cell,
    Column,
    CsvOptions,
    SliceKey,
    Table,
    group_rows,
    read_csv,
    resample_with_replacement,
    write_csv,
)

__all__ = [
    "AbsoluteChange", "Bootstrap", "Cell", "Column", "Composite", "ComputeWarning",
    "Count", "CsvOptions", "Dialect", "Distribution", "DslError", "DslProgram",
    "EmptyInput", "EvalContext", "Jackknife", "Max", "Mean", "Metric", "MetricsError",
    "Min", "NameArityError", "NestedBootstrap", "Operation", "ParseError",
    "PercentChange", "Quantile", "ResultFrame", "ScalarLiteral", "SchemaError",
    "SliceKey", "SqlQuery", "StdDev", "Sum", "Table", "TypeMismatch", "UnknownColumn",
    "UnsupportedInDialect", "Variance", "combine", "compute_on", "eval_composite",
    "group_rows", "parse", "pipe", "print_metric", "print_program", "read_csv",
    "resample_n_times_sql", "resample_with_replacement", "sql_aggregate", "sql_expr",
    "to_sql", "write_csv",
]

__version__ = "0.1.0"
