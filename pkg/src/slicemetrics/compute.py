"""In-memory evaluation of metric trees via split-apply-combine.

Leaf aggregates group the table by the requested dimensions and reduce each
slice. Operations run in three phases: preprocess the data, compute the child
(usually at a finer granularity), then post-process the child frame. Shared
subtrees are evaluated once per (metric, data, split) thanks to a content
addressed cache on the evaluation context.

Arithmetic on result frames follows the pointwise rule: frames are joined on
their common key columns, value columns pair positionally, scalars broadcast,
and anything that cannot be aligned yields NaN rather than an error.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from . import metrics as m
from .errors import EmptyInput, TypeMismatch, UnknownColumn
from .frames import ResultFrame
from .table import SliceKey, Table, group_rows, resample_with_replacement

NAN = float("nan")


@dataclass
class ComputeWarning:
    kind: str
    message: str


@dataclass
class EvalContext:
    """Mutable evaluation state: RNG, result cache, and diagnostics."""

    seed: int = 0
    cache_enabled: bool = True
    rng: random.Random = field(init=False)
    cache: dict = field(default_factory=dict)
    cache_hits: int = 0
    warnings: list[ComputeWarning] = field(default_factory=list)

    def __post_init__(self):
        self.rng = random.Random(self.seed)

    def warn(self, kind: str, message: str):
        self.warnings.append(ComputeWarning(kind, message))


def compute_on(
    metric,
    table: Table,
    split_by: list[str] | tuple[str, ...] = (),
    ctx: EvalContext | None = None,
) -> ResultFrame:
    """Evaluate one metric, or a sequence of metrics jointly, over dimensions.

    A sequence shares one cache, so common subtrees are computed once; the
    frames are then merged on their keys. Jointly computed metrics must
    produce identical key columns.
    """
    ctx = ctx or EvalContext()
    split_by = tuple(split_by)
    for dim in split_by:
        if not table.has_column(dim):
            raise UnknownColumn(f"no such column: {dim!r}")
    if isinstance(metric, m.Metric):
        return _cached_compute(metric, table, split_by, ctx)
    frames = [_cached_compute(one, table, split_by, ctx) for one in metric]
    if not frames:
        raise ValueError("no metrics to compute")
    return _merge_frames(frames)


def _merge_frames(frames: list[ResultFrame]) -> ResultFrame:
    keys = frames[0].key_columns
    for frame in frames[1:]:
        if frame.key_columns != keys:
            raise ValueError(
                "jointly computed metrics must share key columns:"
                f" {frame.key_columns} != {keys}"
            )
    value_columns = tuple(n for frame in frames for n in frame.value_columns)
    order: list[SliceKey] = []
    seen: set[SliceKey] = set()
    for frame in frames:
        for key, _ in frame.rows:
            if key not in seen:
                seen.add(key)
                order.append(key)
    rows = []
    maps = [dict(frame.rows) for frame in frames]
    for key in order:
        values: list[float] = []
        for frame, rowmap in zip(frames, maps):
            values.extend(rowmap.get(key, (NAN,) * len(frame.value_columns)))
        rows.append((key, tuple(values)))
    return ResultFrame(keys, value_columns, tuple(rows))


def _cached_compute(metric: m.Metric, table: Table, split_by, ctx: EvalContext) -> ResultFrame:
    if not ctx.cache_enabled:
        return _compute(metric, table, split_by, ctx)
    key = (metric.serialize(), table.fingerprint(), split_by)
    hit = ctx.cache.get(key)
    if hit is not None:
        ctx.cache_hits += 1
        return hit
    frame = _compute(metric, table, split_by, ctx)
    ctx.cache[key] = frame
    return frame


def _compute(metric: m.Metric, table: Table, split_by, ctx: EvalContext) -> ResultFrame:
    if isinstance(metric, m.ScalarLiteral):
        groups = group_rows(table, split_by)
        rows = tuple((key, (metric.value,)) for key in groups)
        return ResultFrame(split_by, metric.names(), rows)
    if isinstance(metric, m._LeafAggregate):
        groups = group_rows(table, split_by)
        rows = tuple((key, (eval_leaf(metric, part),)) for key, part in groups.items())
        return ResultFrame(split_by, metric.names(), rows)
    if isinstance(metric, m.Composite):
        left = _composite_side(metric.left, table, split_by, ctx)
        right = _composite_side(metric.right, table, split_by, ctx)
        return eval_composite(metric.op, left, right, names=metric.names())
    if isinstance(metric, m.Operation):
        return _eval_operation(metric, table, split_by, ctx)
    raise TypeError(f"cannot compute {type(metric).__name__}")


def _composite_side(side: m.Metric, table, split_by, ctx):
    # Scalars stay scalars so they can broadcast against any key structure.
    if isinstance(side, m.ScalarLiteral) and side.names_override is None:
        return side.value
    return _cached_compute(side, table, split_by, ctx)


# -- leaf aggregates ---------------------------------------------------------


def eval_leaf(leaf: m._LeafAggregate, part: Table) -> float:
    """Reduce one slice to a float, skipping nulls."""
    values = part.column(leaf.var).values
    if leaf.kind == "count":
        return float(sum(1 for v in values if v is not None))
    numeric: list[float] = []
    for v in values:
        if v is None:
            continue
        if isinstance(v, str):
            raise TypeMismatch(
                f"cannot aggregate text cell {v!r} in column {leaf.var!r} with {leaf.kind}"
            )
        numeric.append(float(v))
    n = len(numeric)
    kind = leaf.kind
    if kind == "sum":
        return math.fsum(numeric)
    if kind == "mean":
        return math.fsum(numeric) / n if n else NAN
    if kind == "min":
        return min(numeric) if n else NAN
    if kind == "max":
        return max(numeric) if n else NAN
    if kind == "variance":
        return _quiet(np.var, numeric, ddof=1) if n >= 2 else NAN
    if kind == "sd":
        return _quiet(np.std, numeric, ddof=1) if n >= 2 else NAN
    if kind == "quantile":
        return _quiet(np.quantile, numeric, leaf.q) if n else NAN
    raise TypeError(f"unknown leaf aggregate: {kind!r}")


# -- pointwise arithmetic ----------------------------------------------------

_ARITH = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
    "div": np.divide,
    "pow": np.power,
}


def _apply(op: str, a: float, b: float) -> float:
    with np.errstate(all="ignore"):
        return float(_ARITH[op](np.float64(a), np.float64(b)))


def eval_composite(
    op: str,
    left: ResultFrame | float,
    right: ResultFrame | float,
    names: tuple[str, ...] | None = None,
) -> ResultFrame:
    """Combine frames (or a frame and a scalar) pointwise.

    Frames join on their common key columns; a side whose key is coarser
    broadcasts across the finer side's rows. Keys present on only one side,
    and value lists of differing width, produce NaN: incompatibility is a
    value, not an error.
    """
    if isinstance(left, float) and isinstance(right, float):
        raise TypeError("at least one side must be a frame")
    if isinstance(right, float):
        assert isinstance(left, ResultFrame)
        out_names = names or left.value_columns
        rows = tuple(
            (key, tuple(_apply(op, v, right) for v in values)) for key, values in left.rows
        )
        return ResultFrame(left.key_columns, out_names, rows)
    if isinstance(left, float):
        out_names = names or right.value_columns
        rows = tuple(
            (key, tuple(_apply(op, left, v) for v in values)) for key, values in right.rows
        )
        return ResultFrame(right.key_columns, out_names, rows)

    common = tuple(k for k in left.key_columns if k in right.key_columns)
    key_columns = left.key_columns + tuple(
        k for k in right.key_columns if k not in left.key_columns
    )
    width = min(len(left.value_columns), len(right.value_columns))
    compatible = len(left.value_columns) == len(right.value_columns)
    out_names = names if names is not None else (
        left.value_columns if compatible else left.value_columns[:width]
    )

    left_groups = _group_by_projection(left, common)
    right_groups = _group_by_projection(right, common)
    order = list(left_groups)
    order.extend(k for k in right_groups if k not in left_groups)

    rows: list[tuple[SliceKey, tuple[float, ...]]] = []
    seen: set[SliceKey] = set()

    def emit(key: SliceKey, values: tuple[float, ...]):
        key = _reorder_key(key, key_columns)
        if key not in seen:
            seen.add(key)
            rows.append((key, values))

    nan_row = (NAN,) * width
    for proj in order:
        lrows = left_groups.get(proj, [])
        rrows = right_groups.get(proj, [])
        if not lrows or not rrows:
            for key, _ in lrows + rrows:
                emit(_fill_missing(key, key_columns), nan_row)
        elif len(lrows) == 1:
            lkey, lvals = lrows[0]
            for rkey, rvals in rrows:
                emit(_merge_keys(lkey, rkey), _pair(op, lvals, rvals, width, compatible))
        elif len(rrows) == 1:
            rkey, rvals = rrows[0]
            for lkey, lvals in lrows:
                emit(_merge_keys(lkey, rkey), _pair(op, lvals, rvals, width, compatible))
        else:
            # Both sides refined the same slice differently: unalignable.
            for key, _ in lrows + rrows:
                emit(_fill_missing(key, key_columns), nan_row)
    return ResultFrame(key_columns, out_names, tuple(rows))


def _pair(op, lvals, rvals, width, compatible):
    if not compatible:
        return (NAN,) * width
    return tuple(_apply(op, a, b) for a, b in zip(lvals, rvals))


def _group_by_projection(frame: ResultFrame, common: tuple[str, ...]):
    groups: dict[SliceKey, list] = {}
    for key, values in frame.rows:
        groups.setdefault(key.project(common), []).append((key, values))
    return groups


def _merge_keys(a: SliceKey, b: SliceKey) -> SliceKey:
    dims = list(a.dims)
    have = {name for name, _ in dims}
    dims.extend(pair for pair in b.dims if pair[0] not in have)
    return SliceKey(tuple(dims))


def _fill_missing(key: SliceKey, key_columns: tuple[str, ...]) -> SliceKey:
    have = dict(key.dims)
    return SliceKey(tuple((name, have.get(name)) for name in key_columns))


def _reorder_key(key: SliceKey, key_columns: tuple[str, ...]) -> SliceKey:
    return key.project(key_columns)


# -- operations ---------------------------------------------------------------


def _eval_operation(node: m.Operation, table: Table, split_by, ctx: EvalContext) -> ResultFrame:
    child = node.child
    if child is None:
        raise ValueError(f"{type(node).__name__} has no child metric to modify")
    if isinstance(node, m.Distribution):
        return _eval_distribution(node, child, table, split_by, ctx)
    if isinstance(node, m._ChangeOperation):
        return _eval_change(node, child, table, split_by, ctx)
    if isinstance(node, m.Bootstrap):
        return _eval_bootstrap(node, child, table, split_by, ctx)
    if isinstance(node, m.Jackknife):
        return _eval_jackknife(node, child, table, split_by, ctx)
    raise TypeError(f"unknown operation: {type(node).__name__}")


def _eval_distribution(node, child, table, split_by, ctx):
    child_frame = _cached_compute(child, table, split_by + (node.over,), ctx)
    key_columns = split_by + node.extra_dims()
    partition_dims = tuple(k for k in key_columns if k != node.over)
    totals: dict[SliceKey, list[float]] = {}
    for key, values in child_frame.rows:
        part = key.project(partition_dims)
        bucket = totals.setdefault(part, [0.0] * len(values))
        for i, v in enumerate(values):
            bucket[i] += v
    rows = []
    for key, values in child_frame.rows:
        total = totals[key.project(partition_dims)]
        rows.append(
            (
                key.project(key_columns),
                tuple(_apply("div", v, t) for v, t in zip(values, total)),
            )
        )
    return ResultFrame(key_columns, node.names(), tuple(rows))


def _eval_change(node, child, table, split_by, ctx):
    child_frame = _cached_compute(child, table, split_by + (node.condition,), ctx)
    key_columns = split_by + node.extra_dims()
    residual_dims = tuple(k for k in key_columns if k != node.condition)
    baselines: dict[SliceKey, tuple[float, ...]] = {}
    for key, values in child_frame.rows:
        if key.value_of(node.condition) == node.baseline:
            baselines[key.project(residual_dims)] = values
    percent = isinstance(node, m.PercentChange)
    rows = []
    for key, values in child_frame.rows:
        out_key = key.project(key_columns)
        if key.value_of(node.condition) == node.baseline:
            rows.append((out_key, (0.0,) * len(values)))
            continue
        base = baselines.get(key.project(residual_dims))
        if base is None:
            ctx.warn(
                "missing_baseline",
                f"no {node.condition}={node.baseline!r} row for slice {key.values!r}",
            )
            rows.append((out_key, (NAN,) * len(values)))
            continue
        if percent:
            combined = tuple(_apply("mul", _apply("div", v, b) - 1.0, 100.0)
                             for v, b in zip(values, base))
        else:
            combined = tuple(_apply("sub", v, b) for v, b in zip(values, base))
        rows.append((out_key, combined))
    return ResultFrame(key_columns, node.names(), tuple(rows))


def _eval_bootstrap(node, child, table, split_by, ctx):
    if table.row_count == 0:
        raise EmptyInput("bootstrap requires at least one row")
    samples: dict[SliceKey, list[list[float]]] = {}
    for i in range(node.n_rep):
        rng = random.Random(node.seed ^ i)
        resampled = resample_with_replacement(table, rng)
        frame = _cached_compute(child, resampled, split_by, ctx)
        for key, values in frame.rows:
            per_col = samples.setdefault(key, [[] for _ in values])
            for col, v in enumerate(values):
                if not math.isnan(v):
                    per_col[col].append(v)
    key_columns = split_by + node.extra_dims()
    rows = tuple(
        (key, tuple(_sample_sd(col) for col in per_col)) for key, per_col in samples.items()
    )
    return ResultFrame(key_columns, node.names(), rows)


def _eval_jackknife(node, child, table, split_by, ctx):
    if not table.has_column(node.unit):
        raise UnknownColumn(f"no such column: {node.unit!r}")
    units: list = []
    for v in table.column(node.unit).values:
        if v not in units:
            units.append(v)
    estimates: dict[SliceKey, list[list[float]]] = {}
    order: list[SliceKey] = []
    unit_values = table.column(node.unit).values
    for unit in units:
        kept = [i for i in range(table.row_count) if unit_values[i] != unit]
        frame = _cached_compute(child, table.take(kept), split_by, ctx)
        for key, values in frame.rows:
            if key not in estimates:
                estimates[key] = [[] for _ in values]
                order.append(key)
            for col, v in enumerate(values):
                if not math.isnan(v):
                    estimates[key][col].append(v)
    key_columns = split_by + node.extra_dims()
    rows = tuple(
        (key, tuple(_jackknife_se(col) for col in estimates[key])) for key in order
    )
    return ResultFrame(key_columns, node.names(), rows)


def _quiet(fn, *args, **kwargs) -> float:
    with np.errstate(all="ignore"):
        return float(fn(*args, **kwargs))


def _sample_sd(values: list[float]) -> float:
    if len(values) < 2:
        return NAN
    return _quiet(np.std, values, ddof=1)


def _jackknife_se(estimates: list[float]) -> float:
    k = len(estimates)
    if k < 2:
        return NAN
    mean = math.fsum(estimates) / k
    ss = math.fsum((e - mean) ** 2 for e in estimates)
    return math.sqrt((k - 1) / k * ss)
