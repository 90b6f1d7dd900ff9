"""Churn analysis story: one metric definition, reused across questions.

An online retailer ran an experiment with three treatment arms and wants the
change in churn rate versus control, per region. The metric is defined once;
the dimensions live only in the compute_on call.
"""

from slicemetrics import (
    Bootstrap,
    Count,
    EvalContext,
    PercentChange,
    Sum,
    Table,
    compute_on,
)

events = Table.from_dict({
    "region":     ["US", "EU", "US", "EU", "US", "US", "EU", "EU", "US", "EU"],
    "experiment": ["control", "control", "treatment1", "treatment3", "control",
                   "treatment2", "treatment1", "treatment2", "treatment3", "control"],
    "lost":       [1, 0, 0, 1, 1, 0, 1, 0, 1, 1],
})

# churn = lost users / all users, built from two aggregates and renamed.
churn = (Sum("lost") / Count("lost")).set_names(["churn"])

print("Overall churn rate:")
print(compute_on(churn, events).to_text())

print("Churn per experiment arm (same metric, new dimension):")
print(compute_on(churn, events, split_by=["experiment"]).to_text())

# The percent-change operation computes its child per experiment arm, then
# reports each arm relative to control. Control itself is pinned at 0.
change = churn | PercentChange("experiment", "control")
print("Percent change in churn versus control:")
print(compute_on(change, events).to_text())

print("Same question, but per region (only split_by changed):")
print(compute_on(change, events, split_by=["region"]).to_text())

# Chaining Bootstrap onto the pipeline attaches a standard error to every
# row. The seed makes the resampling reproducible.
sampled = change | Bootstrap(500, seed=7)
ctx = EvalContext()
print("Bootstrap standard errors for those changes:")
print(compute_on(sampled, events, (), ctx).to_text())
if ctx.warnings:
    print("warnings:", *(w.message for w in ctx.warnings), sep="\n  ")
