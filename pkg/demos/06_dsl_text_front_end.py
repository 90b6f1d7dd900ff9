"""The textual DSL: the same trees, written as one-liners.

Pipes bind loosest, so a ratio renames and then flows into operations the way
it reads. The printer produces canonical text that reparses to the same tree.
"""

from slicemetrics import compute_on, parse, print_program, Table

events = Table.from_dict({
    "region":     ["US", "EU", "US", "EU", "US", "US"],
    "experiment": ["control", "control", "treatment1", "treatment3", "control", "treatment2"],
    "lost":       [1, 0, 0, 1, 1, 0],
})

program = parse(
    'sum(lost) / count(lost) as "churn"'
    ' | percent_change(experiment, "control")'
    ' | bootstrap(300)',
    seed=5,
)
metric = program.metrics[0]
print("parsed names:", metric.names())
print("extra dims:", metric.extra_dims())
print("canonical form:", print_program(program))
print()
print(compute_on(metric, events).to_text())

# Several metrics separated by ';' evaluate together and share work.
multi = parse("sum(lost); count(lost); sum(lost) / count(lost)")
print(compute_on(list(multi.metrics), events, ["region"]).to_text())

print("Equivalent command line:")
print("  slicemetrics --input events.csv --split-by region \\")
print("      --metric 'sum(lost) / count(lost) as \"churn\"' --mode compute")
print("  slicemetrics --metric 'mean(lost) | bootstrap(300)' --mode sql --dialect googlesql")
