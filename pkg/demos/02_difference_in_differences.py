"""Difference-in-differences as two chained change operations.

Employment is measured in two states before and after a policy change in one
of them. Differencing across states and then across periods estimates the
effect. Swapping the first stage to a percent change needs a one-word edit.
"""

from slicemetrics import AbsoluteChange, Mean, PercentChange, Table, compute_on

surveys = Table.from_dict({
    "STATE_NAME": ["NJ"] * 4 + ["PA"] * 4,
    "PERIOD":     ["Before", "Before", "After", "After"] * 2,
    "EMP":        [16.0, 18.0, 17.5, 18.5,   # NJ restaurants
                   19.0, 21.0, 18.0, 20.0],  # PA restaurants
})

employment = Mean("EMP")

print("Employment rate per state and period:")
print(compute_on(employment, surveys, split_by=["STATE_NAME", "PERIOD"]).to_text())

did = (
    employment
    | AbsoluteChange("STATE_NAME", "PA")   # NJ minus PA, within each period
    | AbsoluteChange("PERIOD", "Before")   # after minus before, of those gaps
)
frame = compute_on(did, surveys)
print("Difference-in-differences (rows for the baselines are zero):")
print(frame.to_text())

# Hand check against the four cell means.
nj_before, nj_after = (16.0 + 18.0) / 2, (17.5 + 18.5) / 2
pa_before, pa_after = (19.0 + 21.0) / 2, (18.0 + 20.0) / 2
print("hand oracle:", (nj_after - pa_after) - (nj_before - pa_before))

pct_did = (
    employment
    | PercentChange("STATE_NAME", "PA")
    | AbsoluteChange("PERIOD", "Before")
)
print("Percentage-point variant (only the first stage changed):")
print(compute_on(pct_did, surveys).to_text())
