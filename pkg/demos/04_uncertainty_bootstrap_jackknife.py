"""Standard errors for free: chain a resampling operation onto any metric.

For the mean of n i.i.d. values both estimators should land near s/sqrt(n);
the delete-one jackknife hits it exactly.
"""

import math
import random

from slicemetrics import Bootstrap, Jackknife, Mean, Table, compute_on

rng = random.Random(11)
values = [rng.gauss(100.0, 9.0) for _ in range(150)]
data = Table.from_dict({"unit": list(range(150)), "x": values})

mean = sum(values) / len(values)
sd = math.sqrt(sum((v - mean) ** 2 for v in values) / (len(values) - 1))
print(f"n=150, sample sd={sd:.3f}, s/sqrt(n)={sd / math.sqrt(150):.4f}\n")

boot = compute_on(Mean("x") | Bootstrap(2000, seed=1), data)
print("bootstrap:", boot.to_csv())

jack = compute_on(Mean("x") | Jackknife("unit"), data)
print("jackknife:", jack.to_csv())

# The same operations compose with anything, e.g. a trimmed spread metric.
from slicemetrics import Quantile

iqr = (Quantile("x", 0.75) - Quantile("x", 0.25)).set_names(["iqr"])
print("IQR with a bootstrap SE:")
print(compute_on([iqr, iqr | Bootstrap(500, seed=2)], data).to_text())
