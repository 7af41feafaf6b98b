"""Complete-arrival streaming on growing G(n, 24/n) graphs, with peak memory per n log2(n)^2."""
import math

import numpy as np

from cutbench import StreamConfig, arrival_stream, exact_min_cut, stream_ec_complete
from cutbench.generators import gnp

cfg = StreamConfig.desk()
for e in range(7, 11):
    n = 1 << e
    rng = np.random.default_rng(e)
    G = gnp(n, 24 / n, rng, with_cycle=True)
    out = stream_ec_complete(arrival_stream(G, "complete", rng), cfg, rng)
    peak = max(out.instance_peaks.values())
    print(f"n={n:5d} value={out.value} exact={exact_min_cut(G).value} "
          f"peak words={peak:8d} ratio={peak / (n * math.log2(n) ** 2):.1f} (budget ratio {cfg.budget_c:g})")
