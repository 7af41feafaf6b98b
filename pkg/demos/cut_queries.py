"""Edge connectivity of a planted-cut graph through the cut-query pipelines.

Prints each pipeline's amplified answer next to the exact one, along with
what it spent per ledger category.
"""
import numpy as np

from cutbench import CutOracle, MdcpOracle, ec_amplified, ec_linear, ec_loglog, ec_mdcp, exact_min_cut
from cutbench.generators import planted_cut

rng = np.random.default_rng(1)
G = planted_cut(150, 170, 4, 0.3, rng)
print(f"n={G.n} m={G.m} min degree={G.degrees.min()} exact={exact_min_cut(G).value}")

for name, fn, oracle_type in (("ec_linear", ec_linear, CutOracle),
                              ("ec_loglog", ec_loglog, CutOracle),
                              ("ec_mdcp", ec_mdcp, MdcpOracle)):
    spent = []

    def once():
        out = fn(oracle_type(G), rng=rng)
        spent.append(out.ledger)
        return out

    value = ec_amplified(once, 10)
    used = {cat: sum(l[cat][1] for l in spent) for cat in spent[0] if any(l[cat][1] for l in spent)}
    print(f"{name:10s} -> {value}   units over 10 trials: {used}")
