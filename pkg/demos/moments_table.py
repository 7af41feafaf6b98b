"""Conditional inverse moment Q(d, p, 1, d) against 4/(pd) for a few degrees."""
from cutbench.moments import cond_inverse_moment, cond_ratio_moments

print(f"{'d':>5} {'p':>5} {'Q':>12} {'4/(pd)':>10} {'Var[X/Y], c=d/4':>18}")
for d in (8, 32, 128, 512):
    for p in (0.1, 0.5):
        Q = cond_inverse_moment(d, p, 1, d)
        _, _, var = cond_ratio_moments(max(1, d // 4), d, p, 1, d)
        print(f"{d:5d} {p:5.1f} {Q:12.6f} {4 / (p * d):10.6f} {var:18.3e}")
