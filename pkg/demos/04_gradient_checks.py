#!/usr/bin/env python3
"""Verify every analytic gradient against central finite differences.

Covers both architectures and both edge-attribute schemes across several
seeds; the reported number per tensor is
max |g_analytic - g_fd| / max(1, |g_fd|).
"""

from linecon.gradcheck import run_gradcheck

variants = [
    ("gcn", "none"),
    ("gcn", "ss-weight"),
    ("gat", "none"),
    ("gat", "ss-feature"),
]

print(f"{'model':6s} {'edge attr':12s} {'seed':4s}  worst tensor error")
for kind, edge_attr in variants:
    for seed in (0, 1, 2):
        result = run_gradcheck(kind, n_nodes=5, dims=(4, 3, 2), seed=seed,
                               edge_attr=edge_attr)
        worst = max(result.errors, key=result.errors.get)
        status = "ok" if result.ok else "FAIL"
        print(f"{kind:6s} {edge_attr:12s} {seed:<4d}  "
              f"{result.errors[worst]:.2e} ({worst}) [{status}]")
