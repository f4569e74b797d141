#!/usr/bin/env python3
"""Independent check of a dumped SDPA feasibility problem.

Parses a sparse SDPA file (.dat-s) as written by `iqcrate --dump-sdpa` or
`write_sdpa`, solves it with cvxpy, and prints the optimal objective.  The
dumped problems maximize a common slack variable (the last one), so the SDPA
objective optimum equals -(best slack): a negative printed optimum means the
original feasibility problem has positive slack, i.e. is strictly feasible.

Usage: check_sdpa.py problem.dat-s [more.dat-s ...]
"""

import sys


def parse_sdpa(path):
    tokens_lines = []
    with open(path) as f:
        for line in f:
            line = line.split("*")[0].split('"')[0]
            line = line.replace(",", " ").replace("(", " ").replace(")", " ")
            line = line.replace("{", " ").replace("}", " ").replace("=", " ")
            # Header lines carry labels such as mDIM; keep only numbers.
            toks = []
            for t in line.split():
                try:
                    toks.append(float(t))
                except ValueError:
                    pass
            if toks:
                tokens_lines.append(toks)

    m = int(tokens_lines[0][0])
    nblock = int(tokens_lines[1][0])
    bstruct = [int(v) for v in tokens_lines[2][:nblock]]
    c = tokens_lines[3][:m]
    entries = []
    for toks in tokens_lines[4:]:
        if len(toks) >= 5:
            entries.append(
                (int(toks[0]), int(toks[1]), int(toks[2]), int(toks[3]), toks[4])
            )
    return m, bstruct, c, entries


def solve(path):
    import cvxpy as cp
    import numpy as np

    m, bstruct, c, entries = parse_sdpa(path)
    x = cp.Variable(m)
    constraints = []
    for bi, size in enumerate(bstruct):
        n = abs(size)
        F = [np.zeros((n, n)) for _ in range(m + 1)]
        for matno, blkno, i, j, v in entries:
            if blkno != bi + 1:
                continue
            F[matno][i - 1, j - 1] = v
            F[matno][j - 1, i - 1] = v
        expr = -F[0]
        for k in range(m):
            expr = expr + x[k] * F[k + 1]
        if size < 0:
            constraints.append(cp.diag(expr) >= 0)
        else:
            constraints.append(expr >> 0)
    prob = cp.Problem(cp.Minimize(np.array(c) @ x), constraints)
    prob.solve(solver=cp.SCS, eps=1e-8, max_iters=200000)
    return prob.status, prob.value


def main():
    if len(sys.argv) < 2:
        print(__doc__)
        return 1
    for path in sys.argv[1:]:
        status, value = solve(path)
        print(f"{path}: status={status} optimum={value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
