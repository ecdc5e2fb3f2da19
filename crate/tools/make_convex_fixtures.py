"""Reference optima for the coding problem, solved with a generic conic solver.

Writes crates/core/tests/fixtures/convex_oracle.json.
"""
import json
from pathlib import Path

import cvxpy as cp
import numpy as np

OUT = Path(__file__).resolve().parents[1] / "crates/core/tests/fixtures/convex_oracle.json"


def random_adjacency(rng, n):
    # random spanning path plus extra edges, so the graph is connected
    order = rng.permutation(n)
    om = np.zeros((n, n))
    for a, b in zip(order[:-1], order[1:]):
        om[a, b] = om[b, a] = 1
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.2:
                om[i, j] = om[j, i] = 1
    return om


def weights(om):
    lo = np.tril(om, -1)
    return lo - np.diag(lo.sum(0))


def solve(x, om, l1, l2):
    n = x.shape[1]
    w = weights(om)
    z = cp.Variable((n, n))
    zw = z @ w
    obj = 0.5 * cp.sum_squares(x - x @ z) + l1 * cp.sum(cp.abs(z)) + l2 * cp.sum(cp.norm(zw, 2, axis=0))
    prob = cp.Problem(cp.Minimize(obj), [cp.diag(z) == 0])
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-9, tol_gap_rel=1e-9, tol_feas=1e-9)
    assert prob.status == cp.OPTIMAL, prob.status
    return float(prob.value), z.value


def standardize(x):
    return (x - x.mean(1, keepdims=True)) / x.std(1, keepdims=True)


def main():
    rng = np.random.default_rng(20240611)
    cases = []
    for i in range(10):
        n = int(rng.integers(5, 11))
        d = int(rng.integers(3, 9))
        x = standardize(rng.normal(size=(d, n)))
        om = random_adjacency(rng, n)
        l1 = float(rng.choice([0.01, 0.05, 0.1]))
        l2 = float(rng.choice([0.05, 0.1, 0.3]))
        value, _ = solve(x, om, l1, l2)
        cases.append(dict(name=f"random{i:02}", x=x.tolist(), omega=om.tolist(), lambda1=l1, lambda2=l2, objective=value))
    # duplicated column, no spatial term
    base = standardize(rng.normal(size=(4, 5)))
    x = np.concatenate([base, base[:, :1]], axis=1)
    om = random_adjacency(rng, 6)
    value, _ = solve(x, om, 0.05, 0.0)
    cases.append(dict(name="duplicate", x=x.tolist(), omega=om.tolist(), lambda1=0.05, lambda2=0.0, objective=value))
    OUT.write_text(json.dumps(dict(cases=cases), indent=1) + "\n")
    print(f"wrote {len(cases)} cases to {OUT}")


if __name__ == "__main__":
    main()
