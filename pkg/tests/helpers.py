"""Independent Monte Carlo oracles shared by the test modules."""

import math

import numpy as np


def simplex_mc(a, T, points, seed, chunk=1_000_000):
    """Monte Carlo integral of prod (t_j - t_{j-1})^{a_j} over the ordered simplex in [0, T].

    Uniform points on the simplex have Dirichlet(1, ..., 1) spacings.
    """
    rng = np.random.default_rng(seed)
    n = len(a)
    exps = np.asarray(a, dtype=float)
    sums = []
    done = 0
    while done < points:
        size = min(chunk, points - done)
        gaps = rng.dirichlet(np.ones(n + 1), size=size)[:, :n] * T
        sums.append(float(np.prod(gaps**exps, axis=1).sum()))
        done += size
    return T**n / math.factorial(n) * math.fsum(sums) / points
