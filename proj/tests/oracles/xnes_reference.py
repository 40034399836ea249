"""Independent reference xNES run used to fix the 10-D sphere evaluation budget.

Textbook formulation with z = mu + B s, Sigma = B B^T, B <- B expm(eta_B/2 G_M),
scipy's Pade matrix exponential, numpy's RNG. Population scaled by 1.5 and the
covariance learning rate by 0.5, eta_mu = 1. Prints the evaluations each seed
needs before a sampled fitness exceeds -1e-6, and their median.
"""
import math
import sys

import numpy as np
from scipy.linalg import expm


def hyper(d, pop_scale=1.5, lr_scale=0.5):
    lam = int(math.floor(pop_scale * (4 + math.floor(3 * math.log(d))) + 0.5))
    eta_b = lr_scale * (9 + 3 * math.log(d)) / (5 * d * math.sqrt(d))
    raw = np.array([max(0.0, math.log(lam / 2 + 1) - math.log(k)) for k in range(1, lam + 1)])
    u = raw / raw.sum() - 1.0 / lam
    return lam, 1.0, eta_b, u


def run(seed, d=10, target=-1e-6, max_evals=10**6):
    rng = np.random.default_rng(seed)
    lam, eta_mu, eta_b, u = hyper(d)
    mu = np.ones(d)
    b = np.eye(d)
    evals = 0
    while evals < max_evals:
        s = rng.standard_normal((lam, d))
        z = mu + s @ b.T
        f = -np.sum(z * z, axis=1)
        evals += lam
        if f.max() > target:
            return evals
        order = np.argsort(-f, kind="stable")
        s_sorted = s[order]
        g_delta = u @ s_sorted
        g_m = sum(uk * (np.outer(sk, sk) - np.eye(d)) for uk, sk in zip(u, s_sorted))
        mu = mu + eta_mu * b @ g_delta
        b = b @ expm(0.5 * eta_b * g_m)
    return max_evals


if __name__ == "__main__":
    seeds = range(int(sys.argv[1]) if len(sys.argv) > 1 else 10)
    budgets = [run(s) for s in seeds]
    print("per-seed evaluations:", budgets)
    print("median:", float(np.median(budgets)))
    lam, _, eta_b, _ = hyper(100)
    print("p=100 lambda", lam, "eta_A %.17g" % eta_b)
