"""Independent oracle for the frozen strategy/claims values.

Uses scipy quadrature for claim transforms and plain bisection for roots;
shares no code with the Rust implementation. Re-run with
`python3 generate.py > strategy_golden.json`.
"""
import json
import math

import numpy as np
from scipy.integrate import quad

RATE, CUTOFF = 1.0, 3.0
NORM = 1.0 - math.exp(-RATE * CUTOFF)


def density(y):
    return RATE * math.exp(-RATE * y) / NORM


def mgf(z):
    return quad(lambda y: math.exp(z * y) * density(y), 0.0, CUTOFF, epsabs=1e-14, epsrel=1e-13)[0]


def tilted(z):
    return quad(lambda y: y * math.exp(z * y) * density(y), 0.0, CUTOFF, epsabs=1e-14, epsrel=1e-13)[0]


P = dict(r=0.01, mu=0.2, sigma=3.0, alpha=0.2, eta=0.4, theta=0.6, T=10.0, x0=100.0)
KAPPA = 17.0 / (4.0 - 4.0 * math.exp(-3.0))
LAMBDAS = [2.0, 4.0, 5.0]
SUBSETS = [(1,), (2,), (1, 2)]


def gamma(t, a, subset):
    u = P["alpha"] * a * math.exp(P["r"] * (P["T"] - t))
    k = len(subset)
    return k * mgf(u) ** (k - 1) * tilted(u)


def h(t, a, lam, c):
    return lam * sum(ci * gamma(t, a, s) for ci, s in zip(c, SUBSETS))


def bisect(f, target, lo=-20.0, hi=20.0):
    assert f(lo) < target < f(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    return 0.5 * (lo + hi)


target = (1.0 + P["theta"]) * KAPPA
out = {}
out["kappa_reference"] = KAPPA
out["mean_trunc_exp"] = tilted(0.0)
out["kappa_corrected"] = sum(
    l * pi for l, pi in zip(LAMBDAS, [0.4, 0.4, 0.2])
) * sum(b / 20.0 * len(s) for b, s in zip([8, 7, 5], SUBSETS)) * tilted(0.0)
out["premium_b0"] = (P["eta"] - P["theta"]) * KAPPA
out["premium_b05"] = (P["eta"] - P["theta"]) * KAPPA + (1 + P["theta"]) * KAPPA * 0.5
out["gamma_full_t_T_a1"] = gamma(P["T"], 1.0, (1, 2))
out["h_ce_a_minus50"] = h(0.0, -50.0, 3.4, [0.4, 0.35, 0.25])

c_prior = [0.4, 0.35, 0.25]
out["root_ce_prior_t0"] = bisect(lambda a: h(0.0, a, 3.4, c_prior), target)
out["root_ce_prior_tT"] = bisect(lambda a: h(P["T"], a, 3.4, c_prior), target)

for label, t in (("t0", 0.0), ("tT", P["T"])):
    hmax = lambda a: LAMBDAS[-1] * max(gamma(t, a, s) for s in SUBSETS)
    hmin = lambda a: LAMBDAS[0] * min(gamma(t, a, s) for s in SUBSETS)
    out[f"a_max_{label}"] = bisect(hmax, target)
    out[f"a_min_{label}"] = bisect(hmin, target)

# deterministic no-event surplus, xi = 0, b = 0
r, T, x0 = P["r"], P["T"], P["x0"]
out["surplus_no_event"] = x0 * math.exp(r * T) + out["premium_b0"] * (math.exp(r * T) - 1.0) / r

# Monte Carlo: filter posterior of the true intensity at T with Lambda pinned to 4
rng = np.random.default_rng(20240607)
lam = np.array(LAMBDAS)
pi = np.array([0.4, 0.4, 0.2])
N = 10_000
vals = np.empty(N)
for n in range(N):
    count = rng.poisson(4.0 * T)
    # posterior given count on [0, T] is proportional to pi_j lam_j^n exp(-lam_j T)
    logw = np.log(pi) + count * np.log(lam) - lam * T
    w = np.exp(logw - logw.max())
    vals[n] = w[1] / w.sum()
out["mc_p_true_T_mean"] = float(vals.mean())
out["mc_p_true_T_se"] = float(vals.std(ddof=1) / math.sqrt(N))

print(json.dumps(out, indent=2))
