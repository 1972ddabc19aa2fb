"""Independent reference values for the unit tests.

Uses mpmath (high precision) and scipy, never the C++ library. Run from the
repository root:  python3 tests/oracles/oracles.py
The printed values are frozen into tests/unit/*.cpp.
"""
import csv
import os

import mpmath as mp
import numpy as np
from scipy import optimize, stats, special

mp.mp.dps = 40
HERE = os.path.dirname(os.path.abspath(__file__))


def section(name):
    print(f"\n== {name}")


def show(label, value):
    print(f"{label} = {mp.nstr(mp.mpf(value), 17)}")


def special_functions():
    section("normal cdf")
    for x in [-8, -3, -1, 0, 0.5, 2, 5]:
        show(f"Phi({x})", mp.ncdf(x))
    section("normal quantile")
    for p in ["1e-10", "0.001", "0.025", "0.3", "0.5", "0.9", "0.999999"]:
        show(f"Phi^-1({p})", mp.sqrt(2) * mp.erfinv(2 * mp.mpf(p) - 1))
    section("digamma / trigamma")
    for x in ["0.1", "1", "1.5", "2.5", "10", "123.25"]:
        show(f"psi({x})", mp.digamma(mp.mpf(x)))
        show(f"psi1({x})", mp.psi(1, mp.mpf(x)))
    section("incomplete beta")
    for x, a, b in [("0.3", "2", "3"), ("0.5", "0.5", "0.5"), ("0.9", "1.5", "2.5"), ("0.01", "3", "0.7"),
                    ("0.75", "10", "12")]:
        show(f"I_{x}({a},{b})", mp.betainc(mp.mpf(a), mp.mpf(b), 0, mp.mpf(x), regularized=True))
    section("beta log moments at (1.5, 2.5) by quadrature")
    a, b = mp.mpf("1.5"), mp.mpf("2.5")
    dens = lambda y: y ** (a - 1) * (1 - y) ** (b - 1) / mp.beta(a, b)
    ml = mp.quad(lambda y: mp.log(y) * dens(y), [0, 0.5, 1])
    ml1 = mp.quad(lambda y: mp.log(1 - y) * dens(y), [0, 0.5, 1])
    vl = mp.quad(lambda y: (mp.log(y) - ml) ** 2 * dens(y), [0, 0.5, 1])
    cov = mp.quad(lambda y: (mp.log(y) - ml) * (mp.log(1 - y) - ml1) * dens(y), [0, 0.5, 1])
    show("E[log Y]", ml)
    show("E[log(1-Y)]", ml1)
    show("var(log Y)", vl)
    show("cov(log Y, log(1-Y))", cov)


def var_z_sigma():
    section("var_z_sigma by quadrature")
    for s in ["0.25", "0.5", "0.75", "1", "1.25", "2", "4"]:
        s = mp.mpf(s)
        m2 = mp.quad(lambda t: mp.ncdf(t / s) ** 2 * mp.npdf(t), [-mp.inf, 0, mp.inf])
        show(f"var_z_sigma({mp.nstr(s, 4)})", m2 - mp.mpf(1) / 4)


def load_dataset():
    rows = []
    with open(os.path.join(HERE, "..", "data", "regression60.csv")) as fh:
        for row in csv.DictReader(fh):
            rows.append(row)
    k = (len(rows[0]) - 1) // 2
    y = [mp.mpf(r["y"]) for r in rows]
    mu = [[mp.mpf(r[f"mu_{i + 1}"]) for r in rows] for i in range(k)]
    sd = [[mp.mpf(r[f"sd_{i + 1}"]) for r in rows] for i in range(k)]
    return y, mu, sd


def blp_derivatives():
    section("BLP sum log score and derivatives on regression60")
    y, mu, sd = load_dataset()
    k, J = len(mu), len(y)
    F = [[mp.ncdf((y[j] - mu[i][j]) / sd[i][j]) for j in range(J)] for i in range(k)]
    f = [[mp.npdf((y[j] - mu[i][j]) / sd[i][j]) / sd[i][j] for j in range(J)] for i in range(k)]

    def ell(w1, w2, a, b):
        w = [w1, w2, 1 - w1 - w2]
        total = 0
        for j in range(J):
            u = sum(w[i] * F[i][j] for i in range(k))
            s = sum(w[i] * f[i][j] for i in range(k))
            total += (a - 1) * mp.log(u) + (b - 1) * mp.log(1 - u) + mp.log(s)
        return total - J * mp.log(mp.beta(a, b))

    x0 = [mp.mpf("0.2"), mp.mpf("0.3"), mp.mpf("1.3"), mp.mpf("0.8")]
    show("loglik", ell(*x0))
    for i in range(4):
        order = [0] * 4
        order[i] = 1
        show(f"grad[{i}]", mp.diff(ell, x0, tuple(order)))
    for i in range(4):
        for j in range(i, 4):
            order = [0] * 4
            order[i] += 1
            order[j] += 1
            show(f"hess[{i}][{j}]", mp.diff(ell, x0, tuple(order)))


def fits():
    section("maximum log score fits on regression60 (scipy)")
    rows = list(csv.DictReader(open(os.path.join(HERE, "..", "data", "regression60.csv"))))
    y = np.array([float(r["y"]) for r in rows])
    mu = np.array([[float(r[f"mu_{i}"]) for r in rows] for i in (1, 2, 3)])
    sd = np.array([[float(r[f"sd_{i}"]) for r in rows] for i in (1, 2, 3)])
    F = stats.norm.cdf((y - mu) / sd)
    f = stats.norm.pdf((y - mu) / sd) / sd

    def weights(z):
        e = np.exp(np.concatenate([z, [0.0]]))
        return e / e.sum()

    def tlp(z):
        return -np.mean(np.log(weights(z) @ f))

    def blp(p):
        w = weights(p[:2])
        a, b = np.exp(p[2:])
        u = w @ F
        return -np.mean(stats.beta.logpdf(u, a, b) + np.log(w @ f))

    def slp(p):
        w = weights(p[:2])
        c = np.exp(p[2])
        return -np.mean(np.log(w @ (stats.norm.pdf((y - mu) / (c * sd)) / (c * sd))))

    def solve(fun, x0):
        best = None
        for start in x0:
            r = optimize.minimize(fun, start, method="Nelder-Mead",
                                  options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 200000, "maxfev": 200000})
            r = optimize.minimize(fun, r.x, method="BFGS", options={"gtol": 1e-12})
            if best is None or r.fun < best.fun:
                best = r
        return best

    r = solve(tlp, [np.zeros(2), np.array([1.0, -1.0])])
    print("TLP w =", " ".join(f"{v:.10f}" for v in weights(r.x)), f"mean log score = {-r.fun:.12f}")
    r = solve(slp, [np.array([0.0, 0.0, np.log(c)]) for c in (0.5, 1.0, 1.5)])
    print("SLP w =", " ".join(f"{v:.10f}" for v in weights(r.x[:2])), f"c = {np.exp(r.x[2]):.10f}",
          f"mean log score = {-r.fun:.12f}")
    r = solve(blp, [np.zeros(4), np.array([0.5, -0.5, 0.3, 0.3])])
    print("BLP w =", " ".join(f"{v:.10f}" for v in weights(r.x[:2])),
          f"alpha = {np.exp(r.x[2]):.10f} beta = {np.exp(r.x[3]):.10f}", f"mean log score = {-r.fun:.12f}")


def kolmogorov():
    section("Kolmogorov survival function (scipy)")
    for t in [0.3, 0.5, 0.8, 1.0, 1.1, 1.2, 1.36, 1.63, 2.0, 3.0]:
        print(f"Q_KS({t}) = {special.kolmogorov(t)!r}")


def pools():
    section("pools")
    show("coherent probit, sigma=1, p=Phi(1/sqrt2)", mp.ncdf(2))
    # Two medians at -+Phi^-1(0.75) under F0 = N(0,1): increments (1/4, 1/2, 1/4), cumulative weights (0, 1/2, 1).
    p = [mp.mpf(1) / 4, mp.mpf(1) / 2, mp.mpf(1) / 4]
    v = [0, mp.mpf(1) / 2, 1]
    m = sum(pi * vi for pi, vi in zip(p, v))
    show("slp limit variance k=2", sum(pi * (vi - m) ** 2 for pi, vi in zip(p, v)))


if __name__ == "__main__":
    special_functions()
    var_z_sigma()
    kolmogorov()
    pools()
    blp_derivatives()
    fits()
