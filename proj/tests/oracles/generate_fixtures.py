"""Regenerates the frozen oracle values under tests/fixtures.

Independent of the C++ code: series via mpmath at 60 digits, closed forms via
mpmath.erf, small constrained ERM instances via cvxpy (Clarabel) cross-checked
by random search over the feasible ellipsoid.
"""

import json
import pathlib

import cvxpy as cp
import mpmath as mp
import numpy as np

mp.mp.dps = 60
OUT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def beta_shifted_erf(j):
    if j == 0:
        return mp.mpf(1) / 2
    if j % 2 == 0:
        return mp.mpf(0)
    m = (j - 1) // 2
    return (-1) ** m * mp.pi**m / (mp.factorial(m) * (2 * m + 1))


def beta_smoothed_hinge(j):
    if j == 0:
        return 1 / (2 * mp.pi)
    if j == 1:
        return mp.mpf(1) / 2
    if j % 2 == 1:
        return mp.mpf(0)
    m = (j - 2) // 2
    return (-1) ** m * mp.pi**m / (mp.factorial(m) * (2 * m + 1) * (2 * m + 2))


def H(beta, L, lam, terms=4000):
    # Fixed length, no stopping rule: the terms peak near j ~ 4 pi lambda^2,
    # so `terms` must sit well beyond that.
    lam = mp.mpf(lam)
    s = mp.fsum(2 ** (j + 1) * beta(j) ** 2 * lam ** (2 * j) for j in range(terms))
    return L * mp.sqrt(s)


def capacity():
    out = {}
    for name, beta in (("shifted_erf", beta_shifted_erf), ("smoothed_hinge", beta_smoothed_hinge)):
        rows = []
        for lam in (0.5, 1, 2, 3, 4, 5):
            rows.append({"L": 1.0, "lambda": lam, "log10_H": float(mp.log10(H(beta, 1, lam)))})
        # Two-level composition at L = 1: F(2, 1) = H(H(1)).
        h1 = H(beta, 1, 1)
        # shifted_erf peaks near j = 12,600 here, past the default term cap.
        rows.append({"L": 1.0, "k": 2, "log10_F": float(mp.log10(H(beta, 1, h1, 30000)))})
        out[name] = rows
    return out


def closed_forms():
    xs = [-3, -1.5, -0.25, 0, 0.1, 0.7, 2, 4]
    erf_s = lambda x: (1 + mp.erf(mp.sqrt(mp.pi) * x)) / 2
    sh = lambda x: mp.quad(erf_s, [-mp.inf, x])
    return {
        "x": xs,
        "shifted_erf": [float(erf_s(x)) for x in xs],
        "smoothed_hinge": [float(sh(x)) for x in xs],
    }


def kernel_matrix(X, k):
    G = X @ X.T
    for _ in range(k):
        G = 1.0 / (2.0 - G)
    return G


def loss_expr(kind, f, y):
    if kind == "hinge":
        return cp.sum(cp.pos(1 - cp.multiply(y, f)))
    if kind == "logistic":
        return cp.sum(cp.logistic(-cp.multiply(y, f)))
    return cp.sum_squares(f - y)


def loss_np(kind, f, y):
    if kind == "hinge":
        return np.maximum(0, 1 - y * f).mean()
    if kind == "logistic":
        return np.logaddexp(0, -y * f).mean()
    return ((f - y) ** 2).mean()


def solver_instances():
    rng = np.random.default_rng(20240601)
    cases = []
    for n in (1, 2, 3):
        for kind in ("hinge", "logistic", "squared"):
            for rep in range(4):
                d = int(rng.integers(2, 5))
                X = rng.normal(size=(n, d))
                X /= np.linalg.norm(X, axis=1, keepdims=True)
                if rep == 3 and n >= 2:
                    X[1] = X[0]  # duplicated point; labels may conflict
                y = rng.choice([-1.0, 1.0], size=n)
                k = int(rng.integers(1, 3))
                B = float(rng.choice([0.5, 1.0, 3.0, 10.0]))
                G = kernel_matrix(X, k)
                w, V = np.linalg.eigh(G)
                R = V @ np.diag(np.sqrt(np.maximum(w, 0)))  # G = R R^T
                a = cp.Variable(n)
                f = G @ a
                prob = cp.Problem(cp.Minimize(loss_expr(kind, f, y) / n), [cp.norm(R.T @ a) <= B])
                prob.solve(solver=cp.CLARABEL)
                opt = float(prob.value)
                # Random search over the ellipsoid as a sanity bound.
                best = loss_np(kind, np.zeros(n), y)
                for _ in range(20000):
                    z = rng.normal(size=n)
                    z *= rng.uniform() ** (1 / n) / np.linalg.norm(z)
                    alpha = np.linalg.pinv(R.T) @ (B * z)
                    best = min(best, loss_np(kind, G @ alpha, y))
                assert opt <= best + 1e-6, (opt, best)
                cases.append({"X": X.tolist(), "y": [int(v) for v in y], "k": k, "B": B,
                              "loss": kind, "optimum": opt})
    return cases


def main():
    OUT.mkdir(exist_ok=True)
    (OUT / "capacity.json").write_text(json.dumps(capacity(), indent=1) + "\n")
    (OUT / "closed_forms.json").write_text(json.dumps(closed_forms(), indent=1) + "\n")
    (OUT / "solver_small.json").write_text(json.dumps(solver_instances(), indent=1) + "\n")


if __name__ == "__main__":
    main()
