"""Independent scalar-loop reference implementations used as test oracles."""

import math


def naive_rmse(Y, Yhat):
    n, p = len(Y), len(Y[0])
    acc = 0.0
    for i in range(n):
        for j in range(p):
            acc += (Y[i][j] - Yhat[i][j]) ** 2
    return math.sqrt(acc / (n * p))


def naive_col_means(Y):
    n, p = len(Y), len(Y[0])
    means = []
    for j in range(p):
        s = 0.0
        for i in range(n):
            s += Y[i][j]
        means.append(s / n)
    return means


def naive_r2(Y, Yhat):
    n, p = len(Y), len(Y[0])
    means = naive_col_means(Y)
    res = tot = 0.0
    for j in range(p):
        for i in range(n):
            res += (Y[i][j] - Yhat[i][j]) ** 2
            tot += (Y[i][j] - means[j]) ** 2
    return 1.0 - (res / p) / (tot / p)


def naive_nmae(Y, Yhat):
    n, p = len(Y), len(Y[0])
    means = naive_col_means(Y)
    total = 0.0
    for j in range(p):
        err = dev = 0.0
        for i in range(n):
            err = max(err, abs(Y[i][j] - Yhat[i][j]))
            dev = max(dev, abs(Y[i][j] - means[j]))
        total += err / dev
    return total / p


def naive_mean_std(rows):
    """Per-column mean and population std of a list of equal-length rows."""
    m, p = len(rows), len(rows[0])
    means, stds = [], []
    for j in range(p):
        mu = sum(r[j] for r in rows) / m
        var = sum((r[j] - mu) ** 2 for r in rows) / m
        means.append(mu)
        stds.append(math.sqrt(var))
    return means, stds


def fourier_dirichlet_neumann(y, t, c0, diffusivity=1.0, terms=400):
    """1-D diffusion on [0, 1]: zero flux at y=0, c=c0 at y=1, c=0 at t=0.

    c(y, t) = c0 * (1 - sum_m 2 (-1)^m / lam_m cos(lam_m y) exp(-D lam_m^2 t)),
    lam_m = (2m + 1) pi / 2.
    """
    out = []
    for yy in y:
        s = 0.0
        for m in range(terms):
            lam = (2 * m + 1) * math.pi / 2
            s += 2 * (-1) ** m / lam * math.cos(lam * yy) * math.exp(-diffusivity * lam * lam * t)
        out.append(c0 * (1.0 - s))
    return out
