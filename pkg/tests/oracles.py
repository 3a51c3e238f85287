"""Slow reference implementations written straight from the formulas.

Indices follow the 1-based notation of the formulas; nothing here shares code
with the package.
"""

import math


def cusum(X, gamma, sigma):
    n, p = len(X), len(X[0])
    out = [[0.0] * p for _ in range(n - 1)]
    for j in range(p):
        S_n = sum(X[i][j] for i in range(n))
        for k in range(1, n):
            S_k = sum(X[i][j] for i in range(k))
            w = ((k / n) * (1 - k / n)) ** (-gamma)
            out[k - 1][j] = w * (S_k - (k / n) * S_n) / math.sqrt(n) / sigma[j]
    return out


def diff_var(X):
    n, p = len(X), len(X[0])
    return [sum((X[i][j] - X[i - 1][j]) ** 2 for i in range(1, n)) / (2 * (n - 1)) for j in range(p)]


def leave_out_var(X, j, excluded):
    """Variance of column j over A = {2..n} minus ``excluded`` (1-based)."""
    n = len(X)
    A = [i for i in range(2, n + 1) if i not in excluded]
    return sum((X[i - 1][j] - X[i - 2][j]) ** 2 for i in A) / (2 * len(A))


def trace_r2(X):
    n, p = len(X), len(X[0])
    total = 0.0
    for i in range(1, n - 2):
        excl = {i, i + 1, i + 2, i + 3}
        q = 0.0
        for j in range(p):
            a = X[i - 1][j] - X[i][j]
            c = X[i + 1][j] - X[i + 2][j]
            q += a * c / leave_out_var(X, j, excl)
        total += q * q
    return total / (4 * (n - 3))


def eps_quad(X):
    n, p = len(X), len(X[0])
    total = 0.0
    for i in range(1, n - 1):
        excl = {i, i + 1, i + 2}
        q = 0.0
        for j in range(p):
            a = X[i - 1][j] - X[i][j]
            b = X[i][j] - X[i + 1][j]
            q += a * b / leave_out_var(X, j, excl)
        total += q * q
    return total / (n - 2) - 3 * trace_r2(X)


def sum_of_squares(field):
    return sum(v * v for row in field for v in row)


def max_abs(field, rows=None):
    rows = range(len(field)) if rows is None else rows
    return max(abs(field[r][j]) for r in rows for j in range(len(field[0])))
