"""Plain-Python loop implementations used as independent oracles."""

import math


def k0(u):
    return 1.5 * (1.0 - 4.0 * u * u) if abs(u) <= 0.5 else 0.0


def K0(z):
    out = 1.0
    for u in z:
        out *= k0(u)
    return out


def K1(v):
    return (315.0 / 256.0) * (1.0 - v * v) ** 4 if abs(v) < 1.0 else 0.0


def g_hat(x, b, pt):
    n, d = len(x), len(pt)
    s = 0.0
    for i in range(n):
        s += K0([(x[i][j] - pt[j]) / b for j in range(d)])
    return s / (n * b**d)


def nw(x, y, b, pt, skip=None):
    num = den = 0.0
    for i in range(len(x)):
        if i == skip:
            continue
        w = K0([(x[i][j] - pt[j]) / b for j in range(len(pt))])
        num += w * y[i]
        den += w
    return None if den == 0.0 else num / den


def kde(values, mask, b1, grid):
    m = sum(1 for flag in mask if flag)
    out = []
    for e in grid:
        s = 0.0
        for val, flag in zip(values, mask):
            if flag:
                s += K1((val - e) / b1)
        out.append(s / (b1 * m))
    return out


def naive_conditional(x, y, b0, h0, h1, pt, grid):
    m_x = nw(x, y, b0, pt)
    d = len(pt)
    den = sum(K0([(x[i][j] - pt[j]) / h0 for j in range(d)]) for i in range(len(x)))
    out = []
    for e in grid:
        num = 0.0
        for i in range(len(x)):
            num += K0([(x[i][j] - pt[j]) / h0 for j in range(d)]) * K1((y[i] - m_x - e) / h1)
        n = len(x)
        out.append((num / (n * h0**d * h1)) / (den / (n * h0**d)))
    return out


def rn_risk(b0, b1, n, d):
    a = b0**4
    v = b0**4 + 1.0 / (n * b0**d)
    t1 = (1.0 / math.sqrt(n * b1**5) + math.sqrt(b0**d / b1**3)) ** 2 * v * v
    t2 = (1.0 / b1 + math.sqrt(b0**d / b1**7)) ** 2 * v * v * v
    return a + t1 + t2


def trapezoid(xs, ys):
    return sum(0.5 * (ys[k] + ys[k + 1]) * (xs[k + 1] - xs[k]) for k in range(len(xs) - 1))
