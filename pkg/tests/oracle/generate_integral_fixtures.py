"""Regenerate tests/fixtures/integral_oracle.json by adaptive quadrature.

Independent of the package's closed-form integrals: overlaps and kinetic
integrals are separable 1-D quadratures over each primitive pair (no
Gaussian product theorem).  Nuclear-attraction and repulsion integrals use
1/r = (2/sqrt(pi)) int_0^inf exp(-t^2 r^2) dt; the Gaussian integrals at
fixed t are done in closed form and the t integral adaptively, so the Boys
function and its small-argument branch are never used.  Only the raw
STO-3G table is shared.

    python tests/oracle/generate_integral_fixtures.py   # takes a few minutes
"""

from __future__ import annotations

import json
import math
from itertools import product
from pathlib import Path

import numpy as np
from scipy.integrate import quad

ROOT = Path(__file__).resolve().parents[2]
TABLE = ROOT / "src" / "h3ci" / "data" / "sto3g_h.txt"
OUT = ROOT / "tests" / "fixtures" / "integral_oracle.json"
OPTS = dict(epsabs=1e-13, epsrel=1e-12, limit=200)
T_BREAKS = (0.0, 0.5, 2.0, 8.0, 32.0, np.inf)


def t_integral(f):
    return sum(quad(f, lo, hi, **OPTS)[0] for lo, hi in zip(T_BREAKS[:-1], T_BREAKS[1:]))


def load_table():
    rows = [line.split() for line in TABLE.read_text().splitlines() if line.strip() and not line.startswith("#")]
    return np.array([float(r[0]) for r in rows]), np.array([float(r[1]) for r in rows])


def overlap_1d(a, A, b, B, weight=None):
    f = lambda x: math.exp(-a * (x - A) ** 2 - b * (x - B) ** 2) * (1.0 if weight is None else weight(x))
    mid = (a * A + b * B) / (a + b)
    width = 12.0 / math.sqrt(a + b)
    return quad(f, mid - width, mid + width, **OPTS)[0]


def primitive_overlap(a, A, b, B):
    return math.prod(overlap_1d(a, A[d], b, B[d]) for d in range(3))


def primitive_kinetic(a, A, b, B):
    plain = [overlap_1d(a, A[d], b, B[d]) for d in range(3)]
    total = 0.0
    for d in range(3):
        second = overlap_1d(a, A[d], b, B[d], lambda x, d=d: 4 * b * b * (x - B[d]) ** 2 - 2 * b)
        total += second * math.prod(plain[e] for e in range(3) if e != d)
    return -0.5 * total


def primitive_nuclear(a, A, b, B, C):
    p = a + b
    P = (a * A + b * B) / p
    K = math.exp(-a * b / p * np.sum((A - B) ** 2))
    PC2 = float(np.sum((P - C) ** 2))

    def integrand(t):
        den = p + t * t
        return (math.pi / den) ** 1.5 * math.exp(-p * t * t * PC2 / den)

    return -K * 2.0 / math.sqrt(math.pi) * t_integral(integrand)


def primitive_eri(a, A, b, B, c, Cc, d, D):
    p, q = a + b, c + d
    P = (a * A + b * B) / p
    Q = (c * Cc + d * D) / q
    K = math.exp(-a * b / p * np.sum((A - B) ** 2) - c * d / q * np.sum((Cc - D) ** 2))
    PQ2 = float(np.sum((P - Q) ** 2))

    def integrand(t):
        den = p * q + t * t * (p + q)
        return (math.pi**2 / den) ** 1.5 * math.exp(-p * q * t * t * PQ2 / den)

    return K * 2.0 / math.sqrt(math.pi) * t_integral(integrand)


def build(centers):
    alphas, coeffs = load_table()
    prim_norm = (2 * alphas / math.pi) ** 0.75
    w = coeffs * prim_norm
    n = len(centers)
    # contracted normalization from the numerical self-overlap
    self_ov = sum(w[i] * w[j] * primitive_overlap(alphas[i], centers[0], alphas[j], centers[0])
                  for i in range(3) for j in range(3))
    w = w / math.sqrt(self_ov)
    prims = range(3)

    def contract(fn, *centers_):
        k = len(centers_)
        return sum(
            math.prod(w[i] for i in idx) * fn(*[v for pair in zip([alphas[i] for i in idx], centers_) for v in pair])
            for idx in product(prims, repeat=k)
        )

    S = np.zeros((n, n))
    T = np.zeros((n, n))
    V = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            S[i, j] = S[j, i] = contract(primitive_overlap, centers[i], centers[j])
            T[i, j] = T[j, i] = contract(primitive_kinetic, centers[i], centers[j])
            V[i, j] = V[j, i] = sum(
                contract(lambda a, A, b, B, C=C: primitive_nuclear(a, A, b, B, C), centers[i], centers[j])
                for C in centers
            )
    eri = np.zeros((n,) * 4)
    for i, j, k, l in product(range(n), repeat=4):
        if not (i <= j and k <= l and (i, j) <= (k, l)):
            continue
        val = contract(primitive_eri, centers[i], centers[j], centers[k], centers[l])
        for a_, b_, c_, d_ in {(i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
                               (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i)}:
            eri[a_, b_, c_, d_] = val
    return S, T, V, eri


def main():
    rng = np.random.default_rng(20261016)
    cases = []
    while len(cases) < 3:
        R, rho, theta = rng.uniform(0.6, 2.0), rng.uniform(0.5, 3.0), rng.uniform(0.0, 2 * math.pi)
        centers = [np.array([R, 0.0, 0.0]), np.array([-R, 0.0, 0.0]),
                   np.array([rho * math.cos(theta), rho * math.sin(theta), 0.0])]
        if min(np.linalg.norm(centers[i] - centers[j]) for i, j in ((0, 1), (0, 2), (1, 2))) < 0.5:
            continue
        S, T, V, eri = build(centers)
        cases.append({"R": R, "rho": rho, "theta": theta,
                      "S": S.tolist(), "T": T.tolist(), "V": V.tolist(), "ERI": eri.tolist()})
        print(f"case {len(cases)}: R={R:.4f} rho={rho:.4f} theta={theta:.4f}")
    OUT.write_text(json.dumps({"tolerance": 1e-8, "cases": cases}, indent=1))


if __name__ == "__main__":
    main()
