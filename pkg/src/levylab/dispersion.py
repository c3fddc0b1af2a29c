"""Scalar dispersion relations.

E = +-sqrt(p^2 + m^2), its binomial expansion in (p/m)^2, and the rescaled
energy E' = +-sqrt(p^2 + m^2) - p^2/2m, which leaves +-E - E' = p^2/2m.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

PLUS = "plus"
MINUS = "minus"


def _sign(branch):
    if branch == PLUS:
        return 1.0
    if branch == MINUS:
        return -1.0
    raise ValueError(f"branch must be 'plus' or 'minus', got {branch!r}")


def _check(p, m):
    if not (math.isfinite(p) and math.isfinite(m)):
        raise ValueError("p and m must be finite")
    if p < 0:
        raise ValueError(f"p is a magnitude and must be >= 0, got {p!r}")
    if m <= 0:
        raise ValueError(f"mass must be positive, got {m!r}")


@dataclass(frozen=True)
class DispersionInput:
    p: float
    m: float
    branch: str = PLUS

    def __post_init__(self):
        _check(self.p, self.m)
        _sign(self.branch)


@dataclass(frozen=True)
class SeriesExpansion:
    order: int
    terms: tuple
    partial_sum: float
    truncation_bound: float
    convergent: bool

    @property
    def partial_sums(self):
        out, acc = [], 0.0
        for t in self.terms:
            acc += t
            out.append(acc)
        return out


def relativistic_energy(inp: DispersionInput) -> float:
    return _sign(inp.branch) * math.hypot(inp.p, inp.m)


def half_binomials(n):
    """C(1/2, k) for k = 0..n via C(1/2, k+1) = C(1/2, k) (1/2 - k)/(k + 1)."""
    c = [1.0]
    for k in range(n):
        c.append(c[-1] * (0.5 - k) / (k + 1))
    return c


def nr_series(p: float, m: float, order: int) -> SeriesExpansion:
    """Binomial expansion of sqrt(p^2 + m^2) = m sum_k C(1/2,k) (p^2/m^2)^k.

    Converges for p < m; outside that the terms are still returned but the
    expansion is flagged non-convergent.
    """
    _check(p, m)
    if isinstance(order, bool) or int(order) != order or order < 0:
        raise ValueError(f"order must be a non-negative integer, got {order!r}")
    order = int(order)
    x = (p / m) ** 2
    coeffs = half_binomials(order + 1)
    terms = [m * coeffs[k] * x ** k for k in range(order + 2)]
    kept = tuple(terms[:order + 1])
    return SeriesExpansion(order, kept, math.fsum(kept), abs(terms[order + 1]),
                           p < m)


def residual_eprime(inp: DispersionInput) -> float:
    """E' = +-sqrt(p^2 + m^2) - p^2/2m; never exceeds m."""
    return relativistic_energy(inp) - inp.p ** 2 / (2 * inp.m)


def schrodinger_identity_check(p: float, m: float, branch=PLUS) -> float:
    """|(+-E - E') - p^2/2m|."""
    inp = DispersionInput(p, m, branch)
    e = relativistic_energy(inp)
    return abs((e - residual_eprime(inp)) - p ** 2 / (2 * m))
