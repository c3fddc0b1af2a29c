"""First-order fermion Lagrangians as coefficient matrices.

A density  i psibar C^mu d_mu psi + psibar M psi  is stored as (C^0..C^3, M).
Under a boost (Lambda, S) with psi -> S psi the coefficients map to

    C'^nu = Lambda^nu_mu S^-1 C^mu S,     M' = S^-1 M S

and a density is form-invariant when C' = C and M' = M.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clifford import (I4, Check, GammaRep, SpinorTransform, ValidationReport,
                       build_eta_set)

KINDS = ("dirac", "levy", "residual")
DECOMPOSITION_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class LagrangianCoefficients:
    kind: str
    C: tuple
    M: np.ndarray
    rep: GammaRep
    m: float


@dataclass(frozen=True, eq=False)
class ViolationReport:
    rapidity: float
    axis: np.ndarray
    kinetic_norms: tuple
    mass_norm: float
    kinetic_shift: tuple  # C'^nu - C^nu
    mass_shift: np.ndarray  # M' - M

    @property
    def total(self) -> float:
        return float(sum(self.kinetic_norms) + self.mass_norm)

    def as_dict(self):
        return {
            "rapidity": self.rapidity,
            "axis": [float(a) for a in self.axis],
            "kinetic_norms": [float(x) for x in self.kinetic_norms],
            "mass_norm": float(self.mass_norm),
            "total": self.total,
        }


def build_lagrangian(kind: str, rep: GammaRep, m: float) -> LagrangianCoefficients:
    if kind not in KINDS:
        raise ValueError(f"unknown lagrangian kind {kind!r}; choose from {', '.join(KINDS)}")
    if not np.isfinite(m) or m <= 0:
        raise ValueError(f"mass must be positive, got {m!r}")
    etas = build_eta_set(rep)
    g = rep.gamma
    zero = np.zeros((4, 4), dtype=complex)
    if kind == "dirac":
        c, mass = tuple(g), -m * I4
    elif kind == "levy":
        c, mass = tuple(etas.eta_mu), m * etas.eta2
    else:
        c, mass = ((g[0] - I4) / 2, zero, zero, zero), -m * g[0]
    return LagrangianCoefficients(kind, c, mass, rep, float(m))


def decompose_residual(rep: GammaRep, m: float, tol=DECOMPOSITION_TOL) -> ValidationReport:
    """Coefficient-wise check of L_D - L_L = L'."""
    d = build_lagrangian("dirac", rep, m)
    lev = build_lagrangian("levy", rep, m)
    res = build_lagrangian("residual", rep, m)
    checks = [
        Check(f"kinetic[{mu}]",
              float(np.max(np.abs(d.C[mu] - lev.C[mu] - res.C[mu]))), tol)
        for mu in range(4)
    ]
    checks.append(Check("mass", float(np.max(np.abs(d.M - lev.M - res.M))), tol))
    return ValidationReport(checks)


def lorentz_violation(coeffs: LagrangianCoefficients, t: SpinorTransform) -> ViolationReport:
    """Frobenius-norm distance of the boosted coefficients from the originals."""
    if t.rep is not coeffs.rep and t.rep.name != coeffs.rep.name:
        raise ValueError(f"transform built for {t.rep.name!r}, "
                         f"coefficients for {coeffs.rep.name!r}")
    lam, s = t.vector_rep, t.spinor_rep
    s_inv = np.linalg.inv(s)
    conj = [s_inv @ c @ s for c in coeffs.C]
    kin_shift = tuple(sum(lam[nu, mu] * conj[mu] for mu in range(4)) - coeffs.C[nu]
                      for nu in range(4))
    mass_shift = s_inv @ coeffs.M @ s - coeffs.M
    return ViolationReport(
        t.rapidity, t.axis,
        tuple(float(np.linalg.norm(k)) for k in kin_shift),
        float(np.linalg.norm(mass_shift)),
        kin_shift, mass_shift)
