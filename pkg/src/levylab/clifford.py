"""Gamma-matrix representations, eta matrices, Dirac adjoints and boosts.

Conventions: metric g = diag(+1, -1, -1, -1), natural units.  Boosts act
on contravariant coordinates as

    x'^0 = cosh(w) x^0 - sinh(w) (n . x)

and the paired spinor matrix S satisfies S^-1 gamma^mu S Lambda^nu_mu = gamma^nu.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .smalldense import det_rank, max_norm

CLIFFORD_TOL = 1e-12
COVARIANCE_TOL = 1e-10

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])
I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)
SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
Z2 = np.zeros((2, 2), dtype=complex)

REPRESENTATIONS = ("dirac", "weyl", "majorana")


def _blocks(a, b, c, d):
    return np.block([[a, b], [c, d]])


def _dirac_gammas():
    g0 = _blocks(I2, Z2, Z2, -I2)
    gi = [_blocks(Z2, s, -s, Z2) for s in SIGMA]
    return [g0, *gi]


def _weyl_gammas():
    g0 = _blocks(Z2, I2, I2, Z2)
    gi = [_blocks(Z2, s, -s, Z2) for s in SIGMA]
    return [g0, *gi]


def _majorana_gammas():
    s1, s2, s3 = SIGMA
    return [
        _blocks(Z2, s2, s2, Z2),
        _blocks(1j * s3, Z2, Z2, 1j * s3),
        _blocks(Z2, -s2, s2, Z2),
        _blocks(-1j * s1, Z2, Z2, -1j * s1),
    ]


_BUILDERS = {
    "dirac": _dirac_gammas,
    "weyl": _weyl_gammas,
    "majorana": _majorana_gammas,
}


@dataclass(frozen=True, eq=False)
class GammaRep:
    name: str
    gamma: tuple  # gamma^0..gamma^3, 4x4 complex

    @property
    def g0(self):
        return self.gamma[0]

    def slash(self, p):
        """gamma^i p_i summed over the three spatial components of ``p``."""
        p = np.asarray(p, dtype=float)
        return sum(p[i] * self.gamma[i + 1] for i in range(3))


@dataclass(frozen=True, eq=False)
class EtaSet:
    eta1: np.ndarray
    eta2: np.ndarray
    eta_mu: tuple


@dataclass(frozen=True, eq=False)
class SpinorTransform:
    rapidity: float
    axis: np.ndarray
    vector_rep: np.ndarray  # Lambda
    spinor_rep: np.ndarray  # S
    rep: GammaRep


@dataclass
class Check:
    name: str
    residual: float
    tol: float

    @property
    def passed(self):
        return bool(self.residual <= self.tol)

    def as_dict(self):
        return {"name": self.name, "residual": self.residual,
                "tol": self.tol, "passed": self.passed}


@dataclass
class ValidationReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def max_residual(self):
        return max((c.residual for c in self.checks), default=0.0)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dicts(self):
        return [c.as_dict() for c in self.checks]


def build_gamma_rep(name: str) -> GammaRep:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown representation {name!r}; "
                         f"choose from {', '.join(REPRESENTATIONS)}") from None
    gammas = tuple(g.copy() for g in builder())
    for g in gammas:
        g.flags.writeable = False
    return GammaRep(name, gammas)


def verify_clifford(rep: GammaRep, tol: float = CLIFFORD_TOL) -> ValidationReport:
    """Residuals of the 10 anticommutators plus hermiticity and (gamma^0)^2 = I."""
    g = rep.gamma
    checks = []
    for mu in range(4):
        for nu in range(mu, 4):
            anti = g[mu] @ g[nu] + g[nu] @ g[mu]
            res = max_norm(anti - 2 * METRIC[mu, nu] * I4)
            checks.append(Check(f"anticomm[{mu},{nu}]", res, tol))
    checks.append(Check("hermitian[0]", max_norm(g[0] - g[0].conj().T), tol))
    for i in range(1, 4):
        checks.append(Check(f"antihermitian[{i}]",
                            max_norm(g[i] + g[i].conj().T), tol))
    checks.append(Check("square[0]", max_norm(g[0] @ g[0] - I4), tol))
    return ValidationReport(checks)


def build_eta_set(rep: GammaRep) -> EtaSet:
    if not verify_clifford(rep).passed:
        raise ValueError(f"representation {rep.name!r} fails the Clifford checks")
    g0 = rep.g0
    eta1 = (g0 + I4) / 2
    eta2 = g0 - I4
    return EtaSet(eta1, eta2, (eta1, *rep.gamma[1:]))


def verify_eta(etas: EtaSet, tol: float = CLIFFORD_TOL) -> ValidationReport:
    e1, e2 = etas.eta1, etas.eta2
    det1, rank1 = det_rank(e1)
    det2, rank2 = det_rank(e2)
    checks = [
        Check("eta1*eta2", max_norm(e1 @ e2), tol),
        Check("eta2*eta1", max_norm(e2 @ e1), tol),
        Check("hermitian[eta1]", max_norm(e1 - e1.conj().T), tol),
        Check("hermitian[eta2]", max_norm(e2 - e2.conj().T), tol),
        Check("idempotent[eta1]", max_norm(e1 @ e1 - e1), tol),
        Check("det[eta1]", abs(det1), tol),
        Check("det[eta2]", abs(det2), tol),
        Check("rank[eta1]", float(abs(rank1 - 2)), 0.0),
        Check("rank[eta2]", float(abs(rank2 - 2)), 0.0),
    ]
    return ValidationReport(checks)


def dirac_adjoint(psi, rep: GammaRep) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return psi.conj() @ rep.g0


def boost_generator(axis) -> np.ndarray:
    """K with Lambda = exp(w K); K^0_i = K^i_0 = -n_i."""
    k = np.zeros((4, 4))
    k[0, 1:] = -np.asarray(axis, dtype=float)
    k[1:, 0] = -np.asarray(axis, dtype=float)
    return k


def sigma_munu(rep: GammaRep, mu: int, nu: int) -> np.ndarray:
    g = rep.gamma
    return 0.5j * (g[mu] @ g[nu] - g[nu] @ g[mu])


def _unit_axis(axis):
    axis = np.asarray(axis, dtype=float)
    if axis.shape != (3,) or not np.all(np.isfinite(axis)):
        raise ValueError(f"axis must be a finite 3-vector, got {axis!r}")
    if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
        raise ValueError(f"axis must be a unit vector, |axis| = {np.linalg.norm(axis)!r}")
    return axis


def build_lorentz_transform(omega: float, axis, rep: GammaRep) -> SpinorTransform:
    """Pure boost with rapidity ``omega`` along ``axis`` and its spinor partner.

    S = exp(-(i/4) w_{mu nu} sigma^{mu nu}) with w_{0i} = -w_{i0} = omega * n_i.
    """
    axis = _unit_axis(axis)
    omega = float(omega)
    lam = expm(omega * boost_generator(axis))
    gen = np.zeros((4, 4), dtype=complex)
    for i in range(3):
        w0i = omega * axis[i]
        # w_{0i} sigma^{0i} + w_{i0} sigma^{i0} = 2 w_{0i} sigma^{0i}
        gen += 2 * w0i * sigma_munu(rep, 0, i + 1)
    s = expm(-0.25j * gen)
    return SpinorTransform(omega, axis, lam, s, rep)


def verify_transform(t: SpinorTransform, tol: float = COVARIANCE_TOL) -> ValidationReport:
    lam, s = t.vector_rep, t.spinor_rep
    s_inv = np.linalg.inv(s)
    conj = [s_inv @ g @ s for g in t.rep.gamma]
    checks = [
        Check("metric", max_norm(lam.T @ METRIC @ lam - METRIC), tol),
        Check("det", abs(np.linalg.det(lam) - 1.0), tol),
    ]
    for nu in range(4):
        moved = sum(lam[nu, mu] * conj[mu] for mu in range(4))
        checks.append(Check(f"covariance[{nu}]",
                            max_norm(moved - t.rep.gamma[nu]), tol))
    return ValidationReport(checks)


def _basis16(gammas):
    """The 16 products gamma^{mu1} ... gamma^{muk}, mu1 < ... < muk."""
    out = []
    for mask in range(16):
        prod = I4.copy()
        for mu in range(4):
            if mask >> mu & 1:
                prod = prod @ gammas[mu]
        out.append(prod)
    return out


def intertwiner(rep: GammaRep) -> np.ndarray:
    """Unitary U with rep.gamma[mu] = U @ dirac.gamma[mu] @ U^-1.

    Averages over the 16-element basis (Schur's lemma); the result is fixed
    up to a global phase, which is chosen to make the largest entry real.
    """
    target = _basis16(rep.gamma)
    source = _basis16(build_gamma_rep("dirac").gamma)
    for k in range(16):
        seed = np.zeros((4, 4), dtype=complex)
        seed.flat[k] = 1.0
        u = sum(t @ seed @ np.linalg.inv(s) for t, s in zip(target, source))
        if abs(np.linalg.det(u)) > 1e-8:
            break
    u = u / abs(np.linalg.det(u)) ** 0.25
    big = u.flat[int(np.argmax(np.abs(u)))]
    return u * (abs(big) / big)
