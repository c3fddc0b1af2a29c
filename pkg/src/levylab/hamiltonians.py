"""Dirac, regularized Levy-Leblond and residual Hamiltonians in momentum space.

The Levy-Leblond kinetic matrix eta1 is singular, so its Hamiltonian needs
a regulator.  We use eta' = eta1 - eps * eta2, which in the Dirac basis is
diag(1, 1, 2 eps, 2 eps), and

    H_L = eta'^-1 (gamma^i p_i - m eta2)
    H_D = gamma^0 gamma^i p_i + m gamma^0
    H'  = H_D - H_L

H_L has eigenvalues (m / 2eps)(1 -+ sqrt(1 - 2 p^2 eps / m^2)), each twice:
a finite pair tending to p^2/2m and a divergent pair m/eps - p^2/2m.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import smalldense as sd
from .clifford import SIGMA, GammaRep, build_eta_set, build_gamma_rep, intertwiner

FINITE = "finite"
DIVERGENT = "divergent"

DEFAULT_EPS_GRID = tuple(np.logspace(-2, -8, 13))
TRACKING_TOL = 1e-12
# trajectories closer than this are one (degenerate) branch pair
MERGE_TOL = 1e-6


class TrackingError(RuntimeError):
    """Branch continuation could not decide between two candidates."""

    def __init__(self, message, step, eps):
        super().__init__(message)
        self.step = step
        self.eps = eps


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    rep: GammaRep
    p: np.ndarray
    m: float
    eps: float | None = None

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (3,) or not np.all(np.isfinite(p)):
            raise ValueError(f"p must be a finite 3-vector, got {self.p!r}")
        object.__setattr__(self, "p", p)
        if not np.isfinite(self.m) or self.m <= 0:
            raise ValueError(f"mass must be positive, got {self.m!r}")
        if self.eps is not None and (not np.isfinite(self.eps) or self.eps < 0):
            raise ValueError(f"eps must be non-negative, got {self.eps!r}")

    @property
    def p2(self) -> float:
        return float(self.p @ self.p)

    @property
    def complex_regime(self) -> bool:
        """True when eps >= m^2 / (2 p^2) and H_L has complex eigenvalues."""
        return self.eps is not None and 2 * self.p2 * self.eps >= self.m ** 2


def make_spec(rep="dirac", p=(0.0, 0.0, 0.0), m=1.0, eps=None) -> HamiltonianSpec:
    if isinstance(rep, str):
        rep = build_gamma_rep(rep)
    return HamiltonianSpec(rep, p, m, eps)


@dataclass(frozen=True)
class SpectrumEntry:
    value: complex
    branch: str
    renormalized: complex | None = None


@dataclass(frozen=True)
class Spectrum:
    entries: tuple
    complex_regime: bool = False

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.entries], dtype=complex)

    def branch(self, tag):
        return [e for e in self.entries if e.branch == tag]

    def __len__(self):
        return len(self.entries)


# ---------------------------------------------------------------------------
# operator builders


def build_dirac_h(spec: HamiltonianSpec) -> np.ndarray:
    g0 = spec.rep.g0
    return g0 @ spec.rep.slash(spec.p) + spec.m * g0


def regularized_eta(spec: HamiltonianSpec) -> np.ndarray:
    etas = build_eta_set(spec.rep)
    eps = 0.0 if spec.eps is None else spec.eps
    return etas.eta1 - eps * etas.eta2


def levy_operator(spec: HamiltonianSpec) -> np.ndarray:
    """gamma^i p_i - m eta2: the right-hand operator of the Levy-Leblond pencil."""
    etas = build_eta_set(spec.rep)
    return spec.rep.slash(spec.p) - spec.m * etas.eta2


def regularized_eta_inverse(spec: HamiltonianSpec) -> np.ndarray:
    """eta'^-1 = eta1 - eta2 / (4 eps).

    eta1 and -eta2/2 are complementary projectors, so eta' = P+ + 2 eps P-.
    Inverting through the projectors keeps the O(1/eps) block exact in every
    basis; an LU of eta' itself loses ~eps_mach/eps relative accuracy
    wherever eta' stores its O(eps) part as 1/2 +- eps entries.
    """
    if not spec.eps:
        return sd.lu_invert(regularized_eta(spec))  # raises SingularMatrixError
    etas = build_eta_set(spec.rep)
    return etas.eta1 - etas.eta2 / (4 * spec.eps)


def build_levy_h(spec: HamiltonianSpec) -> np.ndarray:
    """eta'^-1 (gamma^i p_i - m eta2); eps = 0 raises ``SingularMatrixError``."""
    return regularized_eta_inverse(spec) @ levy_operator(spec)


def build_residual_h(spec: HamiltonianSpec) -> np.ndarray:
    return build_dirac_h(spec) - build_levy_h(spec)


def _levy_roots(p2, m, eps):
    disc = 1 - 2 * p2 * eps / m ** 2
    root = np.sqrt(complex(disc)) if disc < 0 else np.sqrt(disc)
    # lower root in the cancellation-free form
    low = (p2 / m) / (1 + root)
    high = (m / (2 * eps)) * (1 + root)
    return complex(low), complex(high)


def closed_form_levy_eigs(spec: HamiltonianSpec) -> Spectrum:
    if not spec.eps:
        raise ValueError("closed form needs eps > 0")
    low, high = _levy_roots(spec.p2, spec.m, spec.eps)
    # high - m/eps equals -low exactly
    fin = SpectrumEntry(low, FINITE)
    div = SpectrumEntry(high, DIVERGENT, -low)
    return Spectrum((fin, fin, div, div), spec.complex_regime)


# ---------------------------------------------------------------------------
# spectra


def _pole(kind, spec):
    return {"levy": spec.m / spec.eps, "residual": -spec.m / spec.eps}.get(kind)


def tag_spectrum(values, kind, spec: HamiltonianSpec) -> Spectrum:
    """Attach branch tags: a value is divergent when it sits nearer the
    operator's 1/eps pole than the origin."""
    pole = _pole(kind, spec) if spec.eps else None
    entries = []
    for v in sd.sort_complex(values):
        if pole is not None and abs(v - pole) < abs(v):
            entries.append(SpectrumEntry(complex(v), DIVERGENT, complex(v - pole)))
        else:
            entries.append(SpectrumEntry(complex(v), FINITE))
    regime = kind == "levy" and spec.complex_regime
    return Spectrum(tuple(entries), regime)


_BUILD = {
    "dirac": build_dirac_h,
    "levy": build_levy_h,
    "residual": build_residual_h,
}


def hamiltonian_spectrum(kind: str, spec: HamiltonianSpec) -> Spectrum:
    try:
        builder = _BUILD[kind]
    except KeyError:
        raise ValueError(f"unknown hamiltonian {kind!r}") from None
    res = sd.eigenvalues(builder(spec))
    return tag_spectrum(res.values, kind, spec)


def pencil_spectrum(rep, p, m) -> Spectrum:
    """Finite spectrum of (gamma^i p_i - m eta2) u = E' eta1 u."""
    spec = make_spec(rep, p, m)
    etas = build_eta_set(spec.rep)
    res = sd.pencil_finite_eigs(levy_operator(spec), etas.eta1)
    return Spectrum(tuple(SpectrumEntry(complex(v), FINITE) for v in res.values))


def levy_spinor(rep, p, m, chi) -> np.ndarray:
    """Solution u of the Levy-Leblond equation at E' = p^2/2m.

    Dirac basis: upper half chi, lower half (sigma . p) chi / 2m; other
    representations are reached through the intertwiner.
    """
    spec = make_spec(rep, p, m)
    chi = np.asarray(chi, dtype=complex)
    if chi.shape != (2,) or not np.all(np.isfinite(chi)):
        raise ValueError(f"chi must be a finite 2-vector, got {chi!r}")
    if not np.any(chi):
        raise ValueError("chi must be non-zero")
    sp = sum(spec.p[i] * SIGMA[i] for i in range(3))
    u = np.concatenate([chi, sp @ chi / (2 * spec.m)])
    if spec.rep.name != "dirac":
        u = intertwiner(spec.rep) @ u
    return u


def levy_residual(rep, p, m, u) -> float:
    """||(eta1 E' - gamma^i p_i + eta2 m) u||_2 with E' = p^2/2m."""
    spec = make_spec(rep, p, m)
    etas = build_eta_set(spec.rep)
    e = spec.p2 / (2 * spec.m)
    op = etas.eta1 * e - spec.rep.slash(spec.p) + etas.eta2 * spec.m
    return float(np.linalg.norm(op @ np.asarray(u, dtype=complex)))


# ---------------------------------------------------------------------------
# eps -> 0 flow


@dataclass(frozen=True, eq=False)
class FlowResult:
    eps_grid: np.ndarray  # descending
    trajectories: np.ndarray  # (4, len(eps_grid))
    fits: tuple
    classification: tuple
    extrapolated: np.ndarray
    m: float
    renormalized: tuple = field(default=())

    def renormalized_trajectory(self, branch) -> np.ndarray | None:
        if self.classification[branch] != DIVERGENT:
            return None
        return self.trajectories[branch] - self.m / self.eps_grid


# below this fraction of the spectral radius, values are compared absolutely
REL_FLOOR = 1e-8


def _rel(a, b, floor=0.0):
    scale = max(abs(a), abs(b), floor)
    return abs(a - b) / scale if scale > 0 else 0.0


def _match(prev, new, step, eps):
    """Permutation of ``new`` continuing each trajectory in ``prev``.

    Ambiguous when two distinct trajectories land on candidates within
    TRACKING_TOL of each other, or when an equally cheap permutation would
    continue some trajectory with a materially different value.
    """
    n = len(prev)
    floor = REL_FLOOR * max(np.max(np.abs(prev)), np.max(np.abs(new)))
    scored = []
    for perm in itertools.permutations(range(n)):
        cost = sum(_rel(prev[i], new[perm[i]], floor) for i in range(n))
        scored.append((cost, perm))
    scored.sort(key=lambda t: t[0])
    best_cost, best = scored[0]
    scale = max(1.0, float(np.max(np.abs(new))))
    for cost, perm in scored[1:]:
        if cost - best_cost > TRACKING_TOL:
            break
        moved = max(abs(new[perm[i]] - new[best[i]]) for i in range(n))
        if moved > TRACKING_TOL * scale:
            raise TrackingError(
                f"ambiguous branch continuation at step {step} (eps={eps:.6g})",
                step, eps)
    old_scale = max(np.max(np.abs(prev)), np.finfo(float).tiny)
    new_scale = max(np.max(np.abs(new)), np.finfo(float).tiny)
    for i, j in itertools.combinations(range(n), 2):
        if (abs(prev[i] - prev[j]) > MERGE_TOL * old_scale
                and abs(new[best[i]] - new[best[j]]) <= TRACKING_TOL * new_scale):
            raise TrackingError(
                f"branches {i} and {j} collide at step {step} (eps={eps:.6g})",
                step, eps)
    return best


def _check_grid(eps_grid, p2, m):
    grid = np.asarray(sorted((float(e) for e in eps_grid), reverse=True))
    if len(grid) < 4:
        raise ValueError(f"eps grid needs at least 4 points, got {len(grid)}")
    if np.any(~np.isfinite(grid)) or np.any(grid <= 0):
        raise ValueError("eps grid values must be finite and positive")
    if len(set(grid)) != len(grid):
        raise ValueError("eps grid values must be distinct")
    if p2 > 0 and grid[0] >= m ** 2 / (2 * p2):
        raise ValueError(
            f"eps must stay below m^2/(2 p^2) = {m ** 2 / (2 * p2):.6g} "
            f"for real eigenvalues; got {grid[0]:.6g}")
    return grid


def flow_analysis(rep, p, m, eps_grid=DEFAULT_EPS_GRID, max_workers=None) -> FlowResult:
    """Track the four H_L eigenvalues across ``eps_grid`` and fit each one.

    Grid points may be evaluated in a thread pool; continuation runs in
    descending-eps order regardless, so the output does not depend on it.
    """
    base = make_spec(rep, p, m)
    grid = _check_grid(eps_grid, base.p2, base.m)

    def spectrum_at(eps):
        spec = HamiltonianSpec(base.rep, base.p, base.m, eps)
        return sd.eigenvalues(build_levy_h(spec)).values

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers) as pool:
            spectra = list(pool.map(spectrum_at, grid))
    else:
        spectra = [spectrum_at(e) for e in grid]

    traj = np.zeros((len(spectra[0]), len(grid)), dtype=complex)
    traj[:, 0] = spectra[0]
    for k in range(1, len(grid)):
        perm = _match(traj[:, k - 1], spectra[k], k, grid[k])
        traj[:, k] = spectra[k][list(perm)]

    fits = tuple(sd.fit_laurent(zip(grid, row)) for row in traj)
    tags = tuple(DIVERGENT if abs(f.c_minus1) > 0.5 * base.m else FINITE
                 for f in fits)
    eps_min = grid[-1]
    renorm = tuple(complex(row[-1] - base.m / eps_min) if t == DIVERGENT else None
                   for row, t in zip(traj, tags))
    extrap = np.array([f.c0 for f in fits])
    return FlowResult(grid, traj, fits, tags, extrap, base.m, renorm)


def convergence_order(eps, errors, noise=None) -> float:
    """Least-squares slope of log|error| against log eps.

    Points whose error is not above ``noise`` (per point) are dropped, since
    there the error is floating-point resolution, not truncation.
    """
    eps = np.asarray(eps, dtype=float)
    errors = np.abs(np.asarray(errors))
    keep = errors > 0
    if noise is not None:
        keep &= errors > np.asarray(noise)
    if keep.sum() < 2:
        raise ValueError("fewer than two points above the noise floor")
    slope, _ = np.polyfit(np.log(eps[keep]), np.log(errors[keep]), 1)
    return float(slope)
