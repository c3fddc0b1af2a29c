"""Small dense complex linear algebra (n <= 16).

Everything here works on plain ``numpy`` arrays of dtype ``complex128``.
Factorizations and the eigenvalue iteration are written out by hand so
that they can be checked against independent routes (characteristic
polynomials, ``numpy.linalg``) in the test suite.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_DIM = 16
EPS = np.finfo(float).eps

RANK_RTOL = 1e-10
EIG_RESIDUAL_TOL = 1e-10
DEFLATION_TOL = 1e-14


class SingularMatrixError(ArithmeticError):
    """Raised when a factorization meets a (numerically) zero pivot."""

    def __init__(self, message, pivot):
        super().__init__(message)
        self.pivot = pivot


class ConvergenceError(RuntimeError):
    """QR iteration hit its sweep cap; ``partial`` holds deflated eigenvalues."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


class NotReducibleError(ArithmeticError):
    """The pencil cannot be reduced by block elimination (degenerate pencil)."""


@dataclass(frozen=True)
class EigenResult:
    values: np.ndarray
    residuals: np.ndarray
    converged: bool
    meta: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class LaurentFit:
    """Coefficients of ``c_minus1 / eps + c0 + c1 * eps``."""

    c_minus1: complex
    c0: complex
    c1: complex
    rms_residual: float

    def __call__(self, eps):
        return self.c_minus1 / eps + self.c0 + self.c1 * eps


def as_matrix(a, square=False) -> np.ndarray:
    m = np.array(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    if max(m.shape) > MAX_DIM:
        raise ValueError(f"dimension {m.shape} exceeds {MAX_DIM}")
    if square and m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def add(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"cannot add {a.shape} and {b.shape}")
    return a + b


def scale(a, s) -> np.ndarray:
    return complex(s) * as_matrix(a)


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


def max_norm(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


# ---------------------------------------------------------------------------
# LU factorizations


def _lu_partial(a):
    """Row-pivoted LU, packed in place.  Returns (lu, perm, pivots)."""
    lu = np.array(a, dtype=complex)
    n = lu.shape[0]
    perm = np.arange(n)
    pivots = np.zeros(n, dtype=complex)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        pivots[k] = lu[k, k]
        if lu[k, k] != 0:
            lu[k + 1:, k] /= lu[k, k]
            lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, perm, pivots


def _lu_solve(lu, perm, rhs):
    n = lu.shape[0]
    x = np.array(rhs, dtype=complex)[perm]
    for i in range(n):
        x[i] -= lu[i, :i] @ x[:i]
    for i in reversed(range(n)):
        x[i] = (x[i] - lu[i, i + 1:] @ x[i + 1:]) / lu[i, i]
    return x


def _check_pivots(pivots, scale_):
    """Singular if a pivot is zero or the pivot spread exceeds 1/(100 eps)."""
    mags = np.abs(pivots)
    smallest = float(mags.min())
    if smallest == 0.0 or smallest <= 100 * EPS * scale_:
        raise SingularMatrixError(
            f"matrix is numerically singular (pivot magnitude {smallest:.3e})",
            smallest)


def lu_invert(m) -> np.ndarray:
    """Inverse via partial-pivoting LU; raises ``SingularMatrixError``."""
    m = as_matrix(m, square=True)
    lu, perm, pivots = _lu_partial(m)
    _check_pivots(pivots, max(float(np.max(np.abs(pivots))), max_norm(m)))
    n = m.shape[0]
    return np.column_stack([_lu_solve(lu, perm, e) for e in np.eye(n)])


def lu_solve(m, rhs) -> np.ndarray:
    m = as_matrix(m, square=True)
    lu, perm, pivots = _lu_partial(m)
    _check_pivots(pivots, max(float(np.max(np.abs(pivots))), max_norm(m)))
    rhs = np.asarray(rhs, dtype=complex)
    if rhs.ndim == 1:
        return _lu_solve(lu, perm, rhs)
    return np.column_stack([_lu_solve(lu, perm, c) for c in rhs.T])


def _lu_complete(a, rtol=RANK_RTOL):
    """Complete-pivoting LU: P a Q = L U.

    Elimination stops once the remaining block is below ``rtol`` times the
    first (largest) pivot; that stopping index is the numerical rank.
    Returns (L, U, row_perm, col_perm, rank, pivots, sign).
    """
    u = np.array(a, dtype=complex)
    n = u.shape[0]
    low = np.eye(n, dtype=complex)
    rows, cols = np.arange(n), np.arange(n)
    pivots = []
    sign = 1
    rank = 0
    first = None
    for k in range(n):
        block = np.abs(u[k:, k:])
        i, j = np.unravel_index(int(np.argmax(block)), block.shape)
        i, j = i + k, j + k
        mag = float(block.max()) if block.size else 0.0
        if first is None:
            first = mag
        if i != k:
            u[[k, i]] = u[[i, k]]
            low[[k, i], :k] = low[[i, k], :k]
            rows[[k, i]] = rows[[i, k]]
            sign = -sign
        if j != k:
            u[:, [k, j]] = u[:, [j, k]]
            cols[[k, j]] = cols[[j, k]]
            sign = -sign
        pivots.append(u[k, k])
        if mag == 0.0 or mag <= rtol * first:
            continue
        rank += 1
        factors = u[k + 1:, k] / u[k, k]
        low[k + 1:, k] = factors
        u[k + 1:, k:] -= np.outer(factors, u[k, k:])
        u[k + 1:, k] = 0
    # rank counts leading pivots only: complete pivoting makes them monotone
    return low, u, rows, cols, rank, np.array(pivots), sign


def det_rank(m):
    """Determinant (pivot product with sign) and threshold rank."""
    m = as_matrix(m, square=True)
    _, _, _, _, rank, pivots, sign = _lu_complete(m)
    return complex(sign * np.prod(pivots)), int(rank)


# ---------------------------------------------------------------------------
# Eigenvalues


def _balance(a):
    """Parlett-Reinsch diagonal scaling by powers of two (exact in floating point)."""
    a = a.copy()
    n = a.shape[0]
    d = np.ones(n)
    converged = False
    while not converged:
        converged = True
        for i in range(n):
            off = np.arange(n) != i
            c = float(np.sum(np.abs(a[off, i])))
            r = float(np.sum(np.abs(a[i, off])))
            if c == 0.0 or r == 0.0:
                continue
            f = 1.0
            s = c + r
            while c < r / 2:
                c *= 2
                r /= 2
                f *= 2
            while c >= r * 2:
                c /= 2
                r *= 2
                f /= 2
            if (c + r) < 0.95 * s:
                converged = False
                d[i] *= f
                a[:, i] *= f
                a[i, :] /= f
    return a, d


def _phase(z):
    """z/|z| without overflow for subnormal z."""
    if z == 0:
        return 1.0
    z = complex(z)
    w = z / max(abs(z.real), abs(z.imag))
    return w / abs(w)


def hessenberg(a) -> np.ndarray:
    """Householder reduction to upper Hessenberg form (similarity)."""
    h = np.array(a, dtype=complex)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        phase = _phase(x[0])
        v = x
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        h[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, :])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
        h[k + 2:, k] = 0
    return h


def _givens(a, b):
    """Unitary (c, s) with [[c, s], [-conj(s), c]] @ [a, b] = [r, 0], c real."""
    if b == 0:
        return 1.0, 0j
    if a == 0:
        return 0.0, np.conj(_phase(b))
    na = abs(a)
    nrm = np.hypot(na, abs(b))
    c = na / nrm
    s = _phase(a) * np.conj(b) / nrm
    return c, s


def _wilkinson_shift(h, hi):
    a, b = h[hi - 1, hi - 1], h[hi - 1, hi]
    c, d = h[hi, hi - 1], h[hi, hi]
    half = (a - d) / 2
    root = np.sqrt(half * half + b * c)
    mean = (a + d) / 2
    mu1, mu2 = mean + root, mean - root
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def _qr_sweep(w, mu):
    """One explicit shifted QR step on the Hessenberg window ``w``."""
    n = w.shape[0]
    w = w - mu * np.eye(n)
    rots = []
    for k in range(n - 1):
        c, s = _givens(w[k, k], w[k + 1, k])
        g = np.array([[c, s], [-np.conj(s), c]])
        w[k:k + 2, k:] = g @ w[k:k + 2, k:]
        rots.append(g)
    for k, g in enumerate(rots):
        w[:k + 2, k:k + 2] = w[:k + 2, k:k + 2] @ g.conj().T
    return w + mu * np.eye(n)


def _schur_eigvals(h):
    """Shifted QR with deflation on a Hessenberg matrix."""
    h = h.copy()
    n = h.shape[0]
    values = np.zeros(n, dtype=complex)
    done = np.zeros(n, dtype=bool)
    hnorm = np.linalg.norm(h)
    cap = 30 * n
    sweeps = 0
    since_deflation = 0
    hi = n - 1
    while hi >= 0:
        if hi == 0:
            values[0] = h[0, 0]
            done[0] = True
            break
        lo = 0
        for k in range(hi, 0, -1):
            ref = abs(h[k - 1, k - 1]) + abs(h[k, k])
            if ref == 0.0:
                ref = hnorm
            if abs(h[k, k - 1]) <= DEFLATION_TOL * ref:
                h[k, k - 1] = 0
                lo = k
                break
        if lo == hi:
            values[hi] = h[hi, hi]
            done[hi] = True
            hi -= 1
            since_deflation = 0
            continue
        if sweeps >= cap:
            raise ConvergenceError(
                f"QR iteration did not converge in {cap} sweeps", values[done])
        if since_deflation and since_deflation % 10 == 0:
            # exceptional shift to break cycles
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1]) * (1 + 0.5j)
        else:
            mu = _wilkinson_shift(h, hi)
        h[lo:hi + 1, lo:hi + 1] = _qr_sweep(h[lo:hi + 1, lo:hi + 1], mu)
        sweeps += 1
        since_deflation += 1
    return values, sweeps


def _certify(m, lam, fnorm, iterations=3):
    """Inverse-iteration residual ||M v - lam v|| / ||M||_F for a unit v."""
    n = m.shape[0]
    if fnorm == 0.0:
        return 0.0
    # work on M / ||M||_F so tiny or huge matrices neither under- nor overflow
    m = m / fnorm
    lam = lam / fnorm
    shifted = m - (lam + 64 * EPS) * np.eye(n)
    lu, perm, _ = _lu_partial(shifted)
    for i in range(n):
        if lu[i, i] == 0:
            lu[i, i] = EPS
    v = np.ones(n, dtype=complex) + 0.1j * np.arange(n)
    v /= np.linalg.norm(v)
    best = np.inf
    for _ in range(iterations):
        v = _lu_solve(lu, perm, v)
        nv = np.linalg.norm(v)
        if not np.isfinite(nv) or nv == 0.0:
            break
        v /= nv
        best = min(best, float(np.linalg.norm(m @ v - lam * v)))
    return best


def sort_complex(values) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    order = np.lexsort((values.imag, values.real))
    return values[order]


def eigenvalues(m) -> EigenResult:
    """All eigenvalues of a square matrix via Hessenberg + shifted QR.

    The matrix is balanced first; each eigenvalue is then certified on the
    original matrix by inverse iteration.
    """
    m = as_matrix(m, square=True)
    balanced, _ = _balance(m)
    h = hessenberg(balanced)
    values, sweeps = _schur_eigvals(h)
    values = sort_complex(values)
    fnorm = float(np.linalg.norm(m))
    residuals = np.array([_certify(m, lam, fnorm) for lam in values])
    converged = bool(np.all(residuals <= EIG_RESIDUAL_TOL))
    return EigenResult(values, residuals, converged, {"sweeps": sweeps})


# ---------------------------------------------------------------------------
# Singular pencils


def pencil_finite_eigs(a, b) -> EigenResult:
    """Finite eigenvalues of ``a u = lam b u`` with possibly singular ``b``.

    ``b`` is brought to ``[[B11, 0], [0, 0]]`` by a complete-pivoting LU plus
    a column sweep; the trailing rows of the transformed ``a`` are then
    eliminated (Schur complement), leaving a dense ``rank(b)``-sized problem.
    """
    a = as_matrix(a, square=True)
    b = as_matrix(b, square=True)
    if a.shape != b.shape:
        raise ValueError(f"pencil shapes differ: {a.shape} vs {b.shape}")
    n = a.shape[0]
    low, u, rows, cols, r, _, _ = _lu_complete(b)
    if r == 0:
        return EigenResult(np.zeros(0, dtype=complex), np.zeros(0), True,
                           {"rank": 0})

    # X b Y = diag-block(U11, 0) with X = L^-1 P and Y = Q T
    u11, u12 = u[:r, :r], u[:r, r:]
    t = np.eye(n, dtype=complex)
    if r < n:
        t[:r, r:] = -lu_solve(u11, u12)
    p = np.eye(n)[rows]
    q = np.eye(n)[:, cols]
    x = lu_solve(low, p)
    y = q @ t
    at = x @ a @ y

    reduced = at[:r, :r]
    if r < n:
        a22 = at[r:, r:]
        try:
            coupling = lu_solve(a22, at[r:, :r])
        except SingularMatrixError as exc:
            raise NotReducibleError(
                f"trailing block of a is singular in the reduction basis "
                f"(pivot {exc.pivot:.3e})") from exc
        reduced = reduced - at[:r, r:] @ coupling
    core = lu_solve(u11, reduced)
    res = eigenvalues(core)
    return EigenResult(res.values, res.residuals, res.converged,
                       {"rank": r, **res.meta})


# ---------------------------------------------------------------------------
# Laurent fitting


def fit_laurent(samples) -> LaurentFit:
    """Least-squares fit of ``lam(eps) = c_minus1/eps + c0 + c1*eps``.

    Normal equations on the column-scaled design ``[1/eps, 1, eps]``; the
    scaling only conditions the 3x3 solve, it does not change the fit.
    """
    samples = list(samples)
    if len(samples) < 4:
        raise ValueError(f"need at least 4 samples, got {len(samples)}")
    eps = np.array([float(s[0]) for s in samples])
    lam = np.array([complex(s[1]) for s in samples])
    if np.any(~np.isfinite(eps)) or np.any(eps <= 0):
        raise ValueError("eps values must be finite and positive")
    design = np.column_stack([1 / eps, np.ones_like(eps), eps]).astype(complex)
    colnorm = np.linalg.norm(design, axis=0)
    scaled = design / colnorm
    gram = scaled.conj().T @ scaled
    _, rank = det_rank(gram)
    if rank < 3:
        raise ValueError("design matrix is rank deficient (eps values not distinct)")
    try:
        z = lu_solve(gram, scaled.conj().T @ lam)
        # one step of iterative refinement
        z = z + lu_solve(gram, scaled.conj().T @ (lam - scaled @ z))
    except SingularMatrixError as exc:
        raise ValueError("design matrix is rank deficient") from exc
    coef = z / colnorm
    resid = lam - design @ coef
    rms = float(np.sqrt(np.mean(np.abs(resid) ** 2)))
    return LaurentFit(complex(coef[0]), complex(coef[1]), complex(coef[2]), rms)
