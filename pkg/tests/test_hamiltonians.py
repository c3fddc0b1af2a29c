import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levylab import hamiltonians as ham
from levylab import smalldense as sd
from levylab.clifford import REPRESENTATIONS

P345 = (0.3, 0.0, 0.4)


def spec(rep="dirac", p=(0, 0, 0), m=1.0, eps=None):
    return ham.make_spec(rep, p, m, eps)


def eig(h):
    return sd.eigenvalues(h).values


def levy_roots_by_polynomial(p2, m, eps):
    """Independent route: roots of lam^2 - (m/eps) lam + p^2/(2 eps) = 0."""
    return np.sort_complex(np.roots([1.0, -m / eps, p2 / (2 * eps)]))


# --- H_D ---------------------------------------------------------------------

def test_dirac_rest_frame():
    h = ham.build_dirac_h(spec())
    assert np.array_equal(h, np.diag([1, 1, -1, -1]))


@pytest.mark.parametrize("rep", REPRESENTATIONS)
def test_dirac_spectrum_p345(rep):
    vals = eig(ham.build_dirac_h(spec(rep, P345)))
    e = np.sqrt(1.25)
    assert e == pytest.approx(1.118034, abs=1e-6)
    assert np.allclose(vals, [-e, -e, e, e], rtol=1e-10, atol=0)


@pytest.mark.parametrize("rep", REPRESENTATIONS)
def test_dirac_hermitian(rep):
    h = ham.build_dirac_h(spec(rep, (0.7, -1.2, 0.1), 0.8))
    assert np.max(np.abs(h - h.conj().T)) <= 1e-14


def test_nonpositive_mass():
    with pytest.raises(ValueError):
        spec(m=0.0)
    with pytest.raises(ValueError):
        spec(m=-1.0)


# --- H_L -----------------------------------------------------------------------

def test_levy_rest_frame():
    vals = eig(ham.build_levy_h(spec(p=(0, 0, 0), eps=0.01)))
    assert np.allclose(vals, [0, 0, 100, 100], rtol=1e-14, atol=1e-14)


def test_regularized_eta_dirac():
    assert np.allclose(ham.regularized_eta(spec(eps=1e-3)), np.diag([1, 1, 2e-3, 2e-3]),
                       rtol=1e-15, atol=0)


def test_levy_eps_zero_is_singular():
    with pytest.raises(sd.SingularMatrixError):
        ham.build_levy_h(spec(p=P345, eps=0.0))


def matched(a, b):
    a, b = list(a), list(b)
    worst = 0.0
    for x in a:
        k = int(np.argmin([abs(x - y) for y in b]))
        worst = max(worst, abs(x - b.pop(k)) / max(abs(x), 1e-300))
    return worst


@pytest.mark.parametrize("rep", REPRESENTATIONS)
@pytest.mark.parametrize("p, m, eps", [
    ((0, 0, 0.5), 1.0, 1e-4),
    (P345, 1.0, 1e-3),
    ((1.0, -0.5, 0.2), 2.0, 1e-2),
    ((0.1, 0.1, 0.1), 0.5, 1e-4),
])
def test_levy_numeric_vs_closed_form_vs_polynomial(rep, p, m, eps):
    s = spec(rep, p, m, eps)
    numeric = eig(ham.build_levy_h(s))
    closed = ham.closed_form_levy_eigs(s).values
    poly = levy_roots_by_polynomial(s.p2, m, eps)
    assert np.allclose(closed[[0, 2]], poly, rtol=1e-9)
    assert matched(numeric, closed) <= 1e-9


@settings(max_examples=80, deadline=None)
@given(p=st.tuples(*[st.floats(-1, 1)] * 3), m=st.sampled_from([0.5, 1.0, 2.0]),
       log_eps=st.floats(-8, -2), rep=st.sampled_from(REPRESENTATIONS))
def test_levy_closed_form_within_backward_error(p, m, log_eps, rep):
    """Over the whole eps range the roots are only resolved to the rounding
    floor: eta' stores its O(eps) eigenvalues to ~machine eps absolute, and
    ||H_L|| ~ m/eps."""
    eps = 10.0 ** log_eps
    s = spec(rep, p, m, eps)
    if s.complex_regime:
        return
    h = ham.build_levy_h(s)
    numeric = eig(h)
    for x in ham.closed_form_levy_eigs(s).values:
        tol = abs(x) * (1e-9 + 10 * sd.EPS / eps) + 1e3 * sd.EPS * np.linalg.norm(h)
        assert np.min(np.abs(numeric - x)) <= tol


def test_closed_form_example():
    s = spec(p=(0, 0, 0.5), eps=1e-4)
    cf = ham.closed_form_levy_eigs(s)
    low = cf.values[0].real
    assert low == pytest.approx(0.125002, abs=1e-6)
    # first-order correction p^4 eps / 4m^3
    assert low - 0.125 == pytest.approx(0.0625 * 1e-4 / 4, rel=1e-3)
    assert [e.branch for e in cf.entries] == ["finite"] * 2 + ["divergent"] * 2
    assert cf.entries[2].renormalized == pytest.approx(-low)


def test_closed_form_rest_frame():
    cf = ham.closed_form_levy_eigs(spec(eps=0.25, m=2.0))
    assert np.array_equal(cf.values, [0, 0, 8, 8])


def test_complex_regime_flagged_not_rejected():
    s = spec(p=(0, 0, 1.0), eps=1.0)  # eps > m^2 / 2p^2 = 0.5
    assert s.complex_regime
    cf = ham.closed_form_levy_eigs(s)
    assert cf.complex_regime
    numeric = eig(ham.build_levy_h(s))
    assert np.max(np.abs(numeric.imag)) > 0.1
    assert sd.eigenvalues(ham.build_levy_h(s)).converged
    assert matched(numeric, cf.values) <= 1e-9
    assert ham.hamiltonian_spectrum("levy", s).complex_regime


def test_levy_limits_sweep():
    for eps in np.logspace(-3, -7, 5):
        vals = eig(ham.build_levy_h(spec(p=(0, 0, 0.5), eps=eps)))
        # next order is p^4 eps / 4m^3 = eps / 64, plus the ~eps_mach/eps floor
        atol = eps / 50 + 1e3 * sd.EPS / eps
        assert np.allclose(vals[:2], 0.125, rtol=0, atol=atol)
        assert np.allclose(vals[2:], 1 / eps - 0.125, rtol=1e-9, atol=atol)


# --- H' ------------------------------------------------------------------------

@pytest.mark.parametrize("rep", REPRESENTATIONS)
@pytest.mark.parametrize("p", [(0, 0, 0), P345, (1.2, -0.7, 0.9)])
def test_residual_spectrum_independent_of_p(rep, p):
    vals = eig(ham.build_residual_h(spec(rep, p, 1.0, 1e-3)))
    assert np.allclose(vals, [-1001, -1001, 1, 1], rtol=1e-9, atol=0)


def test_residual_dirac_block_triangular():
    h = ham.build_residual_h(spec("dirac", (0.4, 0.2, -0.3), 1.5, 0.01))
    assert np.array_equal(h[:2, 2:], np.zeros((2, 2)))


def test_residual_rest_frame_value():
    h = ham.build_residual_h(spec(p=(0, 0, 0), m=2.0, eps=0.5))
    assert np.array_equal(h, np.diag([2, 2, -6, -6]))


@pytest.mark.parametrize("rep", REPRESENTATIONS)
def test_operator_identity_scaled(rep):
    """H_L + H' - H_D is rounding only: a few ulps of the largest H_L entry."""
    rng = np.random.default_rng(11)
    for eps in (0.5, 1e-2, 1e-4, 1e-6):
        s = spec(rep, rng.uniform(-1, 1, 3), 1.0, eps)
        hl = ham.build_levy_h(s)
        err = np.max(np.abs(hl + ham.build_residual_h(s) - ham.build_dirac_h(s)))
        assert err <= 4 * sd.EPS * np.max(np.abs(hl))


def test_hamiltonian_spectrum_tags():
    sp = ham.hamiltonian_spectrum("residual", spec(p=P345, eps=1e-3))
    assert [e.branch for e in sp.entries] == ["divergent"] * 2 + ["finite"] * 2
    assert sp.entries[0].renormalized == pytest.approx(-1.0, abs=1e-9)
    sp = ham.hamiltonian_spectrum("dirac", spec(p=P345))
    assert all(e.branch == "finite" and e.renormalized is None for e in sp.entries)
    with pytest.raises(ValueError):
        ham.hamiltonian_spectrum("pauli", spec())


# --- pencil and spinors --------------------------------------------------------

@pytest.mark.parametrize("rep", REPRESENTATIONS)
@pytest.mark.parametrize("p, m, expected", [
    ((0, 0, 1), 1.0, 0.5),
    ((0, 0, 0), 1.0, 0.0),
    ((3, 4, 0), 5.0, 2.5),
])
def test_pencil_spectrum(rep, p, m, expected):
    sp = ham.pencil_spectrum(rep, p, m)
    assert len(sp) == 2
    assert np.allclose(sp.values, expected, rtol=0, atol=1e-10)


def test_pencil_matches_flow_extrapolation():
    flow = ham.flow_analysis("dirac", (3, 4, 0), 5.0, np.logspace(-3, -8, 11))
    pen = ham.pencil_spectrum("dirac", (3, 4, 0), 5.0).values
    finite = [b for b, t in enumerate(flow.classification) if t == "finite"]
    assert np.allclose(flow.extrapolated[finite], pen, rtol=1e-7, atol=0)


def test_levy_spinor_examples():
    u = ham.levy_spinor("dirac", (0, 0, 1), 1.0, (1, 0))
    assert np.array_equal(u, [1, 0, 0.5, 0])
    u = ham.levy_spinor("dirac", (0, 0, 0), 2.0, (0.3, 1j))
    assert np.array_equal(u, [0.3, 1j, 0, 0])


def test_levy_spinor_zero_chi():
    with pytest.raises(ValueError):
        ham.levy_spinor("dirac", (0, 0, 1), 1.0, (0, 0))


finite = st.floats(-3, 3, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(p=st.tuples(finite, finite, finite), m=st.floats(0.1, 5),
       chi=st.tuples(finite, finite, finite, finite).filter(lambda c: any(abs(x) > 1e-3 for x in c)),
       rep=st.sampled_from(REPRESENTATIONS))
def test_levy_spinor_residual(p, m, chi, rep):
    chi2 = (complex(chi[0], chi[1]), complex(chi[2], chi[3]))
    u = ham.levy_spinor(rep, p, m, chi2)
    scale = np.linalg.norm(u)
    bound = 1e-12 * (m + np.linalg.norm(p)) * max(scale, 1.0)
    assert ham.levy_residual(rep, p, m, u) <= bound


# --- flow ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def flow05():
    return ham.flow_analysis("dirac", (0, 0, 0.5), 1.0)


def test_flow_default_grid(flow05):
    assert len(flow05.eps_grid) == 13
    assert flow05.eps_grid[0] == pytest.approx(1e-2)
    assert flow05.eps_grid[-1] == pytest.approx(1e-8)
    assert flow05.trajectories.shape == (4, 13)


def test_flow_classification_and_fits(flow05):
    assert sorted(flow05.classification) == ["divergent"] * 2 + ["finite"] * 2
    for fit, tag, ren in zip(flow05.fits, flow05.classification, flow05.renormalized):
        if tag == "finite":
            assert fit.c0.real == pytest.approx(0.125, abs=1e-6)
            assert abs(fit.c_minus1) < 1e-6
            assert ren is None
        else:
            assert fit.c_minus1.real == pytest.approx(1.0, abs=1e-6)
            assert fit.c0.real == pytest.approx(-0.125, abs=1e-5)
            assert ren.real == pytest.approx(-0.125, abs=1e-5)


def test_flow_renormalized_order(flow05):
    for b, tag in enumerate(flow05.classification):
        if tag != "divergent":
            continue
        err = flow05.renormalized_trajectory(b) + 0.125
        noise = 100 * sd.EPS * np.abs(flow05.trajectories[b])
        order = ham.convergence_order(flow05.eps_grid, err, noise)
        assert order == pytest.approx(1.0, abs=0.05)


def test_flow_rest_frame():
    flow = ham.flow_analysis("weyl", (0, 0, 0), 1.0, np.logspace(-2, -6, 9))
    assert np.allclose(flow.extrapolated, 0, atol=1e-8)


def test_flow_parallel_is_identical(flow05):
    par = ham.flow_analysis("dirac", (0, 0, 0.5), 1.0, max_workers=4)
    assert np.array_equal(par.trajectories, flow05.trajectories)


def test_flow_grid_order_irrelevant(flow05):
    shuffled = list(ham.DEFAULT_EPS_GRID)[::-1]
    again = ham.flow_analysis("dirac", (0, 0, 0.5), 1.0, shuffled)
    assert np.array_equal(again.trajectories, flow05.trajectories)


@pytest.mark.parametrize("grid", [
    [1e-2, 1e-3, 1e-4],
    [1e-2, 1e-3, 1e-4, -1e-5],
    [1e-2, 1e-2, 1e-3, 1e-4],
    [3.0, 1e-3, 1e-4, 1e-5],  # beyond m^2 / 2p^2 for |p| = 0.5
])
def test_flow_grid_errors(grid):
    with pytest.raises(ValueError):
        ham.flow_analysis("dirac", (0, 0, 0.5), 1.0, grid)


def test_tracking_ambiguity_detected():
    prev = np.array([0.0, 1.0, 5.0, 5.0], dtype=complex)
    new = np.array([0.5, 0.5, 5.0, 5.0], dtype=complex)
    with pytest.raises(ham.TrackingError) as info:
        ham._match(prev, new, 3, 1e-4)
    assert info.value.step == 3


def test_tracking_degenerate_pair_is_not_ambiguous():
    prev = np.array([0.1, 0.1, 100.0, 100.0], dtype=complex)
    new = np.array([0.1, 0.1, 316.0, 316.0], dtype=complex)
    perm = ham._match(prev, new, 1, 1e-3)
    assert sorted(perm[:2]) == [0, 1]


def test_convergence_order_needs_points():
    with pytest.raises(ValueError):
        ham.convergence_order([1e-2, 1e-3], [1e-3, 0.0])


@pytest.mark.parametrize("rep", REPRESENTATIONS)
def test_flow_rest_frame_noise_does_not_cross_branches(rep):
    # finite values are pure rounding noise here; tracking must not mix them
    # with the m/eps pair
    flow = ham.flow_analysis(rep, (0, 0, 0), 1.0, np.logspace(-3, -8, 13))
    assert sorted(flow.classification) == ["divergent"] * 2 + ["finite"] * 2
    assert np.allclose(flow.extrapolated, 0, atol=1e-6)


@pytest.mark.parametrize("rep", REPRESENTATIONS)
@pytest.mark.parametrize("eps", [0.3, 1e-3, 1e-6])
def test_projector_inverse_matches_lu(rep, eps):
    s = spec(rep, (0.2, 0.1, -0.4), 1.0, eps)
    eta = ham.regularized_eta(s)
    inv = ham.regularized_eta_inverse(s)
    assert np.max(np.abs(eta @ inv - np.eye(4))) <= 10 * sd.EPS * np.max(np.abs(inv))
    lu = sd.lu_invert(eta)
    # the LU route is only good to ~eps_mach/eps relative outside the dirac basis
    assert np.max(np.abs(lu - inv)) <= 1e-15 / eps ** 2 + 1e-13


def test_projector_inverse_exact_in_dirac_rep():
    inv = ham.regularized_eta_inverse(spec(eps=1e-3))
    assert np.array_equal(inv, np.diag([1, 1, 500, 500]))
