import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from holstein_sim.evolution import TrotterPlan, exact_evolve, trotter_evolve
from holstein_sim.fockspin import CompositeBasis, basis_state, expectation
from holstein_sim.ions import IonChain
from holstein_sim.model import (
    HolsteinParams,
    build_hamiltonian,
    decompose,
    initial_state,
    total_electron_operator,
)
from holstein_sim.observables import (
    CorrelationProfile,
    correlation_matrix,
    phonon_number,
    polaron_correlation,
    polaron_size_scan,
    polaron_width,
    sigma_z_trace,
)

from conftest import H_HOP, random_state
from test_model import dense_holstein

# exact-evolution oracle (dense expm, explicit kron operators), N=2, M=4,
# g=0.3h, omega0=0.5h, h=0.002, t=1000
CHI_11 = -0.029391960068
CHI_12 = -0.100235137347


def oracle_chi(h, g, w0, N, M, t, i, j):
    H = dense_holstein(h, g, w0, N, M)
    dim = H.shape[0]
    site = N // 2 if N % 2 == 0 else (N + 1) // 2
    psi0 = np.zeros(dim, dtype=complex)
    spins = [1 if k == site - 1 else 0 for k in range(N)]  # 0 = up index in [up, down]
    idx = 0
    for k in range(N):
        idx = idx * 2 + (0 if spins[k] else 1)
    psi0[idx * (M + 1) ** N] = 1
    psi = scipy.linalg.expm(-1j * H * t) @ psi0
    b = np.diag(np.sqrt(np.arange(1, M + 1)), 1)
    mats = [np.eye(2)] * N + [np.eye(M + 1)] * N
    mats[i - 1] = np.diag([1.0, 0.0])
    mats[N + j - 1] = b + b.T
    op = mats[0]
    for m in mats[1:]:
        op = np.kron(op, m)
    return float(np.real(psi.conj() @ op @ psi))


class TestSpinAndPhonon:
    def test_constant_without_hopping_or_coupling(self):
        p = HolsteinParams(h=0, g=0, omega0=0.3, n_sites=3, cutoff=1)
        states = exact_evolve(build_hamiltonian(p), initial_state(p), np.linspace(0, 30, 7))
        for i in (1, 2, 3):
            assert np.ptp(sigma_z_trace(states, i, p.basis())) == 0

    def test_initial_spins(self):
        p = HolsteinParams(h=1, g=0.1, omega0=0.3, n_sites=3, cutoff=1)
        psi = initial_state(p)
        vals = [sigma_z_trace(psi, i, p.basis())[0] for i in (1, 2, 3)]
        assert vals == [-1, 1, -1]

    def test_vacuum(self):
        p = HolsteinParams(h=1, g=0.1, omega0=0.3, n_sites=2, cutoff=3)
        assert phonon_number(initial_state(p), 1, p.basis())[0] == 0

    def test_no_phonons_without_coupling(self):
        p = HolsteinParams(h=H_HOP, g=0, omega0=H_HOP / 4, n_sites=2, cutoff=3)
        plan = TrotterPlan(list(decompose(p)), 1.0, 10)
        states = np.array([trotter_evolve(plan.at(t), initial_state(p)) for t in (500, 1000, 2000)])
        for m in (1, 2):
            np.testing.assert_allclose(phonon_number(states, m, p.basis()), 0, atol=1e-15)

    def test_series_are_real_and_bounded(self, rng):
        basis = CompositeBasis(2, 2, 2)
        states = np.array([random_state(rng, basis.dim) for _ in range(5)])
        sz = sigma_z_trace(states, 2, basis)
        assert np.all(np.abs(sz) <= 1 + 1e-12)
        assert np.all(phonon_number(states, 2, basis) >= -1e-12)

    def test_fig2_ion_spins_track_exact(self, fig2_run):
        k = int(np.argmin(np.abs(fig2_run.times - 333.0)))
        exact = fig2_run.exact_states()
        for ion in (1, 2, 3):
            ion_val = sigma_z_trace(fig2_run.ion_states[k], ion, fig2_run.basis)[0]
            ex_val = sigma_z_trace(exact[k], ion, fig2_run.basis)[0]
            assert abs(ion_val - ex_val) < 0.02


class TestElectronNumber:
    def test_exact_conserves(self, rng):
        p = HolsteinParams(h=1, g=0.4, omega0=0.3, n_sites=3, cutoff=2)
        Ne = total_electron_operator(p.basis())
        states = exact_evolve(build_hamiltonian(p), initial_state(p), np.linspace(0, 40, 9))
        np.testing.assert_allclose(expectation(Ne, states).real, 1, atol=1e-8)

    def test_two_site_trotter_conserves(self):
        p = HolsteinParams(h=H_HOP, g=0.3 * H_HOP, omega0=H_HOP / 4, n_sites=2, cutoff=3)
        Ne = total_electron_operator(p.basis())
        plan = TrotterPlan(list(decompose(p)), 1.0, 1)
        for t in (500.0, 2000.0):
            assert expectation(Ne, trotter_evolve(plan.at(t), initial_state(p))).real == pytest.approx(1, abs=1e-8)

    def test_three_site_trotter_leak_vanishes(self):
        # XX and YY bond terms create electron pairs separately; the leak is a splitting error
        p = HolsteinParams(h=H_HOP, g=0.3 * H_HOP, omega0=H_HOP / 4, n_sites=3, cutoff=2)
        Ne = total_electron_operator(p.basis())
        terms = list(decompose(p))
        leak = [abs(expectation(Ne, trotter_evolve(TrotterPlan(terms, 1000.0, r), initial_state(p))).real - 1)
                for r in (2, 4, 8, 16)]
        slope = np.polyfit(np.log([2, 4, 8, 16]), np.log(leak), 1)[0]
        assert leak[0] > 1e-3
        assert leak[-1] < 1e-5
        assert -4.5 < slope < -3.5


class TestCorrelation:
    def test_spin_down_site_is_zero(self, rng):
        basis = CompositeBasis(3, 3, 2)
        psi = random_state(rng, basis.dim)
        # keep only components with spin 2 down
        mask = np.array([basis.decode(k)[0][1] == -1 for k in range(basis.dim)])
        psi = np.where(mask, psi, 0)
        psi /= np.linalg.norm(psi)
        for j in (1, 2, 3):
            assert abs(polaron_correlation(psi, 2, j, basis)) < 1e-15

    def test_vacuum_is_zero(self):
        p = HolsteinParams(h=1, g=0.1, omega0=0.3, n_sites=3, cutoff=2)
        np.testing.assert_array_equal(correlation_matrix(initial_state(p), p.basis()), 0)

    def test_golden_values_against_oracle(self):
        p = HolsteinParams(h=H_HOP, g=0.3 * H_HOP, omega0=0.5 * H_HOP, n_sites=2, cutoff=4)
        psi = exact_evolve(build_hamiltonian(p), initial_state(p), 1000.0)
        chi11 = polaron_correlation(psi, 1, 1, p.basis())
        chi12 = polaron_correlation(psi, 1, 2, p.basis())
        assert chi11 == pytest.approx(oracle_chi(H_HOP, 0.3 * H_HOP, 0.5 * H_HOP, 2, 4, 1000.0, 1, 1), abs=1e-9)
        assert chi12 == pytest.approx(oracle_chi(H_HOP, 0.3 * H_HOP, 0.5 * H_HOP, 2, 4, 1000.0, 1, 2), abs=1e-9)
        assert chi11 == pytest.approx(CHI_11, abs=1e-9)
        assert chi12 == pytest.approx(CHI_12, abs=1e-9)

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_ion_picture_matches_site_picture(self, seed):
        rng = np.random.default_rng(seed)
        chain = IonChain.build(3, 0.0005, mode_map=(1, 3))
        sb, ib = CompositeBasis(2, 2, 2), chain.basis(2)
        psi = random_state(rng, sb.dim)
        ion_psi = chain.embed_state(psi, sb, ib)
        for i in (1, 2):
            for j in (1, 2):
                site = polaron_correlation(psi, i, j, sb)
                ion = polaron_correlation(ion_psi, i, j, ib, picture="ion", mode_map=chain.mode_map)
                assert ion == pytest.approx(site, abs=1e-12)

    def test_errors(self):
        basis = CompositeBasis(2, 2, 1)
        psi = basis_state(basis, (1, -1))
        with pytest.raises(IndexError):
            polaron_correlation(psi, 3, 1, basis)
        with pytest.raises(ValueError):
            polaron_correlation(psi, 1, 1, basis, picture="lab")
        with pytest.raises(ValueError):
            polaron_correlation(psi, 1, 1, basis, form="majorana")


@pytest.fixture(scope="module")
def scan():
    p = HolsteinParams(h=H_HOP, g=0.0, omega0=0.5 * H_HOP, n_sites=3, cutoff=3)
    return polaron_size_scan([x * H_HOP for x in (0.0, 0.1, 0.3, 0.5, 1.0)], p, 1000.0)


class TestPolaronScan:
    def test_zero_coupling(self, scan):
        assert scan[0].width == 0
        assert scan[0].g == 0

    def test_real_and_finite(self, scan):
        for prof in scan:
            assert np.all(np.isfinite(prof.chi))
            assert prof.width >= 0

    def test_peak_at_electron_site(self, scan):
        for prof in scan[1:3]:
            row = np.abs(prof.chi[prof.site - 1])
            assert prof.site == 2
            assert np.argmax(row) == prof.site - 1

    def test_localisation_grows_with_coupling(self, scan):
        frac = [prof.onsite_fraction for prof in scan[1:]]
        assert all(b > a for a, b in zip(frac, frac[1:]))

    def test_empty(self):
        with pytest.raises(ValueError):
            polaron_size_scan([], HolsteinParams(1, 0, 0, 2, 1), 1.0)

    def test_width_definition(self):
        chi = np.array([[0.0, 0.0, 0.0], [1.0, 2.0, 1.0], [0.0, 0.0, 0.0]])
        assert polaron_width(chi, 2) == pytest.approx(0.5)
        prof = CorrelationProfile(0.1, 1.0, chi, 2)
        assert prof.onsite_fraction == pytest.approx(0.5)
