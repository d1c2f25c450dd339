"""Holstein chain in its Jordan-Wigner spin-boson form.

Sites, spins and phonon modes are numbered from 1 in this module, as in the
usual lattice notation.  Site ``i`` carries spin slot ``i - 1`` and phonon
mode slot ``i - 1`` of a :class:`~holstein_sim.fockspin.CompositeBasis`.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .fockspin import CompositeBasis, basis_state, boson_annihilator, embed, pauli

__all__ = [
    "HolsteinParams",
    "jordan_wigner_lowering",
    "number_operator",
    "build_hamiltonian",
    "decompose",
    "electron_site",
    "initial_state",
    "total_phonon_operator",
    "total_electron_operator",
]


@dataclass(frozen=True)
class HolsteinParams:
    """Physical parameters of an open Holstein chain.

    Energies are in units of the centre-of-mass trap frequency.

    Parameters
    ----------
    h : float
        Nearest-neighbour hopping amplitude.
    g : float
        Electron-phonon coupling.
    omega0 : float
        Dispersionless phonon energy.
    n_sites : int
        Number of lattice sites ``N``.
    cutoff : int
        Maximum phonon occupation ``M`` per site.
    """

    h: float
    g: float
    omega0: float
    n_sites: int
    cutoff: int

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError(f"n_sites must be >= 1, got {self.n_sites}")
        if self.cutoff < 1:
            raise ValueError(f"cutoff must be >= 1, got {self.cutoff}")
        if self.omega0 < 0:
            raise ValueError(f"omega0 must be >= 0, got {self.omega0}")
        for name in ("h", "g", "omega0"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def basis(self) -> CompositeBasis:
        return CompositeBasis(self.n_sites, self.n_sites, self.cutoff)

    def with_(self, **changes) -> "HolsteinParams":
        return replace(self, **changes)


def _check_basis(p: HolsteinParams, basis: CompositeBasis):
    if (basis.n_spins, basis.n_modes, basis.cutoff) != (p.n_sites, p.n_sites, p.cutoff):
        raise ValueError(
            f"basis ({basis.n_spins} spins, {basis.n_modes} modes, cutoff {basis.cutoff}) "
            f"does not match parameters (N={p.n_sites}, M={p.cutoff})"
        )


def _spin(which: str, site: int, basis: CompositeBasis) -> sp.csr_matrix:
    return embed(pauli(which), ("spin", site - 1), basis)


def _mode(local, site: int, basis: CompositeBasis) -> sp.csr_matrix:
    return embed(local, ("mode", site - 1), basis)


def jordan_wigner_lowering(site: int, basis: CompositeBasis) -> sp.csr_matrix:
    """Fermion annihilator on ``site``: sigma_z string on sites ``< site`` times sigma^-."""
    if not 1 <= site <= basis.n_spins:
        raise IndexError(f"site {site} outside 1..{basis.n_spins}")
    op = _spin("-", site, basis)
    for j in range(1, site):
        op = _spin("z", j, basis) @ op
    return op.tocsr()


def number_operator(site: int, basis: CompositeBasis) -> sp.csr_matrix:
    """Spin-picture occupation ``(sigma_z + 1) / 2`` of ``site``."""
    ident = sp.identity(basis.dim, dtype=complex, format="csr")
    return ((_spin("z", site, basis) + ident) * 0.5).tocsr()


def _hopping(p: HolsteinParams, basis: CompositeBasis, which: str) -> sp.csr_matrix:
    out = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for i in range(1, p.n_sites):
        out = out + _spin(which, i, basis) @ _spin(which, i + 1, basis)
    return (0.5 * p.h * out).tocsr()


def _coupling(p: HolsteinParams, basis: CompositeBasis) -> sp.csr_matrix:
    b = boson_annihilator(p.cutoff)
    x = b + b.T
    out = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for i in range(1, p.n_sites + 1):
        out = out + _mode(x, i, basis) @ number_operator(i, basis)
    return (p.g * out).tocsr()


def total_phonon_operator(basis: CompositeBasis) -> sp.csr_matrix:
    b = boson_annihilator(basis.cutoff)
    n = (b.T @ b).tocsr()
    out = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for k in range(basis.n_modes):
        out = out + embed(n, ("mode", k), basis)
    return out.tocsr()


def total_electron_operator(basis: CompositeBasis) -> sp.csr_matrix:
    out = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for i in range(1, basis.n_spins + 1):
        out = out + number_operator(i, basis)
    return out.tocsr()


def build_hamiltonian(p: HolsteinParams, basis: CompositeBasis | None = None) -> sp.csr_matrix:
    """Spin-boson Holstein Hamiltonian.

    ``H = h sum_i (s+_i s-_{i+1} + h.c.) + g sum_i (b_i + b_i^+)(sz_i + 1)/2
    + omega0 sum_i b_i^+ b_i`` with open boundaries.
    """
    basis = basis or p.basis()
    _check_basis(p, basis)
    hop = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for i in range(1, p.n_sites):
        pm = _spin("+", i, basis) @ _spin("-", i + 1, basis)
        hop = hop + pm + pm.conj().T
    H = p.h * hop + _coupling(p, basis) + p.omega0 * total_phonon_operator(basis)
    return H.tocsr()


def decompose(p: HolsteinParams, basis: CompositeBasis | None = None):
    """Three Trotter terms ``(H1, H2, H3)`` summing to :func:`build_hamiltonian`.

    H1 carries the XX hopping, H2 the YY hopping and H3 the electron-phonon
    coupling; each carries a third of the free phonon energy.
    """
    basis = basis or p.basis()
    _check_basis(p, basis)
    free = (p.omega0 / 3.0) * total_phonon_operator(basis)
    H1 = (_hopping(p, basis, "x") + free).tocsr()
    H2 = (_hopping(p, basis, "y") + free).tocsr()
    H3 = (_coupling(p, basis) + free).tocsr()
    return H1, H2, H3


def electron_site(n_sites: int) -> int:
    """Injection site: ``N/2`` for even ``N``, ``(N+1)/2`` for odd ``N``."""
    return n_sites // 2 if n_sites % 2 == 0 else (n_sites + 1) // 2


def initial_state(p: HolsteinParams, basis: CompositeBasis | None = None) -> np.ndarray:
    """One electron on the central site, all other spins down, phonon vacuum."""
    basis = basis or p.basis()
    _check_basis(p, basis)
    site = electron_site(p.n_sites)
    spins = [-1] * p.n_sites
    spins[site - 1] = 1
    return basis_state(basis, spins)
