"""Readouts on states and trajectories: spins, phonons and polaron correlations."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .evolution import Propagator
from .fockspin import CompositeBasis, boson_annihilator, embed, expectation, pauli
from .model import HolsteinParams, build_hamiltonian, electron_site, initial_state, jordan_wigner_lowering

__all__ = [
    "sigma_z_trace",
    "phonon_number",
    "correlation_operator",
    "polaron_correlation",
    "correlation_matrix",
    "CorrelationProfile",
    "polaron_width",
    "polaron_size_scan",
]


def _states(trajectory) -> np.ndarray:
    states = getattr(trajectory, "states", trajectory)
    return np.atleast_2d(np.asarray(states))


def _real(values, what: str) -> np.ndarray:
    values = np.atleast_1d(values)
    if np.max(np.abs(values.imag), initial=0.0) > 1e-9:
        raise ValueError(f"{what} has a non-negligible imaginary part")
    return values.real


def sigma_z_trace(trajectory, ion: int, basis: CompositeBasis) -> np.ndarray:
    """``<sigma_z>`` of spin ``ion`` (1-based) along a trajectory."""
    op = embed(pauli("z"), ("spin", ion - 1), basis)
    return _real(expectation(op, _states(trajectory)), "sigma_z trace")


def phonon_number(trajectory, mode: int, basis: CompositeBasis) -> np.ndarray:
    """Mean occupation of ``mode`` (1-based) along a trajectory."""
    b = boson_annihilator(basis.cutoff)
    op = embed(b.T @ b, ("mode", mode - 1), basis)
    return _real(expectation(op, _states(trajectory)), "phonon number")


def correlation_operator(i: int, j: int, basis: CompositeBasis, form: str = "spin",
                         mode_map: Sequence[int] | None = None) -> sp.csr_matrix:
    """Operator for the electron-displacement correlation chi(i, j).

    ``form="spin"`` gives ``(b_{m_j} + b_{m_j}^+)(sigma_z^i + 1)/2``;
    ``form="jordan-wigner"`` gives ``c_i^+ c_i (b_j + b_j^+)`` with Jordan-Wigner
    fermions.  ``mode_map`` sends site ``j`` to mode ``m_j`` (identity by default).
    """
    n_sites = len(mode_map) if mode_map is not None else basis.n_spins
    if not (1 <= i <= n_sites and 1 <= j <= n_sites):
        raise IndexError(f"site pair ({i}, {j}) outside 1..{n_sites}")
    m = mode_map[j - 1] if mode_map is not None else j
    b = boson_annihilator(basis.cutoff)
    x = embed(b + b.T, ("mode", m - 1), basis)
    if form == "spin":
        ident = sp.identity(basis.dim, dtype=complex, format="csr")
        n_i = 0.5 * (embed(pauli("z"), ("spin", i - 1), basis) + ident)
    elif form == "jordan-wigner":
        c = jordan_wigner_lowering(i, basis)
        n_i = c.conj().T @ c
    else:
        raise ValueError(f"unknown form {form!r}")
    return (n_i @ x).tocsr()


def polaron_correlation(psi: np.ndarray, i: int, j: int, basis: CompositeBasis,
                        picture: str = "spin-boson", mode_map: Sequence[int] | None = None,
                        form: str = "spin") -> float:
    """chi(i, j) on a Holstein state (``picture="spin-boson"``) or an ion state.

    In the ion picture site ``i`` is ion ``i`` and the phonon of site ``j`` sits
    in mode ``mode_map[j - 1]``.
    """
    if picture == "spin-boson":
        if mode_map is not None:
            raise ValueError("mode_map only applies to the ion picture")
        op = correlation_operator(i, j, basis, form)
    elif picture == "ion":
        if mode_map is None:
            mode_map = tuple(range(1, basis.n_spins))
        op = correlation_operator(i, j, basis, form, mode_map)
    else:
        raise ValueError(f"unknown picture {picture!r}")
    return float(_real(expectation(op, psi), "chi")[0])


def correlation_matrix(psi: np.ndarray, basis: CompositeBasis) -> np.ndarray:
    N = basis.n_spins
    return np.array([[polaron_correlation(psi, i, j, basis) for j in range(1, N + 1)]
                     for i in range(1, N + 1)])


def polaron_width(chi: np.ndarray, site: int) -> float:
    """Second moment of ``|chi(site, j)|`` about ``site``, normalised by its sum."""
    w = np.abs(chi[site - 1])
    total = w.sum()
    if total < 1e-15:
        return 0.0
    d = np.arange(1, len(w) + 1) - site
    return float(np.sum(w * d**2) / total)


@dataclass(frozen=True)
class CorrelationProfile:
    g: float
    t: float
    chi: np.ndarray
    site: int

    @property
    def width(self) -> float:
        return polaron_width(self.chi, self.site)

    @property
    def onsite_fraction(self) -> float:
        w = np.abs(self.chi[self.site - 1])
        return float(w[self.site - 1] / w.sum()) if w.sum() > 1e-15 else 1.0


def polaron_size_scan(g_values: Sequence[float], p: HolsteinParams, t: float) -> list[CorrelationProfile]:
    """Exact-evolution correlation profiles from the injected-electron state, one per g."""
    if len(g_values) == 0:
        raise ValueError("g_values must be non-empty")
    basis = p.basis()
    site = electron_site(p.n_sites)
    out = []
    for g in g_values:
        q = p.with_(g=float(g))
        psi = Propagator(build_hamiltonian(q, basis)).evolve(initial_state(q, basis), t)
        out.append(CorrelationProfile(float(g), float(t), correlation_matrix(psi, basis), site))
    return out
