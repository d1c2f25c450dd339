"""Linear Paul-trap ion chain: axial modes, laser drives and effective couplings.

Frequencies are in units of the centre-of-mass (COM) mode frequency nu_1 and
times in units of 1/nu_1.  Ions and modes are numbered from 1.  All drive
Hamiltonians live in the interaction picture with respect to the qubit
splitting and the *frame* frequencies of the modes: the shifted frequency
``Delta_m = nu_m - omega0/3`` for modes that carry a Holstein phonon and the
bare ``nu_m`` for the remaining (spectator) modes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .fockspin import CompositeBasis, boson_annihilator, embed, pauli

__all__ = [
    "normal_modes",
    "lamb_dicke",
    "IonChain",
    "DriveSpec",
    "SidebandTone",
    "effective_ising_coupling",
    "calibrate_rabi",
    "DriveHamiltonian",
    "drive_hamiltonian",
    "sideband_hamiltonian",
    "ep_drive_hamiltonian",
    "ep_tones",
    "global_rotation",
    "MagnusNNN",
    "magnus_nnn",
    "ResonanceError",
]


class ResonanceError(ValueError):
    """A detuning coincides with a mode frequency."""


def _forces(u: np.ndarray) -> np.ndarray:
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    return u - np.sum(np.sign(d) / d**2, axis=1)


def _hessian(u: np.ndarray) -> np.ndarray:
    d = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(d, np.inf)
    A = -2.0 / d**3
    np.fill_diagonal(A, 1.0 + 2.0 * np.sum(1.0 / d**3, axis=1))
    return A


def equilibrium_positions(n_ions: int, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Dimensionless equilibrium positions of ``n_ions`` in a harmonic well.

    Solves ``u_i - sum_{j<i} 1/(u_i-u_j)^2 + sum_{j>i} 1/(u_i-u_j)^2 = 0`` by
    damped Newton iteration.
    """
    if n_ions == 1:
        return np.zeros(1)
    # rough spacing law for the initial guess
    u = np.linspace(-1.0, 1.0, n_ions) * (n_ions - 1) * 1.0 / n_ions**0.559
    res = np.linalg.norm(_forces(u))
    for _ in range(max_iter):
        if res < tol:
            return u
        step = np.linalg.solve(_hessian(u), _forces(u))
        lam = 1.0
        while lam > 1e-8:
            trial = u - lam * step
            if np.all(np.diff(trial) > 0):
                new_res = np.linalg.norm(_forces(trial))
                if new_res < res:
                    u, res = trial, new_res
                    break
            lam *= 0.5
        else:
            break
    if res < tol:
        return u
    raise RuntimeError(f"equilibrium search did not converge (residual {res:.2e})")


def normal_modes(n_ions: int) -> tuple[np.ndarray, np.ndarray]:
    """Axial normal modes of a Coulomb chain.

    Returns
    -------
    nu : ndarray, shape (n,)
        Mode frequencies in ascending order, ``nu[0] == 1`` (COM).
    beta : ndarray, shape (n, n)
        Orthonormal mode vectors; ``beta[i, m]`` is ion ``i + 1`` in mode ``m + 1``.
        Each column is signed so that its first non-negligible entry is positive.
    """
    if not 2 <= n_ions <= 10:
        raise ValueError(f"n_ions must be in 2..10, got {n_ions}")
    u = equilibrium_positions(n_ions)
    w, beta = np.linalg.eigh(_hessian(u))
    nu = np.sqrt(w / w[0])
    for m in range(n_ions):
        lead = beta[np.argmax(np.abs(beta[:, m]) > 1e-8), m]
        if lead < 0:
            beta[:, m] *= -1
    return nu, beta


def lamb_dicke(beta: np.ndarray, overall: float = 0.1) -> np.ndarray:
    """Lamb-Dicke matrix ``eta[i, m] = overall * beta[i, m]``."""
    if overall <= 0:
        raise ValueError("overall Lamb-Dicke magnitude must be positive")
    return overall * np.asarray(beta)


@dataclass(frozen=True)
class IonChain:
    """Equilibrium data of an ``N + 1`` ion chain simulating ``N`` Holstein sites.

    ``mode_map[i - 1]`` is the normal mode carrying the phonon of site ``i``.
    Those modes rotate at ``nu_m - omega0/3`` in the working frame; the others
    rotate at ``nu_m``.  ``carrier`` is kept for bookkeeping only.
    """

    nu: np.ndarray
    beta: np.ndarray
    eta: np.ndarray
    omega0: float = 0.0
    mode_map: tuple[int, ...] = ()
    carrier: float = float("nan")

    @classmethod
    def build(cls, n_ions: int, omega0: float = 0.0, overall: float = 0.1,
              mode_map: Sequence[int] | None = None, carrier: float = float("nan"),
              nu_override: dict[int, float] | None = None) -> "IonChain":
        """Chain of ``n_ions`` with Lamb-Dicke scale ``overall``.

        ``nu_override`` replaces individual mode frequencies (keyed by mode
        number), e.g. to use a tabulated rounded value.
        """
        nu, beta = normal_modes(n_ions)
        if nu_override:
            nu = nu.copy()
            for m, val in nu_override.items():
                nu[m - 1] = val
        if mode_map is None:
            mode_map = tuple(range(1, n_ions))
        mode_map = tuple(int(m) for m in mode_map)
        if len(set(mode_map)) != len(mode_map) or not all(1 <= m <= n_ions for m in mode_map):
            raise ValueError(f"invalid mode map {mode_map}")
        return cls(nu, beta, lamb_dicke(beta, overall), float(omega0), mode_map, carrier)

    @property
    def n_ions(self) -> int:
        return len(self.nu)

    @property
    def n_sites(self) -> int:
        return self.n_ions - 1

    @property
    def delta_shift(self) -> np.ndarray:
        """Shifted frequencies ``nu_m - omega0/3`` of the Holstein modes, in site order."""
        return np.array([self.nu[m - 1] - self.omega0 / 3 for m in self.mode_map])

    @property
    def frame(self) -> np.ndarray:
        """Working-frame rotation frequency of every mode."""
        f = self.nu.copy()
        for m in self.mode_map:
            f[m - 1] -= self.omega0 / 3
        return f

    def basis(self, cutoff: int) -> CompositeBasis:
        return CompositeBasis(self.n_ions, self.n_ions, cutoff)

    def free_phonon_operator(self, basis: CompositeBasis) -> sp.csr_matrix:
        """``(omega0/3) sum_{m in mode_map} a_m^+ a_m``, the residual free energy of the frame."""
        b = boson_annihilator(basis.cutoff)
        n = (b.T @ b).tocsr()
        out = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
        for m in self.mode_map:
            out = out + embed(n, ("mode", m - 1), basis)
        return (self.omega0 / 3 * out).tocsr()

    def embed_state(self, psi_sites: np.ndarray, site_basis: CompositeBasis,
                    ion_basis: CompositeBasis) -> np.ndarray:
        """Map a Holstein state onto the ions.

        The auxiliary ion is set spin-up, spectator modes are left in vacuum and
        the phonon of site ``i`` is placed in mode ``mode_map[i - 1]``.
        """
        N = self.n_sites
        if site_basis.n_spins != N or site_basis.n_modes not in (0, N):
            raise ValueError("site basis does not match the chain")
        out = np.zeros(ion_basis.dim, dtype=complex)
        for idx in np.flatnonzero(psi_sites):
            spins, occ = site_basis.decode(int(idx))
            ion_occ = [0] * self.n_ions
            for i, n in enumerate(occ):
                if n > ion_basis.cutoff:
                    raise ValueError("site occupation exceeds the ion cutoff")
                ion_occ[self.mode_map[i] - 1] = n
            out[ion_basis.encode(spins + (1,), ion_occ)] += psi_sites[idx]
        return out


@dataclass(frozen=True)
class DriveSpec:
    """Bichromatic drive ``sin(delta (t - start)) (a_m e^{-i F_m t} + h.c.) sum_i rabi_i eta_{i,m} sigma_i``.

    ``kind`` is ``"xx"`` (sigma_x) or ``"yy"`` (sigma_y).  ``mode`` records the
    mode the detuning was tuned to; the drive couples to every mode.
    """

    ions: tuple[int, ...]
    rabi: tuple[float, ...]
    detuning: float
    kind: str = "xx"
    mode: int = 1
    start: float = 0.0

    def __post_init__(self):
        if len(self.ions) != len(self.rabi):
            raise ValueError("one Rabi frequency per addressed ion is required")
        if any(r < 0 for r in self.rabi):
            raise ValueError("Rabi frequencies must be non-negative")
        if self.kind not in ("xx", "yy"):
            raise ValueError(f"unknown drive kind {self.kind!r}")

    def at(self, start: float) -> "DriveSpec":
        return DriveSpec(self.ions, self.rabi, self.detuning, self.kind, self.mode, start)


@dataclass(frozen=True)
class SidebandTone:
    """Resonant red+blue sideband pair on ``ion`` tuned to ``mode``.

    Gives ``rabi * sum_m eta_{ion,m} sigma_x (a_m e^{-i (F_m - F_mode) t} + h.c.)``.
    """

    ion: int
    rabi: float
    mode: int


def _bracket(chain: IonChain, i: int, j: int, delta: float) -> float:
    F = chain.frame
    den = delta**2 - F**2
    if np.any(np.abs(den) < 1e-12):
        raise ResonanceError(f"detuning {delta} is resonant with a mode")
    return float(np.sum(chain.eta[i - 1] * chain.eta[j - 1] * F / den))


def effective_ising_coupling(chain: IonChain, drives: Sequence[DriveSpec]) -> np.ndarray:
    """Second-order (secular) spin-spin couplings generated by pair drives.

    ``J[i, i+1] = rabi_i rabi_{i+1} sum_m eta_{i,m} eta_{i+1,m} F_m / (delta^2 - F_m^2)``,
    returned as a symmetric ``(n_ions, n_ions)`` matrix with 1-based ions at
    index ``ion - 1``.
    """
    J = np.zeros((chain.n_ions, chain.n_ions))
    for d in drives:
        if len(d.ions) != 2:
            raise ValueError("each Ising drive must address exactly two ions")
        i, j = d.ions
        val = d.rabi[0] * d.rabi[1] * _bracket(chain, i, j, d.detuning)
        J[i - 1, j - 1] += val
        J[j - 1, i - 1] += val
    return J


def calibrate_rabi(chain: IonChain, pair: tuple[int, int], coupling: float, mode: int,
                   tau: float, kind: str = "xx") -> DriveSpec:
    """Detuning and Rabi frequency giving ``coupling`` and phonon closure at ``tau``.

    The detuning is ``F_mode +/- 2 pi / tau``, with the sign chosen from
    ``sgn(coupling * eta_{i,mode} eta_{j,mode})`` so the dominant mode pushes the
    coupling the right way.  Raises ``ValueError`` if the resulting bracket
    has the wrong sign (no real Rabi frequency).
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    i, j = pair
    prod = chain.eta[i - 1, mode - 1] * chain.eta[j - 1, mode - 1]
    if abs(prod) < 1e-14:
        raise ValueError(f"ions {pair} do not both couple to mode {mode}")
    sign = 1.0 if coupling * prod >= 0 else -1.0
    delta = chain.frame[mode - 1] + sign * 2 * math.pi / tau
    bracket = _bracket(chain, i, j, delta)
    if coupling == 0:
        return DriveSpec(pair, (0.0, 0.0), delta, kind, mode)
    if bracket * coupling <= 0:
        raise ValueError(
            f"coupling {coupling} unreachable with mode {mode}: bracket {bracket:.4g} has the wrong sign"
        )
    rabi = math.sqrt(coupling / bracket)
    return DriveSpec(pair, (rabi, rabi), delta, kind, mode)


class DriveHamiltonian:
    """Time-dependent Hamiltonian ``static + sum_k c_k(t) A_k + h.c.``.

    Each coefficient is a short sum of exponentials ``sum_j amp_j e^{-i w_j t}``.
    All operators are stacked so one sparse product serves every term.
    """

    def __init__(self, basis: CompositeBasis, static=None):
        self.basis = basis
        self.static = None if static is None else sp.csr_matrix(static)
        self._ops: list[sp.csr_matrix] = []
        self._amps: list[np.ndarray] = []
        self._freqs: list[np.ndarray] = []
        self._stack = None

    def add(self, op, amps, freqs):
        amps = np.asarray(amps, dtype=complex)
        freqs = np.asarray(freqs, dtype=float)
        op = sp.csr_matrix(op)
        if len(amps) == 1:
            # single-tone terms sharing a frequency collapse onto one operator
            op, amps = amps[0] * op, np.ones(1, dtype=complex)
            for k, w in enumerate(self._freqs):
                if len(w) == 1 and self._amps[k][0] == 1 and w[0] == freqs[0]:
                    self._ops[k] = (self._ops[k] + op).tocsr()
                    self._stack = None
                    return
        self._ops.append(op)
        self._amps.append(amps)
        self._freqs.append(freqs)
        self._stack = None

    def _build(self):
        ops = self._ops + [A.conj().T.tocsr() for A in self._ops]
        if ops:
            self._stack = sp.vstack(ops, format="csr")
        width = max((len(a) for a in self._amps), default=0)
        K = len(self._ops)
        self._A = np.zeros((K, width), dtype=complex)
        self._W = np.zeros((K, width))
        for k, (a, w) in enumerate(zip(self._amps, self._freqs)):
            self._A[k, : len(a)] = a
            self._W[k, : len(w)] = w

    def coefficients(self, t: float) -> np.ndarray:
        if self._stack is None:
            self._build()
        c = np.sum(self._A * np.exp(-1j * self._W * t), axis=1)
        return np.concatenate([c, c.conj()])

    @property
    def max_frequency(self) -> float:
        return float(max((np.max(np.abs(w)) for w in self._freqs if len(w)), default=0.0))

    def apply(self, t: float, psi: np.ndarray) -> np.ndarray:
        out = self.static @ psi if self.static is not None else np.zeros_like(psi)
        if self._ops:
            c = self.coefficients(t)
            out = out + c @ (self._stack @ psi).reshape(len(c), -1)
        return out

    def __call__(self, t: float) -> sp.csr_matrix:
        D = self.basis.dim
        out = sp.csr_matrix((D, D), dtype=complex) if self.static is None else self.static.copy()
        if self._ops:
            c = self.coefficients(t)
            K = len(self._ops)
            for k, A in enumerate(self._ops):
                out = out + c[k] * A + c[K + k] * A.conj().T
        return out.tocsr()


def _ladder(basis: CompositeBasis, mode: int) -> sp.csr_matrix:
    return embed(boson_annihilator(basis.cutoff), ("mode", mode - 1), basis)


def _spin_op(basis: CompositeBasis, which: str, ion: int) -> sp.csr_matrix:
    return embed(pauli(which), ("spin", ion - 1), basis)


def drive_hamiltonian(chain: IonChain, drives: Sequence[DriveSpec], basis: CompositeBasis,
                      static=None) -> DriveHamiltonian:
    """Bichromatic Ising-gate drives in the working frame.

    ``H(t) = sum_d sum_m sin(delta_d (t - start_d)) (a_m e^{-i F_m t} + h.c.)
    sum_{i in d} rabi_i eta_{i,m} sigma_i`` plus an optional static part.
    Evaluate with ``H(t)`` or apply with ``H.apply(t, psi)``.
    """
    if basis.n_spins != chain.n_ions or basis.n_modes != chain.n_ions:
        raise ValueError("basis does not match the chain")
    H = DriveHamiltonian(basis, static)
    F = chain.frame
    for d in drives:
        which = "x" if d.kind == "xx" else "y"
        for m in range(1, chain.n_ions + 1):
            S = sum(r * chain.eta[i - 1, m - 1] * _spin_op(basis, which, i)
                    for i, r in zip(d.ions, d.rabi))
            if not sp.issparse(S) or S.nnz == 0:
                continue
            A = _ladder(basis, m) @ S
            # sin(x) = (e^{ix} - e^{-ix}) / 2i with x = delta (t - start)
            ph = np.exp(-1j * d.detuning * d.start)
            amps = [ph / 2j, -1.0 / (ph * 2j)]
            freqs = [F[m - 1] - d.detuning, F[m - 1] + d.detuning]
            H.add(A, amps, freqs)
    return H


def sideband_hamiltonian(chain: IonChain, tones: Sequence[SidebandTone], basis: CompositeBasis,
                         static=None, cross_modes: bool = True) -> DriveHamiltonian:
    """X-type spin-phonon coupling from resonant sideband tones.

    With ``cross_modes`` the off-resonant coupling of each tone to the other
    modes is kept, rotating at the frame-frequency difference.
    """
    H = DriveHamiltonian(basis, static)
    F = chain.frame
    for tone in tones:
        sx = _spin_op(basis, "x", tone.ion)
        modes = range(1, chain.n_ions + 1) if cross_modes else [tone.mode]
        for m in modes:
            amp = tone.rabi * chain.eta[tone.ion - 1, m - 1]
            if amp == 0:
                continue
            H.add(_ladder(basis, m) @ sx, [amp], [F[m - 1] - F[tone.mode - 1]])
    return H


def ep_tones(chain: IonChain, g: float) -> list[SidebandTone]:
    """Sideband tones realising ``g (sigma_z^i + 1)/2 (b_{m_i} + b_{m_i}^+)``.

    Ion ``i`` gets ``rabi = g / (2 eta_{i,m_i})`` and the auxiliary last ion
    gets one tone per site with ``g / (2 eta_{N+1,m_i})``.
    """
    aux = chain.n_ions
    tones = []
    for i, m in enumerate(chain.mode_map, start=1):
        for ion in (i, aux):
            eta = chain.eta[ion - 1, m - 1]
            if abs(eta) < 1e-12:
                raise ValueError(f"ion {ion} does not couple to mode {m}")
            tones.append(SidebandTone(ion, g / (2 * eta), m))
    return tones


def ep_drive_hamiltonian(chain: IonChain, g: float, basis: CompositeBasis) -> sp.csr_matrix:
    """Z-type electron-phonon drive ``sum_i (rabi_i eta_{i,m_i} sz_i + rabi_{N+1,i} eta_{N+1,m_i} sz_{N+1})(b + b^+)``."""
    H = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for tone in ep_tones(chain, g):
        x = _ladder(basis, tone.mode)
        x = x + x.conj().T
        coef = tone.rabi * chain.eta[tone.ion - 1, tone.mode - 1]
        H = H + coef * (_spin_op(basis, "z", tone.ion) @ x)
    return H.tocsr()


def global_rotation(basis: CompositeBasis, angle: float = math.pi / 4) -> sp.csr_matrix:
    """``prod_i exp(-i angle sigma_y^i)`` on every spin; ``angle = pi/4`` maps sz to sx."""
    r = scipy.linalg.expm(-1j * angle * pauli("y").toarray())
    out = sp.identity(basis.dim, dtype=complex, format="csr")
    for i in range(basis.n_spins):
        out = out @ embed(r, ("spin", i), basis)
    return out.tocsr()


@dataclass(frozen=True)
class MagnusNNN:
    """Second-order Magnus estimate of the next-nearest-neighbour coupling."""

    t: float
    z1: np.ndarray
    z2: np.ndarray
    nn: np.ndarray
    ratio: float
    critical_time: float = field(default=float("nan"))


def _sinc_term(a: float, t: float) -> float:
    if a == 0:
        raise ResonanceError("degenerate frequency difference")
    return math.sin(a * t) / a


def magnus_nnn(chain: IonChain, delta1: float, delta2: float, t: float,
               modes: tuple[int, int] = (1, 2)) -> MagnusNNN:
    """Cross-drive coefficients ``Z_{1,m}(t)`` and ``Z_{2,m}(t)`` for two pair drives.

    Uses the working-frame mode frequencies.  ``nn`` holds the secular
    nearest-neighbour coefficients ``F t / (2 (delta^2 - F^2))`` of the two
    drives on their tuned ``modes``; ``ratio`` is
    ``max_m |Z_{1,m} + Z_{2,m}| / min |nn|``.  ``critical_time`` is
    ``|delta2 / F_2 / (delta1 - F_2)|``, beyond which the cross terms are
    small compared to the accumulated nearest-neighbour phase.
    """
    if delta1 == delta2:
        raise ResonanceError("delta1 equals delta2")
    F = chain.frame
    if np.any(np.isclose(F, delta1, rtol=0, atol=1e-15)) or np.any(np.isclose(F, delta2, rtol=0, atol=1e-15)):
        raise ResonanceError("a detuning equals a mode frequency")
    z1 = np.empty(len(F), dtype=complex)
    z2 = np.empty(len(F), dtype=complex)
    for k, f in enumerate(F):
        z1[k] = 1j / (2 * (delta1**2 - f**2)) * (
            delta1 * _sinc_term(delta2 - f, t) - delta1 * _sinc_term(delta2 + f, t)
            + f * _sinc_term(delta2 - delta1, t) - f * _sinc_term(delta2 + delta1, t))
        z2[k] = 1j / (2 * (delta2**2 - f**2)) * (
            delta2 * _sinc_term(delta1 - f, t) - delta2 * _sinc_term(delta1 + f, t)
            + f * _sinc_term(delta1 - delta2, t) - f * _sinc_term(delta1 + delta2, t))
    f1, f2 = F[modes[0] - 1], F[modes[1] - 1]
    nn = np.array([f1 * t / (2 * (delta1**2 - f1**2)), f2 * t / (2 * (delta2**2 - f2**2))])
    nnn = float(np.max(np.abs(z1 + z2)))
    ratio = nnn / float(np.min(np.abs(nn))) if t > 0 else 0.0
    crit = abs(delta2 / f2 / (delta1 - f2))
    return MagnusNNN(t, z1, z2, nn, ratio, crit)
