"""Tensor-product algebra for spin-1/2 chains coupled to truncated bosonic modes.

The composite space is ordered ``spin_1 x ... x spin_n x mode_1 x ... x mode_m``
in Kronecker order, so spin 1 is the most significant digit of a basis index.
A spin basis state ``|up>`` is ``[1, 0]`` (sigma_z eigenvalue +1), and a mode
with cutoff ``M`` keeps Fock levels ``0..M``.

Operators are returned as ``scipy.sparse.csr_matrix``; states are plain complex
``numpy`` vectors.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp

__all__ = [
    "CompositeBasis",
    "boson_annihilator",
    "pauli",
    "embed",
    "expectation",
    "fidelity",
    "is_hermitian",
    "basis_state",
]

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "+": np.array([[0, 1], [0, 0]], dtype=complex),
    "-": np.array([[0, 0], [1, 0]], dtype=complex),
    "i": np.eye(2, dtype=complex),
}


@dataclass(frozen=True)
class CompositeBasis:
    """Ordered product basis of ``n_spins`` qubits and ``n_modes`` bosonic modes.

    Parameters
    ----------
    n_spins : int
        Number of two-level systems.
    n_modes : int
        Number of bosonic modes.
    cutoff : int
        Maximum occupation kept per mode; each mode has dimension ``cutoff + 1``.
    """

    n_spins: int
    n_modes: int
    cutoff: int

    def __post_init__(self):
        if self.n_spins < 0 or self.n_modes < 0:
            raise ValueError("negative number of spins or modes")
        if self.n_modes and self.cutoff < 1:
            raise ValueError(f"cutoff must be >= 1, got {self.cutoff}")

    @property
    def mode_dim(self) -> int:
        return self.cutoff + 1

    @property
    def dims(self) -> tuple[int, ...]:
        return (2,) * self.n_spins + (self.mode_dim,) * self.n_modes

    @property
    def dim(self) -> int:
        return 2**self.n_spins * self.mode_dim**self.n_modes

    def slot_dim(self, slot: tuple[str, int]) -> int:
        return self.dims[self._position(slot)]

    def _position(self, slot: tuple[str, int]) -> int:
        kind, k = slot
        if kind == "spin":
            if not 0 <= k < self.n_spins:
                raise IndexError(f"spin slot {k} out of range for {self.n_spins} spins")
            return k
        if kind == "mode":
            if not 0 <= k < self.n_modes:
                raise IndexError(f"mode slot {k} out of range for {self.n_modes} modes")
            return self.n_spins + k
        raise ValueError(f"unknown slot kind {kind!r}")

    def encode(self, spins, occupations=()) -> int:
        """Index of the product state with the given sigma_z values and occupations.

        ``spins`` holds +1 (up) or -1 (down) per spin.
        """
        if len(spins) != self.n_spins or len(occupations) != self.n_modes:
            raise ValueError("wrong number of spin or mode labels")
        digits = []
        for s in spins:
            if s not in (1, -1):
                raise ValueError(f"spin label must be +1 or -1, got {s}")
            digits.append(0 if s == 1 else 1)
        for n in occupations:
            if not 0 <= n <= self.cutoff:
                raise ValueError(f"occupation {n} outside 0..{self.cutoff}")
            digits.append(int(n))
        return int(np.ravel_multi_index(digits, self.dims)) if digits else 0

    def decode(self, index: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        if not 0 <= index < self.dim:
            raise IndexError(f"basis index {index} outside 0..{self.dim - 1}")
        digits = np.unravel_index(index, self.dims) if self.dims else ()
        spins = tuple(1 if int(d) == 0 else -1 for d in digits[: self.n_spins])
        occ = tuple(int(d) for d in digits[self.n_spins:])
        return spins, occ


def boson_annihilator(cutoff: int) -> sp.csr_matrix:
    """Truncated annihilation operator with ``b[n-1, n] = sqrt(n)`` for n = 1..cutoff."""
    if cutoff < 1:
        raise ValueError(f"cutoff must be >= 1, got {cutoff}")
    return sp.diags(np.sqrt(np.arange(1, cutoff + 1)), 1, format="csr", dtype=complex)


def pauli(which: str) -> sp.csr_matrix:
    """2x2 Pauli matrix ``x``, ``y``, ``z``, ladder ``+``/``-`` or identity ``i``."""
    try:
        return sp.csr_matrix(_PAULI[which])
    except KeyError:
        raise ValueError(f"unknown Pauli label {which!r}") from None


def embed(local, slot: tuple[str, int], basis: CompositeBasis) -> sp.csr_matrix:
    """Kronecker-embed a local operator acting on one spin or mode slot.

    ``slot`` is ``("spin", k)`` or ``("mode", k)`` with zero-based ``k``.
    """
    pos = basis._position(slot)
    local = sp.csr_matrix(local, dtype=complex)
    if local.shape != (basis.dims[pos],) * 2:
        raise ValueError(
            f"local operator shape {local.shape} does not match slot dimension {basis.dims[pos]}"
        )
    left = int(np.prod(basis.dims[:pos], dtype=np.int64))
    right = int(np.prod(basis.dims[pos + 1:], dtype=np.int64))
    factors = [sp.identity(left, dtype=complex, format="csr"), local,
               sp.identity(right, dtype=complex, format="csr")]
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), factors)


def is_hermitian(op, atol: float = 1e-12) -> bool:
    diff = op - op.conj().T
    if sp.issparse(diff):
        return diff.nnz == 0 or float(abs(diff).max()) < atol
    return float(np.abs(diff).max(initial=0.0)) < atol


def _check_dims(op, psi):
    if op.shape != (psi.shape[0], psi.shape[0]):
        raise ValueError(f"operator shape {op.shape} does not match state length {psi.shape[0]}")


def expectation(op, psi: np.ndarray) -> complex:
    """``<psi|op|psi>`` for a state vector or, row-wise, a trajectory of states."""
    psi = np.asarray(psi)
    if psi.ndim == 2:
        _check_dims(op, psi[0])
        return np.einsum("ti,ti->t", psi.conj(), (op @ psi.T).T)
    _check_dims(op, psi)
    return complex(np.vdot(psi, op @ psi))


def fidelity(psi1: np.ndarray, psi2: np.ndarray) -> float:
    """Overlap fidelity ``|<psi1|psi2>|^2`` of two pure states."""
    if psi1.shape != psi2.shape:
        raise ValueError(f"state shapes differ: {psi1.shape} vs {psi2.shape}")
    return float(min(1.0, abs(np.vdot(psi1, psi2)) ** 2))


def basis_state(basis: CompositeBasis, spins, occupations=None) -> np.ndarray:
    if occupations is None:
        occupations = (0,) * basis.n_modes
    psi = np.zeros(basis.dim, dtype=complex)
    psi[basis.encode(spins, occupations)] = 1.0
    return psi
