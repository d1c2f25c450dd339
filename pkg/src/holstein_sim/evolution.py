"""Exact, symmetric-Trotter and fixed-step time-dependent evolution."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .fockspin import is_hermitian

__all__ = [
    "ConvergenceError",
    "Propagator",
    "exact_evolve",
    "TrotterPlan",
    "trotter_evolve",
    "TDSEResult",
    "integrate_tdse",
    "default_dt",
]


class ConvergenceError(RuntimeError):
    """Raised when a fixed-step integration fails its step-halving check."""


def _dense(H) -> np.ndarray:
    return H.toarray() if sp.issparse(H) else np.asarray(H, dtype=complex)


class Propagator:
    """Cached eigendecomposition of a Hermitian matrix, giving ``exp(-i H t)`` for any t."""

    def __init__(self, H, atol: float = 1e-12):
        if not is_hermitian(H, atol):
            raise ValueError("Hamiltonian is not Hermitian")
        self.dim = H.shape[0]
        self.energies, self.vectors = np.linalg.eigh(_dense(H))
        self._adjoint = np.ascontiguousarray(self.vectors.conj().T)

    def unitary(self, t: float) -> np.ndarray:
        return (self.vectors * np.exp(-1j * self.energies * t)) @ self._adjoint

    def evolve(self, psi0: np.ndarray, t):
        """State(s) at time ``t``; an array of times gives one row per time."""
        if psi0.shape != (self.dim,):
            raise ValueError(f"state length {psi0.shape} does not match dimension {self.dim}")
        coeffs = self._adjoint @ psi0
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        out = (np.exp(-1j * np.outer(ts, self.energies)) * coeffs) @ self.vectors.T
        return out[0] if np.ndim(t) == 0 else out


def exact_evolve(H, psi0: np.ndarray, t) -> np.ndarray:
    """``exp(-i H t) psi0`` via eigendecomposition; ``t`` may be an array of times."""
    return Propagator(H).evolve(psi0, t)


@dataclass
class TrotterPlan:
    """Symmetric first-depth Suzuki splitting of ``sum(terms)`` over ``total_time``.

    One step applies ``exp(-i H_k dt/2)`` for k = 1..m and then k = m..1, with
    ``dt = total_time / steps``.  Term eigendecompositions are computed once.
    """

    terms: Sequence
    total_time: float
    steps: int
    symmetric: bool = True
    _props: list = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.total_time < 0:
            raise ValueError(f"total_time must be >= 0, got {self.total_time}")
        if len(self.terms) < 1:
            raise ValueError("at least one term is required")
        if not self.symmetric:
            raise ValueError("only the symmetric splitting is supported")
        dims = {H.shape for H in self.terms}
        if len(dims) != 1:
            raise ValueError(f"terms have mismatched shapes {sorted(dims)}")

    @property
    def propagators(self) -> list[Propagator]:
        if self._props is None:
            self._props = [Propagator(H) for H in self.terms]
        return self._props

    def at(self, total_time: float) -> "TrotterPlan":
        """Same terms and step count at a different total time, sharing the cache."""
        plan = TrotterPlan(self.terms, total_time, self.steps)
        plan._props = self.propagators
        return plan

    def step_unitaries(self) -> list[np.ndarray]:
        half = self.total_time / (2 * self.steps)
        return [p.unitary(half) for p in self.propagators]

    def unitary(self) -> np.ndarray:
        us = self.step_unitaries()
        step = np.eye(us[0].shape[0], dtype=complex)
        for u in us + us[::-1]:
            step = u @ step
        return np.linalg.matrix_power(step, self.steps)


def trotter_evolve(plan: TrotterPlan, psi0: np.ndarray) -> np.ndarray:
    """Apply the symmetric Trotter product of ``plan`` to ``psi0``."""
    if psi0.shape != (plan.terms[0].shape[0],):
        raise ValueError("state length does not match the Trotter terms")
    half = plan.total_time / (2 * plan.steps)
    props = plan.propagators
    sequence = props + props[::-1]
    psi = np.array(psi0, dtype=complex)
    for _ in range(plan.steps):
        for prop in sequence:
            psi = prop.evolve(psi, half)
    return psi


@dataclass
class TDSEResult:
    times: np.ndarray
    states: np.ndarray
    dt: float
    max_drift: float
    steps: int

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def default_dt(max_frequency: float, samples: int = 50) -> float:
    """Step resolving the fastest oscillation with ``samples`` points per period."""
    if max_frequency <= 0:
        raise ValueError("max_frequency must be positive")
    return 2 * math.pi / max_frequency / samples


def _applier(H_of_t) -> Callable[[float, np.ndarray], np.ndarray]:
    if hasattr(H_of_t, "apply"):
        return H_of_t.apply
    return lambda t, psi: H_of_t(t) @ psi


def _rk4(apply, psi, t0, t1, n, drift_tol):
    h = (t1 - t0) / n
    max_drift = 0.0
    t = t0
    for k in range(n):
        k1 = -1j * apply(t, psi)
        k2 = -1j * apply(t + 0.5 * h, psi + 0.5 * h * k1)
        k3 = -1j * apply(t + 0.5 * h, psi + 0.5 * h * k2)
        k4 = -1j * apply(t + h, psi + h * k3)
        psi = psi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        norm = np.linalg.norm(psi)
        max_drift = max(max_drift, abs(norm - 1.0))
        psi = psi / norm
        t = t0 + (k + 1) * h
    if max_drift > drift_tol:
        raise ConvergenceError(f"norm drift {max_drift:.3e} per step exceeds {drift_tol:.1e}")
    return psi, max_drift


def integrate_tdse(
    H_of_t,
    psi0: np.ndarray,
    t_span: tuple[float, float],
    dt: float,
    t_eval: Sequence[float] | None = None,
    check: bool = False,
    check_tol: float = 1e-6,
    drift_tol: float = 1e-9,
) -> TDSEResult:
    """Fixed-step classical RK4 integration of ``i d psi/dt = H(t) psi``.

    The state is renormalised after each step; the pre-renormalisation drift
    must stay below ``drift_tol``.  Results are reported at ``t_eval`` (default:
    both ends of ``t_span``); each output time is hit exactly by shrinking the
    step inside the preceding interval.

    Parameters
    ----------
    H_of_t : callable or object with ``apply(t, psi)``
        Hamiltonian as a function of time.
    check : bool
        Repeat the integration with half the step and raise
        :class:`ConvergenceError` if final amplitudes move by more than
        ``check_tol``.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    t0, t1 = map(float, t_span)
    if t_eval is None:
        t_eval = [t0, t1]
    t_eval = np.asarray(sorted(float(x) for x in t_eval))
    if t_eval[0] < t0 - 1e-12 or t_eval[-1] > t1 + 1e-12:
        raise ValueError("t_eval outside t_span")
    apply = _applier(H_of_t)

    def run(step):
        psi = np.array(psi0, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        states, drift, total = [], 0.0, 0
        t = t0
        for te in t_eval:
            if te > t:
                n = max(1, math.ceil((te - t) / step - 1e-9))
                psi, d = _rk4(apply, psi, t, te, n, drift_tol)
                drift, total, t = max(drift, d), total + n, te
            states.append(psi.copy())
        return np.array(states), drift, total

    states, drift, total = run(dt)
    if check:
        fine, _, _ = run(dt / 2)
        diff = float(np.max(np.abs(fine[-1] - states[-1])))
        if diff > check_tol:
            raise ConvergenceError(
                f"halving dt={dt:.4g} changed final amplitudes by {diff:.2e} > {check_tol:.0e}"
            )
    return TDSEResult(t_eval, states, dt, drift, total)
