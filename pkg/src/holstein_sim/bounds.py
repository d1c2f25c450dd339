"""Resource estimates for the Trotterised Holstein simulation.

The displacement operator ``b + b^+`` truncated to ``n`` Fock levels is a Jacobi
matrix whose characteristic polynomial obeys ``D_0 = 1``, ``D_1 = -x`` and
``D_n = -x D_{n-1} - (n-1) D_{n-2}`` (a rescaled Hermite polynomial).  Its
largest zero is the operator norm used in the Hamiltonian norm bound.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .model import HolsteinParams

__all__ = [
    "displacement_charpoly",
    "eval_charpoly",
    "largest_zero",
    "NormBound",
    "holstein_norm_bound",
    "gate_count_bound",
    "implied_error",
    "BoundReport",
    "bound_report",
]


def displacement_charpoly(n: int) -> tuple[int, ...]:
    """Integer coefficients of ``D_n`` in ascending powers of x."""
    if n < 0:
        raise ValueError("degree must be non-negative")
    prev, cur = [1], [0, -1]
    if n == 0:
        return (1,)
    for k in range(2, n + 1):
        nxt = [0] + [-c for c in cur]
        for i, c in enumerate(prev):
            nxt[i] -= (k - 1) * c
        prev, cur = cur, nxt
    return tuple(cur)


def eval_charpoly(n: int, x: float) -> tuple[float, float]:
    """``(D_n(x), D_n'(x))`` by forward recursion (stable for moderate n)."""
    p0, p1 = 1.0, -x
    d0, d1 = 0.0, -1.0
    if n == 0:
        return 1.0, 0.0
    for k in range(2, n + 1):
        p0, p1 = p1, -x * p1 - (k - 1) * p0
        d0, d1 = d1, -p0 - x * d1 - (k - 1) * d0
    return p1, d1


def largest_zero(n: int, tol: float = 1e-13) -> float:
    """Largest real zero of ``D_n``, by Newton iteration from above.

    All zeros are real and simple, so Newton started right of the largest
    zero decreases monotonically onto it.
    """
    if n < 1:
        raise ValueError("D_0 has no zeros")
    if n == 1:
        return 0.0
    x = 2.0 * math.sqrt(n) + 1.0
    for _ in range(200):
        p, dp = eval_charpoly(n, x)
        step = p / dp
        x -= step
        if abs(step) < tol * max(1.0, abs(x)):
            break
    return x


@dataclass(frozen=True)
class NormBound:
    """Two versions of the Holstein norm bound.

    ``reported`` uses ``2 sqrt(M-1)`` for the displacement norm; ``verified``
    uses ``2 sqrt(M)``, which holds for a cutoff keeping levels ``0..M``
    (largest zero of ``D_{M+1}``).
    """

    reported: float
    verified: float


def holstein_norm_bound(p: HolsteinParams) -> NormBound:
    N, M = p.n_sites, p.cutoff
    base = abs(p.h) * (N - 1) + p.omega0 * N * M
    return NormBound(
        reported=base + 2 * abs(p.g) * N * math.sqrt(M - 1),
        verified=base + 2 * abs(p.g) * N * math.sqrt(M),
    )


def _prefactor(norm: float, t: float, k: int) -> float:
    return 3 * 5 ** (2 * k) * (3 * norm * t) ** (1 + 1 / (2 * k))


def gate_count_bound(p: HolsteinParams, t: float, eps: float, k: int = 1,
                     norm: float | None = None) -> int:
    """Upper bound on gates for error ``eps`` with a depth-``k`` Suzuki splitting.

    ``N_g <= 3 5^{2k} [3 ||H|| t]^{1 + 1/2k} / eps^{1/2k}``, using the reported
    norm bound unless ``norm`` is given.
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if k < 1:
        raise ValueError("fractal depth k must be >= 1")
    if t <= 0:
        raise ValueError("t must be positive")
    lam = holstein_norm_bound(p).reported if norm is None else norm
    value = _prefactor(lam, t, k) / eps ** (1 / (2 * k))
    # guard against 3897.0000000001-style float noise before taking the ceiling
    return int(math.ceil(round(value, 9)))


def implied_error(p: HolsteinParams, t: float, n_gates: int, k: int = 1,
                  norm: float | None = None) -> float:
    """Error budget for which ``n_gates`` saturates :func:`gate_count_bound`."""
    if n_gates < 1:
        raise ValueError("n_gates must be >= 1")
    lam = holstein_norm_bound(p).verified if norm is None else norm
    return (_prefactor(lam, t, k) / n_gates) ** (2 * k)


@dataclass(frozen=True)
class BoundReport:
    h: float
    g: float
    omega0: float
    n_sites: int
    cutoff: int
    t: float
    eps: float
    k: int
    norm_bound: float
    verified_norm_bound: float
    gate_count_bound: int

    def as_dict(self) -> dict:
        return asdict(self)


def bound_report(p: HolsteinParams, t: float, eps: float, k: int = 1) -> BoundReport:
    nb = holstein_norm_bound(p)
    return BoundReport(p.h, p.g, p.omega0, p.n_sites, p.cutoff, t, eps, k,
                       nb.reported, nb.verified, gate_count_bound(p, t, eps, k))
