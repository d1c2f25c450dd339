"""Digital simulation of the Holstein model with trapped ions.

Modules
-------
fockspin     composite spin/boson Hilbert spaces and operators
model        Holstein Hamiltonian, its three-term splitting and initial states
evolution    exact, symmetric-Trotter and RK4 time evolution
ions         ion-chain normal modes, laser drives and Magnus error terms
protocol     pulse-level Trotter protocol and NN Ising gate runs
bounds       norm and gate-count bounds
observables  spin, phonon and polaron-correlation readouts
experiments  configuration, experiment catalog and budget reports
cli          command-line entry point
"""
from .evolution import ConvergenceError, Propagator, TrotterPlan, exact_evolve, integrate_tdse, trotter_evolve
from .fockspin import CompositeBasis, basis_state, boson_annihilator, embed, expectation, fidelity, pauli
from .model import HolsteinParams, build_hamiltonian, decompose, initial_state

__all__ = [
    "ConvergenceError", "Propagator", "TrotterPlan", "exact_evolve", "integrate_tdse", "trotter_evolve",
    "CompositeBasis", "basis_state", "boson_annihilator", "embed", "expectation", "fidelity", "pauli",
    "HolsteinParams", "build_hamiltonian", "decompose", "initial_state",
]

__version__ = "0.1.0"
