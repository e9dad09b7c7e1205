"""Quantum-jump feedback stabilisation of many-body singlet dark states.

Submodules
----------
hilbert
    Qubit-register operators, dissipators and expectations.
spin_structure
    Coupled angular-momentum basis and the dark (singlet) subspace.
feedback
    Feedback unitaries and stabilisation-strategy validation.
dynamics
    Master equation, steady states and quantum trajectories.
measures
    N-concurrence, reference states and target overlaps.
experiments, config, cli
    Named experiments and the batch command-line front end.
"""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402

__all__ = ["BACKEND", "__version__"]
