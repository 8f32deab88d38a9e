"""Quantum deep learning for lattice gauge theories and parton showers.

Subpackages: :mod:`qdl.sim` (statevector simulator), :mod:`qdl.operators`
(Pauli sums and model Hamiltonians), :mod:`qdl.ansatz` (QCNN, HEA, HVA, Z2
Trotter and parton-shower circuits), :mod:`qdl.learn` (losses, optimisers,
VQE, QCNN training), :mod:`qdl.ed` (sector exact diagonalisation and
finite-size scaling) and :mod:`qdl.experiments` (datasets, runs, CLI).
"""

from .errors import CacheFormatError, ConvergenceError, DegenerateGapError, InputError, SizeLimitError

__version__ = "0.1.0"

__all__ = ["CacheFormatError", "ConvergenceError", "DegenerateGapError", "InputError",
           "SizeLimitError", "__version__"]
