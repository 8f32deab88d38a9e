"""Z2 gauge theory with matter: first-order Trotter error and Gauss's law.

Run:  python3 demos/z2_trotter.py
"""

import numpy as np
from scipy.linalg import expm

from qdl.ansatz import z2_initial_state, z2_trotter_circuit
from qdl.operators import Z2Params, z2_gauss_operator, z2_hamiltonian
from qdl.sim import run_circuit

T = 2.0
for m in (0.0, 0.5, 1.0):
    p = Z2Params(2, 1.0, 3.0, m)
    psi0 = z2_initial_state(p).amplitudes
    exact = expm(-1j * T * z2_hamiltonian(p).to_dense()) @ psi0
    row = []
    for steps in (10, 20, 40, 80):
        got = run_circuit(psi0, z2_trotter_circuit(p, T, steps))
        row.append(1 - abs(np.vdot(exact, got)) ** 2)
    # halving dt should roughly quarter the infidelity
    print(f"m={m:.1f}  infidelity " + "  ".join(f"{x:.2e}" for x in row))

# Gauss's law holds gate by gate, not just at the end
p = Z2Params(2, 1.0, 3.0, 0.7)
psi = z2_initial_state(p).amplitudes
gs = [z2_gauss_operator(s, 2).to_dense() for s in range(2)]
step = z2_trotter_circuit(p, 0.1, 1)
drift = 0.0
start = [float(round(np.vdot(psi, g @ psi).real, 12)) for g in gs]
for _ in range(50):
    psi = run_circuit(psi, step)
    drift = max(drift, *(abs(np.vdot(psi, g @ psi).real - s) for g, s in zip(gs, start)))
print(f"Gauss charges {start}, max drift over 50 steps {drift:.1e}")
