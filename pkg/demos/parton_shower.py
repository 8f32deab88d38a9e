"""Two-flavour parton shower on qubits: emission probabilities and flavour rotation.

Run:  python3 demos/parton_shower.py
"""

import numpy as np

from qdl.ansatz import (
    QpsConfig, qps_emission_scales, qps_flavor_rotation, qps_state, qps_sudakov,
)

cfg = QpsConfig(n_steps=6, g1=1.0, g2=0.5)
probs = np.abs(qps_state(cfg)) ** 2
emis = probs.reshape(2, -1).sum(axis=0).reshape((2,) * cfg.n_steps)

print(" step   theta      P(emit)   1 - Delta")
for i, theta in enumerate(qps_emission_scales(cfg)):
    p_emit = emis.sum(axis=tuple(k for k in range(cfg.n_steps) if k != i))[1]
    print(f"  {i + 1}   {theta:.2e}   {p_emit:.5f}   {1 - qps_sudakov(theta, cfg.g1, cfg):.5f}")

# moving one emission scale changes the mean emission count
mod = cfg.with_(scale_mods=((3, 2.0),))
mean = lambda c: float(  # noqa: E731
    (np.abs(qps_state(c)) ** 2).reshape(2, -1).sum(axis=0)
    @ [bin(k).count("1") for k in range(2 ** c.n_steps)])
print(f"mean emissions: plain {mean(cfg):.4f}, modified {mean(mod):.4f}")

# mixed couplings: the rotation diagonalises the coupling matrix
U, ga, gb = qps_flavor_rotation(1.0, 0.4, 0.3)
G = np.array([[1.0, 0.3], [0.3, 0.4]])
print("U^T G U =\n", np.round(U.T @ G @ U, 12), f"\n(g_a, g_b) = ({ga:.4f}, {gb:.4f})")
