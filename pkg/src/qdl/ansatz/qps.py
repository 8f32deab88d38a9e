"""Circuit model of a two-flavour fermion shower emitting scalar bosons.

Register layout: qubit 0 is the fermion flavour (``|0> = f1``, ``|1> = f2``),
qubits ``1..n_steps`` record whether a boson was emitted at each step.
Each step rotates the flavour qubit into the basis that diagonalises the
coupling matrix, applies the emission rotation for the ``a`` / ``b``
eigen-flavour (controlled on ``|0>`` / ``|1>``) and rotates back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import InputError
from ..sim import Circuit, gate, run_circuit


@dataclass(frozen=True)
class QpsConfig:
    n_steps: int = 8
    g1: float = 1.0
    g2: float = 1.0
    g12: float = 0.0
    theta_max: float = 1.0
    eps_cut: float = 1e-3
    initial_flavor: str = "f1"
    scale_mods: tuple = field(default_factory=tuple)  # ((step 1..n_steps, factor), ...)
    sudakov_norm: float = 0.4

    def __post_init__(self):
        object.__setattr__(self, "scale_mods", tuple((int(i), float(f)) for i, f in self.scale_mods))
        if self.n_steps < 1:
            raise InputError("n_steps must be >= 1")
        if not 0 < self.eps_cut < self.theta_max:
            raise InputError("need 0 < eps_cut < theta_max")
        if not all(np.isfinite([self.g1, self.g2, self.g12, self.sudakov_norm])):
            raise InputError("couplings must be finite")
        if self.initial_flavor not in ("f1", "f2"):
            raise InputError("initial_flavor must be 'f1' or 'f2'")
        for i, f in self.scale_mods:
            if not 1 <= i <= self.n_steps or not f > 0:
                raise InputError(f"bad scale modification {(i, f)}")

    def with_(self, **kw):
        return replace(self, **kw)

    @property
    def n_qubits(self):
        return self.n_steps + 1

    @property
    def step_ratio(self):
        """Ratio ``theta_{i+1} / theta_i`` of the geometric scale grid."""
        return (self.eps_cut / self.theta_max) ** (1.0 / self.n_steps)


def qps_scale_grid(cfg):
    """Unmodified scales ``theta_1..theta_N`` followed by ``theta_{N+1} = eps``."""
    i = np.arange(cfg.n_steps + 1)
    return cfg.theta_max * cfg.step_ratio ** i


def qps_emission_scales(cfg):
    theta = qps_scale_grid(cfg)[:-1].copy()
    for i, f in cfg.scale_mods:
        theta[i - 1] *= f
    return theta


def qps_sudakov(theta_i, g, cfg, theta_next=None):
    """No-emission probability ``exp(-c0 g^2 ln(theta_i / theta_next))`` clamped to [0, 1].

    ``theta_next`` defaults to the next point of the geometric grid.
    """
    if not theta_i > 0:
        raise InputError("emission scale must be positive")
    if theta_next is None:
        theta_next = theta_i * cfg.step_ratio
    delta = math.exp(-cfg.sudakov_norm * g * g * math.log(theta_i / theta_next))
    return min(1.0, max(0.0, delta))


def qps_flavor_rotation(g1, g2, g12):
    """Rotation ``U`` to the eigen-flavour basis plus the couplings ``(g_a, g_b)``."""
    if not all(np.isfinite([g1, g2, g12])):
        raise InputError("couplings must be finite")
    sign = 1.0 if g2 - g1 >= 0 else -1.0
    gp = sign * math.sqrt((g1 - g2) ** 2 + 4 * g12 ** 2)
    g_a = (g1 + g2 - gp) / 2
    g_b = (g1 + g2 + gp) / 2
    if gp == 0:
        return np.eye(2), g_a, g_b
    u = math.sqrt(min(1.0, max(0.0, (g1 - g2 + gp) / (2 * gp))))
    # the closed form fixes |u| only; this sign makes the columns of U eigenvectors
    u = math.copysign(u, gp * g12)
    s = math.sqrt(1 - u * u)
    return np.array([[s, u], [-u, s]]), g_a, g_b


def emission_matrix(delta):
    if not 0 <= delta <= 1:
        raise InputError("Sudakov factor must lie in [0, 1]")
    a, b = math.sqrt(delta), math.sqrt(1 - delta)
    return np.array([[a, -b], [b, a]])


def qps_emission_gate(theta_i, g, cfg, theta_next=None):
    return emission_matrix(qps_sudakov(theta_i, g, cfg, theta_next))


def qps_circuit(cfg):
    if not isinstance(cfg, QpsConfig):
        raise InputError("expected QpsConfig")
    u, g_a, g_b = qps_flavor_rotation(cfg.g1, cfg.g2, cfg.g12)
    theta = qps_emission_scales(cfg)
    grid = qps_scale_grid(cfg)
    c = Circuit(cfg.n_qubits, n_params=0, name="qps")
    if cfg.initial_flavor == "f2":
        c.append(gate("X", 0))
    for i in range(cfg.n_steps):
        q = i + 1
        ua = qps_emission_gate(theta[i], g_a, cfg, grid[i + 1])
        ub = qps_emission_gate(theta[i], g_b, cfg, grid[i + 1])
        c.append(gate("MATRIX", 0, matrix=u.T))
        c.append(gate("CMATRIX", 0, q, matrix=ua, control_value=0))
        c.append(gate("CMATRIX", 0, q, matrix=ub, control_value=1))
        c.append(gate("MATRIX", 0, matrix=u))
    return c


def qps_state(cfg):
    zero = np.zeros(2 ** cfg.n_qubits, dtype=complex)
    zero[0] = 1
    return run_circuit(zero, qps_circuit(cfg))
