"""State preparation and first-order Trotter evolution for the Z2 gauge chain."""

from __future__ import annotations

import numpy as np

from ..errors import InputError
from ..operators import Z2Params, z2_link, z2_site
from ..sim import Circuit, StateVector, gate, run_circuit


def z2_initial_circuit(p):
    """Hadamard on every link and a flip of the probe site.

    Gives ``G_probe = +1`` and ``G_n = -1`` on all other sites.
    """
    c = Circuit(p.n_qubits, n_params=0, name="z2-init")
    c.append(gate("X", z2_site(p.probe_site, p.n_sites)))
    for n in range(p.n_sites):
        c.append(gate("H", z2_link(n, p.n_sites)))
    return c


def z2_initial_state(p):
    if not isinstance(p, Z2Params):
        raise InputError("expected Z2Params")
    zero = np.zeros(2 ** p.n_qubits, dtype=complex)
    zero[0] = 1
    return StateVector(run_circuit(zero, z2_initial_circuit(p)))


def kinetic_block(a, link, b, alpha):
    """``exp(-i (X_a Z_link X_b + Y_a Z_link Y_b) alpha / 2)`` from CNOTs and rotations."""
    return [
        gate("CNOT", b, a),
        gate("H", link),
        gate("RZ", b, params=[np.pi / 2]),
        gate("CNOT", b, link),
        gate("RY", b, params=[alpha]),
        gate("CNOT", a, b),
        gate("RY", b, params=[-alpha]),
        gate("CNOT", a, b),
        gate("CNOT", b, link),
        gate("H", link),
        gate("RZ", b, params=[-np.pi / 2]),
        gate("CNOT", b, a),
    ]


def z2_trotter_step(p, dt):
    """Gates of ``e^{-i H_f dt} e^{-i H_g dt} e^{-i H_m dt}`` (mass factor applied first)."""
    ns = p.n_sites
    gs = [gate("RZ", z2_site(n, ns), params=[(-1) ** n * p.mass_m * dt]) for n in range(ns)]
    gs += [gate("RX", z2_link(n, ns), params=[-2 * p.field_f * dt]) for n in range(ns)]
    # -J/2 (XZX + YZY) per bond  =>  block angle alpha = -J dt
    for n in range(ns):
        gs += kinetic_block(z2_site(n, ns), z2_link(n, ns), z2_site(n + 1, ns), -p.coupling_J * dt)
    return gs


def z2_trotter_circuit(p, total_time, n_steps):
    if n_steps < 1:
        raise InputError("n_steps must be >= 1")
    dt = total_time / n_steps
    c = Circuit(p.n_qubits, n_params=0, name="z2-trotter")
    step = z2_trotter_step(p, dt)
    for _ in range(n_steps):
        c.extend(step)
    return c
