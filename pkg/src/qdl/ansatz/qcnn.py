"""Quantum convolutional neural network circuits and the hardware-efficient baseline.

Convolution blocks are 15-parameter SU(4)-like gates; pooling blocks are a
controlled unitary whose control qubit is never touched again afterwards, so
the pooled qubit is effectively traced out when the readout qubit (always the
last one) is measured.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import InputError
from ..sim import Circuit, Param, gate

VARIANTS = ("schwinger", "z2", "qps", "qps_m1", "qps_m2")

CONV_PARAMS = {"generic": 15, "pauli": 15, "reduced": 9}
POOL_PARAMS = {"generic": 6, "pauli": 6, "reduced": 3}


def _style(variant):
    if variant in ("schwinger", "z2"):
        return "generic"
    if variant in ("qps", "qps_m1"):
        return "pauli"
    if variant == "qps_m2":
        return "reduced"
    raise InputError(f"unknown QCNN variant {variant!r}")


def _u(q, p, style, dagger=False):
    """Single-qubit rotation block U(p) (or its adjoint) on qubit ``q``."""
    if style == "generic":
        return [gate("U", q, params=p, dagger=dagger)]
    if style == "pauli":
        # U = RZ(c) RY(b) RX(a)
        gs = [gate("RX", q, params=[p[0]]), gate("RY", q, params=[p[1]]),
              gate("RZ", q, params=[p[2]])]
    else:
        # U = RZ(b) RY(a)
        gs = [gate("RY", q, params=[p[0]]), gate("RZ", q, params=[p[1]])]
    if dagger:
        gs = [gate(g.kind, *g.targets, params=g.params, dagger=True) for g in reversed(gs)]
    return gs


def conv_gates(p, a, b, style="generic"):
    """Gate list of one convolution block on qubits ``(a, b)``."""
    if len(p) != CONV_PARAMS[style]:
        raise InputError(f"convolution block takes {CONV_PARAMS[style]} parameters, got {len(p)}")
    if style == "reduced":
        return (_u(a, p[0:2], style) + _u(b, p[2:4], style)
                + [gate("RZZ", a, b, params=[p[4]])]
                + _u(a, p[5:7], style) + _u(b, p[7:9], style))
    return (_u(a, p[0:3], style) + _u(b, p[3:6], style)
            + [gate("RXX", a, b, params=[p[6]]), gate("RYY", a, b, params=[p[7]]),
               gate("RZZ", a, b, params=[p[8]])]
            + _u(a, p[9:12], style) + _u(b, p[12:15], style))


def pool_gates(p, control, target, style="generic"):
    """Gate list of one pooling block; the target's final rotation reuses the control's angles."""
    if len(p) != POOL_PARAMS[style]:
        raise InputError(f"pooling block takes {POOL_PARAMS[style]} parameters, got {len(p)}")
    if style == "reduced":
        pc, pre_t = p[0:2], [gate("RY", target, params=[p[2]])]
    else:
        k = len(p) // 2
        pc, pre_t = p[0:k], _u(target, p[k:], style)
    return (_u(control, pc, style) + pre_t + [gate("CNOT", control, target)]
            + _u(target, pc, style, dagger=True))


def conv_block(theta, style="generic"):
    """Two-qubit circuit of a convolution block with concrete angles."""
    return Circuit(2, conv_gates([float(t) for t in theta], 0, 1, style), n_params=0)


def pool_block(theta, style="generic"):
    """Two-qubit pooling circuit; qubit 0 is the control, qubit 1 the kept target."""
    return Circuit(2, pool_gates([float(t) for t in theta], 0, 1, style), n_params=0)


@dataclass(frozen=True)
class QcnnSpec:
    n_qubits: int
    n_layers: int
    variant: str = "schwinger"
    shared_params: bool | None = None
    readout_scale: float = 1.0

    def __post_init__(self):
        _style(self.variant)
        if self.shared_params is None:
            object.__setattr__(self, "shared_params", self.variant != "z2")
        if self.n_layers < 1 or self.n_qubits % (2 ** self.n_layers):
            raise InputError(
                f"{self.n_qubits} qubits cannot be halved {self.n_layers} times")

    @property
    def readout_qubit(self):
        return self.n_qubits - 1

    @property
    def style(self):
        return _style(self.variant)

    @property
    def closed_boundary(self):
        return self.variant != "schwinger"

    def layout(self):
        """Per layer: ``(conv pairs, pool (control, target) pairs)``."""
        active = list(range(self.n_qubits))
        layers = []
        for _ in range(self.n_layers):
            m = len(active)
            conv = [(active[i], active[i + 1]) for i in range(0, m - 1, 2)]
            conv += [(active[i], active[i + 1]) for i in range(1, m - 1, 2)]
            if self.closed_boundary and m > 2:
                conv.append((active[-1], active[0]))
            half = m // 2
            if self.variant.startswith("qps"):
                pool = [(active[k], active[k + half]) for k in range(half)]
            else:
                pool = [(active[i], active[i + 1]) for i in range(0, m, 2)]
            layers.append((conv, pool))
            active = [t for _, t in pool]
        return layers

    @property
    def n_params(self):
        c, p = CONV_PARAMS[self.style], POOL_PARAMS[self.style]
        if self.shared_params:
            return (c + p) * self.n_layers
        return sum(c * len(conv) + p * len(pool) for conv, pool in self.layout())


def qcnn_circuit(spec):
    style = spec.style
    nc, npool = CONV_PARAMS[style], POOL_PARAMS[style]
    c = Circuit(spec.n_qubits, n_params=spec.n_params, name=f"qcnn-{spec.variant}")
    k = 0

    def take(count):
        nonlocal k
        out = [Param(k + i) for i in range(count)]
        k += count
        return out

    for conv, pool in spec.layout():
        if spec.shared_params:
            pc, pp = take(nc), take(npool)
        for a, b in conv:
            c.extend(conv_gates(pc if spec.shared_params else take(nc), a, b, style))
        for ctrl, tgt in pool:
            c.extend(pool_gates(pp if spec.shared_params else take(npool), ctrl, tgt, style))
    return c.validate()


@dataclass(frozen=True)
class HeaSpec:
    n_qubits: int
    n_layers: int

    def __post_init__(self):
        if self.n_qubits < 2 or self.n_layers < 0:
            raise InputError("hardware-efficient ansatz needs >= 2 qubits and >= 0 layers")

    @property
    def n_params(self):
        return 2 * self.n_qubits * (self.n_layers + 1)


def hea_circuit(spec):
    n = spec.n_qubits
    c = Circuit(n, n_params=spec.n_params, name="hea")
    k = 0

    def rotations():
        nonlocal k
        for q in range(n):
            c.append(gate("RY", q, params=[Param(k)]))
            c.append(gate("RZ", q, params=[Param(k + 1)]))
            k += 2

    rotations()
    ring = [(q, (q + 1) % n) for q in range(n)] if n > 2 else [(0, 1)]
    for _ in range(spec.n_layers):
        for a, b in ring:
            c.append(gate("CZ", a, b))
        rotations()
    return c.validate()
