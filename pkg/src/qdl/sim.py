"""Noiseless statevector simulation.

Bit-order convention used everywhere in the package: qubit 0 is the leftmost
character of a basis label and the amplitude index is the big-endian integer
of that label, i.e. qubit ``q`` is bit ``n - 1 - q`` of the index.  ``|01>``
on two qubits is therefore amplitude index 1.

Gates act in place on amplitude arrays through stride arithmetic: the flat
array is reshaped so the target qubit(s) become explicit length-2 axes and the
local 2x2 / 4x4 unitary is contracted against them.  Dense ``2^n x 2^n``
matrices are only ever built by :func:`dense_unitary_oracle`, which exists to
check the fast path.
"""

from __future__ import annotations

import cmath
import math

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InputError, SizeLimitError

UNITARY_ATOL = 1e-10

ORACLE_MAX_QUBITS = 10


class Param(NamedTuple):
    """Reference to a free circuit parameter: the gate angle is ``scale * theta[index]``."""

    index: int
    scale: float = 1.0


_ARITY = {
    "X": (1, 0), "Y": (1, 0), "Z": (1, 0), "H": (1, 0),
    "RX": (1, 1), "RY": (1, 1), "RZ": (1, 1),
    "U": (1, 3),
    "RXX": (2, 1), "RYY": (2, 1), "RZZ": (2, 1),
    "CNOT": (2, 0), "CZ": (2, 0),
    "MATRIX": (None, 0),
    "CMATRIX": (2, 0),
}

GATE_KINDS = tuple(_ARITY)

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_XX = np.kron(_X, _X)
_YY = np.kron(_Y, _Y)
_ZZ = np.kron(_Z, _Z)
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)


def is_unitary(m, atol=UNITARY_ATOL):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=atol, rtol=0)


def _rot(pauli, t):
    return np.cos(t / 2) * np.eye(pauli.shape[0]) - 1j * np.sin(t / 2) * pauli


def _rx(t):
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _ry(t):
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def u3_matrix(t1, t2, t3):
    """Generic single-qubit gate used by the convolution and pooling blocks."""
    c, s = np.cos(t1 / 2), np.sin(t1 / 2)
    return np.array(
        [[c, -np.exp(1j * t3) * s],
         [np.exp(1j * t2) * s, np.exp(1j * (t2 + t3)) * c]],
        dtype=complex,
    )


@dataclass(frozen=True, eq=False)
class Gate:
    """One gate of a circuit.

    ``params`` holds floats (fixed angles) or :class:`Param` references to the
    owning circuit's parameter vector.  ``matrix`` is used by the ``MATRIX``
    and ``CMATRIX`` kinds; for ``CMATRIX`` the first target is the control and
    the 2x2 matrix acts on the second target when the control equals
    ``control_value``.  ``dagger`` replaces the gate by its adjoint.
    """

    kind: str
    targets: tuple
    params: tuple = ()
    matrix: np.ndarray | None = None
    dagger: bool = False
    control_value: int = 1

    def __post_init__(self):
        if self.kind not in _ARITY:
            raise InputError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "params", tuple(self.params))
        n_targets, n_params = _ARITY[self.kind]
        if self.kind == "MATRIX":
            if self.matrix is None:
                raise InputError("MATRIX gate needs an explicit matrix")
            n_targets = {2: 1, 4: 2}.get(np.shape(self.matrix)[0])
            if n_targets is None:
                raise InputError("explicit matrices must be 2x2 or 4x4")
        if self.kind == "CMATRIX" and (self.matrix is None or np.shape(self.matrix) != (2, 2)):
            raise InputError("CMATRIX gate needs a 2x2 matrix")
        if len(self.targets) != n_targets:
            raise InputError(f"{self.kind} acts on {n_targets} qubit(s), got targets {self.targets}")
        if len(set(self.targets)) != len(self.targets) or min(self.targets) < 0:
            raise InputError(f"invalid targets {self.targets}")
        if len(self.params) != n_params:
            raise InputError(f"{self.kind} takes {n_params} parameter(s), got {len(self.params)}")
        if self.matrix is not None:
            m = np.array(self.matrix, dtype=complex)
            if not is_unitary(m):
                raise InputError(f"{self.kind} matrix is not unitary within {UNITARY_ATOL}")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        if self.control_value not in (0, 1):
            raise InputError("control_value must be 0 or 1")

    @property
    def is_concrete(self):
        return not any(isinstance(p, Param) for p in self.params)

    def values(self, theta=None):
        """Concrete angles of this gate for the circuit parameters ``theta``."""
        out = []
        for p in self.params:
            if isinstance(p, Param):
                if theta is None:
                    raise InputError(f"{self.kind} gate has unbound parameter {p.index}")
                out.append(p.scale * theta[p.index])
            else:
                out.append(float(p))
        return out

    def bind(self, theta):
        return Gate(self.kind, self.targets, tuple(self.values(theta)), self.matrix,
                    self.dagger, self.control_value)

    def unitary(self, values=None):
        """Local unitary on ``targets`` (first target = most significant bit)."""
        v = self.values() if values is None else values
        k = self.kind
        if k == "X":
            m = _X
        elif k == "Y":
            m = _Y
        elif k == "Z":
            m = _Z
        elif k == "H":
            m = _H
        elif k == "RX":
            m = _rx(v[0])
        elif k == "RY":
            m = _ry(v[0])
        elif k == "RZ":
            ph = cmath.exp(-0.5j * v[0])
            m = np.array([[ph, 0], [0, ph.conjugate()]])
        elif k == "U":
            m = u3_matrix(*v)
        elif k == "RXX":
            m = _rot(_XX, v[0])
        elif k == "RYY":
            m = _rot(_YY, v[0])
        elif k == "RZZ":
            m = _rot(_ZZ, v[0])
        elif k == "CNOT":
            m = _CNOT
        elif k == "CZ":
            m = _CZ
        elif k == "MATRIX":
            m = self.matrix
        else:  # CMATRIX
            m = np.eye(4, dtype=complex)
            sl = slice(0, 2) if self.control_value == 0 else slice(2, 4)
            m[sl, sl] = self.matrix
        return m.conj().T if self.dagger else m

    def describe(self):
        parts = [self.kind + ("^dg" if self.dagger else ""), " ".join(map(str, self.targets))]
        for p in self.params:
            parts.append(f"p{p.index}*{p.scale:g}" if isinstance(p, Param) else f"{p:.12g}")
        if self.kind == "CMATRIX":
            parts.append(f"ctrl={self.control_value}")
        return " ".join(parts)


def shifted(gate, offset=0, param_offset=0, qubit_map=None):
    """Copy of ``gate`` with relabelled qubits and/or shifted parameter indices."""
    targets = tuple(qubit_map[t] if qubit_map is not None else t + offset for t in gate.targets)
    params = tuple(Param(p.index + param_offset, p.scale) if isinstance(p, Param) else p
                   for p in gate.params)
    return Gate(gate.kind, targets, params, gate.matrix, gate.dagger, gate.control_value)


class Circuit:
    """Ordered gate list on ``n_qubits`` qubits with ``n_params`` free parameters."""

    def __init__(self, n_qubits, gates=(), n_params=None, name=""):
        self.n_qubits = int(n_qubits)
        self.gates = []
        self.name = name
        self._declared = n_params
        for g in gates:
            self.append(g)

    def append(self, gate):
        if max(gate.targets) >= self.n_qubits:
            raise InputError(f"gate targets {gate.targets} outside {self.n_qubits}-qubit circuit")
        self.gates.append(gate)
        return self

    def extend(self, gates):
        for g in gates:
            self.append(g)
        return self

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def _used_slots(self):
        return {p.index for g in self.gates for p in g.params if isinstance(p, Param)}

    @property
    def n_params(self):
        if self._declared is not None:
            return self._declared
        used = self._used_slots()
        return max(used) + 1 if used else 0

    @property
    def param_slots(self):
        """Map ``slot -> [(gate index, angle position, scale), ...]``."""
        slots = {}
        for gi, g in enumerate(self.gates):
            for pi, p in enumerate(g.params):
                if isinstance(p, Param):
                    slots.setdefault(p.index, []).append((gi, pi, p.scale))
        return dict(sorted(slots.items()))

    def validate(self):
        used = self._used_slots()
        if used != set(range(self.n_params)):
            raise InputError(
                f"circuit declares {self.n_params} parameters but uses slots {sorted(used)}")
        return self

    def bind(self, theta=()):
        theta = _check_params(self, theta)
        return [g.bind(theta) for g in self.gates]

    def embed(self, n_qubits, offset=0):
        """Same circuit acting on qubits ``offset..offset+self.n_qubits-1`` of a larger register."""
        if offset < 0 or offset + self.n_qubits > n_qubits:
            raise InputError("embedding does not fit")
        return Circuit(n_qubits, [shifted(g, offset) for g in self.gates],
                       n_params=self._declared, name=self.name)

    def compose(self, other):
        """``self`` followed by ``other``; ``other``'s parameters are appended after ours."""
        if other.n_qubits != self.n_qubits:
            raise InputError("qubit counts differ")
        k = self.n_params
        gates = self.gates + [shifted(g, 0, k) for g in other.gates]
        return Circuit(self.n_qubits, gates, n_params=k + other.n_params)

    def to_text(self):
        """Deterministic one-gate-per-line dump used by the golden layout files."""
        head = f"# {self.name or 'circuit'} n_qubits={self.n_qubits} n_params={self.n_params}"
        return "\n".join([head] + [g.describe() for g in self.gates]) + "\n"


def _check_params(circuit, theta):
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != circuit.n_params:
        raise InputError(f"expected {circuit.n_params} parameters, got {theta.size}")
    return theta


class StateVector:
    """Pure state of ``n_qubits`` qubits stored as ``2**n_qubits`` complex128 amplitudes."""

    __slots__ = ("n_qubits", "amplitudes")

    def __init__(self, amplitudes, n_qubits=None):
        amps = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        n = int(round(np.log2(amps.size))) if amps.size else -1
        if n < 0 or 2 ** n != amps.size:
            raise InputError("amplitude count must be a power of two")
        if n_qubits is not None and n_qubits != n:
            raise InputError(f"{amps.size} amplitudes do not describe {n_qubits} qubits")
        self.n_qubits = n
        self.amplitudes = amps

    def copy(self):
        return StateVector(self.amplitudes.copy())

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self):
        return np.abs(self.amplitudes) ** 2

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits})"


def basis_index(bitstring):
    """Big-endian index of a basis label such as ``"0101"``."""
    return int("".join(str(int(b)) for b in bitstring), 2) if len(bitstring) else 0


def init_basis_state(n_qubits, bitstring):
    bits = [int(b) for b in bitstring]
    if len(bits) != n_qubits:
        raise InputError(f"bitstring of length {len(bits)} for {n_qubits} qubits")
    if any(b not in (0, 1) for b in bits):
        raise InputError("bitstring entries must be 0 or 1")
    amps = np.zeros(2 ** n_qubits, dtype=np.complex128)
    amps[basis_index(bits)] = 1.0
    return StateVector(amps)


# ---------------------------------------------------------------------------
# kernels: arr has shape (batch, 2**n) and is updated in place


def _view1(arr, n, q):
    return arr.reshape(arr.shape[0], 1 << q, 2, 1 << (n - q - 1))


def _view2(arr, n, a, b):
    # a < b
    return arr.reshape(arr.shape[0], 1 << a, 2, 1 << (b - a - 1), 2, 1 << (n - b - 1))


def _apply_1q(v, m, axis=2):
    lead = (slice(None),) * axis
    a0 = v[lead + (0,)]
    a1 = v[lead + (1,)]
    t0 = m[0, 0] * a0 + m[0, 1] * a1
    a1 *= m[1, 1]
    a1 += m[1, 0] * a0
    a0[...] = t0


def _sub(v, a_first, ia, ib):
    # index the (a, b) axes of a 6-d two-qubit view; a_first: targets[0] is the lower qubit
    return v[:, :, ia, :, ib, :] if a_first else v[:, :, ib, :, ia, :]


def apply_gate_inplace(arr, n, gate, values=None):
    """Apply ``gate`` to every row of ``arr`` (shape ``(batch, 2**n)``) in place."""
    k = gate.kind
    t = gate.targets
    if max(t) >= n:
        raise InputError(f"gate targets {t} out of range for {n} qubits")
    if values is None:
        values = gate.values()
    if len(t) == 1:
        v = _view1(arr, n, t[0])
        if k == "X":
            tmp = v[:, :, 0, :].copy()
            v[:, :, 0, :] = v[:, :, 1, :]
            v[:, :, 1, :] = tmp
        elif k == "Z":
            v[:, :, 1, :] *= -1
        elif k == "RZ":
            ph = np.exp(-0.5j * values[0])
            if gate.dagger:
                ph = ph.conjugate()
            v[:, :, 0, :] *= ph
            v[:, :, 1, :] *= ph.conjugate()
        else:
            _apply_1q(v, gate.unitary(values))
        return arr
    a, b = t
    lo, hi = (a, b) if a < b else (b, a)
    v = _view2(arr, n, lo, hi)
    first = a < b
    if k == "CNOT":
        s0 = _sub(v, first, 1, 0)
        s1 = _sub(v, first, 1, 1)
        tmp = s0.copy()
        s0[...] = s1
        s1[...] = tmp
    elif k == "CZ":
        _sub(v, first, 1, 1)[...] *= -1
    elif k == "RZZ":
        ph = np.exp(-0.5j * values[0])
        if gate.dagger:
            ph = ph.conjugate()
        v[:, :, 0, :, 0, :] *= ph
        v[:, :, 1, :, 1, :] *= ph
        v[:, :, 0, :, 1, :] *= ph.conjugate()
        v[:, :, 1, :, 0, :] *= ph.conjugate()
    elif k == "CMATRIX":
        m = gate.matrix.conj().T if gate.dagger else gate.matrix
        c = gate.control_value
        # control is targets[0]; on the control slice this is a 1q problem
        if first:
            _apply_1q(v[:, :, c, :, :, :], m, axis=3)
        else:
            _apply_1q(v[:, :, :, :, c, :], m, axis=2)
    else:
        m = gate.unitary(values).reshape(2, 2, 2, 2)
        if not first:
            m = m.transpose(1, 0, 3, 2)
        v[...] = np.tensordot(m, v, axes=([2, 3], [2, 4])).transpose(2, 3, 0, 4, 1, 5)
    return arr


def run_circuit(states, circuit, params=()):
    """Apply ``circuit`` to a batch of amplitude rows and return a new array.

    ``states`` may be one amplitude vector (shape ``(2**n,)``) or a batch
    (shape ``(batch, 2**n)``); the output has the same shape.
    """
    arr = np.array(states, dtype=np.complex128)
    single = arr.ndim == 1
    arr = arr.reshape(1 if single else arr.shape[0], -1)
    n = circuit.n_qubits
    if arr.shape[1] != 2 ** n:
        raise InputError(f"states have {arr.shape[1]} amplitudes, circuit acts on {n} qubits")
    theta = _check_params(circuit, params)
    for g in circuit.gates:
        apply_gate_inplace(arr, n, g, g.values(theta))
    return arr[0] if single else arr


# ---------------------------------------------------------------------------
# fused execution: the circuit structure is compiled once into segments, and
# each call only rebuilds small matrices / phase vectors from the parameters

_DIAG_KINDS = ("Z", "RZ", "RZZ", "CZ")


@lru_cache(maxsize=32)
def _z_signs(n):
    idx = np.arange(2 ** n)
    return np.array([1.0 - 2.0 * ((idx >> (n - 1 - q)) & 1) for q in range(n)])


def _diag_phase(g, values, zs):
    """Phase vector ``phi`` with ``diag(U) = exp(i phi)`` for a diagonal gate."""
    k = g.kind
    t = g.targets
    if k == "RZ":
        phi = -0.5 * values[0] * zs[t[0]]
    elif k == "RZZ":
        phi = -0.5 * values[0] * zs[t[0]] * zs[t[1]]
    elif k == "Z":
        phi = 0.5 * np.pi * (1 - zs[t[0]])
    else:  # CZ
        phi = 0.25 * np.pi * (1 - zs[t[0]]) * (1 - zs[t[1]])
    return -phi if g.dagger else phi


def _swap_local(m):
    """Two-qubit matrix with the roles of its qubits exchanged."""
    return m.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)


def _apply_2q(arr, n, pair, m):
    a, b = pair
    lo, hi = (a, b) if a < b else (b, a)
    v = _view2(arr, n, lo, hi)
    m = m.reshape(2, 2, 2, 2)
    if a > b:
        m = m.transpose(1, 0, 3, 2)
    v[...] = np.tensordot(m, v, axes=([2, 3], [2, 4])).transpose(2, 3, 0, 4, 1, 5)


def _kron2(a, b):
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(4, 4)


class Program:
    """Parameter-independent compilation of a circuit into fused segments.

    Segments are runs of diagonal gates (applied as one phase vector), blocks
    of gates confined to one qubit pair (one 4x4 matrix) and leftover
    single-qubit products.  Gate order is preserved up to commuting gates on
    disjoint qubits, so results agree with gate-by-gate execution to rounding.
    """

    def __init__(self, circuit, min_diag_run=3):
        self.n_qubits = circuit.n_qubits
        self.n_params = circuit.n_params
        gates = circuit.gates
        segs = []
        pending = {}
        block = None  # [pair, gates]

        def flush_block():
            nonlocal block
            if block is not None:
                segs.append(("block", tuple(block[0]), tuple(block[1])))
                block = None

        def flush_pending(qs=None):
            for q in sorted(pending if qs is None else [q for q in qs if q in pending]):
                segs.append(("one", q, tuple(pending.pop(q))))

        i = 0
        while i < len(gates):
            j = i
            while j < len(gates) and gates[j].kind in _DIAG_KINDS:
                j += 1
            if j - i >= min_diag_run:
                flush_block()
                flush_pending()
                segs.append(("diag", None, tuple(gates[i:j])))
                i = j
                continue
            g = gates[i]
            t = g.targets
            if len(t) == 1:
                if block is not None and t[0] in block[0]:
                    block[1].append(g)
                else:
                    pending.setdefault(t[0], []).append(g)
            elif block is not None and set(t) == set(block[0]):
                block[1].append(g)
            else:
                flush_block()
                block = [t, [g for q in t for g in pending.pop(q, [])] + [g]]
            i += 1
        flush_block()
        flush_pending()
        self.segments = segs

    def run(self, arr, theta):
        n = self.n_qubits
        for kind, where, gs in self.segments:
            if kind == "diag":
                zs = _z_signs(n)
                phi = np.zeros(2 ** n)
                for g in gs:
                    phi += _diag_phase(g, g.values(theta), zs)
                arr *= np.exp(1j * phi)
            elif kind == "block":
                # single-qubit factors are collected per side and folded in lazily
                m = None
                side = {where[0]: None, where[1]: None}
                for g in gs:
                    u = g.unitary(g.values(theta))
                    if len(g.targets) == 1:
                        q = g.targets[0]
                        side[q] = u if side[q] is None else u @ side[q]
                        continue
                    if side[where[0]] is not None or side[where[1]] is not None:
                        k = _kron2(side[where[0]] if side[where[0]] is not None else _I2,
                                   side[where[1]] if side[where[1]] is not None else _I2)
                        m = k if m is None else k @ m
                        side = {where[0]: None, where[1]: None}
                    u = u if g.targets == where else _swap_local(u)
                    m = u if m is None else u @ m
                if side[where[0]] is not None or side[where[1]] is not None:
                    k = _kron2(side[where[0]] if side[where[0]] is not None else _I2,
                               side[where[1]] if side[where[1]] is not None else _I2)
                    m = k if m is None else k @ m
                _apply_2q(arr, n, where, m)
            else:
                m = _I2
                for g in gs:
                    m = g.unitary(g.values(theta)) @ m
                _apply_1q(_view1(arr, n, where), m)
        return arr


def compile_circuit(circuit):
    """Compiled program for ``circuit``, cached on the circuit until its gate list changes."""
    cached = getattr(circuit, "_program", None)
    if cached is None or cached[0] != len(circuit.gates):
        cached = (len(circuit.gates), Program(circuit))
        circuit._program = cached
    return cached[1]


def run_program(states, program, params=()):
    """Like :func:`run_circuit` but executes a compiled :class:`Program`."""
    arr = np.array(states, dtype=np.complex128)
    single = arr.ndim == 1
    arr = arr.reshape(1 if single else arr.shape[0], -1)
    if arr.shape[1] != 2 ** program.n_qubits:
        raise InputError(f"states have {arr.shape[1]} amplitudes, "
                         f"program acts on {program.n_qubits} qubits")
    theta = np.asarray(params, dtype=float).reshape(-1)
    if theta.size != program.n_params:
        raise InputError(f"expected {program.n_params} parameters, got {theta.size}")
    program.run(arr, theta)
    return arr[0] if single else arr


def apply_gate(state, gate):
    if not gate.is_concrete:
        raise InputError("gate has unbound parameters")
    arr = state.amplitudes.copy().reshape(1, -1)
    apply_gate_inplace(arr, state.n_qubits, gate)
    return StateVector(arr[0])


def apply_circuit(state, circuit, params=()):
    if circuit.n_qubits != state.n_qubits:
        raise InputError(f"circuit on {circuit.n_qubits} qubits, state on {state.n_qubits}")
    return StateVector(run_circuit(state.amplitudes, circuit, params))


def _observable_matrix(observable, n_qubits):
    if observable.n_qubits != n_qubits:
        raise InputError(f"observable on {observable.n_qubits} qubits, state on {n_qubits}")
    if not observable.is_hermitian:
        raise InputError("observable is not Hermitian")
    return observable.to_sparse()


def expectation(state, observable):
    """``<psi|O|psi>`` for a Hermitian :class:`~qdl.operators.PauliSum`."""
    if not isinstance(state, StateVector):
        state = StateVector(state)
    mat = _observable_matrix(observable, state.n_qubits)
    psi = state.amplitudes
    val = np.vdot(psi, mat @ psi)
    scale = max(1.0, abs(val))
    if abs(val.imag) > 1e-10 * scale:
        raise InputError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


def expectation_batch(states, observable):
    """Row-wise expectation values for an array of shape ``(batch, 2**n)``."""
    states = np.asarray(states)
    n = int(round(np.log2(states.shape[-1])))
    mat = _observable_matrix(observable, n)
    return np.einsum("bi,bi->b", states.conj(), (mat @ states.T).T).real


def z_expectations(states, n_qubits):
    """``<Z_q>`` for every qubit ``q``; ``states`` is one vector or a batch."""
    states = np.asarray(states)
    probs = np.abs(states.reshape(-1, 2 ** n_qubits)) ** 2
    out = np.empty((probs.shape[0], n_qubits))
    for q in range(n_qubits):
        v = probs.reshape(probs.shape[0], 1 << q, 2, -1)
        out[:, q] = v[:, :, 0, :].sum(axis=(1, 2)) - v[:, :, 1, :].sum(axis=(1, 2))
    return out[0] if states.ndim == 1 else out


def inner_product(a, b):
    if a.n_qubits != b.n_qubits:
        raise InputError("states have different qubit counts")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def embed_unitary(local, targets, n_qubits):
    """Dense ``2^n x 2^n`` matrix of a local unitary acting on ``targets``.

    Built entry by entry from the basis labels: ``<i|U|j>`` is the local matrix
    element between the target bits of ``i`` and ``j`` when all other bits agree.
    """
    dim = 2 ** n_qubits
    idx = np.arange(dim)
    k = len(targets)
    local_idx = np.zeros(dim, dtype=np.int64)
    tmask = 0
    for j, t in enumerate(targets):
        bit = n_qubits - 1 - t
        local_idx |= ((idx >> bit) & 1) << (k - 1 - j)
        tmask |= 1 << bit
    rest = idx & ~tmask
    same = rest[:, None] == rest[None, :]
    return np.where(same, np.asarray(local)[local_idx[:, None], local_idx[None, :]], 0)


def dense_unitary_oracle(circuit, params=(), max_qubits=ORACLE_MAX_QUBITS):
    """Full unitary of ``circuit`` as a product of embedded dense gate matrices."""
    n = circuit.n_qubits
    if n > max_qubits:
        raise SizeLimitError(f"dense oracle refused: {n} qubits > cap {max_qubits}")
    theta = _check_params(circuit, params)
    u = np.eye(2 ** n, dtype=complex)
    for g in circuit.gates:
        u = embed_unitary(g.unitary(g.values(theta)), g.targets, n) @ u
    return u


# convenience constructors -------------------------------------------------


def gate(kind, *targets, params=(), matrix=None, dagger=False, control_value=1):
    return Gate(kind, tuple(targets), tuple(params), matrix, dagger, control_value)


def random_circuit(n_qubits, n_gates, rng):
    """Random concrete circuit mixing every gate family (used by the oracle checks)."""
    from scipy.stats import unitary_group

    one = ["X", "Y", "Z", "H", "RX", "RY", "RZ", "U", "MATRIX1"]
    two = ["RXX", "RYY", "RZZ", "CNOT", "CZ", "MATRIX2", "CMATRIX"]
    kinds = one + (two if n_qubits > 1 else [])
    c = Circuit(n_qubits)
    for _ in range(n_gates):
        k = kinds[rng.integers(len(kinds))]
        dagger = bool(rng.integers(2))
        if k in one:
            q = int(rng.integers(n_qubits))
            if k == "MATRIX1":
                c.append(gate("MATRIX", q, matrix=unitary_group.rvs(2, random_state=rng), dagger=dagger))
            else:
                npar = _ARITY[k][1]
                c.append(gate(k, q, params=rng.uniform(-np.pi, np.pi, npar), dagger=dagger))
        else:
            a, b = (int(x) for x in rng.choice(n_qubits, 2, replace=False))
            if k == "MATRIX2":
                c.append(gate("MATRIX", a, b, matrix=unitary_group.rvs(4, random_state=rng), dagger=dagger))
            elif k == "CMATRIX":
                c.append(gate("CMATRIX", a, b, matrix=unitary_group.rvs(2, random_state=rng),
                              dagger=dagger, control_value=int(rng.integers(2))))
            else:
                npar = _ARITY[k][1]
                c.append(gate(k, a, b, params=rng.uniform(-np.pi, np.pi, npar), dagger=dagger))
    return c
