"""Independent reference implementations used only by the tests.

Everything here is built from ``np.kron`` products of 2x2 Pauli matrices and
``scipy.linalg.expm``; nothing is imported from the package's kernels, so an
agreement between the two routes is a genuine cross-check.
"""

import math
from functools import reduce
from itertools import product

import numpy as np
from scipy.linalg import expm

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron_all(mats):
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def op(n, ops):
    """Tensor product with ``ops[q]`` on qubit ``q`` (qubit 0 leftmost) and identities elsewhere."""
    return kron_all([ops.get(q, I2) for q in range(n)])


def pauli_word(word):
    return kron_all([PAULI[c] for c in word])


def embed(local, targets, n):
    """Embed a 2x2 or 4x4 matrix by expanding it in the Pauli basis."""
    k = len(targets)
    out = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for letters in product("IXYZ", repeat=k):
        p = kron_all([PAULI[c] for c in letters])
        coeff = np.trace(p.conj().T @ local) / 2 ** k
        if abs(coeff) > 1e-15:
            out += coeff * op(n, {t: PAULI[c] for t, c in zip(targets, letters)})
    return out


def rot(pauli, t):
    return expm(-0.5j * t * pauli)


def u3(t1, t2, t3):
    # U3 = e^{i(t2+t3)/2} RZ(t2) RY(t1) RZ(t3)
    return np.exp(0.5j * (t2 + t3)) * rot(Z, t2) @ rot(Y, t1) @ rot(Z, t3)


def local_matrix(g, values):
    k = g.kind
    fixed = {"X": X, "Y": Y, "Z": Z, "H": (X + Z) / math.sqrt(2)}
    if k in fixed:
        m = fixed[k]
    elif k in ("RX", "RY", "RZ"):
        m = rot(PAULI[k[1]], values[0])
    elif k == "U":
        m = u3(*values)
    elif k in ("RXX", "RYY", "RZZ"):
        m = rot(np.kron(PAULI[k[1]], PAULI[k[1]]), values[0])
    elif k == "CNOT":
        m = np.kron((I2 + Z) / 2, I2) + np.kron((I2 - Z) / 2, X)
    elif k == "CZ":
        m = np.kron((I2 + Z) / 2, I2) + np.kron((I2 - Z) / 2, Z)
    elif k == "MATRIX":
        m = np.asarray(g.matrix)
    elif k == "CMATRIX":
        on, off = ((I2 + Z) / 2, (I2 - Z) / 2) if g.control_value == 0 else ((I2 - Z) / 2, (I2 + Z) / 2)
        m = np.kron(on, np.asarray(g.matrix)) + np.kron(off, I2)
    else:
        raise ValueError(k)
    return m.conj().T if g.dagger else m


def circuit_unitary(circuit, theta=()):
    n = circuit.n_qubits
    theta = np.asarray(theta, dtype=float)
    u = np.eye(2 ** n, dtype=complex)
    for g in circuit.gates:
        vals = [p.scale * theta[p.index] if hasattr(p, "index") else float(p) for p in g.params]
        u = embed(local_matrix(g, vals), g.targets, n) @ u
    return u


def schwinger_dense(n, ag=2.0, mass=0.0, theta=math.pi):
    """Schwinger Hamiltonian written out with Kronecker products."""
    a = ag
    J, w = a / 2, 1 / (2 * a)
    dim = 2 ** n
    h = np.zeros((dim, dim), dtype=complex)
    link = theta / (2 * math.pi) * np.eye(dim)
    for i in range(n - 1):
        link = link + (op(n, {i: Z}) + (-1) ** i * np.eye(dim)) / 2
        h += J * link @ link
    for i in range(n - 1):
        h += w / 2 * (op(n, {i: X, i + 1: X}) + op(n, {i: Y, i + 1: Y}))
    for i in range(n):
        h += mass / 2 * (-1) ** i * op(n, {i: Z})
    return h


def z2_dense(n_sites=2, J=1.0, f=0.0, m=0.0):
    nq = 2 * n_sites
    h = np.zeros((2 ** nq, 2 ** nq), dtype=complex)
    for s in range(n_sites):
        a, link, b = 2 * s, 2 * s + 1, 2 * ((s + 1) % n_sites)
        h += -J / 2 * (op(nq, {a: X, link: Z, b: X}) + op(nq, {a: Y, link: Z, b: Y}))
        h += -f * op(nq, {link: X})
        h += m / 2 * (-1) ** s * op(nq, {a: Z})
    return h


def z2_gauss_dense(s, n_sites=2):
    nq = 2 * n_sites
    left = 2 * ((s - 1) % n_sites) + 1
    return -op(nq, {left: X, 2 * s: Z, 2 * s + 1: X})


def total_z_dense(n):
    return sum(op(n, {q: Z}) for q in range(n))


def basis(n, bits):
    v = np.zeros(2 ** n, dtype=complex)
    v[int(bits, 2)] = 1
    return v
