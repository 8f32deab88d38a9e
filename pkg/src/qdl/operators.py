"""Pauli-string algebra and the lattice Hamiltonians built from it.

Schwinger-model quantities are in units ``g = 1``; Z2 gauge-theory quantities
in units of the hopping ``J``.  Qubit layout for the Z2 chain is
``[site 0, link (0,1), site 1, link (1,2), ...]`` with periodic boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .errors import InputError, SizeLimitError

DENSE_MAX_QUBITS = 12
DENSE_MAX_DIM = 4096
ZERO_TOL = 1e-14

# single-letter products: (a, b) -> (phase, letter) with a*b = phase * letter
_PRODUCT = {}
for _a in "IXYZ":
    _PRODUCT[("I", _a)] = (1, _a)
    _PRODUCT[(_a, "I")] = (1, _a)
    _PRODUCT[(_a, _a)] = (1, "I")
for _a, _b, _c in (("X", "Y", "Z"), ("Y", "Z", "X"), ("Z", "X", "Y")):
    _PRODUCT[(_a, _b)] = (1j, _c)
    _PRODUCT[(_b, _a)] = (-1j, _c)


def pauli_product(a, b):
    """Product of two Pauli words: returns ``(phase, word)`` with ``a b = phase * word``."""
    if len(a) != len(b):
        raise InputError("Pauli words of different length")
    phase = 1
    out = []
    for x, y in zip(a, b):
        p, c = _PRODUCT[(x, y)]
        phase *= p
        out.append(c)
    return phase, "".join(out)


class PauliString(NamedTuple):
    coefficient: complex
    letters: str


def _masks(letters):
    n = len(letters)
    x = z = ny = 0
    for q, c in enumerate(letters):
        bit = 1 << (n - 1 - q)
        if c in "XY":
            x |= bit
        if c in "ZY":
            z |= bit
        if c == "Y":
            ny += 1
    return x, z, ny


def pauli_action(indices, letters):
    """Image of basis states under a Pauli word: ``P|b> = phase_b |b ^ x>``."""
    x, z, ny = _masks(letters)
    indices = np.asarray(indices, dtype=np.int64)
    sign = 1 - 2 * (np.bitwise_count(indices & z) & 1).astype(np.int64)
    return indices ^ x, (1j ** ny) * sign


class PauliSum:
    """Weighted sum of Pauli words on ``n_qubits`` qubits.

    Always canonical: repeated words are merged and (near-)zero terms dropped.
    Instances are treated as immutable.
    """

    def __init__(self, n_qubits, terms=()):
        self.n_qubits = int(n_qubits)
        acc = {}
        items = terms.items() if isinstance(terms, dict) else ((t[1], t[0]) for t in terms)
        for letters, coeff in items:
            letters = letters.upper()
            if len(letters) != self.n_qubits or set(letters) - set("IXYZ"):
                raise InputError(f"bad Pauli word {letters!r} for {self.n_qubits} qubits")
            acc[letters] = acc.get(letters, 0) + coeff
        self._terms = {}
        for k in sorted(acc):
            c = complex(acc[k])
            if abs(c) > ZERO_TOL:
                self._terms[k] = c.real if c.imag == 0 else c

    # construction helpers
    @classmethod
    def single(cls, n_qubits, ops, coeff=1.0):
        """One term from ``{qubit: letter}``, e.g. ``PauliSum.single(4, {0: "X", 2: "X"})``."""
        letters = ["I"] * n_qubits
        for q, c in ops.items():
            if not 0 <= q < n_qubits:
                raise InputError(f"qubit {q} out of range")
            letters[q] = c
        return cls(n_qubits, [(coeff, "".join(letters))])

    @classmethod
    def identity(cls, n_qubits, coeff=1.0):
        return cls(n_qubits, [(coeff, "I" * n_qubits)])

    @property
    def terms(self):
        return [PauliString(c, k) for k, c in self._terms.items()]

    def __len__(self):
        return len(self._terms)

    def coefficient(self, letters):
        return self._terms.get(letters, 0.0)

    @property
    def is_hermitian(self):
        return all(abs(complex(c).imag) <= ZERO_TOL for c in self._terms.values())

    # algebra
    def _check(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        if other.n_qubits != self.n_qubits:
            raise InputError("operands act on different qubit counts")
        return other

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = PauliSum.identity(self.n_qubits, other)
        if self._check(other) is NotImplemented:
            return NotImplemented
        merged = dict(self._terms)
        for k, c in other._terms.items():
            merged[k] = merged.get(k, 0) + c
        return PauliSum(self.n_qubits, merged)

    __radd__ = __add__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, scalar):
        if not isinstance(scalar, (int, float, complex, np.number)):
            return NotImplemented
        return PauliSum(self.n_qubits, {k: c * scalar for k, c in self._terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, other):
        """Operator product, with Pauli phases tracked exactly."""
        if self._check(other) is NotImplemented:
            return NotImplemented
        acc = {}
        for ka, ca in self._terms.items():
            for kb, cb in other._terms.items():
                phase, k = pauli_product(ka, kb)
                acc[k] = acc.get(k, 0) + phase * ca * cb
        return PauliSum(self.n_qubits, acc)

    def commutator(self, other):
        return self @ other - other @ self

    def allclose(self, other, atol=1e-12):
        keys = set(self._terms) | set(other._terms)
        return all(abs(self.coefficient(k) - other.coefficient(k)) <= atol for k in keys)

    def __eq__(self, other):
        return isinstance(other, PauliSum) and other.n_qubits == self.n_qubits \
            and self._terms == other._terms

    def __hash__(self):
        return hash((self.n_qubits, tuple(self._terms.items())))

    def __repr__(self):
        return f"PauliSum(n_qubits={self.n_qubits}, n_terms={len(self)})"

    # matrices
    def sparse_on(self, basis=None):
        """CSR matrix of the operator, optionally restricted to sorted basis indices."""
        if basis is None:
            dim = 2 ** self.n_qubits
            cols = np.arange(dim, dtype=np.int64)
        else:
            cols = np.asarray(basis, dtype=np.int64)
            dim = cols.size
        rows_all, cols_all, vals_all = [], [], []
        for k, c in self._terms.items():
            img, phase = pauli_action(cols, k)
            if basis is None:
                keep = slice(None)
                rows = img
            else:
                pos = np.searchsorted(cols, img)
                pos[pos == dim] = 0
                keep = cols[pos] == img
                rows = pos[keep]
            rows_all.append(rows)
            cols_all.append(np.arange(dim)[keep])
            vals_all.append(c * phase[keep])
        if not rows_all:
            return sp.csr_matrix((dim, dim), dtype=complex)
        m = sp.coo_matrix(
            (np.concatenate(vals_all), (np.concatenate(rows_all), np.concatenate(cols_all))),
            shape=(dim, dim),
        ).tocsr()
        m.sum_duplicates()
        return m

    @cached_property
    def _sparse(self):
        return self.sparse_on()

    def to_sparse(self):
        return self._sparse

    def to_dense(self, basis=None):
        return pauli_sum_to_dense(self, basis)

    # text form
    def to_text(self):
        """One term per line: ``<coefficient> <word>`` with explicit ``I`` letters."""
        lines = []
        for k, c in self._terms.items():
            cs = repr(float(c)) if isinstance(c, float) else repr(complex(c))
            lines.append(f"{cs} {k}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        terms = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            coeff, letters = line.split()
            terms.append((complex(coeff) if "j" in coeff else float(coeff), letters))
        if not terms:
            raise InputError("empty Pauli sum text")
        return cls(len(terms[0][1]), terms)


def pauli_sum_to_dense(h, basis=None, max_qubits=DENSE_MAX_QUBITS, max_dim=DENSE_MAX_DIM):
    """Dense matrix of ``h`` (full space, or restricted to the sorted ``basis`` indices)."""
    if basis is None:
        if h.n_qubits > max_qubits:
            raise SizeLimitError(f"dense matrix refused: {h.n_qubits} qubits > {max_qubits}")
    else:
        if h.n_qubits > 20:
            raise SizeLimitError("sector projection supported up to 20 qubits")
        if len(basis) > max_dim:
            raise SizeLimitError(f"dense sector matrix refused: dimension {len(basis)} > {max_dim}")
    return h.sparse_on(basis).toarray()


def z_op(n_qubits, q, coeff=1.0):
    return PauliSum.single(n_qubits, {q: "Z"}, coeff)


def total_z(n_qubits):
    return sum((z_op(n_qubits, q) for q in range(n_qubits)), PauliSum(n_qubits))


# ---------------------------------------------------------------------------
# Schwinger model


@dataclass(frozen=True)
class SchwingerParams:
    """Lattice Schwinger model at ``N_s`` sites; ``J = a g^2 / 2`` and ``w = 1 / (2a)``."""

    n_sites: int
    ag: float = 2.0
    mass_over_g: float = 0.0
    theta: float = math.pi
    g: float = 1.0

    def __post_init__(self):
        if self.n_sites < 2 or self.n_sites % 2:
            raise InputError("n_sites must be even and >= 2")
        if not self.ag > 0 or not self.g > 0:
            raise InputError("ag and g must be positive")

    @property
    def a(self):
        return self.ag / self.g

    @property
    def J(self):
        return self.a * self.g ** 2 / 2

    @property
    def w(self):
        return 1.0 / (2 * self.a)

    @property
    def mass(self):
        return self.mass_over_g * self.g

    def with_mass(self, mass_over_g):
        return SchwingerParams(self.n_sites, self.ag, mass_over_g, self.theta, self.g)


def _charge(n_qubits, i):
    """Staggered charge ``(Z_i + (-1)^i) / 2`` of site ``i``."""
    return (z_op(n_qubits, i) + (-1) ** i) * 0.5


def schwinger_field_terms(p):
    """Link operators ``L_n = sum_{i<=n} charge_i + theta/2pi`` for ``n = 0..N_s-2``."""
    n = p.n_sites
    out = []
    acc = PauliSum.identity(n, p.theta / (2 * math.pi))
    for i in range(n - 1):
        acc = acc + _charge(n, i)
        out.append(acc)
    return out


def schwinger_electric_part(p):
    """``J sum_n L_n^2`` expanded exactly into I / Z / ZZ words."""
    n = p.n_sites
    return sum((L @ L for L in schwinger_field_terms(p)), PauliSum(n)) * p.J


def schwinger_mass_part(p):
    n = p.n_sites
    return sum((z_op(n, i, (-1) ** i) for i in range(n)), PauliSum(n)) * (p.mass / 2)


def schwinger_hopping_pair(n_qubits, i, coeff=1.0):
    """``coeff * (X_i X_{i+1} + Y_i Y_{i+1})``."""
    return (PauliSum.single(n_qubits, {i: "X", i + 1: "X"}, coeff)
            + PauliSum.single(n_qubits, {i: "Y", i + 1: "Y"}, coeff))


def schwinger_hamiltonian(p):
    if not isinstance(p, SchwingerParams):
        raise InputError("expected SchwingerParams")
    n = p.n_sites
    hop = sum((schwinger_hopping_pair(n, i, p.w / 2) for i in range(n - 1)), PauliSum(n))
    return schwinger_electric_part(p) + hop + schwinger_mass_part(p)


def schwinger_electric_field(n_sites, theta=0.0):
    """Site-averaged electric field ``(1/N_s) sum_n sum_{i<=n} (Z_i + (-1)^i) / 2``.

    ``theta`` adds the background field ``theta / 2pi`` to every link; the
    default ``0`` gives the plain charge-sum form.
    """
    if n_sites < 2:
        raise InputError("n_sites must be >= 2")
    acc = PauliSum(n_sites)
    link = PauliSum.identity(n_sites, theta / (2 * math.pi))
    for i in range(n_sites):
        link = link + _charge(n_sites, i)
        acc = acc + link
    return acc / n_sites


# ---------------------------------------------------------------------------
# Z2 gauge theory


@dataclass(frozen=True)
class Z2Params:
    n_sites: int = 2
    coupling_J: float = 1.0
    field_f: float = 0.0
    mass_m: float = 0.0
    probe_site: int = 1

    def __post_init__(self):
        if self.n_sites < 2:
            raise InputError("n_sites must be >= 2")
        if not 0 <= self.probe_site < self.n_sites:
            raise InputError("probe_site out of range")

    @property
    def n_qubits(self):
        return 2 * self.n_sites


def z2_site(n, n_sites):
    return 2 * (n % n_sites)


def z2_link(n, n_sites):
    """Qubit of the link between sites ``n`` and ``n + 1`` (periodic)."""
    return 2 * (n % n_sites) + 1


def z2_bond_terms(n, p):
    """``X_n Z_(n,n+1) X_(n+1) + Y_n Z_(n,n+1) Y_(n+1)`` for bond ``n``."""
    nq, ns = p.n_qubits, p.n_sites
    a, l, b = z2_site(n, ns), z2_link(n, ns), z2_site(n + 1, ns)
    return (PauliSum.single(nq, {a: "X", l: "Z", b: "X"})
            + PauliSum.single(nq, {a: "Y", l: "Z", b: "Y"}))


def z2_kinetic(p):
    return sum((z2_bond_terms(n, p) for n in range(p.n_sites)), PauliSum(p.n_qubits)) \
        * (-p.coupling_J / 2)


def z2_field(p):
    nq = p.n_qubits
    return sum((PauliSum.single(nq, {z2_link(n, p.n_sites): "X"}) for n in range(p.n_sites)),
               PauliSum(nq)) * (-p.field_f)


def z2_mass(p):
    nq = p.n_qubits
    return sum((z_op(nq, z2_site(n, p.n_sites), (-1) ** n) for n in range(p.n_sites)),
               PauliSum(nq)) * (p.mass_m / 2)


def z2_hamiltonian(p):
    if not isinstance(p, Z2Params):
        raise InputError("expected Z2Params")
    return z2_kinetic(p) + z2_field(p) + z2_mass(p)


def z2_gauss_operator(n, n_sites):
    """``G_n = -X_(n-1,n) Z_n X_(n,n+1)``."""
    if not 0 <= n < n_sites or n_sites < 2:
        raise InputError(f"site {n} out of range for {n_sites} sites")
    nq = 2 * n_sites
    ops = {z2_link(n - 1, n_sites): "X", z2_site(n, n_sites): "Z", z2_link(n, n_sites): "X"}
    return PauliSum.single(nq, ops, -1.0)
