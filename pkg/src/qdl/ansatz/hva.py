"""Hamiltonian variational ansatz for the lattice Schwinger model."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import InputError
from ..operators import SchwingerParams, schwinger_electric_part, schwinger_mass_part
from ..sim import Circuit, Param, gate


@dataclass(frozen=True)
class HvaSpec:
    n_sites: int
    n_layers: int
    schwinger_params: SchwingerParams | None = None

    def __post_init__(self):
        if self.n_sites < 2 or self.n_sites % 2:
            raise InputError("HVA needs an even number of sites")
        if self.n_layers < 1:
            raise InputError("HVA needs at least one layer")
        if self.schwinger_params is None:
            object.__setattr__(self, "schwinger_params", SchwingerParams(self.n_sites))
        elif self.schwinger_params.n_sites != self.n_sites:
            raise InputError("site count mismatch between HvaSpec and its Hamiltonian")

    @property
    def n_params(self):
        return 3 * self.n_layers

    def with_mass(self, mass_over_g):
        return HvaSpec(self.n_sites, self.n_layers, self.schwinger_params.with_mass(mass_over_g))


def reference_bits(n_sites):
    """``|01>^(N_s/2)``: qubit 0 in ``|0>``, qubit 1 in ``|1>``, ..."""
    return [i % 2 for i in range(n_sites)]


def even_pairs(n_sites):
    return [(i, i + 1) for i in range(0, n_sites - 1, 2)]


def odd_pairs(n_sites):
    return [(i, i + 1) for i in range(1, n_sites - 1, 2)]


def _diag_gates(h_z, slot):
    # exp(-i lam H_Z) for diagonal H_Z: c Z_i -> RZ(2 c lam), c Z_i Z_j -> RZZ(2 c lam).
    # The identity term only contributes a global phase and is left out.
    gs = []
    for c, word in h_z.terms:
        qs = [q for q, ch in enumerate(word) if ch != "I"]
        if set(word) - {"I", "Z"}:
            raise InputError("H_Z must be diagonal")
        if len(qs) == 1:
            gs.append(gate("RZ", qs[0], params=[Param(slot, 2 * c)]))
        elif len(qs) == 2:
            gs.append(gate("RZZ", *qs, params=[Param(slot, 2 * c)]))
        elif len(qs) > 2:
            raise InputError("H_Z may contain at most two-body terms")
    return gs


def _xy_gates(pairs, slot):
    # exp(-i lam (XX + YY)); XX and YY commute so the split is exact
    gs = []
    for a, b in pairs:
        gs.append(gate("RXX", a, b, params=[Param(slot, 2.0)]))
        gs.append(gate("RYY", a, b, params=[Param(slot, 2.0)]))
    return gs


def hva_circuit(spec):
    """Reference state preparation followed by ``n_layers`` HVA layers.

    Layer ``l`` uses ``theta[3l:3l+3] = (lam_Z, lam_odd, lam_even)`` and applies
    ``exp(-i lam_even H_even)`` first, then the odd bonds, then ``exp(-i lam_Z H_Z)``.
    """
    n = spec.n_sites
    p = spec.schwinger_params
    h_z = schwinger_electric_part(p) + schwinger_mass_part(p)
    c = Circuit(n, n_params=spec.n_params, name="hva")
    for q, bit in enumerate(reference_bits(n)):
        if bit:
            c.append(gate("X", q))
    for layer in range(spec.n_layers):
        base = 3 * layer
        c.extend(_xy_gates(even_pairs(n), base + 2))
        c.extend(_xy_gates(odd_pairs(n), base + 1))
        c.extend(_diag_gates(h_z, base))
    return c
