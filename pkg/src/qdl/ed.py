"""Exact diagonalisation in symmetry sectors and finite-size scaling of the Schwinger mass gap."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import ConvergenceError, DegenerateGapError, InputError, SizeLimitError
from .operators import (
    PauliSum,
    SchwingerParams,
    pauli_action,
    schwinger_hamiltonian,
    schwinger_mass_part,
)
from .sim import z_expectations

RESIDUAL_TOL = 1e-8
DENSE_SOLVE_DIM = 600
MAX_SECTOR_QUBITS = 24

DEFAULT_SIZES = (10, 12, 14, 16, 18, 20)


def default_grid():
    return np.round(np.arange(0.05, 0.30 + 1e-9, 0.005), 10)


@dataclass(frozen=True)
class SectorBasis:
    n_qubits: int
    constraint: str
    states: np.ndarray

    @classmethod
    def full(cls, n_qubits):
        if n_qubits > MAX_SECTOR_QUBITS:
            raise SizeLimitError(f"{n_qubits} qubits is beyond the supported size")
        return cls(n_qubits, "none", np.arange(2 ** n_qubits, dtype=np.int64))

    @classmethod
    def magnetization(cls, n_qubits, total_z=0):
        """Basis states with ``sum_i Z_i = total_z`` in increasing index order."""
        if n_qubits > MAX_SECTOR_QUBITS:
            raise SizeLimitError(f"{n_qubits} qubits is beyond the supported size")
        if (n_qubits - total_z) % 2 or abs(total_z) > n_qubits:
            raise InputError(f"no basis states with total Z = {total_z} on {n_qubits} qubits")
        ones = (n_qubits - total_z) // 2
        idx = np.arange(2 ** n_qubits, dtype=np.int64)
        states = idx[np.bitwise_count(idx) == ones]
        name = "zero_magnetization" if total_z == 0 else f"magnetization_{total_z}"
        return cls(n_qubits, name, states)

    @classmethod
    def zero_magnetization(cls, n_qubits):
        if n_qubits % 2:
            raise InputError("zero magnetisation needs an even number of qubits")
        return cls.magnetization(n_qubits, 0)

    @property
    def dim(self):
        return int(self.states.size)

    def embed(self, vec):
        """Full ``2**n`` vector from sector amplitudes."""
        out = np.zeros(2 ** self.n_qubits, dtype=np.result_type(vec, complex))
        out[self.states] = vec
        return out


def sector_leak(h, sector):
    """Largest matrix element of ``h`` connecting the sector to its complement."""
    cols = sector.states
    out_rows, out_cols, out_vals = [], [], []
    for letters, c in zip((w for _, w in h.terms), (c for c, _ in h.terms)):
        img, phase = pauli_action(cols, letters)
        pos = np.searchsorted(cols, img)
        pos[pos == cols.size] = 0
        outside = cols[pos] != img
        if outside.any():
            out_rows.append(img[outside])
            out_cols.append(np.flatnonzero(outside))
            out_vals.append(c * phase[outside])
    if not out_rows:
        return 0.0
    m = sp.coo_matrix((np.concatenate(out_vals),
                       (np.concatenate(out_rows), np.concatenate(out_cols))),
                      shape=(2 ** h.n_qubits, cols.size)).tocsr()
    m.sum_duplicates()
    return float(np.abs(m.data).max()) if m.nnz else 0.0


def sector_hamiltonian(h, sector, check=True):
    """Sparse restriction of ``h`` to ``sector`` (real dtype when possible).

    With ``check`` the symmetry is verified: by a dense commutator with the
    total magnetisation for up to 8 qubits, and by summing every matrix element
    that leaves the sector otherwise.
    """
    if h.n_qubits != sector.n_qubits:
        raise InputError("operator and sector act on different qubit counts")
    if check and sector.constraint != "none":
        if h.n_qubits <= 8:
            from .operators import total_z

            hd = h.to_dense()
            zd = total_z(h.n_qubits).to_dense()
            leak = np.abs(hd @ zd - zd @ hd).max()
        else:
            leak = sector_leak(h, sector)
        if leak > 1e-12:
            raise InputError(f"operator does not conserve the sector (leak {leak:.2e})")
    m = h.sparse_on(sector.states)
    if m.nnz == 0 or np.abs(m.data.imag).max() == 0:
        m = m.real.tocsr()
    return m


def _residuals(mat, vals, vecs):
    r = mat @ vecs - vecs * vals[None, :]
    return np.linalg.norm(r, axis=0)


def lowest_eigenpairs(matrix, k=2, v0=None, tol=RESIDUAL_TOL, maxiter=None):
    """``k`` lowest eigenpairs, ascending, each with residual ``||Hv - Ev|| < tol``.

    Small matrices are diagonalised densely; larger ones with implicitly
    restarted Lanczos (ARPACK).  Raises :class:`ConvergenceError` carrying the
    worst residual if the target is missed.
    """
    n = matrix.shape[0]
    if k < 1 or k >= n:
        raise InputError(f"need 1 <= k < dimension ({n}), got k={k}")
    if n <= DENSE_SOLVE_DIM:
        dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
        vals, vecs = np.linalg.eigh(dense)
        vals, vecs = vals[:k], vecs[:, :k]
    else:
        ncv = min(n, max(2 * k + 1, 20))
        attempts = [(tol * 1e-3, ncv), (0.0, min(n, 2 * ncv))]
        vals = vecs = None
        for lanczos_tol, ncv_try in attempts:
            try:
                vals, vecs = eigsh(matrix, k=k, which="SA", v0=v0, tol=lanczos_tol, ncv=ncv_try,
                                   maxiter=maxiter)
            except ArpackNoConvergence as exc:
                vals, vecs = exc.eigenvalues, exc.eigenvectors
                if vals is None or len(vals) < k:
                    continue
            order = np.argsort(vals)
            vals, vecs = vals[order], vecs[:, order]
            if _residuals(matrix, vals, vecs).max() < tol:
                break
        if vals is None or len(vals) < k:
            raise ConvergenceError("Lanczos iteration did not converge", residual=math.inf)
    res = _residuals(matrix, vals, vecs)
    if res.max() >= tol:
        raise ConvergenceError(f"eigenpair residual {res.max():.2e} above {tol:.0e}",
                               residual=float(res.max()))
    return vals, vecs


# ---------------------------------------------------------------------------
# Schwinger gap


@lru_cache(maxsize=4)
def _schwinger_sector_parts(n_sites, ag, theta):
    """Sector matrix at zero mass plus the diagonal of the unit-mass term."""
    p = SchwingerParams(n_sites, ag=ag, mass_over_g=0.0, theta=theta)
    sector = SectorBasis.zero_magnetization(n_sites)
    h0 = sector_hamiltonian(schwinger_hamiltonian(p), sector, check=n_sites <= 8)
    mass_diag = schwinger_mass_part(p.with_mass(1.0)).sparse_on(sector.states).diagonal().real
    return sector, h0, mass_diag


def schwinger_sector_matrix(n_sites, x, ag=2.0, theta=math.pi):
    _, h0, md = _schwinger_sector_parts(int(n_sites), float(ag), float(theta))
    return (h0 + sp.diags(x * md)).tocsr()


def mass_gap(N, x, ag=2.0, theta=math.pi, v0=None, return_vector=False):
    """``E_1 - E_0`` of the Schwinger Hamiltonian inside the zero-magnetisation sector."""
    if N < 2 or N % 2:
        raise InputError("N must be even and >= 2")
    vals, vecs = lowest_eigenpairs(schwinger_sector_matrix(N, x, ag, theta), 2, v0=v0)
    gap = max(0.0, float(vals[1] - vals[0]))
    return (gap, vecs[:, 0]) if return_vector else gap


def gap_scan(N, grid, ag=2.0, theta=math.pi):
    """Gaps along ``grid``, warm-starting each solve from the previous ground state."""
    v0 = None
    out = np.empty(len(grid))
    for i, x in enumerate(grid):
        out[i], v0 = mass_gap(N, x, ag, theta, v0=v0, return_vector=True)
    return out


def scaling_ratio(N, x=None, ag=2.0, theta=math.pi, gaps=None):
    """``R_N = N Delta_N / ((N+2) Delta_{N+2})``.

    Pass ``gaps=(Delta_N, Delta_{N+2})`` (scalars or arrays) to skip the
    diagonalisations.
    """
    if gaps is None:
        gaps = (mass_gap(N, x, ag, theta), mass_gap(N + 2, x, ag, theta))
    d_n, d_n2 = (np.asarray(g, dtype=float) for g in gaps)
    if np.any(d_n2 <= 0):
        raise DegenerateGapError(f"vanishing gap at N={N + 2}")
    r = N * d_n / ((N + 2) * d_n2)
    return float(r) if r.ndim == 0 else r


@dataclass
class ScalingFit:
    lattice_sizes: list
    crossing_sizes: list
    crossing_points: list
    extrapolated: float
    slope: float
    fit_residuals: list
    alternatives: dict = field(default_factory=dict)
    jackknife: list = field(default_factory=list)
    ag: float = 2.0
    theta: float = math.pi

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def crossing_point(grid, r, n_points=5):
    """Solve ``R(x) = 1`` by a linear fit to the ``n_points`` grid points nearest ``R = 1``.

    The points are taken from the monotone branch through the crossing.  When
    ``R`` crosses 1 more than once, the last downward crossing is used (for
    the Schwinger ratio ``R_N`` first rises through 1 and then falls back below
    it; the falling crossing is the critical one).  Returns ``(x, indices)``.
    """
    grid = np.asarray(grid, dtype=float)
    r = np.asarray(r, dtype=float)
    d = r - 1.0
    down = np.flatnonzero((d[:-1] > 0) & (d[1:] <= 0))
    up = np.flatnonzero((d[:-1] < 0) & (d[1:] >= 0))
    if down.size:
        i, falling = down[-1], True
    elif up.size == 1:
        i, falling = up[0], False
    else:
        raise InputError("R_N does not cross 1 from above on this grid "
                         "(grid too narrow, or lattices too small to reach R_N = 1)")
    sign = -1.0 if falling else 1.0
    lo, hi = i, i + 1
    while lo > 0 and sign * (r[lo] - r[lo - 1]) > 0:
        lo -= 1
    while hi < len(r) - 1 and sign * (r[hi + 1] - r[hi]) > 0:
        hi += 1
    window = np.arange(lo, hi + 1)
    pick = window[np.argsort(np.abs(d[window]), kind="stable")[:n_points]]
    pick.sort()
    if pick.size < 2:
        raise InputError("too few grid points on the crossing branch")
    slope, icpt = np.polyfit(grid[pick], r[pick], 1)
    return float((1.0 - icpt) / slope), pick


def _extrapolate(sizes, xs, power=1):
    a = np.column_stack([np.ones(len(sizes)), 1.0 / np.asarray(sizes, float) ** power])
    coef, *_ = np.linalg.lstsq(a, np.asarray(xs), rcond=None)
    return float(coef[0]), float(coef[1]), (np.asarray(xs) - a @ coef).tolist()


def critical_mass_from_gaps(grid, gaps, ag=2.0, theta=math.pi, n_points=5):
    """Finite-size-scaling fit from precomputed gaps ``{N: array over grid}``."""
    grid = np.asarray(grid, dtype=float)
    sizes = sorted(gaps)
    pairs = [n for n in sizes if n + 2 in gaps]
    if len(pairs) < 2:
        raise InputError("need at least three consecutive even sizes")
    xs = []
    for n in pairs:
        r = scaling_ratio(n, gaps=(gaps[n], gaps[n + 2]))
        try:
            x, _ = crossing_point(grid, r, n_points)
        except InputError as exc:
            raise InputError(f"N={n}: {exc}") from exc
        xs.append(x)
    x_inf, b, res = _extrapolate(pairs, xs, 1)
    alt = {}
    x2, b2, res2 = _extrapolate(pairs, xs, 2)
    alt["inverse_square"] = {"extrapolated": x2, "slope": b2, "fit_residuals": res2}
    jack = []
    if len(pairs) > 2:
        for k in range(len(pairs)):
            keep = [j for j in range(len(pairs)) if j != k]
            jack.append(_extrapolate([pairs[j] for j in keep], [xs[j] for j in keep], 1)[0])
    return ScalingFit(list(sizes), pairs, xs, x_inf, b, res, alt, jack, ag, theta)


def critical_mass(ag=2.0, sizes=DEFAULT_SIZES, grid=None, theta=math.pi, n_points=5,
                  progress=None):
    """Critical ``m/g`` from crossings of ``R_N(x) = 1`` extrapolated linearly in ``1/N``.

    Returns ``(ScalingFit, gaps)`` where ``gaps`` maps each size to its gap scan.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    gaps = {}
    for n in sorted(sizes):
        gaps[n] = gap_scan(n, grid, ag, theta)
        if progress is not None:
            progress(n)
    return critical_mass_from_gaps(grid, gaps, ag, theta, n_points), gaps


def gaps_to_csv(grid, gaps):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "x", "gap"])
    for n in sorted(gaps):
        for x, g in zip(grid, gaps[n]):
            w.writerow([n, repr(float(x)), repr(float(g))])
    return buf.getvalue()


def z_profile(state):
    """Per-qubit ``<Z_n>`` of a state vector."""
    amps = np.asarray(getattr(state, "amplitudes", state))
    n = int(round(math.log2(amps.size)))
    return z_expectations(amps, n)


def ground_state(n_sites, mass_over_g, ag=2.0, theta=math.pi):
    """Sector ground state of the Schwinger Hamiltonian embedded in the full space."""
    sector = _schwinger_sector_parts(n_sites, float(ag), float(theta))[0]
    vals, vecs = lowest_eigenpairs(schwinger_sector_matrix(n_sites, mass_over_g, ag, theta), 1)
    return float(vals[0]), sector.embed(vecs[:, 0])


def ed_energy(h: PauliSum, sector=None, k=1):
    """Lowest ``k`` energies of ``h`` (optionally inside ``sector``)."""
    if sector is None:
        sector = SectorBasis.full(h.n_qubits)
        m = h.sparse_on()
    else:
        m = sector_hamiltonian(h, sector)
    return lowest_eigenpairs(m, k)[0]
