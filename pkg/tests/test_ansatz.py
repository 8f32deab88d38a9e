import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

import oracles as orc
from qdl.ansatz import (
    HeaSpec, HvaSpec, QcnnSpec, QpsConfig, conv_block, hea_circuit, hva_circuit, kinetic_block,
    pool_block, qcnn_circuit, qps_circuit, qps_emission_gate, qps_emission_scales,
    qps_flavor_rotation, qps_scale_grid, qps_state, qps_sudakov, z2_initial_state,
    z2_trotter_circuit,
)
from qdl.ansatz.qps import emission_matrix
from qdl.errors import InputError
from qdl.operators import SchwingerParams, Z2Params, z2_gauss_operator
from qdl.sim import Circuit, StateVector, expectation, run_circuit

GOLDEN = Path(__file__).parent / "golden"


def _zero(n):
    v = np.zeros(2 ** n, complex)
    v[0] = 1
    return v


def _unitary_error(u):
    return np.abs(u.conj().T @ u - np.eye(len(u))).max()


# -- parameter counts ------------------------------------------------------------

@pytest.mark.parametrize("spec, count", [
    (QcnnSpec(8, 3, "schwinger"), 63),
    (QcnnSpec(8, 3, "qps"), 63),
    (QcnnSpec(8, 1, "qps_m1"), 21),
    (QcnnSpec(8, 2, "qps_m2"), 24),
    (QcnnSpec(4, 2, "z2"), 93),
    (HeaSpec(8, 6), 112),
    (HeaSpec(8, 0), 16),
    (HvaSpec(8, 3), 9),
])
def test_parameter_counts(spec, count):
    assert spec.n_params == count


@given(st.sampled_from(["schwinger", "qps"]), st.integers(1, 3))
def test_shared_count_is_21_per_layer(variant, layers):
    assert QcnnSpec(8, layers, variant).n_params == 21 * layers


@given(st.integers(2, 6), st.integers(0, 6))
def test_hea_count_formula(n, layers):
    assert hea_circuit(HeaSpec(n, layers)).n_params == 2 * n * (layers + 1)


def test_inconsistent_specs_rejected():
    with pytest.raises(InputError):
        QcnnSpec(8, 4, "schwinger")
    with pytest.raises(InputError):
        QcnnSpec(8, 1, "mystery")
    with pytest.raises(InputError):
        HvaSpec(3, 1)
    with pytest.raises(InputError):
        conv_block(np.zeros(14))
    with pytest.raises(InputError):
        pool_block(np.zeros(5))


@pytest.mark.parametrize("name, build", [
    ("qcnn_schwinger_8q_3l", lambda: qcnn_circuit(QcnnSpec(8, 3, "schwinger"))),
    ("qcnn_z2_4q_2l", lambda: qcnn_circuit(QcnnSpec(4, 2, "z2"))),
    ("qcnn_qps_8q_3l", lambda: qcnn_circuit(QcnnSpec(8, 3, "qps", readout_scale=2))),
    ("qcnn_qps_m1_8q_1l", lambda: qcnn_circuit(QcnnSpec(8, 1, "qps_m1"))),
    ("qcnn_qps_m2_8q_2l", lambda: qcnn_circuit(QcnnSpec(8, 2, "qps_m2"))),
    ("hea_8q_2l", lambda: hea_circuit(HeaSpec(8, 2))),
    ("hva_4s_2l_m0.5", lambda: hva_circuit(HvaSpec(4, 2, SchwingerParams(4, 2.0, 0.5, math.pi)))),
    ("z2_trotter_step", lambda: z2_trotter_circuit(Z2Params(2, 1.0, 3.0, 0.5), 2.0, 1)),
])
def test_layout_golden(name, build):
    assert build().to_text() == (GOLDEN / f"{name}.txt").read_text()


def test_schwinger_layout_open_boundary():
    conv, pool = QcnnSpec(8, 3, "schwinger").layout()[0]
    assert (7, 0) not in conv and len(conv) == 7
    assert pool == [(0, 1), (2, 3), (4, 5), (6, 7)]


def test_qps_pooling_separation():
    layers = QcnnSpec(8, 3, "qps").layout()
    assert [pool[0] for _, pool in layers] == [(0, 4), (4, 6), (6, 7)]
    assert layers[-1][1][0][1] == 7


# -- blocks ---------------------------------------------------------------------

@pytest.mark.parametrize("style", ["generic", "pauli"])
def test_conv_block_zero_is_identity(style):
    assert np.allclose(orc.circuit_unitary(conv_block(np.zeros(15), style)), np.eye(4), atol=1e-15)


def test_conv_block_rzz_only():
    theta = np.zeros(15)
    theta[8] = math.pi
    want = orc.rot(np.kron(orc.Z, orc.Z), math.pi)
    assert np.allclose(orc.circuit_unitary(conv_block(theta)), want, atol=1e-15)


@given(st.sampled_from(["generic", "pauli", "reduced"]), st.integers(0, 2 ** 32 - 1))
def test_blocks_unitary_and_match_oracle(style, seed):
    rng = np.random.default_rng(seed)
    nc = {"generic": 15, "pauli": 15, "reduced": 9}[style]
    npool = {"generic": 6, "pauli": 6, "reduced": 3}[style]
    for c in (conv_block(rng.uniform(-4, 4, nc), style), pool_block(rng.uniform(-4, 4, npool), style)):
        u = orc.circuit_unitary(c)
        assert _unitary_error(u) < 1e-10
        assert np.allclose(run_circuit(np.eye(4, dtype=complex).T, c).T, u, atol=1e-12)


def test_pool_block_zero_is_cnot():
    want = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    assert np.allclose(orc.circuit_unitary(pool_block(np.zeros(6))), want, atol=1e-15)


def test_pool_block_structure(rng):
    t = rng.uniform(-3, 3, 6)
    uc, ut = orc.u3(*t[:3]), orc.u3(*t[3:])
    cnot = orc.local_matrix(type("G", (), {"kind": "CNOT", "dagger": False})(), [])
    want = np.kron(orc.I2, uc.conj().T) @ cnot @ np.kron(uc, ut)
    assert np.allclose(orc.circuit_unitary(pool_block(t)), want, atol=1e-12)


def test_pauli_rotation_order(rng):
    a, b, c = rng.uniform(-3, 3, 3)
    theta = np.zeros(15)
    theta[:3] = a, b, c
    want = np.kron(orc.rot(orc.Z, c) @ orc.rot(orc.Y, b) @ orc.rot(orc.X, a), orc.I2)
    assert np.allclose(orc.circuit_unitary(conv_block(theta, "pauli")), want, atol=1e-12)


@pytest.mark.parametrize("spec", [QcnnSpec(8, 3, "schwinger"), QcnnSpec(4, 2, "z2"),
                                  QcnnSpec(8, 3, "qps"), QcnnSpec(8, 2, "qps_m2")])
def test_zero_parameter_qcnn_readout(spec):
    c = qcnn_circuit(spec)
    out = run_circuit(_zero(spec.n_qubits), c, np.zeros(c.n_params))
    assert abs(out[0]) == pytest.approx(1, abs=1e-12)


def test_zero_parameter_hea_fixes_zero_state():
    c = hea_circuit(HeaSpec(8, 6))
    assert np.allclose(run_circuit(_zero(8), c, np.zeros(112)), _zero(8), atol=1e-14)


def test_readout_qubit_untouched_by_later_gates():
    # discarded pool controls are never acted on again
    spec = QcnnSpec(8, 3, "schwinger")
    seen_as_control = set()
    for conv, pool in spec.layout():
        for pair in conv:
            assert not seen_as_control & set(pair)
        seen_as_control |= {ctrl for ctrl, _ in pool}
    assert spec.readout_qubit not in seen_as_control


# -- HVA ----------------------------------------------------------------------

def test_hva_zero_angles_give_reference():
    c = hva_circuit(HvaSpec(8, 3))
    assert np.allclose(run_circuit(_zero(8), c, np.zeros(9)), orc.basis(8, "01010101"), atol=0)


@given(st.sampled_from([2, 4, 6, 8]), st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_hva_conserves_total_z(n, layers, seed):
    rng = np.random.default_rng(seed)
    spec = HvaSpec(n, layers, SchwingerParams(n, 2.0, float(rng.uniform(-2, 2)), math.pi))
    psi = run_circuit(_zero(n), hva_circuit(spec), rng.uniform(-math.pi, math.pi, spec.n_params))
    tz = np.real(np.vdot(psi, orc.total_z_dense(n) @ psi))
    assert abs(tz) < 1e-10


def test_hva_layer_matches_exponentials(rng):
    n, mass = 4, -0.7
    lam = rng.uniform(-2, 2, 3)
    h = orc.schwinger_dense(n, 2.0, mass)
    hop = sum(0.125 * (orc.op(n, {i: orc.X, i + 1: orc.X}) + orc.op(n, {i: orc.Y, i + 1: orc.Y}))
              for i in range(n - 1))
    h_z = h - hop
    h_even = sum(orc.op(n, {i: P, i + 1: P}) for i in (0, 2) for P in (orc.X, orc.Y))
    h_odd = sum(orc.op(n, {1: P, 2: P}) for P in (orc.X, orc.Y))
    want = expm(-1j * lam[0] * h_z) @ expm(-1j * lam[1] * h_odd) @ expm(-1j * lam[2] * h_even)
    want = want @ orc.basis(n, "0101")
    got = run_circuit(_zero(n), hva_circuit(HvaSpec(n, 1, SchwingerParams(n, 2.0, mass))), lam)
    assert abs(abs(np.vdot(want, got)) - 1) < 1e-12


# -- Z2 -------------------------------------------------------------------------

def test_z2_initial_gauss_values():
    p = Z2Params(2, 1.0, 3.0, 0.5, probe_site=1)
    psi = z2_initial_state(p)
    assert abs(np.linalg.norm(psi.amplitudes) - 1) < 1e-14
    assert expectation(psi, z2_gauss_operator(0, 2)) == pytest.approx(-1, abs=1e-12)
    assert expectation(psi, z2_gauss_operator(1, 2)) == pytest.approx(1, abs=1e-12)


def test_z2_gauss_conserved_exactly():
    p = Z2Params(2, 1.0, 3.0, 1.0)
    psi = expm(-2j * orc.z2_dense(2, 1.0, 3.0, 1.0)) @ z2_initial_state(p).amplitudes
    for s, want in ((0, -1), (1, 1)):
        g = orc.z2_gauss_dense(s, 2)
        assert abs(np.vdot(psi, g @ psi).real - want) < 1e-10


@given(st.floats(-3, 3))
def test_kinetic_block_exact(alpha):
    n = 3
    got = orc.circuit_unitary(Circuit(n, kinetic_block(0, 1, 2, alpha)))
    gen = orc.op(n, {0: orc.X, 1: orc.Z, 2: orc.X}) + orc.op(n, {0: orc.Y, 1: orc.Z, 2: orc.Y})
    assert np.allclose(got, expm(-0.5j * alpha * gen), atol=1e-12)


def test_trotter_zero_time_is_identity():
    c = z2_trotter_circuit(Z2Params(2, 1.0, 3.0, 0.5), 0.0, 1)
    assert np.allclose(orc.circuit_unitary(c), np.eye(16), atol=1e-14)


def test_trotter_step_is_product_of_exponentials():
    J, f, m, dt = 1.0, 3.0, 0.5, 0.1
    nq = 4
    h_m = sum(m / 2 * (-1) ** s * orc.op(nq, {2 * s: orc.Z}) for s in range(2))
    h_g = sum(-f * orc.op(nq, {2 * s + 1: orc.X}) for s in range(2))
    h_f = orc.z2_dense(2, J, 0.0, 0.0)
    want = expm(-1j * h_f * dt) @ expm(-1j * h_g * dt) @ expm(-1j * h_m * dt)
    got = orc.circuit_unitary(z2_trotter_circuit(Z2Params(2, J, f, m), dt, 1))
    assert np.allclose(got, want, atol=1e-12)


def _trotter_infidelity(m, steps, f=3.0, T=2.0):
    p = Z2Params(2, 1.0, f, m)
    psi0 = z2_initial_state(p).amplitudes
    exact = expm(-1j * T * orc.z2_dense(2, 1.0, f, m)) @ psi0
    got = run_circuit(psi0, z2_trotter_circuit(p, T, steps))
    return 1 - abs(np.vdot(exact, got)) ** 2


@pytest.mark.parametrize("m", [0.0, 0.5])
def test_trotter_fidelity_20_steps(m):
    assert 1 - _trotter_infidelity(m, 20) >= 0.99


def test_trotter_infidelity_frozen():
    # independent dense-propagator values
    assert _trotter_infidelity(1.0, 20) == pytest.approx(0.0121864754730866, rel=1e-8)
    assert _trotter_infidelity(0.5, 20) == pytest.approx(0.00897191623359761, rel=1e-8)


@pytest.mark.parametrize("m", [0.0, 0.5, 1.0])
def test_trotter_first_order_scaling(m):
    assert _trotter_infidelity(m, 40) <= 0.30 * _trotter_infidelity(m, 20)


def test_trotter_conserves_gauss_along_trajectory():
    p = Z2Params(2, 1.0, 3.0, 1.0)
    psi = z2_initial_state(p).amplitudes
    step = z2_trotter_circuit(p, 0.1, 1)
    gs = [z2_gauss_operator(s, 2) for s in range(2)]
    start = [expectation(StateVector(psi), g) for g in gs]
    for _ in range(20):
        psi = run_circuit(psi, step)
        for g, g0 in zip(gs, start):
            assert abs(expectation(StateVector(psi), g) - g0) < 1e-10


# -- parton shower ----------------------------------------------------------------

def test_scale_grid():
    cfg = QpsConfig()
    theta = qps_emission_scales(cfg)
    assert len(theta) == 8 and theta[0] == 1.0
    assert theta[7] == pytest.approx(10 ** (-21 / 8), rel=1e-12)
    assert np.allclose(theta[1:] / theta[:-1], 10 ** (-3 / 8), rtol=1e-12)
    assert qps_scale_grid(cfg)[-1] == pytest.approx(1e-3, rel=1e-12)


def test_scale_modification_touches_one_step():
    base = qps_emission_scales(QpsConfig())
    mod = qps_emission_scales(QpsConfig(scale_mods=[(3, 1.2)]))
    assert mod[2] == pytest.approx(1.2 * base[2])
    assert np.array_equal(np.delete(mod, 2), np.delete(base, 2))


def test_sudakov_values():
    cfg = QpsConfig()
    assert qps_sudakov(0.5, 0.0, cfg) == 1.0
    assert qps_sudakov(1.0, 1.0, cfg) == pytest.approx(10 ** -0.15, rel=1e-12)
    vals = [qps_sudakov(0.1, g, cfg) for g in (0.2, 0.5, 1.0, 2.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    with pytest.raises(InputError):
        qps_sudakov(0.0, 1.0, cfg)


def test_invalid_qps_config():
    with pytest.raises(InputError):
        QpsConfig(eps_cut=2.0)
    with pytest.raises(InputError):
        QpsConfig(g1=math.inf)
    with pytest.raises(InputError):
        QpsConfig(scale_mods=[(9, 1.2)])


def test_flavor_rotation_cases():
    u, ga, gb = qps_flavor_rotation(0.3, 1.0, 0.0)
    assert np.array_equal(u, np.eye(2)) and (ga, gb) == pytest.approx((0.3, 1.0))
    u, ga, gb = qps_flavor_rotation(0.7, 0.7, 0.4)
    assert u[0, 1] == pytest.approx(1 / math.sqrt(2)) and (gb - ga) == pytest.approx(0.8)
    u, _, _ = qps_flavor_rotation(1.0, 1.0, 0.0)
    assert np.array_equal(u, np.eye(2))


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_flavor_rotation_diagonalises(g1, g2, g12):
    u, ga, gb = qps_flavor_rotation(g1, g2, g12)
    assert _unitary_error(u) < 1e-12
    g = np.array([[g1, g12], [g12, g2]])
    assert np.allclose(u.T @ g @ u, np.diag([ga, gb]), atol=1e-9)


def test_emission_gate_limits():
    assert np.array_equal(emission_matrix(1.0), np.eye(2))
    assert np.array_equal(emission_matrix(0.0), [[0, -1], [1, 0]])
    u = qps_emission_gate(0.3, 1.4, QpsConfig())
    assert _unitary_error(u) < 1e-12
    with pytest.raises(InputError):
        emission_matrix(1.5)


@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.integers(1, 6))
def test_bernoulli_product_without_mixing(g1, g2, steps):
    cfg = QpsConfig(n_steps=steps, g1=g1, g2=g2)
    probs = np.abs(qps_state(cfg)) ** 2
    delta = [qps_sudakov(t, g1, cfg) for t in qps_emission_scales(cfg)]
    want = np.array([1.0])
    for d in delta:
        want = np.kron(want, [d, 1 - d])
    assert np.abs(probs[: 2 ** steps] - want).max() < 1e-10
    assert probs[2 ** steps:].sum() < 1e-12


def _emission_probs(cfg):
    return (np.abs(qps_state(cfg)) ** 2).reshape(2, -1).sum(axis=0)


@given(st.floats(0.0, 2.0), st.integers(1, 5))
def test_flavor_symmetry_equal_couplings(g, steps):
    f1 = QpsConfig(n_steps=steps, g1=g, g2=g)
    assert np.allclose(_emission_probs(f1), _emission_probs(f1.with_(initial_flavor="f2")),
                       atol=1e-12)


def _reduced(cfg):
    m = qps_state(cfg).reshape(2, -1)
    return m.T @ m.conj()


@given(st.floats(0.6, 1.0), st.floats(0.0, 0.4), st.integers(1, 4))
def test_symmetric_draw_is_indistinguishable(g_own, g_other, steps):
    f1 = QpsConfig(n_steps=steps, g1=g_own, g2=g_other, g12=1.0)
    f2 = QpsConfig(n_steps=steps, g1=g_other, g2=g_own, g12=1.0, initial_flavor="f2")
    assert np.abs(_reduced(f1) - _reduced(f2)).max() < 1e-10


def test_f2_starts_with_flip():
    c = qps_circuit(QpsConfig(n_steps=2, initial_flavor="f2"))
    assert c.gates[0].kind == "X" and len(c) == 9
