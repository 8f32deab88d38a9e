"""Dataset generation for the three physics tasks."""

from __future__ import annotations

import logging

import numpy as np

from ..ansatz.hva import HvaSpec
from ..ansatz.qps import QpsConfig, qps_state
from ..ansatz.z2 import z2_initial_state, z2_trotter_circuit
from ..ed import ground_state
from ..errors import InputError
from ..learn import LabeledDataset, vqe_scan, vqe_state
from ..operators import SchwingerParams, Z2Params
from ..sim import compile_circuit, run_program

log = logging.getLogger(__name__)


def schwinger_labels(masses, critical):
    return np.where(np.asarray(masses) > critical, 1.0, -1.0)


def alternating_split(n):
    """Even grid indices train, odd indices test."""
    return np.where(np.arange(n) % 2 == 0, "train", "test")


def choose_hva_layers(cfg, seed):
    """Smallest layer count whose VQE energy at ``m/g = -2`` is within the target relative error."""
    if cfg.hva_layers is not None:
        return cfg.hva_layers, None
    e_ed, _ = ground_state(cfg.n_sites, -2.0, cfg.ag, cfg.theta)
    err = None
    for layers in range(1, cfg.hva_max_layers + 1):
        spec = HvaSpec(cfg.n_sites, layers, SchwingerParams(cfg.n_sites, cfg.ag, -2.0, cfg.theta))
        point = vqe_scan([-2.0], spec, cfg.vqe_budget, seed, cfg.vqe_optimizer)[-2.0]
        err = abs(point.energy - e_ed) / abs(e_ed)
        log.info("HVA layers=%d: relative energy error %.2e", layers, err)
        if err <= cfg.hva_target_rel_error:
            return layers, err
    return cfg.hva_max_layers, err


def gen_schwinger_dataset(cfg, critical_mass=None):
    """VQE ground states over the mass grid, labelled by the side of the critical mass."""
    crit = cfg.critical_mass if critical_mass is None else critical_mass
    if crit is None:
        raise InputError("a critical mass (from ED or the config) is needed for labelling")
    seed = cfg.seed_for("vqe")
    layers, err = choose_hva_layers(cfg, seed)
    spec = HvaSpec(cfg.n_sites, layers, SchwingerParams(cfg.n_sites, cfg.ag, 0.0, cfg.theta))
    masses = cfg.mass_grid()
    scan = vqe_scan(masses, spec, cfg.vqe_budget, seed, cfg.vqe_optimizer)
    states = np.array([vqe_state(spec, m, scan[float(m)].params) for m in masses])
    energies = [scan[float(m)].energy for m in masses]
    flags = [scan[float(m)].flagged for m in masses]
    return LabeledDataset(
        states, masses, schwinger_labels(masses, crit), alternating_split(len(masses)),
        cfg.n_sites, flags,
        meta={"task": "schwinger_phase", "critical_mass": crit, "hva_layers": layers,
              "hva_rel_error_at_m-2": err, "vqe_energies": energies, "readout_scale": 1.0,
              "feature_names": ["m_over_g"]},
    )


def gen_z2_dataset(cfg):
    """Trotter-evolved states with a probe charge; label +1 when the background field is on."""
    train_m, test_m = cfg.z2_mass_grids()
    states, feats, labels, splits = [], [], [], []
    for split, masses in (("train", train_m), ("test", test_m)):
        for m in masses:
            for f in cfg.z2_fields:
                p = Z2Params(2, cfg.z2_coupling, f, float(m), cfg.z2_probe_site)
                circ = z2_trotter_circuit(p, cfg.z2_total_time, cfg.z2_trotter_steps)
                psi = run_program(z2_initial_state(p).amplitudes, compile_circuit(circ))
                states.append(psi)
                feats.append((float(m), float(f)))
                labels.append(1.0 if f != 0 else -1.0)
                splits.append(split)
    return LabeledDataset(np.array(states), np.array(feats), labels, splits, 4,
                          meta={"task": "z2_confinement", "readout_scale": 1.0,
                                "feature_names": ["mass", "field"]})


_COUPLING_RANGES = {
    "coupling_case1": ((0.0, 0.5), (0.8, 0.9)),
    "coupling_case2": ((0.5, 1.0), (0.1, 0.2)),
}


def _flavor_draw(rng, mode):
    if mode == "random":
        return "f1" if rng.random() < 0.5 else "f2"
    return mode


def gen_qps_dataset(cfg, scenario=None):
    """Parton-shower states on ``1 + N_step`` qubits (flavour qubit first).

    Coupling scenarios: ``g1`` uniform in the case's train/test range,
    ``g2 = qps_g2``, ``g12 = 0``, label ``g1``.  Flavour scenario: ``g12 = 1``;
    the initial flavour is drawn uniformly, its own coupling from ``G`` and the
    other flavour's from ``G'``; showers started by ``f1`` get one uniformly
    chosen step scaled by ``qps_mod_factor``.  Label is the flavour bit.
    """
    scenario = scenario or cfg.qps_scenario
    rng = np.random.default_rng(cfg.seed_for(f"qps-data-{scenario}"))
    n_total = cfg.qps_train + cfg.qps_test
    splits = ["train"] * cfg.qps_train + ["test"] * cfg.qps_test
    states, feats, labels = [], [], []
    base = QpsConfig(n_steps=cfg.qps_steps, sudakov_norm=cfg.qps_sudakov_norm)
    if scenario in _COUPLING_RANGES:
        ranges = _COUPLING_RANGES[scenario]
        for i in range(n_total):
            lo, hi = ranges[0] if i < cfg.qps_train else ranges[1]
            g1 = float(rng.uniform(lo, hi))
            flavor = _flavor_draw(rng, cfg.qps_initial_flavor)
            q = base.with_(g1=g1, g2=cfg.qps_g2, g12=0.0, initial_flavor=flavor)
            states.append(qps_state(q))
            feats.append((g1, cfg.qps_g2, 0.0, float(flavor == "f2"), 0.0))
            labels.append(g1)
        task = "qps_coupling"
    elif scenario == "flavor":
        for i in range(n_total):
            flavor = "f1" if rng.random() < 0.5 else "f2"
            g_own = float(rng.uniform(*cfg.qps_set_g))
            g_other = float(rng.uniform(*cfg.qps_set_gp))
            step = int(rng.integers(1, cfg.qps_steps + 1))
            g1, g2 = (g_own, g_other) if flavor == "f1" else (g_other, g_own)
            mods = ((step, cfg.qps_mod_factor),) if flavor == "f1" else ()
            q = base.with_(g1=g1, g2=g2, g12=1.0, initial_flavor=flavor, scale_mods=mods)
            states.append(qps_state(q))
            feats.append((g1, g2, 1.0, float(flavor == "f2"), float(step if mods else 0)))
            labels.append(float(flavor == "f2"))
        task = "qps_flavor"
    else:
        raise InputError(f"unknown QPS scenario {scenario!r}")
    return LabeledDataset(np.array(states), np.array(feats), labels, splits, cfg.qps_steps + 1,
                          meta={"task": task, "scenario": scenario, "readout_scale": 2.0,
                                "feature_names": ["g1", "g2", "g12", "flavor_bit", "mod_step"]})


def emission_register_state(states, n_steps):
    """Reduced density matrices of the emission qubits (flavour qubit traced out)."""
    arr = np.asarray(states).reshape(-1, 2, 2 ** n_steps)
    return np.einsum("bfi,bfj->bij", arr, arr.conj())


def generate(cfg, scenario=None, critical_mass=None):
    if cfg.task == "schwinger_phase":
        return gen_schwinger_dataset(cfg, critical_mass)
    if cfg.task == "z2_confinement":
        return gen_z2_dataset(cfg)
    if cfg.task in ("qps_coupling", "qps_flavor"):
        return gen_qps_dataset(cfg, scenario)
    raise InputError(f"task {cfg.task!r} has no dataset")


def max_abs_total_z(states, n_qubits):
    from ..sim import z_expectations

    return float(np.abs(z_expectations(states, n_qubits).sum(axis=-1)).max()) if len(states) else 0.0


def gauss_values(states, n_sites=2):
    from ..operators import z2_gauss_operator
    from ..sim import expectation_batch

    return np.array([expectation_batch(states, z2_gauss_operator(n, n_sites))
                     for n in range(n_sites)]).T


__all__ = [
    "alternating_split", "choose_hva_layers", "emission_register_state", "gauss_values",
    "gen_qps_dataset", "gen_schwinger_dataset", "gen_z2_dataset", "generate",
    "max_abs_total_z", "schwinger_labels",
]
