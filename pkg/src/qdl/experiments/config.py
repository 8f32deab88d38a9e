"""Experiment configuration with paper-scale defaults and JSON round-tripping."""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from ..errors import InputError

TASKS = ("schwinger_phase", "z2_confinement", "qps_coupling", "qps_flavor", "ed_critical_mass")
QPS_SCENARIOS = ("coupling_case1", "coupling_case2", "flavor")
ANSATZE = ("qcnn", "qcnn_m1", "qcnn_m2", "hea")


def stage_seed(master, stage):
    """Per-stage seed: ``SeedSequence([master, crc32(stage)])`` first 32-bit word."""
    return int(np.random.SeedSequence([int(master), zlib.crc32(stage.encode())]).generate_state(1)[0])


@dataclass
class ExperimentConfig:
    task: str = "schwinger_phase"
    seed: int = 0
    out_dir: str = "runs"
    threads: int = 1
    dataset_path: str | None = None
    # training
    ansatz: str = "qcnn"
    n_layers: int = 3
    restarts: int = 20
    iters: int = 200
    optimizer: str = "cobyla"
    rhobeg: float = 0.5
    # schwinger
    n_sites: int = 8
    ag: float = 2.0
    theta: float = math.pi
    mass_start: float = -2.0
    mass_step: float = 0.05
    mass_count: int = 81
    critical_mass: float | None = 0.143
    hva_layers: int | None = None
    hva_max_layers: int = 8
    hva_target_rel_error: float = 1e-3
    vqe_budget: int = 2000
    vqe_optimizer: str = "cobyla"
    # z2
    z2_coupling: float = 1.0
    z2_fields: tuple = (0.0, 3.0)
    z2_total_time: float = 2.0
    z2_trotter_steps: int = 20
    z2_train_masses: int = 50
    z2_test_masses: int = 10
    z2_probe_site: int = 1
    # qps
    qps_scenario: str = "coupling_case2"
    qps_steps: int = 8
    qps_train: int = 20
    qps_test: int = 10
    qps_g2: float = 1.0
    qps_initial_flavor: str = "f1"
    qps_set_g: tuple = (0.6, 1.0)
    qps_set_gp: tuple = (0.0, 0.4)
    qps_mod_factor: float = 1.2
    qps_sudakov_norm: float = 0.4
    qps_sweep_qcnn: tuple = ()
    qps_sweep_hea: tuple = ()
    # ed
    ed_sizes: tuple = (10, 12, 14, 16, 18, 20)
    ed_grid: tuple = (0.05, 0.30, 0.005)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("z2_fields", "qps_set_g", "qps_set_gp", "qps_sweep_qcnn", "qps_sweep_hea",
                     "ed_sizes", "ed_grid"):
            setattr(self, name, tuple(getattr(self, name)))
        self.validate()

    def validate(self):
        if self.task not in TASKS:
            raise InputError(f"unknown task {self.task!r}; choose from {TASKS}")
        if self.ansatz not in ANSATZE:
            raise InputError(f"unknown ansatz {self.ansatz!r}")
        if self.qps_scenario not in QPS_SCENARIOS:
            raise InputError(f"unknown QPS scenario {self.qps_scenario!r}")
        if self.task in ("qps_coupling", "qps_flavor") and \
                (self.task == "qps_flavor") != (self.qps_scenario == "flavor"):
            raise InputError(f"task {self.task!r} does not match QPS scenario {self.qps_scenario!r}")
        if self.qps_initial_flavor not in ("f1", "f2", "random"):
            raise InputError("qps_initial_flavor must be f1, f2 or random")
        if self.restarts < 1 or self.iters < 1 or self.threads < 1:
            raise InputError("restarts, iters and threads must be >= 1")
        if self.n_layers < 1:
            raise InputError("n_layers must be >= 1")
        if self.mass_count < 1 or self.z2_trotter_steps < 1 or self.qps_steps < 1:
            raise InputError("grid sizes and step counts must be >= 1")
        if len(self.ed_grid) != 3 or not self.ed_grid[0] < self.ed_grid[1] or self.ed_grid[2] <= 0:
            raise InputError("ed_grid is (start, stop, step) with start < stop and step > 0")

    @classmethod
    def default(cls, task, **overrides):
        base = {"task": task}
        if task == "z2_confinement":
            base.update(n_layers=2, restarts=20, iters=200)
        elif task in ("qps_coupling", "qps_flavor"):
            base.update(n_layers=3, restarts=30, iters=2000,
                        qps_scenario="flavor" if task == "qps_flavor" else "coupling_case2")
        base.update(overrides)
        return cls(**base)

    def with_(self, **kw):
        return replace(self, **kw)

    def to_dict(self):
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise InputError("config JSON must be an object")
        return cls.from_dict(d)

    # derived grids
    def mass_grid(self):
        return np.round(self.mass_start + self.mass_step * np.arange(self.mass_count), 10)

    def z2_mass_grids(self):
        n = self.z2_train_masses
        train = np.arange(n) / (n - 1) if n > 1 else np.zeros(1)
        k = self.z2_test_masses
        test = 1 + np.arange(k) / (k - 1) if k > 1 else np.ones(1)
        return train, test

    def ed_grid_values(self):
        a, b, s = self.ed_grid
        return np.round(np.arange(a, b + s / 2, s), 10)

    def seed_for(self, stage):
        return stage_seed(self.seed, stage)
