"""Training stack: model output, losses, derivative-free optimisation, VQE scans and QCNN training."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .errors import InputError
from .sim import compile_circuit, run_circuit, run_program, z_expectations

log = logging.getLogger(__name__)

PROB_CLAMP = 1e-7
TASKS = ("sign_classify", "prob_classify", "regress")


@dataclass
class LabeledDataset:
    """States with features, labels and a train/test split.

    ``states`` has shape ``(items, 2**n_qubits)``.  ``preps`` optionally holds
    the bound preparation circuit of each item (they are not needed once the
    states exist and are not cached).  ``flags`` marks items of dubious quality
    (for example VQE points whose optimiser did not converge).
    """

    states: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    splits: np.ndarray
    n_qubits: int
    flags: np.ndarray | None = None
    meta: dict = field(default_factory=dict)
    preps: list | None = None

    def __post_init__(self):
        self.states = np.ascontiguousarray(self.states, dtype=np.complex128)
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim == 1:
            self.features = self.features[:, None]
        self.labels = np.asarray(self.labels, dtype=float)
        self.splits = np.asarray(self.splits, dtype="<U5")
        m = len(self.labels)
        if self.flags is None:
            self.flags = np.zeros(m, dtype=bool)
        self.flags = np.asarray(self.flags, dtype=bool)
        if self.states.shape != (m, 2 ** self.n_qubits):
            raise InputError(f"states shape {self.states.shape} does not match {m} items "
                             f"on {self.n_qubits} qubits")
        if len(self.features) != m or len(self.splits) != m or len(self.flags) != m:
            raise InputError("features, labels, splits and flags must have one entry per item")
        if not set(np.unique(self.splits)) <= {"train", "test"}:
            raise InputError("split entries must be 'train' or 'test'")
        if self.preps is not None and len(self.preps) != m:
            raise InputError("need one preparation circuit per item")

    def __len__(self):
        return len(self.labels)

    def indices(self, split):
        return np.flatnonzero(self.splits == split)

    def subset(self, split):
        idx = self.indices(split)
        return LabeledDataset(self.states[idx], self.features[idx], self.labels[idx],
                              self.splits[idx], self.n_qubits, self.flags[idx], dict(self.meta),
                              None if self.preps is None else [self.preps[i] for i in idx])


@dataclass
class RestartRecord:
    seed: int
    final_loss: float
    params: np.ndarray
    history: np.ndarray
    n_evals: int
    diverged: bool = False


@dataclass
class TrainResult:
    best_params: np.ndarray
    loss_history: np.ndarray
    restarts: list
    metrics: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @property
    def n_diverged(self):
        return sum(r.diverged for r in self.restarts)

    def valid_restarts(self):
        return [r for r in self.restarts if not r.diverged]

    def to_dict(self):
        return {
            "config": self.config,
            "best_params": self.best_params.tolist(),
            "restarts": [
                {"seed": r.seed, "final_loss": r.final_loss, "params": r.params.tolist(),
                 "n_evals": r.n_evals, "diverged": r.diverged}
                for r in self.restarts
            ],
            "metrics": self.metrics,
        }


# ---------------------------------------------------------------------------
# model and losses


def model_output(states, qcnn, params, c=1.0):
    """``c <Z_readout>`` after applying ``qcnn`` to each state.

    The QCNN acts on the trailing ``qcnn.n_qubits`` qubits of the state (so for
    shower data the leading flavour qubit is traced out) and the readout qubit
    is the last qubit.  Accepts a single state or a batch.
    """
    arr = np.asarray(getattr(states, "amplitudes", states))
    single = arr.ndim == 1
    arr = arr.reshape(1 if single else arr.shape[0], -1)
    n = int(round(math.log2(arr.shape[1])))
    if 2 ** n != arr.shape[1]:
        raise InputError("state length is not a power of two")
    if qcnn.n_qubits > n:
        raise InputError(f"circuit on {qcnn.n_qubits} qubits cannot act on {n}-qubit states")
    prog = compile_circuit(qcnn if qcnn.n_qubits == n else _embedded(qcnn, n))
    out = run_program(arr, prog, params)
    probs = np.abs(out.reshape(out.shape[0], -1, 2)) ** 2
    y = c * (probs[:, :, 0].sum(axis=1) - probs[:, :, 1].sum(axis=1))
    return float(y[0]) if single else y


def _embedded(circuit, n):
    cache = circuit.__dict__.setdefault("_embeddings", {})
    if n not in cache or len(cache[n].gates) != len(circuit.gates):
        cache[n] = circuit.embed(n, n - circuit.n_qubits)
    return cache[n]


def readout_z(states, n_qubits):
    return z_expectations(states, n_qubits)[..., -1]


def _pair(preds, labels):
    p = np.asarray(preds, dtype=float).ravel()
    y = np.asarray(labels, dtype=float).ravel()
    if p.size == 0 or p.size != y.size:
        raise InputError("predictions and labels must be non-empty and of equal length")
    return p, y


def mse_loss(preds, labels):
    p, y = _pair(preds, labels)
    return float(np.mean((p - y) ** 2))


def output_probability(preds, c=1.0):
    """Affine map ``[-c, c] -> [0, 1]`` followed by clamping away from 0 and 1."""
    return np.clip((np.asarray(preds, dtype=float) / c + 1) / 2, PROB_CLAMP, 1 - PROB_CLAMP)


def bce_loss(preds, labels, c=1.0):
    p, y = _pair(preds, labels)
    if not np.all((y == 0) | (y == 1)):
        raise InputError("binary cross entropy needs labels in {0, 1}")
    q = output_probability(p, c)
    return float(np.mean(-(y * np.log(q) + (1 - y) * np.log(1 - q))))


LOSSES = {"mse": mse_loss, "bce": bce_loss}


# ---------------------------------------------------------------------------
# optimisation


OPTIMIZERS = ("cobyqa", "cobyla", "slsqp", "nelder-mead")


def minimize(objective, x0, budget, seed=0, method="cobyqa", rhobeg=None, tol=None):
    """Derivative-free local minimisation returning the best point seen.

    ``budget`` bounds the number of objective evaluations (iterations for
    SLSQP).  Non-finite objective values are recorded as ``+inf`` and the
    optimiser sees a large finite penalty instead.  The returned history is
    the best-so-far loss after each evaluation.

    ``cobyqa`` (quadratic trust-region models) is the default; ``cobyla``
    (linear models) is much cheaper per step in many dimensions and is what
    the experiment configurations use.  Both are deterministic, so ``seed``
    only perturbs the Nelder-Mead start.
    """
    if budget < 1:
        raise InputError("budget must be >= 1")
    x0 = np.array(x0, dtype=float).ravel()
    best = [math.inf, x0.copy()]
    hist = []

    def f(x):
        if len(hist) >= budget:
            raise _BudgetExhausted
        try:
            val = float(objective(x))
        except (FloatingPointError, OverflowError, ZeroDivisionError):
            val = math.inf
        if not math.isfinite(val):
            val = math.inf
        if val < best[0]:
            best[0] = val
            best[1] = np.array(x, dtype=float)
        hist.append(best[0])
        return val if math.isfinite(val) else 1e300

    method = method.lower()
    try:
        if method == "cobyla":
            opts = {"maxiter": int(budget), "rhobeg": 0.5 if rhobeg is None else rhobeg}
            if tol is not None:
                opts["tol"] = tol
            _scipy_minimize(f, x0, method="COBYLA", options=opts)
        elif method == "cobyqa":
            opts = {"maxfev": int(budget), "final_tr_radius": tol or 1e-8}
            if rhobeg is not None:
                opts["initial_tr_radius"] = rhobeg
            _scipy_minimize(f, x0, method="COBYQA", options=opts)
        elif method == "slsqp":
            _scipy_minimize(f, x0, method="SLSQP", options={"maxiter": int(budget), "ftol": tol or 1e-12})
        elif method == "nelder-mead":
            rng = np.random.default_rng(seed)
            _scipy_minimize(f, x0 + 1e-12 * rng.standard_normal(x0.size), method="Nelder-Mead",
                            options={"maxfev": int(budget), "xatol": 1e-10, "fatol": tol or 1e-14})
        else:
            raise InputError(f"unknown optimiser {method!r}")
    except _BudgetExhausted:
        pass
    return best[1], np.array(hist)


class _BudgetExhausted(Exception):
    pass


# ---------------------------------------------------------------------------
# VQE


@dataclass
class VqePoint:
    mass: float
    params: np.ndarray
    energy: float
    energy_up: float
    energy_down: float
    flagged: bool = False


def _vqe_energy_fn(spec, mass):
    from .ansatz.hva import hva_circuit
    from .operators import schwinger_hamiltonian

    s = spec.with_mass(mass)
    circ = hva_circuit(s)
    h = schwinger_hamiltonian(s.schwinger_params).to_sparse()
    psi0 = np.zeros(2 ** s.n_sites, dtype=complex)
    psi0[0] = 1

    prog = compile_circuit(circ)

    def energy(theta):
        psi = run_program(psi0, prog, theta)
        return float(np.vdot(psi, h @ psi).real)

    return energy, circ


def vqe_state(spec, mass, params):
    _, circ = _vqe_energy_fn(spec, mass)
    psi0 = np.zeros(2 ** spec.n_sites, dtype=complex)
    psi0[0] = 1
    return run_program(psi0, compile_circuit(circ), params)


def vqe_scan(masses, hva, budget=1000, seed=0, method="cobyla", x0=None, starts=4):
    """Ascending and descending warm-started VQE sweeps; keeps the lower energy per mass.

    The first mass of each sweep is optimised from ``starts`` random points
    ``lambda ~ U[-pi, pi)`` (or from ``x0``); every later mass starts from the
    previous optimum.  The reference state is a stationary point of the
    energy, so starting near ``lambda = 0`` is avoided.  Returns a dict
    ``mass -> VqePoint`` in the order of ``masses``.
    """
    masses = [float(m) for m in masses]
    if not masses:
        raise InputError("mass grid is empty")
    rng = np.random.default_rng(seed)
    if x0 is None:
        inits = [rng.uniform(-np.pi, np.pi, hva.n_params) for _ in range(max(1, starts))]
    else:
        inits = [np.asarray(x0, dtype=float)]
    order = sorted(set(masses))
    sweeps = {}
    for direction, seq in (("up", order), ("down", order[::-1])):
        res = {}
        x = None
        for m in seq:
            energy, _ = _vqe_energy_fn(hva, m)
            cands = inits if x is None else [x]
            best = (None, math.inf)
            for c in cands:
                try:
                    x_opt, hist = minimize(energy, c, budget, seed=seed, method=method)
                    e = float(hist[-1])
                except (ArithmeticError, ValueError) as exc:  # flag and go on
                    log.warning("VQE failed at m/g=%g (%s sweep): %s", m, direction, exc)
                    continue
                if e < best[1]:
                    best = (x_opt, e)
            ok = best[0] is not None and math.isfinite(best[1])
            res[m] = (best[0] if ok else (cands[0] if x is None else x), best[1], ok)
            if ok:
                x = best[0]
        sweeps[direction] = res
    out = {}
    for m in masses:
        xu, eu, oku = sweeps["up"][m]
        xd, ed, okd = sweeps["down"][m]
        x, e = (xu, eu) if eu <= ed else (xd, ed)
        out[m] = VqePoint(m, x, e, eu, ed, flagged=not (oku or okd))
    return out


# ---------------------------------------------------------------------------
# QCNN training


def _restart_seed(seed, r):
    return int(np.random.SeedSequence([int(seed), int(r)]).generate_state(1)[0])


def _run_restart(args):
    states, labels, circ, c, loss_name, iters, seed, method, rhobeg = args
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-np.pi, np.pi, circ.n_params)
    loss = LOSSES[loss_name]

    def objective(theta):
        y = model_output(states, circ, theta, c)
        return loss(y, labels, c) if loss_name == "bce" else loss(y, labels)

    x, hist = minimize(objective, x0, iters, seed=seed, method=method, rhobeg=rhobeg)
    final = float(hist[-1]) if len(hist) else math.inf
    return RestartRecord(seed, final, x, hist, len(hist), diverged=not math.isfinite(final))


def default_threads():
    try:
        return max(1, int(os.environ.get("QDL_THREADS", "1")))
    except ValueError:
        return 1


def train_qcnn(dataset, spec, loss="mse", restarts=20, iters=200, seed=0, threads=None,
               circuit=None, method="cobyla", rhobeg=0.5):
    """Independent COBYLA runs from ``theta ~ U[-pi, pi)``; one seeded generator per restart.

    ``spec`` is a :class:`QcnnSpec` or :class:`HeaSpec`; ``circuit`` overrides the
    circuit built from it.  Restarts are independent, so running them in a
    process pool gives the same result as running them in sequence.
    """
    from .ansatz.qcnn import HeaSpec, hea_circuit, qcnn_circuit

    if loss not in LOSSES:
        raise InputError(f"unknown loss {loss!r}")
    train = dataset.subset("train")
    if len(train) == 0:
        raise InputError("dataset has no training items")
    if circuit is None:
        circuit = hea_circuit(spec) if isinstance(spec, HeaSpec) else qcnn_circuit(spec)
    if circuit.n_qubits > dataset.n_qubits:
        raise InputError("ansatz is larger than the data states")
    c = getattr(spec, "readout_scale", 1.0)
    if isinstance(spec, HeaSpec):
        c = dataset.meta.get("readout_scale", 1.0)
    jobs = [(train.states, train.labels, circuit, c, loss, iters, _restart_seed(seed, r), method, rhobeg)
            for r in range(restarts)]
    threads = default_threads() if threads is None else threads
    if threads > 1 and restarts > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_run_restart, jobs))
    else:
        records = [_run_restart(j) for j in jobs]
    good = [r for r in records if not r.diverged]
    if len(good) < len(records):
        log.warning("%d of %d restarts diverged and are excluded", len(records) - len(good),
                    len(records))
    if not good:
        raise ArithmeticError("every restart diverged")
    best = min(good, key=lambda r: r.final_loss)
    return TrainResult(best.params, best.history, records,
                       config={"loss": loss, "restarts": restarts, "iters": iters, "seed": seed,
                               "optimizer": method,
                               "readout_scale": c, "n_params": circuit.n_params,
                               "ansatz": circuit.name},
                       metrics={"best_loss": best.final_loss, "n_diverged": len(records) - len(good)})


def restart_outputs(result, dataset, circuit, c=1.0):
    """Model outputs of every valid restart on every item, shape ``(restarts, items)``."""
    return np.array([model_output(dataset.states, circuit, r.params, c)
                     for r in result.valid_restarts()])


def evaluate(result, dataset, task, circuit, c=1.0):
    """Task metrics per split, aggregated over the valid restarts of ``result``.

    ``sign_classify``: per-item mean/std of ``y_out`` over restarts, the sign
    accuracy of the mean, and each restart's own sign accuracy.
    ``prob_classify``: fraction of correctly classified items (mapped
    probability above 0.5 means label 1) per restart, then mean
    and standard error over restarts.  ``regress``: ``mean |y_out - label|`` per
    restart, then mean and standard error.
    """
    if task not in TASKS:
        raise InputError(f"unknown task {task!r}")
    y = dataset.labels
    if task == "sign_classify" and not np.all(np.abs(y) == 1):
        raise InputError("sign classification needs labels in {-1, +1}")
    if task == "prob_classify" and not np.all((y == 0) | (y == 1)):
        raise InputError("probability classification needs labels in {0, 1}")
    outs = restart_outputs(result, dataset, circuit, c)
    mean = outs.mean(axis=0)
    std = outs.std(axis=0)
    metrics = {"task": task, "n_restarts": int(outs.shape[0]),
               "mean_yout": mean.tolist(), "std_yout": std.tolist()}
    for split in ("train", "test"):
        idx = dataset.indices(split)
        if idx.size == 0:
            continue
        if task == "sign_classify":
            acc = float(np.mean(np.sign(mean[idx]) == y[idx]))
            per = np.mean(np.sign(outs[:, idx]) == y[idx], axis=1)
            se = float(per.std(ddof=1) / math.sqrt(per.size)) if per.size > 1 else 0.0
            metrics[split] = {"accuracy": acc, "per_restart": per.tolist(),
                              "per_restart_mean": float(per.mean()), "stderr": se}
        else:
            if task == "prob_classify":
                per = np.mean((output_probability(outs[:, idx], c) > 0.5) == (y[idx] == 1), axis=1)
            else:
                per = np.mean(np.abs(outs[:, idx] - y[idx]), axis=1)
            se = float(per.std(ddof=1) / math.sqrt(per.size)) if per.size > 1 else 0.0
            key = "p" if task == "prob_classify" else "delta"
            metrics[split] = {key: float(per.mean()), "stderr": se, "per_restart": per.tolist()}
    return metrics
