"""Run one configured experiment and persist everything it produces.

A run directory holds ``config.json``, the dataset cache, ``results.json``,
``plot.csv`` (one row per item), ``history.csv`` (best-so-far loss per
restart), ``metrics.csv`` and, for QPS depth sweeps, ``depth_sweep.csv``.
The ED task writes ``scaling_fit.json`` and ``gaps.csv`` instead.  Every file
carries the resolved config; CSVs carry it on a leading ``#`` line.  If a
stage raises, a ``FAILED`` marker with the traceback is left next to whatever
was already written.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
import traceback
from pathlib import Path

import numpy as np

from ..ansatz.qcnn import HeaSpec, QcnnSpec, hea_circuit, qcnn_circuit
from ..ed import critical_mass, gaps_to_csv
from ..errors import InputError
from ..learn import evaluate, train_qcnn
from . import datasets
from .cache import cache_states, load_states
from .config import ExperimentConfig

log = logging.getLogger(__name__)

_QPS_VARIANTS = {"qcnn": "qps", "qcnn_m1": "qps_m1", "qcnn_m2": "qps_m2"}


class _Writer:
    """Single writer for a run directory."""

    def __init__(self, out, cfg):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.cfg_line = "# config: " + json.dumps(cfg.to_dict(), sort_keys=True)
        self.written = []

    def text(self, name, body):
        path = self.out / name
        path.write_text(body)
        self.written.append(name)
        return path

    def json(self, name, obj):
        return self.text(name, json.dumps(obj, indent=2, sort_keys=True, default=_plain) + "\n")

    def csv(self, name, header, rows):
        buf = io.StringIO()
        buf.write(self.cfg_line + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
        return self.text(name, buf.getvalue())


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def qps_spec(cfg, ansatz=None, depth=None):
    ansatz = ansatz or cfg.ansatz
    depth = cfg.n_layers if depth is None else depth
    if ansatz == "hea":
        return HeaSpec(cfg.qps_steps, depth)
    return QcnnSpec(cfg.qps_steps, depth, _QPS_VARIANTS[ansatz], readout_scale=2.0)


def model_for(cfg, dataset):
    """``(spec, circuit, readout scale, loss, evaluation task)`` for a config."""
    if cfg.task == "schwinger_phase":
        spec = QcnnSpec(cfg.n_sites, cfg.n_layers, "schwinger")
        return spec, qcnn_circuit(spec), 1.0, "mse", "sign_classify"
    if cfg.task == "z2_confinement":
        spec = QcnnSpec(dataset.n_qubits, cfg.n_layers, "z2")
        return spec, qcnn_circuit(spec), 1.0, "mse", "sign_classify"
    if cfg.task in ("qps_coupling", "qps_flavor"):
        spec = qps_spec(cfg)
        circ = hea_circuit(spec) if isinstance(spec, HeaSpec) else qcnn_circuit(spec)
        flavor = cfg.qps_scenario == "flavor"
        return (spec, circ, 2.0, "bce" if flavor else "mse",
                "prob_classify" if flavor else "regress")
    raise InputError(f"task {cfg.task!r} does not train a model")


def dataset_for(cfg):
    """Load ``cfg.dataset_path`` when it exists, otherwise generate from the config."""
    if cfg.dataset_path and Path(cfg.dataset_path).exists():
        log.info("loading cached dataset %s", cfg.dataset_path)
        return load_states(cfg.dataset_path)
    ds = datasets.generate(cfg)
    ds.meta["config"] = cfg.to_dict()
    return ds


def _extra_metrics(cfg, ds, metrics):
    """Acceptance-style restricted accuracies on the test split."""
    mean = np.asarray(metrics["mean_yout"])
    test = ds.splits == "test"
    if cfg.task == "schwinger_phase":
        crit = ds.meta.get("critical_mass", cfg.critical_mass)
        sel = test & (np.abs(ds.features[:, 0] - crit) > 0.1)
        key = "test_accuracy_far_from_critical"
    elif cfg.task == "z2_confinement":
        sel = test & (ds.features[:, 0] <= 1.75 + 1e-12)
        key = "test_accuracy_m_le_1.75"
    else:
        return
    if sel.any():
        metrics[key] = float(np.mean(np.sign(mean[sel]) == ds.labels[sel]))


def _metrics_rows(metrics):
    rows = []
    for split in ("train", "test"):
        m = metrics.get(split)
        if not m:
            continue
        per = np.asarray(m["per_restart"])
        name = next(k for k in ("p", "delta", "accuracy") if k in m)
        disp = float(per.std(ddof=1)) if per.size > 1 else 0.0
        rows.append([split, name, float(per.mean()), disp, m["stderr"], per.size])
        if name == "accuracy":
            rows.append([split, "accuracy_of_mean_output", m["accuracy"], 0.0, 0.0, per.size])
    return rows


def _train_and_report(cfg, ds, spec=None, circuit=None):
    spec0, circ0, c, loss, task = model_for(cfg, ds)
    spec, circuit = spec or spec0, circuit or circ0
    res = train_qcnn(ds, spec, loss, cfg.restarts, cfg.iters, cfg.seed_for("train"),
                     threads=cfg.threads, circuit=circuit, method=cfg.optimizer, rhobeg=cfg.rhobeg)
    metrics = evaluate(res, ds, task, circuit, c)
    return res, metrics


def _run_trained(cfg, w):
    ds = dataset_for(cfg)
    if not (cfg.dataset_path and Path(cfg.dataset_path).exists()):
        cache_states(ds, w.out / "dataset.qdl")
        w.written += ["dataset.qdl", "dataset.qdl.json"]
    res, metrics = _train_and_report(cfg, ds)
    _extra_metrics(cfg, ds, metrics)
    names = ds.meta.get("feature_names") or [f"x{i}" for i in range(ds.features.shape[1])]
    xcols = ["m_over_g"] if cfg.task == "schwinger_phase" else list(names)
    w.csv("plot.csv", xcols + ["split", "mean_yout", "std_yout", "label", "flagged"],
          [list(ds.features[i, :len(xcols)]) + [ds.splits[i], metrics["mean_yout"][i],
                                                 metrics["std_yout"][i], ds.labels[i],
                                                 int(ds.flags[i])]
           for i in range(len(ds))])
    w.csv("history.csv", ["restart", "seed", "evaluation", "best_loss"],
          [[k, r.seed, j + 1, v] for k, r in enumerate(res.restarts) for j, v in enumerate(r.history)])
    w.csv("metrics.csv", ["split", "metric", "mean", "std", "stderr", "n"], _metrics_rows(metrics))
    out = {"config": cfg.to_dict(), "task": cfg.task, "metrics": metrics,
           "training": {**res.config, **res.metrics,
                        "restarts": [{"seed": r.seed, "final_loss": r.final_loss,
                                      "n_evals": r.n_evals, "diverged": r.diverged}
                                     for r in res.restarts]},
           "best_params": res.best_params,
           "dataset": {"items": len(ds), "n_qubits": ds.n_qubits,
                       "flagged": int(ds.flags.sum()),
                       "meta": {k: v for k, v in ds.meta.items() if k != "config"}}}
    if cfg.task in ("qps_coupling", "qps_flavor") and (cfg.qps_sweep_qcnn or cfg.qps_sweep_hea):
        out["depth_sweep"] = _depth_sweep(cfg, ds, w)
    return out


def _depth_sweep(cfg, ds, w):
    flavor = cfg.qps_scenario == "flavor"
    key = "p" if flavor else "delta"
    rows, summary = [], []
    for ansatz, depths in (("qcnn", cfg.qps_sweep_qcnn), ("hea", cfg.qps_sweep_hea)):
        for d in depths:
            spec = qps_spec(cfg, ansatz, int(d))
            circ = hea_circuit(spec) if isinstance(spec, HeaSpec) else qcnn_circuit(spec)
            _, metrics = _train_and_report(cfg, ds, spec, circ)
            t = metrics["test"]
            rows.append([ansatz, int(d), circ.n_params, t[key], t["stderr"]])
            summary.append({"ansatz": ansatz, "depth": int(d), "n_params": circ.n_params,
                            key: t[key], "stderr": t["stderr"]})
            log.info("sweep %s depth %d: %s = %.3f +- %.3f", ansatz, d, key, t[key], t["stderr"])
    w.csv("depth_sweep.csv", ["ansatz", "depth", "n_params", key, "stderr"], rows)
    return summary


def _run_ed(cfg, w):
    grid = cfg.ed_grid_values()
    fit, gaps = critical_mass(cfg.ag, cfg.ed_sizes, grid, cfg.theta,
                              progress=lambda n: log.info("ED gap scan N=%d done", n))
    fit_d = json.loads(fit.to_json())
    w.json("scaling_fit.json", {"config": cfg.to_dict(), **fit_d})
    w.text("gaps.csv", w.cfg_line + "\n" + gaps_to_csv(grid, gaps))
    return {"config": cfg.to_dict(), "task": cfg.task, "critical_mass": fit.extrapolated,
            "scaling_fit": fit_d}


def run_experiment(cfg, out_dir=None):
    """Run ``cfg`` end to end; returns the results dictionary written to ``results.json``.

    Timings go to ``run.log`` only, so ``results.json`` is byte-identical for
    identical configs.
    """
    if isinstance(cfg, dict):
        cfg = ExperimentConfig.from_dict(cfg)
    cfg.validate()
    if out_dir is not None:
        cfg = cfg.with_(out_dir=str(out_dir))
    w = _Writer(cfg.out_dir, cfg)
    (w.out / "FAILED").unlink(missing_ok=True)
    w.json("config.json", cfg.to_dict())
    t0 = time.time()
    try:
        results = _run_ed(cfg, w) if cfg.task == "ed_critical_mass" else _run_trained(cfg, w)
        w.json("results.json", results)
    except BaseException as exc:
        (w.out / "FAILED").write_text(
            f"{type(exc).__name__}: {exc}\n\n{traceback.format_exc()}"
            f"\nwritten before failure: {', '.join(w.written)}\n")
        raise
    w.text("run.log", f"task {cfg.task}\nseconds {time.time() - t0:.1f}\n")
    return results


__all__ = ["dataset_for", "model_for", "qps_spec", "run_experiment"]
