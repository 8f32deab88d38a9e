"""Command line entry point ``qdl``.

Exit codes: 0 success, 1 experiment failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..errors import InputError
from ..learn import default_threads
from .cache import cache_states, load_states
from .config import ANSATZE, QPS_SCENARIOS, ExperimentConfig
from .runner import dataset_for, run_experiment

log = logging.getLogger("qdl")

_SUBCOMMAND_TASK = {
    "ed-critical-mass": "ed_critical_mass",
    "schwinger-run": "schwinger_phase",
    "z2-run": "z2_confinement",
}


def _ints(text):
    return tuple(int(t) for t in text.split(",") if t.strip())


def _common(p):
    p.add_argument("--config", type=Path, help="JSON config file; flags override its fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, help="worker processes (default: $QDL_THREADS or 1)")
    p.add_argument("--iters", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--set", action="append", default=[], metavar="KEY=JSON",
                   help="override any config field, value parsed as JSON")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    ap = argparse.ArgumentParser(prog="qdl", description="Quantum deep learning experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ed-critical-mass", help="finite-size scaling of the Schwinger mass gap")
    _common(p)
    p.add_argument("--sizes", type=_ints, help="comma separated even lattice sizes")

    p = sub.add_parser("schwinger-run", help="phase recognition on VQE ground states")
    _common(p)
    p.add_argument("--critical-mass", type=float)

    p = sub.add_parser("z2-run", help="confinement classification on Trotter-evolved states")
    _common(p)

    p = sub.add_parser("qps-run", help="parton-shower regression or flavour classification")
    _common(p)
    p.add_argument("--scenario", choices=QPS_SCENARIOS,
                   help="default: the config file's scenario, else coupling_case2")
    p.add_argument("--ansatz", choices=ANSATZE)
    p.add_argument("--layers", type=int)
    p.add_argument("--sweep-qcnn", type=_ints, help="QCNN depths for an accuracy-vs-depth sweep")
    p.add_argument("--sweep-hea", type=_ints, help="HEA depths for the sweep")

    p = sub.add_parser("dataset-gen", help="generate and cache a dataset")
    _common(p)
    p.add_argument("--task", required=True,
                   choices=("schwinger_phase", "z2_confinement", "qps_coupling", "qps_flavor"))
    p.add_argument("--scenario", choices=QPS_SCENARIOS)

    p = sub.add_parser("dataset-inspect", help="summarise a cached dataset")
    p.add_argument("path", type=Path)
    p.add_argument("-v", "--verbose", action="store_true")
    return ap


def _file_fields(args):
    if args.config is None:
        return {}
    try:
        fields = json.loads(args.config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(fields, dict):
        raise InputError("config JSON must be an object")
    return fields


def resolve_config(args, task):
    """Defaults for ``task``, then the config file, then individual flags."""
    fields = _file_fields(args)
    if fields.get("task", task) != task:
        raise InputError(f"config is for task {fields['task']!r}, command runs {task!r}")
    fields["task"] = task
    scenario = getattr(args, "scenario", None)
    if task.startswith("qps"):
        fields.setdefault("qps_scenario", scenario or ("flavor" if task == "qps_flavor"
                                                       else "coupling_case2"))
        if scenario:
            fields["qps_scenario"] = scenario
    for flag, key in (("seed", "seed"), ("out", "out_dir"), ("threads", "threads"),
                      ("iters", "iters"), ("restarts", "restarts"), ("sizes", "ed_sizes"),
                      ("critical_mass", "critical_mass"), ("ansatz", "ansatz"),
                      ("layers", "n_layers"), ("sweep_qcnn", "qps_sweep_qcnn"),
                      ("sweep_hea", "qps_sweep_hea")):
        val = getattr(args, flag, None)
        if val is not None:
            fields[key] = val
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep:
            raise InputError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            fields[key] = json.loads(raw)
        except json.JSONDecodeError:
            fields[key] = raw
    if "threads" not in fields:
        fields["threads"] = default_threads()
    if "out_dir" not in fields:
        fields["out_dir"] = str(Path("runs") / task)
    known = {f for f in ExperimentConfig.__dataclass_fields__}
    unknown = set(fields) - known
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    try:
        return ExperimentConfig.default(**fields)
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid config value: {exc}") from exc


def inspect(path):
    ds = load_states(path)
    norms = np.linalg.norm(ds.states, axis=1)
    lines = [
        f"file        {path}",
        f"items       {len(ds)} ({(ds.splits == 'train').sum()} train, {(ds.splits == 'test').sum()} test)",
        f"qubits      {ds.n_qubits}",
        f"task        {ds.meta.get('task', '?')}",
        f"features    {ds.meta.get('feature_names', ds.features.shape[1])}",
        f"labels      min {ds.labels.min():.4g}  max {ds.labels.max():.4g}",
        f"flagged     {int(ds.flags.sum())}",
        f"norm drift  {np.abs(norms - 1).max():.2e}",
    ]
    return "\n".join(lines)


def _dispatch(args):
    cmd = args.command
    if cmd == "dataset-inspect":
        print(inspect(args.path))
        return
    if cmd == "dataset-gen":
        task = args.task
        if task.startswith("qps") and args.scenario:
            task = "qps_flavor" if args.scenario == "flavor" else "qps_coupling"
        cfg = resolve_config(args, task)
        path = Path(cfg.out_dir) / "dataset.qdl"
        cache_states(dataset_for(cfg.with_(dataset_path=None)), path)
        print(inspect(path))
        return
    if cmd == "qps-run":
        scenario = args.scenario or _file_fields(args).get("qps_scenario", "coupling_case2")
        task = "qps_flavor" if scenario == "flavor" else "qps_coupling"
    else:
        task = _SUBCOMMAND_TASK[cmd]
    cfg = resolve_config(args, task)
    results = run_experiment(cfg)
    summary = {k: v for k, v in results.get("metrics", {}).items()
               if k in ("train", "test") or k.startswith("test_accuracy")}
    for split in ("train", "test"):
        if split in summary:
            summary[split] = {k: v for k, v in summary[split].items() if k != "per_restart"}
    if "critical_mass" in results:
        summary["critical_mass"] = results["critical_mass"]
    print(json.dumps(summary, indent=2, sort_keys=True))
    print(f"artifacts in {cfg.out_dir}")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _dispatch(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # experiment failure; the run directory holds FAILED
        log.debug("failure", exc_info=True)
        print(f"experiment failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
