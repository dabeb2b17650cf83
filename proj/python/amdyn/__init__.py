"""Python access to the amdyn engines. Documents are exchanged as JSON and CSV text."""

import csv
import io
import json

from . import _core
from ._core import (
    ContractViolation,
    NumericalFailure,
    code_version,
    default_kappa_window,
    delta_m2,
    normalize_delta,
    prox,
)

__all__ = [
    "ContractViolation",
    "NumericalFailure",
    "code_version",
    "compare",
    "default_kappa_window",
    "delta_m2",
    "normalize_delta",
    "prox",
    "run_sweep",
    "simulate",
    "theory",
]


def theory(kappa, m0, *, lambda_=0.01, T=20, n_mc=1_000_000, **opts):
    """Solves the saddle-point equations and returns the theory document as a dict."""
    return json.loads(_core.theory_json(kappa, m0, lambda_, T, n_mc, **opts))


def simulate(n, kappa, m0, *, lambda_=0.01, T=20, seeds=1, first_seed=1, mode="full", workers=0):
    """Runs AM and returns {seed: {column: [values for t = 1..T]}}."""
    text = _core.simulate_csv(n, kappa, m0, lambda_, T, seeds, first_seed, mode, workers)
    runs = {}
    for row in csv.DictReader(io.StringIO(text)):
        run = runs.setdefault(int(row.pop("seed")), {})
        row.pop("t")
        for key, value in row.items():
            run.setdefault(key, []).append(float(value))
    return runs


def simulate_csv(*args, **kwargs):
    """Same as simulate, returning the raw CSV text."""
    return _core.simulate_csv(*args, **kwargs)


def compare(theory_doc, sim_csv, t_sum=0):
    """Comparison report of a theory dict and simulation CSV text."""
    return json.loads(_core.compare_json(json.dumps(theory_doc), sim_csv, t_sum))


def run_sweep(spec, out_dir):
    """Runs or resumes a sweep described by a spec dict."""
    computed, skipped, failed, manifest = _core.run_sweep(json.dumps(spec), str(out_dir))
    return {"computed": computed, "skipped": skipped, "failed": failed, "manifest": manifest}


def cli(*args):
    """Runs the command line in-process; returns (exit code, stdout, stderr)."""
    return _core.cli([str(a) for a in args])
