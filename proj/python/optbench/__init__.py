"""Python access to the optbench core library."""

import json

from . import _core
from ._core import OptbenchError, is_optimized, pearson, speedup

__all__ = [
    "OptbenchError",
    "build_pairs",
    "cfg",
    "count_formulas",
    "ged",
    "ingest",
    "is_optimized",
    "measure_pair",
    "pearson",
    "speedup",
    "summarize",
    "verify",
]


def ingest(path, format=""):
    """Returns {"submissions": [...], "rejects": [{"record", "reason"}]}."""
    return json.loads(_core.ingest(str(path), format))


def build_pairs(corpus, perspective, mode=""):
    return json.loads(_core.build_pairs(str(corpus), perspective, mode))


def count_formulas(corpus):
    user, problem = _core.count_formulas(str(corpus))
    return {"user_oriented": user, "problem_oriented": problem}


def summarize(records):
    """records: iterable of {"candidates": [{"correct", "old_ms", "new_ms"}]}."""
    return json.loads(_core.summarize(json.dumps(list(records))))


def cfg(source):
    return json.loads(_core.cfg(source))


def ged(source_a, source_b, budget=12):
    distance, exact = _core.ged(source_a, source_b, budget)
    return {"distance": distance, "exact": exact}


def verify(method, slow_src, candidate_src, mock_script, workdir, max_iterations=1):
    """Runs one verification job against a scripted (offline) LLM."""
    return json.loads(
        _core.verify(method, slow_src, candidate_src, str(mock_script), max_iterations, str(workdir))
    )


def measure_pair(slow_src, fast_src, tests_dir, workdir, repetitions=5):
    return _core.measure_pair(slow_src, fast_src, str(tests_dir), repetitions, str(workdir))
