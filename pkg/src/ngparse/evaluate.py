"""Generalization study: exact-match and latency grids over exact
(depth, length) cells, for guided inference and the search baseline.

Each cell samples fresh programs from a seed space disjoint from
training ("eval" namespace vs "train"), runs every requested method on
the same programs, and scores exact tree match against the generator's
tree.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .engine import InferConfig, InferenceError, infer, model_selector, oracle_selector
from .grammar import Grammar
from .sampler import SampleBucket, UnsatisfiableBucket, derive_seed, sample_corpus
from .search import SearchConfig, iddfs_parse
from .tree import ast_equal

__all__ = ["EvalRecord", "evaluate_grid", "write_csv", "read_csv"]

KNOWN_METHODS = ("ngsi", "greedy", "beam", "search", "oracle")


@dataclass
class EvalRecord:
    method: str
    depth: int
    length: int
    count: int
    exact_match: float
    mean_time_s: float
    p95_time_s: float
    errors: dict = field(default_factory=dict)


def _make_runner(g, method, model, infer_cfg, search_cfg):
    if method == "search":
        cfg = search_cfg or SearchConfig()

        def run(tokens):
            res = iddfs_parse(g, tokens, cfg)
            return res.tree, (None if res.status == "found" else res.status)

        return run

    if method == "oracle":
        selector = oracle_selector(g)
        cfg = infer_cfg or InferConfig()
    else:
        selector = model_selector(g, model)
        mode = {"ngsi": "fallback", "greedy": "greedy", "beam": "beam"}[method]
        base = infer_cfg or InferConfig()
        cfg = InferConfig(
            mode=mode,
            beam_width=base.beam_width,
            max_recursion_depth=base.max_recursion_depth,
            verify_reconstruction=base.verify_reconstruction,
        )

    def run(tokens):
        try:
            return infer(g, tokens, selector, cfg), None
        except InferenceError as exc:
            return None, exc.kind

    return run


def evaluate_grid(
    g: Grammar,
    methods,
    depths,
    lengths,
    per_cell: int = 100,
    seed: int = 0,
    model=None,
    infer_cfg: InferConfig = None,
    search_cfg: SearchConfig = None,
) -> list:
    """One EvalRecord per (method, depth, length) cell.

    Infeasible cells (no derivation at that exact depth and length) are
    emitted with count 0. All methods in a cell see the same programs.
    """
    if per_cell < 1:
        raise ValueError("per_cell must be >= 1")
    for m in methods:
        if m not in KNOWN_METHODS:
            raise ValueError(f"unknown method {m!r}; known: {KNOWN_METHODS}")
    needs_model = [m for m in methods if m in ("ngsi", "greedy", "beam")]
    if needs_model and model is None:
        raise ValueError(f"methods {needs_model} require a model")

    runners = {m: _make_runner(g, m, model, infer_cfg, search_cfg) for m in methods}
    records = []
    for d in sorted(depths):
        for l in sorted(lengths):
            cell_seed = derive_seed("eval", seed, d, l)
            try:
                bucket = SampleBucket(l, l, d, d, seed=cell_seed)
                programs = sample_corpus(g, bucket, per_cell)
            except (UnsatisfiableBucket, ValueError):
                programs = []
            for method in methods:
                if not programs:
                    records.append(EvalRecord(method, d, l, 0, 0.0, 0.0, 0.0))
                    continue
                matches = 0
                times = []
                errors = {}
                for tokens, truth in programs:
                    t0 = time.perf_counter()
                    tree, err = runners[method](tokens)
                    times.append(time.perf_counter() - t0)
                    if tree is not None and ast_equal(tree, truth):
                        matches += 1
                    elif tree is not None:
                        errors["mismatch"] = errors.get("mismatch", 0) + 1
                    else:
                        errors[err] = errors.get(err, 0) + 1
                records.append(
                    EvalRecord(
                        method,
                        d,
                        l,
                        len(programs),
                        matches / len(programs),
                        float(np.mean(times)),
                        float(np.percentile(times, 95)),
                        errors,
                    )
                )
    records.sort(key=lambda r: (r.method, r.depth, r.length))
    return records


def _format_errors(errors: dict) -> str:
    return ";".join(f"{k}:{v}" for k, v in sorted(errors.items()))


def write_csv(records, path) -> None:
    """Deterministic CSV: sorted rows, 4-decimal rates, 6-decimal times."""
    rows = sorted(records, key=lambda r: (r.method, r.depth, r.length))
    with open(path, "w") as fh:
        fh.write("method,depth,length,count,exact_match,mean_time_s,p95_time_s,errors\n")
        for r in rows:
            fh.write(
                f"{r.method},{r.depth},{r.length},{r.count},"
                f"{r.exact_match:.4f},{r.mean_time_s:.6f},{r.p95_time_s:.6f},"
                f"{_format_errors(r.errors)}\n"
            )


def read_csv(path) -> list:
    records = []
    with open(path) as fh:
        header = fh.readline()
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            method, d, l, count, rate, mean_t, p95_t, errs = line.split(",")
            errors = {}
            if errs:
                for part in errs.split(";"):
                    k, v = part.split(":")
                    errors[k] = int(v)
            records.append(
                EvalRecord(
                    method,
                    int(d),
                    int(l),
                    int(count),
                    float(rate),
                    float(mean_t),
                    float(p95_t),
                    errors,
                )
            )
    return records
