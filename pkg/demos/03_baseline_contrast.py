"""Contrast the exhaustive IDDFS baseline with the oracle-guided parser.

Shows the super-linear blowup of uninformed search as programs get
longer, versus near-constant per-program cost for guided inference.

Run: python3 demos/03_baseline_contrast.py
"""

import statistics
import time

from ngparse import (
    InferConfig,
    SampleBucket,
    SearchConfig,
    build_grammar,
    infer,
    iddfs_parse,
    oracle_selector,
    sample_corpus,
)

g = build_grammar()
selector = oracle_selector(g)
search_cfg = SearchConfig(max_depth=24, time_limit_s=60.0)

print(f"{'length':>7} {'search median':>14} {'guided median':>14}")
for length in (8, 12, 16, 20):
    corpus = sample_corpus(g, SampleBucket(length, length, 1, 12, seed=31), 15)
    search_t, guided_t = [], []
    for tokens, _ in corpus:
        res = iddfs_parse(g, tokens, search_cfg)
        assert res.status == "found"
        search_t.append(res.elapsed_s)
        t0 = time.perf_counter()
        infer(g, tokens, selector, InferConfig(mode="fallback"))
        guided_t.append(time.perf_counter() - t0)
    print(f"{length:>7} {statistics.median(search_t) * 1000:>11.2f} ms "
          f"{statistics.median(guided_t) * 1000:>11.2f} ms")
