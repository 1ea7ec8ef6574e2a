# sego/selftest.py
"""
Release gate: gradient checks, entropy-oracle checks and closed-form loss
values. Each check returns (passed, detail); the table is printed and the
exit code is 0 only when every check passes.
"""

import math
from itertools import product

import numpy as np
from logzero import logger

from autograd import ops
from autograd.gradcheck import check_gradients
from autograd.tensor import Tensor
from codingtree.builder import build_coding_tree, flat_tree
from codingtree.entropy import structural_entropy
from codingtree.oracle import brute_force_min_entropy
from detector.metrics import auc
from graphs import fixtures
from objective.losses import infonce

GRADIENT_TOLERANCE = 1e-4
ORACLE_GRAPHS = 25


def _inputs(rng, *shapes):
    out = []
    for shape in shapes:
        x = rng.uniform(-2.0, 2.0, size=shape)
        x[np.abs(x) < 1e-3] = 0.5
        out.append(Tensor(x))
    return out


def _gradient_cases(rng):
    return {
        "matmul": (lambda a, b: ops.sum_all(ops.matmul(a, b)), _inputs(rng, (2, 3), (3, 2))),
        "relu": (lambda x: ops.sum_all(ops.mul(ops.relu(x), x)), _inputs(rng, (4, 4))),
        "bias": (lambda x, b: ops.sum_all(ops.mul(ops.add_bias_rowwise(x, b), x)), _inputs(rng, (3, 2), (1, 2))),
        "exp/log": (lambda x: ops.mean(ops.log(ops.shift(ops.exp(x), 1.0))), _inputs(rng, (3, 3))),
        "grouped sum": (lambda x: ops.sum_all(ops.exp(ops.sum_rows_grouped(x, [0, 1, 0, 1], 2))), _inputs(rng, (4, 2))),
        "gather": (lambda x: ops.sum_all(ops.exp(ops.gather_rows(x, [1, 1, 0]))), _inputs(rng, (2, 3))),
        "cosine": (lambda a, b: ops.sum_all(ops.exp(ops.cosine_similarity_matrix(a, b))), _inputs(rng, (3, 4), (2, 4))),
        "concat/diagonal": (lambda a, b: ops.sum_all(ops.diagonal(ops.matmul(ops.concat_cols(a, b), ops.transpose(ops.concat_cols(b, a))))),
                            _inputs(rng, (3, 1), (3, 2))),
    }


def gradient_checks(seed=0):
    rng = np.random.default_rng(seed)
    results = []
    for name, (fn, inputs) in _gradient_cases(rng).items():
        error = check_gradients(fn, inputs)
        results.append((f"gradient check: {name}", error < GRADIENT_TOLERANCE, f"max rel err {error:.2e}"))
    return results


def entropy_checks(seed=0):
    rng = np.random.default_rng(seed)
    graphs = [fixtures.random_connected(rng, max_nodes=6) for _ in range(ORACLE_GRAPHS)]

    worst_gap, hits = 0.0, 0
    for g in graphs:
        built = structural_entropy(g, build_coding_tree(g, 2))
        _, best = brute_force_min_entropy(g, 2)
        worst_gap = min(worst_gap, built - best)
        hits += abs(built - best) < 1e-9
    results = [("entropy oracle: greedy never beats optimum", worst_gap > -1e-9, f"{hits}/{len(graphs)} optimal")]

    g = fixtures.two_triangles()
    built = structural_entropy(g, build_coding_tree(g, 2))
    _, best = brute_force_min_entropy(g, 2)
    results.append(("entropy oracle: two triangles", abs(built - best) < 1e-9, f"built={built:.6f} best={best:.6f}"))

    ok = all(structural_entropy(g, build_coding_tree(g, k)) <= structural_entropy(g, flat_tree(g)) + 1e-9
             for g, k in product(graphs[:10], (2, 3)))
    results.append(("entropy: built <= flat", ok, ""))

    try:
        for g in graphs[:10]:
            build_coding_tree(g, 2, verify=True)
        results.append(("entropy: incremental deltas", True, ""))
    except AssertionError as e:
        results.append(("entropy: incremental deltas", False, str(e)))
    return results


def loss_checks():
    results = []
    for n in (2, 4, 8):
        z = Tensor(np.ones((n, 3)))
        value = infonce(z, z, 0, 0.2)
        expected = math.log(2 * (n - 1))
        results.append((f"infonce: identical, N={n}", abs(value - expected) < 1e-9, f"{value:.6f}"))
    z = Tensor([[1.0, 0.0], [-1.0, 0.0]])
    value = infonce(z, z, 0, 1.0)
    results.append(("infonce: opposite negatives", abs(value - (math.log(2) - 2)) < 1e-9, f"{value:.6f}"))
    results.append(("auc: pair counting", auc([1, 2, 3, 4], [1, 0, 1, 0]) == 0.25, ""))
    return results


def run_selftest(out=print):
    """Run every check, print a pass/fail table and return the exit code."""
    results = []
    for group in (gradient_checks, entropy_checks, loss_checks):
        try:
            results.extend(group())
        except Exception as e:
            logger.error(f"{group.__name__} raised: {e}", exc_info=True)
            results.append((group.__name__, False, f"raised {type(e).__name__}"))

    width = max(len(name) for name, _, _ in results)
    for name, passed, detail in results:
        out(f"{name:<{width}}  {'PASS' if passed else 'FAIL'}  {detail}".rstrip())
    failed = [name for name, passed, _ in results if not passed]
    if failed:
        out(f"FAILED: {', '.join(failed)}")
        return 1
    out(f"all {len(results)} checks passed")
    return 0
