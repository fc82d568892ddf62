"""Shared fixtures: the small reference geometry and a couple of helpers."""

import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from daoracle.cit import CodedTree, TreeParams, build_tree, sample_pom
from daoracle.retrieval import ChunkSet

# 8 systematic base symbols at rate 1/4, batch 8, 4-digest root:
# coded layers 32 / 16 / 8 over a root of 4.
SMALL = dict(
    symbol_size=64,
    root_size=4,
    rate=Fraction(1, 4),
    batch=8,
    max_eq_degree=8,
    alpha=0.125,
    code_seed=5,
)

# tree code_seed whose derived base code (k=8, n=32) has the 4-symbol
# stopping set {0, 3, 4, 5}; found by exhaustive subset search, re-verified
# in the tests that use it
BAD_BASE_CODE_SEED = 6
BAD_BASE_STOPPING_SET = (0, 3, 4, 5)


@pytest.fixture(scope="session")
def small_params() -> TreeParams:
    return TreeParams(**SMALL)


@pytest.fixture(scope="session")
def small_block() -> bytes:
    return bytes((i * 37 + 11) % 256 for i in range(512))


@pytest.fixture(scope="session")
def small_tree(small_block, small_params) -> CodedTree:
    return build_tree(small_block, small_params)


def chunkset_for(tree: CodedTree, indices) -> ChunkSet:
    base = tree.layers[-1].symbols
    units = tuple(
        (i, base[i].tobytes(), sample_pom(tree, i)) for i in sorted(set(indices))
    )
    return ChunkSet(tree.commitment, units)


def random_geometries(count=3, seed=20240501):
    """Valid (root_size, rate, batch, levels) draws for the index
    arithmetic property checks."""
    rng = np.random.default_rng(seed)
    picks = []
    options = [
        (2, Fraction(1, 2), 4),
        (3, Fraction(1, 3), 9),
        (4, Fraction(1, 4), 8),
        (6, Fraction(1, 2), 6),
        (4, Fraction(1, 2), 8),
    ]
    while len(picks) < count:
        t, r, q = options[rng.integers(0, len(options))]
        levels = int(rng.integers(2, 5))
        picks.append((t, r, q, levels))
    return picks


def sizes_for(root_size, rate, batch, levels):
    """Coded layer sizes root->base for `levels` coded layers below root."""
    shrink = batch * rate
    sizes = [root_size]
    for _ in range(levels):
        sizes.append(int(sizes[-1] * shrink))
    return sizes
