"""Compressed subgradient methods with server-to-worker compression."""

import json

from . import _core
from ._core import (
    Error,
    Problem,
    bits_for_message,
    compress_permk,
    compress_randk,
    compress_topk,
    default_factor_grid,
    ef21p_constants,
    generate,
    marinap_constants,
)

__all__ = [
    "Error",
    "Problem",
    "bits_for_message",
    "compress_permk",
    "compress_randk",
    "compress_topk",
    "default_factor_grid",
    "ef21p_constants",
    "generate",
    "marinap_constants",
    "run",
    "run_matrix",
    "tune",
]


def run(problem, config):
    """Run one method. `config` uses the keys of the CLI "run" section."""
    return _core.run(problem, json.dumps(config))


def tune(problem, config, factor_grid=None, threads=1):
    return _core.tune(problem, json.dumps(config), list(factor_grid or []), threads)


def run_matrix(matrix, out_dir, threads=1):
    """Run an experiment matrix ("matrix" section keys) and return the manifest."""
    return json.loads(_core.run_matrix(json.dumps(matrix), str(out_dir), threads))
