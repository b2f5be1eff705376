# crn_osc/utils/helpers.py

import time
from typing import Tuple

import numpy as np


def rng_stream(seed: int, *streams: int) -> np.random.Generator:
    """
    Independent generator for one job.

    Streams are spawned children of the run seed, so results do not depend on
    how jobs are scheduled across workers.

    Args:
        seed: run seed
        streams: job path, e.g. (network index, draw index)

    Returns:
        np.random.Generator: PCG64 generator for this stream
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(streams)))


def parse_cell(text: str) -> Tuple[int, int]:
    """'K,L' -> (K, L)"""
    try:
        k, l = (int(part) for part in text.split(","))
    except ValueError as e:
        raise ValueError(f"expected 'K,L', got '{text}'") from e
    return k, l


class Timer:
    """Wall-clock seconds spent inside a with-block."""

    def __enter__(self) -> "Timer":
        self.start = time.perf_counter()
        self.elapsed = 0.0
        return self

    def __exit__(self, *exc) -> None:
        self.elapsed = time.perf_counter() - self.start
