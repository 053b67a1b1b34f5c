"""
Keyed random streams for reproducible parallel Monte Carlo.

Every stream is a Philox generator seeded from SeedSequence(seed, spawn_key=key).
Philox is counter-based, so the numbers drawn for a key depend on the key
alone and never on which worker asked for them or in which order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

# Stream purposes; part of the key so different stages never share numbers.
CHANNEL = 0
ALPHABET = 1
PHASE_SCREEN = 2

DEFAULT_BLOCK_SIZE = 1000


class StreamFactory:
    """
    Hands out independent generators keyed by integer tuples.

    Args:
        seed (int): Run seed; non-negative.
    """

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError(f"Seed must be non-negative, got {seed}.")
        self.seed = int(seed)

    def stream(self, *key: int) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.seed, spawn_key=tuple(int(k) for k in key))
        return np.random.Generator(np.random.Philox(sequence))

    def __repr__(self) -> str:
        return f"StreamFactory(seed={self.seed})"


def block_ranges(n_items: int, block_size: int = DEFAULT_BLOCK_SIZE) -> list[tuple[int, int]]:
    """
    Cuts [0, n_items) into consecutive (start, end) blocks of `block_size`;
    the last block gets the remainder. Independent of the worker count.
    """
    if n_items <= 0 or block_size <= 0:
        return []
    return [(start, min(start + block_size, n_items)) for start in range(0, n_items, block_size)]


def draw_blocked(factory: StreamFactory, key: tuple[int, ...], n_items: int, draw, block_size: int = DEFAULT_BLOCK_SIZE) -> np.ndarray:
    """
    Concatenates `draw(rng, size)` over the blocks of `n_items`, each block
    using the stream `key + (block_index,)`.
    """
    parts = [draw(factory.stream(*key, index), end - start)
             for index, (start, end) in enumerate(block_ranges(n_items, block_size))]
    if not parts:
        return np.empty(0)
    return np.concatenate(parts)


def parallel_map(func, items, threads: int = 1) -> list:
    """
    Order-preserving map. `threads` > 1 fans out over a process pool;
    results always come back in item order.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(func, items))
