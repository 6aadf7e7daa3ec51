"""Seed derivation.

Run ``r`` of an experiment with root seed ``s`` uses
``numpy.random.SeedSequence(entropy=s, spawn_key=(r, purpose))`` and takes the
first 64-bit word of its state.  ``purpose`` separates independent random inputs
of one run (event stream, uniform field, Brownian data, ...).
"""

import numpy as np

STREAM = 0
UNIFORMS = 1
NOISE = 2
BROWNIAN = 3


def derive_seed(root_seed: int, run_index: int, purpose: int = STREAM) -> int:
    ss = np.random.SeedSequence(entropy=int(root_seed), spawn_key=(int(run_index), int(purpose)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_seeds(root_seed: int, run_index: int) -> dict[str, int]:
    return {"stream": derive_seed(root_seed, run_index, STREAM),
            "uniforms": derive_seed(root_seed, run_index, UNIFORMS)}
