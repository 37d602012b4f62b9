import logging
import os

import numpy as np

from exceptions import InputError

logger = logging.getLogger(__name__)

STREAM_ROLES = {"error": 0, "measurement": 1}


def ensure_finite(arr, what="operator"):
    """Return `arr` as a complex array, rejecting NaN/Inf entries."""
    arr = np.asarray(arr, dtype=np.complex128)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{what} has non-finite entries")
    return arr


def is_unitary(mat, atol=1e-10):
    mat = np.asarray(mat)
    return np.allclose(mat.conj().T @ mat, np.eye(mat.shape[0]), atol=atol)


def align_global_phase(reference, other):
    """Rotate `other` by the global phase that best matches `reference`."""
    overlap = np.vdot(other, reference)
    if abs(overlap) == 0:
        return other
    return other * (overlap / abs(overlap))


def trial_stream(master_seed, trial, role):
    """
    Counter-based random stream for one trial.

    Streams are keyed by (master seed, trial index, role) so that two simulators
    fed the same key draw identical classical randomness.
    """
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(trial), STREAM_ROLES[role]))
    return np.random.Generator(np.random.Philox(seq))


def worker_count(default=None):
    """Worker pool size, capped by TTNQEC_THREADS."""
    cap = os.environ.get("TTNQEC_THREADS")
    count = default or os.cpu_count() or 1
    if cap:
        try:
            count = min(count, max(1, int(cap)))
        except ValueError:
            logger.warning("ignoring TTNQEC_THREADS=%r, expected an integer", cap)
    return count
