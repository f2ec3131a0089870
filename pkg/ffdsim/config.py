"""
Global configuration of ffdsim.

Tolerances are plain module attributes and are read at call time,
so they can be adjusted (or monkeypatched in tests) after import.
"""

import os

# Pauli algebra
prune_threshold = 1e-14

# Circuit validation: |cos phi_m| must stay above this
phase_floor = 1e-9

# Dense oracle / state-vector guard
dense_max_sites = 12

# Polynomial engine
trim_rel = 1e-30  # relative to the largest coefficient
root_residual_tol = 1e-9
root_structure_tol = 1e-8
degeneracy_tol = 1e-8
normalization_tol = 1e-10
escalation_tol = 1e-8
extended_prec = 212  # bits, python-flint arb

# Dynamics
realness_tol = 1e-8

# Worker threads for mode expectations; None reads FFD_THREADS at call time
threads: int | None = None


def thread_count() -> int:
    """`threads` if set, else FFD_THREADS, else the CPU count."""
    if threads is not None:
        return max(1, int(threads))
    raw = os.environ.get("FFD_THREADS")
    if raw is None:
        return max(1, os.cpu_count() or 1)
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError("FFD_THREADS must be an integer", raw) from None


class ResourceError(Exception):
    """Requested dense work exceeds `dense_max_sites`."""


def check_dense(M: int) -> None:
    """
    Raise ResourceError if an M-site dense object would exceed the guard.

    >>> check_dense(4)
    >>> check_dense(dense_max_sites + 1)
    Traceback (most recent call last):
        ...
    ffdsim.config.ResourceError: ...
    """
    if M > dense_max_sites:
        raise ResourceError(
            f"dense work on {M} sites exceeds dense_max_sites={dense_max_sites}"
        )


timing = False
perf_log = []


def perf_event(tag, data, time):
    if timing:
        perf_log.append((tag, data, time))
