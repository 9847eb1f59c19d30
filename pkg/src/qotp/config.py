"""Numerical tolerances shared by every module.

A single :class:`Tolerances` record holds all thresholds.  Code reads the
active record through :func:`tolerances`; tests and the CLI swap it with
:func:`override_tolerances`, which is context-local and therefore safe to
use from several threads at once.
"""

from __future__ import annotations

import contextlib
import contextvars
import dataclasses
import os
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-12        # DensityMatrix / Hermitian-flag entrywise check
    hermitian_input: float = 1e-10  # precondition of eigh
    trace: float = 1e-10
    positivity: float = 1e-10       # minimum eigenvalue >= -positivity
    pure_norm: float = 1e-12
    unitary: float = 1e-10
    isometry: float = 1e-10
    kraus: float = 1e-10
    probability: float = 1e-10
    pmf: float = 1e-12
    eig_clip: float = 1e-12         # eigenvalues below this are treated as 0
    symmetry: float = 1e-9          # operator norm of SWAP.V - V
    ledger: float = 1e-12


PROFILES = {
    "default": Tolerances(),
    "strict": Tolerances(
        hermitian=1e-13, trace=1e-12, positivity=1e-12, pure_norm=1e-13,
        unitary=1e-12, isometry=1e-12, kraus=1e-12, symmetry=1e-11,
    ),
    "loose": Tolerances(
        hermitian=1e-9, hermitian_input=1e-8, trace=1e-8, positivity=1e-8,
        pure_norm=1e-9, unitary=1e-8, isometry=1e-8, kraus=1e-8, symmetry=1e-7,
    ),
}

PROFILE_ENV_VAR = "QOTP_TOLERANCE_PROFILE"


def profile(name: str) -> Tolerances:
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown tolerance profile {name!r}; choose from {sorted(PROFILES)}") from None


def _initial() -> Tolerances:
    return profile(os.environ.get(PROFILE_ENV_VAR, "default"))


_ACTIVE: contextvars.ContextVar[Tolerances] = contextvars.ContextVar("qotp_tolerances")


def tolerances() -> Tolerances:
    """Return the active tolerance record."""
    try:
        return _ACTIVE.get()
    except LookupError:
        tol = _initial()
        _ACTIVE.set(tol)
        return tol


@contextlib.contextmanager
def override_tolerances(base: Tolerances | None = None, **changes: float):
    """Temporarily replace the active tolerances.

    >>> with override_tolerances(symmetry=1e-6):
    ...     tolerances().symmetry
    1e-06
    """
    tol = dataclasses.replace(base if base is not None else tolerances(), **changes)
    token = _ACTIVE.set(tol)
    try:
        yield tol
    finally:
        _ACTIVE.reset(token)
