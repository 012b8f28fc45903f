"""Central numerical configuration: tolerances and size budgets.

All tolerances used for state validation and equality/detection decisions
live here rather than being scattered through the code.  The dense-matrix
size cap can be overridden with the ``KUNENT_DIM_CAP`` environment variable.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

#: Default cap on the total Hilbert-space dimension D of dense objects.
#: Covers 8 qubits (D=256) and 5 ququarts (D=1024) with headroom.
DEFAULT_DIM_CAP = 4096

#: Cap on the per-copy dimension accepted by the doubled-space oracle.
ORACLE_DIM_CAP = 64

#: Largest particle count for which the subset-sum criterion enumerates
#: all 2^N - 2 nonempty proper subsets.
SUBSET_BUDGET = 16

DIM_CAP_ENV_VAR = "KUNENT_DIM_CAP"


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by all modules.

    hermiticity/trace/psd/norm guard state validation; ``equality`` is the
    bound for exact-identity assertions between two computed quantities;
    ``detection`` is the absolute margin above which a criterion reports a
    violation.
    """

    hermiticity: float = 1e-10
    trace: float = 1e-10
    psd: float = 1e-10
    norm: float = 1e-10
    equality: float = 1e-12
    detection: float = 1e-12


DEFAULT_TOLERANCES = Tolerances()


def dim_cap() -> int:
    """Current dense-matrix dimension cap (env var override wins)."""
    raw = os.environ.get(DIM_CAP_ENV_VAR)
    if raw is None:
        return DEFAULT_DIM_CAP
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(
            f"{DIM_CAP_ENV_VAR} must be an integer, got {raw!r}"
        ) from exc
    if value < 2:
        raise ValueError(f"{DIM_CAP_ENV_VAR} must be >= 2, got {value}")
    return value
