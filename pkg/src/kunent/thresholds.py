"""Detection thresholds along white-noise families.

Every trace entering a criterion is linear in rho, and a noise family is an
affine combination of fixed components, so the criterion's trace bundle
along the family is an affine combination of per-component bundles.
`FamilyMargin` precomputes those component bundles once; margin evaluations
at any mixing weights then cost microseconds, which makes bisection and
dense boundary scans cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES
from .criteria import (
    CriterionReport,
    Theorem1Evaluator,
    Theorem2Evaluator,
    ghz_probe,
    w_probe,
    w_tilde_probe,
)
from .states import NoiseFamily, ghz_noise_family, w_noise_family
from .tensor import DensityMatrix

__all__ = [
    "ThresholdResult",
    "BoundaryPoint",
    "FamilyMargin",
    "bisection_threshold",
    "ghz_noise_closed_form",
    "example2_closed_form",
    "ghz_threshold_table",
    "pq_boundary_scan",
    "boundary_scan_csv",
    "threshold_table_csv",
    "COMPARISON_THRESHOLDS_8QUBIT",
]

#: Published thresholds of an alternative (quantum-Fisher-information based)
#: criterion on the same 8-qubit GHZ noise family, k = 1..7.  Shipped as
#: reference constants for the comparison column of the threshold table;
#: never recomputed here.
COMPARISON_THRESHOLDS_8QUBIT = (0.8015, 0.6279, 0.4790, 0.3550, 0.2557, 0.1811, 0.1315)


@dataclass(frozen=True)
class ThresholdResult:
    """Detection threshold along a one-parameter slice of a noise family.

    ``p_star`` is None when the criterion never fires on the slice or when
    the margin slope at the root is too flat (< 1e-9) to trust the root.
    """

    k: int
    p_star: float | None
    method: str
    residual: float


@dataclass(frozen=True)
class BoundaryPoint:
    """One gridline of a boundary scan: scanned-variable root at a fixed
    value of the other mixing weight."""

    k: int
    gridline: float
    star: float | None
    residual: float


class FamilyMargin:
    """Criterion margins along a noise family via affine trace bundles."""

    def __init__(self, family: NoiseFamily, evaluator):
        self.family = family
        self.evaluator = evaluator
        components = [s.to_density_matrix() for s in family.signals]
        d = family.dims.total_dim
        mm = DensityMatrix(
            family.dims, np.eye(d, dtype=complex) / d, _check_psd=False
        )
        components.append(mm)
        self._bundles = [evaluator.traces(c) for c in components]
        self._combine = type(self._bundles[0]).combine

    def _weights(self, params: Sequence[float]) -> list[float]:
        if len(params) != len(self.family.signals):
            raise ValueError(
                f"family takes {len(self.family.signals)} parameters, got {len(params)}"
            )
        weights = [float(p) for p in params]
        if any(w < 0 for w in weights):
            raise ValueError(f"negative mixture weight in {weights}")
        total = sum(weights)
        if total > 1.0 + 1e-12:
            raise ValueError(f"mixture weights sum to {total} > 1")
        return weights + [1.0 - total]

    def report(self, params: Sequence[float], k: int, include_terms: bool = True) -> CriterionReport:
        bundle = self._combine(self._bundles, self._weights(params))
        return self.evaluator.report(bundle, k, include_terms=include_terms)

    def margin(self, params: Sequence[float], k: int) -> float:
        return self.report(params, k, include_terms=False).margin


def _bisect_margin(f, lo: float, hi: float, tol: float, max_iter: int) -> tuple[float | None, float]:
    """Root of a margin function on [lo, hi]; returns (root, residual)."""
    det = DEFAULT_TOLERANCES.detection
    f_hi = f(hi)
    if f_hi <= det:
        return None, f_hi
    f_lo = f(lo)
    if f_lo > det:
        return lo, f_lo
    a, b = lo, hi
    for _ in range(max_iter):
        if b - a <= tol:
            break
        mid = 0.5 * (a + b)
        if f(mid) > 0.0:
            b = mid
        else:
            a = mid
    root = 0.5 * (a + b)
    return root, f(root)


def bisection_threshold(
    family: NoiseFamily,
    evaluator,
    k: int,
    tol: float = 1e-8,
    *,
    fixed: Sequence[float] = (),
    axis: int = 0,
    max_iter: int = 60,
) -> ThresholdResult:
    """Bisect the criterion margin along one family parameter.

    `evaluator` is a criterion evaluator (`Theorem1Evaluator`,
    `Theorem2Evaluator` or `Theorem2K1Evaluator`) whose probes match the
    family dimensions.  `axis` selects which mixing weight is scanned; the
    remaining weights are taken from `fixed` in order.  Margins along the
    family are affine in the scanned weight, so a sign change is a single
    crossing; if the margin never exceeds the detection tolerance the
    result carries ``p_star=None``.
    """
    n_params = len(family.signals)
    if len(fixed) != n_params - 1:
        raise ValueError(f"need {n_params - 1} fixed weights, got {len(fixed)}")
    if not 0 <= axis < n_params:
        raise ValueError(f"axis must be in 0..{n_params - 1}, got {axis}")
    fm = FamilyMargin(family, evaluator)

    def params_at(t: float) -> list[float]:
        params = list(fixed)
        params.insert(axis, t)
        return params

    hi = 1.0 - sum(fixed)
    if hi <= 0.0:
        return ThresholdResult(k=k, p_star=None, method="bisection", residual=float("nan"))

    def f(t: float) -> float:
        return fm.margin(params_at(t), k)

    root, residual = _bisect_margin(f, 0.0, hi, tol, max_iter)
    if root is not None and root > 0.0:
        h = max(tol, 1e-6)
        a = max(root - h, 0.0)
        b = min(root + h, hi)
        slope = abs(f(b) - f(a)) / (b - a)
        if slope < 1e-9:
            return ThresholdResult(k=k, p_star=None, method="bisection", residual=residual)
    return ThresholdResult(k=k, p_star=root, method="bisection", residual=residual)


def ghz_noise_closed_form(n: int, k: int) -> float:
    """Exact detection threshold of the subset-swap criterion with the GHZ
    probe preset on rho(p) = p |GHZ_n><GHZ_n| + (1-p) I/2^n.

    The margin vanishes at (2^{k+1}-2) p/2 = (2^n-2)(1-p)/2^n, i.e.
    p = c / (2^k - 1 + c) with c = (2^n - 2)/2^n.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must satisfy 1 <= k <= {n - 1}, got {k}")
    c = (2**n - 2) / 2**n
    return c / ((2**k - 1) + c)


def example2_closed_form(n: int, k: int, d: int) -> float:
    """Exact detection threshold of the site-probe criterion with the W
    probe preset on rho(p, 0) = p |W><W| + (1-p) I/d^n:

        N(d-1)(2N-k-2) / (k d^N + N(d-1)(2N-k-2)).
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if d < 2:
        raise ValueError(f"need d >= 2, got {d}")
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= {n}, got {k}")
    num = n * (d - 1) * (2 * n - k - 2)
    return num / (k * d**n + num)


def ghz_threshold_table(
    n: int = 8, tol: float = 1e-8
) -> list[tuple[int, float, float | None]]:
    """(k, bisected threshold, comparison constant) for k = 1..n-1.

    The comparison column holds the published alternative-criterion values
    and is only available for the 8-qubit family.
    """
    family = ghz_noise_family(n)
    evaluator = Theorem1Evaluator(*ghz_probe(family.dims))
    fm = FamilyMargin(family, evaluator)
    rows = []
    for k in range(1, n):
        root, _ = _bisect_margin(lambda p: fm.margin([p], k), 0.0, 1.0, tol, 60)
        reference = (
            COMPARISON_THRESHOLDS_8QUBIT[k - 1]
            if n == 8 and k <= len(COMPARISON_THRESHOLDS_8QUBIT)
            else None
        )
        rows.append((k, float(root) if root is not None else float("nan"), reference))
    return rows


def pq_boundary_scan(
    n: int,
    d: int,
    k: int,
    grid: int,
    probe: str = "w",
    tol: float = 1e-8,
) -> list[BoundaryPoint]:
    """Detection boundary of the site-probe criterion over the (p, q) simplex.

    With ``probe="w"`` the scan bisects the W-signal weight p along q
    gridlines j/grid; ``probe="wtilde"`` uses the mirrored probe preset and
    bisects q along p gridlines (the natural parameterization of the
    mirrored detection region).  Gridlines with no crossing are recorded
    with ``star=None``.
    """
    family = w_noise_family(n, d)
    if probe == "w":
        evaluator = Theorem2Evaluator(*w_probe(family.dims))
        axis = 0
    elif probe == "wtilde":
        evaluator = Theorem2Evaluator(*w_tilde_probe(family.dims))
        axis = 1
    else:
        raise ValueError(f"probe must be 'w' or 'wtilde', got {probe!r}")
    if grid < 1:
        raise ValueError(f"grid must be >= 1, got {grid}")
    fm = FamilyMargin(family, evaluator)
    rows = []
    for j in range(grid + 1):
        g = j / grid
        hi = 1.0 - g
        def f(t: float, g: float = g) -> float:
            params = [t, g] if axis == 0 else [g, t]
            return fm.margin(params, k)
        if hi <= 0.0:
            rows.append(BoundaryPoint(k=k, gridline=g, star=None, residual=float("nan")))
            continue
        root, residual = _bisect_margin(f, 0.0, hi, tol, 60)
        rows.append(BoundaryPoint(k=k, gridline=g, star=root, residual=residual))
    return rows


def _fmt(x: float | None) -> str:
    if x is None:
        return "none"
    if isinstance(x, float) and np.isnan(x):
        return "none"
    return f"{x:.10g}"


def boundary_scan_csv(rows: Sequence[BoundaryPoint], gridline_name: str = "q", star_name: str = "p_star") -> str:
    """Deterministic CSV for boundary rows (10 significant digits)."""
    lines = [f"k,{gridline_name},{star_name},margin_residual"]
    for r in rows:
        lines.append(f"{r.k},{_fmt(r.gridline)},{_fmt(r.star)},{_fmt(r.residual)}")
    return "\n".join(lines) + "\n"


def threshold_table_csv(rows: Sequence[tuple[int, float, float | None]]) -> str:
    """Deterministic CSV for the GHZ threshold table."""
    lines = ["k,p_k,p_k_reference"]
    for k, p_k, ref in rows:
        lines.append(f"{k},{_fmt(p_k)},{_fmt(ref)}")
    return "\n".join(lines) + "\n"
