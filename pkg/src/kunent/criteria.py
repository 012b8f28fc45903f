"""Detection criteria for states with fewer than k unentangled particles.

Two inequalities are evaluated, both built from single-copy traces of a
density matrix against product operators:

* **Theorem 1** (subset-swap form): for probes X = x_1 x..x x_N and
  Y = y_1 x..x y_N,

      (2^{k+1} - 2) |Tr[X^dag rho Y]|
          <= sum_alpha sqrt( Tr[rho A_alpha A_alpha^dag]
                           * Tr[rho B_alpha B_alpha^dag] ),

  where alpha runs over the nonempty proper subsets of {1..N} and
  (A_alpha, B_alpha) carry y-factors on alpha / x-factors elsewhere and
  vice versa.  A state containing at least k unentangled particles
  satisfies the inequality, so a positive margin certifies fewer than k.

* **Theorem 2** (site-probe form, equal local dimensions): a base probe
  X and a set omega = {w_1..w_T} of single-site operators define
  X_i^s (w_s substituted at site i) and X_ij^st (two substitutions).
  The summed inequality compares sum |Tr[(X_i^s)^dag rho X_j^t]| against
  factorized bounds; see `theorem2_margin`.  Valid for 1 <= k <= N-1.

Permutation convention
----------------------
Formally both criteria arise from two-copy expressions
Tr[(. x .) P_alpha^dag rho^(x2) P_alpha (. x .)].  This library reads
P_alpha as the *factor-exchange action*: it swaps the per-site operator
factors on alpha between the two copies.  Under that reading every
two-copy trace factorizes exactly into the single-copy traces used here
(the `oracle` module verifies this numerically, and also implements the
rejected matrix-product reading behind a debug flag for comparison: the
two readings disagree, and only the factor-exchange action reproduces
the pure-state value |<psi|Y X^dag|psi>|^2 for the left-hand side).

The k = 1 special form (`theorem2_k1_margin`) checks the per-tuple
inequality |Tr[(X_i^s)^dag rho X_j^t]|^2 <= Tr[rho XX^dag] *
Tr[rho X_ij^st (X_ij^st)^dag].  Caution: that per-tuple bound is only
guaranteed when sites i and j end up in different blocks of the
witnessing partition, so unlike `theorem2_margin` (which is sound for
k = 1) it can fire on states that do contain one unentangled particle.
It is the sharper choice on fully product states; threshold scans use
the summed form for k = 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES, SUBSET_BUDGET
from .tensor import (
    DensityMatrix,
    ProductOperator,
    SiteDims,
    cross_trace,
    sandwich_trace,
    subset_trace_sweep,
)

__all__ = [
    "PermutationAction",
    "CriterionReport",
    "swap_on_subset",
    "site_substituted_operator",
    "theorem1_term",
    "theorem1_margin",
    "theorem2_margin",
    "theorem2_k1_margin",
    "Theorem1Evaluator",
    "Theorem2Evaluator",
    "Theorem2K1Evaluator",
    "Theorem1Traces",
    "Theorem2Traces",
    "ghz_probe",
    "w_probe",
    "w_tilde_probe",
]


@dataclass(frozen=True)
class PermutationAction:
    """Factor-exchange on a subset alpha of sites (1-based indices)."""

    subset: frozenset[int]

    def __post_init__(self) -> None:
        subset = frozenset(int(i) for i in self.subset)
        object.__setattr__(self, "subset", subset)
        if any(i < 1 for i in subset):
            raise ValueError(f"site indices are 1-based, got {sorted(subset)}")

    @staticmethod
    def of(*sites: int) -> "PermutationAction":
        return PermutationAction(frozenset(sites))

    def label(self) -> str:
        return "{" + ",".join(str(i) for i in sorted(self.subset)) + "}"


@dataclass(frozen=True)
class CriterionReport:
    """Outcome of one criterion evaluation.

    `margin` is scaled-LHS minus RHS; positive margin (beyond the detection
    tolerance) certifies that the state contains fewer than k unentangled
    particles.  `degenerate` warns that a probe operator was identically
    zero, making the inequality trivial.
    """

    theorem: str
    k: int
    lhs: float
    rhs: float
    margin: float
    detected: bool
    terms: tuple[tuple[str, float], ...] = ()
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "k": self.k,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "detected": self.detected,
            "degenerate": self.degenerate,
            "terms": [{"label": label, "value": value} for label, value in self.terms],
        }

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def swap_on_subset(
    x: ProductOperator, y: ProductOperator, alpha: PermutationAction
) -> tuple[ProductOperator, ProductOperator]:
    """Exchange the factors of x and y on the sites in alpha.

    Returns (A, B) where A carries y's factors on alpha and x's elsewhere,
    and B the reverse.
    """
    if x.dims.dims != y.dims.dims:
        raise ValueError("x and y must share site dimensions")
    n = x.dims.n
    if any(i > n for i in alpha.subset):
        raise ValueError(f"subset {sorted(alpha.subset)} out of range 1..{n}")
    a_factors = tuple(
        y.factors[i] if (i + 1) in alpha.subset else x.factors[i] for i in range(n)
    )
    b_factors = tuple(
        x.factors[i] if (i + 1) in alpha.subset else y.factors[i] for i in range(n)
    )
    return (
        ProductOperator(x.dims, a_factors),
        ProductOperator(x.dims, b_factors),
    )


def site_substituted_operator(
    x: ProductOperator, site: int, w: np.ndarray
) -> ProductOperator:
    """Copy of x with the factor at `site` (1-based) replaced by w."""
    return x.replace_factor(site, w)


def theorem1_term(
    rho: DensityMatrix,
    x: ProductOperator,
    y: ProductOperator,
    alpha: PermutationAction,
) -> float:
    """One right-hand-side term of the subset-swap inequality.

    sqrt( Tr[rho A_a A_a^dag] * Tr[rho B_a B_a^dag] ) with
    (A_a, B_a) = swap_on_subset(x, y, alpha); equals the factorized value
    of the corresponding two-copy trace.
    """
    a, b = swap_on_subset(x, y, alpha)
    ta = max(sandwich_trace(rho, a), 0.0)
    tb = max(sandwich_trace(rho, b), 0.0)
    return float(np.sqrt(ta * tb))


# --------------------------------------------------------------------------
# Trace bundles: every quantity a criterion needs, as plain arrays that are
# linear in rho.  Evaluating a criterion along a noise family then reduces
# to affine combinations of per-component bundles (see `thresholds`).
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Theorem1Traces:
    """cross = Tr[X^dag rho Y]; subset[mask] = Tr[rho W_mask W_mask^dag]
    where W_mask carries y-factors on the sites whose bit is set."""

    n: int
    cross: complex
    subset: np.ndarray

    @staticmethod
    def combine(bundles: Sequence["Theorem1Traces"], weights: Sequence[float]) -> "Theorem1Traces":
        n = bundles[0].n
        cross = sum(w * b.cross for w, b in zip(weights, bundles))
        subset = sum(w * b.subset for w, b in zip(weights, bundles))
        return Theorem1Traces(n, complex(cross), np.asarray(subset))


@dataclass(frozen=True, eq=False)
class Theorem2Traces:
    """All single-copy traces entering the site-probe inequality.

    cross[s, t, i, j] = Tr[(X_i^s)^dag rho X_j^t]          (i != j, 0-based)
    pair[s, t, i, j]  = Tr[rho X_ij^st (X_ij^st)^dag]
    site[s, i]        = Tr[rho X_i^s (X_i^s)^dag]
    base              = Tr[rho X X^dag]
    """

    n: int
    n_omega: int
    cross: np.ndarray
    pair: np.ndarray
    site: np.ndarray
    base: float

    @staticmethod
    def combine(bundles: Sequence["Theorem2Traces"], weights: Sequence[float]) -> "Theorem2Traces":
        first = bundles[0]
        acc = {
            name: sum(w * getattr(b, name) for w, b in zip(weights, bundles))
            for name in ("cross", "pair", "site", "base")
        }
        return Theorem2Traces(
            first.n, first.n_omega, acc["cross"], acc["pair"], acc["site"], float(acc["base"])
        )


class Theorem1Evaluator:
    """Subset-swap criterion for a fixed probe pair (X, Y)."""

    theorem = "T1"

    def __init__(self, x: ProductOperator, y: ProductOperator):
        if x.dims.dims != y.dims.dims:
            raise ValueError("x and y must share site dimensions")
        if x.dims.n > SUBSET_BUDGET:
            raise ValueError(
                f"N={x.dims.n} exceeds the subset enumeration budget {SUBSET_BUDGET}"
            )
        self.x = x
        self.y = y
        self.dims = x.dims
        self.degenerate = x.is_zero() or y.is_zero()

    def traces(self, rho: DensityMatrix) -> Theorem1Traces:
        pairs = [
            (fx @ fx.conj().T, fy @ fy.conj().T)
            for fx, fy in zip(self.x.factors, self.y.factors)
        ]
        subset = subset_trace_sweep(rho, pairs).real
        return Theorem1Traces(self.dims.n, cross_trace(rho, self.x, self.y), subset)

    def report(self, traces: Theorem1Traces, k: int, include_terms: bool = True) -> CriterionReport:
        n = traces.n
        if not 1 <= k <= n - 1:
            raise ValueError(f"k must satisfy 1 <= k <= {n - 1}, got {k}")
        full = (1 << n) - 1
        clamped = np.maximum(traces.subset, 0.0)
        lhs = abs(traces.cross)
        terms = []
        rhs = 0.0
        for mask in range(1, full):
            term = float(np.sqrt(clamped[mask] * clamped[full ^ mask]))
            rhs += term
            if include_terms:
                sites = "{" + ",".join(str(i + 1) for i in range(n) if mask >> i & 1) + "}"
                terms.append((f"alpha={sites}", term))
        margin = (2 ** (k + 1) - 2) * lhs - rhs
        return CriterionReport(
            theorem=self.theorem,
            k=k,
            lhs=float(lhs),
            rhs=float(rhs),
            margin=float(margin),
            detected=bool(margin > DEFAULT_TOLERANCES.detection),
            terms=tuple(terms),
            degenerate=self.degenerate,
        )

    def evaluate(self, rho: DensityMatrix, k: int) -> CriterionReport:
        if rho.dims.dims != self.dims.dims:
            raise ValueError("state dims do not match probe dims")
        return self.report(self.traces(rho), k)


def _pair_reduced(rho_t: np.ndarray, dims: tuple[int, ...], i: int, j: int,
                  baseline: Sequence[np.ndarray]) -> np.ndarray:
    """rho contracted with baseline factors at every site except i < j.

    Returns the (d_i*d_j, d_i*d_j) block R with Tr[rho (.. g_i .. g_j ..)]
    = Tr[R (g_i x g_j)] for any kept-site factors.
    """
    n = len(dims)
    rest = [m for m in range(n) if m not in (i, j)]
    u_rest = np.array([[1.0 + 0.0j]])
    for m in rest:
        u_rest = np.kron(u_rest, baseline[m])
    perm = [i, j, *rest]
    rho_p = np.transpose(rho_t, perm + [n + p for p in perm])
    kept = dims[i] * dims[j]
    rho_p = rho_p.reshape(kept, u_rest.shape[0], kept, u_rest.shape[0])
    return np.einsum("arbs,sr->ab", rho_p, u_rest)


class Theorem2Evaluator:
    """Site-probe criterion for a base probe X and substitution set omega."""

    theorem = "T2"

    def __init__(self, x: ProductOperator, omegas: Sequence[np.ndarray]):
        d = x.dims.uniform()
        if len(omegas) < 1:
            raise ValueError("omega must contain at least one operator")
        frozen = []
        for idx, w in enumerate(omegas):
            w = np.array(w, dtype=complex)
            if w.shape != (d, d):
                raise ValueError(
                    f"omega[{idx}] must be {d}x{d} to act on a single site, got {w.shape}"
                )
            if not np.all(np.isfinite(w.view(float))):
                raise ValueError(f"omega[{idx}] contains non-finite entries")
            w.setflags(write=False)
            frozen.append(w)
        self.omegas = tuple(frozen)
        self.x = x
        self.dims = x.dims
        self.d = d
        self.degenerate = x.is_zero() or all(not w.any() for w in self.omegas)

    def traces(self, rho: DensityMatrix) -> Theorem2Traces:
        if rho.dims.dims != self.dims.dims:
            raise ValueError("state dims do not match probe dims")
        n, d, big_t = self.dims.n, self.d, len(self.omegas)
        xs = self.x.factors
        baseline = [f @ f.conj().T for f in xs]
        omega_proj = [w @ w.conj().T for w in self.omegas]
        rho_t = rho.mat.reshape(self.dims.dims * 2)

        reduced: dict[tuple[int, int], np.ndarray] = {
            (i, j): _pair_reduced(rho_t, self.dims.dims, i, j, baseline)
            for i in range(n)
            for j in range(i + 1, n)
        }

        def val(i: int, j: int, g_i: np.ndarray, g_j: np.ndarray) -> complex:
            return complex(np.einsum("ab,ba->", reduced[i, j], np.kron(g_i, g_j)))

        cross = np.zeros((big_t, big_t, n, n), dtype=complex)
        pair = np.zeros((big_t, big_t, n, n))
        for i in range(n):
            for j in range(i + 1, n):
                for s in range(big_t):
                    for t in range(big_t):
                        # ordered tuple (i, j): w_s substituted at i, w_t at j
                        cross[s, t, i, j] = val(
                            i, j,
                            xs[i] @ self.omegas[s].conj().T,
                            self.omegas[t] @ xs[j].conj().T,
                        )
                        cross[s, t, j, i] = val(
                            i, j,
                            self.omegas[t] @ xs[i].conj().T,
                            xs[j] @ self.omegas[s].conj().T,
                        )
                        p = val(i, j, omega_proj[s], omega_proj[t]).real
                        pair[s, t, i, j] = p
                        pair[t, s, j, i] = p

        # Single-site blocks R_i: contract the partner slot of a cached pair
        # reduction with its baseline factor.
        site = np.zeros((big_t, n))
        base = 0.0
        for i in range(n):
            partner = 1 if i == 0 else 0
            lo, hi = min(i, partner), max(i, partner)
            red4 = reduced[lo, hi].reshape(d, d, d, d)
            if i == lo:
                r_i = np.einsum("aAbB,BA->ab", red4, baseline[hi])
            else:
                r_i = np.einsum("aAbB,ba->AB", red4, baseline[lo])
            for s in range(big_t):
                site[s, i] = float(np.einsum("ab,ba->", r_i, omega_proj[s]).real)
            if i == 0:
                base = float(np.einsum("ab,ba->", r_i, baseline[i]).real)
        return Theorem2Traces(n, big_t, cross, pair, site, base)

    def report(self, traces: Theorem2Traces, k: int, include_terms: bool = True) -> CriterionReport:
        n, big_t = traces.n, traces.n_omega
        if not 1 <= k <= n - 1:
            raise ValueError(f"k must satisfy 1 <= k <= {n - 1}, got {k}")
        base = max(traces.base, 0.0)
        pair = np.maximum(traces.pair, 0.0)
        site = np.maximum(traces.site, 0.0)
        off = ~np.eye(n, dtype=bool)

        lhs_terms = np.abs(traces.cross)[:, :, off]
        rhs_pair_terms = np.sqrt(base * pair[:, :, off])
        lhs = float(np.sum(lhs_terms))
        rhs_pairs = float(np.sum(rhs_pair_terms))
        rhs_sites = big_t * (n - k - 1) * float(np.sum(site))
        rhs = rhs_pairs + rhs_sites
        margin = lhs - rhs

        terms: list[tuple[str, float]] = []
        if include_terms:
            terms = [
                ("lhs_sum", lhs),
                ("rhs_pair_sum", rhs_pairs),
                ("rhs_site_sum", rhs_sites),
                ("base", base),
            ]
            for s in range(big_t):
                for t in range(big_t):
                    for i in range(n):
                        for j in range(n):
                            if i == j:
                                continue
                            tag = f"s={s + 1},t={t + 1},i={i + 1},j={j + 1}"
                            terms.append((f"cross[{tag}]", float(np.abs(traces.cross[s, t, i, j]))))
                            terms.append((f"pair[{tag}]", float(np.sqrt(base * pair[s, t, i, j]))))
            for s in range(big_t):
                for i in range(n):
                    terms.append((f"site[s={s + 1},i={i + 1}]", float(site[s, i])))
        return CriterionReport(
            theorem=self.theorem,
            k=k,
            lhs=lhs,
            rhs=rhs,
            margin=float(margin),
            detected=bool(margin > DEFAULT_TOLERANCES.detection),
            terms=tuple(terms),
            degenerate=self.degenerate,
        )

    def evaluate(self, rho: DensityMatrix, k: int) -> CriterionReport:
        return self.report(self.traces(rho), k)


class Theorem2K1Evaluator:
    """Per-tuple k = 1 variant; see the module docstring caveat."""

    theorem = "T2_k1"

    def __init__(
        self,
        x: ProductOperator,
        omegas: Sequence[np.ndarray],
        aggregation: str = "max",
    ):
        if aggregation not in ("max", "sum"):
            raise ValueError(f"aggregation must be 'max' or 'sum', got {aggregation!r}")
        self._inner = Theorem2Evaluator(x, omegas)
        self.aggregation = aggregation
        self.dims = self._inner.dims
        self.degenerate = self._inner.degenerate

    def traces(self, rho: DensityMatrix) -> Theorem2Traces:
        return self._inner.traces(rho)

    def report(self, traces: Theorem2Traces, k: int = 1, include_terms: bool = True) -> CriterionReport:
        if k != 1:
            raise ValueError(f"the per-tuple variant is defined for k=1, got k={k}")
        n, big_t = traces.n, traces.n_omega
        base = max(traces.base, 0.0)
        pair = np.maximum(traces.pair, 0.0)
        tuple_margins = np.abs(traces.cross) ** 2 - base * pair

        best_val = -np.inf
        best_idx = (0, 0, 0, 1)
        total = 0.0
        terms: list[tuple[str, float]] = []
        for s in range(big_t):
            for t in range(big_t):
                for i in range(n):
                    for j in range(n):
                        if i == j:
                            continue
                        m = float(tuple_margins[s, t, i, j])
                        if include_terms:
                            tag = f"s={s + 1},t={t + 1},i={i + 1},j={j + 1}"
                            terms.append((f"margin[{tag}]", m))
                        total += m
                        if m > best_val:
                            best_val, best_idx = m, (s, t, i, j)
        margin = total if self.aggregation == "sum" else best_val
        s, t, i, j = best_idx
        witness_tag = f"s={s + 1},t={t + 1},i={i + 1},j={j + 1}"
        if self.aggregation == "max":
            witness_terms = [(f"max_margin[{witness_tag}]", float(best_val))]
        else:
            witness_terms = [("sum_margin", float(total))]
        lhs = float(np.abs(traces.cross[s, t, i, j]) ** 2)
        rhs = float(base * pair[s, t, i, j])
        return CriterionReport(
            theorem=self.theorem,
            k=1,
            lhs=lhs,
            rhs=rhs,
            margin=float(margin),
            detected=bool(margin > DEFAULT_TOLERANCES.detection),
            terms=tuple(witness_terms + terms),
            degenerate=self.degenerate,
        )

    def evaluate(self, rho: DensityMatrix, k: int = 1) -> CriterionReport:
        return self.report(self.traces(rho), k)


def theorem1_margin(
    rho: DensityMatrix, x: ProductOperator, y: ProductOperator, k: int
) -> CriterionReport:
    """Evaluate the subset-swap criterion; positive margin detects <k."""
    return Theorem1Evaluator(x, y).evaluate(rho, k)


def theorem2_margin(
    rho: DensityMatrix,
    x: ProductOperator,
    omega: Sequence[np.ndarray],
    k: int,
) -> CriterionReport:
    """Evaluate the summed site-probe criterion; positive margin detects <k."""
    return Theorem2Evaluator(x, omega).evaluate(rho, k)


def theorem2_k1_margin(
    rho: DensityMatrix,
    x: ProductOperator,
    omega: Sequence[np.ndarray],
    aggregation: str = "max",
) -> CriterionReport:
    """Evaluate the per-tuple k = 1 variant (see module docstring caveat)."""
    return Theorem2K1Evaluator(x, omega, aggregation).evaluate(rho)


# --------------------------------------------------------------------------
# Probe presets
# --------------------------------------------------------------------------


def _ketbra(d: int, row: int, col: int) -> np.ndarray:
    m = np.zeros((d, d), dtype=complex)
    m[row, col] = 1.0
    return m


def ghz_probe(dims: SiteDims) -> tuple[ProductOperator, ProductOperator]:
    """Theorem-1 probes tuned to GHZ-like signals: x_i = |1><0|, y_i = |0><0|."""
    x = ProductOperator(dims, tuple(_ketbra(d, 1, 0) for d in dims.dims))
    y = ProductOperator(dims, tuple(_ketbra(d, 0, 0) for d in dims.dims))
    return x, y


def w_probe(dims: SiteDims) -> tuple[ProductOperator, list[np.ndarray]]:
    """Theorem-2 probes tuned to the W family: x_i = |0><0|,
    omega = {|s><0| : s = 1..d-1}."""
    d = dims.uniform()
    x = ProductOperator(dims, tuple(_ketbra(d, 0, 0) for _ in range(dims.n)))
    omegas = [_ketbra(d, s, 0) for s in range(1, d)]
    return x, omegas


def w_tilde_probe(dims: SiteDims) -> tuple[ProductOperator, list[np.ndarray]]:
    """Mirror of `w_probe` under the level-0/1 swap, tuned to the shifted
    W family: x_i = |1><1|, omega = {|0><1|} + {|s><1| : s = 2..d-1}.

    Conjugating every probe by the unitary that exchanges levels 0 and 1
    maps the W signal onto its shifted partner, so detection thresholds in
    the two noise weights mirror exactly.
    """
    d = dims.uniform()
    x = ProductOperator(dims, tuple(_ketbra(d, 1, 1) for _ in range(dims.n)))
    omegas = [_ketbra(d, 0, 1)] + [_ketbra(d, s, 1) for s in range(2, d)]
    return x, omegas
