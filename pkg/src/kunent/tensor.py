"""Dense complex linear algebra over composite Hilbert spaces.

Conventions
-----------
- Sites are numbered 1..N.  Site 1 is the *leftmost* (most significant)
  Kronecker factor: the basis index of |b_1 .. b_N> is
  sum_i b_i * prod_{j>i} d_j.
- Everything is dense complex128.  The total dimension D = prod(d_i) is
  rejected above a configurable cap (default 4096, env ``KUNENT_DIM_CAP``).
- All container types are immutable after construction; the wrapped numpy
  arrays are defensive copies marked read-only.

The trace kernels at the bottom (`sandwich_trace`, `cross_trace`,
`product_trace`, `subset_trace_sweep`) evaluate every expectation needed by
the detection criteria on a *single* copy of rho: the operator side is kept
in product form and contracted site by site, so neither a two-copy state
nor (for the kernels) even the assembled N-site operator is ever built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from math import prod
from typing import Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances, dim_cap

__all__ = [
    "SiteDims",
    "ProductOperator",
    "DensityMatrix",
    "PureState",
    "qubits",
    "qudits",
    "kron",
    "assemble",
    "product_trace",
    "sandwich_trace",
    "cross_trace",
    "subset_trace_sweep",
]


def _frozen_complex(a: np.ndarray | Sequence, shape: tuple[int, ...], what: str) -> np.ndarray:
    """Validated read-only complex copy of `a` with the required shape."""
    arr = np.array(a, dtype=complex, order="C")
    if arr.shape != shape:
        raise ValueError(f"{what} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr.view(float))):
        raise ValueError(f"{what} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SiteDims:
    """Local dimensions d_1..d_N of an N-partite system."""

    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) < 2:
            raise ValueError(f"need at least 2 sites, got {len(dims)}")
        if any(d < 2 for d in dims):
            raise ValueError(f"every local dimension must be >= 2, got {dims}")
        cap = dim_cap()
        if prod(dims) > cap:
            raise ValueError(
                f"total dimension {prod(dims)} exceeds the dense-matrix cap {cap}"
            )

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return prod(self.dims)

    def uniform(self) -> int:
        """The shared local dimension; raises if sites differ."""
        d = self.dims[0]
        if any(di != d for di in self.dims):
            raise ValueError(f"sites have unequal dimensions {self.dims}")
        return d


def qubits(n: int) -> SiteDims:
    """Shorthand for n qubit sites."""
    return SiteDims((2,) * n)


def qudits(n: int, d: int) -> SiteDims:
    """Shorthand for n sites of dimension d."""
    return SiteDims((d,) * n)


@dataclass(frozen=True, eq=False)
class ProductOperator:
    """N-site operator given as one square factor per site, M = f_1 x..x f_N."""

    dims: SiteDims
    factors: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if len(self.factors) != self.dims.n:
            raise ValueError(
                f"expected {self.dims.n} factors, got {len(self.factors)}"
            )
        frozen = tuple(
            _frozen_complex(f, (d, d), f"factor for site {i + 1}")
            for i, (f, d) in enumerate(zip(self.factors, self.dims.dims))
        )
        object.__setattr__(self, "factors", frozen)

    def dagger(self) -> "ProductOperator":
        return ProductOperator(self.dims, tuple(f.conj().T for f in self.factors))

    def replace_factor(self, site: int, factor: np.ndarray) -> "ProductOperator":
        """Copy with the factor at `site` (1-based) replaced."""
        if not 1 <= site <= self.dims.n:
            raise ValueError(f"site {site} out of range 1..{self.dims.n}")
        d = self.dims.dims[site - 1]
        new = np.array(factor, dtype=complex)
        if new.shape != (d, d):
            raise ValueError(
                f"replacement factor at site {site} must be {d}x{d}, got {new.shape}"
            )
        factors = list(self.factors)
        factors[site - 1] = new
        return ProductOperator(self.dims, tuple(factors))

    @staticmethod
    def identity(dims: SiteDims) -> "ProductOperator":
        return ProductOperator(dims, tuple(np.eye(d, dtype=complex) for d in dims.dims))

    def is_zero(self) -> bool:
        """True when some factor (hence the assembled operator) is exactly 0."""
        return any(not f.any() for f in self.factors)


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized state vector over the composite space."""

    dims: SiteDims
    amplitudes: np.ndarray
    tolerances: Tolerances = field(
        default=DEFAULT_TOLERANCES, repr=False, compare=False, kw_only=True
    )

    def __post_init__(self) -> None:
        amp = _frozen_complex(self.amplitudes, (self.dims.total_dim,), "amplitudes")
        object.__setattr__(self, "amplitudes", amp)
        norm2 = float(np.vdot(amp, amp).real)
        if abs(norm2 - 1.0) > self.tolerances.norm:
            raise ValueError(f"state is not normalized: |psi|^2 = {norm2!r}")

    def to_density_matrix(self) -> "DensityMatrix":
        mat = np.outer(self.amplitudes, self.amplitudes.conj())
        return DensityMatrix(self.dims, mat, _check_psd=False)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Dense density operator with recorded per-site dimensions.

    Hermiticity and unit trace are always verified.  Positivity is verified
    via full eigendecomposition when constructed from raw entries; convex
    mixtures of already-valid states pass ``_check_psd=False`` because
    convexity preserves positivity.
    """

    dims: SiteDims
    mat: np.ndarray
    tolerances: Tolerances = field(
        default=DEFAULT_TOLERANCES, repr=False, compare=False, kw_only=True
    )
    _check_psd: bool = field(default=True, repr=False, compare=False, kw_only=True)

    def __post_init__(self) -> None:
        d = self.dims.total_dim
        mat = _frozen_complex(self.mat, (d, d), "density matrix")
        object.__setattr__(self, "mat", mat)
        tol = self.tolerances
        herm_dev = float(np.max(np.abs(mat - mat.conj().T)))
        if herm_dev > tol.hermiticity:
            raise ValueError(f"density matrix is not Hermitian (deviation {herm_dev:.3e})")
        tr = complex(np.trace(mat))
        if abs(tr - 1.0) > tol.trace:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        if self._check_psd:
            lo = float(np.linalg.eigvalsh(mat)[0])
            if lo < -tol.psd:
                raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the configured size cap enforced."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    rows = a.shape[0] * b.shape[0]
    if rows > dim_cap():
        raise ValueError(
            f"Kronecker product of size {rows} exceeds the dense-matrix cap {dim_cap()}"
        )
    return np.kron(a, b)


def assemble(op: ProductOperator) -> np.ndarray:
    """Dense D x D matrix f_1 x f_2 x .. x f_N (site 1 most significant)."""
    return reduce(np.kron, op.factors)


def _check_dims(rho: DensityMatrix, *ops: ProductOperator) -> None:
    for op in ops:
        if op.dims.dims != rho.dims.dims:
            raise ValueError(
                f"operator dims {op.dims.dims} do not match state dims {rho.dims.dims}"
            )


def _contract_leading_site(mat: np.ndarray, d: int, g: np.ndarray) -> np.ndarray:
    """Partial trace of `g` against the leading site of an operator block.

    `mat` is (d*R, d*R) over sites (s, s+1..N); returns the (R, R) block
    rho'[r, c] = sum_{a,b} mat[(a,r),(b,c)] g[b,a], so that
    Tr[mat (g x G)] == Tr[rho' G] for every G.
    """
    rest = mat.shape[0] // d
    view = mat.reshape(d, rest, d, rest)
    return np.einsum("arbs,ba->rs", view, g)


def product_trace(rho: DensityMatrix, factors: Sequence[np.ndarray]) -> complex:
    """Tr[rho (g_1 x .. x g_N)] contracted site by site, never assembling g."""
    dims = rho.dims.dims
    if len(factors) != len(dims):
        raise ValueError(f"expected {len(dims)} factors, got {len(factors)}")
    mat = rho.mat
    for d, g in zip(dims, factors):
        g = np.asarray(g, dtype=complex)
        if g.shape != (d, d):
            raise ValueError(f"factor shape {g.shape} does not match site dimension {d}")
        mat = _contract_leading_site(mat, d, g)
    return complex(mat[0, 0])


def sandwich_trace(rho: DensityMatrix, m: ProductOperator) -> float:
    """Tr[M^dag rho M] = Tr[rho M M^dag] for a product operator M.

    Nonnegative for any valid state; values in [-psd_tol, 0) from rounding
    are clamped to 0.
    """
    _check_dims(rho, m)
    value = product_trace(rho, [f @ f.conj().T for f in m.factors]).real
    if -rho.tolerances.psd <= value < 0.0:
        return 0.0
    return value


def cross_trace(rho: DensityMatrix, x: ProductOperator, y: ProductOperator) -> complex:
    """Tr[X^dag rho Y]; for pure rho = |psi><psi| this is <psi|Y X^dag|psi>."""
    _check_dims(rho, x, y)
    return product_trace(
        rho, [fy @ fx.conj().T for fx, fy in zip(x.factors, y.factors)]
    )


def subset_trace_sweep(
    rho: DensityMatrix,
    pairs: Sequence[tuple[np.ndarray, np.ndarray]],
) -> np.ndarray:
    """All 2^N traces Tr[rho (w_1 x .. x w_N)] with w_i in {u_i, v_i}.

    ``pairs[i] = (u, v)`` supplies the two candidate factors for site i+1;
    the result is indexed by a bitmask where bit i set means site i+1 uses
    ``v``.  Computed by a binary contraction sweep in O(D^2) total instead
    of 2^N independent kron chains.
    """
    dims = rho.dims.dims
    if len(pairs) != len(dims):
        raise ValueError(f"expected {len(dims)} factor pairs, got {len(pairs)}")

    def rec(mat: np.ndarray, site: int) -> np.ndarray:
        if site == len(dims):
            return np.array([mat[0, 0]])
        d = dims[site]
        u, v = pairs[site]
        res_u = rec(_contract_leading_site(mat, d, np.asarray(u, dtype=complex)), site + 1)
        res_v = rec(_contract_leading_site(mat, d, np.asarray(v, dtype=complex)), site + 1)
        out = np.empty(2 * res_u.size, dtype=complex)
        out[0::2] = res_u
        out[1::2] = res_v
        return out

    return rec(rho.mat, 0)
