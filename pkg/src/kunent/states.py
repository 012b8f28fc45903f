"""Constructors for the benchmark states and white-noise families.

Includes the n-qubit GHZ state, the qudit W state and its level-shifted
partner, convex white-noise mixtures, and a seeded generator of states that
contain at least k unentangled particles (used for soundness testing of the
detection criteria).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod, sqrt
from typing import Sequence

import numpy as np

from .tensor import DensityMatrix, PureState, SiteDims, qubits, qudits

__all__ = [
    "Partition",
    "NoiseFamily",
    "ghz",
    "w_state",
    "shift_sigma",
    "w_tilde",
    "mix",
    "random_k_unentangled",
    "ghz_noise_family",
    "w_noise_family",
]


@dataclass(frozen=True)
class Partition:
    """Disjoint nonempty blocks of sites covering {1..n}."""

    blocks: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        blocks = tuple(frozenset(int(i) for i in b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if any(not b for b in blocks):
            raise ValueError("partition blocks must be nonempty")
        union: set[int] = set()
        total = 0
        for b in blocks:
            union |= b
            total += len(b)
        if total != len(union):
            raise ValueError("partition blocks must be pairwise disjoint")
        n = len(union)
        if union != set(range(1, n + 1)):
            raise ValueError(f"blocks must cover 1..{n}, got union {sorted(union)}")

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)


def ghz(n: int) -> PureState:
    """(|0..0> + |1..1>)/sqrt(2) on n qubits."""
    if n < 2:
        raise ValueError(f"GHZ state needs n >= 2 qubits, got {n}")
    dims = qubits(n)
    amp = np.zeros(dims.total_dim, dtype=complex)
    amp[0] = amp[-1] = 1.0 / sqrt(2.0)
    return PureState(dims, amp)


def w_state(n: int, d: int) -> PureState:
    """Equal superposition of the n(d-1) basis states with exactly one site
    excited to a level in 1..d-1 and all other sites in level 0."""
    if n < 2:
        raise ValueError(f"W state needs n >= 2 sites, got {n}")
    if d < 2:
        raise ValueError(f"W state needs local dimension d >= 2, got {d}")
    dims = qudits(n, d)
    amp = np.zeros(dims.total_dim, dtype=complex)
    coeff = 1.0 / sqrt(n * (d - 1))
    for site in range(n):
        stride = d ** (n - 1 - site)
        for level in range(1, d):
            amp[level * stride] = coeff
    return PureState(dims, amp)


def shift_sigma(d: int) -> np.ndarray:
    """Cyclic level-shift matrix: |0> -> |1> -> ... -> |d-1> -> |0>."""
    if d < 2:
        raise ValueError(f"shift needs d >= 2, got {d}")
    sigma = np.zeros((d, d), dtype=complex)
    for level in range(d):
        sigma[(level + 1) % d, level] = 1.0
    return sigma


def w_tilde(n: int, d: int) -> PureState:
    """The W state with the cyclic shift applied to every site."""
    w = w_state(n, d)
    sigma = shift_sigma(d)
    tensor = w.amplitudes.reshape((d,) * n)
    for axis in range(n):
        tensor = np.tensordot(sigma, tensor, axes=(1, axis))
        tensor = np.moveaxis(tensor, 0, axis)
    return PureState(w.dims, tensor.reshape(-1))


def mix(signals: Sequence[tuple[float, PureState]], dims: SiteDims) -> DensityMatrix:
    """Convex mixture sum_i w_i |psi_i><psi_i| + (1 - sum w) I/D.

    Weights must be nonnegative and sum to at most 1 (within 1e-12); the
    remaining weight goes to white noise.  Positivity follows from
    convexity, so the PSD eigencheck is skipped.
    """
    total_dim = dims.total_dim
    weights = [float(w) for w, _ in signals]
    if any(w < 0 for w in weights):
        raise ValueError(f"negative mixture weight in {weights}")
    total = sum(weights)
    if total > 1.0 + 1e-12:
        raise ValueError(f"mixture weights sum to {total} > 1")
    mat = np.eye(total_dim, dtype=complex) * ((1.0 - total) / total_dim)
    for w, psi in signals:
        if psi.dims.dims != dims.dims:
            raise ValueError(
                f"signal dims {psi.dims.dims} do not match family dims {dims.dims}"
            )
        if w > 0.0:
            mat += w * np.outer(psi.amplitudes, psi.amplitudes.conj())
    return DensityMatrix(dims, mat, _check_psd=False)


@dataclass(frozen=True)
class NoiseFamily:
    """One- or two-parameter family mixing signal states with white noise."""

    dims: SiteDims
    signals: tuple[PureState, ...]
    param_names: tuple[str, ...]
    description: str = ""

    def __post_init__(self) -> None:
        if len(self.signals) != len(self.param_names):
            raise ValueError("one parameter name per signal state required")
        for psi in self.signals:
            if psi.dims.dims != self.dims.dims:
                raise ValueError("signal dims do not match family dims")

    def evaluate(self, *weights: float) -> DensityMatrix:
        if len(weights) != len(self.signals):
            raise ValueError(
                f"family {self.description!r} takes {len(self.signals)} "
                f"parameters ({', '.join(self.param_names)}), got {len(weights)}"
            )
        return mix(list(zip(weights, self.signals)), self.dims)


def ghz_noise_family(n: int) -> NoiseFamily:
    """rho(p) = p |GHZ_n><GHZ_n| + (1-p) I/2^n."""
    return NoiseFamily(qubits(n), (ghz(n),), ("p",), f"ghz:{n}")


def w_noise_family(n: int, d: int) -> NoiseFamily:
    """rho(p, q) = p |W><W| + q |W~><W~| + (1-p-q) I/d^n."""
    return NoiseFamily(
        qudits(n, d), (w_state(n, d), w_tilde(n, d)), ("p", "q"), f"w:{n}:{d}"
    )


def _random_ket(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Rotation-invariant random state: normalized complex Gaussian vector."""
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def random_partition(n: int, k: int, rng: np.random.Generator) -> Partition:
    """k singleton blocks plus one (n-k)-site block, singletons uniform."""
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must satisfy 1 <= k <= {n - 1}, got {k}")
    singles = rng.choice(n, size=k, replace=False) + 1
    rest = frozenset(range(1, n + 1)) - set(int(s) for s in singles)
    blocks = tuple(frozenset({int(s)}) for s in sorted(singles)) + (frozenset(rest),)
    return Partition(blocks)


def product_pure_state(
    dims: SiteDims, partition: Partition, block_kets: Sequence[np.ndarray]
) -> PureState:
    """Tensor product of per-block states, laid out in site order."""
    if partition.n != dims.n:
        raise ValueError("partition does not cover the system")
    site_order: list[int] = []
    tensors = []
    for block, ket in zip(partition.blocks, block_kets):
        sites = sorted(block)
        block_dims = [dims.dims[s - 1] for s in sites]
        if prod(block_dims) != ket.size:
            raise ValueError("block state size does not match block dimensions")
        site_order.extend(sites)
        tensors.append(np.asarray(ket, dtype=complex).reshape(block_dims))
    full = tensors[0]
    for t in tensors[1:]:
        full = np.tensordot(full, t, axes=0)
    # Axis i of `full` currently holds site_order[i]; restore site order 1..n.
    perm = np.argsort(site_order)
    full = np.transpose(full, perm)
    return PureState(dims, full.reshape(-1))


def random_k_unentangled(
    dims: SiteDims, k: int, terms: int, seed: int
) -> DensityMatrix:
    """Seeded random state containing at least k unentangled particles.

    Convex mixture of `terms` pure states, each of the form
    |a_1> x .. x |a_k> x |b> for an independently drawn partition
    (k uniform singletons + one (n-k)-site block) and random component
    states; mixture weights are drawn from a flat simplex.
    """
    if terms < 1:
        raise ValueError(f"terms must be >= 1, got {terms}")
    n = dims.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must satisfy 1 <= k <= {n - 1}, got {k}")
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(terms)) if terms > 1 else np.array([1.0])
    signals = []
    for w in weights:
        part = random_partition(n, k, rng)
        kets = [
            _random_ket(prod(dims.dims[s - 1] for s in sorted(block)), rng)
            for block in part.blocks
        ]
        signals.append((float(w), product_pure_state(dims, part, kets)))
    return mix(signals, dims)
