"""Shared random-instance helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from kunent import DensityMatrix, ProductOperator, SiteDims


def random_product_operator(dims: SiteDims, rng: np.random.Generator) -> ProductOperator:
    return ProductOperator(
        dims,
        tuple(
            rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            for d in dims.dims
        ),
    )


def random_mixed_state(dims: SiteDims, rng: np.random.Generator, rank: int = 3) -> DensityMatrix:
    d = dims.total_dim
    m = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    mat = m @ m.conj().T
    mat /= np.trace(mat).real
    return DensityMatrix(dims, mat)


def random_pure_product(dims: SiteDims, rng: np.random.Generator) -> np.ndarray:
    """Amplitudes of a random fully product pure state."""
    amp = np.array([1.0 + 0.0j])
    for d in dims.dims:
        z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        amp = np.kron(amp, z / np.linalg.norm(z))
    return amp


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240101)
