"""JSON exchange format for matrices, states and operators.

A matrix over a composite space is stored as::

    {"dims": [d_1, ..., d_N], "entries": [[re, im], ...]}

with ``entries`` the row-major entries of the (prod dims) x (prod dims)
matrix.  Single-site factors use ``dims = [d]``.  A product operator file
holds a JSON array of N such factor objects.
"""

from __future__ import annotations

import json
from math import prod
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .tensor import DensityMatrix, ProductOperator, PureState, SiteDims

__all__ = [
    "matrix_to_dict",
    "matrix_from_dict",
    "density_matrix_to_dict",
    "density_matrix_from_dict",
    "load_density_matrix",
    "save_density_matrix",
    "product_operator_to_list",
    "product_operator_from_list",
    "load_product_operator",
    "load_factor",
    "pure_state_to_dict",
]


def matrix_to_dict(mat: np.ndarray, dims: Sequence[int]) -> dict:
    mat = np.asarray(mat, dtype=complex)
    d = prod(int(x) for x in dims)
    if mat.shape != (d, d):
        raise ValueError(f"matrix shape {mat.shape} does not match dims {list(dims)}")
    entries = [[float(z.real), float(z.imag)] for z in mat.reshape(-1)]
    return {"dims": [int(x) for x in dims], "entries": entries}


def matrix_from_dict(obj: Mapping) -> tuple[tuple[int, ...], np.ndarray]:
    if not isinstance(obj, Mapping):
        raise ValueError("matrix object must be a JSON mapping")
    if "dims" not in obj or "entries" not in obj:
        raise ValueError("matrix object needs 'dims' and 'entries' fields")
    try:
        dims = tuple(int(x) for x in obj["dims"])
    except (TypeError, ValueError) as exc:
        raise ValueError(f"invalid dims {obj['dims']!r}") from exc
    if not dims or any(x < 1 for x in dims):
        raise ValueError(f"invalid dims {list(dims)}")
    d = prod(dims)
    entries = obj["entries"]
    if len(entries) != d * d:
        raise ValueError(
            f"expected {d * d} entries for dims {list(dims)}, got {len(entries)}"
        )
    flat = np.empty(d * d, dtype=complex)
    for idx, pair in enumerate(entries):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ValueError(f"entry {idx} must be a [re, im] pair, got {pair!r}")
        flat[idx] = complex(float(pair[0]), float(pair[1]))
    if not np.all(np.isfinite(flat.view(float))):
        raise ValueError("matrix entries must be finite")
    return dims, flat.reshape(d, d)


def density_matrix_to_dict(rho: DensityMatrix) -> dict:
    return matrix_to_dict(rho.mat, rho.dims.dims)


def density_matrix_from_dict(obj: Mapping) -> DensityMatrix:
    dims, mat = matrix_from_dict(obj)
    return DensityMatrix(SiteDims(dims), mat)


def load_density_matrix(path: str | Path) -> DensityMatrix:
    with open(path, encoding="utf-8") as fh:
        return density_matrix_from_dict(json.load(fh))


def save_density_matrix(rho: DensityMatrix, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(density_matrix_to_dict(rho), fh)


def pure_state_to_dict(psi: PureState) -> dict:
    """Serialize a pure state as its rank-one density matrix."""
    return density_matrix_to_dict(psi.to_density_matrix())


def product_operator_to_list(op: ProductOperator) -> list[dict]:
    return [
        matrix_to_dict(f, [d]) for f, d in zip(op.factors, op.dims.dims)
    ]


def product_operator_from_list(objs: Sequence[Mapping]) -> ProductOperator:
    factors = []
    site_dims = []
    for idx, obj in enumerate(objs):
        dims, mat = matrix_from_dict(obj)
        if len(dims) != 1:
            raise ValueError(
                f"factor {idx} must be a single-site matrix (dims of length 1), "
                f"got dims {list(dims)}"
            )
        site_dims.append(dims[0])
        factors.append(mat)
    return ProductOperator(SiteDims(tuple(site_dims)), tuple(factors))


def load_product_operator(path: str | Path) -> ProductOperator:
    with open(path, encoding="utf-8") as fh:
        objs = json.load(fh)
    if not isinstance(objs, list):
        raise ValueError(f"{path}: expected a JSON array of factor objects")
    return product_operator_from_list(objs)


def load_factor(path: str | Path) -> np.ndarray:
    """Load one single-site factor matrix."""
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    dims, mat = matrix_from_dict(obj)
    if len(dims) != 1:
        raise ValueError(f"{path}: expected a single-site matrix, got dims {list(dims)}")
    return mat
