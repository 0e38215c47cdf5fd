"""Comparison reducers: principal component analysis and Gaussian random projection.

Both take a dataset to k output attributes. PCA eigendecomposes the sample
covariance with a cyclic Jacobi sweep; GRP multiplies by a seeded random
normal matrix scaled so squared distances are preserved in expectation.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import DataError, Dataset


@dataclass(frozen=True)
class PcaModel:
    """Fitted PCA basis: training mean, k orthonormal components (rows),
    and their explained variances in non-increasing order."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    def __post_init__(self):
        for field in ("mean", "components", "explained_variance"):
            arr = np.array(getattr(self, field), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, field, arr)
        k, m = self.components.shape
        if self.mean.shape != (m,) or self.explained_variance.shape != (k,):
            raise ValueError("inconsistent PCA model shapes")

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def m(self) -> int:
        return self.components.shape[1]


@dataclass(frozen=True)
class GrpModel:
    """Seeded k-by-m Gaussian projection matrix with entries N(0, 1/k)."""

    projection: np.ndarray
    seed: int

    def __post_init__(self):
        arr = np.array(self.projection, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "projection", arr)

    @property
    def k(self) -> int:
        return self.projection.shape[0]

    @property
    def m(self) -> int:
        return self.projection.shape[1]


def jacobi_eigh(
    a: np.ndarray, tol: float = 1e-10, max_sweeps: int = 100
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecompose a symmetric matrix by cyclic Jacobi rotations.

    Sweeps rotate every off-diagonal pair until the off-diagonal Frobenius
    norm drops below ``tol`` or ``max_sweeps`` sweeps have run. Returns
    eigenvalues in descending order and the matching eigenvectors as columns.
    """
    a = np.array(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, atol=1e-10):
        raise ValueError("matrix must be symmetric")
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = a - np.diag(np.diag(a))
        if np.sqrt((off * off).sum()) < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app, aqq = a[p, p], a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = col_p - s * (col_q + tau * col_p)
                a[:, q] = col_q + s * (col_p - tau * col_q)
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, :] = a[:, p].copy()
                a[q, :] = a[:, q].copy()
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = vp - s * (vq + tau * vp)
                v[:, q] = vq + s * (vp - tau * vq)
    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    return eigenvalues[order], v[:, order]


def pca_fit(train: Dataset, k: int) -> PcaModel:
    """Fit a k-component PCA basis on the training rows.

    Covariance uses the n-1 divisor. Each component's largest-magnitude
    entry is made positive so repeated fits report identical bases.
    """
    n, m = train.n, train.m
    if n < 2:
        raise DataError("PCA needs at least 2 rows")
    if not 1 <= k <= min(n - 1, m):
        raise DataError(f"k={k} out of range for n={n}, m={m}")
    mean = train.values.mean(axis=0)
    centered = train.values - mean
    cov = centered.T @ centered / (n - 1)
    eigenvalues, eigenvectors = jacobi_eigh(cov)
    components = eigenvectors[:, :k].T.copy()
    variance = np.clip(eigenvalues[:k], 0.0, None)
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(mean=mean, components=components, explained_variance=variance)


def pca_transform(model: PcaModel, d: Dataset) -> Dataset:
    """Project rows onto the fitted basis: (row - mean) @ components^T.

    Output attributes are named pc1..pck; labels carry through.
    """
    if d.m != model.m:
        raise DataError(f"dataset has m={d.m}, model expects m={model.m}")
    projected = (d.values - model.mean) @ model.components.T
    names = tuple(f"pc{j + 1}" for j in range(model.k))
    return Dataset(values=projected, attribute_names=names, labels=d.labels)


def grp_model(m: int, k: int, seed: int) -> GrpModel:
    """Draw the k-by-m projection matrix for the given seed, entries N(0, 1/k)."""
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    rng = np.random.default_rng(seed)
    projection = rng.standard_normal((k, m)) / np.sqrt(k)
    return GrpModel(projection=projection, seed=seed)


def grp_transform(d: Dataset, k: int, seed: int) -> Dataset:
    """Gaussian random projection to k dimensions, deterministic per seed.

    The same (seed, k, m) triple always regenerates the same matrix, so
    train and test rows projected separately land in the same space. Output
    attributes are named rp1..rpk.
    """
    model = grp_model(d.m, k, seed)
    projected = d.values @ model.projection.T
    names = tuple(f"rp{j + 1}" for j in range(k))
    return Dataset(values=projected, attribute_names=names, labels=d.labels)


def save_model(model: PcaModel | GrpModel, path) -> None:
    """Serialize a reducer model as flat text, one vector per line."""
    path = Path(path)
    lines = []
    if isinstance(model, PcaModel):
        lines.append(f"pca {model.k} {model.m}")
        lines.append(" ".join(repr(float(x)) for x in model.mean))
        for row in model.components:
            lines.append(" ".join(repr(float(x)) for x in row))
        lines.append(" ".join(repr(float(x)) for x in model.explained_variance))
    elif isinstance(model, GrpModel):
        lines.append(f"grp {model.k} {model.m} {model.seed}")
        for row in model.projection:
            lines.append(" ".join(repr(float(x)) for x in row))
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path) -> PcaModel | GrpModel:
    """Read a model written by :func:`save_model`."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DataError(f"{path} is empty")
    head = lines[0].split()
    vectors = [np.array([float(x) for x in line.split()]) for line in lines[1:]]
    if head[0] == "pca" and len(head) == 3:
        k = int(head[1])
        if len(vectors) != k + 2:
            raise DataError(f"{path}: expected {k + 2} vectors, got {len(vectors)}")
        return PcaModel(
            mean=vectors[0],
            components=np.vstack(vectors[1 : k + 1]),
            explained_variance=vectors[k + 1],
        )
    if head[0] == "grp" and len(head) == 4:
        return GrpModel(projection=np.vstack(vectors), seed=int(head[3]))
    raise DataError(f"{path} is not a saved reducer model")
