"""Principal component analysis with a snapshot (Gram-matrix) solver.

For n samples of dimension d with d >> n the d x d covariance is never
formed: the n x n Gram matrix shares its nonzero spectrum and its
eigenvectors map back through the data matrix.  Eigendecomposition uses an
in-repo cyclic Jacobi rotation solver, adequate for the few-hundred-sample
scale this pipeline targets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

_RANK_TOL = 1e-10  # relative eigenvalue cutoff for rank decisions


@dataclass(frozen=True)
class PCAModel:
    mean: np.ndarray          # (d,)
    components: np.ndarray    # (k, d), orthonormal rows, descending variance
    eigenvalues: np.ndarray   # (k,), non-negative, descending
    truncated: bool = False   # fewer nonzero eigenvalues than requested

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def dim(self) -> int:
        return self.components.shape[1]


def jacobi_eigh(matrix: np.ndarray, tol: float = 1e-14,
                max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvalues descending and
    eigenvectors as columns.
    """
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError("jacobi_eigh expects a square matrix")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-9 * max(1.0, float(np.abs(a).max()))):
        raise InvalidInputError("jacobi_eigh expects a symmetric matrix")
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v
    scale = float(np.abs(a).max()) or 1.0
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * scale * n:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= tol * scale:
                    continue
                # rotation angle zeroing a[p, q]
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    eigenvalues = a.diagonal().copy()
    order = np.argsort(-eigenvalues, kind="stable")
    return eigenvalues[order], v[:, order]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Sign convention: the largest-magnitude entry of each component is positive."""
    out = components.copy()
    for i in range(out.shape[0]):
        j = int(np.argmax(np.abs(out[i])))
        if out[i, j] < 0:
            out[i] = -out[i]
    return out


def pca_fit(data: np.ndarray, k: int, method: str = "auto") -> PCAModel:
    """Fit a PCA of k components to an (n, d) data matrix.

    method: 'gram' decomposes the n x n Gram matrix (snapshot method,
    required when d >> n), 'covariance' the d x d covariance; 'auto' picks
    whichever matrix is smaller.  Rank-deficient data yields fewer than k
    usable components; the model is truncated and flagged.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidInputError("data must be a 2-D matrix")
    n, d = x.shape
    if n < 2:
        raise InvalidInputError("need at least 2 samples")
    if not (1 <= k <= min(d, n - 1)):
        raise InvalidInputError(f"k={k} outside [1, min(d, n-1)]={min(d, n - 1)}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("data must be finite")
    if method not in ("auto", "gram", "covariance"):
        raise InvalidInputError(f"unknown method {method!r}")
    if method == "auto":
        method = "gram" if d > n else "covariance"

    mean = x.mean(axis=0)
    centered = x - mean

    if method == "covariance":
        cov = centered.T @ centered / (n - 1)
        eigenvalues, vectors = jacobi_eigh(cov)
        eigenvalues = np.maximum(eigenvalues, 0.0)
        cutoff = _RANK_TOL * (eigenvalues[0] if eigenvalues.size else 0.0)
        usable = int(np.sum(eigenvalues > cutoff))
        kept = min(k, usable) if usable else 1
        components = vectors[:, :kept].T
    else:
        gram = centered @ centered.T / (n - 1)
        eigenvalues, vectors = jacobi_eigh(gram)
        eigenvalues = np.maximum(eigenvalues, 0.0)
        cutoff = _RANK_TOL * (eigenvalues[0] if eigenvalues.size else 0.0)
        usable = int(np.sum(eigenvalues > cutoff))
        kept = min(k, usable) if usable else 1
        # map Gram eigenvectors u back to data space: X_c^T u / ||X_c^T u||
        components = np.empty((kept, d))
        for i in range(kept):
            w = centered.T @ vectors[:, i]
            norm = np.linalg.norm(w)
            if norm == 0.0:
                raise InvalidInputError("degenerate component (zero norm)")
            components[i] = w / norm

    truncated = kept < k
    return PCAModel(mean=mean,
                    components=_fix_signs(components),
                    eigenvalues=eigenvalues[:kept].copy(),
                    truncated=truncated)


def pca_project(model: PCAModel, x: np.ndarray) -> np.ndarray:
    """Coordinates of x in the component basis: components @ (x - mean)."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape[-1] != model.dim:
        raise InvalidInputError(f"dimension mismatch: {arr.shape[-1]} != {model.dim}")
    return (arr - model.mean) @ model.components.T


def pca_reconstruct(model: PCAModel, z: np.ndarray) -> np.ndarray:
    """Back-projection mean + z @ components."""
    arr = np.asarray(z, dtype=np.float64)
    if arr.shape[-1] != model.k:
        raise InvalidInputError(f"dimension mismatch: {arr.shape[-1]} != {model.k}")
    return model.mean + arr @ model.components
