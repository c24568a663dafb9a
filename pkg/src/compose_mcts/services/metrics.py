"""Evaluation metrics and report tables.

Generative quality is measured on features of the state rasters: a
Fréchet distance between Gaussian fits and k-NN precision/recall. Rates
delegate to the environment predicates.
"""

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

from ..lib.exceptions import DataError

logger = logging.getLogger(__name__)

COMPOSITION_COLUMNS = ["Method", "Easy", "Hard", "Average", "Valid"]
GENERATION_COLUMNS = ["Method", "FID-like", "Pre", "Rec", "Val%"]


@dataclass
class FeatureSet:
    values: np.ndarray
    extractor: str = "raw"

    def __post_init__(self) -> None:
        self.values = np.atleast_2d(np.asarray(self.values, dtype=np.float64))

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.values).tobytes()).hexdigest()[:16]


class RasterPCA:
    """Principal components of flattened rasters, fitted on the reference set."""

    extractor_id = "raster-pca"

    def __init__(self, dim: int = 64):
        self.dim = dim
        self.mean: Optional[np.ndarray] = None
        self.components: Optional[np.ndarray] = None

    def fit(self, rasters: np.ndarray) -> "RasterPCA":
        data = np.asarray(rasters, dtype=np.float64).reshape(len(rasters), -1)
        self.mean = data.mean(axis=0)
        _, _, vt = np.linalg.svd(data - self.mean, full_matrices=False)
        self.components = vt[: min(self.dim, vt.shape[0])]
        return self

    def transform(self, rasters: np.ndarray) -> FeatureSet:
        if self.components is None:
            raise DataError("RasterPCA used before fit")
        data = np.asarray(rasters, dtype=np.float64).reshape(len(rasters), -1)
        return FeatureSet((data - self.mean) @ self.components.T, self.extractor_id)


def _psd_eigvals(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Eigenvalues below 1e-10 are rounding noise of a rank-deficient covariance.
    eigvals, eigvecs = np.linalg.eigh((matrix + matrix.T) / 2.0)
    return np.where(eigvals < 1e-10, 0.0, eigvals), eigvecs


def _sqrt_psd(matrix: np.ndarray) -> np.ndarray:
    eigvals, eigvecs = _psd_eigvals(matrix)
    return (eigvecs * np.sqrt(eigvals)) @ eigvecs.T


def frechet_distance(a: FeatureSet, b: FeatureSet) -> float:
    """Squared Fréchet distance between Gaussian fits of two feature sets."""
    if a.dim != b.dim:
        raise DataError(f"feature dimensions differ: {a.dim} != {b.dim}")
    if len(a) < 2 or len(b) < 2:
        raise DataError("Fréchet distance needs at least two samples per set")
    mu_a, mu_b = a.values.mean(axis=0), b.values.mean(axis=0)
    cov_a = np.atleast_2d(np.cov(a.values, rowvar=False))
    cov_b = np.atleast_2d(np.cov(b.values, rowvar=False))
    root_a = _sqrt_psd(cov_a)
    trace_sqrt = float(np.sqrt(_psd_eigvals(root_a @ cov_b @ root_a)[0]).sum())
    diff = mu_a - mu_b
    return float(diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * trace_sqrt)


def knn_radii(real: FeatureSet, k: int = 3) -> np.ndarray:
    """Distance from each real sample to its k-th nearest other real sample."""
    n = len(real)
    if k < 1 or k >= n:
        raise DataError(f"k-NN radii need k in [1, n-1]; got k={k}, n={n}")
    dist = cdist(real.values, real.values)
    np.fill_diagonal(dist, np.inf)
    return np.sort(dist, axis=1, kind="stable")[:, k - 1]


def precision_recall(real: FeatureSet, gen: FeatureSet, k: int = 3) -> tuple[float, float]:
    if len(gen) < 1:
        raise DataError("precision/recall needs at least one generated sample")
    radii = knn_radii(real, k)
    inside = cdist(gen.values, real.values) <= radii[None, :]
    return float(inside.any(axis=1).mean()), float(inside.any(axis=0).mean())


def validity_rate(env: Any, states: Sequence[Any]) -> float:
    if not states:
        raise DataError("validity rate of an empty batch")
    return float(np.mean([env.is_valid(s) for s in states]))


def success_rate(env: Any, states: Sequence[Any]) -> float:
    """Terminal states whose oracle score is a full match."""
    if not states:
        raise DataError("success rate of an empty batch")
    return float(np.mean([env.is_complete(s) and env.oracle_score(s) >= 1.0 for s in states]))


def round_half_even(frame: pd.DataFrame, decimals: int = 2) -> pd.DataFrame:
    numeric = frame.select_dtypes("number").columns
    out = frame.copy()
    out[numeric] = np.round(out[numeric].to_numpy(dtype=np.float64), decimals)
    return out


def report(rows: Sequence[dict[str, Any]], columns: Sequence[str], out_dir: Path, name: str) -> pd.DataFrame:
    """Write ``name``.csv and ``name``.md with a fixed column order."""
    frame = round_half_even(pd.DataFrame(list(rows), columns=list(columns)))
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out_dir / f"{name}.csv", index=False)
        (out_dir / f"{name}.md").write_text(frame.to_markdown(index=False) + "\n", encoding="utf-8")
    except OSError as e:
        raise DataError(f"Cannot write report {name} in {out_dir}: {e}") from e
    logger.info(f"Report written: {out_dir / name}.csv")
    return frame


def cached_features(
    cache_dir: Optional[Path],
    extractor_id: str,
    source: np.ndarray,
    compute: Callable[[], FeatureSet],
) -> FeatureSet:
    """Reuse features stored under (extractor id, source digest) when present."""
    if cache_dir is None:
        return compute()
    key = hashlib.sha256(np.ascontiguousarray(source).tobytes()).hexdigest()[:16]
    path = Path(cache_dir) / f"{extractor_id}-{key}.npy"
    if path.exists():
        return FeatureSet(np.load(path), extractor_id)
    features = compute()
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.save(path, features.values)
    except OSError as e:
        logger.warning(f"Feature cache not written ({e})")
    return features
