"""Dense SPD linear algebra, simplex utilities, and reproducible random streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, NotPositiveDefinite

# Relative pivot tolerance: reject factorizations whose smallest pivot falls
# below this fraction of trace/dim.
_PIVOT_RTOL = 1e-14

# Jitter applied to covariances inside sample_mvn only, never in bound math.
MVN_JITTER = 1e-12


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Return (M + M^T)/2; mild hygiene for accumulated covariances."""
    m = np.asarray(m, dtype=np.float64)
    return 0.5 * (m + m.T)


def cholesky(m: np.ndarray) -> np.ndarray:
    """Lower-triangular factor L with L @ L.T == m.

    The input is symmetrized first. Raises NotPositiveDefinite when a pivot
    is non-positive or below the relative floor ``1e-14 * trace / dim``.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimMismatch(f"expected square matrix, got shape {m.shape}")
    a = symmetrize(m)
    try:
        low = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    floor = _PIVOT_RTOL * np.trace(a) / a.shape[0]
    if np.any(np.diag(low) ** 2 <= floor):
        raise NotPositiveDefinite(
            f"pivot below relative floor {floor:.3e}"
        )
    return low


def quad_form(v: np.ndarray, m: np.ndarray) -> float:
    """Squared norm v^T m v (nonnegative for SPD m)."""
    v = np.asarray(v, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (v.shape[0], v.shape[0]):
        raise DimMismatch(f"vector dim {v.shape} vs matrix shape {m.shape}")
    return float(v @ m @ v)


def logdet(m: np.ndarray) -> float:
    """log det of an SPD matrix via its Cholesky factor."""
    return float(2.0 * np.sum(np.log(np.diag(cholesky(m)))))


def spd_inverse(m: np.ndarray) -> np.ndarray:
    """Inverse of an SPD matrix, symmetrized on the way out."""
    low = cholesky(m)
    inv = np.linalg.inv(low)
    return symmetrize(inv.T @ inv)


def spd_solve(m: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve m @ x = b for SPD m."""
    low = cholesky(m)
    y = np.linalg.solve(low, b)
    return np.linalg.solve(low.T, y)


def sample_mvn(mean: np.ndarray, cov: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One N(mean, cov) draw; cov receives 1e-12*I jitter so degenerate
    (near-zero) covariances used in tests remain factorable."""
    mean = np.asarray(mean, dtype=np.float64)
    cov = np.asarray(cov, dtype=np.float64)
    if cov.shape != (mean.shape[0], mean.shape[0]):
        raise DimMismatch(f"mean dim {mean.shape} vs cov shape {cov.shape}")
    low = cholesky(cov + MVN_JITTER * np.eye(mean.shape[0]))
    return mean + low @ rng.standard_normal(mean.shape[0])


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    v = np.asarray(v, dtype=np.float64)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.shape[0] + 1)
    rho = np.nonzero(u * idx > css - 1.0)[0][-1]
    tau = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


def check_simplex(w: np.ndarray, k: int | None = None, atol: float = 1e-5) -> np.ndarray:
    """Validate (and return) near-simplex weights.

    The tolerance is loose on purpose: the allocation optimizer probes bound
    evaluators a finite-difference step (1e-6) off the simplex.
    """
    w = np.asarray(w, dtype=np.float64)
    if k is not None and w.shape != (k,):
        raise DimMismatch(f"expected {k} weights, got shape {w.shape}")
    if np.any(w < 0) or abs(float(w.sum()) - 1.0) > atol:
        raise DimMismatch(f"not a simplex point: sum={w.sum()!r}, min={w.min()!r}")
    return w


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream, a pure function of its identifiers.

    Distinct (master_seed, stream_index) pairs give statistically independent
    Philox streams; the harness uses stream_index = trial index.
    """

    master_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.Philox(seq))

    def substream(self, index: int) -> "RngStream":
        """Derived stream for config-level draws (allocation randomness,
        optimizer multistarts). The high bit keeps these disjoint from the
        per-trial index range."""
        return RngStream(self.master_seed, (1 << 63) | ((self.stream_index << 20) ^ index))
