"""Dense symmetric linear algebra and seeded Gaussian sampling.

All floating point is 64-bit.  Every operation here is a pure function of
its inputs; the only stateful object is :class:`SeededRng`, which wraps a
counter-based Philox bit generator so that a (seed, stream) pair yields a
bit-identical sample sequence across runs and platforms.  Callers never
share one SeededRng between independent purposes; they split child streams
instead (data stream, latent stream, init stream, ...).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotPsd

__all__ = [
    "SeededRng",
    "EigenDecomp",
    "symmetrize",
    "check_symmetric",
    "sym_eigen",
    "sqrtm_psd",
    "inv_sqrtm_psd",
    "random_orthogonal",
    "sample_gaussian",
]

_MIX64 = 0x9E3779B97F4A7C15  # golden-ratio constant for stream derivation


class SeededRng:
    """Reproducible random source keyed by (seed, stream).

    The Philox key is exactly the (seed, stream) pair, so equal pairs give
    equal bit streams regardless of construction order.  ``gen`` exposes the
    underlying numpy Generator.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream = int(stream) & 0xFFFFFFFFFFFFFFFF
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        self.gen = np.random.Generator(np.random.Philox(key=key))

    def split(self, child: int) -> "SeededRng":
        """Derive an independent child stream; deterministic in (stream, child)."""
        mixed = (self.stream * _MIX64 + int(child) + 1) & 0xFFFFFFFFFFFFFFFF
        return SeededRng(self.seed, mixed)

    def __repr__(self) -> str:  # pragma: no cover
        return f"SeededRng(seed={self.seed}, stream={self.stream})"


@dataclass(frozen=True)
class EigenDecomp:
    """Eigendecomposition of a symmetric matrix, eigenvalues sorted descending."""

    values: np.ndarray   # (d,)
    vectors: np.ndarray  # (d, d), columns are eigenvectors


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Return (m + m.T)/2 as a new float64 array."""
    m = np.asarray(m, dtype=np.float64)
    return 0.5 * (m + m.T)


def check_symmetric(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInput(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput(f"{name} has non-finite entries")
    if not np.array_equal(m, m.T):
        raise InvalidInput(f"{name} is not exactly symmetric; use symmetrize() first")
    return m


def sym_eigen(m: np.ndarray) -> EigenDecomp:
    """Eigendecomposition of a symmetric matrix with descending eigenvalues.

    Satisfies ``V diag(w) V.T == m`` to within 1e-8 * (1 + max|m|) and
    ``V.T V == I`` to within 1e-10.
    """
    m = check_symmetric(m)
    w, v = np.linalg.eigh(m)
    order = np.argsort(w)[::-1]
    return EigenDecomp(values=w[order].copy(), vectors=v[:, order].copy())


def sqrtm_psd(m: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root of a near-PSD symmetric matrix.

    Eigenvalues in [-1e-10 * ||m||_2, 0) are clamped to zero; anything more
    negative raises NotPsd.
    """
    dec = sym_eigen(m)
    w = dec.values
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    tol = 1e-10 * scale
    if np.any(w < -tol):
        raise NotPsd(f"eigenvalue {w.min():.6g} below -1e-10*||m|| = {-tol:.6g}")
    w = np.clip(w, 0.0, None)
    root = (dec.vectors * np.sqrt(w)) @ dec.vectors.T
    return symmetrize(root)


def inv_sqrtm_psd(m: np.ndarray, rcond: float = 1e-12) -> np.ndarray:
    """Symmetric inverse square root; raises NotPsd on rank deficiency."""
    dec = sym_eigen(m)
    w = dec.values
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if scale == 0.0 or np.any(w <= rcond * scale):
        raise NotPsd("matrix is singular to working precision; cannot invert square root")
    root = (dec.vectors / np.sqrt(w)) @ dec.vectors.T
    return symmetrize(root)


def random_orthogonal(d: int, rng: SeededRng) -> np.ndarray:
    """Haar-distributed orthogonal matrix: QR of a Gaussian with sign-fixed R diagonal."""
    if d < 1:
        raise InvalidInput(f"dimension must be >= 1, got {d}")
    g = rng.gen.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def sample_gaussian(mean: np.ndarray, factor: np.ndarray, n: int, rng: SeededRng) -> np.ndarray:
    """Draw n rows of mean + factor @ z with z ~ N(0, I)."""
    mean = np.asarray(mean, dtype=np.float64)
    factor = np.asarray(factor, dtype=np.float64)
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(factor))):
        raise InvalidInput("mean/factor must be finite")
    d = mean.shape[0]
    if factor.shape != (d, d):
        raise InvalidInput(f"factor shape {factor.shape} does not match mean dimension {d}")
    z = rng.gen.standard_normal((int(n), d))
    return mean + z @ factor.T
