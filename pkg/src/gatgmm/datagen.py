"""Synthetic dataset generation and CSV/sidecar-JSON file I/O.

A dataset is an (n, d) sample matrix plus provenance metadata: the
generating configuration, seed, and (when synthetic) the ground-truth
mixture, stored next to the CSV in ``<stem>.meta.json``.  CSV floats are
written with 17 significant digits so a save/load round trip is
bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .em import GmmParams
from .errors import InvalidInput, ParseError
from .gausscore import SeededRng, random_orthogonal, sqrtm_psd, symmetrize
from .model import SHARED_COV, SYMMETRIC2, GeneratorParams, draw_latents, gen_apply

__all__ = [
    "DatasetMeta",
    "Dataset",
    "make_isotropic",
    "make_rotated",
    "make_k_mixture",
    "save_csv",
    "load_csv",
]


@dataclass(frozen=True)
class DatasetMeta:
    kind: str
    d: int
    n: int
    seed: int
    truth: GmmParams | None = None
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "d": self.d,
            "n": self.n,
            "seed": self.seed,
            "truth": None if self.truth is None else self.truth.to_json(),
            "params": self.params,
        }

    @staticmethod
    def from_json(obj: dict) -> "DatasetMeta":
        truth = obj.get("truth")
        return DatasetMeta(
            kind=obj["kind"], d=int(obj["d"]), n=int(obj["n"]), seed=int(obj["seed"]),
            truth=None if truth is None else GmmParams.from_json(truth),
            params=obj.get("params", {}))


@dataclass(frozen=True)
class Dataset:
    samples: np.ndarray            # (n, d)
    meta: DatasetMeta | None = None

    def __post_init__(self):
        xs = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        if not np.all(np.isfinite(xs)):
            raise InvalidInput("dataset samples must be finite")
        object.__setattr__(self, "samples", xs)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def d(self) -> int:
        return self.samples.shape[1]


def _symmetric_draw(truth: GmmParams, factor: np.ndarray, n: int,
                    rng: SeededRng) -> np.ndarray:
    g = GeneratorParams(mode=SYMMETRIC2, cov_factor=factor, means=truth.means[0][None, :])
    z, labels = draw_latents(g, n, rng)
    return gen_apply(g, z, labels)


def make_isotropic(d: int = 20, n: int = 640, scale: float = 0.03,
                   seed: int = 0) -> Dataset:
    """Symmetric two-component mixture with all-ones mean and scale * I covariance."""
    if d < 1 or n < 1:
        raise InvalidInput("d and n must be >= 1")
    mu = np.ones(d)
    cov = scale * np.eye(d)
    truth = GmmParams.symmetric2(mu, cov)
    rng = SeededRng(seed)
    xs = _symmetric_draw(truth, np.sqrt(scale) * np.eye(d), n, rng)
    meta = DatasetMeta(kind="isotropic", d=d, n=n, seed=seed, truth=truth,
                       params={"scale": scale})
    return Dataset(samples=xs, meta=meta)


def make_rotated(d: int = 100, n: int = 640, seed: int = 0) -> Dataset:
    """Symmetric two-component mixture with a randomly rotated covariance:
    eigenvalues uniform on (1/(2d), 1/2) in a Haar-random eigenbasis."""
    if d < 1 or n < 1:
        raise InvalidInput("d and n must be >= 1")
    rng = SeededRng(seed)
    eigs = rng.split(1).gen.uniform(1.0 / (2 * d), 0.5, size=d)
    q = random_orthogonal(d, rng.split(2))
    cov = symmetrize((q * eigs) @ q.T)
    factor = symmetrize((q * np.sqrt(eigs)) @ q.T)
    truth = GmmParams.symmetric2(np.ones(d), cov)
    xs = _symmetric_draw(truth, factor, n, rng.split(3))
    meta = DatasetMeta(kind="rotated", d=d, n=n, seed=seed, truth=truth)
    return Dataset(samples=xs, meta=meta)


def make_k_mixture(d: int, k: int, means: np.ndarray, cov: np.ndarray,
                   n: int, seed: int = 0) -> Dataset:
    """Uniform-weight shared-covariance k-component mixture."""
    if k < 2:
        raise InvalidInput("k must be >= 2")
    means = np.atleast_2d(np.asarray(means, dtype=np.float64))
    if means.shape != (k, d):
        raise InvalidInput(f"means must be ({k}, {d})")
    cov = symmetrize(cov)
    truth = GmmParams(weights=np.full(k, 1.0 / k), means=means,
                      covs=np.repeat(cov[None], k, axis=0), shared_cov=True)
    g = GeneratorParams(mode=SHARED_COV, cov_factor=sqrtm_psd(cov), means=means)
    z, labels = draw_latents(g, n, SeededRng(seed))
    meta = DatasetMeta(kind="kmix", d=d, n=n, seed=seed, truth=truth, params={"k": k})
    return Dataset(samples=gen_apply(g, z, labels), meta=meta)


def _meta_path(path) -> Path:
    return Path(path).with_suffix(".meta.json")


def save_csv(ds: Dataset, path) -> None:
    """Write samples as CSV (17 significant digits) plus the meta sidecar."""
    path = Path(path)
    d = ds.d
    header = ",".join(f"x{i}" for i in range(d))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in ds.samples:
            fh.write(",".join("%.17g" % v for v in row) + "\n")
    if ds.meta is not None:
        with open(_meta_path(path), "w") as fh:
            json.dump(ds.meta.to_json(), fh, sort_keys=True, indent=1)
            fh.write("\n")


def load_csv(path) -> Dataset:
    """Read a dataset CSV; the sidecar is optional (meta is then absent)."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise ParseError("empty file", line=1)
    header = lines[0].split(",")
    if not all(name.strip() == f"x{i}" for i, name in enumerate(header)):
        raise ParseError(f"bad header {lines[0]!r}; expected x0,...,x{len(header) - 1}", line=1)
    d = len(header)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != d:
            raise ParseError(f"expected {d} columns, found {len(parts)}", line=lineno)
        try:
            rows.append([float(v) for v in parts])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from exc
    if not rows:
        raise ParseError("no data rows", line=2)
    meta = None
    mpath = _meta_path(path)
    if mpath.exists():
        meta = DatasetMeta.from_json(json.loads(mpath.read_text()))
    return Dataset(samples=np.array(rows, dtype=np.float64), meta=meta)
