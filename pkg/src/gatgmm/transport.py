"""Transport maps between mixtures, Bayes error, and exact small-scale
quadratic-cost OT oracles.

The randomized map sends a source point with component label y to
Gamma_y (x - mu_y) + mu~_y, where Gamma_i converts the i-th covariance
(target-sqrt times source-inverse-sqrt); averaging it against the source
posterior gives the deterministic conditional-expectation map.

Exact oracles use the cost c(x, x') = ||x - x'||^2 / 2, so all values
here live on the half-squared-Wasserstein scale; the Gaussian evaluation
metric in :mod:`gatgmm.metrics` uses the plain squared distance instead.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import linear_sum_assignment

from .em import GmmParams, _log_joint, _lse_rows
from .errors import InvalidInput, TooLarge
from .gausscore import SeededRng, inv_sqrtm_psd, sqrtm_psd, symmetrize

__all__ = [
    "TransportPair",
    "posterior",
    "posterior_batch",
    "psi_map",
    "psi_map_batch",
    "psi_randomized",
    "bayes_error",
    "duality_gap_bound_terms",
    "duality_gap_bound",
    "w2_1d_exact",
    "w2_assignment_exact",
    "Duality1DResult",
    "duality_gap_1d",
]

_ASSIGN_MAX = 64


@dataclass(frozen=True)
class TransportPair:
    """Source/target mixtures plus the per-component conversion matrices."""

    source: GmmParams
    target: GmmParams
    gammas: np.ndarray  # (k, d, d)

    @staticmethod
    def build(source: GmmParams, target: GmmParams) -> "TransportPair":
        if source.k != target.k:
            raise InvalidInput("source and target must have the same component count")
        uniform = np.full(source.k, 1.0 / source.k)
        if not (np.allclose(source.weights, uniform, atol=1e-12)
                and np.allclose(target.weights, uniform, atol=1e-12)):
            raise InvalidInput("transport pair requires uniform weights on both sides")
        gammas = []
        for i in range(source.k):
            cs, ct = source.covs[i], target.covs[i]
            comm = cs @ ct - ct @ cs
            scale = max(np.max(np.abs(cs)) * np.max(np.abs(ct)), 1e-300)
            if np.max(np.abs(comm)) > 1e-8 * scale:
                warnings.warn(
                    f"component {i}: source/target covariances do not commute "
                    f"(residual {np.max(np.abs(comm)):.3g}); the conversion matrix "
                    "is still well-defined", RuntimeWarning)
            gammas.append(sqrtm_psd(ct) @ inv_sqrtm_psd(cs))
        return TransportPair(source=source, target=target, gammas=np.stack(gammas))

    @property
    def k(self) -> int:
        return self.source.k


def posterior_batch(p: GmmParams, xs: np.ndarray) -> np.ndarray:
    """Bayes posterior over component labels, one row per sample."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    lj = _log_joint(p, xs)
    return np.exp(lj - _lse_rows(lj)[:, None])


def posterior(p: GmmParams, x: np.ndarray) -> np.ndarray:
    return posterior_batch(p, np.asarray(x, dtype=np.float64)[None, :])[0]


def psi_randomized(tp: TransportPair, x: np.ndarray, y: int) -> np.ndarray:
    """Label-indexed affine map Gamma_y (x - mu_y) + mu~_y."""
    if not 0 <= int(y) < tp.k:
        raise InvalidInput(f"label {y} out of range 0..{tp.k - 1}")
    x = np.asarray(x, dtype=np.float64)
    i = int(y)
    return tp.gammas[i] @ (x - tp.source.means[i]) + tp.target.means[i]


def psi_map_batch(tp: TransportPair, xs: np.ndarray) -> np.ndarray:
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    post = posterior_batch(tp.source, xs)
    out = np.zeros_like(xs)
    for i in range(tp.k):
        moved = (xs - tp.source.means[i]) @ tp.gammas[i].T + tp.target.means[i]
        out += post[:, i:i + 1] * moved
    return out


def psi_map(tp: TransportPair, x: np.ndarray) -> np.ndarray:
    """Posterior-weighted conditional expectation of the randomized map."""
    return psi_map_batch(tp, np.asarray(x, dtype=np.float64)[None, :])[0]


def sample_mixture(p: GmmParams, n: int, rng: SeededRng) -> tuple[np.ndarray, np.ndarray]:
    """Draw n labeled samples from the mixture; returns (points, labels)."""
    labels = rng.gen.choice(p.k, size=int(n), p=p.weights)
    z = rng.gen.standard_normal((int(n), p.d))
    factors = np.stack([sqrtm_psd(p.covs[i]) for i in range(p.k)])
    return p.means[labels] + np.einsum("nij,nj->ni", factors[labels], z), labels


def bayes_error(p: GmmParams, n_mc: int, rng: SeededRng) -> float:
    """Monte Carlo misclassification rate of the posterior argmax classifier."""
    if n_mc < 1:
        raise InvalidInput("n_mc must be >= 1")
    xs, labels = sample_mixture(p, n_mc, rng)
    predicted = np.argmax(posterior_batch(p, xs), axis=1)
    return float(np.mean(predicted != labels))


def duality_gap_bound_terms(tp: TransportPair, pe: float, ex_norm2: float,
                   ex_norm4: float) -> tuple[float, float, float]:
    """Approximation-error bound pieces (M1, M2, bound) for the map pair.

    bound = (3/2 M1 + sqrt(M1 M2)) sqrt(pe) + sqrt(M1 M2) pe^(1/4).
    """
    if not 0.0 <= pe <= 1.0:
        raise InvalidInput("pe must lie in [0, 1]")
    spec = [np.linalg.norm(gam, 2) for gam in tp.gammas]
    shift = [np.linalg.norm(tp.gammas[i] @ tp.source.means[i] - tp.target.means[i])
             for i in range(tp.k)]
    dev = [np.linalg.norm(gam - np.eye(gam.shape[0]), 2) for gam in tp.gammas]
    max_shift_sq = max(s ** 2 for s in shift)
    m1 = 8.0 * max(s ** 2 for s in spec) * np.sqrt(ex_norm4) + 8.0 * np.sqrt(pe) * max_shift_sq
    m2 = 2.0 * max(s ** 2 for s in dev) * ex_norm2 + 2.0 * max_shift_sq
    cross = np.sqrt(m1 * m2)
    bound = (1.5 * m1 + cross) * np.sqrt(pe) + cross * pe ** 0.25
    return float(m1), float(m2), float(bound)


def duality_gap_bound(tp: TransportPair, pe: float, ex_norm2: float, ex_norm4: float) -> float:
    return duality_gap_bound_terms(tp, pe, ex_norm2, ex_norm4)[2]


def w2_1d_exact(a, b) -> float:
    """Exact half-squared-quadratic OT between equal-size 1-D samples
    (sorted matching): (1/n) sum ||a_(i) - b_(i)||^2 / 2."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size != b.size or a.size < 1:
        raise InvalidInput("inputs must be equal-length and nonempty")
    return float(np.mean(0.5 * (np.sort(a) - np.sort(b)) ** 2))


def w2_assignment_exact(a: np.ndarray, b: np.ndarray) -> float:
    """Exact OT between small equal-size empirical measures via optimal
    assignment; refuses n > 64."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape:
        raise InvalidInput("point clouds must have identical shapes")
    n = a.shape[0]
    if n > _ASSIGN_MAX:
        raise TooLarge(f"assignment oracle limited to n <= {_ASSIGN_MAX}, got {n}")
    diff = a[:, None, :] - b[None, :, :]
    cost = 0.5 * np.sum(diff ** 2, axis=2)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean())


# ---------------------------------------------------------------------------
# 1-D duality sandwich machinery


@dataclass(frozen=True)
class Duality1DResult:
    """Surrogate dual value vs exact empirical transport cost in one dimension."""

    dual: float        # E[D~(X)] - E[D~^c(X~)] on the paired samples
    w2: float          # w2_1d_exact on the same samples
    gap: float         # w2 - dual (>= 0 up to sampling noise)
    se: float          # Monte Carlo standard error of (w2 - dual)
    bound: float       # approximation-error bound with MC-estimated inputs
    pe: float          # MC Bayes error of the source mixture


def _grid_c_transform(grid: np.ndarray, values: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Exhaustive Legendre-type transform max_x' values(x') - (x - x')^2/2."""
    out = np.empty_like(values)
    for start in range(0, grid.size, chunk):
        sl = grid[start:start + chunk, None]
        out[start:start + chunk] = np.max(values[None, :] - 0.5 * (sl - grid[None, :]) ** 2,
                                          axis=1)
    return out


def duality_gap_1d(
    mu_src: float,
    sigma_src: float,
    mu_tgt: float,
    sigma_tgt: float,
    n_pairs: int = 2000,
    n_mc: int = 100000,
    seed: int = 0,
    grid_points: int = 4001,
    pad: float = 8.0,
) -> Duality1DResult:
    """Desk-scale duality check between two symmetric 1-D two-component mixtures.

    The surrogate potential integrates the conditional-expectation map on a
    uniform grid (D~ = x^2/2 - phi with phi' = psi), its c-transform is an
    exhaustive grid maximum, and both sides of the weak-duality inequality
    are then estimated on n_pairs fresh samples per measure.
    """
    source = GmmParams.symmetric2(np.array([mu_src]), np.array([[sigma_src ** 2]]))
    target = GmmParams.symmetric2(np.array([mu_tgt]), np.array([[sigma_tgt ** 2]]))
    tp = TransportPair.build(source, target)

    lim = max(abs(mu_src), abs(mu_tgt)) + pad * max(sigma_src, sigma_tgt)
    grid = np.linspace(-lim, lim, grid_points)
    psi_vals = psi_map_batch(tp, grid[:, None])[:, 0]
    phi = cumulative_trapezoid(psi_vals, grid, initial=0.0)
    dtilde = 0.5 * grid ** 2 - phi
    dtilde_c = _grid_c_transform(grid, dtilde)

    # paired draws: one shared label sequence so the per-mode counts of the
    # two samples match exactly (otherwise the sorted matching is forced to
    # pair a few points across modes and the empirical cost picks up an
    # O(separation^2 / sqrt(n)) excess)
    rng = SeededRng(seed, stream=101)
    signs = rng.split(1).gen.integers(0, 2, size=n_pairs) * 2 - 1
    xs = signs * (mu_src + sigma_src * rng.split(2).gen.standard_normal(n_pairs))
    xt = signs * (mu_tgt + sigma_tgt * rng.split(3).gen.standard_normal(n_pairs))

    dvals = np.interp(xs, grid, dtilde)
    cvals = np.interp(xt, grid, dtilde_c)
    dual = float(np.mean(dvals) - np.mean(cvals))
    w2 = w2_1d_exact(xs, xt)
    pair_costs = 0.5 * (np.sort(xs) - np.sort(xt)) ** 2
    se = float(np.sqrt((dvals.var() + cvals.var() + pair_costs.var()) / n_pairs))

    mc, labels = sample_mixture(source, n_mc, rng.split(4))
    predicted = np.argmax(posterior_batch(source, mc), axis=1)
    # rule-of-three floor: a zero miscount only bounds pe above by ~3/n
    pe = max(float(np.mean(predicted != labels)), 3.0 / n_mc)
    norms2 = np.sum(mc ** 2, axis=1)
    bound = duality_gap_bound(tp, pe, float(norms2.mean()), float((norms2 ** 2).mean()))

    return Duality1DResult(dual=dual, w2=w2, gap=w2 - dual, se=se, bound=bound, pe=pe)
