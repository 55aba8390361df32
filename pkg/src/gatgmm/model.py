"""Linear mixture generator and softmax-quadratic discriminator.

Generator modes
---------------
``symmetric2``  x = y * (C z + mu) with label y uniform on {-1, +1}; one mean row.
``shared_cov``  x = C z + mu_y with label y uniform on {0, ..., k-1}; k mean rows.

Here C is the shared covariance factor (the output covariance is C C^T).

Discriminator
-------------
    D(x) = 1/2 x^T A x + log( sum_{i<k} exp(b_i^T x + c_i)
                             / sum_{i>=k} exp(b_i^T x + c_i) )

with 2k logit rows split into a numerator and a denominator group, each
evaluated with max-subtracted log-sum-exp.  In the symmetric two-component
mode the constants are structurally zero, and the optional ``tied``
constraint enforces b_2 = -b_1, b_4 = -b_3 exactly, which reduces the log
ratio to logcosh(b_1^T x) - logcosh(b_3^T x); D is then an even function.
Gradients in tied mode are taken with respect to the free rows b_1, b_3
only (the chain rule through the mirrored rows yields the tanh forms).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInput
from .gausscore import SeededRng, symmetrize

__all__ = [
    "SYMMETRIC2",
    "SHARED_COV",
    "GeneratorParams",
    "DiscriminatorParams",
    "GradPack",
    "gen_forward",
    "gen_apply",
    "draw_latents",
    "gen_sample_batch",
    "gen_second_moment",
    "disc_value",
    "disc_value_batch",
    "disc_grad_x",
    "disc_grad_x_batch",
    "disc_grad_params",
    "disc_smoothness_bound",
    "gen_vec",
    "gen_with_vec",
    "disc_vec",
    "disc_with_vec",
    "params_to_json",
    "params_from_json",
]

SYMMETRIC2 = "symmetric2"
SHARED_COV = "shared_cov"


@dataclass(frozen=True)
class GeneratorParams:
    """Mixture generator: shared covariance factor plus mean row(s)."""

    mode: str
    cov_factor: np.ndarray  # (d, d)
    means: np.ndarray       # (1, d) in symmetric2; (k, d) in shared_cov

    def __post_init__(self):
        object.__setattr__(self, "cov_factor", np.asarray(self.cov_factor, dtype=np.float64))
        object.__setattr__(self, "means", np.atleast_2d(np.asarray(self.means, dtype=np.float64)))
        if self.mode not in (SYMMETRIC2, SHARED_COV):
            raise InvalidInput(f"unknown generator mode {self.mode!r}")
        d = self.cov_factor.shape[0]
        if self.cov_factor.shape != (d, d):
            raise InvalidInput("cov_factor must be square")
        if self.means.shape[1] != d:
            raise InvalidInput("means dimension does not match cov_factor")
        if self.mode == SYMMETRIC2 and self.means.shape[0] != 1:
            raise InvalidInput("symmetric2 mode takes exactly one mean row")
        if self.mode == SHARED_COV and self.means.shape[0] < 2:
            raise InvalidInput("shared_cov mode needs k >= 2 mean rows")
        if not (np.all(np.isfinite(self.cov_factor)) and np.all(np.isfinite(self.means))):
            raise InvalidInput("generator parameters must be finite")

    @property
    def d(self) -> int:
        return self.cov_factor.shape[0]

    @property
    def k(self) -> int:
        return 2 if self.mode == SYMMETRIC2 else self.means.shape[0]


@dataclass(frozen=True)
class DiscriminatorParams:
    """Quadratic matrix, 2k logit rows, 2k constants, and the tied flag."""

    quad: np.ndarray    # (d, d) symmetric
    logits: np.ndarray  # (2k, d)
    consts: np.ndarray  # (2k,)
    tied: bool = False

    def __post_init__(self):
        object.__setattr__(self, "quad", np.asarray(self.quad, dtype=np.float64))
        object.__setattr__(self, "logits", np.atleast_2d(np.asarray(self.logits, dtype=np.float64)))
        object.__setattr__(self, "consts", np.asarray(self.consts, dtype=np.float64).ravel())
        rows = self.logits.shape[0]
        if rows % 2 != 0 or rows < 4:
            raise InvalidInput("logits must have 2k rows with k >= 2")
        if self.consts.shape[0] != rows:
            raise InvalidInput("consts length must match logit row count")
        if not np.array_equal(self.quad, self.quad.T):
            raise InvalidInput("quad must be exactly symmetric")
        if self.tied:
            if rows != 4:
                raise InvalidInput("tied mode requires exactly 4 logit rows")
            if np.any(self.consts != 0.0):
                raise InvalidInput("tied (symmetric) mode requires zero constants")
            if not (np.array_equal(self.logits[1], -self.logits[0])
                    and np.array_equal(self.logits[3], -self.logits[2])):
                raise InvalidInput("tied mode requires b2 = -b1 and b4 = -b3 exactly")

    @property
    def d(self) -> int:
        return self.quad.shape[0]

    @property
    def k(self) -> int:
        return self.logits.shape[0] // 2

    @staticmethod
    def tied_symmetric(quad: np.ndarray, b1: np.ndarray, b3: np.ndarray) -> "DiscriminatorParams":
        """Build a tied symmetric-mode discriminator from its free rows."""
        b1 = np.asarray(b1, dtype=np.float64)
        b3 = np.asarray(b3, dtype=np.float64)
        logits = np.stack([b1, -b1, b3, -b3])
        return DiscriminatorParams(quad=np.asarray(quad, dtype=np.float64),
                                   logits=logits, consts=np.zeros(4), tied=True)


@dataclass
class GradPack:
    """Per-parameter gradient blocks; shapes mirror the parameter objects.

    In tied mode ``logits`` holds the two free-row gradients (b1, b3).
    Blocks that are not parameters of the current mode are None.
    """

    gen_cov_factor: np.ndarray | None = None
    gen_means: np.ndarray | None = None
    quad: np.ndarray | None = None
    logits: np.ndarray | None = None
    consts: np.ndarray | None = None

    def gen_as_vec(self) -> np.ndarray:
        return np.concatenate([self.gen_cov_factor.ravel(), self.gen_means.ravel()])

    def disc_as_vec(self) -> np.ndarray:
        parts = [self.quad.ravel(), self.logits.ravel()]
        if self.consts is not None:
            parts.append(self.consts.ravel())
        return np.concatenate(parts)


# ---------------------------------------------------------------------------
# generator


def draw_latents(g: GeneratorParams, n: int, rng: SeededRng) -> tuple[np.ndarray, np.ndarray]:
    """Draw (z, labels): standard-normal latents and uniform component labels."""
    z = rng.gen.standard_normal((int(n), g.d))
    if g.mode == SYMMETRIC2:
        labels = rng.gen.integers(0, 2, size=int(n)) * 2 - 1
    else:
        labels = rng.gen.integers(0, g.k, size=int(n))
    return z, labels


def _check_labels(g: GeneratorParams, labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    if g.mode == SYMMETRIC2:
        if not np.all(np.isin(labels, (-1, 1))):
            raise InvalidInput("symmetric2 labels must be +1 or -1")
    else:
        if labels.size and (labels.min() < 0 or labels.max() >= g.k):
            raise InvalidInput(f"shared_cov labels must lie in 0..{g.k - 1}")
    return labels


def gen_apply(g: GeneratorParams, z: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Vectorized generator forward map on an (n, d) latent batch."""
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    labels = _check_labels(g, labels)
    base = z @ g.cov_factor.T
    if g.mode == SYMMETRIC2:
        return (base + g.means[0]) * np.asarray(labels, dtype=np.float64)[:, None]
    return base + g.means[labels]


def gen_forward(g: GeneratorParams, z: np.ndarray, y) -> np.ndarray:
    """Single-sample generator output for latent z and component label y."""
    return gen_apply(g, np.asarray(z, dtype=np.float64)[None, :], np.array([y]))[0]


def gen_sample_batch(g: GeneratorParams, n: int, rng: SeededRng) -> np.ndarray:
    if n < 1:
        raise InvalidInput("n must be >= 1")
    z, labels = draw_latents(g, n, rng)
    return gen_apply(g, z, labels)


def gen_second_moment(g: GeneratorParams) -> np.ndarray:
    """Analytic E[G G^T]: C C^T plus the mean outer-product average."""
    cc = g.cov_factor @ g.cov_factor.T
    if g.mode == SYMMETRIC2:
        mu = g.means[0]
        return symmetrize(cc + np.outer(mu, mu))
    return symmetrize(cc + g.means.T @ g.means / g.k)


# ---------------------------------------------------------------------------
# discriminator


def _group_lse(logits: np.ndarray) -> np.ndarray:
    """Row-wise log-sum-exp with max subtraction; logits is (n, k)."""
    m = np.max(logits, axis=1, keepdims=True)
    return (m + np.log(np.sum(np.exp(logits - m), axis=1, keepdims=True)))[:, 0]


def _group_softmax(logits: np.ndarray) -> np.ndarray:
    m = np.max(logits, axis=1, keepdims=True)
    e = np.exp(logits - m)
    return e / np.sum(e, axis=1, keepdims=True)


def _slot_logits(dd: DiscriminatorParams, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k = dd.k
    num = xs @ dd.logits[:k].T + dd.consts[:k]
    den = xs @ dd.logits[k:].T + dd.consts[k:]
    return num, den


def disc_value_batch(dd: DiscriminatorParams, xs: np.ndarray) -> np.ndarray:
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    if not np.all(np.isfinite(xs)):
        raise InvalidInput("discriminator input must be finite")
    quad_term = 0.5 * np.sum((xs @ dd.quad) * xs, axis=1)
    num, den = _slot_logits(dd, xs)
    return quad_term + _group_lse(num) - _group_lse(den)


def disc_value(dd: DiscriminatorParams, x: np.ndarray) -> float:
    return float(disc_value_batch(dd, np.asarray(x, dtype=np.float64)[None, :])[0])


def disc_grad_x_batch(dd: DiscriminatorParams, xs: np.ndarray) -> np.ndarray:
    """Row-wise gradient A x + sum_num q_i b_i - sum_den q_i b_i."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    k = dd.k
    num, den = _slot_logits(dd, xs)
    qn = _group_softmax(num)
    qd = _group_softmax(den)
    return xs @ dd.quad + qn @ dd.logits[:k] - qd @ dd.logits[k:]


def disc_grad_x(dd: DiscriminatorParams, x: np.ndarray) -> np.ndarray:
    return disc_grad_x_batch(dd, np.asarray(x, dtype=np.float64)[None, :])[0]


def disc_grad_params(dd: DiscriminatorParams, x: np.ndarray) -> GradPack:
    """Gradients of disc_value(dd, x) with respect to the stored parameters."""
    x = np.asarray(x, dtype=np.float64)
    quad_grad = 0.5 * np.outer(x, x)
    if dd.tied:
        t1 = float(dd.logits[0] @ x)
        t3 = float(dd.logits[2] @ x)
        logit_grads = np.stack([np.tanh(t1) * x, -np.tanh(t3) * x])
        return GradPack(quad=quad_grad, logits=logit_grads, consts=None)
    k = dd.k
    num, den = _slot_logits(dd, x[None, :])
    qn = _group_softmax(num)[0]
    qd = _group_softmax(den)[0]
    logit_grads = np.concatenate([qn[:, None] * x, -qd[:, None] * x])
    const_grads = np.concatenate([qn, -qd])
    return GradPack(quad=quad_grad, logits=logit_grads, consts=const_grads)


def disc_smoothness_bound(dd: DiscriminatorParams) -> float:
    """lambda_max(A) + 2 max_i ||b_i||^2; gates c-transform validity (< 1)."""
    eigs = np.linalg.eigvalsh(dd.quad)
    max_b_sq = float(np.max(np.sum(dd.logits ** 2, axis=1)))
    return float(eigs[-1]) + 2.0 * max_b_sq


# ---------------------------------------------------------------------------
# flat-vector views (finite differencing, norms, updates)


def gen_vec(g: GeneratorParams) -> np.ndarray:
    return np.concatenate([g.cov_factor.ravel(), g.means.ravel()])


def gen_with_vec(g: GeneratorParams, vec: np.ndarray) -> GeneratorParams:
    d = g.d
    cov = vec[: d * d].reshape(d, d)
    means = vec[d * d:].reshape(g.means.shape)
    return replace(g, cov_factor=cov, means=means)


def disc_vec(dd: DiscriminatorParams, include_consts: bool = False) -> np.ndarray:
    """Free-parameter vector: quad then free logit rows, then consts if trained."""
    if dd.tied:
        return np.concatenate([dd.quad.ravel(), dd.logits[0], dd.logits[2]])
    parts = [dd.quad.ravel(), dd.logits.ravel()]
    if include_consts:
        parts.append(dd.consts)
    return np.concatenate(parts)


def disc_with_vec(dd: DiscriminatorParams, vec: np.ndarray,
                  include_consts: bool = False) -> DiscriminatorParams:
    d = dd.d
    quad = symmetrize(vec[: d * d].reshape(d, d))
    rest = vec[d * d:]
    if dd.tied:
        return DiscriminatorParams.tied_symmetric(quad, rest[:d], rest[d:2 * d])
    rows = dd.logits.shape[0]
    logits = rest[: rows * d].reshape(rows, d)
    consts = rest[rows * d:] if include_consts else dd.consts
    return DiscriminatorParams(quad=quad, logits=logits, consts=consts, tied=False)


# ---------------------------------------------------------------------------
# serialization


def params_to_json(g: GeneratorParams, dd: DiscriminatorParams) -> dict:
    """Joint parameter object; matrices row-major nested lists."""
    return {
        "mode": g.mode,
        "lambda": g.cov_factor.tolist(),
        "means": g.means.tolist(),
        "A": dd.quad.tolist(),
        "b": dd.logits.tolist(),
        "c": dd.consts.tolist(),
        "tied": bool(dd.tied),
    }


def params_from_json(obj: dict) -> tuple[GeneratorParams, DiscriminatorParams]:
    g = GeneratorParams(mode=obj["mode"],
                        cov_factor=np.array(obj["lambda"], dtype=np.float64),
                        means=np.array(obj["means"], dtype=np.float64))
    dd = DiscriminatorParams(quad=np.array(obj["A"], dtype=np.float64),
                             logits=np.array(obj["b"], dtype=np.float64),
                             consts=np.array(obj["c"], dtype=np.float64),
                             tied=bool(obj["tied"]))
    return g, dd
