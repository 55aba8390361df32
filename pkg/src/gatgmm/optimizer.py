"""Gradient descent ascent training, initialization, and stationarity.

One round = ``disc_steps_per_gen_step`` ascent steps on the discriminator
block followed by one descent step on the generator, each evaluated on the
current minibatch with a fresh latent batch per round.  All randomness
flows through split streams of a single Philox seed, so a (config, seed)
pair replays bit-identically.

The stationarity measure is the Danskin envelope gradient: solve the inner
maximization to tolerance, then take the generator gradient of the
decomposed optimum.  It requires the strong-concavity margin
lam > E||X||^2 + E||G||^2; the practical training configs violate it, so
the trainer falls back to the minibatch generator-gradient norm at eval
points when the envelope is unavailable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .em import GmmParams
from .errors import Diverged, InfeasibleRegime, InvalidInput, NotStronglyConcave
from .gausscore import SeededRng, symmetrize
from .metrics import gmm_objective
from .model import (
    SHARED_COV,
    SYMMETRIC2,
    DiscriminatorParams,
    GeneratorParams,
    gen_apply,
    params_to_json,
)
from .objective import (
    Anchors,
    MixtureMoments,
    SampleMoments,
    _logcosh,
    disc_block_value_and_grads,
    envelope_generator_grad,
    gen_block_grads,
)

__all__ = [
    "GuaranteedSteps",
    "guaranteed_stepsizes",
    "init_params",
    "TrainConfig",
    "EvalRecord",
    "TrainReport",
    "train_gda",
    "stationarity_grad_norm",
    "project_to_feasible",
]


class GuaranteedSteps(NamedTuple):
    alpha_max: float
    alpha_min: float
    lipschitz: float
    kappa: float
    kappa_alt: float


def guaranteed_stepsizes(lam: float, eta: float, k: int,
                         max_anchor_normsq: float) -> GuaranteedSteps:
    """Convergence-guaranteed GDA step sizes for the feasible regime
    lam > 2 eta with E||X||^2 <= eta.

        alpha_max = 1/(lam + 2 eta)
        L = 2 lam + 4 eta + 10 (k+1) (eta/lam + max_i ||d_i||^2)
        kappa = L/(lam - 2 eta)
        alpha_min = 1/(kappa^2 L)

    kappa_alt carries the alternative condition-number convention
    (lam + 2 eta)/(lam - 2 eta); both are exposed for inspection.
    """
    if not (eta > 0 and lam > 2 * eta):
        raise InfeasibleRegime(f"need lam > 2*eta > 0, got lam={lam}, eta={eta}")
    alpha_max = 1.0 / (lam + 2.0 * eta)
    lip = 2.0 * lam + 4.0 * eta + 10.0 * (k + 1) * (eta / lam + max_anchor_normsq)
    kappa = lip / (lam - 2.0 * eta)
    alpha_min = 1.0 / (kappa ** 2 * lip)
    kappa_alt = (lam + 2.0 * eta) / (lam - 2.0 * eta)
    return GuaranteedSteps(alpha_max, alpha_min, lip, kappa, kappa_alt)


def init_params(d: int, mode: str, sigma_init: float, rng: SeededRng,
                k: int = 2, tied: bool = True) -> tuple[GeneratorParams, DiscriminatorParams]:
    """Initialization: means uniform in (-0.5, 0.5)^d, covariance factor
    sigma * (I + 0.01 N(0,1)), quadratic matrix I + 0.01 N(0,1) symmetrized,
    logit rows 0.01 N(0,1)."""
    if d < 1:
        raise InvalidInput("d must be >= 1")
    gen = rng.gen
    n_means = 1 if mode == SYMMETRIC2 else k
    means = gen.uniform(-0.5, 0.5, size=(n_means, d))
    cov_factor = sigma_init * (np.eye(d) + 0.01 * gen.standard_normal((d, d)))
    quad = symmetrize(np.eye(d) + 0.01 * gen.standard_normal((d, d)))
    g = GeneratorParams(mode=mode, cov_factor=cov_factor, means=means)
    if mode == SYMMETRIC2 and tied:
        dd = DiscriminatorParams.tied_symmetric(
            quad, 0.01 * gen.standard_normal(d), 0.01 * gen.standard_normal(d))
    else:
        rows = 0.01 * gen.standard_normal((2 * g.k, d))
        dd = DiscriminatorParams(quad=quad, logits=rows, consts=np.zeros(2 * g.k),
                                 tied=False)
    return g, dd


@dataclass(frozen=True)
class TrainConfig:
    max_iters: int = 4000
    disc_steps_per_gen_step: int = 1
    lr_gen: float = 1e-2
    lr_disc: float = 1e-1
    batch_size: int = 0          # 0 = full batch
    latent_batch: int = 0        # 0 = match the data batch
    lam: float = 2.0
    eta: float | None = None     # feasibility radius; needed for projection
    seed: int = 0
    eval_every: int = 200
    grad_tol: float = 0.0        # 0 disables envelope-based early stopping
    use_guaranteed_steps: bool = False
    project_feasible: bool = False
    mode: str = SYMMETRIC2
    k: int = 2
    tied: bool = True
    sigma_init: float | None = None  # default 2**(-1/d)
    # iteration from which latents are drawn as antithetic pairs (z, -z);
    # None = plain i.i.d. throughout.  Pairing cancels the mean/covariance
    # cross term of the latent-batch second moment, shrinking the late-phase
    # parameter jitter (symmetric mode only).
    antithetic_from: int | None = None

    def __post_init__(self):
        if self.lr_gen < 0 or self.lr_disc < 0:
            raise InvalidInput("learning rates must be >= 0")
        if self.batch_size < 0 or self.max_iters < 0:
            raise InvalidInput("sizes must be nonnegative")
        if self.disc_steps_per_gen_step < 1:
            raise InvalidInput("disc_steps_per_gen_step must be >= 1")
        if not self.lam > 0:
            raise InvalidInput("lam must be > 0")


@dataclass(frozen=True)
class EvalRecord:
    iteration: int
    objective: float
    grad_norm: float
    gmm_objective: float  # nan when no truth supplied
    seconds: float

    def to_json(self) -> dict:
        return {
            "iteration": self.iteration,
            "objective": self.objective,
            "grad_norm": self.grad_norm,
            "gmm_objective": None if np.isnan(self.gmm_objective) else self.gmm_objective,
        }


@dataclass
class TrainReport:
    iterates: list[EvalRecord] = field(default_factory=list)
    final_gen: GeneratorParams | None = None
    final_disc: DiscriminatorParams | None = None
    wall_clock_seconds: float = 0.0

    def to_json(self, include_timing: bool = False) -> dict:
        out = {
            "iterates": [r.to_json() for r in self.iterates],
            "final_params": params_to_json(self.final_gen, self.final_disc),
        }
        if include_timing:
            out["wall_clock_seconds"] = self.wall_clock_seconds
        return out


def project_to_feasible(g: GeneratorParams, eta: float) -> GeneratorParams:
    """Jointly rescale (C, means) onto ||C||_F^2 + max_i ||mu_i||^2 + 1 <= eta."""
    if not eta > 1.0:
        raise InvalidInput("feasibility radius eta must exceed 1")
    total = float(np.sum(g.cov_factor ** 2) + np.max(np.sum(g.means ** 2, axis=1)))
    if total + 1.0 <= eta:
        return g
    t = np.sqrt((eta - 1.0) / total)
    return replace(g, cov_factor=t * g.cov_factor, means=t * g.means)


def _disc_step(dd: DiscriminatorParams, quad_grad, logit_grads, const_grads,
               lr: float) -> DiscriminatorParams:
    quad = symmetrize(dd.quad + lr * quad_grad)
    if dd.tied:
        return DiscriminatorParams.tied_symmetric(
            quad, dd.logits[0] + lr * logit_grads[0], dd.logits[2] + lr * logit_grads[1])
    consts = dd.consts + lr * const_grads if const_grads is not None else dd.consts
    return DiscriminatorParams(quad=quad, logits=dd.logits + lr * logit_grads,
                               consts=consts, tied=False)


def _gen_step(g: GeneratorParams, cov_grad, means_grad, lr: float) -> GeneratorParams:
    return replace(g, cov_factor=g.cov_factor - lr * cov_grad,
                   means=g.means - lr * means_grad)


def stationarity_grad_norm(g: GeneratorParams, target, anchors: Anchors,
                           tol_inner: float = 1e-8, gh_order: int = 64) -> float:
    """Norm of the envelope generator gradient at the inner maximum.

    ``target`` is a Dataset / sample matrix (empirical data side) or a
    GmmParams symmetric truth (population side via quadrature).
    """
    if isinstance(target, GmmParams):
        if target.k != 2:
            raise InvalidInput("population stationarity needs a symmetric 2-component truth")
        xm = MixtureMoments(target.means[0], target.covs[0], gh_order)
    else:
        xs = np.asarray(getattr(target, "samples", target), dtype=np.float64)
        xm = SampleMoments(xs)
    grad_mu, grad_cov = envelope_generator_grad(g, xm, anchors, tol_inner, gh_order)
    return float(np.sqrt(np.sum(grad_mu ** 2) + np.sum(grad_cov ** 2)))


def _eval_record(it, value, g, dd, anchors, xs, cfg, truth, t0):
    envelope = float("nan")
    if cfg.mode == SYMMETRIC2 and cfg.tied:
        try:
            envelope = stationarity_grad_norm(g, xs, anchors, tol_inner=1e-6)
        except NotStronglyConcave:
            pass
    obj_vs_truth = float("nan")
    if truth is not None and cfg.mode == SYMMETRIC2:
        obj_vs_truth = gmm_objective(truth, g.means[0], g.cov_factor @ g.cov_factor.T)
    return EvalRecord(iteration=it, objective=value, grad_norm=envelope,
                      gmm_objective=obj_vs_truth,
                      seconds=time.perf_counter() - t0), envelope


def _train_fast_symmetric(xs, cfg, anchors, truth, g0, dd0, lr_gen, lr_disc):
    """Raw-array loop for the tied symmetric mode: same updates as the
    generic path without per-step parameter-object reconstruction."""
    n, d = xs.shape
    lam = anchors.lam
    d_vec = anchors.d_vecs[0].copy()
    root = SeededRng(cfg.seed)
    z_rng = root.split(2)
    batch_rng = root.split(3)

    quad = dd0.quad.copy()
    b1 = dd0.logits[0].copy()
    b3 = dd0.logits[2].copy()
    cov = g0.cov_factor.copy()
    mu = g0.means[0].copy()

    batch = n if cfg.batch_size in (0, None) or cfg.batch_size >= n else cfg.batch_size
    m = cfg.latent_batch if cfg.latent_batch > 0 else batch
    full_sx = symmetrize(xs.T @ xs / n) if batch == n else None

    records: list[EvalRecord] = []
    t0 = time.perf_counter()
    for it in range(1, cfg.max_iters + 1):
        xb = xs if batch == n else xs[batch_rng.gen.integers(0, n, size=batch)]
        if cfg.antithetic_from is not None and it > cfg.antithetic_from:
            half = z_rng.gen.standard_normal(((m + 1) // 2, d))
            z = np.concatenate([half, -half])[:m]
        else:
            z = z_rng.gen.standard_normal((m, d))
        labels = (z_rng.gen.integers(0, 2, size=m) * 2 - 1).astype(np.float64)
        gx = (z @ cov.T + mu) * labels[:, None]

        sx = full_sx if full_sx is not None else symmetrize(xb.T @ xb / batch)
        sg = symmetrize(gx.T @ gx / m)
        for _ in range(cfg.disc_steps_per_gen_step):
            quad_grad = symmetrize(0.5 * (sx - sg)) - lam * quad
            th_x1 = np.tanh(xb @ b1)
            th_x3 = np.tanh(xb @ b3)
            th_g1 = np.tanh(gx @ b1)
            th_g3 = np.tanh(gx @ b3)
            g1 = xb.T @ th_x1 / batch - gx.T @ th_g1 / m - 2.0 * lam * (b1 - d_vec)
            g3 = -(xb.T @ th_x3 / batch) + gx.T @ th_g3 / m - 2.0 * lam * (b3 - d_vec)
            if not np.isfinite(np.sum(quad_grad) + np.sum(g1) + np.sum(g3)):
                raise Diverged(it)
            quad = symmetrize(quad + lr_disc * quad_grad)
            b1 = b1 + lr_disc * g1
            b3 = b3 + lr_disc * g3

        th_g1 = np.tanh(gx @ b1)
        th_g3 = np.tanh(gx @ b3)
        s = gx @ quad + np.outer(th_g1, b1) - np.outer(th_g3, b3)
        signed = labels[:, None] * s
        mean_signed = np.mean(signed, axis=0)
        cov_step = signed.T @ z / m
        if not np.isfinite(np.sum(cov_step) + np.sum(mean_signed)):
            raise Diverged(it)
        mu = mu + lr_gen * mean_signed
        cov = cov + lr_gen * cov_step

        if cfg.project_feasible:
            if cfg.eta is None:
                raise InvalidInput("projection needs an explicit eta")
            total = float(np.sum(cov ** 2) + np.sum(mu ** 2))
            if total + 1.0 > cfg.eta:
                t = np.sqrt((cfg.eta - 1.0) / total)
                cov = t * cov
                mu = t * mu

        if it % cfg.eval_every == 0 or it == cfg.max_iters:
            g = GeneratorParams(mode=SYMMETRIC2, cov_factor=cov, means=mu[None, :])
            dd = DiscriminatorParams.tied_symmetric(quad, b1, b3)
            pen = (float(np.sum(quad ** 2)) + 2.0 * float(np.sum((b1 - d_vec) ** 2))
                   + 2.0 * float(np.sum((b3 - d_vec) ** 2)))
            value = (float(np.mean(0.5 * np.sum((xb @ quad) * xb, axis=1)
                                   + _logcosh(xb @ b1) - _logcosh(xb @ b3)))
                     - float(np.mean(0.5 * np.sum((gx @ quad) * gx, axis=1)
                                     + _logcosh(gx @ b1) - _logcosh(gx @ b3)))
                     - 0.5 * lam * pen)
            rec, envelope = _eval_record(it, value, g, dd, anchors, xs, cfg, truth, t0)
            if not np.isfinite(rec.grad_norm):
                batch_norm = float(np.sqrt(np.sum(cov_step ** 2) + np.sum(mean_signed ** 2)))
                rec = replace(rec, grad_norm=batch_norm)
            records.append(rec)
            if cfg.grad_tol > 0 and np.isfinite(envelope) and envelope <= cfg.grad_tol:
                break

    g = GeneratorParams(mode=SYMMETRIC2, cov_factor=cov, means=mu[None, :])
    dd = DiscriminatorParams.tied_symmetric(quad, b1, b3)
    return TrainReport(iterates=records, final_gen=g, final_disc=dd,
                       wall_clock_seconds=time.perf_counter() - t0)


def train_gda(data, cfg: TrainConfig, anchors: Anchors,
              truth: GmmParams | None = None) -> TrainReport:
    """Alternating GDA on the minimax objective.

    Stops at max_iters, or earlier when grad_tol > 0 and the envelope
    gradient norm at an eval point falls below it.  Raises Diverged with
    the iteration index on a non-finite gradient.
    """
    xs = np.asarray(getattr(data, "samples", data), dtype=np.float64)
    xs = np.atleast_2d(xs)
    if xs.shape[0] < 1:
        raise InvalidInput("training data is empty")
    n, d = xs.shape

    root = SeededRng(cfg.seed)
    init_rng = root.split(1)
    z_rng = root.split(2)
    batch_rng = root.split(3)

    sigma = cfg.sigma_init if cfg.sigma_init is not None else 2.0 ** (-1.0 / d)
    g, dd = init_params(d, cfg.mode, sigma, init_rng, k=cfg.k, tied=cfg.tied)

    if cfg.use_guaranteed_steps:
        if cfg.eta is None:
            raise InvalidInput("guaranteed step sizes need an explicit eta")
        steps = guaranteed_stepsizes(cfg.lam, cfg.eta, g.k,
                                   float(np.max(np.sum(anchors.d_vecs ** 2, axis=1))))
        lr_disc, lr_gen = steps.alpha_max, steps.alpha_min
    else:
        lr_disc, lr_gen = cfg.lr_disc, cfg.lr_gen

    if cfg.max_iters == 0:
        return TrainReport(
            iterates=[EvalRecord(iteration=0, objective=float("nan"),
                                 grad_norm=float("nan"), gmm_objective=float("nan"),
                                 seconds=0.0)],
            final_gen=g, final_disc=dd, wall_clock_seconds=0.0)

    if cfg.mode == SYMMETRIC2 and cfg.tied:
        return _train_fast_symmetric(xs, cfg, anchors, truth, g, dd, lr_gen, lr_disc)

    batch = n if cfg.batch_size in (0, None) or cfg.batch_size >= n else cfg.batch_size
    train_consts = cfg.mode == SHARED_COV
    full_sx = symmetrize(xs.T @ xs / n) if batch == n else None
    records: list[EvalRecord] = []
    t0 = time.perf_counter()
    last_value = float("nan")

    m_latent = cfg.latent_batch if cfg.latent_batch > 0 else batch
    for it in range(1, cfg.max_iters + 1):
        xb = xs if batch == n else xs[batch_rng.gen.integers(0, n, size=batch)]
        pair = (cfg.antithetic_from is not None and it > cfg.antithetic_from
                and cfg.mode == SYMMETRIC2)
        if pair:
            half = z_rng.gen.standard_normal(((m_latent + 1) // 2, d))
            z = np.concatenate([half, -half])[:m_latent]
            labels = z_rng.gen.integers(0, 2, size=m_latent) * 2 - 1
        else:
            z = z_rng.gen.standard_normal((m_latent, d))
            if cfg.mode == SYMMETRIC2:
                labels = z_rng.gen.integers(0, 2, size=m_latent) * 2 - 1
            else:
                labels = z_rng.gen.integers(0, g.k, size=m_latent)
        gx = gen_apply(g, z, labels)

        for _ in range(cfg.disc_steps_per_gen_step):
            last_value, quad_grad, logit_grads, const_grads = disc_block_value_and_grads(
                dd, anchors, xb, gx, train_consts, sx=full_sx)
            if not (np.all(np.isfinite(quad_grad)) and np.all(np.isfinite(logit_grads))):
                raise Diverged(it)
            dd = _disc_step(dd, quad_grad, logit_grads,
                            const_grads if train_consts else None, lr_disc)

        cov_grad, means_grad = gen_block_grads(g, dd, gx, z, labels)
        gen_grad_vec = np.concatenate([cov_grad.ravel(), means_grad.ravel()])
        if not np.all(np.isfinite(gen_grad_vec)):
            raise Diverged(it)
        g = _gen_step(g, cov_grad, means_grad, lr_gen)
        if cfg.project_feasible:
            if cfg.eta is None:
                raise InvalidInput("projection needs an explicit eta")
            g = project_to_feasible(g, cfg.eta)

        if it % cfg.eval_every == 0 or it == cfg.max_iters:
            rec, envelope = _eval_record(it, last_value, g, dd, anchors, xs, cfg, truth, t0)
            if not np.isfinite(rec.grad_norm):
                rec = replace(rec, grad_norm=float(np.linalg.norm(gen_grad_vec)))
            records.append(rec)
            if cfg.grad_tol > 0 and np.isfinite(envelope) and envelope <= cfg.grad_tol:
                break

    return TrainReport(iterates=records, final_gen=g, final_disc=dd,
                       wall_clock_seconds=time.perf_counter() - t0)
