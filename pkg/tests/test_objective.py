import numpy as np
import pytest
from scipy.optimize import minimize

from gatgmm.errors import InvalidInput, NotCConcave, NotStronglyConcave
from gatgmm.gausscore import SeededRng, symmetrize
from gatgmm.model import (
    SHARED_COV,
    SYMMETRIC2,
    DiscriminatorParams,
    GeneratorParams,
    disc_vec,
    disc_with_vec,
    gen_apply,
    gen_second_moment,
    gen_vec,
    gen_with_vec,
)
from gatgmm.objective import (
    Anchors,
    GeneratorMoments,
    MixtureMoments,
    SampleMoments,
    c_transform,
    c_transform_batch,
    envelope_generator_grad,
    gh_expect,
    inner_max_solve,
    inner_max_solve_population,
    l1_value,
    minimax_value_and_grads,
    c_transform_upper_bound,
)

FD_H = 1e-5
FD_REL = 1e-6


def sym2(cov, mu):
    return GeneratorParams(mode=SYMMETRIC2, cov_factor=np.asarray(cov, float),
                           means=np.asarray(mu, float)[None, :])


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b))


# --- Gauss-Hermite expectations --------------------------------------------


def test_gh_odd_integrand_vanishes():
    for std in (0.3, 1.0, 2.5):
        assert abs(gh_expect(0.0, std, "tanh")) <= 1e-12


def test_gh_point_mass():
    assert gh_expect(1.0, 0.0, "tanh") == pytest.approx(np.tanh(1.0), abs=1e-14)


def test_gh_matches_monte_carlo():
    rng = np.random.default_rng(0)
    n = 10**7
    z = rng.standard_normal(n)
    sample = np.tanh(2.0 + 1.0 * z)
    se = sample.std() / np.sqrt(n)
    assert abs(gh_expect(2.0, 1.0, "tanh") - sample.mean()) <= 3 * se


def test_gh_validates():
    with pytest.raises(InvalidInput):
        gh_expect(0.0, -1.0, "tanh")
    with pytest.raises(InvalidInput):
        gh_expect(0.0, 1.0, "tanh", order=5)
    with pytest.raises(InvalidInput):
        gh_expect(0.0, 1.0, "sinh")


def test_tanh_moment_inequality_grid():
    # E[X] E[tanh X] - E[X]^2 E[tanh' X] >= 0, equality only at mu = 0
    for mu in np.arange(0.0, 3.01, 0.25):
        for std in (0.1, 0.5, 1.0, 2.0):
            val = mu * gh_expect(mu, std, "tanh") - mu**2 * gh_expect(mu, std, "tanh_prime")
            assert val >= -1e-10
            if mu == 0.0:
                assert abs(val) <= 1e-10
            else:
                assert val > 1e-10


def test_tanh_curvature_inequality_grid():
    # 2 E[tanh''] + E[tanh'''] <= 0 for mu >= 0
    for mu in np.arange(0.0, 3.01, 0.25):
        for std in (0.1, 0.5, 1.0, 2.0):
            val = 2 * gh_expect(mu, std, "tanh_pp") + gh_expect(mu, std, "tanh_ppp")
            assert val <= 1e-10


# --- value and gradients ----------------------------------------------------


def random_instance(rng, d, mode=SYMMETRIC2, tied=True, k=4, n=24, m=24):
    if mode == SYMMETRIC2:
        g = sym2(0.5 * rng.standard_normal((d, d)), rng.standard_normal(d))
        quad = symmetrize(0.4 * rng.standard_normal((d, d)))
        if tied:
            dd = DiscriminatorParams.tied_symmetric(
                quad, 0.6 * rng.standard_normal(d), 0.6 * rng.standard_normal(d))
        else:
            dd = DiscriminatorParams(quad=quad, logits=0.6 * rng.standard_normal((4, d)),
                                     consts=np.zeros(4), tied=False)
        anchors = Anchors.symmetric(rng.standard_normal(d), lam=0.5 + rng.uniform())
        labels = rng.integers(0, 2, m) * 2 - 1
    else:
        g = GeneratorParams(mode=SHARED_COV, cov_factor=0.5 * rng.standard_normal((d, d)),
                            means=rng.standard_normal((k, d)))
        dd = DiscriminatorParams(quad=symmetrize(0.4 * rng.standard_normal((d, d))),
                                 logits=0.6 * rng.standard_normal((2 * k, d)),
                                 consts=0.3 * rng.standard_normal(2 * k), tied=False)
        anchors = Anchors(d_vecs=rng.standard_normal((k, d)),
                          e_consts=0.2 * rng.standard_normal(k),
                          lam=0.5 + rng.uniform())
        labels = rng.integers(0, k, m)
    xs = rng.standard_normal((n, d)) + 0.5
    z = rng.standard_normal((m, d))
    return g, dd, anchors, xs, z, labels


def test_value_zero_network():
    d = 3
    g = sym2(np.eye(d), np.ones(d))
    dd = DiscriminatorParams(quad=np.zeros((d, d)), logits=np.zeros((4, d)),
                             consts=np.zeros(4))
    d_vec = np.array([1.0, -2.0, 0.5])
    anchors = Anchors.symmetric(d_vec, lam=0.8)
    rng = np.random.default_rng(0)
    xs = rng.standard_normal((10, d))
    z = rng.standard_normal((12, d))
    labels = np.ones(12, dtype=int)
    val, _ = minimax_value_and_grads(g, dd, anchors, xs, z, labels)
    assert val == pytest.approx(-0.5 * 0.8 * 4 * np.sum(d_vec**2))
    anchors0 = Anchors.symmetric(np.zeros(d), lam=0.8)
    val0, _ = minimax_value_and_grads(g, dd, anchors0, xs, z, labels)
    assert val0 == pytest.approx(0.0, abs=1e-15)


def test_quad_gradient_matched_batches():
    d = 2
    g = sym2(np.eye(d), np.ones(d))
    dd = DiscriminatorParams(quad=np.zeros((d, d)), logits=np.zeros((4, d)),
                             consts=np.zeros(4))
    anchors = Anchors.symmetric(np.zeros(d), lam=1.0)
    rng = np.random.default_rng(1)
    z = rng.standard_normal((16, d))
    labels = rng.integers(0, 2, 16) * 2 - 1
    xs = gen_apply(g, z, labels)
    _, gp = minimax_value_and_grads(g, dd, anchors, xs, z, labels)
    assert np.allclose(gp.quad, 0.0, atol=1e-14)


def _fd_check_all_blocks(g, dd, anchors, xs, z, labels):
    include_c = g.mode == SHARED_COV
    val, gp = minimax_value_and_grads(g, dd, anchors, xs, z, labels)

    dvec = disc_vec(dd, include_consts=include_c)
    danal = np.concatenate([gp.quad.ravel(), gp.logits.ravel()]
                           + ([gp.consts] if include_c else []))
    fd = np.zeros_like(dvec)
    for i in range(dvec.size):
        vp, vm = dvec.copy(), dvec.copy()
        vp[i] += FD_H
        vm[i] -= FD_H
        fp, _ = minimax_value_and_grads(g, disc_with_vec(dd, vp, include_c), anchors, xs, z, labels)
        fm, _ = minimax_value_and_grads(g, disc_with_vec(dd, vm, include_c), anchors, xs, z, labels)
        fd[i] = (fp - fm) / (2 * FD_H)
    assert rel_err(danal, fd) <= FD_REL

    gvec = gen_vec(g)
    ganal = np.concatenate([gp.gen_cov_factor.ravel(), gp.gen_means.ravel()])
    fdg = np.zeros_like(gvec)
    for i in range(gvec.size):
        vp, vm = gvec.copy(), gvec.copy()
        vp[i] += FD_H
        vm[i] -= FD_H
        fp, _ = minimax_value_and_grads(gen_with_vec(g, vp), dd, anchors, xs, z, labels)
        fm, _ = minimax_value_and_grads(gen_with_vec(g, vm), dd, anchors, xs, z, labels)
        fdg[i] = (fp - fm) / (2 * FD_H)
    assert rel_err(ganal, fdg) <= FD_REL


@pytest.mark.parametrize("d", [1, 2, 5])
@pytest.mark.parametrize("mode,tied", [(SYMMETRIC2, True), (SYMMETRIC2, False), (SHARED_COV, False)])
def test_gradients_match_finite_differences(d, mode, tied):
    rng = np.random.default_rng(1000 + d + (0 if tied else 7) + (0 if mode == SYMMETRIC2 else 13))
    for _ in range(4):
        g, dd, anchors, xs, z, labels = random_instance(rng, d, mode=mode, tied=tied)
        _fd_check_all_blocks(g, dd, anchors, xs, z, labels)


def test_shape_mismatch_raises():
    rng = np.random.default_rng(0)
    g, dd, anchors, xs, z, labels = random_instance(rng, 3)
    with pytest.raises(InvalidInput):
        minimax_value_and_grads(g, dd, anchors, xs[:, :2], z, labels)
    with pytest.raises(InvalidInput):
        minimax_value_and_grads(g, dd, anchors, xs, z, labels[:-1])


# --- l1_value ----------------------------------------------------------------


def test_l1_matched_moments():
    g = sym2(np.eye(2), np.ones(2))
    assert l1_value(g, gen_second_moment(g), lam=1.3) == pytest.approx(0.0, abs=1e-15)


def test_l1_scalar_case():
    g = sym2(np.array([[1.0]]), np.array([0.0]))  # E[GG'] = 1
    assert l1_value(g, np.array([[2.0]]), lam=1.0) == pytest.approx(0.5)


def test_l1_scaling_in_lam():
    rng = np.random.default_rng(2)
    g = sym2(rng.standard_normal((3, 3)), rng.standard_normal(3))
    s = symmetrize(np.eye(3) * 2.0)
    assert l1_value(g, s, 2.0) == pytest.approx(0.5 * l1_value(g, s, 1.0))
    with pytest.raises(InvalidInput):
        l1_value(g, s, 0.0)


# --- inner maximization -------------------------------------------------------


def test_inner_max_matched_batches_zero_value():
    d = 2
    g = sym2(0.3 * np.eye(d), np.array([1.0, 0.5]))
    anchors = Anchors.symmetric(np.array([0.8, 0.4]), lam=8.0)
    rng = np.random.default_rng(3)
    z = rng.standard_normal((64, d))
    labels = rng.integers(0, 2, 64) * 2 - 1
    xs = gen_apply(g, z, labels)
    dd, val = inner_max_solve(g, xs, anchors, z_eval=z, labels=labels, tol=1e-10)
    assert val.l1 == pytest.approx(0.0, abs=1e-20)
    assert val.l2 == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(dd.logits[0], anchors.d_vecs[0], atol=1e-9)


def test_inner_max_large_lam_limit():
    d = 2
    g = sym2(0.3 * np.eye(d), np.array([1.0, 0.0]))
    rng = np.random.default_rng(4)
    xs = rng.standard_normal((32, d)) * 0.4 + np.array([1.0, 0.0]) * rng.choice([-1, 1], 32)[:, None]
    d_vec = np.array([0.7, -0.2])
    dd, _ = inner_max_solve(g, xs, Anchors.symmetric(d_vec, lam=1e6), tol=1e-4)
    assert np.allclose(dd.logits[0], d_vec, atol=1e-5)
    assert np.allclose(dd.quad, 0.0, atol=1e-5)


def test_inner_max_agrees_with_multistart_oracle():
    # tiny 1-D instance; oracle = closed-form A block + multistart BFGS on the
    # two free logit scalars of the tied problem
    d = 1
    g = sym2(np.array([[0.35]]), np.array([0.6]))
    xs = np.array([[-1.1], [-0.8], [-0.2], [0.3], [0.7], [1.0], [1.4], [-1.6]])
    anchors = Anchors.symmetric(np.array([0.9]), lam=6.0)
    gm = GeneratorMoments(g, order=96)
    xm = SampleMoments(xs)
    lam = anchors.lam
    d_vec = anchors.d_vecs[0]

    def neg_f(b, sign):
        b = np.asarray(b)
        delta = xm.logcosh_expect(b) - gm.logcosh_expect(b)
        return -(sign * delta - lam * np.sum((b - d_vec) ** 2))

    best = []
    rng = np.random.default_rng(5)
    for sign in (1.0, -1.0):
        vals = []
        for _ in range(10):
            x0 = rng.standard_normal(1) * 2
            res = minimize(neg_f, x0, args=(sign,), method="BFGS")
            vals.append(-res.fun)
        best.append(max(vals))
    l2_oracle = best[0] + best[1]
    l1_oracle = l1_value(g, xm.second, lam)

    dd, val = inner_max_solve(g, xs, anchors, tol=1e-12, gh_order=96)
    assert val.l2 == pytest.approx(l2_oracle, abs=1e-6)
    assert val.total == pytest.approx(l1_oracle + l2_oracle, abs=1e-6)


def test_inner_max_decomposition_nonnegative_random():
    rng = np.random.default_rng(6)
    for _ in range(20):
        d = rng.integers(1, 4)
        g = sym2(0.3 * rng.standard_normal((d, d)), 0.6 * rng.standard_normal(d))
        mu_x = rng.standard_normal(d)
        cov_x = symmetrize(0.05 * np.eye(d))
        xs = SeededRng(int(rng.integers(1 << 30))).gen.standard_normal((40, d)) * 0.3 + mu_x
        xs = np.concatenate([xs, -xs])  # sign-symmetric batch
        lam = float(np.mean(np.sum(xs**2, axis=1))
                    + np.trace(gen_second_moment(g)) + 1.0 + rng.uniform())
        anchors = Anchors.symmetric(rng.standard_normal(d), lam=lam)
        dd, val = inner_max_solve(g, xs, anchors, tol=1e-10)
        assert val.l1 >= -1e-12
        assert val.l2 >= -1e-9
        assert val.total == pytest.approx(val.l1 + val.l2)


def test_inner_max_tied_equals_untied_on_symmetric_data():
    d = 2
    rng = np.random.default_rng(7)
    g = sym2(0.25 * np.eye(d), np.array([0.9, 0.2]))
    half = rng.standard_normal((30, d)) * 0.3 + np.array([1.0, 0.4])
    xs = np.concatenate([half, -half])
    z = rng.standard_normal((40, d))
    z_eval = np.concatenate([z, z])
    labels = np.concatenate([np.ones(40, dtype=int), -np.ones(40, dtype=int)])
    lam = float(np.mean(np.sum(xs**2, axis=1)) + np.trace(gen_second_moment(g))) + 0.5
    anchors = Anchors.symmetric(np.array([0.8, 0.1]), lam=lam)
    _, tied_val = inner_max_solve(g, xs, anchors, z_eval=z_eval, labels=labels,
                                  tol=1e-11, tied=True)
    _, untied_val = inner_max_solve(g, xs, anchors, z_eval=z_eval, labels=labels,
                                    tol=1e-11, tied=False)
    assert tied_val.total == pytest.approx(untied_val.total, abs=1e-7)


def test_inner_max_rejects_weak_concavity():
    g = sym2(np.eye(2), np.ones(2))
    xs = np.random.default_rng(8).standard_normal((16, 2)) + 2.0
    anchors = Anchors.symmetric(np.ones(2), lam=0.5)
    with pytest.raises(NotStronglyConcave) as err:
        inner_max_solve(g, xs, anchors)
    assert err.value.margin <= 0


# --- envelope gradient --------------------------------------------------------


def test_envelope_gradient_matches_fd_of_inner_max_total():
    d = 2
    mu_x = np.array([0.9, 0.3])
    cov_x = np.diag([0.05, 0.08])
    g = sym2(np.diag([0.3, 0.2]), np.array([0.7, 0.1]))
    xm = MixtureMoments(mu_x, cov_x, order=96)
    lam = 6.0
    anchors = Anchors.symmetric(np.array([1.0, 0.3]), lam=lam)
    grad_mu, grad_cov = envelope_generator_grad(g, xm, anchors, tol_inner=1e-12, gh_order=96)
    analytic = np.concatenate([grad_cov.ravel(), grad_mu])

    def total(vec):
        gv = gen_with_vec(g, vec)
        _, val = inner_max_solve_population(gv, mu_x, cov_x, anchors, tol=1e-12, gh_order=96)
        return val.total

    v0 = gen_vec(g)
    fd = np.zeros_like(v0)
    for i in range(v0.size):
        vp, vm = v0.copy(), v0.copy()
        vp[i] += FD_H
        vm[i] -= FD_H
        fd[i] = (total(vp) - total(vm)) / (2 * FD_H)
    assert rel_err(analytic, fd) <= 1e-5


# --- c-transform ---------------------------------------------------------------


def test_c_transform_zero_disc():
    dd = DiscriminatorParams(quad=np.zeros((2, 2)), logits=np.zeros((4, 2)),
                             consts=np.zeros(4))
    assert c_transform(dd, np.array([1.0, -2.0])) == pytest.approx(0.0, abs=1e-12)


def test_c_transform_scalar_quadratic():
    # D(x) = a x^2 / 2 with 0 < a < 1 has D^c(x) = a x^2 / (2 (1 - a))
    for a in (0.2, 0.5, 0.8):
        dd = DiscriminatorParams(quad=np.array([[a]]), logits=np.zeros((4, 1)),
                                 consts=np.zeros(4))
        for x in (0.0, 1.3, -2.0):
            expect = a * x**2 / (2 * (1 - a))
            assert c_transform(dd, np.array([x]), tol=1e-10) == pytest.approx(expect, abs=1e-7)


def test_c_transform_dominates_value_at_zero():
    rng = np.random.default_rng(9)
    quad = symmetrize(rng.standard_normal((2, 2)) * 0.1)
    dd = DiscriminatorParams.tied_symmetric(quad, rng.standard_normal(2) * 0.2,
                                            rng.standard_normal(2) * 0.2)
    from gatgmm.model import disc_value
    x0 = np.zeros(2)
    assert c_transform(dd, x0) >= disc_value(dd, x0) - 1e-12


def test_c_transform_rejects_steep_disc():
    dd = DiscriminatorParams(quad=1.5 * np.eye(2), logits=np.zeros((4, 2)),
                             consts=np.zeros(4))
    with pytest.raises(NotCConcave):
        c_transform(dd, np.zeros(2))


# --- proposition-2-style bound ---------------------------------------------------


def feasible_disc(rng, d, eta):
    quad = symmetrize(rng.standard_normal((d, d)))
    w = np.linalg.eigvalsh(quad)
    quad *= 0.3 * eta / max(abs(w[0]), abs(w[-1]))
    b = rng.standard_normal((4, d))
    b *= np.sqrt(0.2 * eta / (2 * np.max(np.sum(b**2, axis=1))))
    return DiscriminatorParams(quad=quad, logits=b, consts=np.zeros(4))


def test_ct_bound_zero_case():
    d = 2
    dd = DiscriminatorParams(quad=np.zeros((d, d)), logits=np.zeros((4, d)),
                             consts=np.zeros(4))
    anchors = Anchors.symmetric(np.zeros(d), lam=1.0)
    xs = np.random.default_rng(10).standard_normal((50, d))
    bound = c_transform_upper_bound(dd, anchors, xs, eta=0.5)
    assert bound == pytest.approx(0.0, abs=1e-12)
    assert np.mean(c_transform_batch(dd, xs)) <= bound + 1e-12


def test_ct_bound_monotone_in_quad_norm():
    rng = np.random.default_rng(11)
    d = 2
    xs = rng.standard_normal((50, d))
    anchors = Anchors.symmetric(np.zeros(d), lam=1.0)
    b = np.zeros((4, d))
    prev = -np.inf
    for s in (0.0, 0.1, 0.2, 0.3):
        dd = DiscriminatorParams(quad=s * np.eye(d), logits=b, consts=np.zeros(4))
        cur = c_transform_upper_bound(dd, anchors, xs, eta=0.9)
        assert cur >= prev - 1e-12
        prev = cur


def test_ct_bound_dominates_mean_c_transform():
    rng = np.random.default_rng(12)
    d = 2
    for _ in range(25):
        eta = 0.9
        dd = feasible_disc(rng, d, eta)
        anchors = Anchors(d_vecs=rng.standard_normal((2, d)) * 0.2,
                          e_consts=np.zeros(2), lam=1.0)
        xs = rng.standard_normal((200, d))
        mean_ct = float(np.mean(c_transform_batch(dd, xs, tol=1e-9)))
        assert mean_ct <= c_transform_upper_bound(dd, anchors, xs, eta=eta) + 1e-10


def test_ct_bound_validates_eta():
    d = 2
    dd = DiscriminatorParams(quad=np.zeros((d, d)), logits=np.zeros((4, d)),
                             consts=np.zeros(4))
    anchors = Anchors.symmetric(np.zeros(d), lam=1.0)
    with pytest.raises(InvalidInput):
        c_transform_upper_bound(dd, anchors, np.zeros((5, d)), eta=1.0)
