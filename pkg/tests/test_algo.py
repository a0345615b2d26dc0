import numpy as np
import pytest

from aglakit.algo import (
    AlgoConfig,
    AlgoState,
    Algorithm,
    DivergedError,
    agla_step,
    dm_step,
    fgla_step,
    gla_step,
    init_coefficients,
    init_state,
    raar_step,
    run,
    run_chain,
)
from aglakit.frame import analyze
from aglakit.proj import objective, proj_magnitude, proj_range, reflect_magnitude, reflect_range
from aglakit.sigio import gen_signal

from conftest import crandn

ALL = list(Algorithm)


@pytest.fixture(scope="module")
def target(small_frame):
    x = gen_signal("linear_chirp", small_frame.signal_len, 3).samples
    return np.abs(analyze(x, small_frame))


@pytest.fixture(scope="module")
def consistent(small_frame):
    rng = np.random.default_rng(7)
    c = analyze(crandn(rng, small_frame.signal_len), small_frame)
    return c, np.abs(c)


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


# ---------------------------------------------------------------- config / init


def test_defaults():
    cfg = AlgoConfig()
    assert (cfg.alpha, cfg.beta, cfg.gamma, cfg.lam, cfg.rho, cfg.n_iter) == (
        0.99, 0.95, 1.2, 0.9, 0.8, 1000
    )
    assert cfg.init == "zero"


@pytest.mark.parametrize(
    "kwargs", [dict(rho=0), dict(lam=0), dict(lam=1.5), dict(n_iter=0), dict(init="bogus"),
               dict(kind="nope"), dict(alpha=float("nan"))]
)
def test_invalid_config(kwargs):
    with pytest.raises(ValueError):
        AlgoConfig(**kwargs)


def test_projection_cost_per_kind():
    assert [k.projections_per_iter for k in ALL] == [2, 2, 2, 2, 4, 4]


def test_init_zero(target):
    c0 = init_coefficients(target, "zero")
    assert np.all(c0.imag == 0)
    np.testing.assert_array_equal(c0.real, target)


def test_init_random(target):
    a = init_coefficients(target, "random", seed=5)
    b = init_coefficients(target, "random", seed=5)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(np.abs(a), target, rtol=1e-15)
    assert not np.array_equal(a, init_coefficients(target, "random", seed=6))


def test_init_rejects_zero_target():
    with pytest.raises(ValueError):
        init_coefficients(np.zeros((3, 3)))


# ---------------------------------------------------------------- steppers


def test_gla_fixed_point(small_frame, consistent):
    c, s = consistent
    st = gla_step(AlgoState(c), small_frame, s)
    assert rel(st.c, c) < 1e-12
    assert st.proj_count == 2 and st.iter == 1


def test_gla_monotone_random_targets(small_frame):
    rng = np.random.default_rng(11)
    for _ in range(2):
        s = rng.random(small_frame.shape)
        tr = run(AlgoConfig(Algorithm.GLA, n_iter=500), small_frame, s, timing=False)
        assert np.all(np.diff(tr.objective) <= 1e-12)


def test_fgla_first_iterate_has_no_momentum(small_frame, target):
    c0 = init_coefficients(target)
    st = init_state(AlgoConfig(Algorithm.FGLA), small_frame, target, c0)
    st1 = fgla_step(st, small_frame, target, 0.99)
    np.testing.assert_array_equal(st1.c, gla_step(AlgoState(c0), small_frame, target).c)


def test_fgla_alpha_zero_is_gla(small_frame, target):
    a = run(AlgoConfig(Algorithm.FGLA, alpha=0.0, n_iter=50), small_frame, target, timing=False)
    b = run(AlgoConfig(Algorithm.GLA, n_iter=50), small_frame, target, timing=False)
    np.testing.assert_array_equal(a.coefficients, b.coefficients)
    np.testing.assert_array_equal(a.ssnr, b.ssnr)


@pytest.mark.parametrize("beta", [0.0, 0.95, 1.7])
def test_agla_gamma_one_is_fgla(small_frame, target, beta):
    a = run(AlgoConfig(Algorithm.AGLA, alpha=0.9, beta=beta, gamma=1.0, n_iter=50),
            small_frame, target, timing=False)
    b = run(AlgoConfig(Algorithm.FGLA, alpha=0.9, n_iter=50), small_frame, target, timing=False)
    np.testing.assert_array_equal(a.coefficients, b.coefficients)


def test_agla_reduces_to_gla(small_frame, target):
    a = run(AlgoConfig(Algorithm.AGLA, alpha=0.0, beta=0.3, gamma=1.0, n_iter=50),
            small_frame, target, timing=False)
    b = run(AlgoConfig(Algorithm.GLA, n_iter=50), small_frame, target, timing=False)
    np.testing.assert_array_equal(a.coefficients, b.coefficients)


def test_agla_step_by_hand(small_frame, target, rng):
    c = crandn(rng, small_frame.shape)
    t_prev, d_prev = crandn(rng, c.shape), crandn(rng, c.shape)
    st = agla_step(AlgoState(c, t_prev, d_prev), small_frame, target, 0.5, 0.25, 1.5)
    t = -0.5 * d_prev + 1.5 * proj_range(proj_magnitude(c, target), small_frame)
    np.testing.assert_allclose(st.t_prev, t, atol=1e-12)
    np.testing.assert_allclose(st.c, t + 0.5 * (t - t_prev), atol=1e-12)
    np.testing.assert_allclose(st.d_prev, t + 0.25 * (t - t_prev), atol=1e-12)


def test_raar_step_by_hand(small_frame, target, rng):
    c = crandn(rng, small_frame.shape)
    lam = 0.7
    expected = (lam / 2) * (c + reflect_range(reflect_magnitude(c, target), small_frame)) \
        + (1 - lam) * proj_magnitude(c, target)
    st = raar_step(AlgoState(c), small_frame, target, lam)
    np.testing.assert_allclose(st.c, expected, atol=1e-12)
    assert st.proj_count == 2


def test_raar_lambda_one(small_frame, target, rng):
    c = crandn(rng, small_frame.shape)
    expected = 0.5 * (c + reflect_range(reflect_magnitude(c, target), small_frame))
    np.testing.assert_allclose(raar_step(AlgoState(c), small_frame, target, 1.0).c, expected,
                               atol=1e-12)


def test_dm_step_by_hand(small_frame, target, rng):
    c = crandn(rng, small_frame.shape)
    rho = 0.8
    p1, p2 = proj_range(c, small_frame), proj_magnitude(c, target)
    t = p2 + (p2 - c) / rho
    u = p1 + (p1 - c) / rho
    expected = c + rho * (proj_range(t, small_frame) - proj_magnitude(u, target))
    st = dm_step(AlgoState(c), small_frame, target, rho)
    np.testing.assert_allclose(st.c, expected, atol=1e-12)
    assert st.proj_count == 4
    u_elser = p1 - (p1 - c) / rho
    expected = c + rho * (proj_range(t, small_frame) - proj_magnitude(u_elser, target))
    np.testing.assert_allclose(dm_step(AlgoState(c), small_frame, target, rho, True).c,
                               expected, atol=1e-12)


def test_dm_rejects_zero_rho(small_frame, target):
    with pytest.raises(ValueError):
        dm_step(AlgoState(init_coefficients(target)), small_frame, target, 0.0)


@pytest.mark.parametrize("step", [
    lambda st, f, s: raar_step(st, f, s, 0.9),
    lambda st, f, s: dm_step(st, f, s, 0.8),
    lambda st, f, s: dm_step(st, f, s, 0.8, True),
])
def test_reflection_methods_fix_consistent_point(small_frame, consistent, step):
    c, s = consistent
    assert rel(step(AlgoState(c), small_frame, s).c, c) < 1e-12


def test_dm_elser_rho_one_matches_raar(small_frame, rng):
    s = rng.random(small_frame.shape)
    for _ in range(5):
        c = crandn(rng, s.shape)
        a = dm_step(AlgoState(c), small_frame, s, 1.0, elser_sign=True).c
        b = raar_step(AlgoState(c), small_frame, s, 1.0).c
        assert np.max(np.abs(a - b)) < 1e-10
    # same map, but round-off is amplified along the trajectory; short runs agree
    a = run(AlgoConfig(Algorithm.DM_ELSER, rho=1.0, n_iter=10), small_frame, s, timing=False)
    b = run(AlgoConfig(Algorithm.RAAR, lam=1.0, n_iter=10), small_frame, s, timing=False)
    assert np.max(np.abs(a.coefficients - b.coefficients)) < 1e-10


def test_dm_as_printed_differs_from_raar(small_frame, rng):
    s = rng.random(small_frame.shape)
    a = run(AlgoConfig(Algorithm.DM, rho=1.0, n_iter=5), small_frame, s, timing=False)
    b = run(AlgoConfig(Algorithm.RAAR, lam=1.0, n_iter=5), small_frame, s, timing=False)
    assert np.max(np.abs(a.coefficients - b.coefficients)) > 1e-3


# ---------------------------------------------------------------- runner


def test_single_gla_iteration(small_frame, target):
    tr = run(AlgoConfig(Algorithm.GLA, n_iter=1), small_frame, target)
    manual = proj_range(proj_magnitude(target.astype(complex), target), small_frame)
    np.testing.assert_array_equal(tr.coefficients, manual)
    assert len(tr) == 1 and tr.objective[0] == objective(manual, target)


@pytest.mark.parametrize("kind", ALL)
def test_trace_contract(small_frame, target, kind):
    tr = run(AlgoConfig(kind, n_iter=7), small_frame, target)
    assert len(tr) == 7
    np.testing.assert_array_equal(tr.iters, np.arange(1, 8))
    per = kind.projections_per_iter
    np.testing.assert_array_equal(tr.proj_count, per * np.arange(1, 8))
    assert tr.total_proj_count == per * 7
    assert np.all(np.diff(tr.elapsed_ns) >= 0)
    assert tr.signal.shape == (small_frame.signal_len,)


def test_agla_trace_equals_fgla(small_frame, target):
    a = run(AlgoConfig(Algorithm.AGLA, alpha=0.99, beta=0.99, gamma=1.0, n_iter=40),
            small_frame, target, timing=False)
    b = run(AlgoConfig(Algorithm.FGLA, alpha=0.99, n_iter=40), small_frame, target, timing=False)
    np.testing.assert_array_equal(a.ssnr, b.ssnr)
    np.testing.assert_array_equal(a.objective, b.objective)


@pytest.mark.parametrize("kind", ALL)
def test_deterministic(small_frame, target, kind):
    cfg = AlgoConfig(kind, n_iter=20, init="random", seed=42)
    a = run(cfg, small_frame, target, timing=False)
    b = run(cfg, small_frame, target, timing=False)
    np.testing.assert_array_equal(a.ssnr, b.ssnr)
    np.testing.assert_array_equal(a.coefficients, b.coefficients)
    assert not np.any(a.elapsed_ns)


def test_divergence_names_iteration(small_frame, target):
    # 1/rho overflows, the next projection produces NaN
    with pytest.raises(DivergedError) as err:
        with np.errstate(all="ignore"):
            run(AlgoConfig(Algorithm.DM, rho=1e-320, n_iter=50), small_frame, target)
    assert err.value.kind is Algorithm.DM
    assert 1 <= err.value.iteration <= 50
    assert f"iteration {err.value.iteration}" in str(err.value)


def test_run_shape_errors(small_frame, target):
    with pytest.raises(ValueError):
        run(AlgoConfig(n_iter=1), small_frame, target[:, :-1])
    with pytest.raises(ValueError):
        run(AlgoConfig(n_iter=1), small_frame, target, c0=np.zeros((3, 3)))


def test_chain_single_stage(small_frame, target):
    cfg = AlgoConfig(Algorithm.AGLA, n_iter=25)
    a = run(cfg, small_frame, target, timing=False)
    b = run_chain([(cfg, 25)], small_frame, target, timing=False)
    np.testing.assert_array_equal(a.ssnr, b.ssnr)


def test_chain_empty_prefix(small_frame, target):
    gla = AlgoConfig(Algorithm.GLA, n_iter=30)
    a = run_chain([(gla, 0), (gla, 30)], small_frame, target, timing=False)
    b = run(gla, small_frame, target, timing=False)
    np.testing.assert_array_equal(a.coefficients, b.coefficients)
    np.testing.assert_array_equal(a.iters, b.iters)


def test_chain_raar_then_agla(small_frame, target):
    tr = run_chain([(AlgoConfig(Algorithm.RAAR), 300), (AlgoConfig(Algorithm.AGLA), 700)],
                   small_frame, target)
    assert len(tr) == 1000
    np.testing.assert_array_equal(tr.iters, np.arange(1, 1001))
    assert tr.total_proj_count == 2000
    assert np.all(np.diff(tr.elapsed_ns) >= 0)


def test_chain_continues_from_previous_stage(small_frame, target):
    gla = AlgoConfig(Algorithm.GLA)
    first = run(AlgoConfig(Algorithm.GLA, n_iter=10), small_frame, target, timing=False)
    tail = run(AlgoConfig(Algorithm.FGLA, n_iter=10), small_frame, target,
               c0=first.coefficients, timing=False)
    tr = run_chain([(gla, 10), (AlgoConfig(Algorithm.FGLA), 10)], small_frame, target,
                   timing=False)
    np.testing.assert_array_equal(tr.ssnr[10:], tail.ssnr)
    np.testing.assert_array_equal(tr.proj_count[10:], 20 + tail.proj_count)


def test_chain_errors(small_frame, target):
    with pytest.raises(ValueError):
        run_chain([], small_frame, target)
    with pytest.raises(ValueError):
        run_chain([(AlgoConfig(), 0)], small_frame, target)
    with pytest.raises(ValueError):
        run_chain([(AlgoConfig(), -1)], small_frame, target)
