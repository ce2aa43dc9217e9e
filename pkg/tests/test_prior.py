"""Symbol prior tabulation and the conditional-mean denoiser."""

import numpy as np
import pytest
from scipy import stats

from roddsim import PriorGridSpec, atom_prior, build_prior, conditional_mean_var

THETA = 1e-6
ROOT = np.sqrt(THETA)


@pytest.fixture(scope="module")
def prior_l5():
    return build_prior(THETA, 4.0, 5)


def closed_form_density(v, u_max, tail_eps):
    """Exact density of A*cos(phase) for alpha = 4, amplitude truncated at
    u_max: the amplitude integral is elementary for the inverse-square law."""
    v = abs(v)
    if v >= u_max:
        return 0.0
    scale = ROOT / (np.pi * (1.0 - tail_eps))

    def antideriv(u):
        return np.sqrt(u**2 - v**2) / (v**2 * u)

    lower = max(ROOT, v)
    return scale * (antideriv(u_max) - antideriv(lower))


def test_total_mass_is_one(prior_l5):
    assert abs(prior_l5.total_mass - 1.0) < 1e-6


def test_atom_and_continuous_split(prior_l5):
    assert prior_l5.atom_masses.sum() == pytest.approx(1 - 2.0**-5)
    assert prior_l5.continuous_mass == pytest.approx(2.0**-5)


def test_positive_half_carries_half_the_continuous_mass(prior_l5):
    g, pdf = prior_l5.grid, prior_l5.pdf
    nonneg = g >= 0
    half = np.trapz(pdf[nonneg], g[nonneg])
    assert half * prior_l5.continuous_mass == pytest.approx(2.0**-5 / 2, rel=1e-3)
    assert np.allclose(pdf, pdf[::-1])


def test_density_matches_alpha4_closed_form(prior_l5):
    # spot-check tabulated nodes against the elementary antiderivative
    u_max = prior_l5.max_amplitude
    for v in (0.5 * ROOT, 0.99 * ROOT, 2 * ROOT, 50 * ROOT, 0.3 * u_max):
        idx = np.argmin(np.abs(prior_l5.grid - v))
        node = prior_l5.grid[idx]
        want = closed_form_density(node, u_max, 1e-6)
        # tabulated values carry the exact-renormalization shift (~5e-4)
        assert prior_l5.pdf[idx] == pytest.approx(want, rel=2e-3)


def test_density_peak_value(prior_l5):
    # closed form at the origin for alpha = 4: 1/(2 pi sqrt(theta)) up to
    # truncation and renormalization corrections
    mid = np.argmin(np.abs(prior_l5.grid))
    assert prior_l5.grid[mid] == 0.0
    assert prior_l5.pdf[mid] == pytest.approx(1 / (2 * np.pi * ROOT), rel=2e-3)


def test_sampled_real_parts_match_tabulated_density(prior_l5):
    # independent sampling oracle: inverse-CDF amplitude times cos(phase)
    rng = np.random.default_rng(7)
    n = 1_000_000
    amps = ROOT * rng.random(n) ** (-1.0)  # alpha = 4 inverse CCDF
    v = amps * np.cos(2 * np.pi * rng.random(n))

    edges = np.concatenate(
        [[-np.inf], np.linspace(-30 * ROOT, 30 * ROOT, 61), [np.inf]]
    )
    observed, _ = np.histogram(v, edges)

    # expected mass per bin by integrating the tabulated density
    fine = np.linspace(-30 * ROOT, 30 * ROOT, 30_001)
    pdf_fine = np.interp(fine, prior_l5.grid, prior_l5.pdf)
    cdf_fine = np.concatenate([[0.0], np.cumsum((pdf_fine[1:] + pdf_fine[:-1]) / 2 * np.diff(fine))])
    inner_edges = edges[1:-1]
    cdf_at_edges = np.interp(inner_edges, fine, cdf_fine)
    inner_mass = np.diff(cdf_at_edges)
    total_inner = cdf_at_edges[-1] - cdf_at_edges[0]
    tail = (1.0 - total_inner) / 2
    expected = np.concatenate([[tail], inner_mass, [tail]]) * n

    assert (expected > 10).all()
    result = stats.chisquare(observed, expected * observed.sum() / expected.sum())
    assert result.pvalue > 0.01


def test_pure_atom_prior_denoises_to_zero():
    prior = atom_prior([0.0], [1.0])
    for y in (-3.0, 0.0, 0.7, 100.0):
        m, v = conditional_mean_var(y, 0.5, prior)
        assert m == 0.0
        assert v == 0.0


def test_binary_prior_matches_tanh_closed_form():
    prior = atom_prior([-1.0, 1.0], [0.5, 0.5])
    s2 = 0.37
    y = np.linspace(-4, 4, 41)
    m, v = conditional_mean_var(y, s2, prior)
    want_m = np.tanh(y / s2)
    assert np.allclose(m, want_m, atol=1e-12)
    assert np.allclose(v, 1 - want_m**2, atol=1e-12)


def test_denoiser_matches_monte_carlo_posterior(prior_l5):
    # sampling oracle for the full mixture prior at core-scale observations
    rng = np.random.default_rng(42)
    n = 10_000_000
    tail_eps = 1e-6
    u = rng.random(n)
    is_cont = u < 2.0**-5
    k = int(is_cont.sum())
    amps = ROOT * (tail_eps + (1 - tail_eps) * rng.random(k)) ** (-1.0)
    x = np.zeros(n)
    x[is_cont] = amps * np.cos(2 * np.pi * rng.random(k))

    noise_var = (0.5 * ROOT) ** 2
    for y in (0.5 * ROOT, 1.5 * ROOT, 4.0 * ROOT):
        w = np.exp(-0.5 * (y - x) ** 2 / noise_var)
        est = float((w * x).sum() / w.sum())
        resid = w * (x - est)
        se = np.std(resid) / (w.mean() * np.sqrt(n))
        m, _ = conditional_mean_var(y, noise_var, prior_l5)
        assert abs(m - est) < 3 * se, (y, m, est, se)


def test_denoiser_rejects_bad_inputs(prior_l5):
    with pytest.raises(ValueError):
        conditional_mean_var(0.1, 0.0, prior_l5)
    with pytest.raises(ValueError):
        conditional_mean_var(np.nan, 0.1, prior_l5)
    with pytest.raises(ValueError):
        conditional_mean_var(np.inf, 0.1, prior_l5)


def test_far_out_observation_does_not_collapse(prior_l5):
    # beyond the truncated support with tiny noise: posterior sits at the
    # support edge instead of 0/0
    m, v = conditional_mean_var(5 * prior_l5.max_amplitude, 1e-10, prior_l5)
    assert np.isfinite(m) and np.isfinite(v)
    assert m == pytest.approx(prior_l5.max_amplitude, rel=1e-3)


def test_variance_is_nonnegative_across_scales(prior_l5):
    rng = np.random.default_rng(3)
    for noise_var in (1e-9, 1e-6, 1e-2, 10.0, 1e6):
        y = rng.standard_normal(200) * np.sqrt(noise_var)
        _, v = conditional_mean_var(y, noise_var, prior_l5)
        assert (v >= 0).all()


def test_coarse_grid_raises():
    with pytest.raises(RuntimeError):
        build_prior(
            THETA,
            4.0,
            5,
            PriorGridSpec(core_points=3, tail_log_step=1.5, quad_points=4),
        )


def test_prior_variance_reflects_truncated_second_moment(prior_l5):
    # E[V^2] for alpha = 4 is dominated by the amplitude truncation point:
    # E[A^2 cos^2] ~ sqrt(theta) * u_max / 2 per the inverse-square tail
    u_max = prior_l5.max_amplitude
    expect = 2.0**-5 * ROOT * (u_max - ROOT) / (1 - 1e-6) / 2
    assert prior_l5.variance == pytest.approx(expect, rel=5e-3)
