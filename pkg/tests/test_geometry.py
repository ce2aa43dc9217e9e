"""Network generation and closed-form neighborhood statistics."""

import numpy as np
import pytest
from scipy import integrate, stats

from roddsim import (
    NetworkParams,
    core_mask,
    directed_neighbor_pairs,
    generate_network,
    mean_neighbor_count,
    neighbor_gain_ccdf,
    neighbor_gain_pdf,
    nonneighbor_interference_variance,
    sample_neighbor_amplitude,
)
from roddsim.geometry import dump_realization

PAPER_NET = dict(intensity=0.004, side=500.0, alpha=4.0, theta=1e-6, gamma=1e6)


def make_params(**overrides):
    kw = dict(PAPER_NET)
    kw.update(overrides)
    return NetworkParams(**kw)


def test_rejects_alpha_at_most_two():
    with pytest.raises(ValueError):
        make_params(alpha=2.0)
    with pytest.raises(ValueError):
        make_params(alpha=1.5)


def test_rejects_bad_threshold_and_snr():
    with pytest.raises(ValueError):
        make_params(theta=0.0)
    with pytest.raises(ValueError):
        make_params(gamma=-1.0)


def test_fixed_count_places_exactly_that_many_nodes():
    net = generate_network(make_params(fixed_count=1000), seed=3)
    assert net.num_nodes == 1000
    assert net.positions.min() >= 0.0 and net.positions.max() <= 500.0


def test_same_seed_reproduces_realization():
    p = make_params(fixed_count=200)
    a = generate_network(p, seed=11)
    b = generate_network(p, seed=11)
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.gains, b.gains)
    assert np.array_equal(a.coefficients, b.coefficients)


def test_huge_threshold_leaves_every_node_isolated():
    net = generate_network(make_params(theta=1e12, fixed_count=300), seed=0)
    assert net.adjacency.sum() == 0


def test_adjacency_matches_gain_predicate_and_is_symmetric():
    p = make_params(fixed_count=300)
    net = generate_network(p, seed=5)
    predicate = net.gains * net.distances ** (-p.alpha) >= p.theta
    np.fill_diagonal(predicate, False)
    assert np.array_equal(net.adjacency, predicate)
    assert np.array_equal(net.adjacency, net.adjacency.T)


def test_coefficient_magnitude_matches_channel_gain():
    p = make_params(fixed_count=150)
    net = generate_network(p, seed=9)
    iu = np.triu_indices(150, k=1)
    gain = net.gains[iu] * net.distances[iu] ** (-p.alpha)
    assert np.allclose(np.abs(net.coefficients[iu]) ** 2, gain, rtol=1e-12)
    # link reciprocity extends to the coefficient itself
    assert np.allclose(net.coefficients, net.coefficients.T)


def test_mean_neighbor_count_paper_value():
    c = mean_neighbor_count(make_params())
    assert c == pytest.approx(11.1366, abs=5e-4)


def test_mean_neighbor_count_zero_intensity():
    assert mean_neighbor_count(make_params(intensity=0.0)) == 0.0


def test_mean_neighbor_count_monotonicity():
    base = mean_neighbor_count(make_params())
    assert mean_neighbor_count(make_params(theta=2e-6)) < base
    assert mean_neighbor_count(make_params(intensity=0.008)) > base


def test_mean_neighbor_count_monte_carlo():
    # core-node averages over seeded realizations against the closed form;
    # fixed-count conditioning keeps the effective intensity at lambda up
    # to a 1/n correction
    p = make_params(fixed_count=1000)
    counts = []
    for seed in range(200):
        net = generate_network(p, seed)
        core = core_mask(net, 100.0)
        counts.append(net.neighbor_counts()[core].mean())
    mc = float(np.mean(counts))
    assert mc == pytest.approx(mean_neighbor_count(p), rel=0.02)


def test_ccdf_is_one_at_and_below_support_boundary():
    p = make_params()
    assert neighbor_gain_ccdf(np.sqrt(p.theta), p) == pytest.approx(1.0)
    assert neighbor_gain_ccdf(1e-5, p) == 1.0


def test_pdf_point_value():
    # alpha=4, theta=1e-6 at u=1e-3: sqrt(theta)/u^2
    p = make_params()
    assert neighbor_gain_pdf(1e-3, p) == pytest.approx(1000.0, rel=1e-12)


def test_pdf_normalizes_to_one():
    p = make_params(alpha=3.0)
    total, err = integrate.quad(lambda u: neighbor_gain_pdf(u, p), np.sqrt(p.theta), np.inf)
    assert abs(total - 1.0) < 1e-9


def test_amplitude_sampler_matches_ccdf():
    p = make_params()
    rng = np.random.default_rng(4)
    samples = sample_neighbor_amplitude(p, rng, 200_000)
    for u in (1.5e-3, 5e-3, 2e-2):
        expect = neighbor_gain_ccdf(u, p)
        se = np.sqrt(expect * (1 - expect) / len(samples))
        assert abs((samples >= u).mean() - expect) < 4 * se


def test_empirical_neighbor_amplitude_ccdf_ks():
    # pooled core-receiver pair amplitudes across seeded realizations
    p = make_params(side=400.0, fixed_count=None)
    amps = []
    seed = 0
    while len(amps) < 20_000:
        net = generate_network(p, seed)
        snd, rcv = directed_neighbor_pairs(net, margin=100.0)
        amps.extend(np.abs(net.coefficients[rcv, snd]))
        seed += 1
    amps = np.asarray(amps[:20_000])

    def cdf(u):
        return 1.0 - neighbor_gain_ccdf(u, p)

    result = stats.kstest(amps, cdf)
    assert result.pvalue > 0.01


def test_fading_gains_have_unit_mean():
    net = generate_network(make_params(fixed_count=500), seed=21)
    iu = np.triu_indices(500, k=1)
    g = net.gains[iu]
    assert g.size > 1e5
    assert abs(g.mean() - 1.0) < 3.0 / np.sqrt(g.size)


def test_interference_variance_paper_value():
    sigma2 = nonneighbor_interference_variance(make_params(), q=1 / 12.1)
    assert sigma2 == pytest.approx(1.9204, abs=2e-4)


def test_interference_variance_thermal_only_at_q_zero():
    assert nonneighbor_interference_variance(make_params(), q=0.0) == 1.0


def test_interference_variance_rejects_bad_q():
    with pytest.raises(ValueError):
        nonneighbor_interference_variance(make_params(), q=1.0)


def test_interference_variance_monte_carlo():
    # mean received power from transmitting non-neighbors at core nodes
    p = make_params(side=800.0, fixed_count=None)
    q = 1 / 12.1
    target = nonneighbor_interference_variance(p, q) - 1.0
    totals = []
    for seed in range(5):
        net = generate_network(p, seed)
        chan = net.gains * net.distances ** (-p.alpha)
        non_neighbor = (~net.adjacency) & (chan > 0)
        contrib = np.where(non_neighbor, chan, 0.0) * q * p.gamma
        core = core_mask(net, 300.0)
        totals.extend(contrib.sum(axis=1)[core])
    assert np.mean(totals) == pytest.approx(target, rel=0.05)


def test_dump_realization_round_trips_basic_fields(tmp_path):
    net = generate_network(make_params(fixed_count=12), seed=2)
    path = tmp_path / "net.txt"
    dump_realization(net, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# nodes: id x y"
    node_lines = lines[1:13]
    first = node_lines[0].split()
    assert int(first[0]) == 0
    assert float(first[1]) == pytest.approx(net.positions[0, 0])
    pair_header = lines.index("# pairs: i j gain")
    pair_lines = lines[pair_header + 1 :]
    assert len(pair_lines) == 12 * 11 // 2
    i, j, g = pair_lines[0].split()
    assert float(g) == pytest.approx(net.gains[int(i), int(j)])
