"""Slotted-ALOHA and CSMA error lower bounds plus Monte Carlo simulators.

Both protocols retransmit an L-bit packet (message bits plus enough bits
to tell the ~c local senders apart) until the receiver captures it with
SINR above ``delta``; a budget of M symbols buys M*log2(1+delta)/L frame
attempts.  Convexity turns the per-pair miss probability into the closed
lower bounds:

  ALOHA: (max{0, 1 - p(1-p) * (theta/delta)^b * sin(b*pi/2) * Gamma(1-b)
          * J / pi})^n,  b = 2/alpha,
  with J the real-valued characteristic-function integral
  int |w|^(b-1) exp{-lam*p * (b*pi^2/sin(b*pi)) * (i*w)^b - i*w/gamma} dw
  evaluated under the principal branch, and

  CSMA:  (max{0, 1 - (theta*gamma/delta)^(2/alpha) * (e^-c + c - 1)
          / c^2})^n,

where c is the mean neighbor count.  The oscillatory integral is computed
after the substitution t = w^b (which removes the |w|^(b-1) endpoint
singularity) on phase-aligned panels of fixed-order Gauss-Legendre, with
the tail cut where the exponential envelope drops below 1e-13.  The two
half-lines use deliberately different panel layouts so the imaginary
residue of their sum is a live measure of quadrature error; it must vanish
to 1e-6 relative or the evaluation raises.

The simulators play the protocols on one network realization with explicit
interference and count directed neighbor pairs never served within the
budget.  Pair fading is held fixed across the retransmission frames (the
realization is one coherence epoch); per-frame randomness is who transmits.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import special

from .geometry import (
    NetworkParams,
    NetworkRealization,
    directed_neighbor_pairs,
    mean_neighbor_count,
)


class QuadratureError(Exception):
    """The characteristic-function integral failed to converge."""


class NumericalConsistencyError(Exception):
    """The nominally real integral came back with an imaginary residue."""


def packet_bits(message_bits: int, mean_neighbors: float) -> int:
    """L: message bits plus ceil(log2 c) bits to name one of ~c senders."""
    if mean_neighbors <= 1:
        return message_bits + 1
    return message_bits + int(np.ceil(np.log2(mean_neighbors)))


@dataclass(frozen=True)
class RaParams:
    """Random-access configuration for one bound/simulation evaluation.

    net             network parameters (alpha, theta, gamma, intensity)
    packet_bits     L, total bits per packet
    sinr_threshold  delta; multi-packet reception possible only below 1
    tx_prob         p, ALOHA per-frame transmit probability
    budget          symbol budget (M_a or M_c)
    """

    net: NetworkParams
    packet_bits: int
    sinr_threshold: float
    tx_prob: float
    budget: int

    def __post_init__(self):
        if self.packet_bits < 1:
            raise ValueError("packet_bits must be >= 1")
        if self.sinr_threshold <= 0:
            raise ValueError("SINR threshold must be positive")
        if not 0 < self.tx_prob < 1:
            raise ValueError("transmit probability must lie in (0, 1)")
        if self.budget < 0:
            raise ValueError("symbol budget must be nonnegative")

    @property
    def b(self) -> float:
        return 2.0 / self.net.alpha

    @property
    def coded_frames(self) -> float:
        """Real-valued frame exponent M * log2(1 + delta) / L."""
        return (
            self.budget * np.log2(1.0 + self.sinr_threshold) / self.packet_bits
        )

    @property
    def whole_frames(self) -> int:
        """Frame count available to the simulators within the budget."""
        return int(np.floor(self.coded_frames))

    def with_budget(self, budget: int) -> "RaParams":
        return replace(self, budget=budget)


@dataclass(frozen=True)
class InterferenceLaw:
    """Transforms of the aggregate interference from a thinned process."""

    intensity: float  # transmitter density lam * p
    alpha: float

    @property
    def _const(self) -> float:
        b = 2.0 / self.alpha
        return self.intensity * b * np.pi**2 / np.sin(b * np.pi)

    def laplace(self, s):
        """E[exp(-s I)] for s >= 0."""
        return np.exp(-self._const * np.asarray(s, dtype=float) ** (2.0 / self.alpha))

    def fourier(self, omega):
        """Characteristic function, principal branch of (i*omega)^b."""
        b = 2.0 / self.alpha
        omega = np.asarray(omega, dtype=complex)
        return np.exp(-self._const * (1j * omega) ** b)


def _cf_half_line(
    law: InterferenceLaw, gamma: float, sign: int, phase_step: float
) -> complex:
    """One half-line of the characteristic-function integral.

    After t = |w|^b the integrand is exp(-A t) * exp(-i*sign*(B t +
    t^(1/b)/gamma)) / b with A, B >= 0, integrated over panels spanning at
    most ~pi of accumulated phase each.
    """
    b = 2.0 / law.alpha
    a_env = law._const * np.cos(b * np.pi / 2.0)
    b_osc = law._const * np.sin(b * np.pi / 2.0)
    inv_b = 1.0 / b
    t_max = 30.0 / a_env

    def phase_rate(t):
        return b_osc + inv_b * t ** (inv_b - 1.0) / gamma

    bounds = [0.0]
    t = 0.0
    while t < t_max:
        t = t + phase_step / phase_rate(t)
        bounds.append(min(t, t_max))
        if len(bounds) > 2_000_000:
            raise QuadratureError("panel budget exhausted; parameters too extreme")
    bounds = np.asarray(bounds)

    nodes, weights = np.polynomial.legendre.leggauss(20)
    half = np.diff(bounds) / 2.0
    mid = (bounds[:-1] + bounds[1:]) / 2.0
    tt = mid[:, None] + half[:, None] * nodes[None, :]
    vals = np.exp(-a_env * tt - 1j * sign * (b_osc * tt + tt**inv_b / gamma))
    return complex((vals * weights[None, :]).sum(axis=1) @ half / b)


def cf_interference_integral(law: InterferenceLaw, gamma: float) -> float:
    """int_{-inf}^{inf} |w|^(b-1) exp{-lam p K (i w)^b - i w / gamma} dw.

    Mathematically real; raises NumericalConsistencyError if the computed
    imaginary residue exceeds 1e-6 of the real part.
    """
    pos = _cf_half_line(law, gamma, sign=+1, phase_step=np.pi)
    neg = _cf_half_line(law, gamma, sign=-1, phase_step=0.9 * np.pi)
    total = pos + neg
    if abs(total.imag) > 1e-6 * abs(total.real):
        raise NumericalConsistencyError(
            f"imaginary residue {total.imag:.3e} vs real part {total.real:.3e}"
        )
    return float(total.real)


def interference_inner_expectation(
    net: NetworkParams, tx_prob: float, gamma: float | None = None
) -> float:
    """E[(I + 1/gamma)^(-2/alpha)] over the thinned interference field."""
    g = net.gamma if gamma is None else gamma
    b = 2.0 / net.alpha
    law = InterferenceLaw(intensity=net.intensity * tx_prob, alpha=net.alpha)
    integral = cf_interference_integral(law, g)
    return np.sin(b * np.pi / 2.0) * special.gamma(1.0 - b) / np.pi * integral


def aloha_success_expectation(ra: RaParams) -> float:
    """Mean single-frame success probability entering the ALOHA bound."""
    b = ra.b
    return (ra.net.theta / ra.sinr_threshold) ** b * interference_inner_expectation(
        ra.net, ra.tx_prob
    )


def aloha_error_lower_bound(ra: RaParams) -> float:
    """Proposition-style lower bound on the ALOHA per-pair miss probability."""
    if ra.budget == 0:
        return 1.0
    base = max(0.0, 1.0 - ra.tx_prob * (1.0 - ra.tx_prob) * aloha_success_expectation(ra))
    return base**ra.coded_frames


def csma_capture_probability(mean_neighbors: float) -> float:
    """Chance a node's timer beats its whole neighborhood: (1 - e^-c)/c."""
    if mean_neighbors < 0:
        raise ValueError("mean neighbor count must be nonnegative")
    if mean_neighbors == 0:
        return 1.0
    return float(-np.expm1(-mean_neighbors) / mean_neighbors)


def csma_success_term(ra: RaParams) -> float:
    """Per-frame success term of the CSMA bound."""
    c = mean_neighbor_count(ra.net)
    if c <= 0:
        raise ValueError("CSMA analysis needs a positive mean neighbor count")
    return (
        (ra.net.theta * ra.net.gamma / ra.sinr_threshold) ** ra.b
        * (np.exp(-c) + c - 1.0)
        / c**2
    )


def csma_error_lower_bound(ra: RaParams) -> float:
    """Lower bound on the CSMA per-pair miss probability."""
    if ra.budget == 0:
        return 1.0
    base = max(0.0, 1.0 - csma_success_term(ra))
    return base**ra.coded_frames


def budget_for_target(ra: RaParams, scheme: str, target: float = 0.01) -> float:
    """Smallest real-valued symbol budget with bound <= target."""
    if not 0 < target < 1:
        raise ValueError("target must lie in (0, 1)")
    if scheme == "aloha":
        base = max(
            0.0, 1.0 - ra.tx_prob * (1.0 - ra.tx_prob) * aloha_success_expectation(ra)
        )
    elif scheme == "csma":
        base = max(0.0, 1.0 - csma_success_term(ra))
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    if base <= 0.0:
        return 0.0
    if base >= 1.0:
        return np.inf
    frames_needed = np.log(target) / np.log(base)
    return frames_needed * ra.packet_bits / np.log2(1.0 + ra.sinr_threshold)


@dataclass(frozen=True)
class SimResult:
    """Outcome of one protocol simulation on one realization."""

    miss_prob: float
    num_pairs: int
    misses: int
    frames: int


def _run_frames(
    net: NetworkRealization,
    ra: RaParams,
    seed: int,
    margin: float | None,
    frames: int | None,
    draw_active,
) -> SimResult:
    rng = np.random.default_rng(seed)
    n_frames = ra.whole_frames if frames is None else frames
    snd, rcv = directed_neighbor_pairs(net, margin)
    n_pairs = len(snd)
    if n_pairs == 0:
        return SimResult(miss_prob=0.0, num_pairs=0, misses=0, frames=n_frames)

    power = net.params.gamma * net.gains * net.distances ** (-net.params.alpha)
    pair_power = power[rcv, snd]
    delta = ra.sinr_threshold
    served = np.zeros(n_pairs, dtype=bool)
    for _ in range(n_frames):
        active = draw_active(rng)
        received = power @ active
        interference = received[rcv] - pair_power * active[snd]
        ok = (
            (active[snd] > 0)
            & (active[rcv] == 0)
            & (pair_power >= delta * (1.0 + interference))
        )
        served |= ok
        if served.all():
            break
    misses = int(n_pairs - served.sum())
    return SimResult(
        miss_prob=misses / n_pairs, num_pairs=n_pairs, misses=misses, frames=n_frames
    )


def simulate_aloha(
    net: NetworkRealization,
    ra: RaParams,
    seed: int,
    *,
    frames: int | None = None,
    margin: float | None = None,
) -> SimResult:
    """Play slotted ALOHA: every node transmits i.i.d. with probability p.

    A directed pair is served in a frame when the sender transmits, the
    receiver stays silent, and the SINR against all concurrent transmitters
    clears the threshold (per sender, so multi-packet reception simply
    falls out when delta < 1).  Returns the fraction of pairs never served.
    """
    p = ra.tx_prob
    n = net.num_nodes

    def draw(rng):
        return (rng.random(n) < p).astype(float)

    return _run_frames(net, ra, seed, margin, frames, draw)


def simulate_csma(
    net: NetworkRealization,
    ra: RaParams,
    seed: int,
    *,
    frames: int | None = None,
    margin: float | None = None,
) -> SimResult:
    """Play CSMA under the hard-core contention model.

    Per frame every node draws a uniform timer and transmits iff its timer
    is the strict minimum over its neighborhood; a node with no neighbors
    always transmits.  Success accounting matches the ALOHA simulator.
    """
    n = net.num_nodes
    adj = net.adjacency

    def draw(rng):
        timers = rng.random(n)
        neighbor_min = np.where(adj, timers[None, :], np.inf).min(axis=1)
        return (timers < neighbor_min).astype(float)

    return _run_frames(net, ra, seed, margin, frames, draw)
