"""Poisson network realizations and closed-form neighborhood statistics.

Nodes are dropped on a square either as a homogeneous Poisson point process
of intensity ``lam`` or as a fixed count conditioned on the area (uniform
placement).  Every unordered pair carries an exponential unit-mean fading
power gain, and two nodes are neighbors when the channel gain
``G * R**-alpha`` clears the threshold ``theta``.  The closed forms exposed
here (mean neighbor count, neighbor-amplitude law, non-neighbor interference
variance) all assume the infinite plane, so Monte Carlo validation should
restrict statistics to a centered sub-square via ``core_mask``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special


@dataclass(frozen=True)
class NetworkParams:
    """Parameters of the marked Poisson network.

    intensity    nodes per unit area (lambda)
    side         side length of the square region, meters
    alpha        path-loss exponent, must exceed 2 or interference diverges
    theta        channel-gain threshold defining neighborhood
    gamma        nominal transmit SNR, linear power ratio
    fixed_count  if set, condition on exactly this many uniformly placed
                 nodes instead of drawing a Poisson count
    """

    intensity: float
    side: float
    alpha: float
    theta: float
    gamma: float
    fixed_count: int | None = None

    def __post_init__(self):
        if self.alpha <= 2:
            raise ValueError(
                f"path-loss exponent must exceed 2, got {self.alpha}"
            )
        if self.theta <= 0:
            raise ValueError(f"gain threshold must be positive, got {self.theta}")
        if self.gamma <= 0:
            raise ValueError(f"nominal SNR must be positive, got {self.gamma}")
        if self.intensity < 0:
            raise ValueError(f"intensity must be nonnegative, got {self.intensity}")
        if self.side <= 0:
            raise ValueError(f"region side must be positive, got {self.side}")
        if self.fixed_count is not None and self.fixed_count < 0:
            raise ValueError("fixed node count must be nonnegative")


@dataclass(frozen=True)
class NetworkRealization:
    """One frame's network state: positions, fading, and channel coefficients.

    Immutable after construction; safe to share across worker processes.

    positions    (n, 2) node coordinates in meters
    gains        (n, n) symmetric exponential(1) fading power gains, diag 0
    distances    (n, n) pairwise distances, diag inf so self-links never pass
                 the neighbor test
    adjacency    (n, n) boolean, ``gains * distances**-alpha >= theta``
    phases       (n, n) symmetric uniform phases of the channel coefficients
    coefficients (n, n) complex channel coefficients; |U|^2 equals the
                 channel gain exactly; built on first access since pure
                 geometry consumers never need it
    """

    params: NetworkParams
    positions: np.ndarray
    gains: np.ndarray
    distances: np.ndarray
    adjacency: np.ndarray
    phases: np.ndarray
    _coefficients: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def num_nodes(self) -> int:
        return self.positions.shape[0]

    @property
    def coefficients(self) -> np.ndarray:
        if self._coefficients is None:
            amp = np.sqrt(self.gains) * self.distances ** (-self.params.alpha / 2.0)
            object.__setattr__(self, "_coefficients", amp * np.exp(1j * self.phases))
        return self._coefficients

    def neighbors_of(self, i: int) -> np.ndarray:
        """Indices of the neighbors of node ``i``."""
        return np.flatnonzero(self.adjacency[i])

    def neighbor_counts(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)


def generate_network(params: NetworkParams, seed: int) -> NetworkRealization:
    """Draw one seeded realization of the marked point process.

    Node count is Poisson(lambda * side^2) unless ``params.fixed_count`` is
    set, in which case exactly that many nodes are placed uniformly.  Fading
    power gains are i.i.d. exponential with mean 1 (the power form of a
    unit-mean Rayleigh amplitude), drawn once per unordered pair so link
    reciprocity holds by construction.
    """
    from scipy.spatial.distance import squareform, pdist

    rng = np.random.default_rng(seed)
    if params.fixed_count is not None:
        n = params.fixed_count
    else:
        n = int(rng.poisson(params.intensity * params.side**2))
    positions = rng.random((n, 2)) * params.side

    gains = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    gains[iu] = rng.exponential(1.0, size=len(iu[0]))
    gains += gains.T

    distances = squareform(pdist(positions)) if n > 1 else np.zeros((n, n))
    np.fill_diagonal(distances, np.inf)

    adjacency = gains * distances ** (-params.alpha) >= params.theta
    np.fill_diagonal(adjacency, False)

    phases = np.zeros((n, n))
    phases[iu] = rng.random(size=len(iu[0])) * 2 * np.pi
    phases += phases.T

    return NetworkRealization(
        params=params,
        positions=positions,
        gains=gains,
        distances=distances,
        adjacency=adjacency,
        phases=phases,
    )


def core_mask(net: NetworkRealization, margin: float) -> np.ndarray:
    """Boolean mask of nodes at least ``margin`` away from every region edge.

    Statistics restricted to this core match the infinite-plane formulas
    once the margin exceeds the largest plausible neighborhood radius.
    """
    lo, hi = margin, net.params.side - margin
    p = net.positions
    return (p[:, 0] >= lo) & (p[:, 0] <= hi) & (p[:, 1] >= lo) & (p[:, 1] <= hi)


def directed_neighbor_pairs(
    net: NetworkRealization, margin: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """All directed neighbor pairs (sender, receiver).

    With ``margin`` set, only pairs whose receiver lies in the centered
    core sub-square are kept (boundary correction for formula validation).
    """
    snd, rcv = np.nonzero(net.adjacency)
    if margin is not None:
        keep = core_mask(net, margin)[rcv]
        snd, rcv = snd[keep], rcv[keep]
    return snd, rcv


def mean_neighbor_count(params: NetworkParams) -> float:
    """Average number of neighbors of a typical node on the infinite plane.

    c = (2/alpha) * pi * lambda * theta**(-2/alpha) * Gamma(2/alpha)
    """
    a = params.alpha
    return (
        (2.0 / a)
        * np.pi
        * params.intensity
        * params.theta ** (-2.0 / a)
        * special.gamma(2.0 / a)
    )


def neighbor_gain_ccdf(u, params: NetworkParams):
    """P(|U| >= u) for the channel coefficient of a random neighbor.

    Equals theta**(2/alpha) / u**(4/alpha) above the support boundary
    sqrt(theta); below it the full mass lies above, so the value is 1.
    """
    u = np.asarray(u, dtype=float)
    a = params.alpha
    out = np.where(
        u < np.sqrt(params.theta),
        1.0,
        params.theta ** (2.0 / a) / np.maximum(u, np.sqrt(params.theta)) ** (4.0 / a),
    )
    return out if out.ndim else float(out)


def neighbor_gain_pdf(u, params: NetworkParams):
    """Density of a neighbor's coefficient amplitude.

    p(u) = (4/alpha) * theta**(2/alpha) * u**-(4/alpha + 1) for
    u >= sqrt(theta), zero otherwise.  Feeds the decoder prior.
    """
    u = np.asarray(u, dtype=float)
    a = params.alpha
    body = (4.0 / a) * params.theta ** (2.0 / a) / np.maximum(
        u, np.sqrt(params.theta)
    ) ** (4.0 / a + 1.0)
    out = np.where(u < np.sqrt(params.theta), 0.0, body)
    return out if out.ndim else float(out)


def sample_neighbor_amplitude(
    params: NetworkParams, rng: np.random.Generator, size=None
) -> np.ndarray:
    """Inverse-CDF samples of a random neighbor's coefficient amplitude."""
    w = rng.random(size)
    return np.sqrt(params.theta) * w ** (-params.alpha / 4.0)


def nonneighbor_interference_variance(params: NetworkParams, q: float) -> float:
    """Variance of the aggregate signal from transmitting non-neighbors.

    Each node is on with probability ``q`` per slot, so the transmitters
    form a thinned process of intensity lambda*q.  Unit thermal noise is
    included:

    sigma^2 = 4/(alpha*(alpha-2)) * pi * lambda * q * gamma
              * theta**(1 - 2/alpha) * Gamma(2/alpha) + 1
    """
    if not 0 <= q < 1:
        raise ValueError(f"on-probability must lie in [0, 1), got {q}")
    a = params.alpha
    return (
        4.0
        / (a * (a - 2.0))
        * np.pi
        * params.intensity
        * q
        * params.gamma
        * params.theta ** (1.0 - 2.0 / a)
        * special.gamma(2.0 / a)
        + 1.0
    )


def dump_realization(net: NetworkRealization, path) -> None:
    """Write a realization to a columnar debug text file.

    Format: a ``# nodes`` section of ``id x y`` lines, then a ``# pairs``
    section of ``i j gain`` lines covering every unordered pair i < j.
    """
    n = net.num_nodes
    with open(path, "w", encoding="utf-8") as f:
        f.write("# nodes: id x y\n")
        for i in range(n):
            f.write(f"{i} {net.positions[i, 0]:.9g} {net.positions[i, 1]:.9g}\n")
        f.write("# pairs: i j gain\n")
        for i in range(n):
            for j in range(i + 1, n):
                f.write(f"{i} {j} {net.gains[i, j]:.9g}\n")
