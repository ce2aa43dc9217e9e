"""Signature codebooks, frame simulation, and the off-slot observation.

Every node owns 2**l ternary on-off signatures of length ``frame_len``;
entries are 0 with probability 1 - q and +-1 with probability q/2 each.
A node broadcasts the signature indexed by its message and listens only
during its own off-slots.  The receiver-side linear system is

    Y = sqrt(gamma_s) * S * X + W,

where S stacks all neighbors' signatures restricted to the receiver's
off-slots and scaled by 1/sqrt(frame_len * q * (1-q)) so columns have unit
expected squared norm, X holds one channel coefficient per neighbor
sub-block, W is unit-variance circular Gaussian, and
gamma_s = gamma * frame_len * q * (1-q) / sigma^2.  The raw received
samples are divided by the assumed noise standard deviation to reach this
normalized form.  Scaling uses the expected off-slot count, not the
realized one; the realized-count variant would make column norms exactly 1
per instance but is not what the observation model prescribes.

Codebooks are reproducible from (node id, run seed): row ``m`` of node
``i`` comes from the stream seeded by ((seed XOR i), m).  Any receiver can
therefore rebuild any neighbor's codebook from public identifiers, which
stands in for address-seeded signature generation in a deployed system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    NetworkParams,
    NetworkRealization,
    nonneighbor_interference_variance,
    sample_neighbor_amplitude,
)

MAX_CODEBOOK_ENTRIES = 1 << 28  # int8 entries; ~256 MB


class CapacityError(Exception):
    """Requested codebook would blow the configured memory budget."""


@dataclass(frozen=True)
class RoddParams:
    """On-off signaling parameters.

    message_bits  l, bits per broadcast message; codebook holds 2**l rows
    frame_len     M_s, slots per frame
    on_prob       q, probability that a signature entry is nonzero
    """

    message_bits: int
    frame_len: int
    on_prob: float

    def __post_init__(self):
        if self.message_bits < 1:
            raise ValueError("message_bits must be >= 1")
        if self.frame_len < 1:
            raise ValueError("frame_len must be >= 1")
        if not 0 <= self.on_prob < 1:
            raise ValueError(f"on_prob must lie in [0, 1), got {self.on_prob}")

    @property
    def codebook_size(self) -> int:
        return 1 << self.message_bits

    @property
    def mean_symbol_degree(self) -> float:
        """Expected number of off-slot observations of one symbol."""
        return self.frame_len * self.on_prob * (1.0 - self.on_prob)

    def effective_snr(self, gamma: float, sigma2: float) -> float:
        """gamma_s for the normalized observation; never cached."""
        return gamma * self.mean_symbol_degree / sigma2


@dataclass(frozen=True)
class Codebook:
    """All 2**l signatures of one node, rows indexed by message - 1."""

    node_id: int
    signatures: np.ndarray  # (2**l, frame_len) int8 in {-1, 0, +1}
    seed: int


def _signature_rows(
    node_id: int, rows, rodd: RoddParams, seed: int
) -> np.ndarray:
    """Signatures for the given message indices (1-based), one rng per row.

    Per-row streams let a frame simulation draw only the transmitted row of
    each node without materializing whole codebooks.
    """
    rows = np.atleast_1d(rows)
    out = np.empty((rows.size, rodd.frame_len), dtype=np.int8)
    q = rodd.on_prob
    for j, r in enumerate(rows):
        rng = np.random.default_rng(np.random.SeedSequence((seed ^ node_id, int(r))))
        u = rng.random(rodd.frame_len)
        out[j] = np.where(u < 1 - q, 0, np.where(u < 1 - q / 2, 1, -1)).astype(np.int8)
    return out


def generate_codebook(
    node_id: int,
    rodd: RoddParams,
    seed: int,
    max_entries: int = MAX_CODEBOOK_ENTRIES,
) -> Codebook:
    """Materialize a node's full codebook, reproducibly from (id, seed)."""
    entries = rodd.codebook_size * rodd.frame_len
    if entries > max_entries:
        raise CapacityError(
            f"codebook needs {entries} entries, budget is {max_entries}; "
            "lower message_bits or raise the budget"
        )
    rows = _signature_rows(
        node_id, np.arange(1, rodd.codebook_size + 1), rodd, seed
    )
    return Codebook(node_id=node_id, signatures=rows, seed=seed)


@dataclass(frozen=True)
class ObservationInstance:
    """One receiver's sparse-recovery instance for one frame.

    sensing      (M, N) normalized matrix, N = 2**l * K
    observation  (M,) complex, normalized so the effective noise has unit
                 complex variance
    hidden       (N,) complex ground-truth vector, one nonzero per
                 2**l-long sub-block equal to that neighbor's coefficient
    messages     (K,) true 1-based message indices
    noise_var    complex noise variance assumed by the normalization
    gamma_s      effective SNR of the normalized system
    """

    receiver: int
    neighbor_ids: np.ndarray
    sensing: np.ndarray
    observation: np.ndarray
    hidden: np.ndarray
    messages: np.ndarray
    noise_var: float
    gamma_s: float
    rodd: RoddParams

    @property
    def num_neighbors(self) -> int:
        return len(self.neighbor_ids)

    @property
    def num_measurements(self) -> int:
        return self.sensing.shape[0]

    @property
    def degenerate(self) -> bool:
        """True when the receiver had no off-slots to listen through."""
        return self.num_measurements == 0


@dataclass
class FrameContext:
    """Per-frame transmitted signals shared by every receiver.

    transmitted[i] is the signature row node i actually broadcast.  Full
    codebooks are materialized lazily, per neighbor, on first use.
    """

    rodd: RoddParams
    seed: int
    messages: np.ndarray
    transmitted: np.ndarray  # (n, frame_len) int8
    _codebooks: dict

    def codebook_rows(self, node_id: int) -> np.ndarray:
        cb = self._codebooks.get(node_id)
        if cb is None:
            cb = generate_codebook(node_id, self.rodd, self.seed).signatures
            self._codebooks[node_id] = cb
        return cb


def make_frame(num_nodes: int, rodd: RoddParams, messages, seed: int) -> FrameContext:
    """Draw every node's transmitted signature for one frame."""
    messages = np.asarray(messages, dtype=int)
    if messages.shape != (num_nodes,):
        raise ValueError("one message index per node required")
    if messages.min() < 1 or messages.max() > rodd.codebook_size:
        raise ValueError("message indices must lie in 1..2**l")
    transmitted = np.empty((num_nodes, rodd.frame_len), dtype=np.int8)
    for i in range(num_nodes):
        transmitted[i] = _signature_rows(i, messages[i], rodd, seed)[0]
    return FrameContext(
        rodd=rodd,
        seed=seed,
        messages=messages,
        transmitted=transmitted,
        _codebooks={},
    )


def draw_messages(num_nodes: int, rodd: RoddParams, seed: int) -> np.ndarray:
    """Uniform message index per node (the assumed traffic model)."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x6D5947)))
    return rng.integers(1, rodd.codebook_size + 1, size=num_nodes)


def _complex_noise(rng: np.random.Generator, n: int, var: float) -> np.ndarray:
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def _build_sensing(
    frame: FrameContext, neighbor_ids: np.ndarray, off: np.ndarray
) -> np.ndarray:
    rodd = frame.rodd
    norm = np.sqrt(rodd.frame_len * rodd.on_prob * (1.0 - rodd.on_prob))
    cols = [
        frame.codebook_rows(int(j))[:, off].T.astype(float) for j in neighbor_ids
    ]
    if not cols:
        return np.zeros((int(off.sum()), 0))
    return np.concatenate(cols, axis=1) / norm


def simulate_frame(
    net: NetworkRealization,
    rodd: RoddParams,
    messages,
    receiver: int,
    *,
    mode: str = "gaussian",
    seed: int = 0,
    frame: FrameContext | None = None,
    noise_var: float | None = None,
) -> ObservationInstance:
    """Assemble one receiver's off-slot observation for one frame.

    mode="gaussian" replaces non-neighbor interference by circular Gaussian
    noise of variance sigma^2 (closed form from the network parameters);
    mode="explicit" superposes the non-neighbors' actual transmissions on
    top of unit-variance thermal noise.  ``noise_var`` overrides the
    assumed variance: in gaussian mode it is both drawn and assumed (0
    yields an exactly noise-free instance); in explicit mode it only
    overrides the normalization constant.

    A receiver whose transmitted signature has no zero entries observes
    nothing; the returned instance is flagged degenerate and decoding of it
    fails gracefully.
    """
    if mode not in ("gaussian", "explicit"):
        raise ValueError(f"unknown interference mode {mode!r}")
    if frame is None:
        frame = make_frame(net.num_nodes, rodd, messages, seed)
    gamma = net.params.gamma
    sigma2_model = nonneighbor_interference_variance(net.params, rodd.on_prob)

    off = frame.transmitted[receiver] == 0
    m = int(off.sum())
    neighbor_ids = np.flatnonzero(net.adjacency[receiver])
    k = len(neighbor_ids)

    rng = np.random.default_rng(np.random.SeedSequence((seed, receiver, 0x0FF51)))
    coeffs = net.coefficients[receiver, neighbor_ids]

    if mode == "gaussian":
        drawn_var = sigma2_model if noise_var is None else float(noise_var)
        assumed_var = drawn_var if drawn_var > 0 else 1.0
        signal = coeffs @ frame.transmitted[neighbor_ids][:, off].astype(float)
        raw = np.sqrt(gamma) * signal + _complex_noise(rng, m, drawn_var)
    else:
        assumed_var = sigma2_model if noise_var is None else float(noise_var)
        others = np.arange(net.num_nodes) != receiver
        signal = net.coefficients[receiver, others] @ frame.transmitted[others][
            :, off
        ].astype(float)
        raw = np.sqrt(gamma) * signal + _complex_noise(rng, m, 1.0)

    observation = raw / np.sqrt(assumed_var)
    gamma_s = rodd.effective_snr(gamma, assumed_var)

    sensing = _build_sensing(frame, neighbor_ids, off)
    hidden = np.zeros(rodd.codebook_size * k, dtype=complex)
    w = frame.messages[neighbor_ids]
    hidden[np.arange(k) * rodd.codebook_size + (w - 1)] = coeffs

    return ObservationInstance(
        receiver=receiver,
        neighbor_ids=neighbor_ids,
        sensing=sensing,
        observation=observation,
        hidden=hidden,
        messages=w.copy(),
        noise_var=assumed_var,
        gamma_s=gamma_s,
        rodd=rodd,
    )


def synthesize_instance(
    num_neighbors: int,
    rodd: RoddParams,
    net_params: NetworkParams,
    seed: int,
    *,
    noise_var: float | None = None,
    messages=None,
) -> ObservationInstance:
    """Draw an observation directly from the model, without a network.

    Neighbor coefficients follow the neighborhood amplitude law with
    uniform phase; signatures, the receiver's off-slots and the noise are
    drawn i.i.d.  Useful for decoder-focused studies where network
    generation is irrelevant.
    """
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x5D17)))
    size = rodd.codebook_size
    frame_seed = int(rng.integers(2**31))
    if messages is None:
        messages = rng.integers(1, size + 1, size=num_neighbors + 1)
    else:
        messages = np.concatenate([[1], np.asarray(messages, dtype=int)])
        if messages.size != num_neighbors + 1:
            raise ValueError("need one message per neighbor")
    # node 0 acts as the receiver, nodes 1..K as its neighbors
    frame = make_frame(num_neighbors + 1, rodd, messages, frame_seed)

    amps = sample_neighbor_amplitude(net_params, rng, num_neighbors)
    phases = rng.random(num_neighbors) * 2 * np.pi
    coeffs = amps * np.exp(1j * phases)

    sigma2_model = nonneighbor_interference_variance(net_params, rodd.on_prob)
    drawn_var = sigma2_model if noise_var is None else float(noise_var)
    assumed_var = drawn_var if drawn_var > 0 else 1.0

    off = frame.transmitted[0] == 0
    m = int(off.sum())
    neighbor_ids = np.arange(1, num_neighbors + 1)
    signal = coeffs @ frame.transmitted[neighbor_ids][:, off].astype(float)
    raw = np.sqrt(net_params.gamma) * signal + _complex_noise(rng, m, drawn_var)

    sensing = _build_sensing(frame, neighbor_ids, off)
    hidden = np.zeros(size * num_neighbors, dtype=complex)
    w = frame.messages[neighbor_ids]
    hidden[np.arange(num_neighbors) * size + (w - 1)] = coeffs

    return ObservationInstance(
        receiver=0,
        neighbor_ids=neighbor_ids,
        sensing=sensing,
        observation=raw / np.sqrt(assumed_var),
        hidden=hidden,
        messages=w.copy(),
        noise_var=assumed_var,
        gamma_s=rodd.effective_snr(net_params.gamma, assumed_var),
        rodd=rodd,
    )


def system_load(rodd: RoddParams, mean_neighbors: float) -> float:
    """Candidate signatures per available measurement.

    beta = 2**l * c / (frame_len * (1 - q))
    """
    return (
        rodd.codebook_size
        * mean_neighbors
        / (rodd.frame_len * (1.0 - rodd.on_prob))
    )


def save_instance(inst: ObservationInstance, path) -> None:
    """Dump an instance to .npz for decoder-only debugging runs.

    Arrays: sensing, observation, hidden, messages, neighbor_ids; scalars
    in ``meta`` as [noise_var, gamma_s, receiver, message_bits, frame_len,
    on_prob].
    """
    np.savez(
        path,
        sensing=inst.sensing,
        observation=inst.observation,
        hidden=inst.hidden,
        messages=inst.messages,
        neighbor_ids=inst.neighbor_ids,
        meta=np.array(
            [
                inst.noise_var,
                inst.gamma_s,
                inst.receiver,
                inst.rodd.message_bits,
                inst.rodd.frame_len,
                inst.rodd.on_prob,
            ]
        ),
    )


def load_instance(path) -> ObservationInstance:
    with np.load(path) as d:
        meta = d["meta"]
        rodd = RoddParams(
            message_bits=int(meta[3]),
            frame_len=int(meta[4]),
            on_prob=float(meta[5]),
        )
        return ObservationInstance(
            receiver=int(meta[2]),
            neighbor_ids=d["neighbor_ids"],
            sensing=d["sensing"],
            observation=d["observation"],
            hidden=d["hidden"],
            messages=d["messages"],
            noise_var=float(meta[0]),
            gamma_s=float(meta[1]),
            rodd=rodd,
        )
