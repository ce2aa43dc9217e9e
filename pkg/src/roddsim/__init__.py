"""Mutual broadcast over half-duplex radios via on-off signatures.

Library layout:

- ``geometry``   Poisson network realizations and closed-form neighborhood
                 statistics
- ``phy``        signature codebooks, frame simulation, off-slot observation
- ``prior``      symbol prior tabulation and conditional-mean denoiser
- ``decoder``    belief-propagation support recovery and reference decoders
- ``baselines``  slotted-ALOHA / CSMA bounds and Monte Carlo simulators
- ``harness``    seeded experiment sweeps with CSV output
- ``cli``        command-line front end (``roddsim ...``)
"""

from .baselines import (
    InterferenceLaw,
    RaParams,
    SimResult,
    aloha_error_lower_bound,
    budget_for_target,
    csma_capture_probability,
    csma_error_lower_bound,
    csma_success_term,
    interference_inner_expectation,
    packet_bits,
    simulate_aloha,
    simulate_csma,
)
from .decoder import (
    DecodeOptions,
    DecodeResult,
    build_interp_tables,
    decode,
    exhaustive_ml_decode,
)
from .geometry import (
    NetworkParams,
    NetworkRealization,
    core_mask,
    directed_neighbor_pairs,
    generate_network,
    mean_neighbor_count,
    neighbor_gain_ccdf,
    neighbor_gain_pdf,
    nonneighbor_interference_variance,
    sample_neighbor_amplitude,
)
from .phy import (
    Codebook,
    ObservationInstance,
    RoddParams,
    generate_codebook,
    make_frame,
    simulate_frame,
    synthesize_instance,
    system_load,
)
from .prior import PriorGridSpec, PriorModel, atom_prior, build_prior, conditional_mean_var

__all__ = [
    "Codebook",
    "DecodeOptions",
    "DecodeResult",
    "InterferenceLaw",
    "NetworkParams",
    "NetworkRealization",
    "ObservationInstance",
    "PriorGridSpec",
    "PriorModel",
    "RaParams",
    "RoddParams",
    "SimResult",
    "aloha_error_lower_bound",
    "atom_prior",
    "budget_for_target",
    "build_interp_tables",
    "build_prior",
    "conditional_mean_var",
    "core_mask",
    "csma_capture_probability",
    "csma_error_lower_bound",
    "csma_success_term",
    "decode",
    "directed_neighbor_pairs",
    "exhaustive_ml_decode",
    "generate_codebook",
    "generate_network",
    "interference_inner_expectation",
    "make_frame",
    "mean_neighbor_count",
    "neighbor_gain_ccdf",
    "neighbor_gain_pdf",
    "nonneighbor_interference_variance",
    "packet_bits",
    "sample_neighbor_amplitude",
    "simulate_aloha",
    "simulate_csma",
    "simulate_frame",
    "synthesize_instance",
    "system_load",
]
