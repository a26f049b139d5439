"""Information Causality bounds on nonsignaling correlations via noisy channels."""

from ic_lab.boxes import BellFunctional, BipartiteBox, box_3322, chsh_functional, i3322_functional, pr_box
from ic_lab.bounds import (
    BoundResult,
    ConcatenationQuery,
    concatenation_bound,
    limit_bound,
    optimize_channel_bias,
    protocol_bound,
    solve_symmetric_bound,
)
from ic_lab.channels import DiscreteChannel, closed_form_capacity, iterative_capacity, symmetric_channel
from ic_lab.info_math import binary_entropy, fano_information, mutual_information
from ic_lab.protocols import Protocol, ic_check, protocol_3322, simulate, van_dam_protocol

__version__ = "0.1.0"

__all__ = [
    "BellFunctional",
    "BipartiteBox",
    "BoundResult",
    "ConcatenationQuery",
    "DiscreteChannel",
    "Protocol",
    "binary_entropy",
    "box_3322",
    "chsh_functional",
    "closed_form_capacity",
    "concatenation_bound",
    "fano_information",
    "i3322_functional",
    "ic_check",
    "iterative_capacity",
    "limit_bound",
    "mutual_information",
    "optimize_channel_bias",
    "pr_box",
    "protocol_3322",
    "protocol_bound",
    "simulate",
    "solve_symmetric_bound",
    "symmetric_channel",
    "van_dam_protocol",
]
