"""Blockchain-incentivized cooperative interference management on Wyner linear networks."""

from coopchain.core_model import (
    ChannelRealization,
    DofResult,
    MessageAssignment,
    NetworkTopology,
    backhaul_load,
    build_topology,
    draw_channel,
)
from coopchain.protocol import CM, NodeInbox, NodeOutcome, ProtocolResult, run_protocol, step_node
from coopchain.ledger import Ledger, LedgerBlock, Transaction, validate_chain
from coopchain.dof_engine import (
    BeamDesign,
    TransmissionScheme,
    check_generic,
    construct_beams,
    pu_dof,
    verify_receiver,
)
from coopchain.oracle import SearchSpace, enumerate_feasible, eta_one_shot, fig1_scheme
from coopchain.fairness import RotationPlan, RotationResult, rotation_schedule, run_rotation

__version__ = "0.1.0"
