"""powsim: proof-of-work mining over wide-area topologies.

An event-driven simulator of mining and block flooding on arbitrary overlay
graphs, the matching closed-form reward expressions for clustered latency
graphs, and a round-based Monte Carlo that validates one against the other.
"""

from ._accel import backend_name
from .chain import Block, BlockTree, Outcome
from .engine import SimConfig, SimResult, run_simulation
from .netmodel import LatencyMatrix, MinerSpec, Topology, TopologyPolicy, build_topology, delta_matrix

__version__ = "0.1.0"

__all__ = [
    "Block",
    "BlockTree",
    "LatencyMatrix",
    "MinerSpec",
    "Outcome",
    "SimConfig",
    "SimResult",
    "Topology",
    "TopologyPolicy",
    "backend_name",
    "build_topology",
    "delta_matrix",
    "run_simulation",
    "__version__",
]
