"""Query-model and streaming edge connectivity, with the tooling to measure it."""
from .errors import FAIL, AmplificationExhausted, ClockExpired, ContractViolation, InvalidInput, StreamExhausted
from .graph_core import (
    SimpleGraph,
    VertexPartition,
    degree_to_connectivity_gadget,
    exact_min_cut,
    exhaustive_min_cut,
    load_graph,
    min_degree,
    save_graph,
    stoer_wagner,
)
from .cut_oracle import CutOracle, MdcpOracle, QueryLedger
from .sparse_recovery import recover_k_from_all, learn_bounded_matrix
from .contraction import one_out_sample, two_out_sample, uniform_star_contraction
from .forest_cert import boruvka_spanning_forest, certificate_min_cut
from .edge_connectivity import EcConfig, EcOutcome, ec_amplified, ec_linear, ec_loglog, ec_mdcp, ec_sequential
from .streaming import StreamConfig, StreamOutcome, arrival_stream, stream_ec_complete, stream_ec_random
from .moments import cond_inverse_moment, cond_ratio_moments
from .generators import GraphFamily

__version__ = "0.1.0"
