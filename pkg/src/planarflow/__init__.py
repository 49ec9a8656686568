"""Maximum flow with vertex capacities in planar graphs, by way of
push-relabel on a small apex set."""

__version__ = "0.1.0"

from .netcore import (
    INF,
    ArcFunction,
    FlowError,
    FlowNetwork,
    InvariantError,
    add_super_terminals,
    check_feasible,
    flow_value,
    rotation_problems,
)
from .fileformat import InstanceFormatError, parse_instance, read_instance, format_instance
from .oracle import oracle_value, vertex_capacitated_max_flow
from .pushrelabel import batch_highest_distance, fifo_push_relabel
from .apexflow import ApexInstance, apex_max_flow, apex_max_flow_fifo
from .wang import SolveReport, max_flow_vertex_capacities

__all__ = [
    "INF",
    "ArcFunction",
    "FlowError",
    "FlowNetwork",
    "InvariantError",
    "InstanceFormatError",
    "ApexInstance",
    "SolveReport",
    "add_super_terminals",
    "apex_max_flow",
    "apex_max_flow_fifo",
    "batch_highest_distance",
    "check_feasible",
    "fifo_push_relabel",
    "flow_value",
    "format_instance",
    "max_flow_vertex_capacities",
    "oracle_value",
    "parse_instance",
    "read_instance",
    "rotation_problems",
    "vertex_capacitated_max_flow",
]
