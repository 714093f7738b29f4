"""Random streams, model parameters and path simulation."""

from .io import dump_pathset, load_params, load_pathset
from .params import ModelParams, ParamLayout
from .rng import RngStream, derive_seed, make_stream, stream_id
from .simulate import BLOCK_SIZE, PathSet, SimGrid, initial_state, sample_defaults, simulate_paths

__all__ = [
    "BLOCK_SIZE", "ModelParams", "ParamLayout", "PathSet", "RngStream", "SimGrid",
    "derive_seed", "dump_pathset", "initial_state", "load_params", "load_pathset",
    "make_stream", "sample_defaults", "simulate_paths", "stream_id",
]
