"""Omnithermal perfect sampling of M/M/c FCFS workload vectors by dominated CFTP."""
from .analytics import erlang_c_wq, ks_two_sample, summarize
from .dominating import DominatingPath, UnstableQueue
from .queue_core import InvalidInput, MarkSequence, evolve, kw_arrival, kw_drain
from .sampler import (
    QueueSpec,
    SampleRecord,
    SamplerAborted,
    algorithm1_sample,
    algorithm2_sample,
    omnithermal_sample,
)

__version__ = "0.1.0"

__all__ = [
    "DominatingPath", "InvalidInput", "MarkSequence", "QueueSpec", "SampleRecord",
    "SamplerAborted", "UnstableQueue", "algorithm1_sample", "algorithm2_sample",
    "erlang_c_wq", "evolve", "ks_two_sample", "kw_arrival", "kw_drain",
    "omnithermal_sample", "summarize",
]
