"""Model-to-monitor-program compiler: regions, HSM, scopes, flat network."""

from .flatten import Channel, DeFsm, FsmNetwork, FsmTransition, flatten_hsm
from .hsm import Atomic, Concurrent, DeHsm, Sequence, build_hsm, task_leaves
from .program import (
    MonitorProgram,
    TaskFlow,
    compile_model,
    emit_program,
    load_program,
    program_from_dict,
    save_program,
)
from .regions import Region, RegionTree, detect_regions
from .scopes import TransactionScope, identify_scopes

__all__ = [
    "Region", "RegionTree", "detect_regions",
    "Atomic", "Sequence", "Concurrent", "DeHsm", "build_hsm", "task_leaves",
    "TransactionScope", "identify_scopes",
    "FsmNetwork", "DeFsm", "FsmTransition", "Channel", "flatten_hsm",
    "MonitorProgram", "TaskFlow", "emit_program", "compile_model",
    "program_from_dict", "save_program", "load_program",
]
