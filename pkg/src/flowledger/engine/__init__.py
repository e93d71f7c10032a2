"""Monitor engine: deterministic discrete-event execution of programs."""

from .instance import (
    ABORTED,
    COMPLETED,
    DELIVERED,
    DONE,
    FAULTED,
    PENDING,
    RUNNING,
    DataEntry,
    Effects,
    TaskRequest,
    WorkflowInstance,
)
from .monitor import Monitor, OutputSubmission, abort_message, create_message, deploy_message
from .runtime import DeEvent, EventQueue, NetworkRuntime, event_subject

__all__ = [
    "Monitor", "OutputSubmission", "WorkflowInstance", "TaskRequest",
    "DataEntry", "Effects", "DeEvent", "EventQueue", "NetworkRuntime",
    "event_subject", "deploy_message", "create_message", "abort_message",
    "RUNNING", "COMPLETED", "ABORTED", "FAULTED",
    "PENDING", "DELIVERED", "DONE",
]
