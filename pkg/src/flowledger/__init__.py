"""flowledger: BPMN collaborations compiled to state-machine monitor
programs, executed deterministically on a simulated ledger with
content-addressed, signed document exchange."""

__version__ = "0.1.0"
