"""Error taxonomy shared across the toolkit.

The CLI maps these onto exit codes: DataError (and subclasses) exit 3,
I/O problems exit 2, anything else exits 4.
"""


class LooscopeError(Exception):
    """Base class for all toolkit errors."""


class DataError(LooscopeError):
    """Input data violates a validation rule (bad rows, duplicates, shape)."""


class EmptyPlotError(DataError):
    """A timestep has no present samples."""


class NoEdgesError(LooscopeError):
    """A spanning tree has no edges, so no fence can be derived."""


class DisconnectedGraphError(LooscopeError):
    """A candidate edge set does not connect all nodes."""
