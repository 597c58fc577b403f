"""Engine error taxonomy.

Every operation contract names the error it raises; the classes here carry
those names so callers (and the HTTP layer) can map them 1:1.
"""


class EngineError(Exception):
    """Base class for all engine-raised errors."""


# -- trace / windowing -------------------------------------------------------

class MalformedTrace(EngineError):
    """Raised when a trace yields zero valid records but had parse errors."""


class InvalidWindow(EngineError):
    """Time window with from > to."""


# -- place inference ---------------------------------------------------------

class InvalidParams(EngineError):
    """Clustering parameters out of range (eps_m <= 0 or min_pts < 1)."""


class NoHome(EngineError):
    """Home/away timeline requested from a place model without a home."""


# -- conversation inference --------------------------------------------------

class MixedWindow(EngineError):
    """Audio frames from more than one duty-cycle window in one call."""


class UnsortedInput(EngineError):
    """Flag windows not sorted by window start."""


# -- context -----------------------------------------------------------------

class MissingCorrection(EngineError):
    """Confirm answer was No but no corrected company was supplied."""


# -- ema ---------------------------------------------------------------------

class InactiveParticipant(EngineError):
    pass


class CategoryMismatch(EngineError):
    """Selected message category does not fit the detected context."""


class WrongNode(EngineError):
    """Answer submitted for a node that is not the session's current node."""


class ValueOutOfDomain(EngineError):
    """Answer value outside the node's declared answer domain."""


class SessionExpired(EngineError):
    pass


class InvalidScript(EngineError):
    """Script graph violates the acyclic / single-entry / closed-branch rules."""


# -- message bank ------------------------------------------------------------

class EmptyText(EngineError):
    pass


class EmptyGenericPool(EngineError):
    """Configuration error: no generic messages seeded for a category."""


# -- engagement --------------------------------------------------------------

class BadParentLevel(EngineError):
    pass


class CompleteBeforePlan(EngineError):
    pass


class RatingOutOfDomain(EngineError):
    pass


class AlreadyCompleted(EngineError):
    pass


# -- sync service ------------------------------------------------------------

class UnknownParticipant(EngineError):
    pass
