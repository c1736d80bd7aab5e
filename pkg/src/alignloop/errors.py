"""Exception hierarchy shared across the package.

Every module raises subclasses of AlignLoopError so callers (CLI, HTTP
layer) can map failures to exit codes / status codes uniformly.
"""

from __future__ import annotations


class AlignLoopError(Exception):
    """Base class for all package errors."""


# --- triple document validation -------------------------------------------

class MalformedDocument(AlignLoopError):
    """Input does not parse as the canonical document form."""


class DanglingReference(MalformedDocument):
    """A mapping entry or edge points at an id that does not exist."""


class CycleInIntentTree(MalformedDocument):
    """The intent node child relation is not a rooted tree."""


class DuplicateId(MalformedDocument):
    """Two nodes within one collection share an id."""


# --- intent tracking --------------------------------------------------------

class UnknownIntentId(AlignLoopError):
    """An update references an intent id absent from the tree."""


class CycleWouldForm(AlignLoopError):
    """Applying the update would break the tree property."""


class ConflictingUpdates(AlignLoopError):
    """Two updates in one batch remove or merge the same node."""


class UnparseableProposal(AlignLoopError):
    """LLM-proposed update list stayed invalid after the repair retry."""


# --- simplification ---------------------------------------------------------

class InvalidFocus(AlignLoopError):
    """Focus set contains an id that is not in the intent tree."""


class NotASupernode(AlignLoopError):
    """expand was called on an ordinary (non-collapsed) node."""


# --- gateway ----------------------------------------------------------------

class GatewayError(AlignLoopError):
    """Base class for model-backend failures."""


class GatewayTimeout(GatewayError):
    pass


class AuthFailure(GatewayError):
    pass


class RateLimited(GatewayError):
    """Backend kept failing transiently after all retries."""


class MalformedResponse(GatewayError):
    """Backend reply missing choices/content, or truncated output."""


# --- extraction -------------------------------------------------------------

class InvalidTripleOutput(AlignLoopError):
    """Model output failed triple validation even after the repair retry."""


# --- playground -------------------------------------------------------------

class DegenerateTree(AlignLoopError):
    """Constructed intent tree has fewer than two leaves after retry."""


class InvalidVerdict(AlignLoopError):
    """Execution report verdict references an unknown intent id."""


# --- metrics ----------------------------------------------------------------

class EmptyText(AlignLoopError):
    """Similarity metric received a text with no tokens."""


class EmptyCorpus(AlignLoopError):
    """Corpus scoring needs at least one pair."""


class ZeroRate(AlignLoopError):
    """Speedup baseline has rate zero."""


# --- session server ---------------------------------------------------------

class UnknownSession(AlignLoopError):
    pass


class InvalidState(AlignLoopError):
    """Operation called outside its declared source states."""


class InvalidEdit(AlignLoopError):
    """A node edit references a dangling id or duplicates an edge."""


class ExtractionFailed(AlignLoopError):
    """Extraction could not produce a valid triple; session unchanged."""
