"""Exception types raised across the toolkit."""


class ForestwatchError(Exception):
    """Base class for all toolkit errors."""


# --- trace ingestion ---

class MalformedLine(ForestwatchError):
    """A trace line does not match the expected field layout."""


class UnknownSyscallId(ForestwatchError):
    """Syscall ID outside [0, 322] or name missing from the bundled table."""


class EmptyTrace(ForestwatchError):
    """No records survived parsing/filtering."""


class NoWindows(ForestwatchError):
    """Trace too short to cut a single usable window."""


# --- graphs and embeddings ---

class SequenceTooShort(ForestwatchError):
    """Fewer than two syscalls; no bigram edge can be formed."""


class EmptyWalk(ForestwatchError):
    """Cannot anonymize a zero-length walk."""


class LengthOutOfRange(ForestwatchError):
    """Walk length outside the supported 1..8 range."""


class NoStartNodes(ForestwatchError):
    """Every node is a sink; no walk can start."""


class NoCompleteWalks(ForestwatchError):
    """Every walk from every start hits a sink before finishing, so the
    embedding has zero mass and cannot be normalized."""


# --- models ---

class DegenerateDataset(ForestwatchError):
    """Training data unusable (single class, too few points, no features)."""


class DimensionMismatch(ForestwatchError):
    """Input vector dimension differs from the model's."""


class InsufficientData(ForestwatchError):
    """Not enough classes or samples to train the pipeline."""


class UnknownExpectedClass(ForestwatchError):
    """Expected-class label not among the model's classes."""


class EmptyValidation(ForestwatchError):
    """Threshold calibration received no validation samples."""


class ModelFormatError(ForestwatchError):
    """Persisted model file is unreadable or has a wrong schema version."""


# --- baselines ---

class EmptySequence(ForestwatchError):
    """Feature extraction received an empty window."""


class TooFewPoints(ForestwatchError):
    """Neighbor count k must be smaller than the training set."""


# --- evaluation ---

class EmptyInput(ForestwatchError):
    """Metric computation received no verdicts."""


class SingleClassInput(ForestwatchError):
    """ROC needs both positive and negative samples."""


# --- synthetic generation ---

class InvalidSpec(ForestwatchError):
    """Workload spec violates its invariants (row sums, rate, shapes)."""
