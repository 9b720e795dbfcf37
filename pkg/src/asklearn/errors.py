"""Exception taxonomy shared across the asklearn package."""


class AskLearnError(Exception):
    """Base class for every error raised by this package."""


# data ingestion / pool bookkeeping

class BadMagic(AskLearnError):
    """IDX file header carries an unexpected magic number."""


class TruncatedFile(AskLearnError):
    """IDX file is shorter than its header promises."""


class CountMismatch(AskLearnError):
    """Image and label files disagree on the item count."""


class SeedTooLarge(AskLearnError):
    """Requested seed set exceeds the training set size."""


class NotInPool(AskLearnError):
    """A queried id is not in the unlabeled pool."""


class BudgetExhausted(AskLearnError):
    """A commit would overdraw the labeling budget."""


# model

class BadDims(AskLearnError):
    """Layer dimension list cannot describe a network."""


class ShapeMismatch(AskLearnError):
    """Array arguments have inconsistent shapes."""


class NoStochasticity(AskLearnError):
    """Stochastic inference requested on a model without dropout."""


class EmptyTrainSet(AskLearnError):
    """Training requested on zero samples."""


class DivergedLoss(AskLearnError):
    """Training produced a non-finite loss or parameter."""


# calibration

class NotADistribution(AskLearnError):
    """Vector is not a probability distribution."""


class TooFewPasses(AskLearnError):
    """Variance weight needs at least two stochastic passes."""


# embedding

class LabelOutOfRange(AskLearnError):
    """A (pseudo-)label falls outside {0..K-1}."""


# sampler

class BatchTooLarge(AskLearnError):
    """Query batch larger than the candidate pool."""


# oracle

class UnknownId(AskLearnError):
    """Oracle asked to label an id it has no ground truth for."""


class SessionClosed(AskLearnError):
    """Human-oracle session was closed while labels were pending."""


class AnnotationTimeout(AskLearnError):
    """Human oracle did not deliver all labels within the timeout."""


# engine

class ConfigInvalid(AskLearnError):
    """Experiment configuration violates a load-time rule."""
