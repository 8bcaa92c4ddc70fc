"""Exception hierarchy shared across the toolkit.

``DataError`` subclasses describe problems with user-supplied inputs
(malformed files, impossible splits, missing features); the CLI maps them
to exit code 2. Everything else signals a programming or configuration
mistake and propagates normally.
"""


class AcgraphError(Exception):
    """Base class for all toolkit errors."""


class DataError(AcgraphError):
    """An input file or dataset is unusable as given."""


class ParseError(DataError):
    """File does not conform to the documented schema."""


class ValidationError(DataError):
    """A graph or corpus violates a structural invariant."""


class InvalidGraph(DataError):
    """Operation requires a graph that passes validation."""

    def __init__(self, graph_id, violations):
        self.graph_id = graph_id
        self.violations = list(violations)
        detail = "; ".join(str(v) for v in self.violations)
        super().__init__(f"graph {graph_id!r} is invalid: {detail}")


class InvalidSpec(DataError):
    """Synthetic-generator spec cannot produce a legal graph."""


class FormatError(DataError):
    """Binary file has a bad magic, version, or is truncated."""


class NonFiniteValue(DataError):
    """An embedding vector contains NaN or infinity."""


class MissingEmbedding(DataError):
    """Strict attachment failed: no vector for this node key."""

    def __init__(self, key):
        self.key = key
        super().__init__(f"no embedding for key {key!r}")


class MissingFeature(DataError):
    """A node has no feature vector where one is required."""

    def __init__(self, node_id):
        self.node_id = node_id
        super().__init__(f"node {node_id!r} has no feature vector")


class InsufficientData(DataError):
    """A split or task needs more graphs of some class than exist."""


class EmptyClass(DataError):
    """A ranking metric got an empty positive or negative list."""


class SingleClassTrainingSet(DataError):
    """Classification training set contains only one provenance."""


class ShapeMismatch(AcgraphError):
    """Matrix dimensions are incompatible."""


class EmptyGraph(AcgraphError):
    """Operation is undefined on a graph with no nodes."""


class UntrainedModel(AcgraphError):
    """Explanation requested for a model that was never trained."""


class ModelUnavailable(DataError):
    """A pretrained text encoder could not be loaded."""
