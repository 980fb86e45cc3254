"""Exception hierarchy. Every user-facing failure derives from GraftError."""


class GraftError(Exception):
    """Base class for errors caused by bad input rather than a bug."""


class ParseError(GraftError):
    """Malformed file contents."""


class ValidationError(GraftError):
    """A structurally invalid graph, schema or parameter store."""


class ShapeError(ValidationError):
    """Operand shapes that do not fit an op's signature."""

    def __init__(self, node_id, message, shapes=()):
        self.node_id = node_id
        self.shapes = tuple(shapes)
        detail = ", ".join(str(list(s)) for s in self.shapes)
        text = f"node {node_id}: {message}"
        if detail:
            text += f" (shapes {detail})"
        super().__init__(text)


class NumericError(GraftError):
    """NaN or Inf encountered during evaluation."""


class ResourceError(GraftError):
    """A request that exceeds a configured resource guard."""


class AmbiguousMatchError(GraftError):
    """Two or more blocks compete for the same match during diffing."""


class CoverageError(GraftError):
    """A plan that does not tile the target parameters exactly."""


class HashMismatchError(GraftError):
    """A plan applied to a graph it was not made for."""
