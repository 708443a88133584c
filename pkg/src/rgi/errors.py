"""Exception types raised across the package."""


class RGIError(Exception):
    """Base class for all errors raised by this package."""


class InvalidEdge(RGIError, ValueError):
    def __init__(self, edge, num_nodes):
        self.edge = tuple(int(v) for v in edge)
        self.num_nodes = num_nodes
        super().__init__(f"edge {self.edge} out of range for {num_nodes} nodes")


class ShapeError(RGIError, ValueError):
    pass


class BatchTooSmall(RGIError, ValueError):
    pass


class InvalidProbability(RGIError, ValueError):
    pass


class TapeConsumed(RGIError, RuntimeError):
    pass


class InvalidEpoch(RGIError, ValueError):
    pass


class DivergenceError(RGIError, ArithmeticError):
    def __init__(self, epoch, value=None):
        self.epoch = epoch
        super().__init__(f"non-finite loss ({value}) at epoch {epoch}")


class SplitError(RGIError, ValueError):
    pass


class DegenerateLabels(RGIError, ValueError):
    pass


class EmptyEvaluation(RGIError, ValueError):
    pass


class ParseError(RGIError, ValueError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class CountMismatch(RGIError, ValueError):
    pass


class CheckpointError(RGIError, ValueError):
    pass


class ConfigError(RGIError, ValueError):
    pass
