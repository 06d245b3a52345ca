"""Exception hierarchy. ``exit_code`` is what the command line returns for it."""


class HyperMamlError(Exception):
    exit_code = 1


class ShapeError(HyperMamlError, ValueError):
    """Operand shapes do not conform to a primitive or a network."""


class NonFiniteError(HyperMamlError, ArithmeticError):
    """NaN or inf appeared in a forward value, a loss or a finite-difference evaluation."""


class GradientError(HyperMamlError):
    """backward() was asked for something the tape cannot differentiate."""


class NestingError(GradientError):
    """A second create_graph level was requested."""


class ConfigError(HyperMamlError):
    exit_code = 2


class DatasetError(HyperMamlError):
    pass


class CheckpointError(HyperMamlError):
    exit_code = 3


class TrainingAborted(NonFiniteError):

    def __init__(self, epoch: int, message: str):
        super().__init__(f"training aborted at epoch {epoch}: {message}")
        self.epoch = epoch
