"""Error types shared across the toolchain."""


class FieldCalcError(Exception):
    """Base class for all toolchain errors."""


# --- language front end -----------------------------------------------------

class SourceError(FieldCalcError):
    """Error attached to a source position."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{line}:{col}: {message}"
        super().__init__(message)


class FcSyntaxError(SourceError):
    pass


class UnknownConstruct(SourceError):
    """A reserved word used where it cannot appear."""


class MissingMain(FieldCalcError):
    """Program has function declarations but no main expression."""


class ExpansionError(FieldCalcError):
    pass


class IllegalFunctionalArgument(ExpansionError):
    """An extended function name passed where a plain function is required."""


class KindError(FieldCalcError):
    pass


# --- evaluation -------------------------------------------------------------

class EvalError(FieldCalcError):
    pass


class StuckError(EvalError):
    """Evaluation reached a state the semantics gives no rule for."""


class ArityError(EvalError):
    pass


class MissingBuiltin(EvalError):
    pass


class EmptyFieldError(EvalError):
    pass


class DomainMismatch(EvalError):
    pass


# --- network / simulation ---------------------------------------------------

class IllFormedEnvironment(FieldCalcError):
    pass


class NeverFired(FieldCalcError):
    def __init__(self, devices):
        self.devices = tuple(devices)
        super().__init__(f"devices never fired: {self.devices}")


class DeviceError(FieldCalcError):
    """Evaluator error during a simulation, tagged with device and time."""

    def __init__(self, device, time, cause):
        self.device = device
        self.time = time
        self.cause = cause
        super().__init__(f"device {device} at t={time:.3f}: {cause}")


class ScenarioError(FieldCalcError):
    pass


# --- stability tooling ------------------------------------------------------

class SamplerExhausted(FieldCalcError):
    pass


class NonTermination(FieldCalcError):
    """Progressivity violated at runtime inside the path-weight oracle."""


class RootUndefined(EvalError):
    pass
