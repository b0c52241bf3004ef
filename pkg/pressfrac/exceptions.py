class PressFracException(Exception):
    pass


class MeshError(PressFracException):
    pass


class MeshFormatError(MeshError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class MeshSpecError(MeshError):
    """A mesh description with an invalid value for ``field``."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(message)
        self.field = field


class MeshValidationError(MeshError):
    pass


class MaterialError(PressFracException):
    pass


class DamageOutOfRange(MaterialError):
    def __init__(self, value: float) -> None:
        super().__init__(f"Damage value {value!r} lies outside [0, 1].")
        self.value = value


class AssemblyError(PressFracException):
    pass


class SolverConfigError(PressFracException):
    pass


class ConvergenceFailure(PressFracException):
    """Raised by a subproblem that did not converge. The load stepper treats it
    as a request to cut the increment back."""

    def __init__(self, subproblem: str, iterations: int, residual: float) -> None:
        super().__init__(
            f"{subproblem} did not converge after {iterations} iterations "
            f"(relative residual {residual:.3e})."
        )
        self.subproblem = subproblem
        self.iterations = iterations
        self.residual = residual


class LinearSolverError(PressFracException):
    pass


class SingularSystemError(LinearSolverError):
    def __init__(self, dof: int, components: int) -> None:
        node, component = divmod(dof, components)
        super().__init__(
            f"Singular system: zero pivot at node {node} (component {component})."
        )
        self.node = node
        self.component = component


class CGBreakdownError(LinearSolverError):
    def __init__(self, reason: str, residual: float) -> None:
        super().__init__(f"Conjugate gradient {reason} (relative residual {residual:.3e}).")
        self.reason = reason
        self.residual = residual


class PostProcessingError(PressFracException):
    pass


class OracleError(PressFracException):
    pass


class ProfileError(OracleError):
    pass
