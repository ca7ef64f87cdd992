from config import EXIT_DECOMPOSITION_FAILED, EXIT_GRID_FAILED, EXIT_NON_COMMUTING, EXIT_VERIFY_FAILED


class SpectralError(Exception):
    exit_code = EXIT_VERIFY_FAILED

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class DimensionMismatchError(SpectralError, ValueError):
    pass


class MatrixSizeError(SpectralError, ValueError):
    pass


class EigenIterationError(SpectralError):
    exit_code = EXIT_DECOMPOSITION_FAILED

    def __init__(self, residual: float):
        super().__init__(f"eigen-iteration failed (residual {residual:.3e})")
        self.residual = residual


class IllSeparatedClusterError(SpectralError):
    exit_code = EXIT_DECOMPOSITION_FAILED

    def __init__(self, pair: tuple[complex, complex]):
        super().__init__(f"ill-separated cluster: {pair[0]:.6g} and {pair[1]:.6g}")
        self.pair = pair


class SylvesterIllConditionedError(SpectralError):
    exit_code = EXIT_DECOMPOSITION_FAILED

    def __init__(self, gap: float):
        super().__init__(f"Sylvester ill-conditioned (spectral gap {gap:.3e})")
        self.gap = gap


class NotComplementaryPairError(SpectralError, ValueError):
    pass


class NearlyDegenerateIdempotentError(SpectralError):
    def __init__(self, cond: float):
        super().__init__(f"nearly degenerate idempotent (condition number {cond:.3e})")
        self.cond = cond


class NotMutuallyAnnihilatingError(SpectralError):
    def __init__(self, pair: tuple[int, int], norm: float):
        super().__init__(f"not mutually annihilating: idempotents {pair[0]} and {pair[1]} (norm {norm:.3e})")
        self.pair = pair
        self.norm = norm


class CriterionMismatchError(SpectralError):
    pass


class NonCommutingError(SpectralError):
    exit_code = EXIT_NON_COMMUTING

    def __init__(self, norm: float):
        super().__init__(f"operators do not commute (commutator norm {norm:.3e})")
        self.norm = norm


class DecompositionFailedError(SpectralError):
    exit_code = EXIT_DECOMPOSITION_FAILED

    def __init__(self, residual: float):
        super().__init__(f"decomposition failed (invariance residual {residual:.3e})")
        self.residual = residual


class BoundaryAmbiguousError(SpectralError):
    def __init__(self, point, distance: float):
        super().__init__(f"boundary-ambiguous cluster at {point} (distance {distance:.3e})")
        self.point = point
        self.distance = distance


class NotInvariantSubspaceError(SpectralError, ValueError):
    def __init__(self, residual: float):
        super().__init__(f"not an invariant subspace (residual {residual:.3e})")
        self.residual = residual


class IllPosedAlphaError(SpectralError, ValueError):
    def __init__(self, distance: float):
        super().__init__(f"ill-posed alpha (atom within {distance:.3e} of the hyperplane)")
        self.distance = distance


class GridError(SpectralError):
    exit_code = EXIT_GRID_FAILED

    def __init__(self, message: str = "grid does not contain spectrum"):
        super().__init__(message)
