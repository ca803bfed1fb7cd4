"""Exception types shared across the package."""


class InfeasibleConfig(ValueError):
    """System dimensions violate the stream / RF-chain feasibility chain."""


class NotSquare(ValueError):
    """Antenna count is not a perfect square (square planar array required)."""


class DimensionMismatch(ValueError):
    """Matrix operands have incompatible shapes."""


class RankTooLarge(ValueError):
    """Requested truncation rank exceeds the matrix dimensions."""


class SingularCovariance(ArithmeticError):
    """Interference-plus-noise covariance is numerically singular."""


class EmptyGains(ValueError):
    """Water-filling called with no positive stream gains."""


class EmptyInput(ValueError):
    """Aggregate operation called with no rows."""


class NonConvergence(RuntimeError):
    """Iterative solver exhausted its iteration budget before converging."""


class StreamsExceedNullity(RuntimeError):
    """The interference-free subspace of a user vanished entirely.

    Carries the degenerate (zero-power) factors so callers can record the
    event and keep a Monte Carlo run alive instead of aborting it.
    """

    def __init__(self, user, precoder, combiner_stage2, singulars):
        super().__init__(
            f"user {user}: interfering users span the whole effective space; "
            "streams continue with zero power"
        )
        self.user = user
        self.precoder = precoder
        self.combiner_stage2 = combiner_stage2
        self.singulars = singulars
