"""Exception types shared across the toolkit."""


class SemShapeError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(SemShapeError):
    """Malformed input: bad file content, bad config, inconsistent dimensions."""


class CoincidentPointsError(SemShapeError):
    """Two signal vectors (nearly) coincide, making the gradient singular."""

    def __init__(self, i: int, j: int, dist_sq: float):
        self.pair = (i, j)
        self.dist_sq = dist_sq
        super().__init__(
            f"signal vectors {i} and {j} coincide (distance^2 = {dist_sq:.3e}); "
            f"gradient is singular for this pair"
        )
