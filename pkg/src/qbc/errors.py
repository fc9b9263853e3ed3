"""Exception types shared across the package."""


class LayoutError(ValueError):
    """Factor labels or dimensions are inconsistent."""


class InfeasibleDimensionError(ValueError):
    """A requested computation exceeds the dense desk-scale limits."""
