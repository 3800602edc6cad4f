import math


def ceil_count(x: float, rel: float = 1e-12) -> int:
    """Ceiling that ignores float noise just above an integer (100.00000000000001 -> 100)."""
    if not math.isfinite(x):
        raise OverflowError(f"cannot take the ceiling of {x}")
    nearest = round(x)
    if abs(x - nearest) <= rel * max(1.0, abs(x)):
        return int(nearest)
    return math.ceil(x)
