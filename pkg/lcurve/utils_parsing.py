import math
from typing import Optional


class SelectError(Exception):
    pass


def _to_int(raw: str, what: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise SelectError(f"{what} '{raw}' must be an integer.")


def convert_str_to_ints(values_str: str, allow_range=True, minimum: Optional[int]=None) -> list[int]:
    """
    Parse "50, 75, 100:201:50" into sorted unique ints.

    Items are comma-separated; `start:stop[:step]` expands like range() (stop excluded).
    """
    if values_str is None or not values_str.strip():
        return []
    chosen = []
    groups = [g.strip() for g in values_str.split(",")]
    for g in groups:
        if not g:
            raise SelectError(f"Empty item in '{values_str}'.")
        # parse range of values (e.g. 50:201:25)
        if ':' in g:
            if not allow_range:
                raise SelectError("Ranges (:) not allowed for this input.")
            parts = [r.strip() for r in g.split(":", 2)]
            if not parts[0] or not parts[1]:
                raise SelectError(f"Range '{g}' needs both a start and a stop.")
            start = _to_int(parts[0], "Range start")
            stop = _to_int(parts[1], "Range stop")
            step = _to_int(parts[2], "Range step") if len(parts) > 2 and parts[2] else 1
            if step <= 0:
                raise SelectError(f"Range step must be positive, but was '{step}'.")
            new_values = list(range(start, stop, step))
            if not new_values:
                raise SelectError(f"Range '{g}' is empty.")
            chosen.extend(new_values)
        else:
            chosen.append(_to_int(g, "Value"))
    if minimum is not None:
        low = [v for v in chosen if v < minimum]
        if low:
            raise SelectError(f"Values must be >= {minimum}, but got {sorted(set(low))}.")
    return sorted(set(chosen))


def convert_str_to_floats(values_str: str) -> list[float]:
    if values_str is None or not values_str.strip():
        return []
    values = []
    for g in (g.strip() for g in values_str.split(",")):
        try:
            v = float(g)
        except ValueError:
            raise SelectError(f"Value '{g}' must be a number.")
        if not math.isfinite(v):
            raise SelectError(f"Value '{g}' must be finite.")
        values.append(v)
    return values


def convert_str_to_columns(columns_str: str, column_names: list[str]) -> list[int]:
    """Resolve a comma list of column names or 0-based positions (ranges allowed) to positions."""
    if columns_str is None or not columns_str.strip():
        return []
    indexes = []
    for g in (g.strip() for g in columns_str.split(",")):
        if g in column_names:
            indexes.append(column_names.index(g))
            continue
        if ':' not in g and not g.lstrip('-').isdigit():
            raise SelectError(f"Unknown column '{g}'.")
        for idx in convert_str_to_ints(g, minimum=0):
            if idx >= len(column_names):
                raise SelectError(f"Column index '{idx}' out of range for {len(column_names)} column(s).")
            indexes.append(idx)
    return sorted(set(indexes))
