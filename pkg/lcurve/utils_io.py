from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from .curves import LearningCurve
from .errors import DataError
from .logistic import Dataset

NA = "NA"


def read_frame(path: Union[str, Path]) -> pd.DataFrame:
    try:
        return pd.read_csv(path, sep=",", header=0, na_values=[NA], keep_default_na=False,
                           float_precision="round_trip", encoding="utf-8")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataError(f"Cannot read CSV '{path}': {e}")


def _numeric_block(frame: pd.DataFrame, columns: list[str], path) -> np.ndarray:
    non_numeric = [c for c in columns if not pd.api.types.is_numeric_dtype(frame[c])]
    if non_numeric:
        raise DataError(f"Columns {non_numeric} of '{path}' are not numeric.")
    values = frame[columns].to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        bad_rows = np.flatnonzero(~np.all(np.isfinite(values), axis=1))[:5] + 2
        raise DataError(f"'{path}' has missing or non-finite cells (file lines {bad_rows.tolist()}).")
    return values


def read_dataset(path: Union[str, Path], label: str) -> Dataset:
    """Labeled dataset from a CSV with a header row; every non-label column is a feature."""
    frame = read_frame(path)
    if label not in frame.columns:
        raise DataError(f"Label column '{label}' not found in '{path}'; columns are {list(frame.columns)}.")
    features = [c for c in frame.columns if c != label]
    if not features:
        raise DataError(f"'{path}' has no feature columns besides '{label}'.")
    X = _numeric_block(frame, features, path)
    y = _numeric_block(frame, [label], path)[:, 0]
    return Dataset(X, y, column_names=[str(c) for c in features])


def read_features(path: Union[str, Path], column_names: list[str]) -> np.ndarray:
    """Unlabeled feature rows; the file must carry the same feature columns (a label column is ignored)."""
    frame = read_frame(path)
    missing = [c for c in column_names if c not in frame.columns]
    if missing:
        raise DataError(f"'{path}' lacks feature columns {missing}.")
    return _numeric_block(frame, column_names, path)


def write_frame(frame: pd.DataFrame, path: Union[str, Path]):
    frame.to_csv(path, sep=",", index=False, na_rep=NA, lineterminator="\n", encoding="utf-8")


def curve_frame(curve: LearningCurve, value_column: str="tau", anchor_column: bool=False) -> pd.DataFrame:
    """One row per size; reported (clamped) values plus a flag for clamped entries."""
    reported, clamped = curve.reported()
    frame = pd.DataFrame({"m": curve.sizes, value_column: reported})
    if curve.std_errors is not None:
        frame["std_error"] = curve.std_errors
    if anchor_column:
        frame["anchor"] = (curve.sizes == curve.anchor.size).astype(int) if curve.anchor else 0
    frame["clamped"] = clamped.astype(int)
    return frame


def write_curve(curve: LearningCurve, path: Union[str, Path], value_column: str="tau",
                anchor_column: bool=False, columns: Optional[list[str]]=None):
    frame = curve_frame(curve, value_column=value_column, anchor_column=anchor_column)
    write_frame(frame[columns] if columns else frame, path)
