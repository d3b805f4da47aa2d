"""CSV ingestion with column roles, and round-trippable CSV output."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import EmptyData, InvalidInput, ParseError

MISSING_TOKENS = {"", "na", "nan", "null", "none", "?"}

PIMA_SCHEMA = {
    "y": "outcome",
    "x": ["pregnancies", "glucose", "blood_pressure", "skin_thickness", "insulin", "bmi", "age"],
    "w": ["pedigree"],
}
PIMA_ZERO_AS_MISSING = ["glucose", "blood_pressure", "skin_thickness", "insulin", "bmi"]


@dataclass
class DataSet:
    y: np.ndarray
    x: np.ndarray
    w: np.ndarray | None
    y_name: str
    x_names: list
    w_names: list = field(default_factory=list)
    n_dropped: int = 0
    y_levels: list | None = None

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


def _missing_sentinels(policy) -> dict:
    """Normalize a missing-value policy to ``{column: set_of_sentinel_floats}``."""
    if policy is None:
        return {}
    if isinstance(policy, dict):
        if "zero_as_missing" in policy:
            return {c: {0.0} for c in policy["zero_as_missing"]}
        return {c: {float(v) for v in vals} for c, vals in policy.items()}
    return {c: {0.0} for c in policy}


def ingest_csv(path, schema: dict, missing_policy=None) -> DataSet:
    """Read a headed CSV and split its columns into response, covariates and W.

    ``schema`` maps ``"y"`` to one column name and ``"x"``/``"w"`` to lists of
    names.  Rows with an empty/NA cell in a used column, or holding one of
    the policy's sentinel values (e.g. zero-as-missing), are dropped.  A
    non-numeric, non-missing cell in an X or W column raises ``ParseError``
    naming its line.  A non-numeric response is treated as categorical.
    """
    y_col = schema.get("y")
    x_cols = list(schema.get("x") or [])
    w_cols = list(schema.get("w") or [])
    if not y_col or not x_cols:
        raise InvalidInput("schema must name a response column and at least one X column")
    sentinels = _missing_sentinels(missing_policy)

    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyData(f"{path} is empty") from None
        missing_cols = [c for c in [y_col, *x_cols, *w_cols] if c not in header]
        if missing_cols:
            raise InvalidInput(f"columns not in header: {missing_cols}")
        pos = {c: header.index(c) for c in header}

        ys, xs, ws = [], [], []
        dropped = 0
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
            cells = {c: row[pos[c]].strip() for c in [y_col, *x_cols, *w_cols]}
            if any(v.lower() in MISSING_TOKENS for v in cells.values()):
                dropped += 1
                continue
            nums = {}
            for c in [*x_cols, *w_cols]:
                try:
                    nums[c] = float(cells[c])
                except ValueError:
                    raise ParseError(f"non-numeric value {cells[c]!r} in column {c!r}",
                                     lineno) from None
                if not math.isfinite(nums[c]):
                    raise ParseError(f"non-finite value in column {c!r}", lineno)
            if any(nums[c] in s for c, s in sentinels.items() if c in nums):
                dropped += 1
                continue
            ys.append(cells[y_col])
            xs.append([nums[c] for c in x_cols])
            ws.append([nums[c] for c in w_cols])

    if not ys:
        raise EmptyData(f"no usable rows in {path} ({dropped} dropped)")
    y_levels = None
    try:
        y = np.array([float(v) for v in ys])
    except ValueError:
        y_levels = sorted(set(ys))
        y = np.array([y_levels.index(v) for v in ys], dtype=float)
    return DataSet(
        y=y,
        x=np.array(xs, dtype=float),
        w=np.array(ws, dtype=float) if w_cols else None,
        y_name=y_col,
        x_names=x_cols,
        w_names=w_cols,
        n_dropped=dropped,
        y_levels=y_levels,
    )


def pima_path() -> Path:
    """Path of the shipped Pima Indians diabetes table (768 rows, UCI layout)."""
    return Path(str(resources.files("envsdr") / "data" / "pima.csv"))


def load_pima(path=None) -> DataSet:
    """The Pima data with zeros treated as missing in the five clinical columns."""
    return ingest_csv(path or pima_path(), PIMA_SCHEMA, {"zero_as_missing": PIMA_ZERO_AS_MISSING})


def fmt(v) -> str:
    """Float formatting that round-trips exactly."""
    return f"{float(v):.17g}"


def write_matrix_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            wr.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def read_matrix_csv(path) -> tuple[list, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader if row])
    return header, data
