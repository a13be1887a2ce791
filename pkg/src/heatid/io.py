"""CSV time series and the JSON results document."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .smoother import TimeSeriesData


class DataFormatError(ValueError):
    pass


def _fmt(x) -> str:
    x = float(x)
    return "" if np.isnan(x) else repr(x)


def write_csv(path, header: list[str], rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path, allow_empty: tuple[str, ...] = ()) -> tuple[list[str], np.ndarray]:
    """Numeric CSV with a mandatory header. Empty cells become NaN only in
    ``allow_empty`` columns; any other malformed cell raises with its row number."""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"data file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError(f"{path}: empty file, header row required") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
            vals = []
            for name, cell in zip(header, row):
                cell = cell.strip()
                if cell == "" and name in allow_empty:
                    vals.append(np.nan)
                    continue
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataFormatError(f"{path}: row {lineno}, column {name!r}: cannot parse {cell!r}") from None
            rows.append(vals)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return header, np.array(rows)


def measurement_columns(measured: list[int]) -> list[str]:
    return [f"y_{i + 1}" for i in measured]


def write_measurements(path, data: TimeSeriesData, measured: list[int]) -> None:
    D = data.inputs.shape[1] - 1
    header = ["t", "T_a"] + [f"u_{i + 1}" for i in range(D)] + measurement_columns(measured)
    rows = np.column_stack([data.times, data.inputs, data.measurements])
    write_csv(path, header, rows)


def read_measurements(path, n_components: int, measured: list[int], allow_dropout: bool = False) -> TimeSeriesData:
    ycols = measurement_columns(measured)
    ucols = ["T_a"] + [f"u_{i + 1}" for i in range(n_components)]
    header, arr = read_csv(path, allow_empty=tuple(ycols) if allow_dropout else ())
    missing = [c for c in ["t"] + ucols + ycols if c not in header]
    if missing:
        raise DataFormatError(f"{path}: missing columns {missing}")
    col = {h: i for i, h in enumerate(header)}
    t = arr[:, col["t"]]
    if t.shape[0] > 1:
        steps = np.diff(t)
        dt = float(steps[0])
        if dt <= 0 or not np.allclose(steps, dt, rtol=1e-6, atol=1e-9):
            bad = int(np.argmax(~np.isclose(steps, dt, rtol=1e-6, atol=1e-9))) + 3
            raise DataFormatError(f"{path}: non-uniform sampling near row {bad}")
    else:
        dt = float(t[0])
    if not dt > 0:
        raise DataFormatError(f"{path}: cannot infer a positive sampling interval")
    return TimeSeriesData(
        dt=dt,
        inputs=arr[:, [col[c] for c in ucols]],
        measurements=arr[:, [col[c] for c in ycols]],
    )


def smoothed_header(D: int) -> list[str]:
    return (["t", "T_a"] + [f"m_T_{i + 1}" for i in range(D)] + [f"m_rho_{i + 1}" for i in range(D)]
            + [f"var_T_{i + 1}" for i in range(D)] + [f"var_rho_{i + 1}" for i in range(D)])


def write_smoothed(path, times, ambient, means, covs) -> None:
    D = means.shape[1] // 2
    var = np.diagonal(covs, axis1=1, axis2=2)
    write_csv(path, smoothed_header(D), np.column_stack([times, ambient, means, var]))


def read_smoothed(path, D: int):
    """Returns (times, ambient, means (N, 2D), variances (N, 2D))."""
    header, arr = read_csv(path)
    want = smoothed_header(D)
    if header != want:
        raise DataFormatError(f"{path}: expected columns {want}")
    return arr[:, 0], arr[:, 1], arr[:, 2:2 + 2 * D], arr[:, 2 + 2 * D:]


@dataclass
class ResultsDocument:
    psi_hat: dict | None = None
    laplace: dict | None = None
    log_marginal: float | None = None
    log_posterior: float | None = None
    optimizer: dict | None = None
    regression: list[dict] | None = None
    rmse: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ResultsDocument":
        return cls(**d)

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n")

    @classmethod
    def load(cls, path) -> "ResultsDocument":
        path = Path(path)
        if not path.exists():
            return cls()
        return cls.from_dict(json.loads(path.read_text()))

    def stamp(self, config_hash: str, seed: int) -> None:
        self.provenance = {"config_hash": config_hash, "seed": seed, "version": __version__}
