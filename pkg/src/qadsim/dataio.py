"""Training data / query point storage, QRAM-emulating oracles, constants.

Data matrices are zero-padded up to power-of-two shapes (minimum 2 per axis so
every index register has at least one qubit).  A mask of real rows/columns is
retained: classical statistics always use the unpadded entries, while quantum
pipelines run on the padded registers, with the pad ratio applied when
amplitudes are converted back to classical quantities.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, asdict

import numpy as np

from .arith import FixedPointFormat, RangeError
from .config import SIGMA_MIN
from .simcore import BasisTransform, StateVector


class DataError(Exception):
    """Malformed input data (ragged rows, non-numeric cells, empty file)."""


class DegenerateDataError(Exception):
    """A data-dependent constant vanished under the `error` policy."""


def _pad_dim(n: int) -> int:
    """Smallest power of two >= n, and >= 2 so index registers are non-empty."""
    return max(2, 1 << (n - 1).bit_length())


@dataclass
class QueryLedger:
    """Monotone counters standing in for the asymptotic query-cost model."""

    oracle_data: int = 0
    oracle_query: int = 0
    grover: int = 0
    arithmetic: int = 0

    def add(self, *, oracle_data=0, oracle_query=0, grover=0, arithmetic=0) -> None:
        if min(oracle_data, oracle_query, grover, arithmetic) < 0:
            raise ValueError("ledger counters are monotone; negative increments rejected")
        self.oracle_data += oracle_data
        self.oracle_query += oracle_query
        self.grover += grover
        self.arithmetic += arithmetic

    def snapshot(self) -> dict:
        return asdict(self)


class DataMatrix:
    """M x d training matrix, zero-padded to powers of two with a mask."""

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.size == 0:
            raise DataError(f"expected a non-empty 2-D matrix, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError("data matrix contains non-finite entries")
        self.n_rows, self.n_cols = values.shape
        self.padded_rows = _pad_dim(self.n_rows)
        self.padded_cols = _pad_dim(self.n_cols)
        self.values = np.zeros((self.padded_rows, self.padded_cols))
        self.values[: self.n_rows, : self.n_cols] = values

    @property
    def real_values(self) -> np.ndarray:
        """Unpadded view; the only thing classical statistics may read."""
        return self.values[: self.n_rows, : self.n_cols]

    @property
    def row_bits(self) -> int:
        return self.padded_rows.bit_length() - 1

    @property
    def col_bits(self) -> int:
        return self.padded_cols.bit_length() - 1


class QueryPoint:
    """The new point x0, padded consistently with a DataMatrix."""

    def __init__(self, values: np.ndarray, padded_dim: int | None = None):
        values = np.asarray(values, dtype=float).reshape(-1)
        if values.size == 0:
            raise DataError("query point is empty")
        if not np.all(np.isfinite(values)):
            raise DataError("query point contains non-finite entries")
        self.dim = values.size
        self.padded_dim = padded_dim if padded_dim is not None else _pad_dim(self.dim)
        if self.padded_dim < self.dim:
            raise DataError("padded dimension smaller than the query point")
        self.values = np.zeros(self.padded_dim)
        self.values[: self.dim] = values

    @property
    def real_values(self) -> np.ndarray:
        return self.values[: self.dim]


def _parse_csv(path: str, has_header: bool) -> list[list[float]]:
    rows: list[list[float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if has_header and lineno == 1:
                continue
            if not row or all(cell.strip() == "" for cell in row):
                continue
            parsed = []
            for colno, cell in enumerate(row, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric cell {cell!r} at row {lineno}, column {colno}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataError(f"{path}: ragged rows (widths {sorted(widths)})")
    return rows


def load_csv(path: str, has_header: bool = False) -> DataMatrix:
    """Training matrix from CSV, one point per row."""
    return DataMatrix(np.array(_parse_csv(path, has_header)))


def load_query_csv(path: str, has_header: bool = False, padded_dim: int | None = None) -> QueryPoint:
    """Query point from CSV; the file must contain exactly one row."""
    rows = _parse_csv(path, has_header)
    if len(rows) != 1:
        raise DataError(f"{path}: query file must contain exactly one row, found {len(rows)}")
    return QueryPoint(np.array(rows[0]), padded_dim=padded_dim)


# ---------------------------------------------------------------------------
# oracles

def _lookup_oracle(
    registers: list[str],
    index_bits: list[int],
    value_register: str,
    fmt: FixedPointFormat,
    table_values: np.ndarray,
) -> BasisTransform:
    widths = index_bits + [fmt.word_bits]
    flat = table_values.reshape(-1, order="F")  # first index register least significant
    encoded = np.array([fmt.encode(float(v)) for v in flat], dtype=np.int64)

    def label_map(fields):
        *idx, word = fields
        key = 0
        shift = 0
        for k, w in zip(idx, index_bits):
            key |= k << shift
            shift += w
        return (*idx, word ^ int(encoded[key]))

    return BasisTransform.from_function(registers + [value_register], widths, label_map)


def oracle_OX(
    data: DataMatrix,
    i_register: str,
    j_register: str,
    value_register: str,
    fmt: FixedPointFormat,
) -> BasisTransform:
    """Data oracle |i>|j>|v> -> |i>|j>|v XOR encode(x_j^i)> as a label map.

    Ledger charging happens at application time via :func:`apply_oracle`.
    """
    try:
        return _lookup_oracle(
            [i_register, j_register],
            [data.row_bits, data.col_bits],
            value_register,
            fmt,
            data.values,  # row index i least significant in the key
        )
    except RangeError as exc:
        raise RangeError(f"data entry overflows the value format: {exc}") from exc


def oracle_Ox(
    query: QueryPoint,
    j_register: str,
    value_register: str,
    fmt: FixedPointFormat,
) -> BasisTransform:
    """Query oracle |j>|v> -> |j>|v XOR encode(x0_j)>."""
    bits = query.padded_dim.bit_length() - 1
    return _lookup_oracle([j_register], [bits], value_register, fmt, query.values)


def apply_oracle(state: StateVector, transform: BasisTransform, ledger: QueryLedger | None = None, kind: str = "oracle_data") -> StateVector:
    if ledger is not None:
        ledger.add(**{kind: 1})
    return transform.apply(state)


# ---------------------------------------------------------------------------
# data-dependent constants

@dataclass(frozen=True)
class Constants:
    """Normalizers used by the controlled rotations, from classical data.

    These depend on the fitted mean/variance; the quantum pipelines treat them
    as known, which mirrors the source algorithm's implicit assumption that
    its normalizing constants are available a priori.
    """

    C: float          # max |x_j^i|
    D: float          # max |x_j^i - mu_j|
    T: float          # power of two making all (x0_j - mu_j)/(sigma_j T) <= 1
    E: float          # max |ln sigma_j^2|
    C_prime: float    # max |x0_j - mu_j|
    C_dprime: float   # max |(x_j^i - mu_j)(x0_j - mu_j)|

    def as_dict(self) -> dict:
        return asdict(self)


def compute_constants(
    data: DataMatrix,
    query: QueryPoint,
    mu: np.ndarray,
    sigma2: np.ndarray,
    policy: str = "error",
) -> Constants:
    """Evaluate the defining max-identities on the unpadded data.

    policy: "error" raises on any zero constant / degenerate variance;
    "epsilon-floor" substitutes SIGMA_MIN instead.
    """
    if policy not in ("error", "epsilon-floor"):
        raise ValueError(f"unknown degenerate-data policy {policy!r}")
    x = data.real_values
    x0 = query.real_values
    mu = np.asarray(mu, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    if x0.size != x.shape[1] or mu.size != x.shape[1]:
        raise DataError("query/model dimension does not match the data matrix")

    low = sigma2 < SIGMA_MIN
    if np.any(low):
        if policy == "error":
            bad = np.flatnonzero(low).tolist()
            raise DegenerateDataError(f"variance below floor for features {bad}")
        sigma2 = np.where(low, SIGMA_MIN, sigma2)
    sigma = np.sqrt(sigma2)

    def floored(value: float, label: str) -> float:
        if value > 0.0:
            return float(value)
        if policy == "error":
            raise DegenerateDataError(f"constant {label} is zero")
        return SIGMA_MIN

    C = floored(np.max(np.abs(x)), "C")
    D = floored(np.max(np.abs(x - mu)), "D")
    ratio = np.max(np.abs(x0 - mu) / sigma)
    T = power_of_two_at_least(ratio)
    E = floored(np.max(np.abs(np.log(sigma2))), "E")
    C_prime = floored(np.max(np.abs(x0 - mu)), "C'")
    C_dprime = floored(np.max(np.abs((x - mu) * (x0 - mu))), "C''")
    return Constants(C=C, D=D, T=T, E=E, C_prime=C_prime, C_dprime=C_dprime)


def power_of_two_at_least(value: float) -> float:
    """Smallest power of two >= value, never below 1."""
    if value <= 1.0:
        return 1.0
    return float(2 ** math.ceil(math.log2(value)))
