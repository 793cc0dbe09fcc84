"""Shared numeric vocabulary: vectors, the omega weights, traces and bound parameters."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, asdict
from typing import Iterable, Optional

import numpy as np

TRACE_COLUMNS = (
    "k", "f_gap", "grad_norm", "g_norm", "w_k", "W_k",
    "ip_d2", "ip_d1", "sub_gap", "dist_to_opt",
)


class DimensionError(ValueError):
    pass


class TraceFormatError(ValueError):
    pass


def as_vector(x, n: Optional[int] = None) -> np.ndarray:
    """Coerce to a 1-d float64 array, checking finiteness and (optionally) length."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError(f"expected a 1-d vector, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise DimensionError(f"expected dimension {n}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite components")
    return v


def inner(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(a @ b)


class OmegaSequence:
    """Lazily extended weights w_0 = 1, w_k = 1/2 + sqrt(1/4 + w_{k-1}^2).

    Each solver run owns its own instance; values are cached so repeated
    lookups are O(1).
    """

    def __init__(self):
        self._values = [1.0]

    def __getitem__(self, k: int) -> float:
        if k < 0:
            raise IndexError("omega index must be non-negative")
        vals = self._values
        while len(vals) <= k:
            prev = vals[-1]
            vals.append(0.5 + math.sqrt(0.25 + prev * prev))
        return vals[k]

    def __len__(self):
        return len(self._values)

    def upto(self, k: int) -> np.ndarray:
        """Array of w_0..w_k."""
        self[k]
        return np.array(self._values[: k + 1])


_shared_omega = OmegaSequence()


def omega(k: int) -> float:
    if k < 0:
        raise ValueError("k must be >= 0")
    return _shared_omega[k]


@dataclass(frozen=True)
class BoundParams:
    L: float
    R: float
    gamma: float = 1.0
    delta1: float = 0.0
    delta2: float = 0.0
    delta3: float = 0.0
    delta4: float = 0.0

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be positive")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.R < 0:
            raise ValueError("R must be non-negative")
        for name in ("delta1", "delta2", "delta3", "delta4"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass
class IterationRecord:
    k: int
    f_gap: Optional[float]
    grad_norm: float
    g_norm: Optional[float]
    w_k: Optional[float]
    W_k: Optional[float]
    ip_d2: Optional[float] = None
    ip_d1: Optional[float] = None
    sub_gap: Optional[float] = None
    dist_to_opt: Optional[float] = None
    # not serialized; used by the orthogonality and subproblem-linkage checks
    d1_norm: Optional[float] = None
    d1_prev_norm: Optional[float] = None
    d2_prev_norm: Optional[float] = None
    step_norm: Optional[float] = None
    D_tau_norm: Optional[float] = None


@dataclass
class Trace:
    records: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def append(self, rec: IterationRecord):
        if rec.k != len(self.records):
            raise TraceFormatError(f"record k={rec.k} breaks contiguity at {len(self.records)}")
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        """Column as a float array; missing values become NaN."""
        out = np.full(len(self.records), np.nan)
        for i, r in enumerate(self.records):
            v = getattr(r, name)
            if v is not None:
                out[i] = v
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in self.records:
            w.writerow([_fmt(getattr(r, c)) for c in TRACE_COLUMNS])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str, meta: Optional[dict] = None) -> "Trace":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != TRACE_COLUMNS:
            raise TraceFormatError("unexpected trace header")
        tr = cls(meta=dict(meta or {}))
        for row in rows[1:]:
            if len(row) != len(TRACE_COLUMNS):
                raise TraceFormatError(f"row has {len(row)} fields")
            vals = dict(zip(TRACE_COLUMNS, row))
            tr.append(IterationRecord(
                k=int(vals["k"]),
                **{c: _parse(vals[c]) for c in TRACE_COLUMNS[1:]},
            ))
        return tr

    @classmethod
    def read_csv(cls, path, meta: Optional[dict] = None) -> "Trace":
        with open(path, newline="") as fh:
            return cls.from_csv(fh.read(), meta)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _parse(s: str):
    return None if s == "" else float(s)


def records_as_dicts(records: Iterable[IterationRecord]) -> list:
    return [asdict(r) for r in records]
