"""Ingest, validate and summarize 1-to-1 matched case-control data.

A dataset is a sequence of pairs, each holding one case (y=1) and one
control (y=0) record with exposure x, mediator m and a fixed-arity
covariate vector z.  Rows arrive in any order; pairing is by pair id and
the outcome column decides which row is the case.  Matching variables are
not stored per row (the matching already happened upstream); an optional
free-text provenance note can record them.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DatasetError


@dataclass(frozen=True)
class PairRecord:
    """One subject row: outcome, exposure, mediator, covariates."""

    pair_id: str
    y: int
    x: float
    m: float
    z: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.y not in (0, 1):
            raise DatasetError(f"pair {self.pair_id!r}: y must be 0 or 1")
        for label, value in (("x", self.x), ("m", self.m), *(("z", v) for v in self.z)):
            if not math.isfinite(value):
                raise DatasetError(
                    f"pair {self.pair_id!r}: non-finite value in column {label}"
                )


@dataclass(frozen=True)
class ColumnSchema:
    """Maps CSV column names onto the pair/outcome/exposure/mediator/covariate roles."""

    pair_col: str = "pair"
    y_col: str = "y"
    x_col: str = "x"
    m_col: str = "m"
    z_cols: tuple[str, ...] = ("z",)


class MatchedDataset:
    """Immutable arrays of matched pairs, case member first.

    Arrays are flagged read-only, so a dataset can be shared freely once
    built.
    """

    def __init__(
        self,
        pair_ids,
        x_case,
        x_control,
        m_case,
        m_control,
        z_case,
        z_control,
        covariate_names=(),
        provenance: str = "",
    ) -> None:
        self.pair_ids = tuple(str(p) for p in pair_ids)
        n = len(self.pair_ids)
        if len(set(self.pair_ids)) != n:
            raise DatasetError("pair ids are not unique")
        self.x_case = _freeze(x_case, n, "x (cases)")
        self.x_control = _freeze(x_control, n, "x (controls)")
        self.m_case = _freeze(m_case, n, "m (cases)")
        self.m_control = _freeze(m_control, n, "m (controls)")
        self.z_case = _freeze2(z_case, n, "z (cases)")
        self.z_control = _freeze2(z_control, n, "z (controls)")
        if self.z_case.shape[1] != self.z_control.shape[1]:
            raise DatasetError("case and control covariate arity differ")
        self.covariate_names = tuple(covariate_names)
        if len(self.covariate_names) != self.z_case.shape[1]:
            raise DatasetError(
                f"{len(self.covariate_names)} covariate names for "
                f"{self.z_case.shape[1]} covariate columns"
            )
        self.provenance = provenance

    @property
    def n_pairs(self) -> int:
        return len(self.pair_ids)

    def __len__(self) -> int:
        return self.n_pairs

    def __repr__(self) -> str:
        return f"MatchedDataset({self.n_pairs} pairs, z={list(self.covariate_names)})"

    @classmethod
    def from_pairs(
        cls,
        pairs,
        covariate_names=(),
        provenance: str = "",
    ) -> "MatchedDataset":
        """Build from (case, control) PairRecord tuples, validating each pair."""
        ids, xc, x0, mc, m0, zc, z0 = [], [], [], [], [], [], []
        arity: int | None = None
        for case, control in pairs:
            if case.pair_id != control.pair_id:
                raise DatasetError(
                    f"pair members disagree on id: {case.pair_id!r} vs {control.pair_id!r}"
                )
            if case.y != 1 or control.y != 0:
                raise DatasetError(f"unbalanced pair {case.pair_id!r}: need one case and one control")
            if arity is None:
                arity = len(case.z)
            if len(case.z) != arity or len(control.z) != arity:
                raise DatasetError(f"pair {case.pair_id!r}: covariate arity differs")
            ids.append(case.pair_id)
            xc.append(case.x)
            x0.append(control.x)
            mc.append(case.m)
            m0.append(control.m)
            zc.append(case.z)
            z0.append(control.z)
        k = arity if arity is not None else len(covariate_names)
        if not covariate_names:
            covariate_names = tuple(f"z{i}" for i in range(k))
        shape = (len(ids), k)
        return cls(
            ids,
            xc,
            x0,
            mc,
            m0,
            np.asarray(zc, dtype=float).reshape(shape),
            np.asarray(z0, dtype=float).reshape(shape),
            covariate_names,
            provenance,
        )


def _freeze(values, n: int, label: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (n,):
        raise DatasetError(f"{label}: expected shape ({n},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DatasetError(f"{label}: non-finite value")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def _freeze2(values, n: int, label: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != n:
        raise DatasetError(f"{label}: expected shape ({n}, k), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DatasetError(f"{label}: non-finite value")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class PairDifferences:
    """Case-minus-control differences plus the case-side values the
    direct-effect score needs."""

    dx: np.ndarray
    dm: np.ndarray
    dz: np.ndarray
    x_case: np.ndarray
    m_case: np.ndarray
    covariate_names: tuple[str, ...] = ()

    @property
    def n_pairs(self) -> int:
        return self.dx.shape[0]

    def design_matrix(self) -> np.ndarray:
        """Columns ordered (dx, dm, dz...)."""
        return np.column_stack([self.dx, self.dm, self.dz])


def pair_differences(dataset: MatchedDataset) -> PairDifferences:
    return PairDifferences(
        dx=dataset.x_case - dataset.x_control,
        dm=dataset.m_case - dataset.m_control,
        dz=dataset.z_case - dataset.z_control,
        x_case=dataset.x_case,
        m_case=dataset.m_case,
        covariate_names=dataset.covariate_names,
    )


# -- CSV ingestion -----------------------------------------------------


def _parse_float(raw: str, column: str, pair_id: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise DatasetError(
            f"pair {pair_id!r}: non-numeric value {raw!r} in column {column!r}"
        ) from None
    if not math.isfinite(value):
        raise DatasetError(f"pair {pair_id!r}: non-finite value in column {column!r}")
    return value


def load_matched_csv(
    text: str, schema: ColumnSchema = ColumnSchema(), provenance: str = ""
) -> MatchedDataset:
    """Parse a matched-pair CSV (UTF-8, header line, y literally 0 or 1).

    Every pair id must appear on exactly two rows, one case and one
    control; anything else is a hard error, never silently repaired.
    """
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise DatasetError("empty CSV: no header line")
    needed = [schema.pair_col, schema.y_col, schema.x_col, schema.m_col, *schema.z_cols]
    missing = [c for c in needed if c not in reader.fieldnames]
    if missing:
        raise DatasetError("missing column(s): " + ", ".join(missing))

    by_pair: dict[str, list[PairRecord]] = {}
    order: list[str] = []
    for rownum, row in enumerate(reader, start=2):
        pid = row[schema.pair_col]
        if pid is None or pid == "":
            raise DatasetError(f"row {rownum}: empty pair id")
        y_raw = row[schema.y_col]
        if y_raw not in ("0", "1"):
            raise DatasetError(
                f"pair {pid!r}: outcome must be literal 0 or 1, got {y_raw!r}"
            )
        record = PairRecord(
            pair_id=pid,
            y=int(y_raw),
            x=_parse_float(row[schema.x_col], schema.x_col, pid),
            m=_parse_float(row[schema.m_col], schema.m_col, pid),
            z=tuple(_parse_float(row[c], c, pid) for c in schema.z_cols),
        )
        if pid not in by_pair:
            by_pair[pid] = []
            order.append(pid)
        by_pair[pid].append(record)

    pairs = []
    for pid in order:
        rows = by_pair[pid]
        if len(rows) != 2:
            raise DatasetError(f"pair {pid!r} has {len(rows)} rows, expected 2")
        ys = sorted(r.y for r in rows)
        if ys != [0, 1]:
            raise DatasetError(
                f"unbalanced pair {pid!r}: outcomes {rows[0].y},{rows[1].y}"
            )
        case = rows[0] if rows[0].y == 1 else rows[1]
        control = rows[0] if rows[0].y == 0 else rows[1]
        pairs.append((case, control))
    return MatchedDataset.from_pairs(pairs, tuple(schema.z_cols), provenance)


def to_csv(dataset: MatchedDataset, schema: ColumnSchema | None = None) -> str:
    """Serialize back to CSV, case row first within each pair.

    float repr is shortest-round-trip, so decimal inputs with up to 15
    significant digits survive a load/serialize cycle bit-exactly.
    """
    if schema is None:
        schema = ColumnSchema(z_cols=dataset.covariate_names)
    if len(schema.z_cols) != len(dataset.covariate_names):
        raise DatasetError("schema covariate arity does not match dataset")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        [schema.pair_col, schema.y_col, schema.x_col, schema.m_col, *schema.z_cols]
    )
    for i, pid in enumerate(dataset.pair_ids):
        writer.writerow(
            [pid, 1, repr(float(dataset.x_case[i])), repr(float(dataset.m_case[i]))]
            + [repr(float(v)) for v in dataset.z_case[i]]
        )
        writer.writerow(
            [pid, 0, repr(float(dataset.x_control[i])), repr(float(dataset.m_control[i]))]
            + [repr(float(v)) for v in dataset.z_control[i]]
        )
    return out.getvalue()


# -- genotype summary ---------------------------------------------------


@dataclass(frozen=True)
class GenotypeSummary:
    """Genotype counts by arm plus the control-arm allele summary.

    Counts index 0/1/2 copies of the reference allele.  The chi-square
    compares observed control genotype counts with the (q^2, 2pq, p^2)
    expectation at the estimated allele frequency; 1 degree of freedom.
    """

    control_counts: tuple[int, int, int]
    case_counts: tuple[int, int, int]
    allele_freq: float
    hwe_expected: tuple[float, float, float]
    hwe_chi_square: float

    def text(self) -> str:
        lines = ["genotype   controls   cases"]
        for g in range(3):
            lines.append(
                f"{g:>8}   {self.control_counts[g]:>8}   {self.case_counts[g]:>5}"
            )
        lines.append(f"control allele frequency: {self.allele_freq:.4f}")
        lines.append(f"HWE chi-square (controls, 1 df): {self.hwe_chi_square:.4f}")
        return "\n".join(lines) + "\n"


def genotype_summary(dataset: MatchedDataset) -> GenotypeSummary:
    """Summarize a 0/1/2-coded exposure: counts, allele frequency, HWE check."""
    for label, arr in (("case", dataset.x_case), ("control", dataset.x_control)):
        if not np.all(np.isin(arr, (0.0, 1.0, 2.0))):
            raise DatasetError(f"exposure not coded 0/1/2 in {label} arm")
    control = dataset.x_control.astype(int)
    case = dataset.x_case.astype(int)
    control_counts = tuple(int(np.sum(control == g)) for g in range(3))
    case_counts = tuple(int(np.sum(case == g)) for g in range(3))
    n = sum(control_counts)
    if n == 0:
        raise DatasetError("no control rows to summarize")
    p_hat = (2 * control_counts[2] + control_counts[1]) / (2 * n)
    q_hat = 1.0 - p_hat
    expected = (q_hat**2 * n, 2 * p_hat * q_hat * n, p_hat**2 * n)
    chi2 = sum(
        (obs - exp) ** 2 / exp
        for obs, exp in zip(control_counts, expected)
        if exp > 0
    )
    return GenotypeSummary(control_counts, case_counts, p_hat, expected, chi2)
