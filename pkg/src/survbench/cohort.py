"""Longitudinal cohort data model: ingestion, monthly aggregation, imputation
and scaling, inclusion filtering, static snapshots, and expansion of the
illness-death outcome into per-transition training records."""

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ParseError, SchemaError, ValidationError
from .grid import TimeGrid

HOSP_INDICATOR = "hospitalized"


@dataclass(frozen=True)
class RawRecord:
    patient_id: str
    month_index: int
    feature: str
    value: float | str


@dataclass
class FeatureMeta:
    """Declared feature with statistics fitted on a training split."""

    name: str
    kind: str  # continuous | categorical | binary-code
    vocabulary: tuple[str, ...] | None = None
    mean: float | None = None
    std: float | None = None
    mode: float | None = None

    def __post_init__(self):
        if self.kind not in ("continuous", "categorical", "binary-code"):
            raise SchemaError(f"unknown feature kind {self.kind!r} for {self.name!r}")
        if self.kind == "categorical" and not self.vocabulary:
            raise SchemaError(f"categorical feature {self.name!r} needs a vocabulary")

    @property
    def fill_value(self) -> float:
        # continuous features impute to the fit mean, which scales to 0
        if self.kind == "categorical":
            return float(self.mode) if self.mode is not None else 0.0
        return 0.0

    def encode(self, value, line_no=None):
        if self.kind == "continuous":
            try:
                return float(value)
            except (TypeError, ValueError):
                raise ParseError(f"non-numeric value {value!r} for {self.name!r}"
                                 + (f" (line {line_no})" if line_no else ""))
        if self.kind == "categorical":
            if value not in self.vocabulary:
                raise SchemaError(f"value {value!r} not in vocabulary of {self.name!r}")
            return float(self.vocabulary.index(value))
        v = float(value)
        if v not in (0.0, 1.0):
            raise ValidationError(f"binary-code feature {self.name!r} got {value!r}")
        return v

    def decode(self, code: float):
        if self.kind == "categorical":
            return self.vocabulary[int(code)]
        return float(code)


@dataclass
class SecondEvent:
    time: float  # months after the first event
    cause: int = 2  # 2 = death after hospitalization, 0 = censored after hospitalization

    def __post_init__(self):
        if self.time <= 0:
            raise ValidationError("second-event time must be positive")
        if self.cause not in (0, 2):
            raise ValidationError("second-event cause must be 0 or 2")


@dataclass
class Outcome:
    cause: int  # 0 censored | 1 hospitalization | 2 death
    time: float  # months from the end of the input sequence
    second_event: SecondEvent | None = None

    def __post_init__(self):
        if self.cause not in (0, 1, 2):
            raise ValidationError(f"cause must be 0, 1 or 2, got {self.cause}")
        if not np.isfinite(self.time) or self.time <= 0:
            raise ValidationError(f"event time must be positive, got {self.time}")
        if self.second_event is not None and self.cause != 1:
            raise ValidationError("second event only allowed after a first event of cause 1")


@dataclass
class PatientSequence:
    patient_id: str
    months: np.ndarray  # (T,) increasing month indices
    matrix: np.ndarray  # (T, d)
    mask: np.ndarray  # (T, d) True where observed
    static: np.ndarray  # demographics, cohort.static_names order
    outcome: Outcome

    @property
    def n_months(self) -> int:
        return len(self.months)


@dataclass
class Cohort:
    sequences: list[PatientSequence]
    features: list[FeatureMeta]
    static_names: list[str]
    grid: TimeGrid
    risk_mode: str = "semi-competing"
    static_stats: list[tuple[float, float]] | None = None  # (mean, std) per static after scaling

    def __post_init__(self):
        if self.risk_mode not in ("semi-competing", "competing"):
            raise ValidationError(f"unknown risk mode {self.risk_mode!r}")
        ids = [s.patient_id for s in self.sequences]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise ValidationError(f"duplicate patient_id {dup!r}")

    def __len__(self):
        return len(self.sequences)

    @property
    def feature_names(self) -> list[str]:
        return [f.name for f in self.features]

    def ids(self) -> list[str]:
        return [s.patient_id for s in self.sequences]


@dataclass
class TransitionRecord:
    """One training unit: an input-sequence view plus the next transition.

    origin_state 1 records exist only in semi-competing mode; their matrix has
    the hospitalization indicator column switched on in an appended row at the
    first-event month, and their clock restarts at the first event.
    """

    patient_id: str
    origin_state: int
    months: np.ndarray
    matrix: np.ndarray  # (T, d+1); last column is the hospitalization indicator
    mask: np.ndarray
    static: np.ndarray
    time: float
    cause: int


# ---------------------------------------------------------------------------
# ingestion


def load_schema(path) -> list[FeatureMeta]:
    with open(path) as fh:
        raw = json.load(fh)
    return [FeatureMeta(name=e["name"], kind=e["kind"],
                        vocabulary=tuple(e["vocabulary"]) if e.get("vocabulary") else None)
            for e in raw]


def save_schema(features: list[FeatureMeta], path):
    entries = []
    for f in features:
        e = {"name": f.name, "kind": f.kind}
        if f.vocabulary:
            e["vocabulary"] = list(f.vocabulary)
        entries.append(e)
    with open(path, "w") as fh:
        json.dump(entries, fh, indent=1)


def aggregate_monthly(records: list[RawRecord], features: list[FeatureMeta]):
    """Collapse one patient's raw records into a monthly (months, matrix, mask).

    Continuous values recorded several times in a month are averaged;
    categorical and binary codes take the last value recorded in the month.
    Only months with at least one record produce a row.
    """
    by_name = {f.name: (j, f) for j, f in enumerate(features)}
    buckets: dict[int, dict[int, list[float]]] = {}
    for rec in records:
        if rec.feature not in by_name:
            raise SchemaError(f"unknown feature {rec.feature!r} for patient {rec.patient_id!r}")
        if not np.isfinite(rec.month_index) or rec.month_index < 0:
            raise ValidationError(f"bad month index {rec.month_index!r}")
        j, meta = by_name[rec.feature]
        buckets.setdefault(int(rec.month_index), {}).setdefault(j, []).append(meta.encode(rec.value))
    months = np.array(sorted(buckets), dtype=int)
    d = len(features)
    matrix = np.zeros((len(months), d))
    mask = np.zeros((len(months), d), dtype=bool)
    for r, m in enumerate(months):
        for j, values in buckets[m].items():
            meta = features[j]
            matrix[r, j] = float(np.mean(values)) if meta.kind == "continuous" else values[-1]
            mask[r, j] = True
    return months, matrix, mask


def _parse_patient(obj, features, static_names, line_no):
    try:
        pid = obj["id"]
        records = [RawRecord(pid, int(r["month"]), name, value)
                   for r in obj["records"] for name, value in r["features"].items()]
        months, matrix, mask = aggregate_monthly(records, features)
        out = obj["outcome"]
        second = out.get("second")
        second_event = None
        if second is not None:
            second_event = SecondEvent(time=float(second["time"]), cause=int(second.get("cause", 2)))
        outcome = Outcome(cause=int(out["cause"]), time=float(out["time"]), second_event=second_event)
        static = np.array([float(obj["static"][name]) for name in static_names])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed patient object on line {line_no}: {exc}")
    return PatientSequence(pid, months, matrix, mask, static, outcome)


def load_cohort(path, schema: list[FeatureMeta], risk_mode: str = "semi-competing") -> Cohort:
    """Read a JSONL cohort file, one patient object per line."""
    sequences = []
    static_names: list[str] | None = None
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON on line {line_no}: {exc}")
            if static_names is None:
                static_names = list(obj.get("static", {}))
            sequences.append(_parse_patient(obj, schema, static_names, line_no))
    if not sequences:
        raise ParseError(f"no patients found in {path}")
    horizon = max(_total_followup(s.outcome) for s in sequences)
    grid = TimeGrid.monthly(horizon)
    return Cohort(sequences, list(schema), static_names or [], grid, risk_mode)


def _total_followup(outcome: Outcome) -> float:
    extra = outcome.second_event.time if outcome.second_event else 0.0
    return outcome.time + extra


def save_cohort(cohort: Cohort, path):
    """Write the JSONL form read by load_cohort (stable key order)."""
    with open(path, "w") as fh:
        for seq in cohort.sequences:
            records = []
            for r, m in enumerate(seq.months):
                feats = {f.name: f.decode(seq.matrix[r, j])
                         for j, f in enumerate(cohort.features) if seq.mask[r, j]}
                records.append({"month": int(m), "features": feats})
            out = seq.outcome
            second = None
            if out.second_event is not None:
                second = {"time": out.second_event.time}
                if out.second_event.cause != 2:
                    second["cause"] = out.second_event.cause
            obj = {
                "id": seq.patient_id,
                "static": {n: float(v) for n, v in zip(cohort.static_names, seq.static)},
                "records": records,
                "outcome": {"cause": out.cause, "time": out.time, "second": second},
            }
            fh.write(json.dumps(obj) + "\n")


# ---------------------------------------------------------------------------
# preprocessing


def impute_and_scale(cohort: Cohort, fit_ids) -> Cohort:
    """Fill missing entries and standardize continuous features.

    All statistics come from the fit split only, so per-fold refitting cannot
    leak across cross-validation folds. Continuous features are centered on
    the fit-split mean and divided by its population std (1 for constant
    features); categorical gaps take the fit-split mode; binary codes default
    to 0. Static continuous covariates are standardized the same way.
    """
    fit_ids = set(fit_ids)
    unknown = fit_ids - set(cohort.ids())
    if unknown:
        raise ValidationError(f"fit ids not in cohort: {sorted(unknown)[:3]}")
    fit_seqs = [s for s in cohort.sequences if s.patient_id in fit_ids]
    if not fit_seqs:
        raise ValidationError("fit split is empty")

    fitted: list[FeatureMeta] = []
    for j, meta in enumerate(cohort.features):
        observed = np.concatenate([s.matrix[s.mask[:, j], j] for s in fit_seqs]) if fit_seqs else np.array([])
        new = replace(meta)
        if meta.kind == "continuous":
            if observed.size:
                new.mean = float(observed.mean())
                std = float(observed.std())
                new.std = std if std > 0 else 1.0
            else:
                new.mean, new.std = 0.0, 1.0
        elif meta.kind == "categorical":
            if observed.size:
                codes, counts = np.unique(observed.astype(int), return_counts=True)
                new.mode = float(codes[np.argmax(counts)])
            else:
                new.mode = 0.0
        fitted.append(new)

    statics = np.stack([s.static for s in fit_seqs]) if cohort.static_names else np.zeros((len(fit_seqs), 0))
    static_stats = []
    for j in range(statics.shape[1]):
        col = statics[:, j]
        if set(np.unique(col)) <= {0.0, 1.0}:
            static_stats.append((0.0, 1.0))  # binary demographics stay as indicators
        else:
            std = float(col.std())
            static_stats.append((float(col.mean()), std if std > 0 else 1.0))

    new_seqs = []
    for seq in cohort.sequences:
        matrix = seq.matrix.copy()
        for j, meta in enumerate(fitted):
            col = matrix[:, j]
            missing = ~seq.mask[:, j]
            if meta.kind == "continuous":
                col[missing] = meta.mean
                matrix[:, j] = (col - meta.mean) / meta.std
            elif meta.kind == "categorical":
                col[missing] = meta.mode
            else:
                col[missing] = 0.0
        static = seq.static.copy()
        for j, (mu, sd) in enumerate(static_stats):
            static[j] = (static[j] - mu) / sd
        new_seqs.append(replace(seq, matrix=matrix, static=static))
    return Cohort(new_seqs, fitted, list(cohort.static_names), cohort.grid,
                  cohort.risk_mode, static_stats)


def apply_inclusion(cohort: Cohort, min_records: int = 4, max_len: int = 24) -> Cohort:
    """Drop short sequences and truncate long ones to their last max_len months."""
    kept = []
    for seq in cohort.sequences:
        if seq.n_months < min_records:
            continue
        if seq.n_months > max_len:
            seq = replace(seq, months=seq.months[-max_len:],
                          matrix=seq.matrix[-max_len:], mask=seq.mask[-max_len:])
        kept.append(seq)
    return Cohort(kept, cohort.features, list(cohort.static_names), cohort.grid,
                  cohort.risk_mode, cohort.static_stats)


def static_snapshot(seq: PatientSequence, features: list[FeatureMeta] | None = None) -> np.ndarray:
    """Last available value per feature (imputed when never observed) plus
    the static demographics vector."""
    t, d = seq.matrix.shape
    snap = np.empty(d)
    for j in range(d):
        rows = np.nonzero(seq.mask[:, j])[0]
        if rows.size:
            snap[j] = seq.matrix[rows[-1], j]
        elif t:
            snap[j] = seq.matrix[-1, j]  # holds the imputed value after preprocessing
        else:
            snap[j] = features[j].fill_value if features else 0.0
    return np.concatenate([snap, seq.static])


# ---------------------------------------------------------------------------
# transition expansion


def to_transition_records(cohort: Cohort) -> list[TransitionRecord]:
    """Expand outcomes into per-transition records (Fig: illness-death graph).

    Competing mode yields one origin-0 record per patient. Semi-competing mode
    adds, for every hospitalized patient with a known follow-up, an origin-1
    record whose input gains a row at the event month with the hospitalization
    indicator on and whose outcome is the (possibly censored) death transition.
    """
    semi = cohort.risk_mode == "semi-competing"
    fill = np.array([f.fill_value for f in cohort.features])
    records = []
    for seq in cohort.sequences:
        t = seq.n_months
        base_matrix = np.column_stack([seq.matrix, np.zeros(t)])
        base_mask = np.column_stack([seq.mask, np.ones(t, dtype=bool)])
        out = seq.outcome
        records.append(TransitionRecord(seq.patient_id, 0, seq.months, base_matrix,
                                        base_mask, seq.static, out.time, out.cause))
        if semi and out.cause == 1 and out.second_event is not None:
            event_month = int(seq.months[-1]) + int(np.ceil(out.time))
            extra = np.concatenate([fill, [1.0]])
            extra_mask = np.concatenate([np.zeros(len(fill), dtype=bool), [True]])
            matrix = np.vstack([base_matrix, extra])
            mask = np.vstack([base_mask, extra_mask])
            months = np.concatenate([seq.months, [event_month]])
            records.append(TransitionRecord(seq.patient_id, 1, months, matrix, mask,
                                            seq.static, out.second_event.time,
                                            out.second_event.cause))
    return records
