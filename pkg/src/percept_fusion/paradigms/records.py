"""Running trial blocks and (de)serializing their records."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Optional, Sequence

from ..core import ConfigurationError, DataError, Modality, StimulusEvent, parallel_map, substream
from .observers import ObserverModel
from .trials import Response, Side, Task, TrialSpec, answer_space

CSV_COLUMNS = (
    "trial_id",
    "task",
    "condition",
    "stimuli",
    "correct_answer",
    "cued_side",
    "response",
    "rt_ms",
    "seed_master",
    "seed_index",
)
# trials per work item in run_block; fixed so output never depends on threads
BLOCK_CHUNK = 512


def fmt(x: float) -> str:
    return format(float(x), ".9g")


@dataclass(frozen=True)
class TrialRecord:
    spec: TrialSpec
    response: Response
    rt_ms: Optional[float]
    seed: tuple[int, int]


def run_block(specs: Sequence[TrialSpec], observer: ObserverModel, n_reps: int, master_seed: int) -> list[TrialRecord]:
    """Simulate ``n_reps`` repetitions of every spec.

    Trial ``r * len(specs) + s`` is repetition ``r`` of spec ``s`` and draws
    from ``substream(master_seed, trial_id)``.
    """
    if n_reps < 0:
        raise ConfigurationError("n_reps must be >= 0")
    specs = list(specs)
    for spec in specs:
        observer.check(spec)
    n = n_reps * len(specs)

    def run(start: int) -> list[TrialRecord]:
        out = []
        for tid in range(start, min(start + BLOCK_CHUNK, n)):
            spec = specs[tid % len(specs)]
            rng = substream(master_seed, tid)
            response, rt = observer.simulate(spec, rng)
            out.append(TrialRecord(spec, response, rt, rng.seed))
        return out

    parts = parallel_map(run, range(0, n, BLOCK_CHUNK))
    return [r for part in parts for r in part]


# ---------------------------------------------------------------------------
# serialization


def _event_to_text(e: StimulusEvent) -> str:
    loc = "" if e.location_deg is None else fmt(e.location_deg)
    return "|".join([e.modality.value, fmt(e.onset_ms), loc, str(e.feature_tag), str(e.count), fmt(e.duration_ms)])


def _event_from_text(text: str) -> StimulusEvent:
    parts = text.split("|")
    if len(parts) != 6:
        raise ValueError(f"bad stimulus field {text!r}")
    mod, onset, loc, tag, count, dur = parts
    return StimulusEvent(Modality(mod), float(onset), float(loc) if loc else None, int(tag), int(count), float(dur))


def _label_to_text(value: Optional[Response]) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return fmt(value)
    return str(value)


def parse_label(task: Task, text: str) -> Optional[Response]:
    if text == "":
        return None
    if task is Task.COUNT_REPORT:
        return int(text)
    if task is Task.LOCALIZATION:
        return float(text)
    return text


def _check_response(task: Task, response: Response) -> None:
    space = answer_space(task)
    if space is not None and response not in space:
        raise DataError(f"response {response!r} outside the answer space of task {task.value!r}")


def records_to_csv(records: Sequence[TrialRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for tid, r in enumerate(records):
        s = r.spec
        writer.writerow(
            [
                tid,
                s.task.value,
                s.condition,
                ";".join(_event_to_text(e) for e in s.stimuli),
                _label_to_text(s.correct_answer),
                "" if s.cued_side is None else s.cued_side.value,
                _label_to_text(r.response),
                "" if r.rt_ms is None else fmt(r.rt_ms),
                r.seed[0],
                r.seed[1],
            ]
        )
    return buf.getvalue()


def records_from_csv(text: str) -> list[TrialRecord]:
    """Parse CSV written by :func:`records_to_csv`; errors name the line."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("line 1: empty CSV")
    if tuple(header) != CSV_COLUMNS:
        raise DataError(f"line 1: expected columns {','.join(CSV_COLUMNS)}")
    records = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        try:
            if len(row) != len(CSV_COLUMNS):
                raise ValueError(f"expected {len(CSV_COLUMNS)} fields, got {len(row)}")
            f = dict(zip(CSV_COLUMNS, row))
            task = Task(f["task"])
            stimuli = tuple(_event_from_text(t) for t in f["stimuli"].split(";") if t)
            spec = TrialSpec(
                stimuli,
                task,
                parse_label(task, f["correct_answer"]),
                Side(f["cued_side"]) if f["cued_side"] else None,
                f["condition"],
            )
            response = parse_label(task, f["response"])
            if response is None:
                raise ValueError("missing response")
            _check_response(task, response)
            rt = float(f["rt_ms"]) if f["rt_ms"] else None
            records.append(TrialRecord(spec, response, rt, (int(f["seed_master"]), int(f["seed_index"]))))
        except (ValueError, KeyError) as exc:
            raise DataError(f"line {line}: {exc}") from None
    if not records:
        raise DataError("line 2: no trial rows")
    return records


def record_to_dict(r: TrialRecord, trial_id: int) -> dict:
    s = r.spec
    return {
        "trial_id": trial_id,
        "task": s.task.value,
        "condition": s.condition,
        "stimuli": [
            {
                "modality": e.modality.value,
                "onset_ms": e.onset_ms,
                "location_deg": e.location_deg,
                "feature_tag": e.feature_tag,
                "count": e.count,
                "duration_ms": e.duration_ms,
            }
            for e in s.stimuli
        ],
        "correct_answer": s.correct_answer,
        "cued_side": None if s.cued_side is None else s.cued_side.value,
        "response": r.response,
        "rt_ms": r.rt_ms,
        "seed": list(r.seed),
    }


def record_from_dict(d: dict) -> TrialRecord:
    task = Task(d["task"])
    stimuli = tuple(
        StimulusEvent(
            Modality(e["modality"]),
            e["onset_ms"],
            e.get("location_deg"),
            e.get("feature_tag", 0),
            e.get("count", 1),
            e.get("duration_ms", 0.0),
        )
        for e in d["stimuli"]
    )
    cued = d.get("cued_side")
    spec = TrialSpec(stimuli, task, d.get("correct_answer"), Side(cued) if cued else None, d.get("condition", ""))
    return TrialRecord(spec, d["response"], d.get("rt_ms"), tuple(d["seed"]))


def records_to_json(records: Sequence[TrialRecord]) -> str:
    return json.dumps([record_to_dict(r, i) for i, r in enumerate(records)], indent=1, sort_keys=True) + "\n"


def records_from_json(text: str) -> list[TrialRecord]:
    try:
        return [record_from_dict(d) for d in json.loads(text)]
    except (ValueError, KeyError, TypeError) as exc:
        raise DataError(f"bad record JSON: {exc}") from None
