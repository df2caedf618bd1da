"""Jobs and workload generation."""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import ParseError, ValidationError

WORKLOAD_HEADER = "job_id,execution_length_hours,memory_footprint_gb"

_FLOAT_RE = re.compile(r"^\d+(\.\d+)?$")


@dataclass(frozen=True)
class Job:
    job_id: str
    execution_length_hours: float
    memory_footprint_gb: float

    def __post_init__(self):
        if not self.job_id:
            raise ValidationError("job_id must be non-empty")
        if self.execution_length_hours <= 0:
            raise ValidationError(f"{self.job_id}: execution_length_hours must be > 0")
        if self.memory_footprint_gb <= 0:
            raise ValidationError(f"{self.job_id}: memory_footprint_gb must be > 0")


@dataclass(frozen=True)
class WorkloadSpec:
    """Recipe for a random workload: independent uniform draws from two choice lists."""

    count: int
    length_choices_hours: tuple[float, ...]
    memory_choices_gb: tuple[float, ...]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "length_choices_hours", tuple(self.length_choices_hours))
        object.__setattr__(self, "memory_choices_gb", tuple(self.memory_choices_gb))
        if self.count < 0:
            raise ValidationError("count must be >= 0")
        if not self.length_choices_hours or not self.memory_choices_gb:
            raise ValidationError("choice lists must be non-empty")
        if any(x <= 0 for x in self.length_choices_hours + self.memory_choices_gb):
            raise ValidationError("choices must be > 0")


def generate_workload(spec: WorkloadSpec) -> list[Job]:
    """Draw ``count`` jobs deterministically from ``spec.seed``."""
    rng = random.Random(spec.seed)
    jobs = []
    for i in range(spec.count):
        length = rng.choice(spec.length_choices_hours)
        memory = rng.choice(spec.memory_choices_gb)
        jobs.append(Job(f"job-{i + 1:04d}", length, memory))
    return jobs


def load_workload(path) -> list[Job]:
    """Read a workload CSV. An empty body after the header is a valid empty workload."""
    path = Path(path)
    with open(path, encoding="utf-8-sig", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != WORKLOAD_HEADER:
        raise ParseError(f"expected header {WORKLOAD_HEADER!r}", path=path, line=1)
    jobs: list[Job] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        cells = raw.split(",")
        if len(cells) != 3:
            raise ParseError(f"expected 3 columns, got {len(cells)}", path=path, line=lineno)
        job_id, length_s, memory_s = (c.strip() for c in cells)
        if not _FLOAT_RE.match(length_s) or not _FLOAT_RE.match(memory_s):
            raise ValidationError(f"{path}: line {lineno}: non-numeric or negative field")
        length, memory = float(length_s), float(memory_s)
        if not job_id or length <= 0 or memory <= 0:
            raise ValidationError(f"{path}: line {lineno}: fields must be positive and id non-empty")
        if job_id in seen:
            raise ValidationError(f"{path}: line {lineno}: duplicate job_id {job_id!r}")
        seen.add(job_id)
        jobs.append(Job(job_id, length, memory))
    return jobs


def write_workload_csv(jobs: list[Job], path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(WORKLOAD_HEADER + "\n")
        for job in jobs:
            fh.write(f"{job.job_id},{job.execution_length_hours!r},{job.memory_footprint_gb!r}\n")
