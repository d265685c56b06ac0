"""Exception hierarchy. Every domain failure derives from TrajAnomalyError."""

from __future__ import annotations

from dataclasses import dataclass


class TrajAnomalyError(Exception):
    """Base class for domain errors (CLI maps these to exit code 1)."""


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class ConfigError(TrajAnomalyError):
    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))

    @property
    def codes(self) -> list[str]:
        return [v.code for v in self.violations]


class ParseError(TrajAnomalyError):
    def __init__(self, line: int, reason: str):
        self.line = line
        super().__init__(f"line {line}: {reason}")


class DuplicateFrame(TrajAnomalyError):
    def __init__(self, track_id: int, frame: int):
        self.track_id, self.frame = track_id, frame
        super().__init__(f"track {track_id} has more than one row for frame {frame}")


class ConflictingLabel(TrajAnomalyError):
    def __init__(self, track_id: int):
        self.track_id = track_id
        super().__init__(f"track {track_id} carries both labels 0 and 1")


class InconsistentHorizon(TrajAnomalyError):
    pass


class InsufficientHistory(TrajAnomalyError):
    pass


class WindowExceedsHorizon(TrajAnomalyError):
    pass


class MissingActualFrames(TrajAnomalyError):
    pass


class DegenerateChord(TrajAnomalyError):
    pass


class SingleClassCorpus(TrajAnomalyError):
    pass


class OutOfOrderFrames(TrajAnomalyError):
    pass


class NonPositiveBuffer(TrajAnomalyError):
    pass
