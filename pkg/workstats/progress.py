"""
Sweep progress on stderr, so that stdout stays free for reports
"""
import sys
import time
from dataclasses import dataclass, field

from workstats.config import CONFIG

_BLUE = "\x1B[34m"
_RESET = "\x1B[0m"


def announce(title: str):
    """Prints a step header, colored when stderr is a terminal."""
    marker = f"{_BLUE}::{_RESET}" if sys.stderr.isatty() else "::"
    print(f"{marker} {title}", file=sys.stderr)


@dataclass
class SweepProgress:
    """
    Counts the finished points of one sweep. With CONFIG.verbose every point is reported,
    otherwise only the last one, together with the wall time since the sweep started.
    """
    title: str
    total: int
    done: int = 0
    started: float = field(default_factory=time.monotonic)

    def __post_init__(self):
        announce(f"{self.title} ({self.total} points)")

    @property
    def elapsed(self) -> float:
        return time.monotonic() - self.started

    def advance(self, label: str):
        self.done += 1
        if CONFIG.verbose or self.done == self.total:
            print(f" - ({self.done}/{self.total}) {label} [{self.elapsed:.1f} s]", file=sys.stderr)
