"""Per-counter run metrics and their CSV form.

The column set and order are fixed: k, avg_updates, dist, dual, feas,
residual. Metadata rides in leading '# key: value' comment lines. Floats are
serialized with repr (shortest round-trip form), output is UTF-8 with LF
line endings, so identical runs produce byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["RunRecord", "COLUMNS"]

COLUMNS = ("k", "avg_updates", "dist", "dual", "feas", "residual")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass
class RunRecord:
    """Rows keyed by the global event counter k."""

    metadata: dict = field(default_factory=dict)
    avg_updates: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dist: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dual: np.ndarray = field(default_factory=lambda: np.zeros(0))
    feas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    residual: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self) -> int:
        return int(self.avg_updates.shape[0])

    def to_csv_text(self) -> str:
        lines = [f"# {key}: {_fmt(val)}" for key, val in self.metadata.items()]
        lines.append(",".join(COLUMNS))
        for k in range(len(self)):
            lines.append(
                f"{k},{_fmt(self.avg_updates[k])},{_fmt(self.dist[k])},"
                f"{_fmt(self.dual[k])},{_fmt(self.feas[k])},{_fmt(self.residual[k])}"
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv_text())
        return path
