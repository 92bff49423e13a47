"""Trajectory records and their CSV serialization.

One row per hybrid-time sample: flow samples advance t by the step size,
jumps repeat t with the jump counter incremented.  Floats are written with
17 significant digits so a parsed file reproduces the log bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CSV_HEADER = "t,j,q1,q2,e1,e2,wx,wy,wz,taux,tauy,tauz,V,U1,U2,mu1,mu2"

_FLOAT_COLS = ("t", "e1", "e2", "wx", "wy", "wz", "taux", "tauy", "tauz",
               "V", "U1", "U2", "mu1", "mu2")
_INT_COLS = ("j", "q1", "q2")


@dataclass
class TrajectoryLog:
    """Columnar closed-loop record; field names match the CSV header."""

    t: np.ndarray
    j: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    omega: np.ndarray   # (n, 3) -> wx, wy, wz
    tau: np.ndarray     # (n, 3) -> taux, tauy, tauz
    v_lyap: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    mu1: np.ndarray
    mu2: np.ndarray
    zeno: bool = False
    notes: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def jump_rows(self) -> np.ndarray:
        """Indices of records written by a jump (j incremented, t repeated)."""
        return np.nonzero(np.diff(self.j) > 0)[0] + 1

    @property
    def n_jumps(self) -> int:
        return int(self.j[-1]) if len(self) else 0

    def columns(self) -> dict[str, np.ndarray]:
        return {
            "t": self.t, "j": self.j, "q1": self.q1, "q2": self.q2,
            "e1": self.e1, "e2": self.e2,
            "wx": self.omega[:, 0], "wy": self.omega[:, 1], "wz": self.omega[:, 2],
            "taux": self.tau[:, 0], "tauy": self.tau[:, 1], "tauz": self.tau[:, 2],
            "V": self.v_lyap, "U1": self.u1, "U2": self.u2,
            "mu1": self.mu1, "mu2": self.mu2,
        }


def write_csv(log: TrajectoryLog, path: str) -> None:
    cols = log.columns()
    names = CSV_HEADER.split(",")
    lines = [f"# {note}" for note in log.notes]
    lines.append(CSV_HEADER)
    n = len(log)
    rendered = []
    for name in names:
        c = cols[name]
        if name in _INT_COLS:
            rendered.append([str(int(x)) for x in c])
        else:
            rendered.append([format(float(x), ".17g") for x in c])
    for i in range(n):
        lines.append(",".join(col[i] for col in rendered))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path: str) -> TrajectoryLog:
    notes: list[str] = []
    rows: list[list[str]] = []
    header = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                notes.append(line[1:].strip())
                continue
            if header is None:
                if line != CSV_HEADER:
                    raise ValueError(f"unexpected CSV header: {line!r}")
                header = line
                continue
            rows.append(line.split(","))
    if header is None:
        raise ValueError("no CSV header found")
    names = CSV_HEADER.split(",")
    if any(len(r) != len(names) for r in rows):
        raise ValueError("row with wrong column count")
    by_name = {name: [r[i] for r in rows] for i, name in enumerate(names)}
    col = {
        name: (np.array([int(x) for x in by_name[name]], dtype=int)
               if name in _INT_COLS
               else np.array([float(x) for x in by_name[name]]))
        for name in names
    }
    return TrajectoryLog(
        t=col["t"], j=col["j"], q1=col["q1"], q2=col["q2"],
        e1=col["e1"], e2=col["e2"],
        omega=np.column_stack([col["wx"], col["wy"], col["wz"]]),
        tau=np.column_stack([col["taux"], col["tauy"], col["tauz"]]),
        v_lyap=col["V"], u1=col["U1"], u2=col["U2"],
        mu1=col["mu1"], mu2=col["mu2"],
        notes=notes,
    )


def time_to_threshold(log: TrajectoryLog, threshold: float, column: str = "e2") -> float | None:
    """First time at which the column drops strictly below the threshold."""
    values = log.columns()[column]
    idx = np.nonzero(values < threshold)[0]
    if idx.size == 0:
        return None
    return float(log.t[idx[0]])
