import json
import os
from typing import Any, Dict, List, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from rigidbody.dynamics import RigidBodyState, hamiltonian_b

FLOAT_FORMAT = "%.17g"
RIGID_COLUMNS = (
    ["t"] + [f"R{i}{j}" for i in range(3) for j in range(3)] + ["xi0", "xi1", "xi2"] + [f"p{k}" for k in range(6)] + ["H_b"]
)


def rigid_row(t: float, state: RigidBodyState) -> List[float]:
    return [float(t), *state.pose.R.ravel(), *state.pose.xi, *state.p, hamiltonian_b(state)]


def rigid_frame(times: Sequence[float], states: Sequence[RigidBodyState]) -> pd.DataFrame:
    """`t, R(9), xi(3), p(6), H_b` per step."""
    return pd.DataFrame([rigid_row(t, s) for t, s in zip(times, states)], columns=RIGID_COLUMNS)


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


class HistoryWriter:
    """Writes run outputs into one directory; same inputs give identical bytes."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.written: List[str] = []

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def frame(self, name: str, df: pd.DataFrame) -> str:
        target = self.path(name)
        df.to_csv(target, index=False, float_format=FLOAT_FORMAT)
        self.written.append(target)
        logger.debug(f"Wrote {len(df)} rows to {target}")
        return target

    def json(self, name: str, payload: Dict[str, Any]) -> str:
        target = self.path(name)
        with open(target, "w", encoding="utf-8") as f:
            json.dump(_plain(payload), f, indent=2, sort_keys=True)
            f.write("\n")
        self.written.append(target)
        return target

    def rigid(self, times: Sequence[float], states: Sequence[RigidBodyState]) -> str:
        return self.frame("rigid.csv", rigid_frame(times, states))
