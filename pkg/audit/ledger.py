from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List

import numpy as np
import pandas as pd
from loguru import logger


class MissingChannelError(KeyError):
    pass


@dataclass(frozen=True)
class LedgerRow:
    """Power channels at one time; residuals are recomputed from them on read."""
    t: float
    channels: Dict[str, float]

    def residual(self, balance: str) -> float:
        terms = PowerLedger.BALANCES[balance]
        return float(sum(w * self.channels[k] for k, w in terms.items()))

    def scale(self, balance: str) -> float:
        terms = PowerLedger.BALANCES[balance]
        return max(max(abs(self.channels[k]) for k in terms), PowerLedger.FLOOR)

    def relative(self, balance: str) -> float:
        return abs(self.residual(balance)) / self.scale(balance)


class PowerLedger:
    """Signed linear combinations of power channels that must vanish.

    dH_* are centered differences of the stored energies; flux_dB and
    flux_dV are the power entering the fluid through the body and the outer
    boundary, P_W the wrench power ⟨W^b|T^b⟩ into the body.
    """
    BALANCES = {
        "fluid": {"dH_f": 1.0, "dissipation": 1.0, "flux_dB": -1.0, "flux_dV": -1.0},
        "rigid": {"dH_b": 1.0, "P_W": -1.0},
        "coupled": {"dH_f": 1.0, "dH_b": 1.0, "dissipation": 1.0, "flux_dV": -1.0},
    }
    FLOOR = 1e-12
    ENERGIES = {"dH_f": "H_f", "dH_b": "H_b"}

    def _needed(self, balance: str) -> List[str]:
        cols = []
        for k in self.BALANCES[balance]:
            cols.append(self.ENERGIES.get(k, k))
        return cols

    def available(self, history: pd.DataFrame) -> List[str]:
        return [b for b in self.BALANCES if all(c in history.columns for c in self._needed(b))]

    def rows(self, history: pd.DataFrame, balances: Iterable[str] | None = None) -> List[LedgerRow]:
        balances = self.available(history) if balances is None else list(balances)
        for b in balances:
            if b not in self.BALANCES:
                raise MissingChannelError(f"unknown balance '{b}' (have {sorted(self.BALANCES)})")
            missing = [c for c in self._needed(b) if c not in history.columns]
            if missing:
                raise MissingChannelError(f"balance '{b}' needs channels {missing}")
        if "t" not in history.columns:
            raise MissingChannelError("history has no 't' column")
        if len(history) < 3:
            return []

        t = history["t"].to_numpy(dtype=float)
        out: List[LedgerRow] = []
        for k in range(1, len(history) - 1):
            span = t[k + 1] - t[k - 1]
            channels: Dict[str, float] = {}
            for col in history.columns:
                if col != "t" and pd.api.types.is_numeric_dtype(history[col]):
                    channels[col] = float(history[col].iloc[k])
            for rate, energy in self.ENERGIES.items():
                if energy in history.columns:
                    e = history[energy].to_numpy(dtype=float)
                    channels[rate] = float((e[k + 1] - e[k - 1]) / span)
            out.append(LedgerRow(float(t[k]), channels))
        return out

    def frame(self, rows: List[LedgerRow], balances: Iterable[str]) -> pd.DataFrame:
        records = []
        for row in rows:
            rec = {"t": row.t, **row.channels}
            for b in balances:
                rec[f"residual_{b}"] = row.residual(b)
                rec[f"relative_{b}"] = row.relative(b)
            if {"dH_f", "flux_dB", "flux_dV"} <= row.channels.keys():
                supply = row.channels["flux_dB"] + row.channels["flux_dV"]
                rec["fluid_supply_ok"] = bool(row.channels["dH_f"] <= supply + self.FLOOR + 1e-6 * abs(supply))
            records.append(rec)
        return pd.DataFrame.from_records(records)

    def audit(self, history: pd.DataFrame, balances: Iterable[str] | None = None):
        """Ledger frame plus {balance_id: {"max_residual", "max_relative"}}."""
        balances = self.available(history) if balances is None else list(balances)
        rows = self.rows(history, balances)
        frame = self.frame(rows, balances)
        summary = {}
        for b in balances:
            if len(frame):
                worst = float(frame[f"residual_{b}"].abs().max())
                rel = float(frame[f"relative_{b}"].max())
            else:
                worst, rel = 0.0, 0.0
            summary[b] = {"max_residual": worst, "max_relative": rel}
            logger.info(f"Balance {b}: max residual {worst:.3e} (relative {rel:.3e})")
        if "dissipation" in frame.columns and len(frame):
            worst = float(frame["dissipation"].min())
            if worst < -1e-12:
                logger.warning(f"Dissipation channel went negative: {worst:.3e}")
        return frame, summary


def power_ledger(history: pd.DataFrame, balances: Iterable[str] | None = None):
    return PowerLedger().audit(history, balances)


def recompute(frame: pd.DataFrame, balance: str) -> np.ndarray:
    """Residual column rebuilt from the channel columns of a ledger frame."""
    terms = PowerLedger.BALANCES[balance]
    missing = [k for k in terms if k not in frame.columns]
    if missing:
        raise MissingChannelError(f"ledger lacks channels {missing}")
    return sum(w * frame[k].to_numpy(dtype=float) for k, w in terms.items())
