import os
from typing import Any, Dict

import numpy as np
from loguru import logger

from audit.ledger import MissingChannelError, PowerLedger
from orchestrator.checks import Checks
from orchestrator.config import ScenarioConfig
from orchestrator.scenarios import SCENARIOS, Outcome
from storage.cochain_io import write_cochain
from storage.history_writer import HistoryWriter

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOLERANCE = 3


class ScenarioRunner:
    """Runs one scenario end to end: simulate, write outputs, audit, judge."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.scenario = SCENARIOS[config.scenario]
        self.checks = Checks()
        self.ledger = PowerLedger()
        self.writer = HistoryWriter(config.out_dir)
        self.WRITE_COCHAINS = os.getenv("PORTFLOW_WRITE_COCHAINS", "1") != "0"
        self.summary: Dict[str, Any] = {}

    def _audit(self, outcome: Outcome) -> Dict[str, Dict[str, float]]:
        if outcome.history is None or not outcome.balances:
            return {}
        frame, summary = self.ledger.audit(outcome.history, outcome.balances)
        self.writer.frame("ledger.csv", frame)
        for balance, (check, key) in outcome.enforce.items():
            self.checks.record(check, summary[balance][key])
        return summary

    def _write(self, outcome: Outcome) -> None:
        if outcome.history is not None:
            self.writer.frame("history.csv", outcome.history)
        if outcome.rigid is not None:
            self.writer.rigid(*outcome.rigid)
        if self.WRITE_COCHAINS:
            for name, form in outcome.cochains.items():
                write_cochain(self.writer.path(f"{name}.csv"), form)

    def run(self) -> int:
        cfg = self.config
        logger.info(f"Running scenario '{cfg.scenario}' (seed {cfg.seed}, dt {cfg.dt}, t_end {cfg.t_end}) into {cfg.out_dir}")
        rng = np.random.default_rng(cfg.seed)
        try:
            outcome = self.scenario.run(cfg, rng, self.checks)
            self._write(outcome)
            balances = self._audit(outcome)
        except MissingChannelError as e:
            logger.error(f"Ledger failed: {e}")
            return EXIT_TOLERANCE
        except RuntimeError as e:
            logger.error(f"Scenario '{cfg.scenario}' aborted: {e}")
            self.writer.json("summary.json", self._summary({}, failed=str(e)))
            return EXIT_TOLERANCE

        self.summary = self._summary(balances)
        self.writer.json("summary.json", self.summary)
        if self.checks.passed:
            logger.info(f"✓ {cfg.scenario}: {len(self.checks.results)} checks passed")
            return EXIT_OK
        failed = [r.name for r in self.checks.results if not r.passed]
        logger.error(f"✗ {cfg.scenario}: failed checks {failed}")
        return EXIT_TOLERANCE

    def _summary(self, balances: Dict[str, Dict[str, float]], failed: str | None = None) -> Dict[str, Any]:
        out = {
            "scenario": self.config.scenario,
            "seed": self.config.seed,
            "balances": {b: s["max_residual"] for b, s in balances.items()},
            "relative": {b: s["max_relative"] for b, s in balances.items()},
            "checks": self.checks.as_dict(),
            "passed": failed is None and self.checks.passed,
        }
        if failed is not None:
            out["error"] = failed
        return out


def run_scenario(config: ScenarioConfig) -> int:
    return ScenarioRunner(config).run()
