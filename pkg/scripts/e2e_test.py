#!/usr/bin/env python3
"""
End-to-end run of every built-in scenario at reduced size.
Flow per scenario: config → simulate → history/ledger/summary on disk → checks.
"""
import filecmp
import json
import os
import shutil
import sys
import tempfile
from pathlib import Path

# Setup paths
ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(ROOT))

from loguru import logger

from orchestrator.config import ConfigError, config_from_dict
from orchestrator.engine import EXIT_OK, ScenarioRunner

# reduced sizes; everything else comes from the scenario defaults
REDUCED = {
    "identities": {},
    "taylor-green": {"mesh": {"res": 16}, "t_end": 0.2},
    "lid-cavity": {"mesh": {"res": 8}, "t_end": 0.05},
    "free-body": {"t_end": 1.0},
    "falling-body-vacuum": {"t_end": 0.2},
    "prescribed-cylinder": {"t_end": 0.05},
    "fsi-cylinder-2d": {"t_end": 0.05},
    "reynolds-translate": {},
}


class E2ETest:
    def __init__(self, keep: bool = False):
        self.out = tempfile.mkdtemp(prefix="portflow-e2e-")
        self.keep = keep
        self.results = {}

    def log(self, stage, status, msg=""):
        icon = "✓" if status else "✗"
        print(f"{icon} [{stage}] {msg}")
        return status

    def _config(self, name: str, suffix: str = ""):
        raw = {"scenario": name, "out_dir": os.path.join(self.out, name + suffix), **REDUCED[name]}
        return config_from_dict(raw)

    def run_scenario(self, name: str):
        try:
            config = self._config(name)
            code = ScenarioRunner(config).run()
            with open(os.path.join(config.out_dir, "summary.json"), encoding="utf-8") as f:
                summary = json.load(f)
            failed = [k for k, v in summary["checks"].items() if not v["passed"]]
            msg = f"exit={code} checks={len(summary['checks'])}"
            if failed:
                msg += f" failed={failed}"
            return self.log(name, code == EXIT_OK, msg)
        except Exception as e:
            return self.log(name, False, f"Error: {e}")

    def test_determinism(self):
        """Same config and seed give identical bytes."""
        try:
            a, b = self._config("free-body", "-a"), self._config("free-body", "-b")
            ScenarioRunner(a).run()
            ScenarioRunner(b).run()
            same = all(
                filecmp.cmp(os.path.join(a.out_dir, f), os.path.join(b.out_dir, f), shallow=False)
                for f in ("history.csv", "rigid.csv", "ledger.csv")
            )
            return self.log("determinism", same, "free-body outputs bit-identical" if same else "outputs differ")
        except Exception as e:
            return self.log("determinism", False, f"Error: {e}")

    def test_bad_config(self):
        try:
            config_from_dict({"scenario": "taylor-green", "physics": {"rho": -1.0}})
            return self.log("config", False, "negative density accepted")
        except ConfigError as e:
            return self.log("config", e.path == "physics.rho", f"rejected with key path {e.path}")

    def cleanup(self):
        if self.keep:
            print(f"\nOutputs kept in {self.out}")
            return
        shutil.rmtree(self.out, ignore_errors=True)
        print("\n✓ Cleanup complete")

    def run_all(self):
        print("=" * 70)
        print("portflow end-to-end run")
        print("=" * 70)
        print()

        results = [(name, self.run_scenario(name)) for name in REDUCED]
        results.append(("determinism", self.test_determinism()))
        results.append(("config", self.test_bad_config()))

        print()
        print("=" * 70)
        passed = sum(1 for _, r in results if r)
        total = len(results)
        print(f"RESULTS: {passed}/{total} passed ({100.0 * passed / total:.1f}%)")
        print("=" * 70)
        if passed == total:
            print("✓ ALL STAGES PASSED")
        else:
            print("✗ SOME STAGES FAILED:")
            for name, result in results:
                if not result:
                    print(f"  - {name}")
        self.cleanup()
        return passed == total


def main():
    logger.remove()
    logger.add(sys.stderr, level=os.getenv("PORTFLOW_LOG_LEVEL", "WARNING"))
    test = E2ETest(keep="--keep" in sys.argv)
    sys.exit(0 if test.run_all() else 1)


if __name__ == "__main__":
    main()
