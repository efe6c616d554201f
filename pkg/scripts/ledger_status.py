#!/usr/bin/env python3
import argparse
import json
import os
import sys
from pathlib import Path

ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(ROOT))

import pandas as pd

from audit.ledger import PowerLedger, recompute

parser = argparse.ArgumentParser(description="portflow run status (ledger and checks of one output directory)")
parser.add_argument("out_dir", help="scenario output directory")
parser.add_argument("--worst", type=int, default=int(os.getenv("WORST_N", "3")), help="worst ledger rows to show per balance (default: 3)")
args = parser.parse_args()

summary_path = os.path.join(args.out_dir, "summary.json")
ledger_path = os.path.join(args.out_dir, "ledger.csv")
if not os.path.exists(summary_path):
    print(f"✗ no summary.json in {args.out_dir}")
    sys.exit(1)
with open(summary_path, encoding="utf-8") as f:
    summary = json.load(f)

print("=" * 60)
print(f"RUN STATUS: {summary['scenario']} (seed {summary['seed']})")
print("=" * 60)
if "error" in summary:
    print(f"Aborted: {summary['error']}")

print("\nChecks:")
for name, check in sorted(summary["checks"].items()):
    icon = "✓" if check["passed"] else "✗"
    print(f"  {icon} {name:28} {check['value']:.3e} (tol {check['tol']:.0e})")

if os.path.exists(ledger_path):
    frame = pd.read_csv(ledger_path)
    print(f"\nLedger ({len(frame)} rows):")
    for balance, worst in sorted(summary["balances"].items()):
        # residual columns must be reproducible from the channel columns
        rebuilt = recompute(frame, balance)
        gap = float((rebuilt - frame[f"residual_{balance}"]).abs().max()) if len(frame) else 0.0
        rel = summary["relative"].get(balance, float("nan"))
        print(f"  {balance:8} max {worst:.3e}  relative {rel:.3e}  rebuild gap {gap:.1e}")
        top = frame.reindex(frame[f"relative_{balance}"].sort_values(ascending=False).index).head(args.worst)
        for _, row in top.iterrows():
            terms = ", ".join(f"{k}={row[k]:+.3e}" for k in PowerLedger.BALANCES[balance])
            print(f"      t={row['t']:.4f} {terms}")
    if "fluid_supply_ok" in frame.columns:
        bad = int((~frame["fluid_supply_ok"].astype(bool)).sum())
        print(f"\nKinetic energy above boundary supply on {bad} rows")
else:
    print("\nNo ledger.csv (scenario has no power channels)")

status = "PASSED" if summary["passed"] else "FAILED"
print(f"\nStatus: {status}")
print("=" * 60)
