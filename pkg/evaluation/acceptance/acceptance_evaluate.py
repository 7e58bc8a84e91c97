import time
from datetime import datetime
from pathlib import Path

import mlflow
import pandas as pd
from dotenv import load_dotenv
from rich.console import Console
from rich.table import Table

from evaluation.acceptance.acceptance_checks import CHECKS
from evaluation.data import load_inputs

load_dotenv()
console = Console()

OUTPUT_DIR = Path(__file__).parents[1] / "data/acceptance/outputs"


def acceptance_cases() -> list[dict]:
    """Flattens the category-keyed suite file into tagged cases."""
    return [
        {**case, "category": category}
        for category, cases in load_inputs("acceptance", "acceptance_suites").items()
        for case in cases
    ]


class AcceptanceEvaluator:
    """
    Runs the acceptance suites against the simulator:
      phase        — variance algebra, pipeline closure, length scaling, PSD slope
      polarization — wind power law closure, Rayleigh mean
      delay        — thermal slope and differential residual
      protocol     — codec, jitter, BER, loss-not-error, TDI lock
      determinism  — byte-identical reports
    """

    def __init__(self, test_cases=None, skip: set[str] | None = None):
        self.test_cases = [tc for tc in (test_cases or []) if tc["id"] not in (skip or set())]
        self.df = pd.DataFrame()

    # ══════════════════════════════════════════════════════════════════════════
    # PHASE 1 — COLLECT
    # ══════════════════════════════════════════════════════════════════════════

    def collect(self) -> pd.DataFrame:
        """Runs every check and records its value, target, verdict and runtime."""
        console.print(f"\n[bold cyan]── Phase 1 : Collect ({len(self.test_cases)} checks) ──────────────[/]")

        rows = []
        for i, tc in enumerate(self.test_cases):
            console.print(f"  [{i+1:02d}/{len(self.test_cases)}] {tc['description']}")
            check = CHECKS[tc["id"]]

            start = time.time()
            try:
                result = check(**(tc.get("params") or {}))
            except Exception as exc:
                result = {"value": float("nan"), "target": "", "pass": False, "details": f"{type(exc).__name__}: {exc}"}
            runtime = time.time() - start

            console.print(
                f"         {'✅' if result['pass'] else '❌'} value=[bold]{result['value']:.6g}[/]  "
                f"runtime={runtime:.1f}s  {result['details']}"
            )
            rows.append({"id": tc["id"], "category": tc["category"], **result, "runtime": runtime})

        self.df = pd.DataFrame(rows)
        console.print(f"\n  ✅ {int(self.df['pass'].sum())}/{len(self.df)} checks passed")
        return self.df

    # ══════════════════════════════════════════════════════════════════════════
    # PHASE 2 — REPORT
    # ══════════════════════════════════════════════════════════════════════════

    def _run_evaluation(self) -> tuple[pd.DataFrame, float, bool]:
        if self.df.empty:
            raise ValueError("empty DataFrame: call collect() before _run_evaluation()")

        OUTPUT_DIR.mkdir(parents=True, exist_ok=True)
        csv_path = OUTPUT_DIR / "acceptance.csv"
        self.df.to_csv(csv_path, index=False)

        pass_rate = float(self.df["pass"].mean())
        all_pass = bool(self.df["pass"].all())
        records = self.df.to_dict(orient="records")

        mlflow.set_experiment("FiberSim_Acceptance")
        run_name = f"Acceptance_{datetime.now().strftime('%Y%m%d_%H%M%S')}"

        with mlflow.start_run(run_name=run_name) as run:
            mlflow.log_metrics(
                {
                    **{f"{r['id']}/value": r["value"] for r in records if pd.notna(r["value"])},
                    **{f"{r['id']}/pass": int(r["pass"]) for r in records},
                    "pass_rate": pass_rate,
                    "all_pass": int(all_pass),
                }
            )
            mlflow.log_artifact(str(csv_path))

            # ── Summary ───────────────────────────────────────────────────
            table = Table(title="Acceptance")
            table.add_column("Category", style="cyan")
            table.add_column("Check")
            table.add_column("Value", justify="right")
            table.add_column("Target")
            table.add_column("Pass")
            for r in records:
                table.add_row(r["category"], r["id"], f"{r['value']:.6g}", r["target"], "✅" if r["pass"] else "❌")
            console.print(table)
            console.print(f"\n  MLflow run : {run.info.run_id}")

        return self.df, pass_rate, all_pass

    # ══════════════════════════════════════════════════════════════════════════
    # PUBLIC
    # ══════════════════════════════════════════════════════════════════════════

    def eval_acceptance(self) -> tuple[pd.DataFrame, float, bool]:
        self.collect()
        return self._run_evaluation()
