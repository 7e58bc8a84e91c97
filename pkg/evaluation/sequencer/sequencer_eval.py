from datetime import datetime
from pathlib import Path

import mlflow
import pandas as pd
from dotenv import load_dotenv
from rich.console import Console

from evaluation.sequencer.cases import DECODE_CASES, ROUTING_CASES, SCHEDULE_CASES
from evaluation.sequencer.sequencer_structure_eval import SequencerStructureEvaluator
from src.config import default_calibration
from src.model.fiber import Band, ChannelPath, ConfigurationKind, SpanId, compose_configuration
from src.protocol.codebook import Meaning, decode_command
from src.protocol.session import Session
from src.protocol.settings import SessionConfig

load_dotenv()
console = Console()

OUTPUT_DIR = Path(__file__).parents[1] / "data/sequencer/outputs"


def default_channel() -> ChannelPath:
    spans = default_calibration().select([SpanId.A, SpanId.C, SpanId.D])
    return ChannelPath(config=compose_configuration(spans, ConfigurationKind.THREE_NODE), wavelength=Band.NM1350)


class SequencerEvaluator:
    """
    Checks the Tx/Rx sequencers node by node.

    Available checks:
      1. decode    → does a received word map to the right meaning?
      2. schedule  → does the Tx pick the right next block?
      3. routing   → does the session graph take the right path?
      4. structure → does the compiled graph match the expected YAML?

    Paths are captured with session.graph.stream(stream_mode="updates").
    """

    def __init__(self, structure_config: str | Path, config: SessionConfig | None = None):
        self.config = config or SessionConfig()
        self.channel = default_channel()
        reference = self._session(1.0)
        self.struct_eval = SequencerStructureEvaluator(
            {"session": reference.graph, "transmitter": reference.transmitter.graph}, structure_config
        )

    # ── PRIVATE ────────────────────────────────────────────────
    def _session(self, duration: float, **overrides) -> Session:
        config = self.config.model_copy(update=overrides) if overrides else self.config
        return Session(config, self.channel, duration, seed=0)

    def _stream_path(self, session: Session) -> list[str]:
        path = []
        for update in session.graph.stream(
            session.initial_state(),
            config={"recursion_limit": session.recursion_limit()},
            stream_mode="updates",
        ):
            path.extend(update.keys())
        return path

    @staticmethod
    def _summary(df: pd.DataFrame) -> pd.DataFrame:
        console.print(f"\n  Accuracy : [bold]{df['pass'].mean():.1%}[/]  ({df['pass'].sum()}/{len(df)})")
        return df

    def _eval_decode(self) -> pd.DataFrame:
        console.print("\n[cyan]── Node : decode ────────────────────────────────────[/]")
        codebook = self._session(1.0).codebook
        rows = []
        for tc in DECODE_CASES:
            result = decode_command(tc["received"], codebook)
            actual = str(result.meaning) if result.meaning else None
            passed = actual == tc["expected_meaning"] and result.repaired == tc["expected_repaired"]
            console.print(
                f"  {'✅' if passed else '❌'} {tc['received']} → {actual or 'erased'}"
                f"{' (repaired)' if result.repaired else ''}"
            )
            rows.append(
                {
                    "received": tc["received"],
                    "expected_meaning": tc["expected_meaning"],
                    "actual_meaning": actual,
                    "repaired": result.repaired,
                    "pass": passed,
                }
            )
        return self._summary(pd.DataFrame(rows))

    def _eval_schedule(self) -> pd.DataFrame:
        console.print("\n[cyan]── Node : schedule ──────────────────────────────────[/]")
        transmitter = self._session(1.0).transmitter
        rows = []
        for tc in SCHEDULE_CASES:
            previous = Meaning(tc["previous"]) if tc["previous"] else None
            tx = transmitter(tc["t"], 336.0, previous, tc["last_polarization"])
            actual = str(tx["meaning"])
            passed = actual == tc["expected_meaning"]
            console.print(f"  {'✅' if passed else '❌'} [{actual:<22}] {tc['description']}")
            if not passed:
                console.print(f"       [red]→ expected : {tc['expected_meaning']}[/]")
            rows.append(
                {"description": tc["description"], "expected": tc["expected_meaning"], "actual": actual, "pass": passed}
            )
        return self._summary(pd.DataFrame(rows))

    def _eval_routing(self) -> pd.DataFrame:
        console.print("\n[cyan]── Routing ──────────────────────────────────────────[/]")
        rows = []
        for tc in ROUTING_CASES:
            actual_path = self._stream_path(self._session(tc["duration"], **(tc.get("overrides") or {})))
            expected_path = tc["expected_path"]
            passed = actual_path == expected_path

            console.print(f"  {'✅' if passed else '❌'} {tc['description']}")
            console.print(f"       expected : {' → '.join(expected_path)}")
            if not passed:
                console.print(f"       [red]got      : {' → '.join(actual_path)}[/]")
            rows.append(
                {
                    "description": tc["description"],
                    "expected_path": " → ".join(expected_path),
                    "actual_path": " → ".join(actual_path),
                    "pass": passed,
                }
            )
        return self._summary(pd.DataFrame(rows))

    # ── PUBLIC ───────────────────────────────────────────────
    def run_sequencer_evaluation(self) -> dict:
        mlflow.set_experiment("FiberSim_SequencerEval")
        run_name = f"SequencerEval_{datetime.now().strftime('%Y%m%d_%H%M%S')}"
        OUTPUT_DIR.mkdir(parents=True, exist_ok=True)

        with mlflow.start_run(run_name=run_name) as run:
            frames = {
                "decode": self._eval_decode(),
                "schedule": self._eval_schedule(),
                "routing": self._eval_routing(),
            }
            for name, df in frames.items():
                df.to_csv(OUTPUT_DIR / f"eval_{name}.csv", index=False)

            structure = self.struct_eval.eval_structured()
            results = {f"{name}_accuracy": float(df["pass"].mean()) for name, df in frames.items()}
            results.update({f"{name}_structure_ok": int(r["all_ok"]) for name, r in structure.items()})
            mlflow.log_metrics(results)
            console.print(f"\n  MLflow run : {run.info.run_id}")

        return results
