from pathlib import Path

import mlflow
import yaml
from rich.console import Console

console = Console()


class SequencerStructureEvaluator:
    """
    Compares the compiled LangGraph sequencers against the expected YAML
    structure and logs the metrics to MLflow.
    """

    def __init__(self, graphs: dict, yaml_path: str | Path):
        self.graphs = graphs
        self.yaml_path = Path(yaml_path)
        if not self.yaml_path.exists():
            raise FileNotFoundError(f"YAML config not found: {self.yaml_path}")

        self.expected = self._load_and_build_expected()

    # ── PRIVATE ────────────────────────────────────────────────
    def _load_and_build_expected(self) -> dict:
        with open(self.yaml_path) as f:
            cfg = yaml.safe_load(f)

        return {
            name: {
                "nodes": set(block["nodes"]["expected"]),
                "n_nodes": block["nodes"]["count"],
                "direct_edges": {tuple(e) for e in block["direct_edges"]},
                "conditional_edges": block.get("conditional_edges") or {},
            }
            for name, block in cfg.items()
        }

    def _eval_structure(self, name: str) -> dict:
        console.print(f"\n[cyan]── Structure : {name} ──────────────────────────[/]")
        expected = self.expected[name]

        g = self.graphs[name].get_graph()
        actual_nodes = set(g.nodes.keys()) - {"__start__", "__end__"}
        actual_edges = {(e.source, e.target) for e in g.edges}

        # 1. Node count
        n_actual = len(actual_nodes)
        count_ok = n_actual == expected["n_nodes"]
        console.print(f"\n  {'✅' if count_ok else '❌'} Node count : {n_actual} / {expected['n_nodes']}")

        # 2. Node names
        missing = expected["nodes"] - actual_nodes
        extra = actual_nodes - expected["nodes"]
        nodes_ok = not missing
        console.print(f"  {'✅' if nodes_ok else '❌'} Nodes : {sorted(actual_nodes)}")
        if missing:
            console.print(f"       [red]Missing    : {sorted(missing)}[/]")
        if extra:
            console.print(f"       [yellow]Unexpected : {sorted(extra)}[/]")

        # 3. Direct edges
        missing_direct = expected["direct_edges"] - actual_edges
        direct_ok = not missing_direct
        console.print(f"\n  {'✅' if direct_ok else '❌'} Direct edges :")
        for src, dst in sorted(expected["direct_edges"]):
            console.print(f"       {'✅' if (src, dst) in actual_edges else '❌'}  {src} → {dst}")

        # 4. Conditional edges
        cond_ok = True
        if expected["conditional_edges"]:
            console.print("\n  Conditional edges :")
        for src, dsts in expected["conditional_edges"].items():
            for dst in dsts:
                present = (src, dst) in actual_edges
                cond_ok &= present
                console.print(f"       {'✅' if present else '❌'}  {src} --[cond]--> {dst}")

        return {
            "nodes_ok": nodes_ok,
            "node_count_ok": count_ok,
            "direct_edges_ok": direct_ok,
            "conditional_edges_ok": cond_ok,
            "all_ok": nodes_ok and count_ok and direct_ok and cond_ok,
            "n_nodes": n_actual,
            "n_edges": len(actual_edges),
            "missing_nodes": sorted(missing),
            "extra_nodes": sorted(extra),
            "missing_direct_edges": [f"{s}→{t}" for s, t in sorted(missing_direct)],
        }

    # ── PUBLIC ───────────────────────────────────────────────
    def eval_structured(self) -> dict:
        results = {}
        with mlflow.start_run(run_name="StructureEval", nested=True) as run:
            for name in self.expected:
                result = self._eval_structure(name)
                results[name] = result
                mlflow.log_metrics(
                    {
                        f"{name}/nodes_ok": int(result["nodes_ok"]),
                        f"{name}/direct_edges_ok": int(result["direct_edges_ok"]),
                        f"{name}/conditional_edges_ok": int(result["conditional_edges_ok"]),
                        f"{name}/structure_all_ok": int(result["all_ok"]),
                        f"{name}/n_nodes": result["n_nodes"],
                        f"{name}/n_edges": result["n_edges"],
                    }
                )
            console.print(f"MLflow run : {run.info.run_id}")

        return results
