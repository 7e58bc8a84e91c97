from pathlib import Path

import yaml

DATA_DIR = Path(__file__).parent


def load_inputs(suite: str, name: str) -> dict:
    """Reads ``<suite>/inputs/<name>.yaml``; a missing file is an empty suite."""
    path = DATA_DIR / suite / "inputs" / f"{name}.yaml"
    if not path.exists():
        return {}
    with open(path) as f:
        return yaml.safe_load(f) or {}
