from evaluation.data import load_inputs

_data = load_inputs("sequencer", "cases")
DECODE_CASES = _data.get("decode", [])
SCHEDULE_CASES = _data.get("schedule", [])
ROUTING_CASES = _data.get("routing", [])
