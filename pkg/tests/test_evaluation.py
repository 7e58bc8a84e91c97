import inspect

import pytest

from evaluation.acceptance.acceptance_checks import CHECKS, codec_soundness, variance_algebra
from evaluation.acceptance.acceptance_evaluate import acceptance_cases
from evaluation.data import load_inputs
from evaluation.sequencer.cases import DECODE_CASES, SCHEDULE_CASES
from src.protocol.codebook import build_codebook, decode_command

CASES = acceptance_cases()


def test_suite_files_are_found():
    assert CASES
    assert DECODE_CASES and SCHEDULE_CASES
    assert load_inputs("sequencer", "absent") == {}


@pytest.mark.parametrize("case", CASES, ids=[c["id"] for c in CASES])
def test_acceptance_case_binds_to_its_check(case):
    check = CHECKS[case["id"]]
    inspect.signature(check).bind(**case.get("params", {}))
    assert case["category"] in {"phase", "polarization", "delay", "protocol", "determinism"}


def test_decode_cases_agree_with_the_codebook():
    codebook = build_codebook()
    for tc in DECODE_CASES:
        result = decode_command(tc["received"], codebook)
        actual = str(result.meaning) if result.meaning else None
        assert actual == tc["expected_meaning"], tc["received"]
        assert result.repaired == tc["expected_repaired"], tc["received"]


def test_cheap_checks_pass():
    (algebra,) = [c for c in CASES if c["id"] == "variance_algebra"]
    assert variance_algebra(**algebra["params"])["pass"]
    assert codec_soundness()["pass"]
