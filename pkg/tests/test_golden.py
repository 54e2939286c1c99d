"""Byte-for-byte comparison of CLI outputs against stored reference files.

Set ``CHRONOSLIT_REGEN_GOLDEN=1`` to rewrite the references after an
intentional change.
"""

import os
from pathlib import Path

import pytest

from chronoslit import cli

GOLDEN = Path(__file__).parent / "golden"

# case name -> (argv without --out, compared output files)
CASES = {
    "operators": (["check-operators", "--n", "64"], ["operators.csv"]),
    "photon_events": (["run", "--config", str(GOLDEN / "small_photon.cfg"),
                       "--events", "20000", "--seed", "11"], ["pattern.csv", "summary.json"]),
    "photon_single": (["run", "--config", str(GOLDEN / "small_photon.cfg"),
                       "--emission", "single:A"], ["pattern.csv", "summary.json"]),
    "electron_scan": (["scan", "--config", "electron_tuned.cfg", "--scan-param", "delta_T",
                       "--scan-from", "9.9e-12", "--scan-to", "1.01e-11", "--scan-steps", "11"],
                      ["scan.csv"]),
    "oscillator": (["constraint-demo", "--config", str(GOLDEN / "small_oscillator.cfg")],
                   ["constraint_psi.csv", "constraint_summary.json"]),
}


def produce(case, out):
    argv, files = CASES[case]
    status = cli.main([*argv, "--out", str(out)])
    return status, {name: (Path(out) / name).read_bytes() for name in files}


@pytest.mark.parametrize("case", list(CASES))
def test_matches_golden(case, tmp_path):
    status, outputs = produce(case, tmp_path)
    assert status == 0
    for name, data in outputs.items():
        ref = GOLDEN / case / name
        if os.environ.get("CHRONOSLIT_REGEN_GOLDEN") == "1":
            ref.parent.mkdir(parents=True, exist_ok=True)
            ref.write_bytes(data)
        assert data == ref.read_bytes(), f"{case}/{name} differs from the stored reference"
