import sys
from pathlib import Path

import pytest

from srfsim.netmodel import make_topology, parse_scenario

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(Path(__file__).resolve().parent))

SCENARIOS = ROOT / "scenarios"
REFERENCE = sorted(SCENARIOS.glob("ref-*.scn"))


@pytest.fixture
def one_srf():
    """AMF - SRF (collocated unit) - gNB, plus a parked-vehicle slot."""
    return make_topology(
        [("amf", "AMF"), ("seaf", "SEAF"), ("srf1", "SRF"), ("g1", "GNB", "srf1"),
         ("sv1", "SV", "srf1"), ("v1", "VEH")],
        [("amf", "seaf", 1), ("srf1", "amf", 4), ("g1", "srf1", 1), ("sv1", "srf1", 1)],
    )


TWO_SRF = """\
[nodes]
amf AMF
ausf AUSF
srf1 SRF
srf2 SRF
sw1 SW
g1 GNB srf=srf1
g2 GNB srf=srf1
g3 GNB srf=srf2
sv1 SV srf=srf2
v1 VEH
[links]
amf ausf 1
srf1 amf 3
srf2 amf 5
srf1 sw1 1
g1 srf1 1
g2 srf1 1
g3 srf2 1
sv1 srf2 1
[trace]
"""


@pytest.fixture
def two_srf():
    return parse_scenario(TWO_SRF).topology


def scenario(trace_lines, config_lines=(), base=TWO_SRF):
    head, _ = base.split("[trace]")
    cfg = "[config]\n" + "".join(l + "\n" for l in config_lines) if config_lines else ""
    return parse_scenario(head + cfg + "[trace]\n" + "".join(l + "\n" for l in trace_lines))


_criteria: dict[str, bool] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        name = report.nodeid.split("::")[1].split("[")[0]
        _criteria[name] = _criteria.get(name, True) and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    import test_acceptance

    terminalreporter.section("acceptance criteria")
    for name, ok in _criteria.items():
        doc = getattr(test_acceptance, name).__doc__.splitlines()[0]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {doc}")
