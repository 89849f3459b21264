import re

import pytest
import torch
from torch import nn


@pytest.fixture(scope="session")
def demo_net():
    """Three-conv net with the familiar 16/16/32 filter counts."""
    torch.manual_seed(42)
    return nn.Sequential(
        nn.Conv2d(1, 16, 3, padding=1), nn.BatchNorm2d(16), nn.ReLU(),
        nn.MaxPool2d(2),
        nn.Conv2d(16, 16, 3, padding=1), nn.BatchNorm2d(16), nn.ReLU(),
        nn.MaxPool2d(2),
        nn.Conv2d(16, 32, 3, padding=1), nn.ReLU(),
        nn.Flatten(), nn.Linear(32 * 16 * 16, 10),
    )


@pytest.fixture(scope="session")
def demo_ckpt(demo_net, tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "demo_net.pt"
    torch.save(demo_net, path)
    return path


_CRITERIA = {
    11: "seeded fixtures byte-deterministic, exports bit-exact, core standalone",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            match = re.search(r"test_acceptance\.py::test_criterion_(\d+)", nodeid)
            if match:
                num = int(match.group(1))
                outcome = "PASS" if status == "passed" else "FAIL"
                if results.get(num) != "FAIL":
                    results[num] = outcome
    if not results:
        return
    tw = terminalreporter
    tw.write_sep("=", "acceptance criteria")
    for num in sorted(results):
        label = _CRITERIA.get(num, "")
        tw.write_line(f"criterion {num:2d}: {results[num]}  {label}")
