import functools
import time

import pytest

from qswitch.errors import AssumptionViolation, StepTooLarge
from qswitch.scenarios import load_preset
from qswitch.engine import simulate

ACCEPTANCE_LINES = []


class Run:
    """One closed-loop run, including partial output when the engine raised."""

    def __init__(self, cfg, traj, log, summary, error, seconds):
        self.cfg, self.traj, self.log, self.summary = cfg, traj, log, summary
        self.error, self.seconds = error, seconds

    @property
    def complete(self):
        return self.error is None and self.summary.reason in ("horizon", "terminal")


@functools.lru_cache(maxsize=None)
def run_preset(name, policy="shrink", family="contractive", xi=1.0):
    cfg = load_preset(name, policy={"kind": policy}, controller={"family": family, "xi": xi})
    sim = cfg.simulation
    t0 = time.perf_counter()
    error = None
    try:
        traj, log, summary = simulate(cfg.model(), cfg.s0, cfg.s_d, cfg.controller, cfg.policy,
                                      sim.T_f, sim.dt, sim.event_tol)
    except (AssumptionViolation, StepTooLarge) as exc:
        traj, log, summary = exc.partial
        error = exc
    return Run(cfg, traj, log, summary, error, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def runs():
    return run_preset


@pytest.fixture
def report():
    """Record one acceptance line: report(criterion, passed, detail)."""
    def _report(criterion, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
