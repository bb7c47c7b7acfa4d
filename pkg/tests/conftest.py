import time
from pathlib import Path

import pytest

from mcbf.config import load_config
from mcbf.errors import SolverHalt
from mcbf.sim import run

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _run_collecting(cfg):
    t0 = time.perf_counter()
    try:
        trace = run(cfg)
        halt = None
    except SolverHalt as exc:
        trace = exc.trace
        halt = exc
    return trace, halt, time.perf_counter() - t0


@pytest.fixture(scope="session")
def paper_cfg():
    return load_config(CONFIGS / "paper_connectivity.json")


@pytest.fixture(scope="session")
def paper_run(paper_cfg):
    trace, halt, wall = _run_collecting(paper_cfg)
    assert halt is None, f"connectivity run halted: {halt}"
    return trace, wall


@pytest.fixture(scope="session")
def unfiltered_run(paper_cfg):
    import dataclasses
    cfg = dataclasses.replace(paper_cfg, filter_variant="none")
    trace, halt, _ = _run_collecting(cfg)
    assert halt is None
    return trace


@pytest.fixture(scope="session")
def baseline_run():
    cfg = load_config(CONFIGS / "chatter_baseline.json")
    trace, halt, _ = _run_collecting(cfg)  # the baseline may halt; keep the partial
    return trace, halt


@pytest.fixture(scope="session")
def disk_runs():
    import dataclasses
    cfg = load_config(CONFIGS / "obstacle_disk.json")
    filtered, halt, _ = _run_collecting(cfg)
    assert halt is None, "disk avoidance run halted"
    bare, halt2, _ = _run_collecting(dataclasses.replace(cfg, filter_variant="none"))
    assert halt2 is None
    return filtered, bare


@pytest.fixture(scope="session")
def box_runs():
    import dataclasses
    cfg = load_config(CONFIGS / "obstacle_box.json")
    filtered, halt, _ = _run_collecting(cfg)
    assert halt is None, "box avoidance run halted"
    bare, halt2, _ = _run_collecting(dataclasses.replace(cfg, filter_variant="none"))
    assert halt2 is None
    return filtered, bare
