import numpy as np
import pytest

from futureshuffle import StoreConfig, start_cluster
from futureshuffle.shuffle.records import RECORD_SIZE


def random_records(n, seed=0, key_bytes=10):
    """n records with random keys and the row number in bytes 10..18."""
    rng = np.random.default_rng(seed)
    rec = rng.integers(0, 256, (n, RECORD_SIZE), dtype=np.uint8)
    if key_bytes < 10:
        rec[:, key_bytes:10] = 0
    rec[:, 10:18] = np.arange(n, dtype=">u8").view(np.uint8).reshape(-1, 8)
    return rec


@pytest.fixture
def cluster(tmp_path):
    c = start_cluster(4, 2, StoreConfig(memory_limit=1 << 20, fuse_threshold=64 << 10,
                                        spill_dir=str(tmp_path)))
    yield c
    c.shutdown()


@pytest.fixture
def small_cluster(tmp_path):
    """Two single-slot nodes with a tiny store, so spilling happens early."""
    c = start_cluster(2, 1, StoreConfig(memory_limit=64 << 10, fuse_threshold=16 << 10,
                                        spill_dir=str(tmp_path)))
    yield c
    c.shutdown()


# criterion number -> (passed, title, detail); filled by test_acceptance.py
ACCEPTANCE = {}
ACCEPTANCE_TITLES = {
    1: "block-count law",
    2: "cross-variant equivalence",
    3: "exactly-once under node failure",
    4: "executor-failure decoupling",
    5: "write amplification",
    6: "round pipelining",
    7: "spill fusing",
    8: "prefetch pipelining",
    9: "streaming shuffle",
    10: "straggler mitigation",
    11: "skew handling",
    12: "baseline formula",
    13: "determinism",
}


_OUTCOMES = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" in report.nodeid and name.startswith("test_c") and report.when == "call":
        _OUTCOMES[int(name[6:8])] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in ACCEPTANCE_TITLES.items():
        if n in ACCEPTANCE:
            ok, _, detail = ACCEPTANCE[n]
            status = "PASS" if ok else "FAIL"
        elif n in _OUTCOMES:
            status, detail = "FAIL", "raised before reaching its check"
        else:
            status, detail = "----", "not run in this session"
        tr.write_line(f"{status}  {n:>2}. {title}: {detail}")
