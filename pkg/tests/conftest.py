import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from ruq.probability import JointSource, example_source

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")


@pytest.fixture
def example():
    return example_source()


@pytest.fixture
def uniform22():
    return JointSource(np.full((2, 2), 0.25))


@st.composite
def joint_sources(draw, max_a=4, max_e=3, allow_zeros=True):
    """Random joint sources with optional zero cells; every column may be empty."""
    a = draw(st.integers(1, max_a))
    e = draw(st.integers(1, max_e))
    lo = 0.0 if allow_zeros else 0.01
    w = np.array(draw(st.lists(st.floats(lo, 1.0), min_size=a * e, max_size=a * e)))
    if w.sum() <= 1e-6:
        w[0] = 1.0
    return JointSource((w / w.sum()).reshape(a, e))


# --- acceptance summary ----------------------------------------------------------
# tests/test_acceptance.py records one line per criterion here; the lines are
# printed at the end of the session whether or not output capture is on.

ACCEPTANCE: dict[str, list[tuple[bool, str]]] = {}


def record_criterion(key: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(key, []).append((ok, detail))
    print(f"criterion {key}: {'PASS' if ok else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split(".")[0])):
        parts = ACCEPTANCE[key]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'} {detail}")
