import shutil
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"
FAKE_SOLVER = Path(__file__).resolve().parent / "fake_solver.py"

sys.path.insert(0, str(ROOT / "src"))


def find_real_solver() -> str | None:
    import os
    candidate = os.environ.get("IPM_SOLVER")
    if candidate and shutil.which(candidate):
        return candidate
    for name in ("z3", "cvc5"):
        if shutil.which(name):
            return name
    return None


REAL_SOLVER = find_real_solver()

needs_solver = pytest.mark.skipif(
    REAL_SOLVER is None, reason="no SMT solver installed (z3 not found)")


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


def fake_solver_config(answers: str, transcript: Path | None = None, **kwargs):
    """A SolverConfig running the scripted fake solver with canned answers."""
    from ipm.solver import SolverConfig
    args = [str(FAKE_SOLVER), "--answers", answers]
    if transcript is not None:
        args += ["--transcript", str(transcript)]
    return SolverConfig(executable=sys.executable, extra_args=tuple(args), **kwargs)
