# Cyclomatic complexity limits for the report renderer and the CLI.
# Uses radon when available; without radon the module is skipped.
import pathlib

import pytest

try:
    from radon.complexity import cc_visit
except Exception:
    pytest.skip("radon not installed - complexity test skipped", allow_module_level=True)

THRESHOLD = 12


@pytest.mark.parametrize('relative', ['report/renderer.py', 'cli.py'])
def test_complexity_threshold(relative):
    """Fail if any function in the module exceeds THRESHOLD."""
    repo_root = pathlib.Path(__file__).resolve().parents[1]
    path = repo_root / relative
    assert path.exists(), f"{relative} not found at {path}"

    blocks = cc_visit(path.read_text(encoding='utf-8'))
    offenders = [(b.name, b.complexity, b.lineno) for b in blocks if b.complexity > THRESHOLD]
    if offenders:
        offenders_str = '\n'.join([f"{name} (complexity={comp}) at line {lineno}" for name, comp, lineno in offenders])
        pytest.fail(f"Complexity threshold exceeded in {relative} (threshold={THRESHOLD}):\n{offenders_str}")
