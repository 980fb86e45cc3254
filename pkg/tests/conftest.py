import numpy as np
import pytest

from graft.generators import tiny_fc, two_branch


@pytest.fixture
def tiny():
    return tiny_fc()


@pytest.fixture
def branchy():
    return two_branch()


def finite_difference(graph, params, inputs, h=1e-4):
    """Central differences of sum-of-outputs w.r.t. every parameter element.

    Uses only ``forward``; independent of the reverse-mode path.
    """
    from graft.engine import forward
    from graft.ir import ParamStore

    def cost(store):
        outs, _ = forward(graph, store, inputs)
        return sum(float(np.sum(o)) for o in outs)

    grads = {}
    for name in params:
        base = np.array(params[name], dtype=np.float64)
        g = np.zeros_like(base)
        for i in range(base.size):
            for sign in (1, -1):
                bumped = base.copy().reshape(-1)
                bumped[i] += sign * h
                store = ParamStore({**{k: params[k] for k in params}, name: bumped.reshape(base.shape)})
                g.reshape(-1)[i] += sign * cost(store)
            g.reshape(-1)[i] /= 2 * h
        grads[name] = g
    return grads


def relative_error(a, b, floor=1e-6):
    a, b = np.asarray(a), np.asarray(b)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, in criterion order."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" and not (outcome == "error" or rep.failed):
                continue
            props = dict(getattr(rep, "user_properties", []))
            if "criterion" in props:
                verdict = "PASS" if outcome == "passed" else "FAIL"
                lines.append((props["criterion"], f"{verdict}  {props['criterion']}  ({rep.duration:.2f}s)"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
