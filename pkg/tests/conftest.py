import numpy as np
import pytest

from c2mabt.model import FeatureContext


class RotatingContext:
    """Wrap a constant-context env so that round ``t`` shifts feature rows
    cyclically by ``t``.  Arm ``i`` then carries the features of arm
    ``(i + t) mod m``, so means move from round to round."""

    def __init__(self, env):
        self.env = env

    def __getattr__(self, name):
        return getattr(self.env, name)

    def context(self, t, rng=None):
        return FeatureContext(np.roll(self.env._ctx.features, -t, axis=0))

    def true_means(self, t=1):
        return self.env.means(self.context(t))

    def play(self, t, action, rng):
        # sampling goes through the wrapped simulator with round-t means
        rewards, triggered, outcomes = self.env._simulate(action, self.true_means(t), 1, rng)
        from c2mabt.model import Feedback
        idx = np.flatnonzero(triggered[0])
        return Feedback(tuple(idx), {int(i): int(outcomes[0, i]) for i in idx}, float(rewards[0]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
