import warnings

import numpy as np
import pytest

from lifext.dynamics import SocietyParams


def random_draws(n, seed=0, p_extension=0.8):
    """Random (m, params) pairs over the documented parameter box.

    Half the wealths are uniform on [0, 100]; the rest sit close to one of
    the critical wealths so that every regime boundary gets exercised.
    """
    rng = np.random.default_rng(seed)
    gamma = 1 + 3 * (1 - rng.random(n))
    alpha = rng.random(n)
    cost = 5 * (1 - rng.random(n))
    ext = 10 * (1 - rng.random(n))
    has_ext = rng.random(n) < p_extension
    m = 100 * rng.random(n)
    near = rng.random(n) < 0.5
    which = rng.integers(0, 4, n)
    jitter = 1 + rng.normal(0, 0.05, n)
    draws = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for i in range(n):
            p = SocietyParams(float(gamma[i]), float(alpha[i]), float(cost[i]), float(ext[i]) if has_ext[i] else None)
            mi = float(m[i])
            if near[i]:
                d = 2 * p.gamma - 2 * p.alpha - 1
                anchors = [
                    p.child_cost / d if d > 0 else mi,
                    ext[i] / p.gamma,
                    ext[i] / (p.gamma - 1),
                    (p.child_cost + 2 * ext[i]) / (2 * p.gamma - 3) if p.gamma > 1.5 else mi,
                ]
                mi = min(max(0.0, float(anchors[which[i]] * jitter[i])), 1e4)
            draws.append((mi, p))
    return draws


@pytest.fixture(scope="session")
def draws_1e5():
    return random_draws(100_000, seed=20261018)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
