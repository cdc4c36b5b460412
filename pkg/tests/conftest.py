import numpy as np
import pytest

from femda.estimators import ClassParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_spd(m, rng, cond=10.0):
    Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    lam = rng.uniform(1.0, cond, m)
    return (Q * lam) @ Q.T


def block(mu, sigma, n=100):
    return ClassParams.build(np.asarray(mu, float), np.asarray(sigma, float), n)


# acceptance criterion -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(passed), detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
