import numpy as np
import pytest
from hypothesis import settings

from tsxai.data import dataset_from_arrays
from tsxai.net import IDENTITY, SIGMOID, NetArchitecture, init_random

settings.register_profile("repo", deadline=None, max_examples=60)
settings.load_profile("repo")

# plain GD settings that converge on the one-input toy problem
TOY_LR, TOY_EPOCHS, TOY_TOL = 2.0, 20000, 1e-4


def random_net(seed, max_hidden=4, max_width=20, max_n=8, out=None, bound=1.5):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, max_n + 1))
    hidden = [int(rng.integers(1, max_width + 1)) for _ in range(int(rng.integers(1, max_hidden + 1)))]
    n_out = int(rng.integers(1, 3))
    kind = out or (SIGMOID if rng.random() < 0.5 else IDENTITY)
    arch = NetArchitecture((n, *hidden, n_out), kind)
    return init_random(arch, seed, bound=bound), rng.uniform(0, 1, n)


@pytest.fixture
def toy_data():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(1000)
    eps = rng.standard_normal(1000)
    return dataset_from_arrays(x[:, None], x + eps), eps


# acceptance outcomes, printed as one line per criterion at the end of the run
ACCEPTANCE: dict[int, str] = {}


def record(num: int, ok: bool, detail: str) -> None:
    line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[num] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
