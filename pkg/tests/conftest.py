import sys
import numpy as np
import pytest
from hypothesis import settings, strategies as st

from sqzqkd import gaussian as gs

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def random_physical_cm(rng: np.random.Generator, n_modes: int) -> gs.CovarianceMatrix:
    """Thermal product state scrambled by random squeezers and beam splitters."""
    cm = gs.direct_sum(*(gs.thermal(v) for v in rng.uniform(1.0, 4.0, n_modes)))
    for _ in range(2 * n_modes):
        if n_modes > 1:
            i, j = rng.choice(n_modes, 2, replace=False)
            cm = gs.apply_beam_splitter(cm, gs.SymplecticBS(rng.uniform(0, 1), int(i), int(j)))
            tms = gs.two_mode_squeezer(rng.uniform(-0.6, 0.6))
            cm = gs.apply_symplectic(cm, gs.embed_symplectic(tms, [int(i), int(j)], n_modes))
        k = int(rng.integers(n_modes))
        r = rng.uniform(-0.5, 0.5)
        sq = np.diag([np.exp(-r), np.exp(r)])
        cm = gs.apply_symplectic(cm, gs.embed_symplectic(sq, [k], n_modes))
    return cm


seeds = st.integers(0, 2**32 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
