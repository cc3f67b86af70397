import numpy as np
import pytest

import refgame as rg


@pytest.fixture(scope="session")
def fig1() -> rg.MarketParams:
    """The bundled two-firm demonstration instance."""
    return rg.figure1_params()


@pytest.fixture(scope="session")
def fig1_sne(fig1) -> rg.SneSolution:
    return rg.solve_sne(fig1)


@pytest.fixture(scope="session")
def symmetric() -> rg.MarketParams:
    """Identical firms; the stationary point must be symmetric."""
    firm = rg.FirmParams(a=10.0, b=1.0, c=1.0)
    return rg.MarketParams(firm_H=firm, firm_L=firm, alpha=0.5, p_lo=0.4, p_hi=8.0)


def in_box_states(params: rg.MarketParams, n: int, seed: int) -> np.ndarray:
    """n random (p_H, p_L, r_H, r_L) rows drawn uniformly from the box."""
    rng = np.random.default_rng(seed)
    return rng.uniform(params.p_lo, params.p_hi, size=(n, 4))
