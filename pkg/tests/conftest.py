"""Shared fixtures: one model per supported flux kind."""

from __future__ import annotations

import numpy as np
import pytest

from junction_riemann import FluxModel


@pytest.fixture(scope="session")
def quad() -> FluxModel:
    return FluxModel.quadratic()


@pytest.fixture(scope="session")
def tri() -> FluxModel:
    return FluxModel.triangular(sigma=0.4, f_max=0.9)


@pytest.fixture(scope="session")
def tab() -> FluxModel:
    rho = np.linspace(0.0, 1.0, 21)
    return FluxModel.tabulated(rho, 4.0 * rho * (1.0 - rho))


@pytest.fixture(params=["quad", "tri", "tab"])
def any_model(request, quad, tri, tab) -> FluxModel:
    return {"quad": quad, "tri": tri, "tab": tab}[request.param]
