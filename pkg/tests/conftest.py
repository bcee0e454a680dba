from __future__ import annotations

import math

import numpy as np
import pytest

from heliumdot import cavity, core

TWO_PI = 2.0 * math.pi
GHZ = 1e9 * TWO_PI
MHZ = 1e6 * TWO_PI


@pytest.fixture
def res_7162() -> core.ResonatorParams:
    """Device-like resonator: 7.162 GHz, symmetric ports, 23 MHz total."""
    return core.ResonatorParams.from_mode(
        7.162 * GHZ, 3828.0, kappa_1=11.5 * MHZ, kappa_2=11.5 * MHZ
    )


@pytest.fixture
def electron_above(res_7162) -> cavity.TwoLevelElectron:
    """Electron 1 GHz above the resonator, 75 MHz linewidth."""
    return cavity.TwoLevelElectron(
        omega_e=res_7162.omega_r + 1.0 * GHZ, gamma_2=75.0 * MHZ
    )


@pytest.fixture
def probe_half_ghz(res_7162) -> np.ndarray:
    """401-point probe axis spanning +-0.5 GHz around the resonator."""
    return np.linspace(
        res_7162.omega_r - 0.5 * GHZ, res_7162.omega_r + 0.5 * GHZ, 401
    )
