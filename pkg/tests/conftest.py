import math

import numpy as np
import pytest

from drag_forge import (GaussianParams, build_intermediate_sno, build_sno,
                        build_star)

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="session")
def sno5():
    """d=5 standard nonlinear oscillator, delta2 = -2*pi."""
    return build_sno(5, -TWO_PI)


@pytest.fixture(scope="session")
def sno3():
    return build_sno(3, -TWO_PI)


@pytest.fixture(scope="session")
def inter5():
    """d=5 intermediate window of a 6-level oscillator."""
    return build_intermediate_sno(5, -TWO_PI)


@pytest.fixture(scope="session")
def star6():
    """Star system of the many-channel example: lam_j = 1, delta_k = k*delta2."""
    return build_star([-TWO_PI, -2 * TWO_PI, -3 * TWO_PI, -4 * TWO_PI],
                      [1.0, 1.0, 1.0, 1.0])


@pytest.fixture
def not_params():
    """sigma = 1 NOT-gate envelope (area pi, t_g = 4 sigma)."""
    return GaussianParams.for_not(1.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260808)
