import numpy as np
import pytest

from check_physicality import check_physicality
from gaussian_core import GaussianState, make_vacuum
from simulation_errors import NumericalError, PhysicalityWarning


def squeezed_below_vacuum():
    return GaussianState(np.zeros(2), 0.5 * np.eye(2))


def test_strict_mode_raises():
    transform = check_physicality()(squeezed_below_vacuum)
    with pytest.raises(NumericalError, match="squeezed_below_vacuum"):
        transform()


def test_lenient_mode_warns_and_returns_state():
    transform = check_physicality(strict=False)(squeezed_below_vacuum)
    with pytest.warns(PhysicalityWarning):
        state = transform()
    np.testing.assert_array_equal(state.cov, 0.5 * np.eye(2))


def test_physical_states_pass_through():
    vacuum = make_vacuum()
    assert check_physicality()(lambda: vacuum)() is vacuum


def test_non_state_results_are_ignored():
    assert check_physicality()(lambda: 3.5)() == 3.5
