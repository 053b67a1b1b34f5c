#@title Physicality Decorator for State Transforms

import warnings
from functools import wraps

from gaussian_core import GaussianState, PHYSICALITY_TOL, symplectic_eigenvalues
from simulation_errors import NumericalError, PhysicalityWarning


def check_physicality(strict: bool = True, tolerance: float = PHYSICALITY_TOL):
    """
    Decorator that checks the uncertainty principle on the GaussianState a
    transform returns. Strict mode raises NumericalError; otherwise a
    PhysicalityWarning is emitted and the state is returned unchanged, so
    Monte Carlo loops tolerate accumulated rounding.
    """
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            state = func(*args, **kwargs)
            if not isinstance(state, GaussianState):
                return state
            nu_min = float(symplectic_eigenvalues(state.cov)[0])
            if nu_min < 1.0 - tolerance:
                message = f"{func.__name__} produced an unphysical state (smallest symplectic eigenvalue {nu_min:.12g})."
                if strict:
                    raise NumericalError(message)
                warnings.warn(message, PhysicalityWarning, stacklevel=2)
            return state
        return wrapper
    return decorator
