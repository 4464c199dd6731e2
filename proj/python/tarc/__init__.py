"""Python bindings for the TARC simulation and certification core."""

from pathlib import Path

from ._core import (  # noqa: F401
    NumericalError,
    UsageError,
    error_system,
    estimate,
    kernel,
    mass_matrix,
    omega1_sq_integral,
    quadrature_weights,
    simulate,
    solve_lyapunov,
    suggest_gains,
    theorem1_certificate,
    theorem2_certificate,
)


def simulate_file(path, controller=None, seed=None):
    """Run the scenario stored at `path`; see `simulate`."""
    return simulate(Path(path).read_text(), controller=controller, seed=seed)
