"""Exception types shared across the simulator."""

from __future__ import annotations


class SimulationError(Exception):
    """Base class for all errors raised by this package."""


class NonFinite(SimulationError):
    """An input or computed value contains NaN or Inf."""


class NonDiagonalizable(SimulationError):
    """A full eigenbasis could not be found within tolerance."""


class InvalidParams(SimulationError):
    """System parameters violate their constraints (epsilon outside [0,1], r < 0, ...)."""


class InvalidState(SimulationError):
    """A state vector or density matrix violates its invariants."""


class DegenerateSteadyState(SimulationError):
    """The Liouvillian null space has dimension > 1; no unique steady state.

    Carries a basis of the null space in ``null_basis``: 4x4 matrices of
    unit Frobenius norm whose span is the steady-state manifold.
    """

    def __init__(self, message: str, null_basis):
        super().__init__(message)
        self.null_basis = list(null_basis)


class Unsupported(SimulationError):
    """The requested analytic form is not available for these parameters."""


class BisectionFailure(SimulationError):
    """The squared-norm decay was not monotone; indicates a generator bug."""


class ZeroRate(SimulationError):
    """Both jump rates vanish; the state is dark and should not be jumped."""


class AnnihilatedState(SimulationError):
    """A jump operator annihilated the state; channel selection was inconsistent."""


class GridMismatch(SimulationError):
    """A trajectory record does not carry samples covering the requested time grid."""


class EmptyClass(SimulationError):
    """No trajectory records match the requested cycle class."""
