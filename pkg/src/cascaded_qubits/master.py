"""Unconditional (ensemble) evolution of the two-qubit density matrix.

The master equation is linear with a constant generator, so evolution is
computed through the exact exponential of the 16x16 superoperator, never
by time stepping.  The Liouvillian spectrum yields the steady state, the
relaxation time tau = 1/|Re lambda_2|, and the degeneracy diagnosis at
the resonance point r = 1 where no unique steady state exists.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model
from .errors import DegenerateSteadyState, InvalidState
from .model import SIGMA_ZZ, SystemParams
from .numerics import Propagator

# A Liouvillian eigenvalue counts as zero when |Re| is below this times the
# spectral radius.  This separates the true null space from the slowest decay
# mode -(r-1)^2 down to |r - 1| of about 3e-5; closer to resonance the
# distinction is numerically meaningless.
DEGENERACY_RTOL = 1e-9

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-9


def validate_density(rho) -> np.ndarray:
    """Check Hermiticity, unit trace, and positivity; return as complex array."""
    m = np.asarray(rho, dtype=complex)
    if m.shape != (4, 4):
        raise InvalidState(f"density matrix must be 4x4, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidState("density matrix contains NaN or Inf")
    if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
        raise InvalidState("density matrix is not Hermitian to tolerance")
    if abs(np.trace(m).real - 1.0) > TRACE_TOL or abs(np.trace(m).imag) > TRACE_TOL:
        raise InvalidState(f"density matrix trace {np.trace(m)} is not 1")
    if np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)) < -POSITIVITY_TOL:
        raise InvalidState("density matrix has a negative eigenvalue beyond tolerance")
    return m


def pure_density(state) -> np.ndarray:
    """Projector |phi><phi| of a (normalized internally) state vector."""
    v = np.asarray(state, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


class DensityPropagator:
    """Cached exact propagator exp(L t) for one parameter point."""

    def __init__(self, params: SystemParams):
        self.params = params
        self.liouvillian = model.build_liouvillian(params)
        self._propagator = Propagator(self.liouvillian)

    def evolve(self, rho0, t: float) -> np.ndarray:
        rho = validate_density(rho0)
        if t < 0:
            raise ValueError("evolution time must be non-negative")
        out = model.unvectorize_density(
            self._propagator.apply(model.vectorize_density(rho), t))
        out = (out + out.conj().T) / 2
        return out / np.trace(out).real

    def evolve_grid(self, rho0, times) -> np.ndarray:
        """Stack of rho(t) for each t in ``times``."""
        rho = validate_density(rho0)
        vecs = self._propagator.apply_grid(model.vectorize_density(rho), times)
        out = np.array([model.unvectorize_density(v) for v in vecs])
        out = (out + np.conj(np.swapaxes(out, 1, 2))) / 2
        traces = np.trace(out, axis1=1, axis2=2).real
        return out / traces[:, None, None]


def evolve_density(rho0, t: float, params: SystemParams) -> np.ndarray:
    """rho(t) = exp(L t) rho0 via the superoperator exponential."""
    return DensityPropagator(params).evolve(rho0, t)


def _liouvillian_spectrum(params: SystemParams):
    liouv = model.build_liouvillian(params)
    values, vectors = np.linalg.eig(liouv)
    order = np.lexsort((-values.imag, -values.real))
    return liouv, values[order], vectors[:, order]


@dataclass(frozen=True)
class SteadyState:
    """Unique steady state, with a pure-state witness when rank one."""

    rho: np.ndarray
    pure_state: np.ndarray | None

    @property
    def is_pure(self) -> bool:
        return self.pure_state is not None


def steady_state(params: SystemParams) -> SteadyState:
    """Trace-one null vector of the Liouvillian.

    Raises
    ------
    DegenerateSteadyState
        When the null space has dimension > 1 (expected at r = 1); the
        exception carries a Frobenius-normalized basis of the null space.
    """
    _, values, vectors = _liouvillian_spectrum(params)
    threshold = DEGENERACY_RTOL * float(np.max(np.abs(values)))
    null_idx = np.where(np.abs(values) <= threshold)[0]
    if len(null_idx) == 0:
        # The generator of a trace-preserving semigroup always has one.
        null_idx = np.array([np.argmin(np.abs(values))])
    if len(null_idx) > 1:
        basis = []
        for k in null_idx:
            m = model.unvectorize_density(vectors[:, k])
            basis.append(m / np.linalg.norm(m))
        raise DegenerateSteadyState(
            f"Liouvillian null space has dimension {len(null_idx)} at "
            f"r={params.r}, epsilon={params.epsilon}", basis)

    rho = model.unvectorize_density(vectors[:, null_idx[0]])
    rho = (rho + rho.conj().T) / 2
    rho = rho / np.trace(rho).real
    evals, evecs = np.linalg.eigh(rho)
    pure = None
    if evals[-1] >= 1.0 - 1e-9:
        pure = evecs[:, -1]
        lead = np.argmax(np.abs(pure))
        pure = pure * np.conj(pure[lead] / abs(pure[lead]))
    return SteadyState(rho=rho, pure_state=pure)


@dataclass(frozen=True)
class SpectrumReport:
    """Liouvillian spectrum and the relaxation time derived from it.

    ``eigenvalues`` are the 16 Liouvillian eigenvalues sorted by
    descending real part.  ``lambda2`` is the smallest-|Re| eigenvalue
    outside the identified null space (ties broken by smallest |Im|);
    ``tau`` is 1/|Re lambda2|, reported as ``inf`` when the null space
    is degenerate and relaxation to a unique state never completes.
    """

    eigenvalues: np.ndarray
    lambda2: complex
    tau: float
    zero_multiplicity: int


def relaxation_time(params: SystemParams) -> SpectrumReport:
    """Spectral gap of the 16x16 Liouvillian."""
    _, values, _ = _liouvillian_spectrum(params)
    threshold = DEGENERACY_RTOL * float(np.max(np.abs(values)))
    null_mask = np.abs(values.real) <= threshold
    zero_multiplicity = int(np.sum(null_mask))
    nonzero = values[~null_mask]
    lambda2 = min(nonzero, key=lambda z: (abs(z.real), abs(z.imag)))
    tau = float("inf") if zero_multiplicity >= 2 else 1.0 / abs(lambda2.real)
    return SpectrumReport(
        eigenvalues=values,
        lambda2=complex(lambda2),
        tau=tau,
        zero_multiplicity=zero_multiplicity,
    )


def expectation_sigmazz(rho) -> float:
    """Tr(rho sigma_1z sigma_2z): +1 on the correlated plane, -1 on the anti-correlated one."""
    m = np.asarray(rho, dtype=complex)
    return float(np.trace(m @ SIGMA_ZZ).real)
