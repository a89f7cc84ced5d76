"""Dense complex linear algebra for 4- and 16-dimensional generators.

Everything here operates on small, fixed-size complex matrices: the
4x4 operators acting on the two-qubit state and the 16x16 superoperator
acting on vectorized density matrices.  Eigendecomposition is delegated
to LAPACK (``numpy.linalg.eig``) behind a strict contract: per-pair
residuals and basis reconstruction are verified, and a matrix that fails
either check is rejected as :class:`~cascaded_qubits.errors.NonDiagonalizable`
rather than silently mis-propagated.

Propagation ``exp(G t) v`` prefers the eigendecomposition (exact, and it
makes waiting-time inversion cheap); when the generator is defective or
too ill-conditioned it falls back to the scaled-and-squared matrix
exponential from SciPy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NonDiagonalizable, NonFinite

# Contract tolerances: per-pair eigen residual and V diag(w) V^-1 reconstruction,
# both relative to ||M||.
EIG_RESIDUAL_TOL = 1e-10
RECONSTRUCT_TOL = 1e-9
# Near-defective bases reconstruct backward-stably yet still lose ~eps*cond(V)
# in forward propagation; bound cond(V) so exp(G t) stays within 1e-9.
BASIS_COND_LIMIT = 1e6

# Eigenvalues with |lambda| below this (times max(1, spectral radius)) are
# treated as exact zero modes of a generator.
ZERO_EIGENVALUE_TOL = 1e-9

ALLOWED_DIMS = (4, 16)


def _as_square_matrix(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] not in ALLOWED_DIMS:
        raise ValueError(f"expected dimension in {ALLOWED_DIMS}, got {m.shape[0]}")
    if not np.all(np.isfinite(m)):
        raise NonFinite("matrix contains NaN or Inf entries")
    return m


@dataclass(frozen=True)
class EigenSystem:
    """Eigendecomposition of a small dense matrix.

    ``values[k]`` pairs with column ``vectors[:, k]``; columns have unit norm
    and the pairs are sorted by descending real part (ties by descending
    imaginary part).
    """

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def eig(matrix) -> EigenSystem:
    """Full eigendecomposition with verified residuals.

    Raises
    ------
    NonDiagonalizable
        If any pair has residual ||M v - w v|| > 1e-10 ||M||, or the
        eigenvector basis does not reconstruct M to 1e-9 relative
        Frobenius norm (defective or near-defective matrix).
    NonFinite
        If the input contains NaN or Inf.
    """
    m = _as_square_matrix(matrix)
    values, vectors = np.linalg.eig(m)

    order = np.lexsort((-values.imag, -values.real))
    values = values[order]
    vectors = vectors[:, order]
    vectors = vectors / np.linalg.norm(vectors, axis=0, keepdims=True)

    # Deterministic phase: largest-magnitude component of each column real positive.
    lead = np.argmax(np.abs(vectors), axis=0)
    phases = vectors[lead, np.arange(vectors.shape[1])]
    vectors = vectors * np.conj(phases / np.abs(phases))

    scale = np.linalg.norm(m, 2)
    residuals = np.linalg.norm(m @ vectors - vectors * values, axis=0)
    if scale > 0 and np.max(residuals) > EIG_RESIDUAL_TOL * scale:
        raise NonDiagonalizable(
            f"eigenpair residual {np.max(residuals):.3e} exceeds "
            f"{EIG_RESIDUAL_TOL:.0e} * ||M||"
        )

    fro = np.linalg.norm(m)
    try:
        inverse = np.linalg.inv(vectors)
    except np.linalg.LinAlgError as exc:
        raise NonDiagonalizable("eigenvector basis is singular") from exc
    cond = np.linalg.cond(vectors)
    if not np.isfinite(cond) or cond > BASIS_COND_LIMIT:
        raise NonDiagonalizable(
            f"eigenvector basis condition number {cond:.3e} exceeds "
            f"{BASIS_COND_LIMIT:.0e} (matrix is defective to tolerance)"
        )
    recon_err = np.linalg.norm((vectors * values) @ inverse - m)
    if fro > 0 and recon_err > RECONSTRUCT_TOL * fro:
        raise NonDiagonalizable(
            f"eigenbasis reconstruction error {recon_err / fro:.3e} exceeds "
            f"{RECONSTRUCT_TOL:.0e} (matrix is defective to tolerance)"
        )

    return EigenSystem(values=values, vectors=vectors)


class Propagator:
    """Evaluates ``exp(G t) v`` for a fixed generator ``G``.

    Uses the eigendecomposition when ``G`` is diagonalizable to tolerance
    (every model generator with epsilon > 0 away from degenerate edge cases);
    otherwise falls back to the scaled-and-squared exponential.  Exposes the
    spectral projector onto the zero-eigenvalue subspace, which carries the
    no-jump survival probability of a trajectory state.
    """

    def __init__(self, generator):
        self.generator = _as_square_matrix(generator)
        self.dim = self.generator.shape[0]
        try:
            system = eig(self.generator)
        except NonDiagonalizable:
            system = None
        if system is not None:
            self.values = system.values
            self.vectors = system.vectors
            self.inverse = np.linalg.inv(system.vectors)
        else:
            self.values = None
            self.vectors = None
            self.inverse = None

    @property
    def diagonalizable(self) -> bool:
        return self.values is not None

    def apply(self, state, t: float) -> np.ndarray:
        """Return ``exp(G t) state``; raises NonFinite on overflow."""
        if t < 0:
            raise ValueError("propagation time must be non-negative")
        v = np.asarray(state, dtype=complex)
        if self.diagonalizable:
            out = self.vectors @ (np.exp(self.values * t) * (self.inverse @ v))
        else:
            out = scipy.linalg.expm(self.generator * t) @ v
        if not np.all(np.isfinite(out)):
            raise NonFinite(f"propagation to t={t} overflowed (growing mode?)")
        return out

    def apply_grid(self, state, times) -> np.ndarray:
        """Propagated states at several times, stacked as rows."""
        ts = np.asarray(times, dtype=float)
        v = np.asarray(state, dtype=complex)
        if self.diagonalizable:
            coeff = self.inverse @ v
            out = (self.vectors @ (np.exp(np.outer(self.values, ts)) * coeff[:, None])).T
        else:
            out = np.array([self.apply(v, t) for t in ts])
        if not np.all(np.isfinite(out)):
            raise NonFinite("propagation overflowed on grid")
        return out

    def zero_projector(self) -> np.ndarray:
        """Spectral projector onto the zero-eigenvalue subspace.

        Oblique in general (the generator need not be normal); computed from
        the eigenbasis, or by a sorted Schur decomposition plus a Sylvester
        solve when the generator is defective.
        """
        scale = max(1.0, float(np.linalg.norm(self.generator, 2)))
        tol = ZERO_EIGENVALUE_TOL * scale
        if self.diagonalizable:
            mask = (np.abs(self.values) <= tol).astype(float)
            return self.vectors @ (mask[:, None] * self.inverse)
        T, Q, k = scipy.linalg.schur(
            self.generator, output="complex", sort=lambda z: abs(z) <= tol
        )
        if k == 0:
            return np.zeros_like(self.generator)
        if k == self.dim:
            return np.eye(self.dim, dtype=complex)
        # P = Q [[I, X], [0, 0]] Q* with T11 X - X T22 = T12.
        T11, T12, T22 = T[:k, :k], T[:k, k:], T[k:, k:]
        X = scipy.linalg.solve_sylvester(T11, -T22, T12)
        block = np.zeros_like(T)
        block[:k, :k] = np.eye(k)
        block[:k, k:] = X
        return Q @ block @ Q.conj().T

    def max_real_eigenvalue(self) -> float:
        if self.diagonalizable:
            return float(np.max(self.values.real))
        return float(np.max(np.linalg.eigvals(self.generator).real))


def propagate(generator, state, t: float) -> np.ndarray:
    """One-shot ``exp(generator * t) state``.

    Convenience wrapper around :class:`Propagator`; build a ``Propagator``
    directly when evaluating many times for the same generator.
    """
    return Propagator(generator).apply(state, t)
