"""System operators for the cascaded two-qubit model.

All matrices and vectors use the canonical amplitude order

    (c_11, c_10, c_01, c_00)

i.e. index 0 is |11>, index 3 is |00>.  Parameters enter only in scaled
form: the transition-amplitude ratio ``r`` and the inter-cavity coupling
efficiency ``epsilon``; the time unit is fixed by the downward scaled
rate being one.

The lowering/raising matrices for each qubit are module constants, the
Raman operators are ``R_i = sigma_i^- + r sigma_i^+``, and the two decay
channels seen by the photon detectors are

    C1 = sqrt(2) (sqrt(epsilon) R1 - R2)      (output of the second cavity)
    C2 = sqrt(2 (1 - epsilon)) R1             (inter-cavity loss)

with coherent coupling term H0 = i sqrt(epsilon) (R2^dag R1 - R1^dag R2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import numerics
from .errors import InvalidParams, Unsupported

# Basis indices in the canonical amplitude order.
IDX_11, IDX_10, IDX_01, IDX_00 = 0, 1, 2, 3


def _ro(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


KET_11 = _ro(np.array([1, 0, 0, 0], dtype=complex))
KET_10 = _ro(np.array([0, 1, 0, 0], dtype=complex))
KET_01 = _ro(np.array([0, 0, 1, 0], dtype=complex))
KET_00 = _ro(np.array([0, 0, 0, 1], dtype=complex))

_SQRT_HALF = 1.0 / math.sqrt(2.0)
PHI_PLUS = _ro(_SQRT_HALF * (KET_00 + KET_11))
PHI_MINUS = _ro(_SQRT_HALF * (KET_00 - KET_11))
PSI_PLUS = _ro(_SQRT_HALF * (KET_01 + KET_10))
PSI_MINUS = _ro(_SQRT_HALF * (KET_01 - KET_10))

BELL_STATES = {
    "phi+": PHI_PLUS,
    "phi-": PHI_MINUS,
    "psi+": PSI_PLUS,
    "psi-": PSI_MINUS,
}

# Per-qubit ladder operators as 4x4 matrices in the canonical basis.
SIGMA_MINUS_1 = _ro(np.array(
    [[0, 0, 0, 0], [0, 0, 0, 0], [1, 0, 0, 0], [0, 1, 0, 0]], dtype=complex))
SIGMA_PLUS_1 = _ro(SIGMA_MINUS_1.conj().T.copy())
SIGMA_MINUS_2 = _ro(np.array(
    [[0, 0, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 1, 0]], dtype=complex))
SIGMA_PLUS_2 = _ro(SIGMA_MINUS_2.conj().T.copy())

# sigma_{1,z} sigma_{2,z}: +1 on span{|00>,|11>}, -1 on span{|10>,|01>}.
SIGMA_ZZ = _ro(np.diag([1.0, -1.0, -1.0, 1.0]).astype(complex))


@dataclass(frozen=True)
class SystemParams:
    """Scaled model parameters.

    ``r`` is the ratio of upward to downward transition amplitudes (the
    resonance condition is r = 1); ``epsilon`` is the fraction of the
    first cavity's output that reaches the second cavity.
    """

    r: float
    epsilon: float = 1.0

    def __post_init__(self):
        r, eps = float(self.r), float(self.epsilon)
        if not (math.isfinite(r) and math.isfinite(eps)):
            raise InvalidParams("parameters must be finite")
        if r < 0:
            raise InvalidParams(f"r must be >= 0, got {r}")
        if not 0.0 <= eps <= 1.0:
            raise InvalidParams(f"epsilon must lie in [0, 1], got {eps}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "epsilon", eps)

    @classmethod
    def from_rates(cls, beta_r: float, beta_s: float, kappa: float = 1.0,
                   epsilon: float = 1.0) -> "SystemParams":
        """Reduce unscaled drive amplitudes to (r, epsilon).

        ``beta_r`` and ``beta_s`` must be real and non-negative, ``kappa``
        positive.  Only the ratio survives the scaling; kappa fixes the
        time unit, which callers may report separately.
        """
        if beta_r <= 0 or beta_s < 0 or kappa <= 0:
            raise InvalidParams(
                "require beta_r > 0, beta_s >= 0, kappa > 0 for the scaled reduction")
        return cls(r=beta_s / beta_r, epsilon=epsilon)


@dataclass(frozen=True)
class ModelOperators:
    """The matrices generated by a parameter point.

    ``heff_generator`` is the no-jump drift matrix, i.e. -i H_eff =
    -i H0 - (C1^dag C1 + C2^dag C2) / 2, whose flow shrinks the squared
    norm at exactly the total jump rate.
    """

    params: SystemParams
    R1: np.ndarray
    R2: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    H0: np.ndarray
    heff_generator: np.ndarray

    @cached_property
    def C1dC1(self) -> np.ndarray:
        return _ro(self.C1.conj().T @ self.C1)

    @cached_property
    def C2dC2(self) -> np.ndarray:
        return _ro(self.C2.conj().T @ self.C2)

    @cached_property
    def nojump_propagator(self) -> numerics.Propagator:
        return numerics.Propagator(self.heff_generator)

    @cached_property
    def dark_projector(self) -> np.ndarray:
        return _ro(self.nojump_propagator.zero_projector())


def _raman(r: float) -> tuple[np.ndarray, np.ndarray]:
    R1 = SIGMA_MINUS_1 + r * SIGMA_PLUS_1
    R2 = SIGMA_MINUS_2 + r * SIGMA_PLUS_2
    return R1, R2


def build_operators(params: SystemParams) -> ModelOperators:
    """Construct all 4x4 operators for a parameter point."""
    r, eps = params.r, params.epsilon
    se = math.sqrt(eps)
    R1, R2 = _raman(r)
    C1 = math.sqrt(2.0) * (se * R1 - R2)
    C2 = math.sqrt(2.0 * (1.0 - eps)) * R1
    H0 = 1j * se * (R2.conj().T @ R1 - R1.conj().T @ R2)
    generator = -1j * H0 - 0.5 * (C1.conj().T @ C1 + C2.conj().T @ C2)
    return ModelOperators(
        params=params,
        R1=_ro(R1), R2=_ro(R2), C1=_ro(C1), C2=_ro(C2),
        H0=_ro(H0), heff_generator=_ro(generator),
    )


def build_liouvillian(params: SystemParams) -> np.ndarray:
    """16x16 matrix of the master equation on column-stacked rho.

    Assembled from the unraveling split: drift -i[H0, rho] minus the
    anticommutator of C_i^dag C_i / 2, plus the recycling terms
    C_i rho C_i^dag.  Column stacking means vec(A rho B) =
    kron(B^T, A) vec(rho).
    """
    ops = build_operators(params)
    eye = np.eye(4, dtype=complex)
    liouv = -1j * (np.kron(eye, ops.H0) - np.kron(ops.H0.T, eye))
    for c in (ops.C1, ops.C2):
        cdc = c.conj().T @ c
        liouv += np.kron(c.conj(), c) - 0.5 * (np.kron(eye, cdc) + np.kron(cdc.T, eye))
    return liouv


def vectorize_density(rho: np.ndarray) -> np.ndarray:
    """Column-stack a 4x4 matrix into a 16-vector."""
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvectorize_density(vec: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vectorize_density`."""
    return np.asarray(vec, dtype=complex).reshape((4, 4), order="F")


def nojump_eigensystem(params: SystemParams) -> list[tuple[np.ndarray, float]]:
    """Closed-form eigenpairs of the no-jump generator.

    For perfect coupling the four (unnormalized) eigenstates and their
    decay eigenvalues are known for every r:

        |00> + r |11>   ->  0                (the dark steady state for r < 1)
        -r |00> + |11>  ->  -2 (1 + r^2)
        r |10> + |01>   ->  -(r - 1)^2
        |01> - r |10>   ->  -(r + 1)^2

    At resonance with lossy coupling (r = 1, epsilon < 1) the Bell states
    are eigenstates with doubly degenerate eigenvalues
    -2 (1 -/+ sqrt(epsilon)).  No closed form is available for
    epsilon < 1 with r != 1; use :func:`cascaded_qubits.numerics.eig`
    on the generator instead.
    """
    r, eps = params.r, params.epsilon
    if eps == 1.0:
        return [
            (KET_00 + r * KET_11, 0.0),
            (-r * KET_00 + KET_11, -2.0 * (1.0 + r * r)),
            (r * KET_10 + KET_01, -((r - 1.0) ** 2)),
            (KET_01 - r * KET_10, -((r + 1.0) ** 2)),
        ]
    if r == 1.0:
        lam_plus = -2.0 * (1.0 - math.sqrt(eps))
        lam_minus = -2.0 * (1.0 + math.sqrt(eps))
        return [
            (np.array(PHI_PLUS), lam_plus),
            (np.array(PSI_PLUS), lam_plus),
            (np.array(PHI_MINUS), lam_minus),
            (np.array(PSI_MINUS), lam_minus),
        ]
    raise Unsupported(
        f"no closed-form eigensystem for epsilon={eps} with r={r}; "
        "diagonalize the generator numerically")


_NAMED_STATES = {
    "00": KET_00,
    "01": KET_01,
    "10": KET_10,
    "11": KET_11,
    "bell:phi+": PHI_PLUS,
    "bell:phi-": PHI_MINUS,
    "bell:psi+": PSI_PLUS,
    "bell:psi-": PSI_MINUS,
}


def named_state(name: str) -> np.ndarray:
    """Look up a basis or Bell state by name ('00', 'bell:psi-', ...)."""
    try:
        return _NAMED_STATES[name.strip().lower()]
    except KeyError:
        raise KeyError(
            f"unknown state name {name!r}; expected one of {sorted(_NAMED_STATES)}"
        ) from None
