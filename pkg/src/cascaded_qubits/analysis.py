"""Observables, oracles, and ensemble aggregation.

Everything here is a pure function of states or finished trajectory
records: Bell-basis decompositions, the correlated-plane split used for
phase portraits, entanglement entropy of conditional pure states, the
closed-form jump/dark probabilities available at perfect coupling, and
the ensemble averages that tie the unraveling back to the master
equation.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import model
from .errors import EmptyClass, Unsupported
from .model import SystemParams
from .trajectory import CycleTag, TrajectoryRecord

# Columns are Phi+, Phi-, Psi+, Psi- in the canonical amplitude order.
_BELL_MATRIX = np.column_stack(
    [model.PHI_PLUS, model.PHI_MINUS, model.PSI_PLUS, model.PSI_MINUS])

ENTROPY_EIGENVALUE_CLAMP = 1e-15


@dataclass(frozen=True)
class BellDecomposition:
    """Coefficients of a state over the Bell basis (a Phi+ + b Phi- + c Psi+ + d Psi-)."""

    a: complex
    b: complex
    c: complex
    d: complex

    def reconstruct(self) -> np.ndarray:
        return _BELL_MATRIX @ np.array([self.a, self.b, self.c, self.d])

    def pair_weights(self) -> tuple[float, float]:
        """(symmetric, antisymmetric) pair weights |a|^2+|c|^2 and |b|^2+|d|^2."""
        return (abs(self.a) ** 2 + abs(self.c) ** 2,
                abs(self.b) ** 2 + abs(self.d) ** 2)


def bell_decompose(state) -> BellDecomposition:
    """Exact change of basis to the Bell frame (input may be unnormalized)."""
    coeff = _BELL_MATRIX.conj().T @ np.asarray(state, dtype=complex)
    return BellDecomposition(*map(complex, coeff))


@dataclass(frozen=True)
class CorrelatedSplit:
    """Orthogonal split phi = plus + minus over the sigma_zz = +/-1 planes.

    ``plus_coords`` are (c00, c11) and ``minus_coords`` (c01, c10): the
    2-D coordinates used for phase-portrait drawing.
    """

    plus: np.ndarray
    minus: np.ndarray
    plus_coords: tuple[complex, complex]
    minus_coords: tuple[complex, complex]


def correlated_projection(state) -> CorrelatedSplit:
    """Split a state into its correlated (E+) and anti-correlated (E-) parts."""
    phi = np.asarray(state, dtype=complex)
    plus = np.zeros(4, dtype=complex)
    minus = np.zeros(4, dtype=complex)
    plus[model.IDX_11], plus[model.IDX_00] = phi[model.IDX_11], phi[model.IDX_00]
    minus[model.IDX_10], minus[model.IDX_01] = phi[model.IDX_10], phi[model.IDX_01]
    return CorrelatedSplit(
        plus=plus,
        minus=minus,
        plus_coords=(complex(phi[model.IDX_00]), complex(phi[model.IDX_11])),
        minus_coords=(complex(phi[model.IDX_01]), complex(phi[model.IDX_10])),
    )


def sigmazz_expectation(state) -> float:
    """<sigma_1z sigma_2z> of a state vector, normalized internally."""
    phi = np.asarray(state, dtype=complex)
    norm_sq = float(np.real(np.vdot(phi, phi)))
    return float(np.real(np.vdot(phi, model.SIGMA_ZZ @ phi))) / norm_sq


def entanglement_entropy(state) -> float:
    """Von Neumann entropy (bits) of the one-qubit reduced state.

    Zero for product states, one for the Bell states.  Eigenvalues of the
    reduced density matrix are clamped before the log so exact pure-state
    zeros contribute nothing.
    """
    phi = np.asarray(state, dtype=complex)
    norm = np.linalg.norm(phi)
    if norm == 0.0:
        raise ValueError("entropy of the zero vector is undefined")
    amp = (phi / norm).reshape(2, 2)
    rho_a = amp @ amp.conj().T
    evals = np.clip(np.linalg.eigvalsh(rho_a).real, ENTROPY_EIGENVALUE_CLAMP, 1.0)
    return float(-np.sum(evals * np.log2(evals)))


@dataclass(frozen=True)
class JumpProbabilities:
    p_dark: float
    p_jump: float


def jump_probability_oracle(state, params: SystemParams) -> JumpProbabilities:
    """Closed-form dark/jump split for a single-plane state at perfect coupling.

    Uses the analytic eigensystem: the survival probability is the squared
    overlap with the zero-eigenvalue eigenstates, which exist only in E+
    for r < 1 and in both planes at r = 1.
    """
    if params.epsilon != 1.0:
        raise Unsupported("closed-form jump probabilities require epsilon = 1")
    phi = np.asarray(state, dtype=complex)
    phi = phi / np.linalg.norm(phi)
    split = correlated_projection(phi)
    w_plus = float(np.real(np.vdot(split.plus, split.plus)))
    w_minus = float(np.real(np.vdot(split.minus, split.minus)))
    if min(w_plus, w_minus) > 1e-12:
        raise ValueError("state must lie in a single correlated plane")
    p_dark = 0.0
    for vec, lam in model.nojump_eigensystem(params):
        if lam == 0.0:
            unit = vec / np.linalg.norm(vec)
            p_dark += abs(np.vdot(unit, phi)) ** 2
    p_dark = min(p_dark, 1.0)
    return JumpProbabilities(p_dark=p_dark, p_jump=1.0 - p_dark)


@dataclass(frozen=True)
class EnsembleReport:
    """Grid-resolved ensemble averages over conditional trajectories."""

    times: np.ndarray
    mean_sigmazz: np.ndarray
    stderr_sigmazz: np.ndarray
    mean_density: np.ndarray          # shape (n_times, 4, 4)
    n_trajectories: int
    class_counts: dict[str, int]


def _check_shared_context(records: list[TrajectoryRecord]):
    first = records[0]
    for rec in records[1:]:
        if rec.params != first.params:
            raise ValueError("records mix parameter points")
        if not np.allclose(rec.initial, first.initial, atol=1e-12):
            raise ValueError("records mix initial states")


def ensemble_average(records: list[TrajectoryRecord], times) -> EnsembleReport:
    """Mean conditional projector and <sigma_1z sigma_2z> over an ensemble.

    Standard errors treat trajectories as i.i.d. at each fixed time.
    Raises GridMismatch if any record lacks a sample at a requested time.
    """
    if not records:
        raise ValueError("need at least one record")
    _check_shared_context(records)
    ts = np.asarray(times, dtype=float)
    n = len(records)
    zz = np.empty((n, len(ts)))
    density_sum = np.zeros((len(ts), 4, 4), dtype=complex)
    for i, rec in enumerate(records):
        states = rec.states_at(ts)
        zz[i] = np.einsum("ti,ij,tj->t", states.conj(), model.SIGMA_ZZ, states).real
        density_sum += np.einsum("ti,tj->tij", states, states.conj())
    mean_zz = zz.mean(axis=0)
    stderr = zz.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(len(ts))
    counts = Counter(rec.terminal.tag.value for rec in records)
    return EnsembleReport(
        times=ts,
        mean_sigmazz=mean_zz,
        stderr_sigmazz=stderr,
        mean_density=density_sum / n,
        n_trajectories=n,
        class_counts=dict(counts),
    )


def cycle_mixture(records: list[TrajectoryRecord], cycle_class: CycleTag,
                  burn_in_fraction: float = 0.2) -> np.ndarray:
    """Late-time average density matrix of records locked into one cycle.

    Discards the first ``burn_in_fraction`` of each record's duration
    (lock-in is exponential, so any fixed fraction works) and averages the
    sampled projectors thereafter.
    """
    if cycle_class not in (CycleTag.CYCLE_SYMMETRIC, CycleTag.CYCLE_ANTISYMMETRIC):
        raise ValueError("cycle_mixture expects a cycle class tag")
    total = np.zeros((4, 4), dtype=complex)
    count = 0
    for rec in records:
        if rec.terminal.tag is not cycle_class:
            continue
        cut = burn_in_fraction * rec.t_end
        keep = rec.sample_times >= cut
        states = rec.sample_states[keep]
        total += np.einsum("ti,tj->ij", states, states.conj())
        count += int(np.sum(keep))
    if count == 0:
        raise EmptyClass(f"no records classified {cycle_class.value}")
    mixture = total / count
    mixture = (mixture + mixture.conj().T) / 2
    return mixture / np.trace(mixture).real


def detector_click_rate(records: list[TrajectoryRecord], detector: int,
                        cycle_class: CycleTag | None = None) -> float:
    """Mean clicks per unit time on one detector, optionally filtered by class."""
    clicks = 0
    duration = 0.0
    for rec in records:
        if cycle_class is not None and rec.terminal.tag is not cycle_class:
            continue
        clicks += sum(1 for e in rec.events if e.detector == detector)
        duration += rec.t_end
    if duration == 0.0:
        raise EmptyClass("no matching records with positive duration")
    return clicks / duration
