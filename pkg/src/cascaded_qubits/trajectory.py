"""Conditional pure-state evolution with photon-counting records.

A trajectory alternates deterministic decay under the no-jump generator
with instantaneous quantum jumps.  Jump instants are drawn by the exact
inverse-CDF method: the probability of no jump before t equals the
squared norm of the decaying (unnormalized) state, so a uniform draw u
is inverted through that monotone function.  The draw first checks the
asymptotic survival probability -- the squared overlap with the
generator's zero-eigenvalue subspace -- and declares the trajectory dark
when u falls below it, which makes dark detection a-priori exact rather
than a timeout heuristic.

States are kept unnormalized inside an interval (the norm carries the
no-jump probability) and renormalized at interval boundaries; every
exported sample is normalized.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import model
from .errors import (
    AnnihilatedState,
    BisectionFailure,
    InvalidState,
    ZeroRate,
)
from .model import ModelOperators, SystemParams

DEFAULT_T_MAX = 1000.0
DEFAULT_MAX_JUMPS = 10_000
DEFAULT_SAMPLES_PER_UNIT = 200.0

# |f(t*) - u| tolerance for the squared-norm inversion.
NORM_INVERSION_TOL = 1e-12
# Bell-pair weight needed to call an entangled-state cycle.
CYCLE_WEIGHT_THRESHOLD = 1.0 - 1e-9
# Fidelity needed to tag a dark state as a specific Bell state.
DARK_BELL_TOL = 1e-6

_JUMP_TERM_DROP = 1e-14    # relative coefficient below which a decay term is ignored
_RATE_MERGE_TOL = 1e-10    # decay rates closer than this count as one exponential


class CycleTag(enum.Enum):
    """Asymptotic fate of a trajectory."""

    DARK_PHI_PLUS = "dark_phi_plus"
    DARK_PSI_PLUS = "dark_psi_plus"
    DARK_GENERIC = "dark_generic"
    CYCLE_ANTISYMMETRIC = "cycle_antisymmetric"
    CYCLE_SYMMETRIC = "cycle_symmetric"
    UNDECIDED = "undecided"

    @property
    def is_dark(self) -> bool:
        return self in (CycleTag.DARK_PHI_PLUS, CycleTag.DARK_PSI_PLUS,
                        CycleTag.DARK_GENERIC)

    @property
    def is_cycle(self) -> bool:
        return self in (CycleTag.CYCLE_ANTISYMMETRIC, CycleTag.CYCLE_SYMMETRIC)


@dataclass(frozen=True)
class CycleClass:
    tag: CycleTag
    confidence: float


@dataclass(frozen=True)
class ClickEvent:
    time: float
    detector: int


@dataclass
class TrajectoryRecord:
    """One complete conditional evolution.

    ``samples`` hold normalized states at the requested grid times, just
    after every click, and at ``t_end``; ``final_state`` is the state at
    ``t_end`` and ``dark_state`` the normalized zero-subspace projection
    for trajectories that terminated on the dark branch.
    """

    params: SystemParams
    seed: int
    initial: np.ndarray
    events: list[ClickEvent]
    sample_times: np.ndarray
    sample_states: np.ndarray
    terminal: CycleClass
    t_end: float
    final_state: np.ndarray
    dark: bool
    dark_state: np.ndarray | None = None

    def states_at(self, times, tol: float = 1e-9) -> np.ndarray:
        """Sampled states at the given times; GridMismatch if any is missing."""
        from .errors import GridMismatch

        ts = np.atleast_1d(np.asarray(times, dtype=float))
        idx = np.searchsorted(self.sample_times, ts)
        out = np.empty((len(ts), 4), dtype=complex)
        for k, t in enumerate(ts):
            best, err = -1, tol
            for j in (idx[k] - 1, idx[k], idx[k] + 1):
                if 0 <= j < len(self.sample_times):
                    d = abs(self.sample_times[j] - t)
                    if d <= err:
                        best, err = j, d
            if best < 0:
                raise GridMismatch(f"no sample at t={t} (seed {self.seed})")
            out[k] = self.sample_states[best]
        return out

    def click_states(self) -> np.ndarray:
        """Normalized post-jump states, one row per event."""
        if not self.events:
            return np.empty((0, 4), dtype=complex)
        return self.states_at([e.time for e in self.events])


def _bell_pair_weights(state: np.ndarray) -> tuple[float, float]:
    """(symmetric, antisymmetric) Bell-pair weights of a normalized state."""
    w_sym = abs(np.vdot(model.PHI_PLUS, state)) ** 2 + abs(np.vdot(model.PSI_PLUS, state)) ** 2
    w_anti = abs(np.vdot(model.PHI_MINUS, state)) ** 2 + abs(np.vdot(model.PSI_MINUS, state)) ** 2
    return float(w_sym), float(w_anti)


def make_rng(seed) -> np.random.Generator:
    """Counter-based Philox generator from an integer seed or SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        seq = seed
    else:
        seq = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(seq))


def derive_seed(master_seed: int, index: int) -> int:
    """Per-trajectory 64-bit stream seed, hashed from (master_seed, index)."""
    seq = np.random.SeedSequence((int(master_seed), int(index)))
    return int(seq.generate_state(1, np.uint64)[0])


class _NormDecay:
    """Squared norm of exp(G t) phi as an explicit sum of exponentials."""

    def __init__(self, ops: ModelOperators, state: np.ndarray):
        prop = ops.nojump_propagator
        self.prop = prop
        self.state = state
        self.norm0_sq = float(np.real(np.vdot(state, state)))
        dark_component = ops.dark_projector @ state
        self.p_dark = float(np.real(np.vdot(dark_component, dark_component))) / self.norm0_sq
        if prop.diagonalizable:
            coeff = prop.inverse @ state
            gram = prop.vectors.conj().T @ prop.vectors
            amps = (np.outer(coeff.conj(), coeff) * gram).ravel()
            rates = (prop.values.conj()[:, None] + prop.values[None, :]).ravel()
            keep = np.abs(amps) > _JUMP_TERM_DROP * self.norm0_sq
            self._amps = amps[keep]
            self._rates = rates[keep]
        else:
            self._amps = None
            self._rates = None

    def ratio(self, t: float) -> float:
        """||exp(G t) phi||^2 / ||phi||^2."""
        if self._amps is not None:
            val = float(np.real(self._amps @ np.exp(self._rates * t)))
        else:
            v = self.prop.apply(self.state, t)
            val = float(np.real(np.vdot(v, v)))
        return val / self.norm0_sq

    def single_rate(self) -> float | None:
        """The lone decaying rate if exactly one exponential is active."""
        if self._amps is None:
            return None
        scale = max(1.0, float(np.max(np.abs(self.prop.values.real))) * 2.0)
        decaying = self._rates[np.abs(self._rates) > 1e-12 * scale]
        if len(decaying) == 0:
            return None
        s = decaying.real
        if np.max(np.abs(decaying.imag)) > _RATE_MERGE_TOL * scale:
            return None
        if np.max(s) - np.min(s) > _RATE_MERGE_TOL * scale:
            return None
        return float(np.mean(s))


def sample_waiting_time(state, ops: ModelOperators, rng) -> float | None:
    """Draw the next jump time for ``state``; ``None`` means the state is dark.

    Draws u ~ Uniform(0,1).  If u falls below the asymptotic survival
    probability (squared overlap with the zero-eigenvalue subspace) the
    trajectory never jumps again.  Otherwise returns the unique t* with
    ||phi(t*)||^2 / ||phi(0)||^2 = u, solved in closed form when the decay
    is a single exponential and by monotone bisection otherwise.
    """
    phi = np.asarray(state, dtype=complex)
    if not np.all(np.isfinite(phi)) or np.vdot(phi, phi).real == 0.0:
        raise InvalidState("waiting-time sampling requires a finite nonzero state")
    decay = _NormDecay(ops, phi)
    u = float(rng.random())
    if u < decay.p_dark:
        return None
    u = max(u, 1e-300)  # u = 0.0 would send t* to infinity

    rate = decay.single_rate()
    if rate is not None and rate < 0:
        remaining = u - decay.p_dark
        weight = decay.ratio(0.0) - decay.p_dark
        if remaining <= 0 or weight <= 0:
            return None
        return max(math.log(remaining / weight) / rate, 0.0)

    # Bracket by doubling, then bisect the monotone squared-norm ratio.
    t_lo, f_lo = 0.0, decay.ratio(0.0)
    t_hi = 1.0
    for _ in range(400):
        f_hi = decay.ratio(t_hi)
        if f_hi > f_lo + 1e-9:
            raise BisectionFailure(
                f"squared norm increased from {f_lo} to {f_hi} on [{t_lo}, {t_hi}]")
        if f_hi <= u:
            break
        t_lo, f_lo = t_hi, f_hi
        t_hi *= 2.0
    else:
        return None  # u is numerically indistinguishable from p_dark
    for _ in range(300):
        t_mid = 0.5 * (t_lo + t_hi)
        f_mid = decay.ratio(t_mid)
        if abs(f_mid - u) <= 0.1 * NORM_INVERSION_TOL:
            return t_mid
        if f_mid > u:
            t_lo = t_mid
        else:
            t_hi = t_mid
        if t_hi - t_lo <= 1e-16 * max(1.0, t_hi):
            break
    return 0.5 * (t_lo + t_hi)


def jump_rates(state, ops: ModelOperators) -> tuple[float, float]:
    """(<C1 phi|C1 phi>, <C2 phi|C2 phi>) for the unnormalized state."""
    phi = np.asarray(state, dtype=complex)
    r1 = float(np.real(np.vdot(phi, ops.C1dC1 @ phi)))
    r2 = float(np.real(np.vdot(phi, ops.C2dC2 @ phi)))
    return r1, r2


def select_channel(state, ops: ModelOperators, rng) -> int:
    """Pick detector 1 or 2 with probability proportional to its jump rate."""
    r1, r2 = jump_rates(state, ops)
    total = r1 + r2
    norm_sq = float(np.real(np.vdot(state, state)))
    if total <= 1e-28 * max(norm_sq, 1e-300):
        raise ZeroRate("both jump rates vanish; the state is dark")
    return 1 if float(rng.random()) * total < r1 else 2


def apply_jump(state, detector: int, ops: ModelOperators) -> np.ndarray:
    """Collapse ``state`` through the chosen channel; returns C_i phi unnormalized."""
    if detector not in (1, 2):
        raise ValueError(f"detector must be 1 or 2, got {detector}")
    phi = np.asarray(state, dtype=complex)
    out = (ops.C1 if detector == 1 else ops.C2) @ phi
    if np.linalg.norm(out) < 1e-14 * max(1.0, np.linalg.norm(phi)):
        raise AnnihilatedState(f"detector-{detector} jump annihilated the state")
    return out


def classify_asymptotics(record: TrajectoryRecord, ops: ModelOperators) -> CycleClass:
    """Label the asymptotic fate recorded by a finished trajectory.

    Dark-terminated records are tagged by their zero-subspace projection;
    at resonance a still-running record is called a symmetric or
    antisymmetric cycle once the matching Bell-pair weight of its final
    state crosses the decision threshold.
    """
    if record.dark:
        phi = record.dark_state
        fid_phi = abs(np.vdot(model.PHI_PLUS, phi)) ** 2
        fid_psi = abs(np.vdot(model.PSI_PLUS, phi)) ** 2
        if 1.0 - fid_phi <= DARK_BELL_TOL:
            return CycleClass(CycleTag.DARK_PHI_PLUS, float(fid_phi))
        if 1.0 - fid_psi <= DARK_BELL_TOL:
            return CycleClass(CycleTag.DARK_PSI_PLUS, float(fid_psi))
        return CycleClass(CycleTag.DARK_GENERIC, 1.0)
    if record.params.r != 1.0:
        return CycleClass(CycleTag.UNDECIDED, 0.0)
    w_sym, w_anti = _bell_pair_weights(record.final_state)
    if w_anti >= CYCLE_WEIGHT_THRESHOLD:
        return CycleClass(CycleTag.CYCLE_ANTISYMMETRIC, w_anti)
    if w_sym >= CYCLE_WEIGHT_THRESHOLD:
        return CycleClass(CycleTag.CYCLE_SYMMETRIC, w_sym)
    return CycleClass(CycleTag.UNDECIDED, max(w_sym, w_anti))


@dataclass
class _SampleBuffer:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)

    def add(self, t: float, state: np.ndarray):
        if self.times and t == self.times[-1]:
            self.states[-1] = state
            return
        self.times.append(t)
        self.states.append(state)


def run_trajectory(
    initial,
    params: SystemParams,
    t_max: float = DEFAULT_T_MAX,
    max_jumps: int = DEFAULT_MAX_JUMPS,
    seed=0,
    *,
    sample_times=None,
    samples_per_unit: float = DEFAULT_SAMPLES_PER_UNIT,
    ops: ModelOperators | None = None,
) -> TrajectoryRecord:
    """Simulate one conditional trajectory and classify its asymptotics.

    Parameters
    ----------
    initial : array_like
        Normalized 4-amplitude state (order c11, c10, c01, c00).
    params, t_max, max_jumps :
        Model point and simulation budget.
    seed : int or numpy.random.SeedSequence
        Stream seed; identical (initial, params, seed) give bit-identical
        records.
    sample_times : array_like, optional
        Explicit grid at which normalized states are stored.  Defaults to
        a uniform grid of ``samples_per_unit`` points per unit time; pass
        an empty sequence to store only post-click and final states.
    ops : ModelOperators, optional
        Prebuilt operator bundle (saves the eigendecomposition when
        running many trajectories at one parameter point).
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    phi = np.asarray(initial, dtype=complex).copy()
    norm = np.linalg.norm(phi)
    if abs(norm - 1.0) > 1e-9:
        raise InvalidState(f"initial state must be normalized, got norm {norm}")
    phi /= norm

    if ops is None:
        ops = model.build_operators(params)
    prop = ops.nojump_propagator
    rng = make_rng(seed)
    seed_int = seed if isinstance(seed, (int, np.integer)) else -1

    if sample_times is None:
        grid = np.arange(0.0, t_max, 1.0 / samples_per_unit)
    else:
        grid = np.sort(np.asarray(sample_times, dtype=float))
        if len(grid) and (grid[0] < 0 or grid[-1] > t_max):
            raise ValueError("sample times must lie in [0, t_max]")

    buf = _SampleBuffer()
    events: list[ClickEvent] = []
    t = 0.0
    g = 0  # next grid index to emit

    def emit_grid(until: float, inclusive: bool):
        """Store normalized grid states in (t, until) or (t, until]."""
        nonlocal g
        hi = g
        while hi < len(grid) and (grid[hi] < until or (inclusive and grid[hi] == until)):
            hi += 1
        if hi == g:
            return
        block = grid[g:hi]
        states = prop.apply_grid(phi, block - t) if len(block) else None
        for k, tg in enumerate(block):
            s = states[k]
            buf.add(float(tg), s / np.linalg.norm(s))
        g = hi

    if len(grid) and grid[0] == 0.0:
        buf.add(0.0, phi.copy())
        g = 1

    dark = False
    dark_state = None
    final_state = phi
    t_end = t_max

    while True:
        wait = sample_waiting_time(phi, ops, rng)
        if wait is None:
            dark = True
            projected = ops.dark_projector @ phi
            dark_state = projected / np.linalg.norm(projected)
            emit_grid(t_max, inclusive=True)
            tail = prop.apply(phi, t_max - t)
            final_state = tail / np.linalg.norm(tail)
            t_end = t_max
            break
        t_click = t + wait
        if t_click >= t_max:
            emit_grid(t_max, inclusive=True)
            tail = prop.apply(phi, t_max - t)
            final_state = tail / np.linalg.norm(tail)
            t_end = t_max
            break
        emit_grid(t_click, inclusive=False)
        at_click = prop.apply(phi, wait)
        at_click /= np.linalg.norm(at_click)
        detector = select_channel(at_click, ops, rng)
        raw = apply_jump(at_click, detector, ops)
        phi = raw / np.linalg.norm(raw)
        t = t_click
        events.append(ClickEvent(time=t, detector=detector))
        buf.add(t, phi.copy())
        if len(events) >= max_jumps:
            final_state = phi
            t_end = t
            break

    buf.add(t_end, final_state.copy())

    record = TrajectoryRecord(
        params=params,
        seed=int(seed_int),
        initial=np.asarray(initial, dtype=complex),
        events=events,
        sample_times=np.array(buf.times, dtype=float),
        sample_states=np.array(buf.states, dtype=complex),
        terminal=CycleClass(CycleTag.UNDECIDED, 0.0),
        t_end=t_end,
        final_state=final_state,
        dark=dark,
        dark_state=dark_state,
    )
    record.terminal = classify_asymptotics(record, ops)
    return record


def _ensemble_worker(args) -> TrajectoryRecord:
    initial, params, t_max, max_jumps, seed, sample_times = args
    return run_trajectory(
        initial, params, t_max, max_jumps, seed, sample_times=sample_times)


def run_ensemble(
    initial,
    params: SystemParams,
    n_traj: int,
    master_seed: int,
    t_max: float = DEFAULT_T_MAX,
    max_jumps: int = DEFAULT_MAX_JUMPS,
    *,
    sample_times=None,
    workers: int = 1,
) -> list[TrajectoryRecord]:
    """Independent trajectories with per-index derived seeds.

    Results are ordered by trajectory index regardless of worker
    scheduling, so output is reproducible for any worker count.
    """
    jobs = []
    for k in range(n_traj):
        jobs.append((initial, params, t_max, max_jumps,
                     derive_seed(master_seed, k), sample_times))
    if workers <= 1:
        ops = model.build_operators(params)
        return [
            run_trajectory(initial, params, t_max, max_jumps, s,
                           sample_times=sample_times, ops=ops)
            for (initial, params, t_max, max_jumps, s, sample_times) in jobs
        ]
    from concurrent.futures import ProcessPoolExecutor

    chunk = max(1, n_traj // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_ensemble_worker, jobs, chunksize=chunk))
