"""Quantum-jump unraveling of Lindblad generators.

Algorithm: waiting-time (norm-threshold) sampling.  Between jumps the state
evolves deterministically under the non-Hermitian effective Hamiltonian; one
uniform threshold is drawn per segment and a jump fires when the decaying
squared norm crosses it.  The jump channel is selected with probability
proportional to rate * |L psi|^2.  Sub-steps are sized so the squared norm
loses at most ``MAX_STEP_NORM_LOSS`` per step, which keeps the first-order
jump-timing bias below the statistical noise of ensembles up to ~1e6
realizations.

Reproducibility contract: trajectory ``r`` of a run with master seed ``m``
draws from a private Philox stream keyed by the 128-bit integer
``(m << 64) | r``.  Trajectories are simulated in fixed-size batches
(``BATCH_SIZE`` columns of one matrix) and reduced in trajectory order, so
the output bits depend only on (master seed, realizations, grid), never on
the number of worker processes.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np
import scipy.linalg

from .dissipators import LindbladTerms
from .operators import DimensionError, Operator, eig_hermitian

MAX_STEP_NORM_LOSS = 1e-3
NORM_COLLAPSE = 1e-14
BATCH_SIZE = 256
_MASK64 = (1 << 64) - 1


class NormCollapseError(RuntimeError):
    """The unnormalized state norm fell below the representable floor."""


def split_seed(master_seed: int, index: int) -> int:
    """Counter-based per-trajectory seed: 128-bit Philox key (master, index)."""
    return ((master_seed & _MASK64) << 64) | (index & _MASK64)


def _rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


@dataclass(frozen=True)
class Trajectory:
    """One stochastic realization: jump record plus unit-norm state samples."""

    seed: int
    times: np.ndarray
    states: np.ndarray
    jump_times: np.ndarray
    jump_channels: np.ndarray


@dataclass(frozen=True)
class TrajectoryEnsembleResult:
    """Ensemble means and standard errors of observables on a time grid."""

    realizations: int
    times: np.ndarray
    means: dict
    standard_errors: dict
    master_seed: int
    provenance: dict


def effective_hamiltonian(h: Operator, terms: LindbladTerms) -> Operator:
    """Non-Hermitian drift H - (i/2) sum_k rate_k L_k_dag L_k."""
    if h.dim != terms.hamiltonian.dim:
        raise DimensionError(f"hamiltonian dim {h.dim} != jump dim "
                             f"{terms.hamiltonian.dim}")
    return Operator(h.matrix - 0.5j * terms.decay_operator())


def _decay_rate_bound(h_eff: np.ndarray) -> float:
    """Largest eigenvalue of the decay operator i(H_eff - H_eff_dag)."""
    g = 1j * (h_eff - h_eff.conj().T)
    return float(max(np.linalg.eigvalsh(g).max(), 0.0))


def _substep_plan(times: np.ndarray, rate_bound: float):
    """Per grid interval: (number of substeps, substep length)."""
    intervals = np.diff(times)
    plan = []
    for dt in intervals:
        n_sub = max(1, math.ceil(dt * rate_bound / MAX_STEP_NORM_LOSS))
        plan.append((n_sub, dt / n_sub))
    return plan


class _BatchKernel:
    """Shared propagation machinery for one (H_eff, jumps, grid) triple."""

    def __init__(self, h_eff: np.ndarray, terms: LindbladTerms, times: np.ndarray):
        self.times = np.asarray(times, dtype=float)
        if self.times.ndim != 1 or len(self.times) < 1 or \
                np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be a non-empty strictly increasing grid")
        self.dim = h_eff.shape[0]
        self.rates = np.array(terms.rates)
        self.jumps = [np.asarray(L) for L in terms.jumps]
        self.plan = _substep_plan(self.times, _decay_rate_bound(h_eff))
        self.steppers = {}
        for n_sub, dt_sub in self.plan:
            if dt_sub not in self.steppers:
                self.steppers[dt_sub] = scipy.linalg.expm(-1j * h_eff * dt_sub)

    def run(self, psi0: np.ndarray, rngs: list, record: bool = False):
        """Propagate a batch (columns of psi0) along the grid.

        Yields the normalized batch state at every grid time, in order.  When
        ``record`` is true, per-column jump events are appended to
        ``self.jump_log`` as (time, channel) lists.
        """
        psi = np.array(psi0, dtype=complex)
        if psi.ndim == 1:
            psi = psi[:, None]
        cols = psi.shape[1]
        thresholds = np.array([rng.random() for rng in rngs])
        self.jump_log = [[] for _ in range(cols)] if record else None

        t = self.times[0]
        yield psi / np.sqrt(np.einsum("ij,ij->j", psi.conj(), psi).real)
        for (n_sub, dt_sub), t_next in zip(self.plan, self.times[1:]):
            stepper = self.steppers[dt_sub]
            for k in range(n_sub):
                psi = stepper @ psi
                t_sub = t + (k + 1) * dt_sub
                norms2 = np.einsum("ij,ij->j", psi.conj(), psi).real
                crossed = norms2 <= thresholds
                bad = np.flatnonzero(~crossed & (norms2 < NORM_COLLAPSE))
                if bad.size:
                    raise NormCollapseError(
                        f"state norm collapsed to {norms2[bad[0]]:.3e} without "
                        "crossing its jump threshold; substep pathology")
                for j in np.flatnonzero(crossed):
                    self._jump(psi, j, rngs[j], thresholds, t_sub)
            t = t_next
            yield psi / np.sqrt(np.einsum("ij,ij->j", psi.conj(), psi).real)

    def _jump(self, psi: np.ndarray, j: int, rng: np.random.Generator,
              thresholds: np.ndarray, t_sub: float) -> None:
        col = psi[:, j]
        weights = np.array([r * np.vdot(L @ col, L @ col).real
                            for r, L in zip(self.rates, self.jumps)])
        total = weights.sum()
        if total <= 0.0:
            raise NormCollapseError(
                "jump triggered but all channel weights vanish")
        cum = np.cumsum(weights)
        channel = int(np.searchsorted(cum, rng.random() * total, side="right"))
        channel = min(channel, len(self.jumps) - 1)
        new = self.jumps[channel] @ col
        psi[:, j] = new / np.linalg.norm(new)
        thresholds[j] = rng.random()
        if self.jump_log is not None:
            self.jump_log[j].append((t_sub, channel))


def evolve_trajectory(h_eff: Operator, terms: LindbladTerms, psi0: np.ndarray,
                      times: np.ndarray, seed: int) -> Trajectory:
    """Single stochastic realization with full state and jump records."""
    psi0 = np.asarray(psi0, dtype=complex).ravel()
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise ValueError("initial state must be normalized")
    if psi0.shape[0] != h_eff.dim:
        raise DimensionError(f"state dim {psi0.shape[0]} != hamiltonian dim {h_eff.dim}")
    kernel = _BatchKernel(h_eff.matrix, terms, times)
    rng = _rng_for(seed)
    states = [batch[:, 0].copy() for batch in kernel.run(psi0, [rng], record=True)]
    events = kernel.jump_log[0]
    return Trajectory(
        seed=seed,
        times=kernel.times,
        states=np.array(states),
        jump_times=np.array([e[0] for e in events]),
        jump_channels=np.array([e[1] for e in events], dtype=int),
    )


def _initial_sampler(initial, dim: int):
    """Normalize the initial-state argument into a per-trajectory sampler.

    Pure states (vectors) are used as-is and consume no randomness; mixed
    density matrices are unraveled by sampling their eigenvectors with
    probabilities given by the eigenvalues (one uniform draw per trajectory).
    """
    if isinstance(initial, Operator):
        eig = eig_hermitian(initial)
        probs = np.clip(eig.eigenvalues, 0.0, None)
        total = probs.sum()
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-10):
            raise ValueError("mixed initial state must have unit trace")
        probs = probs / total
        cum = np.cumsum(probs)
        vectors = eig.eigenvectors

        def sample(rng: np.random.Generator) -> np.ndarray:
            k = int(np.searchsorted(cum, rng.random(), side="right"))
            return vectors[:, min(k, dim - 1)]

        return sample, "mixed-eigenvector-sampling"

    psi = np.asarray(initial, dtype=complex).ravel()
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ValueError("initial state must be normalized")

    def sample(rng: np.random.Generator) -> np.ndarray:
        return psi

    return sample, "pure"


def _run_batch(h_eff: np.ndarray, terms: LindbladTerms, times: np.ndarray,
               obs_mats: list, initial, master_seed: int,
               start: int, count: int):
    """Simulate trajectories [start, start+count) and return per-time
    (sum, sum of squares) of every observable, reduced in trajectory order."""
    dim = h_eff.shape[0]
    kernel = _BatchKernel(h_eff, terms, times)
    sampler, _ = _initial_sampler(initial, dim)
    rngs = [_rng_for(split_seed(master_seed, start + j)) for j in range(count)]
    psi0 = np.empty((dim, count), dtype=complex)
    for j, rng in enumerate(rngs):
        psi0[:, j] = sampler(rng)

    n_t = len(kernel.times)
    sums = np.zeros((len(obs_mats), n_t))
    sumsq = np.zeros((len(obs_mats), n_t))
    for ti, batch in enumerate(kernel.run(psi0, rngs)):
        for oi, mat in enumerate(obs_mats):
            vals = np.einsum("ij,ik,kj->j", batch.conj(), mat, batch).real
            sums[oi, ti] = np.add.reduce(vals)
            sumsq[oi, ti] = np.add.reduce(vals * vals)
    return sums, sumsq


def run_ensemble(terms: LindbladTerms, initial, times: np.ndarray,
                 observables: Mapping[str, Operator], realizations: int,
                 master_seed: int, workers: int | None = None
                 ) -> TrajectoryEnsembleResult:
    """Seeded trajectory ensemble with deterministic, order-fixed reduction.

    ``initial`` is either a normalized state vector or a density-matrix
    Operator.  ``workers`` > 1 fans fixed-size batches out to processes; it
    defaults to the SPINFLUX_WORKERS environment variable (or 1) and never
    changes the result bits.
    """
    if realizations < 1:
        raise ValueError("need at least one realization")
    h_eff = effective_hamiltonian(terms.hamiltonian, terms)
    _, initial_kind = _initial_sampler(initial, h_eff.dim)
    obs_names = list(observables)
    obs_mats = []
    for name in obs_names:
        op = observables[name]
        if op.dim != h_eff.dim:
            raise DimensionError(f"observable {name!r} dim {op.dim} != {h_eff.dim}")
        obs_mats.append(op.matrix)

    if workers is None:
        workers = int(os.environ.get("SPINFLUX_WORKERS", "1"))
    starts = list(range(0, realizations, BATCH_SIZE))
    jobs = [(h_eff.matrix, terms, times, obs_mats, initial, master_seed,
             s, min(BATCH_SIZE, realizations - s)) for s in starts]

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(_run_batch_star, jobs))
    else:
        partials = [_run_batch(*job) for job in jobs]

    n_t = len(np.asarray(times))
    sums = np.zeros((len(obs_mats), n_t))
    sumsq = np.zeros((len(obs_mats), n_t))
    for ps, pq in partials:
        sums += ps
        sumsq += pq

    r = realizations
    means = sums / r
    if r > 1:
        variance = np.maximum(sumsq - sums * sums / r, 0.0) / (r - 1)
        ses = np.sqrt(variance / r)
    else:
        ses = np.zeros_like(means)

    return TrajectoryEnsembleResult(
        realizations=r,
        times=np.asarray(times, dtype=float),
        means={name: means[i] for i, name in enumerate(obs_names)},
        standard_errors={name: ses[i] for i, name in enumerate(obs_names)},
        master_seed=master_seed,
        provenance={
            "initial_state": initial_kind,
            "seed_scheme": "philox128(master<<64|index)",
            "batch_size": BATCH_SIZE,
            "max_step_norm_loss": MAX_STEP_NORM_LOSS,
        },
    )


def _run_batch_star(args):
    return _run_batch(*args)
