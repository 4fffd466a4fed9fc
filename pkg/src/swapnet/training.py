"""Levenberg-Marquardt training of the control coefficients.

Residuals are per-sample Frobenius distances between the evolved and target
states. Derivatives come from central finite differences on the packed
coefficient vector; with a few dozen coefficients and cheap two-qubit
evolutions this is both fast enough and directly checkable against a
Richardson-extrapolated reference.

Noiseless residual evaluation uses the RK4 propagator (one integration per
coefficient probe instead of one per sample), which matches per-state
integration to well below the finite-difference scale. When noise is
enabled, the accept/reject RMS is averaged over a configured number of noise
draws while the Jacobian and the least-squares right-hand side stay
noiseless.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .evolution import EvolutionConfig, NoiseConfig, evolve_set, time_evolution_operator
from .hamiltonian import ControlParameters, coefficient_count, coefficient_vector, with_coefficient_vector
from .kernels import mix_seed
from .states import TrainingSample

LAMBDA_OVERFLOW = 1e12


@dataclass
class TrainingConfig:
    max_epochs: int = 500
    target_rms: float = 1e-6
    lambda_init: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 0.1
    fd_step: float = 1e-5
    trainable_mask: np.ndarray | None = None
    noise_draws: int = 8
    noise_mode: str = "frozen"

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")
        if self.target_rms < 0:
            raise ValueError("target_rms must be nonnegative")
        if not (self.lambda_init > 0 and self.lambda_up > 1 and 0 < self.lambda_down < 1):
            raise ValueError("lambda schedule must satisfy init>0, up>1, 0<down<1")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")
        if self.noise_draws < 1:
            raise ValueError("noise_draws must be at least 1")
        if self.noise_mode not in ("frozen", "fresh"):
            raise ValueError(f"noise_mode must be frozen|fresh, got {self.noise_mode!r}")

    def resolved_mask(self, p: ControlParameters) -> np.ndarray:
        n = coefficient_count(p)
        if self.trainable_mask is None:
            return np.ones(n, dtype=bool)
        mask = np.asarray(self.trainable_mask, dtype=bool)
        if mask.shape != (n,):
            raise ValueError(f"trainable_mask must have {n} entries, got {mask.shape}")
        return mask


@dataclass
class EpochRecord:
    epoch: int
    rms: float
    lam: float
    accepted: bool
    wall_time: float


@dataclass
class TrainingHistory:
    records: list[EpochRecord] = field(default_factory=list)
    reached_target: bool = False
    stop_reason: str = ""

    @property
    def final_rms(self) -> float:
        accepted = [r.rms for r in self.records if r.accepted]
        return accepted[-1] if accepted else math.inf

    def accepted_rms(self) -> list[float]:
        return [r.rms for r in self.records if r.accepted]

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("epoch,rms,lambda,accepted\n")
            for r in self.records:
                fh.write(f"{r.epoch},{r.rms:.17g},{r.lam:.17g},{int(r.accepted)}\n")


def _stack(samples: list[TrainingSample]):
    rhos = np.stack([s.initial for s in samples])
    targets = np.stack([s.target for s in samples])
    return rhos, targets


def residual_vector(p: ControlParameters, samples: list[TrainingSample],
                    evo: EvolutionConfig, noise: NoiseConfig | None = None) -> np.ndarray:
    """One Frobenius-distance residual per sample.

    Noiseless: final states come from conjugation by the RK4 propagator.
    Noisy: one seeded noisy evolution of the whole set.
    """
    rhos, targets = _stack(samples)
    if noise is None or not noise.enabled:
        u = time_evolution_operator(p, evo)
        finals = u @ rhos @ u.conj().T
    else:
        finals, _ = evolve_set(p, rhos, evo, noise)
    return np.linalg.norm((finals - targets).reshape(len(samples), -1), axis=1)


def noise_averaged_residuals(p: ControlParameters, samples: list[TrainingSample],
                             evo: EvolutionConfig, noise: NoiseConfig,
                             n_draws: int, seed: int) -> np.ndarray:
    """Per-sample residuals averaged over n_draws independent noise draws.

    All draws run as one batch; draw j of sample s occupies batch slot
    j * n_samples + s, so the result is a pure function of (seed, samples).
    """
    rhos, targets = _stack(samples)
    batch = np.tile(rhos, (n_draws, 1, 1))
    finals, _ = evolve_set(p, batch, evo,
                           NoiseConfig(kind=noise.kind, rnp=noise.rnp, seed=seed))
    resid = np.linalg.norm(
        (finals - np.tile(targets, (n_draws, 1, 1))).reshape(len(batch), -1), axis=1)
    return resid.reshape(n_draws, len(samples)).mean(axis=0)


def rms_of(residuals: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(residuals))))


def jacobian_fd(p: ControlParameters, samples: list[TrainingSample],
                evo: EvolutionConfig, trainable_mask: np.ndarray,
                fd_step: float) -> np.ndarray:
    """Central-difference Jacobian of the noiseless residuals, one column per
    trainable coefficient."""
    base = coefficient_vector(p)
    idx = np.flatnonzero(trainable_mask)
    jac = np.empty((len(samples), idx.size))
    for col, i in enumerate(idx):
        v = base.copy()
        v[i] = base[i] + fd_step
        r_plus = residual_vector(with_coefficient_vector(p, v), samples, evo)
        v[i] = base[i] - fd_step
        r_minus = residual_vector(with_coefficient_vector(p, v), samples, evo)
        jac[:, col] = (r_plus - r_minus) / (2.0 * fd_step)
    return jac


def lm_step(p: ControlParameters, jacobian: np.ndarray, residuals: np.ndarray,
            lam: float, trainable_mask: np.ndarray) -> ControlParameters:
    """Solve (J^T J + lam * diag(J^T J)) delta = -J^T r and apply delta.

    Raises numpy.linalg.LinAlgError for a singular or non-finite normal
    matrix; the caller is expected to raise lam and retry.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    jtj = jacobian.T @ jacobian
    a = jtj + lam * np.diag(np.diag(jtj))
    if not np.all(np.isfinite(a)):
        raise np.linalg.LinAlgError("non-finite normal matrix")
    delta = np.linalg.solve(a, -(jacobian.T @ residuals))
    vec = coefficient_vector(p)
    vec[np.flatnonzero(trainable_mask)] += delta
    return with_coefficient_vector(p, vec)


def train(p0: ControlParameters, samples: list[TrainingSample], evo: EvolutionConfig,
          cfg: TrainingConfig, noise: NoiseConfig | None = None
          ) -> tuple[ControlParameters, TrainingHistory]:
    """Levenberg-Marquardt accept/reject loop.

    Every candidate evaluation is one epoch row in the history; candidates
    are accepted only when their RMS strictly improves, so the accepted-row
    RMS sequence always decreases. Non-convergence is reported through the
    history, not raised.
    """
    mask = cfg.resolved_mask(p0)
    noisy = noise is not None and noise.enabled

    def acceptance_rms(p: ControlParameters, noiseless_r: np.ndarray, epoch: int) -> float:
        if not noisy:
            return rms_of(noiseless_r)
        epoch_key = 0 if cfg.noise_mode == "frozen" else epoch
        seed = mix_seed(noise.seed, epoch_key)
        return rms_of(noise_averaged_residuals(p, samples, evo, noise,
                                               cfg.noise_draws, seed))

    history = TrainingHistory()
    t_start = time.perf_counter()
    params = p0
    r = residual_vector(params, samples, evo)
    best = acceptance_rms(params, r, 0)
    lam = cfg.lambda_init
    history.records.append(EpochRecord(0, best, lam, True, time.perf_counter() - t_start))
    if best <= cfg.target_rms:
        history.reached_target = True
        history.stop_reason = "target reached by initial parameters"
        return params, history

    epoch = 0
    while epoch < cfg.max_epochs and best > cfg.target_rms and lam < LAMBDA_OVERFLOW:
        jac = jacobian_fd(params, samples, evo, mask, cfg.fd_step)
        accepted = False
        while not accepted and epoch < cfg.max_epochs and lam < LAMBDA_OVERFLOW:
            epoch += 1
            lam_used = lam
            try:
                cand = lm_step(params, jac, r, lam, mask)
            except np.linalg.LinAlgError:
                lam *= cfg.lambda_up
                history.records.append(EpochRecord(epoch, math.inf, lam_used, False,
                                                   time.perf_counter() - t_start))
                continue
            r_cand = residual_vector(cand, samples, evo)
            cand_rms = acceptance_rms(cand, r_cand, epoch)
            if math.isfinite(cand_rms) and cand_rms < best:
                params, r, best = cand, r_cand, cand_rms
                lam *= cfg.lambda_down
                accepted = True
            else:
                lam *= cfg.lambda_up
            history.records.append(EpochRecord(epoch, cand_rms, lam_used, accepted,
                                               time.perf_counter() - t_start))

    history.reached_target = best <= cfg.target_rms
    if history.reached_target:
        history.stop_reason = f"target rms reached after {epoch} epochs"
    elif lam >= LAMBDA_OVERFLOW:
        history.stop_reason = "damping overflow"
    else:
        history.stop_reason = "epoch budget exhausted"
    return params, history
