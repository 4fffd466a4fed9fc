"""Fixed-step RK4 integration of the von Neumann equation with optional noise.

States evolve as i d(rho)/dt = [H, rho] (hbar = 1). Noise, when enabled, adds
a random Hermitian matrix scaled by the Rho Noise Power after every step and
renormalizes the trace; hermiticity and unit trace are restored but positive
semidefiniteness is deliberately not enforced.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

from . import kernels
from .hamiltonian import ControlParameters, build_hamiltonian, term_stack
from .linalg import as_square_matrix, commutator, frobenius_distance, hermitize_and_normalize


class NoiseKind(enum.Enum):
    NONE = "none"
    PURE = "pure"
    DECOHERENCE = "decoherence"
    COMPLEX = "complex"

    @classmethod
    def parse(cls, name: str) -> "NoiseKind":
        aliases = {"pure_noise": "pure", "complex_noise": "complex"}
        key = aliases.get(str(name).lower(), str(name).lower())
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown noise kind {name!r}; expected one of "
                             f"{[k.value for k in cls]}") from None

    @property
    def code(self) -> int:
        return {"none": kernels.NOISE_NONE, "pure": kernels.NOISE_PURE,
                "decoherence": kernels.NOISE_DECOHERENCE,
                "complex": kernels.NOISE_COMPLEX}[self.value]


@dataclass(frozen=True)
class EvolutionConfig:
    t_final: float = 1.0
    n_steps: int = 1000
    store_trajectory: bool = False

    def __post_init__(self):
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")

    @property
    def dt(self) -> float:
        return self.t_final / self.n_steps


@dataclass(frozen=True)
class NoiseConfig:
    kind: NoiseKind = NoiseKind.NONE
    rnp: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.rnp < 0:
            raise ValueError("rnp must be nonnegative")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    @property
    def enabled(self) -> bool:
        return self.kind is not NoiseKind.NONE


def rho_derivative(h, rho) -> np.ndarray:
    """-i [H, rho]; Hermitian whenever both inputs are."""
    return -1j * commutator(h, rho)


def rk4_step(p: ControlParameters, rho, t: float, dt: float) -> np.ndarray:
    """One classic RK4 step with H evaluated at t, t + dt/2, and t + dt.

    Reference implementation; evolve() runs the equivalent batched kernel.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    rho = as_square_matrix(rho)
    h1 = build_hamiltonian(p, t)
    h2 = build_hamiltonian(p, t + 0.5 * dt)
    h4 = build_hamiltonian(p, t + dt)
    k1 = rho_derivative(h1, rho)
    k2 = rho_derivative(h2, rho + (0.5 * dt) * k1)
    k3 = rho_derivative(h2, rho + (0.5 * dt) * k2)
    k4 = rho_derivative(h4, rho + dt * k3)
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def sample_noise_matrix(dim: int, cfg: NoiseConfig, rng: np.random.RandomState) -> np.ndarray:
    """One Hermitian noise draw; see kernels module docstring for conventions."""
    if not cfg.enabled:
        raise ValueError("sample_noise_matrix requires kind != none")
    n = np.zeros((dim, dim), dtype=np.complex128)
    if cfg.kind in (NoiseKind.PURE, NoiseKind.COMPLEX):
        a = rng.standard_normal((dim, dim))
        n += (cfg.rnp * 0.5) * (a + a.T)
    if cfg.kind in (NoiseKind.DECOHERENCE, NoiseKind.COMPLEX):
        g = rng.standard_normal((dim, dim))
        n += (1j * cfg.rnp) * (g - g.T)
    return n


def inject_noise(rho, cfg: NoiseConfig, rng: np.random.RandomState) -> np.ndarray:
    """rho -> hermitian part of (rho + noise), renormalized to unit trace."""
    rho = as_square_matrix(rho)
    if not cfg.enabled:
        return rho
    return hermitize_and_normalize(rho + sample_noise_matrix(rho.shape[0], cfg, rng))


def check_density_matrix(rho, dim: int | None = None, atol: float = 1e-8) -> np.ndarray:
    """Validate hermiticity and unit trace (positivity is not checked)."""
    rho = as_square_matrix(rho)
    if dim is not None and rho.shape[0] != dim:
        raise ValueError(f"state dimension {rho.shape[0]} != expected {dim}")
    if frobenius_distance(rho, rho.conj().T) > atol:
        raise ValueError("state is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > atol or abs(np.trace(rho).imag) > atol:
        raise ValueError("state trace is not 1")
    return rho


def evolve(p: ControlParameters, rho0, evo: EvolutionConfig,
           noise: NoiseConfig | None = None):
    """Integrate rho from t=0 to t_final; returns rho(t_final).

    With evo.store_trajectory the return value is (rho_final, trajectory)
    where trajectory has shape (n_steps + 1, d, d) including the initial
    state. Noise draws depend only on (noise.seed, step index), so the
    trajectory run reproduces the plain run bit for bit.
    """
    rho0 = check_density_matrix(rho0, p.dim)
    noise = noise or NoiseConfig()
    terms, coeffs, omega = term_stack(p)
    x = kernels.pack_batch(rho0[None, :, :])
    if not evo.store_trajectory:
        x, _, _ = kernels.evolve_batch(terms, coeffs, omega, x, 0.0, evo.dt,
                                       evo.n_steps, kind=noise.kind.code,
                                       rnp=noise.rnp, seed=noise.seed)
        return kernels.unpack_batch(x, p.dim)[0]
    traj = np.empty((evo.n_steps + 1, p.dim, p.dim), dtype=np.complex128)
    traj[0] = rho0
    for k in range(evo.n_steps):
        x, _, _ = kernels.evolve_batch(terms, coeffs, omega, x, 0.0, evo.dt, 1,
                                       step_offset=k, kind=noise.kind.code,
                                       rnp=noise.rnp, seed=noise.seed)
        traj[k + 1] = kernels.unpack_batch(x, p.dim)[0]
    return traj[-1], traj


def evolve_set(p: ControlParameters, rhos, evo: EvolutionConfig,
               noise: NoiseConfig | None = None):
    """Evolve a batch of states under shared controls and one noise stream.

    Returns (finals, diagnostics) with finals shaped (B, d, d) and
    diagnostics = {"max_trace_dev", "max_purity"} maximized over all steps
    and batch entries.
    """
    noise = noise or NoiseConfig()
    terms, coeffs, omega = term_stack(p)
    x = kernels.pack_batch(rhos)
    x, max_trace_dev, max_purity = kernels.evolve_batch(
        terms, coeffs, omega, x, 0.0, evo.dt, evo.n_steps,
        kind=noise.kind.code, rnp=noise.rnp, seed=noise.seed)
    diag = {"max_trace_dev": max_trace_dev, "max_purity": max_purity}
    return kernels.unpack_batch(x, p.dim), diag


def time_evolution_operator(p: ControlParameters, evo: EvolutionConfig,
                            stage_weights=None) -> np.ndarray:
    """RK4 propagator U(t_final <- 0); noiseless fast path.

    Applying U rho U^dag reproduces evolve() up to the integrator's own
    truncation order and is far cheaper when many states share one control.
    """
    terms, coeffs, omega = term_stack(p)
    return kernels.propagator(terms, coeffs, omega, 0.0, evo.dt, evo.n_steps,
                              stage_weights=stage_weights)


def write_trajectory_csv(path, trajectory, evo: EvolutionConfig, target) -> None:
    """Diagnostic dump: step, t, trace_re, purity, frobenius_distance_to_target."""
    target = as_square_matrix(target)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "t", "trace_re", "purity",
                         "frobenius_distance_to_target"])
        for k, rho in enumerate(trajectory):
            writer.writerow([
                k,
                f"{k * evo.dt:.17g}",
                f"{np.trace(rho).real:.17g}",
                f"{np.trace(rho @ rho).real:.17g}",
                f"{frobenius_distance(rho, target):.17g}",
            ])
