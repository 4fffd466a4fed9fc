"""Time-dependent n-qubit spin Hamiltonian built from Fourier-parameterized controls.

The Hamiltonian is

    H(t) = sum_i k_i(t) X_i  +  sum_i e_i(t) Z_i  +  sum_{i<j} z_ij(t) Z_i Z_j

where each control coefficient is a truncated Fourier series in time. Qubit 0
is the leftmost tensor factor everywhere (most significant bit of the basis
index); every module shares this convention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .linalg import MAX_QUBITS, kron

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)
IDENTITY_2 = np.eye(2, dtype=np.complex128)

DEFAULT_HARMONICS = 3


def default_base_frequency(t_final: float) -> float:
    """Fundamental frequency whose period equals the evolution window."""
    return 2.0 * np.pi / t_final


@dataclass(frozen=True)
class FourierSeries:
    """a0 + sum_{m=1..M} a_m cos(m w t) + b_m sin(m w t)."""

    constant: float
    cosine_coeffs: tuple[float, ...]
    sine_coeffs: tuple[float, ...]
    base_frequency: float

    def __post_init__(self):
        if len(self.cosine_coeffs) != len(self.sine_coeffs):
            raise ValueError("cosine and sine coefficient counts differ")
        if not self.base_frequency > 0:
            raise ValueError("base_frequency must be positive")

    @property
    def harmonics(self) -> int:
        return len(self.cosine_coeffs)

    @classmethod
    def zero(cls, harmonics: int, base_frequency: float) -> "FourierSeries":
        return cls(0.0, (0.0,) * harmonics, (0.0,) * harmonics, base_frequency)

    @classmethod
    def from_row(cls, row, base_frequency: float) -> "FourierSeries":
        """Build from the flat layout [a0, a1..aM, b1..bM]."""
        row = [float(v) for v in row]
        if len(row) % 2 != 1:
            raise ValueError(f"flat series must have odd length, got {len(row)}")
        m = (len(row) - 1) // 2
        return cls(row[0], tuple(row[1 : m + 1]), tuple(row[m + 1 :]), base_frequency)

    def to_row(self) -> list[float]:
        return [self.constant, *self.cosine_coeffs, *self.sine_coeffs]

    def is_zero(self) -> bool:
        return all(v == 0.0 for v in self.to_row())


def eval_series(s: FourierSeries, t: float) -> float:
    """Evaluate the Fourier sum at time t."""
    acc = s.constant
    wt = s.base_frequency * t
    for m in range(1, s.harmonics + 1):
        acc += s.cosine_coeffs[m - 1] * np.cos(m * wt)
        acc += s.sine_coeffs[m - 1] * np.sin(m * wt)
    return float(acc)


def _normalize_pair(i: int, j: int, n_qubits: int) -> tuple[int, int]:
    if i == j:
        raise ValueError(f"coupling pair ({i},{j}) must join distinct qubits")
    if not (0 <= i < n_qubits and 0 <= j < n_qubits):
        raise ValueError(f"coupling pair ({i},{j}) out of range for {n_qubits} qubits")
    return (min(i, j), max(i, j))


@dataclass
class ControlParameters:
    """Per-qubit tunneling/bias series and per-pair coupling series.

    Coupling keys are unordered pairs stored as (min, max). Treat instances
    as immutable; helpers below return modified copies.
    """

    n_qubits: int
    tunneling: tuple[FourierSeries, ...]
    bias: tuple[FourierSeries, ...]
    coupling: dict[tuple[int, int], FourierSeries]

    def __post_init__(self):
        if self.n_qubits < 1 or self.n_qubits > MAX_QUBITS:
            raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}, got {self.n_qubits}")
        self.tunneling = tuple(self.tunneling)
        self.bias = tuple(self.bias)
        if len(self.tunneling) != self.n_qubits or len(self.bias) != self.n_qubits:
            raise ValueError("need one tunneling and one bias series per qubit")
        norm: dict[tuple[int, int], FourierSeries] = {}
        for (i, j), s in self.coupling.items():
            key = _normalize_pair(int(i), int(j), self.n_qubits)
            if key in norm:
                raise ValueError(f"duplicate coupling pair {key}")
            norm[key] = s
        self.coupling = dict(sorted(norm.items()))
        ref = self.tunneling[0]
        for s in self.all_series():
            if s.harmonics != ref.harmonics or s.base_frequency != ref.base_frequency:
                raise ValueError("all series must share harmonic count and base frequency")

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def harmonics(self) -> int:
        return self.tunneling[0].harmonics

    @property
    def base_frequency(self) -> float:
        return self.tunneling[0].base_frequency

    def all_series(self) -> Iterator[FourierSeries]:
        yield from self.tunneling
        yield from self.bias
        yield from self.coupling.values()

    def series_labels(self) -> list[str]:
        labels = [f"tunneling[{q}]" for q in range(self.n_qubits)]
        labels += [f"bias[{q}]" for q in range(self.n_qubits)]
        labels += [f"coupling[{i}-{j}]" for (i, j) in self.coupling]
        return labels


def all_pairs(n_qubits: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n_qubits) for j in range(i + 1, n_qubits)]


def zero_parameters(
    n_qubits: int, harmonics: int = DEFAULT_HARMONICS, base_frequency: float | None = None
) -> ControlParameters:
    """All-zero controls with every unordered coupling pair present."""
    omega = default_base_frequency(1.0) if base_frequency is None else base_frequency
    z = FourierSeries.zero(harmonics, omega)
    return ControlParameters(
        n_qubits=n_qubits,
        tunneling=(z,) * n_qubits,
        bias=(z,) * n_qubits,
        coupling={p: z for p in all_pairs(n_qubits)},
    )


def random_parameters(
    n_qubits: int,
    active_pairs: list[tuple[int, int]],
    rng: np.random.RandomState,
    scale: float = 0.5,
    harmonics: int = DEFAULT_HARMONICS,
    base_frequency: float | None = None,
) -> ControlParameters:
    """Seeded uniform(-scale, scale) draw for tunneling, bias, and active couplings.

    Draw order is the packed coefficient order (tunneling rows, bias rows,
    then active coupling rows), so an initializer is reproducible from the
    RNG seed alone. Inactive pairs are present with zero series.
    """
    omega = default_base_frequency(1.0) if base_frequency is None else base_frequency
    width = 2 * harmonics + 1
    active = [_normalize_pair(i, j, n_qubits) for i, j in active_pairs]
    draws = rng.uniform(-scale, scale, size=(2 * n_qubits + len(active), width))
    tun = tuple(FourierSeries.from_row(draws[q], omega) for q in range(n_qubits))
    bias = tuple(FourierSeries.from_row(draws[n_qubits + q], omega) for q in range(n_qubits))
    coupling = {p: FourierSeries.zero(harmonics, omega) for p in all_pairs(n_qubits)}
    for k, p in enumerate(active):
        coupling[p] = FourierSeries.from_row(draws[2 * n_qubits + k], omega)
    return ControlParameters(n_qubits, tun, bias, coupling)


@lru_cache(maxsize=None)
def embed_pauli(which: str, qubit_index: int, n_qubits: int) -> np.ndarray:
    """I (x) ... (x) sigma (x) ... (x) I with sigma at position qubit_index.

    Position 0 is the leftmost tensor factor. Returned arrays are cached and
    must not be mutated.
    """
    if which == "x":
        sigma = PAULI_X
    elif which == "z":
        sigma = PAULI_Z
    else:
        raise ValueError(f"axis must be 'x' or 'z', got {which!r}")
    if not (0 <= qubit_index < n_qubits):
        raise IndexError(f"qubit index {qubit_index} out of range for {n_qubits} qubits")
    m = np.eye(1, dtype=np.complex128)
    for q in range(n_qubits):
        m = kron(m, sigma if q == qubit_index else IDENTITY_2)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=None)
def embed_coupling(i: int, j: int, n_qubits: int) -> np.ndarray:
    """Z_i Z_j embedding; diagonal with +/-1 entries."""
    i, j = _normalize_pair(i, j, n_qubits)
    m = embed_pauli("z", i, n_qubits) @ embed_pauli("z", j, n_qubits)
    m.setflags(write=False)
    return m


def build_hamiltonian(p: ControlParameters, t: float) -> np.ndarray:
    """Reference construction of H(t); Hermitian by accumulation of Hermitian terms.

    The hot paths use the stacked-term kernels instead; this form is kept as
    the readable definition that everything else is tested against.
    """
    h = np.zeros((p.dim, p.dim), dtype=np.complex128)
    for q in range(p.n_qubits):
        h += eval_series(p.tunneling[q], t) * embed_pauli("x", q, p.n_qubits)
    for q in range(p.n_qubits):
        h += eval_series(p.bias[q], t) * embed_pauli("z", q, p.n_qubits)
    for (i, j), s in p.coupling.items():
        h += eval_series(s, t) * embed_coupling(i, j, p.n_qubits)
    return h


def term_stack(p: ControlParameters) -> tuple[np.ndarray, np.ndarray, float]:
    """Stack (terms, coeff_rows, base_frequency) for the evolution kernels.

    Row k of coeff_rows holds [a0, a1..aM, b1..bM] for term matrix k. Coupling
    series that are identically zero are dropped; adding zero matrices would
    not change H bitwise, only waste kernel time.
    """
    mats = [embed_pauli("x", q, p.n_qubits) for q in range(p.n_qubits)]
    rows = [s.to_row() for s in p.tunneling]
    mats += [embed_pauli("z", q, p.n_qubits) for q in range(p.n_qubits)]
    rows += [s.to_row() for s in p.bias]
    for (i, j), s in p.coupling.items():
        if not s.is_zero():
            mats.append(embed_coupling(i, j, p.n_qubits))
            rows.append(s.to_row())
    terms = np.ascontiguousarray(np.stack(mats))
    coeffs = np.ascontiguousarray(np.array(rows, dtype=np.float64))
    return terms, coeffs, p.base_frequency


# -- flat coefficient vector <-> parameters, used by the trainer --------------

def coefficient_vector(p: ControlParameters) -> np.ndarray:
    """Concatenation of every series row in packed order."""
    return np.concatenate([np.asarray(s.to_row()) for s in p.all_series()])


def coefficient_count(p: ControlParameters) -> int:
    return (2 * p.n_qubits + len(p.coupling)) * (2 * p.harmonics + 1)


def with_coefficient_vector(p: ControlParameters, vec) -> ControlParameters:
    """Rebuild parameters from a packed coefficient vector."""
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (coefficient_count(p),):
        raise ValueError(f"expected {coefficient_count(p)} coefficients, got {vec.shape}")
    width = 2 * p.harmonics + 1
    omega = p.base_frequency
    rows = vec.reshape(-1, width)
    n = p.n_qubits
    tun = tuple(FourierSeries.from_row(rows[q], omega) for q in range(n))
    bias = tuple(FourierSeries.from_row(rows[n + q], omega) for q in range(n))
    coupling = {
        pair: FourierSeries.from_row(rows[2 * n + k], omega)
        for k, pair in enumerate(p.coupling)
    }
    return ControlParameters(n, tun, bias, coupling)


# -- JSON persistence ----------------------------------------------------------

def to_dict(p: ControlParameters) -> dict:
    return {
        "n_qubits": p.n_qubits,
        "M": p.harmonics,
        "base_frequency": p.base_frequency,
        "tunneling": [s.to_row() for s in p.tunneling],
        "bias": [s.to_row() for s in p.bias],
        "coupling": {f"{i}-{j}": s.to_row() for (i, j), s in p.coupling.items()},
    }


def from_dict(d: dict) -> ControlParameters:
    try:
        n = int(d["n_qubits"])
        m = int(d["M"])
        omega = float(d["base_frequency"])
        width = 2 * m + 1
        for key in ("tunneling", "bias"):
            if len(d[key]) != n:
                raise ValueError(f"{key} must list {n} series")
        for row in list(d["tunneling"]) + list(d["bias"]) + list(d["coupling"].values()):
            if len(row) != width:
                raise ValueError(f"series rows must have {width} entries for M={m}")
        tun = tuple(FourierSeries.from_row(r, omega) for r in d["tunneling"])
        bias = tuple(FourierSeries.from_row(r, omega) for r in d["bias"])
        coupling = {}
        for key, row in d["coupling"].items():
            i, j = (int(v) for v in key.split("-"))
            coupling[(i, j)] = FourierSeries.from_row(row, omega)
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValueError(f"malformed parameter document: {exc}") from exc
    return ControlParameters(n, tun, bias, coupling)


def save_params(p: ControlParameters, path) -> None:
    with open(path, "w") as fh:
        json.dump(to_dict(p), fh, indent=1)
        fh.write("\n")


def load_params(path) -> ControlParameters:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"cannot parse parameter file {path}: {exc}") from exc
    return from_dict(doc)
