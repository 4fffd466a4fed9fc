"""Training and test states: charge basis, Haar-random states, and SWAP targets."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import MAX_QUBITS


@dataclass(frozen=True)
class PairingScheme:
    """Disjoint (input, output) qubit pairs whose states the target operation swaps."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs",
                           tuple((int(i), int(j)) for i, j in self.pairs))

    def validate(self, n_qubits: int) -> None:
        seen = [q for pair in self.pairs for q in pair]
        if sorted(seen) != list(range(n_qubits)):
            raise ValueError(
                f"pairs {self.pairs} must cover every qubit of {n_qubits} exactly once")

    @classmethod
    def default(cls, n_qubits: int) -> "PairingScheme":
        if n_qubits % 2:
            raise ValueError("pairing requires an even qubit count")
        return cls(tuple((q, q + 1) for q in range(0, n_qubits, 2)))


@dataclass
class TrainingSample:
    initial: np.ndarray
    target: np.ndarray
    label: str


def _check_qubit_count(n_qubits: int) -> None:
    if not (1 <= n_qubits <= MAX_QUBITS):
        raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits}")


def charge_basis(n_qubits: int) -> list[np.ndarray]:
    """The 2^n computational basis vectors."""
    _check_qubit_count(n_qubits)
    return [np.eye(2**n_qubits, dtype=np.complex128)[i] for i in range(2**n_qubits)]


def random_pure_state(n_qubits: int, rng: np.random.RandomState) -> np.ndarray:
    """Haar-random unit vector: normalized complex standard normal draw."""
    _check_qubit_count(n_qubits)
    d = 2**n_qubits
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def product_random_state(scheme: PairingScheme, n_qubits: int,
                         rng: np.random.RandomState) -> np.ndarray:
    """Kron of independent Haar-random two-qubit states, one per pair."""
    scheme.validate(n_qubits)
    v = np.ones(1, dtype=np.complex128)
    for _ in scheme.pairs:
        v = np.kron(v, random_pure_state(2, rng))
    return v


def projector(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, psi.conj())


def swap_unitary(scheme: PairingScheme, n_qubits: int) -> np.ndarray:
    """Permutation matrix exchanging the basis bits of each paired qubit.

    Qubit q occupies bit (n-1-q) of the basis index, i.e. qubit 0 is the most
    significant bit, matching the leftmost-factor tensor convention.
    """
    _check_qubit_count(n_qubits)
    scheme.validate(n_qubits)
    d = 2**n_qubits
    u = np.zeros((d, d), dtype=np.complex128)
    for b in range(d):
        bits = [(b >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits)]
        for i, j in scheme.pairs:
            bits[i], bits[j] = bits[j], bits[i]
        b_new = 0
        for q, v in enumerate(bits):
            b_new |= v << (n_qubits - 1 - q)
        u[b_new, b] = 1.0
    return u


def make_training_set(n_qubits: int, scheme: PairingScheme, n_random: int,
                      rng: np.random.RandomState,
                      random_mode: str = "joint") -> list[TrainingSample]:
    """Charge-basis samples plus n_random Haar states, with SWAP-applied targets.

    random_mode "joint" draws from the full 2^n space; "product" draws an
    independent two-qubit state per pair.
    """
    if random_mode not in ("joint", "product"):
        raise ValueError(f"random_mode must be joint|product, got {random_mode!r}")
    u = swap_unitary(scheme, n_qubits)
    samples = []
    for i, v in enumerate(charge_basis(n_qubits)):
        rho = projector(v)
        samples.append(TrainingSample(rho, u @ rho @ u.conj().T, f"basis-{i}"))
    for k in range(n_random):
        v = (random_pure_state(n_qubits, rng) if random_mode == "joint"
             else product_random_state(scheme, n_qubits, rng))
        rho = projector(v)
        samples.append(TrainingSample(rho, u @ rho @ u.conj().T, f"random-{k}"))
    return samples


@dataclass
class TrainingSetManifest:
    """Everything needed to regenerate a sample set exactly."""

    n_qubits: int
    seed: int
    n_random: int
    pairs: tuple[tuple[int, int], ...]
    random_mode: str = "joint"
    labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.pairs = tuple((int(i), int(j)) for i, j in self.pairs)
        if not self.labels:
            self.labels = ([f"basis-{i}" for i in range(2**self.n_qubits)]
                           + [f"random-{k}" for k in range(self.n_random)])

    @property
    def scheme(self) -> PairingScheme:
        return PairingScheme(self.pairs)

    def to_dict(self) -> dict:
        return {"n_qubits": self.n_qubits, "seed": self.seed,
                "n_random": self.n_random, "pairs": [list(p) for p in self.pairs],
                "random_mode": self.random_mode, "labels": list(self.labels)}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingSetManifest":
        try:
            return cls(n_qubits=int(d["n_qubits"]), seed=int(d["seed"]),
                       n_random=int(d["n_random"]),
                       pairs=tuple(tuple(p) for p in d["pairs"]),
                       random_mode=d.get("random_mode", "joint"),
                       labels=list(d.get("labels", [])))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed manifest: {exc}") from exc


def save_manifest(m: TrainingSetManifest, path) -> None:
    with open(path, "w") as fh:
        json.dump(m.to_dict(), fh, indent=1)
        fh.write("\n")


def load_manifest(path) -> TrainingSetManifest:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"cannot parse manifest {path}: {exc}") from exc
    return TrainingSetManifest.from_dict(doc)


def samples_from_manifest(m: TrainingSetManifest) -> list[TrainingSample]:
    """Regenerate exactly the listed samples.

    Random states are drawn in index order from RandomState(seed), so a
    manifest listing a subset of labels yields the same states those labels
    had in the full set.
    """
    m.scheme.validate(m.n_qubits)
    u = swap_unitary(m.scheme, m.n_qubits)
    basis = charge_basis(m.n_qubits)
    max_rand = -1
    for label in m.labels:
        if label.startswith("random-"):
            max_rand = max(max_rand, int(label.split("-", 1)[1]))
    rng = np.random.RandomState(m.seed)
    randoms = []
    for _ in range(max_rand + 1):
        randoms.append(random_pure_state(m.n_qubits, rng) if m.random_mode == "joint"
                       else product_random_state(m.scheme, m.n_qubits, rng))
    samples = []
    for label in m.labels:
        tag, idx = label.split("-", 1)
        if tag == "basis":
            v = basis[int(idx)]
        elif tag == "random":
            v = randoms[int(idx)]
        else:
            raise ValueError(f"unknown sample label {label!r}")
        rho = projector(v)
        samples.append(TrainingSample(rho, u @ rho @ u.conj().T, label))
    return samples
