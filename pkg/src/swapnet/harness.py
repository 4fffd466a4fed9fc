"""Experiment orchestration and the ``swapnet`` command-line interface.

Subcommands: ``train``, ``transfer``, ``evaluate``, ``noise-sweep``,
``oracle-check``. Every command reads one JSON config document carrying a
versioned ``schema`` field (except transfer and oracle-check, which take
plain arguments). Exit codes: 0 success, 2 config error, 3 numerical-check
failure, 4 training did not reach its target.

Reproducibility contract: every results row carries the seed and the
parameter-file hash that produced it, and each sweep cell derives its own
RNG stream as

    cell_seed = mix_seed(mix_seed(mix_seed(base_seed, n_qubits), kind_code), rnp_index)

so cells are independent of execution order and of each other.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .evolution import EvolutionConfig, NoiseConfig, NoiseKind, evolve_set, time_evolution_operator
from .hamiltonian import (ControlParameters, default_base_frequency, load_params,
                          random_parameters, save_params, term_stack)
from .kernels import CORRUPT_STAGE_WEIGHTS, evolve_batch, mix_seed, pack_batch, unpack_batch
from .linalg import frobenius_distance, matrix_exponential
from .scaling import CROSS_COUPLING_MODES, ReplicationSpec, replicate
from .states import (PairingScheme, TrainingSetManifest, load_manifest,
                     samples_from_manifest, save_manifest)
from .training import TrainingConfig, jacobian_fd, train

RESULTS_HEADER = ("n_qubits", "noise_kind", "rnp", "n_noise_draws",
                  "rms_mean", "rms_std", "seed", "params_hash")

DEFAULT_RNP_VALUES = [5e-7, 5e-6, 5e-5, 5e-4, 5e-3]


class ConfigError(ValueError):
    """Raised for malformed config documents or input files."""


@dataclass
class ExperimentRecord:
    n_qubits: int
    noise_kind: str
    rnp: float
    n_noise_draws: int
    rms_mean: float
    rms_std: float
    seed: int
    params_hash: str
    timestamp: float = 0.0

    def csv_row(self) -> str:
        return (f"{self.n_qubits},{self.noise_kind},{self.rnp:.17g},"
                f"{self.n_noise_draws},{self.rms_mean:.17g},{self.rms_std:.17g},"
                f"{self.seed},{self.params_hash}")


@dataclass
class SweepConfig:
    base_seed: int
    n_qubits_list: list[int]
    noise_kinds: list[str]
    rnp_values: list[float]
    n_noise_draws: int
    params_files: dict[int, str]
    manifests: dict[int, dict]
    t_final: float
    n_steps: dict[int, int]

    def __post_init__(self):
        for name in ("n_qubits_list", "noise_kinds", "rnp_values"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must not be empty")
        if self.n_noise_draws < 1:
            raise ConfigError("n_noise_draws must be at least 1")
        for n in self.n_qubits_list:
            if n not in self.params_files:
                raise ConfigError(f"no parameter file configured for n_qubits={n}")
            if n not in self.manifests:
                raise ConfigError(f"no test set configured for n_qubits={n}")
            if n not in self.n_steps:
                raise ConfigError(f"no step count configured for n_qubits={n}")


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def stream_seed(base_seed: int, n_qubits: int, kind: NoiseKind, rnp_index: int) -> int:
    """Per-cell RNG stream derivation; see module docstring."""
    return mix_seed(mix_seed(mix_seed(base_seed, n_qubits), kind.code), rnp_index)


def evaluate_rms(params: ControlParameters, samples, evo: EvolutionConfig,
                 kind: NoiseKind, rnp: float, n_draws: int, seed: int):
    """Test-set RMS, draw-averaged when noisy.

    Returns (rms_mean, rms_std, draws_used, diagnostics). rnp == 0 evaluates
    through the noiseless path, so a zero-scale noise kind reports exactly
    the noise-free value. Noiseless evaluation conjugates by the RK4
    propagator; its unitarity defect is reported in the diagnostics.
    """
    rhos = np.stack([s.initial for s in samples])
    targets = np.stack([s.target for s in samples])
    if kind is NoiseKind.NONE or rnp == 0.0:
        u = time_evolution_operator(params, evo)
        finals = u @ rhos @ u.conj().T
        resid = np.linalg.norm((finals - targets).reshape(len(samples), -1), axis=1)
        traces = np.einsum("bii->b", finals).real
        purity = np.einsum("bij,bij->b", finals, finals.conj()).real
        diag = {
            "max_trace_dev": float(np.max(np.abs(traces - 1.0))),
            "max_purity": float(np.max(purity)),
            "unitarity_defect": frobenius_distance(u.conj().T @ u, np.eye(params.dim)),
        }
        rms = float(np.sqrt(np.mean(np.square(resid))))
        return rms, 0.0, 1, diag
    batch = np.tile(rhos, (n_draws, 1, 1))
    noise = NoiseConfig(kind=kind, rnp=rnp, seed=seed)
    finals, diag = evolve_set(params, batch, evo, noise)
    resid = np.linalg.norm(
        (finals - np.tile(targets, (n_draws, 1, 1))).reshape(len(batch), -1), axis=1)
    per_draw = np.sqrt(np.mean(np.square(resid.reshape(n_draws, len(samples))), axis=1))
    std = float(np.std(per_draw, ddof=1)) if n_draws > 1 else 0.0
    return float(np.mean(per_draw)), std, n_draws, diag


def _sweep_cell(task: dict) -> dict:
    params = load_params(task["params_file"])
    samples = samples_from_manifest(TrainingSetManifest.from_dict(task["manifest"]))
    evo = EvolutionConfig(t_final=task["t_final"], n_steps=task["n_steps"])
    kind = NoiseKind.parse(task["kind"])
    rms_mean, rms_std, draws, diag = evaluate_rms(
        params, samples, evo, kind, task["rnp"], task["n_draws"], task["seed"])
    return {"rms_mean": rms_mean, "rms_std": rms_std, "draws": draws, "diag": diag}


def run_sweep(cfg: SweepConfig, jobs: int = 1):
    """Full (n_qubits x kind x rnp) cross product.

    Returns (records, diagnostics). A failed cell produces a NaN record and
    the sweep continues. Records are emitted in configuration order no
    matter how cells are scheduled.
    """
    tasks = []
    for n in cfg.n_qubits_list:
        for kind_name in cfg.noise_kinds:
            kind = NoiseKind.parse(kind_name)
            for rnp_index, rnp in enumerate(cfg.rnp_values):
                tasks.append({
                    "n": n, "kind": kind.value, "rnp": rnp,
                    "seed": stream_seed(cfg.base_seed, n, kind, rnp_index),
                    "params_file": cfg.params_files[n],
                    "manifest": cfg.manifests[n],
                    "t_final": cfg.t_final, "n_steps": cfg.n_steps[n],
                    "n_draws": cfg.n_noise_draws,
                })
    results: list[dict | Exception] = [None] * len(tasks)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_sweep_cell, t) for t in tasks]
            for i, fut in enumerate(futures):
                try:
                    results[i] = fut.result()
                except Exception as exc:  # noqa: BLE001 - error rows by policy
                    results[i] = exc
    else:
        for i, t in enumerate(tasks):
            try:
                results[i] = _sweep_cell(t)
            except Exception as exc:  # noqa: BLE001
                results[i] = exc

    records, diags, failures = [], [], []
    for task, res in zip(tasks, results):
        phash = file_hash(task["params_file"])
        if isinstance(res, Exception):
            failures.append((task, res))
            records.append(ExperimentRecord(task["n"], task["kind"], task["rnp"],
                                            cfg.n_noise_draws, math.nan, math.nan,
                                            task["seed"], phash, time.time()))
        else:
            records.append(ExperimentRecord(task["n"], task["kind"], task["rnp"],
                                            res["draws"], res["rms_mean"],
                                            res["rms_std"], task["seed"], phash,
                                            time.time()))
            diags.append({"n": task["n"], "kind": task["kind"], "rnp": task["rnp"],
                          **res["diag"]})
    for task, exc in failures:
        print(f"warning: cell (n={task['n']}, {task['kind']}, rnp={task['rnp']:g}) "
              f"failed: {exc}", file=sys.stderr)
    return records, diags


def write_records_csv(records: list[ExperimentRecord], path) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(RESULTS_HEADER) + "\n")
        for rec in records:
            fh.write(rec.csv_row() + "\n")


def append_records_csv(records: list[ExperimentRecord], path) -> None:
    path = Path(path)
    new = not path.exists()
    with open(path, "a") as fh:
        if new:
            fh.write(",".join(RESULTS_HEADER) + "\n")
        for rec in records:
            fh.write(rec.csv_row() + "\n")


def read_records_csv(path) -> list[ExperimentRecord]:
    records = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != RESULTS_HEADER:
            raise ConfigError(f"unexpected results header in {path}: {header}")
        for line in fh:
            f = line.strip().split(",")
            if not line.strip():
                continue
            records.append(ExperimentRecord(int(f[0]), f[1], float(f[2]), int(f[3]),
                                            float(f[4]), float(f[5]), int(f[6]), f[7]))
    return records


def plot_sweep_csv(csv_path, out_dir) -> list[Path]:
    """One log-log RMS-vs-RNP figure per qubit count, from the CSV alone.

    Output SVGs are byte-stable for a given matplotlib version: the hash salt
    is pinned and no date metadata is embedded. Zero or failed cells are
    skipped (log axes).
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    matplotlib.rcParams["svg.hashsalt"] = "swapnet"

    records = read_records_csv(csv_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for n in sorted({r.n_qubits for r in records}):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for kind in dict.fromkeys(r.noise_kind for r in records if r.n_qubits == n):
            rows = [r for r in records
                    if r.n_qubits == n and r.noise_kind == kind
                    and r.rnp > 0 and math.isfinite(r.rms_mean) and r.rms_mean > 0]
            if not rows:
                continue
            rows.sort(key=lambda r: r.rnp)
            x = np.array([r.rnp for r in rows])
            mean = np.array([r.rms_mean for r in rows])
            std = np.array([r.rms_std for r in rows])
            ax.plot(x, mean, marker="o", label=kind)
            ax.fill_between(x, np.maximum(mean - std, 1e-300), mean + std, alpha=0.25)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("Rho Noise Power")
        ax.set_ylabel("RMS error")
        ax.set_title(f"{n} qubits")
        ax.legend()
        ax.grid(True, which="both", alpha=0.3)
        path = out_dir / f"rms-vs-rnp-{n}q.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# integrator and gradient self-checks
# ---------------------------------------------------------------------------

def _constant_params(n_qubits: int, values: dict) -> ControlParameters:
    from .hamiltonian import FourierSeries, all_pairs
    omega = default_base_frequency(1.0)

    def const(v):
        return FourierSeries(v, (), (), omega)

    return ControlParameters(
        n_qubits=n_qubits,
        tunneling=tuple(const(v) for v in values["tunneling"]),
        bias=tuple(const(v) for v in values["bias"]),
        coupling={p: const(values["coupling"].get(p, 0.0)) for p in all_pairs(n_qubits)},
    )


def measure_rk4_order(n_qubits: int, stage_weights=None) -> float:
    """Log-log error slope of the stepper against the matrix-exponential oracle."""
    if n_qubits == 1:
        params = _constant_params(1, {"tunneling": [0.9], "bias": [0.6], "coupling": {}})
    else:
        params = _constant_params(2, {"tunneling": [0.8, 0.5], "bias": [0.4, 0.9],
                                      "coupling": {(0, 1): 0.7}})
    terms, coeffs, omega = term_stack(params)
    h = sum(c[0] * m for c, m in zip(coeffs, terms))
    d = params.dim
    plus = np.full(d, 1.0 / np.sqrt(d), dtype=np.complex128)
    rho0 = np.outer(plus, plus.conj())
    u_exact = matrix_exponential(-1j * h)
    rho_exact = u_exact @ rho0 @ u_exact.conj().T
    errs, dts = [], []
    for n_steps in (8, 16, 32, 64):
        dt = 1.0 / n_steps
        x, _, _ = evolve_batch(terms, coeffs, omega, pack_batch(rho0), 0.0, dt,
                               n_steps, stage_weights=stage_weights)
        errs.append(frobenius_distance(unpack_batch(x, d)[0], rho_exact))
        dts.append(dt)
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    return float(slope)


def measure_jacobian_error(seed: int = 97, fd_step: float = 1e-5) -> float:
    """Max relative column error of the FD Jacobian vs Richardson extrapolation."""
    rng = np.random.RandomState(seed)
    params = random_parameters(2, [(0, 1)], rng)
    manifest = TrainingSetManifest(n_qubits=2, seed=seed + 1, n_random=4,
                                   pairs=((0, 1),))
    samples = samples_from_manifest(manifest)
    evo = EvolutionConfig(t_final=1.0, n_steps=200)
    mask = np.ones(35, dtype=bool)
    d1 = jacobian_fd(params, samples, evo, mask, fd_step)
    d2 = jacobian_fd(params, samples, evo, mask, 2.0 * fd_step)
    richardson = (4.0 * d1 - d2) / 3.0
    col_err = np.linalg.norm(d1 - richardson, axis=0)
    col_ref = np.linalg.norm(richardson, axis=0)
    return float(np.max(col_err / np.maximum(col_ref, 1e-12)))


def oracle_check(corrupt_rk4: bool = False) -> dict:
    """Integrator-order and gradient checks; the build must pass both.

    corrupt_rk4 swaps in deliberately wrong stage weights as a negative
    control: the measured order must then collapse and the check must fail.
    """
    weights = CORRUPT_STAGE_WEIGHTS if corrupt_rk4 else None
    order_1q = measure_rk4_order(1, stage_weights=weights)
    order_2q = measure_rk4_order(2, stage_weights=weights)
    jac_err = measure_jacobian_error()
    ok = (abs(order_1q - 4.0) <= 0.3 and abs(order_2q - 4.0) <= 0.3
          and jac_err <= 1e-4)
    return {"rk4_order_1q": order_1q, "rk4_order_2q": order_2q,
            "jacobian_max_rel_err": jac_err, "passed": ok}


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

def _load_config(path, expected_schema: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema") != expected_schema:
        raise ConfigError(f"config {path} must declare schema {expected_schema!r}")
    return doc


def _resolve(base: Path, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else base / p


def _out_base(args, config_path: Path) -> Path:
    base = Path(args.out_dir) if args.out_dir else config_path.parent
    base.mkdir(parents=True, exist_ok=True)
    return base


def _get(doc: dict, key: str, default=None, required: bool = False):
    if required and key not in doc:
        raise ConfigError(f"missing config key {key!r}")
    return doc.get(key, default)


def _manifest_doc(spec, config_dir: Path) -> dict:
    """Accept either an inline manifest object or a path to one."""
    if isinstance(spec, str):
        return load_manifest(_resolve(config_dir, spec)).to_dict()
    if isinstance(spec, dict):
        return TrainingSetManifest.from_dict(spec).to_dict()
    raise ConfigError("test set must be a manifest path or an inline manifest object")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_train(args) -> int:
    config_path = Path(args.config)
    doc = _load_config(config_path, "swapnet/train/v1")
    n_qubits = int(_get(doc, "n_qubits", 2))
    ts = _get(doc, "training_set", {}, required=True)
    init = _get(doc, "init", {})
    evo_doc = _get(doc, "evolution", {})
    lm_doc = _get(doc, "lm", {})
    noise_doc = _get(doc, "noise", {})
    outputs = _get(doc, "outputs", {}, required=True)

    try:
        scheme = PairingScheme.default(n_qubits)
        evo = EvolutionConfig(t_final=float(evo_doc.get("t_final", 1.0)),
                              n_steps=int(evo_doc.get("n_steps", 1000)))
        manifest = TrainingSetManifest(
            n_qubits=n_qubits,
            seed=int(ts.get("seed", 0)) if args.seed is None else args.seed + 1,
            n_random=int(ts.get("n_random", 70)),
            pairs=scheme.pairs,
            random_mode=ts.get("random_mode", "joint"))
        init_seed = int(init.get("seed", 0)) if args.seed is None else args.seed
        harmonics = int(init.get("harmonics", 3))
        trainable = _get(doc, "trainable", "all")
        if trainable not in ("all", "couplings_only"):
            raise ConfigError("trainable must be 'all' or 'couplings_only'")
        kind = NoiseKind.parse(noise_doc.get("kind", "none"))
        noise = NoiseConfig(kind=kind, rnp=float(noise_doc.get("rnp", 0.0)),
                            seed=int(noise_doc.get("seed", 0)))
        cfg = TrainingConfig(
            max_epochs=int(lm_doc.get("max_epochs", 500)),
            target_rms=float(lm_doc.get("target_rms", 1e-6)),
            lambda_init=float(lm_doc.get("lambda_init", 1e-3)),
            lambda_up=float(lm_doc.get("lambda_up", 10.0)),
            lambda_down=float(lm_doc.get("lambda_down", 0.1)),
            fd_step=float(lm_doc.get("fd_step", 1e-5)),
            noise_draws=int(lm_doc.get("noise_draws", 8)),
            noise_mode=lm_doc.get("noise_mode", "frozen"))
        for key in ("params", "history"):
            if key not in outputs:
                raise ConfigError(f"outputs must name a {key!r} file")
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    if args.dry_run:
        print("config OK (dry run, nothing written)")
        return 0

    params0 = random_parameters(
        n_qubits, list(scheme.pairs), np.random.RandomState(init_seed),
        scale=float(init.get("scale", 0.5)), harmonics=harmonics,
        base_frequency=default_base_frequency(evo.t_final))
    if trainable == "couplings_only":
        width = 2 * harmonics + 1
        mask = np.zeros((2 * n_qubits + len(params0.coupling)) * width, dtype=bool)
        mask[2 * n_qubits * width:] = True
        cfg.trainable_mask = mask

    samples = samples_from_manifest(manifest)
    trained, history = train(params0, samples, evo, cfg,
                             noise=noise if noise.enabled else None)

    out = _out_base(args, config_path)
    save_params(trained, _resolve(out, outputs["params"]))
    history.write_csv(_resolve(out, outputs["history"]))
    if "manifest" in outputs:
        save_manifest(manifest, _resolve(out, outputs["manifest"]))
    print(f"terminal rms: {history.final_rms:.6e} ({history.stop_reason}; "
          f"{len(history.records) - 1} epochs)")
    return 0 if history.reached_target else 4


def cmd_transfer(args) -> int:
    try:
        source = load_params(args.source)
        spec = ReplicationSpec(source=source, n_pairs=args.pairs,
                               cross_pair_coupling=args.cross)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    replicated = replicate(spec)
    save_params(replicated, args.out)
    print(f"wrote {replicated.n_qubits}-qubit parameters to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    config_path = Path(args.config)
    doc = _load_config(config_path, "swapnet/evaluate/v1")
    try:
        params_path = _resolve(config_path.parent, _get(doc, "params", required=True))
        params = load_params(params_path)
        manifest = TrainingSetManifest.from_dict(
            _manifest_doc(_get(doc, "manifest", required=True), config_path.parent))
        evo_doc = _get(doc, "evolution", {})
        evo = EvolutionConfig(t_final=float(evo_doc.get("t_final", 1.0)),
                              n_steps=int(evo_doc.get("n_steps", 1000)))
        noise_doc = _get(doc, "noise", {})
        kind = NoiseKind.parse(noise_doc.get("kind", "none"))
        rnp_values = [float(v) for v in noise_doc.get("rnp_values", [0.0])]
        n_draws = int(noise_doc.get("n_draws", 32))
        seed = int(noise_doc.get("seed", 0)) if args.seed is None else args.seed
        out_csv = _resolve(_out_base(args, config_path),
                           _get(doc, "out_csv", required=True))
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    if manifest.n_qubits != params.n_qubits:
        raise ConfigError(f"manifest is for {manifest.n_qubits} qubits but parameters "
                          f"are for {params.n_qubits}")
    samples = samples_from_manifest(manifest)
    phash = file_hash(params_path)
    records = []
    for rnp in rnp_values:
        rms_mean, rms_std, draws, _ = evaluate_rms(params, samples, evo, kind,
                                                   rnp, n_draws, seed)
        records.append(ExperimentRecord(params.n_qubits, kind.value, rnp, draws,
                                        rms_mean, rms_std, seed, phash, time.time()))
        print(f"n={params.n_qubits} kind={kind.value} rnp={rnp:g}: "
              f"rms = {rms_mean:.6e} +/- {rms_std:.2e}")
    append_records_csv(records, out_csv)
    return 0


def cmd_noise_sweep(args) -> int:
    config_path = Path(args.config)
    doc = _load_config(config_path, "swapnet/noise-sweep/v1")
    cdir = config_path.parent
    try:
        n_list = [int(n) for n in _get(doc, "n_qubits_list", required=True)]
        steps_doc = _get(doc, "evolution", {}).get("n_steps", 1000)
        if isinstance(steps_doc, dict):
            n_steps = {n: int(steps_doc[str(n)]) for n in n_list}
        else:
            n_steps = {n: int(steps_doc) for n in n_list}
        cfg = SweepConfig(
            base_seed=(int(_get(doc, "base_seed", 0)) if args.seed is None
                       else args.seed),
            n_qubits_list=n_list,
            noise_kinds=[NoiseKind.parse(k).value
                         for k in _get(doc, "noise_kinds",
                                       ["pure", "decoherence", "complex"])],
            rnp_values=[float(v) for v in _get(doc, "rnp_values", DEFAULT_RNP_VALUES)],
            n_noise_draws=int(_get(doc, "n_noise_draws", 32)),
            params_files={n: str(_resolve(cdir, p))
                          for n, p in ((int(k), v) for k, v in
                                       _get(doc, "params", required=True).items())},
            manifests={int(k): _manifest_doc(v, cdir)
                       for k, v in _get(doc, "test_sets", required=True).items()},
            t_final=float(_get(doc, "evolution", {}).get("t_final", 1.0)),
            n_steps=n_steps)
        outputs = _get(doc, "outputs", {}, required=True)
        out = _out_base(args, config_path)
        out_csv = _resolve(out, outputs["csv"])
        plot_dir = _resolve(out, outputs.get("plot_dir", "plots"))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc

    records, _ = run_sweep(cfg, jobs=args.jobs)
    write_records_csv(records, out_csv)
    plots = plot_sweep_csv(out_csv, plot_dir)
    print(f"wrote {len(records)} records to {out_csv} and {len(plots)} plots "
          f"to {plot_dir}")
    return 0


def cmd_oracle_check(args) -> int:
    corrupt = os.environ.get("SWAPNET_CORRUPT_RK4", "") == "1"
    report = oracle_check(corrupt_rk4=corrupt)
    print(f"rk4 order (1 qubit):  {report['rk4_order_1q']:.3f}")
    print(f"rk4 order (2 qubits): {report['rk4_order_2q']:.3f}")
    print(f"fd jacobian max relative error: {report['jacobian_max_rel_err']:.3e}")
    print("oracle check: " + ("PASS" if report["passed"] else "FAIL"))
    return 0 if report["passed"] else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swapnet",
        description="Train, scale, and stress-test learned SWAP controls")
    parser.add_argument("--version", action="version", version=f"swapnet {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="override the command's primary seed")
    common.add_argument("--jobs", type=int, default=1,
                        help="parallel worker processes for sweep cells")
    common.add_argument("--out-dir", default=None,
                        help="base directory for outputs (default: config dir)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common],
                       help="train two-qubit controls with Levenberg-Marquardt")
    p.add_argument("config")
    p.add_argument("--dry-run", action="store_true",
                   help="validate the config and exit without writing")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("transfer", parents=[common],
                       help="replicate trained two-qubit controls to 2*n_pairs qubits")
    p.add_argument("source", help="trained two-qubit parameter JSON")
    p.add_argument("--pairs", type=int, required=True)
    p.add_argument("--cross", choices=CROSS_COUPLING_MODES, default="zero")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("evaluate", parents=[common],
                       help="evaluate parameters on a test set, optionally with noise")
    p.add_argument("config")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("noise-sweep", parents=[common],
                       help="cross-product noise sweep with CSV and SVG outputs")
    p.add_argument("config")
    p.set_defaults(func=cmd_noise_sweep)

    p = sub.add_parser("oracle-check", parents=[common],
                       help="verify integrator order and gradient accuracy")
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
