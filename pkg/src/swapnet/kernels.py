"""Hot evolution kernels: fixed-step RK4 loops in numba with a numpy fallback.

Backend selection
-----------------
The environment variable ``SWAPNET_BACKEND`` picks the implementation at
import time: ``numba`` (default when numba imports cleanly), ``numpy`` for
the pure-numpy fallback, or ``auto``. ``benchmarks/bench_backends.py``
compares the two.

Batch layout
------------
A batch of B density matrices of dimension d is packed into one C-contiguous
(d, B*d) array whose b-th column block is matrix b. Each RK4 stage then needs
a single (d,d) @ (d,B*d) GEMM; the right-multiplication rho @ H is recovered
as the blockwise conjugate transpose of H @ rho, which is valid because every
stage input stays exactly Hermitian.

Seeding
-------
Noise draws come from a Mersenne Twister reseeded every step with
``mix_seed(seed, step_offset + k)`` (a splitmix64 hash truncated to 32 bits),
with each batch block drawing its matrices in block order from that stream.
Both backends draw identical values, and splitting a run into chunks via
``step_offset`` reproduces the unchunked run bit for bit.

Noise conventions (per step, scale = rnp)
-----------------------------------------
pure (1):        N = rnp * (A + A^T)/2, A real standard normal
decoherence (2): N = 1j * rnp * (G - G^T), G real standard normal; zero
                 diagonal, purely imaginary off-diagonals with per-entry
                 variance 2*rnp^2, so a decoherence draw carries roughly
                 twice the Frobenius power of a pure draw of equal scale
complex (3):     one pure draw plus one decoherence draw (in that order)

After injection the matrix is renormalized by its (real) trace; a trace
within TRACE_FLOOR of zero aborts the run.

The ``stage_weights`` argument exists for the integrator self-check: passing
deliberately wrong weights (see CORRUPT_STAGE_WEIGHTS) must degrade the
measured convergence order. Production callers leave it at the default.
"""

from __future__ import annotations

import os

import numpy as np

from .linalg import TRACE_FLOOR

NOISE_NONE = 0
NOISE_PURE = 1
NOISE_DECOHERENCE = 2
NOISE_COMPLEX = 3

RK4_STAGE_WEIGHTS = np.array([1.0, 2.0, 2.0, 1.0]) / 6.0
# Consistent (weights sum to 1) but first-order only; sentinel for oracle-check.
CORRUPT_STAGE_WEIGHTS = np.array([1.0, 2.0, 3.0, 0.0]) / 6.0

_MASK64 = (1 << 64) - 1


def mix_seed(seed: int, k: int) -> int:
    """splitmix64 hash of (seed, k), truncated to 32 bits for MT seeding."""
    z = (int(seed) + int(k) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z = z ^ (z >> 31)
    return z & 0xFFFFFFFF


def pack_batch(rhos) -> np.ndarray:
    """Stack B (d,d) matrices into the (d, B*d) block layout."""
    arr = np.asarray(rhos, dtype=np.complex128)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    b, d, d2 = arr.shape
    if d != d2:
        raise ValueError(f"expected square blocks, got {arr.shape}")
    return np.ascontiguousarray(arr.transpose(1, 0, 2).reshape(d, b * d))


def unpack_batch(x: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of pack_batch; returns a (B, d, d) array."""
    d, bd = x.shape
    if d != dim or bd % dim:
        raise ValueError(f"array shape {x.shape} does not match dim {dim}")
    return np.ascontiguousarray(x.reshape(d, bd // d, d).transpose(1, 0, 2))


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def _weights_np(coeffs: np.ndarray, omega: float, t: float) -> np.ndarray:
    n_terms, width = coeffs.shape
    m = (width - 1) // 2
    w = np.empty(n_terms)
    for k in range(n_terms):
        acc = coeffs[k, 0]
        for h in range(1, m + 1):
            acc += coeffs[k, h] * np.cos(h * omega * t)
            acc += coeffs[k, m + h] * np.sin(h * omega * t)
        w[k] = acc
    return w


def _build_h_np(terms: np.ndarray, coeffs: np.ndarray, omega: float, t: float) -> np.ndarray:
    w = _weights_np(coeffs, omega, t)
    h = np.zeros(terms.shape[1:], dtype=np.complex128)
    for k in range(terms.shape[0]):
        h += w[k] * terms[k]
    return h


def _propagator_np(terms, coeffs, omega, t0, dt, n_steps, stage_w):
    d = terms.shape[1]
    w0, w1, w2, w3 = stage_w
    u = np.eye(d, dtype=np.complex128)
    for k in range(n_steps):
        t = t0 + k * dt
        h1 = _build_h_np(terms, coeffs, omega, t)
        h2 = _build_h_np(terms, coeffs, omega, t + 0.5 * dt)
        h4 = _build_h_np(terms, coeffs, omega, t + dt)
        k1 = -1j * (h1 @ u)
        k2 = -1j * (h2 @ (u + (0.5 * dt) * k1))
        k3 = -1j * (h2 @ (u + (0.5 * dt) * k2))
        k4 = -1j * (h4 @ (u + dt * k3))
        u = u + dt * (w0 * k1 + w1 * k2 + w2 * k3 + w3 * k4)
    return u


def _comm_np(h, x, d, nb):
    y = (h @ x).reshape(d, nb, d)
    return (-1j * (y - y.conj().transpose(2, 1, 0))).reshape(d, nb * d)


def _evolve_batch_np(terms, coeffs, omega, x0, t0, dt, n_steps, step_offset,
                     kind, rnp, seed, stage_w):
    d = terms.shape[1]
    nb = x0.shape[1] // d
    w0, w1, w2, w3 = stage_w
    x = x0.copy()
    max_trace_dev = 0.0
    max_purity = 0.0
    status = 0
    for k in range(n_steps):
        step = step_offset + k
        t = t0 + step * dt
        h1 = _build_h_np(terms, coeffs, omega, t)
        h2 = _build_h_np(terms, coeffs, omega, t + 0.5 * dt)
        h4 = _build_h_np(terms, coeffs, omega, t + dt)
        k1 = _comm_np(h1, x, d, nb)
        k2 = _comm_np(h2, x + (0.5 * dt) * k1, d, nb)
        k3 = _comm_np(h2, x + (0.5 * dt) * k2, d, nb)
        k4 = _comm_np(h4, x + dt * k3, d, nb)
        x = x + dt * (w0 * k1 + w1 * k2 + w2 * k3 + w3 * k4)
        x3 = x.reshape(d, nb, d)
        if kind != NOISE_NONE:
            rs = np.random.RandomState(mix_seed(seed, step))
            if kind == NOISE_PURE:
                a = rs.standard_normal((nb, d, d))
                x3 += (rnp * 0.5) * (a + a.transpose(0, 2, 1)).transpose(1, 0, 2)
            elif kind == NOISE_DECOHERENCE:
                g = rs.standard_normal((nb, d, d))
                x3 += (1j * rnp) * (g - g.transpose(0, 2, 1)).transpose(1, 0, 2)
            else:
                w = rs.standard_normal((nb, 2, d, d))
                a, g = w[:, 0], w[:, 1]
                x3 += (rnp * 0.5) * (a + a.transpose(0, 2, 1)).transpose(1, 0, 2)
                x3 += (1j * rnp) * (g - g.transpose(0, 2, 1)).transpose(1, 0, 2)
            tr = np.einsum("ibi->b", x3).real
            if np.any(np.abs(tr) < TRACE_FLOOR):
                status = 1
                break
            x3 /= tr[None, :, None]
        tr = np.einsum("ibi->b", x3).real
        pur = np.einsum("ibj,ibj->b", x3, x3.conj()).real
        max_trace_dev = max(max_trace_dev, float(np.max(np.abs(tr - 1.0))))
        max_purity = max(max_purity, float(np.max(pur)))
    return x, max_trace_dev, max_purity, status


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

def _make_numba_impls():
    from numba import njit

    @njit(cache=True)
    def _mix_seed_nb(seed, k):
        z = np.uint64(seed) + np.uint64(k) * np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
        return z & np.uint64(0xFFFFFFFF)

    @njit(cache=True)
    def _build_h_nb(terms, coeffs, omega, t):
        n_terms = terms.shape[0]
        d = terms.shape[1]
        width = coeffs.shape[1]
        m = (width - 1) // 2
        h = np.zeros((d, d), dtype=np.complex128)
        for k in range(n_terms):
            acc = coeffs[k, 0]
            for hh in range(1, m + 1):
                acc += coeffs[k, hh] * np.cos(hh * omega * t)
                acc += coeffs[k, m + hh] * np.sin(hh * omega * t)
            h += acc * terms[k]
        return h

    @njit(cache=True)
    def _propagator_nb(terms, coeffs, omega, t0, dt, n_steps, stage_w):
        d = terms.shape[1]
        w0, w1, w2, w3 = stage_w[0], stage_w[1], stage_w[2], stage_w[3]
        u = np.eye(d, dtype=np.complex128)
        for k in range(n_steps):
            t = t0 + k * dt
            h1 = _build_h_nb(terms, coeffs, omega, t)
            h2 = _build_h_nb(terms, coeffs, omega, t + 0.5 * dt)
            h4 = _build_h_nb(terms, coeffs, omega, t + dt)
            k1 = -1j * np.dot(h1, u)
            k2 = -1j * np.dot(h2, (u + (0.5 * dt) * k1))
            k3 = -1j * np.dot(h2, (u + (0.5 * dt) * k2))
            k4 = -1j * np.dot(h4, (u + dt * k3))
            u = u + dt * (w0 * k1 + w1 * k2 + w2 * k3 + w3 * k4)
        return u

    @njit(cache=True)
    def _comm_nb(h, x, d, nb):
        y = np.dot(h, x)
        out = np.empty_like(x)
        for b in range(nb):
            o = b * d
            for i in range(d):
                for j in range(d):
                    out[i, o + j] = -1j * (y[i, o + j] - np.conj(y[j, o + i]))
        return out

    @njit(cache=True)
    def _evolve_batch_nb(terms, coeffs, omega, x0, t0, dt, n_steps, step_offset,
                         kind, rnp, seed, stage_w):
        d = terms.shape[1]
        nb = x0.shape[1] // d
        w0, w1, w2, w3 = stage_w[0], stage_w[1], stage_w[2], stage_w[3]
        x = x0.copy()
        max_trace_dev = 0.0
        max_purity = 0.0
        status = 0
        for k in range(n_steps):
            step = step_offset + k
            t = t0 + step * dt
            h1 = _build_h_nb(terms, coeffs, omega, t)
            h2 = _build_h_nb(terms, coeffs, omega, t + 0.5 * dt)
            h4 = _build_h_nb(terms, coeffs, omega, t + dt)
            k1 = _comm_nb(h1, x, d, nb)
            k2 = _comm_nb(h2, x + (0.5 * dt) * k1, d, nb)
            k3 = _comm_nb(h2, x + (0.5 * dt) * k2, d, nb)
            k4 = _comm_nb(h4, x + dt * k3, d, nb)
            x = x + dt * (w0 * k1 + w1 * k2 + w2 * k3 + w3 * k4)
            if kind != NOISE_NONE:
                np.random.seed(_mix_seed_nb(seed, step))
                for b in range(nb):
                    o = b * d
                    if kind == NOISE_PURE or kind == NOISE_COMPLEX:
                        a = np.random.standard_normal((d, d))
                        for i in range(d):
                            for j in range(d):
                                x[i, o + j] += (rnp * 0.5) * (a[i, j] + a[j, i])
                    if kind == NOISE_DECOHERENCE or kind == NOISE_COMPLEX:
                        g = np.random.standard_normal((d, d))
                        for i in range(d):
                            for j in range(d):
                                x[i, o + j] += (1j * rnp) * (g[i, j] - g[j, i])
                    tr = 0.0
                    for i in range(d):
                        tr += x[i, o + i].real
                    if abs(tr) < TRACE_FLOOR:
                        status = 1
                        break
                    for i in range(d):
                        for j in range(d):
                            x[i, o + j] /= tr
                if status != 0:
                    break
            for b in range(nb):
                o = b * d
                tr = 0.0
                pur = 0.0
                for i in range(d):
                    tr += x[i, o + i].real
                    for j in range(d):
                        v = x[i, o + j]
                        pur += v.real * v.real + v.imag * v.imag
                dev = abs(tr - 1.0)
                if dev > max_trace_dev:
                    max_trace_dev = dev
                if pur > max_purity:
                    max_purity = pur
        return x, max_trace_dev, max_purity, status

    return _propagator_nb, _evolve_batch_nb


def _select_backend() -> tuple[str, object, object]:
    choice = os.environ.get("SWAPNET_BACKEND", "auto").lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"SWAPNET_BACKEND must be auto|numba|numpy, got {choice!r}")
    if choice in ("auto", "numba"):
        try:
            prop, evolve = _make_numba_impls()
            return "numba", prop, evolve
        except ImportError:
            if choice == "numba":
                raise
    return "numpy", _propagator_np, _evolve_batch_np


_BACKEND_NAME, _PROPAGATOR, _EVOLVE_BATCH = _select_backend()


def active_backend() -> str:
    return _BACKEND_NAME


def _as_stage_weights(stage_weights) -> np.ndarray:
    w = RK4_STAGE_WEIGHTS if stage_weights is None else np.asarray(stage_weights, float)
    if w.shape != (4,):
        raise ValueError("stage_weights must have exactly 4 entries")
    return np.ascontiguousarray(w)


def propagator(terms, coeffs, omega, t0, dt, n_steps, stage_weights=None) -> np.ndarray:
    """Time-ordered evolution operator U(t0 + n_steps*dt <- t0) by RK4."""
    return _PROPAGATOR(terms, coeffs, float(omega), float(t0), float(dt),
                       int(n_steps), _as_stage_weights(stage_weights))


def evolve_batch(terms, coeffs, omega, x0, t0, dt, n_steps, step_offset=0,
                 kind=NOISE_NONE, rnp=0.0, seed=0, stage_weights=None):
    """Advance a packed batch n_steps, injecting noise after each step.

    Returns (x_final, max_trace_dev, max_purity) where the diagnostics are
    maxima over all steps and batch blocks. Hermiticity is exact by
    construction and is not tracked.
    """
    x, max_trace_dev, max_purity, status = _EVOLVE_BATCH(
        terms, coeffs, float(omega), x0, float(t0), float(dt), int(n_steps),
        int(step_offset), int(kind), float(rnp), int(seed) & 0xFFFFFFFFFFFFFFFF,
        _as_stage_weights(stage_weights))
    if status != 0:
        raise ValueError("noise injection produced a near-zero trace; "
                         "rnp is far too large for this dimension")
    return x, max_trace_dev, max_purity
