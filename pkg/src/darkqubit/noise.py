"""Classical magnetic-field noise: processes, spectra, averaged evolution.

The field enters as a scalar b(t) multiplying a caller-supplied operator
(typically the scheme-wide Zeeman generator; the drive coupling matrix for
amplitude noise).  Two processes are supported:

* ornstein-uhlenbeck: correlation time tau_c, rms sigma, two-sided spectrum
  S(w) = 2 sigma^2 tau_c / (1 + w^2 tau_c^2).  Trajectories use the exact
  discrete update, so statistics are independent of the grid step.
* quasi-static-gaussian: one Gaussian draw per trajectory, constant in time
  (the tau_c -> infinity limit).

Per-trajectory generators are derived from the master seed with a
counter-keyed SeedSequence, so trajectory k is reproducible in isolation
and the ensemble does not depend on execution order.  The averaged density
matrix is reduced in fixed trajectory order (chunked by thread count), so
repeated runs with the same seed and thread policy agree bit for bit.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .driving import TimeDependentHamiltonian

__all__ = [
    "NoiseProcess",
    "spectral_density",
    "sample_trajectories",
    "evolve_noisy",
]

KINDS = ("ornstein-uhlenbeck", "quasi-static-gaussian")


@dataclass(frozen=True)
class NoiseProcess:
    kind: str
    sigma: float  # rms of b(t) in rad/s (Zeeman-energy units)
    tau_c: float | None = None  # correlation time, s (OU only)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; have {KINDS}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.kind == "ornstein-uhlenbeck":
            if self.tau_c is None or self.tau_c <= 0:
                raise ValueError("ornstein-uhlenbeck noise needs tau_c > 0")


def spectral_density(noise: NoiseProcess, omega) -> np.ndarray:
    """Two-sided power spectral density of b(t) at angular frequency omega.

    The quasi-static process is a spectral delta at zero; it is reported as
    the band power sigma^2 at omega = 0 and zero elsewhere.
    """
    omega = np.asarray(omega, dtype=float)
    if noise.kind == "ornstein-uhlenbeck":
        return 2.0 * noise.sigma ** 2 * noise.tau_c / (
            1.0 + (omega * noise.tau_c) ** 2)
    return np.where(omega == 0.0, noise.sigma ** 2, 0.0)


def _generator(noise: NoiseProcess, index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=noise.seed, spawn_key=(index,))
    return np.random.Generator(np.random.PCG64(seq))


def sample_trajectories(noise: NoiseProcess, times: np.ndarray,
                        n_traj: int) -> np.ndarray:
    """Draw b(t) realizations on the given grid; returns [n_traj, nt]."""
    times = np.asarray(times, dtype=float)
    nt = len(times)
    draws = np.empty((n_traj, nt))
    for k in range(n_traj):
        draws[k] = _generator(noise, k).standard_normal(nt)
    if noise.kind == "quasi-static-gaussian":
        return noise.sigma * np.repeat(draws[:, :1], nt, axis=1)

    decay = np.exp(-np.diff(times) / noise.tau_c)
    kick = noise.sigma * np.sqrt(1.0 - decay ** 2)
    traj = np.empty_like(draws)
    traj[:, 0] = noise.sigma * draws[:, 0]  # stationary start
    for k in range(nt - 1):
        traj[:, k + 1] = traj[:, k] * decay[k] + kick[k] * draws[:, k + 1]
    return traj


def _propagate_chunk(static: np.ndarray, noise_op: np.ndarray,
                     traj: np.ndarray, psi0: np.ndarray,
                     times: np.ndarray, constant: bool) -> np.ndarray:
    """Sum of |psi><psi| over one chunk of trajectories; returns [nt, d, d]."""
    n, nt = traj.shape
    dim = static.shape[0]
    rho_sum = np.zeros((nt, dim, dim), dtype=complex)
    psi = np.broadcast_to(psi0, (n, dim)).copy()
    rho_sum[0] = n * np.outer(psi0, psi0.conj())

    if constant:
        # One diagonalization per trajectory, exact phases on the grid.
        hams = static[None, :, :] + traj[:, 0, None, None] * noise_op
        vals, vecs = np.linalg.eigh(hams)
        amps = np.einsum("nji,j->ni", vecs.conj(), psi0)
        for k in range(1, nt):
            phases = np.exp(-1j * vals * (times[k] - times[0]))
            psi = np.einsum("nij,nj->ni", vecs, phases * amps)
            rho_sum[k] = np.einsum("ni,nj->ij", psi, psi.conj())
        return rho_sum

    for k in range(1, nt):
        dt = times[k] - times[k - 1]
        hams = static[None, :, :] + traj[:, k - 1, None, None] * noise_op
        vals, vecs = np.linalg.eigh(hams)
        amps = np.einsum("nji,nj->ni", vecs.conj(), psi)
        psi = np.einsum("nij,nj->ni", vecs, np.exp(-1j * vals * dt) * amps)
        rho_sum[k] = np.einsum("ni,nj->ij", psi, psi.conj())
    return rho_sum


def evolve_noisy(ham, psi0: np.ndarray, noise: NoiseProcess,
                 noise_op: np.ndarray, times: np.ndarray,
                 n_traj: int = 1024, threads: int = 1) -> np.ndarray:
    """Trajectory-averaged density matrix under H + b(t) * noise_op.

    b(t) is held piecewise constant over each grid interval (exact for the
    quasi-static process; for OU keep the grid step below tau_c and the
    relevant dynamical periods).  Returns [nt, dim, dim].
    """
    if isinstance(ham, TimeDependentHamiltonian):
        if not ham.is_static:
            raise NotImplementedError(
                "evolve_noisy requires a static base Hamiltonian")
        static = ham.static
    else:
        static = np.asarray(ham, dtype=complex)
    psi0 = np.asarray(psi0, dtype=complex)
    times = np.asarray(times, dtype=float)
    noise_op = np.asarray(noise_op, dtype=complex)
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")

    traj = sample_trajectories(noise, times, n_traj)
    constant = noise.kind == "quasi-static-gaussian"
    bounds = np.linspace(0, n_traj, max(1, threads) + 1).astype(int)
    chunks = [(traj[a:b], a, b) for a, b in zip(bounds, bounds[1:]) if b > a]

    def run(chunk):
        return _propagate_chunk(static, noise_op, chunk[0], psi0, times,
                                constant)

    if len(chunks) == 1:
        partials = [run(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            partials = list(pool.map(run, chunks))

    total = partials[0]
    for part in partials[1:]:
        total = total + part
    return total / n_traj
