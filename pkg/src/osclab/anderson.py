"""Disorder sampling and spectra of the effective Hamiltonian h = h_0 + k.

The random potential k is i.i.d. per site with a bounded density on
(0, k_max]; the default is uniform.  Diagonalization goes through a dense
symmetric eigensolver and is wrapped in ``SpectralData``, which carries the
ascending frequencies gamma_j (positive square roots of the eigenvalues)
and the orthogonal mode matrix.  ``eigencorrelator`` evaluates the
per-realization localization kernel

    Q_s(x, y) = sum_{j in S} gamma_j^s |phi_j(x)| |phi_j(y)|,

the exact value of the supremum over Borel functions |u| <= 1 of
|<delta_x, h^{s/2} u(h) X delta_y>| when the spectrum is simple.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericError
from .lattice import BoxGeometry, dirichlet_laplacian, neumann_laplacian

#: Reconstruction tolerance of the eigensolver, relative to ||h||.
RECONSTRUCTION_RTOL = 1e-10

#: Relative gap below which a spectrum is flagged as degenerate.
DEGENERACY_RTOL = 1e-12


@dataclass(frozen=True)
class DisorderConfig:
    """Distribution of the i.i.d. potential entries and the master seed."""

    k_max: float
    master_seed: int
    kind: str = "uniform"
    # Inverse-CDF table for a custom bounded density: k = interp(u, table_u, table_k).
    table_u: tuple[float, ...] | None = None
    table_k: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.k_max <= 0:
            raise ConfigError("k_max must be positive")
        if self.kind not in ("uniform", "inverse_cdf"):
            raise ConfigError(f"unknown disorder kind {self.kind!r}")
        if self.kind == "inverse_cdf":
            if self.table_u is None or self.table_k is None:
                raise ConfigError("inverse_cdf disorder needs table_u and table_k")
            u = np.asarray(self.table_u, dtype=float)
            k = np.asarray(self.table_k, dtype=float)
            if u.ndim != 1 or u.shape != k.shape or u.size < 2:
                raise ConfigError("inverse-CDF table must be two equal-length vectors")
            if np.any(np.diff(u) < 0) or np.any(np.diff(k) < 0):
                raise ConfigError("inverse-CDF table must be monotone")
            if u[0] != 0.0 or u[-1] != 1.0:
                raise ConfigError("table_u must span [0, 1]")
            if k[0] < 0.0 or k[-1] > self.k_max:
                raise ConfigError("table_k values must lie in [0, k_max]")


@dataclass(frozen=True)
class DisorderSample:
    """One realization of the potential, reproducible from (seed, index)."""

    k: np.ndarray
    sample_index: int


def sample_disorder(config: DisorderConfig, box: BoxGeometry, index: int) -> DisorderSample:
    """Draw the potential for realization ``index``.

    The stream is seeded with (master_seed, index), so any sample can be
    regenerated independently of execution order.  Exact zero draws are
    resampled: the model requires k > 0 pointwise.
    """
    rng = np.random.default_rng([int(config.master_seed), int(index)])
    n = box.n_sites
    if config.kind == "uniform":
        draw = lambda size: rng.uniform(0.0, config.k_max, size=size)
    else:
        u_tab = np.asarray(config.table_u, dtype=float)
        k_tab = np.asarray(config.table_k, dtype=float)
        draw = lambda size: np.interp(rng.uniform(0.0, 1.0, size=size), u_tab, k_tab)
    k = draw(n)
    while True:
        bad = np.flatnonzero(k <= 0.0)
        if bad.size == 0:
            break
        k[bad] = draw(bad.size)
    return DisorderSample(k=k, sample_index=int(index))


def assemble(box: BoxGeometry, sample: DisorderSample, bc: str = "neumann") -> np.ndarray:
    """Effective Hamiltonian h = Laplacian(bc) + diag(k)."""
    k = np.asarray(sample.k, dtype=float)
    if k.shape != (box.n_sites,):
        raise ValueError(f"sample has {k.shape} entries for a box of {box.n_sites} sites")
    if bc == "neumann":
        h = neumann_laplacian(box)
    elif bc == "dirichlet":
        h = dirichlet_laplacian(box)
    else:
        raise ValueError(f"unknown boundary condition {bc!r}")
    h[np.arange(box.n_sites), np.arange(box.n_sites)] += k
    return h


@dataclass(frozen=True)
class SpectralData:
    """Eigenpairs of the effective Hamiltonian.

    ``eigenvalues`` are ascending, ``gammas`` their positive square roots,
    and the columns of ``modes`` are the corresponding orthonormal real
    eigenvectors, so that modes.T @ h @ modes = diag(eigenvalues).
    """

    eigenvalues: np.ndarray
    gammas: np.ndarray
    modes: np.ndarray
    bc: str = "neumann"

    @property
    def n(self) -> int:
        return self.gammas.size

    @property
    def norm(self) -> float:
        """Operator norm of h (largest eigenvalue; h is PSD)."""
        return float(self.eigenvalues[-1])

    def min_gap(self) -> float:
        """Smallest spacing of the eigenvalues of h; inf for a single mode."""
        if self.n < 2:
            return float("inf")
        return float(np.min(np.diff(self.eigenvalues)))

    def flag_degenerate(self, rtol: float = DEGENERACY_RTOL) -> bool:
        """True when two eigenvalues coincide within rtol * ||h||."""
        return self.min_gap() <= rtol * max(self.norm, np.finfo(float).tiny)


def diagonalize(h: np.ndarray, bc: str = "neumann") -> SpectralData:
    """Full eigendecomposition of a symmetric matrix, checked for accuracy.

    Raises NumericError if the reconstruction ||O G^2 O^T - h||_max exceeds
    RECONSTRUCTION_RTOL * ||h||.  Eigenvalues within a tiny negative
    round-off band are clamped to zero (the model itself is positive).
    """
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("h must be a square matrix")
    scale = float(np.max(np.abs(h))) or 1.0
    if np.max(np.abs(h - h.T)) > 1e-12 * scale:
        raise ValueError("h must be symmetric")
    try:
        evals, vecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed on a {h.shape[0]}x{h.shape[0]} matrix: {exc}") from exc
    if evals[0] < -1e-9 * scale:
        raise NumericError(f"matrix has a negative eigenvalue {evals[0]:.3e}; not a valid h")
    evals = np.clip(evals, 0.0, None)
    recon = (vecs * evals) @ vecs.T
    err = np.max(np.abs(recon - h))
    if err > RECONSTRUCTION_RTOL * scale:
        raise NumericError(f"reconstruction error {err:.3e} exceeds {RECONSTRUCTION_RTOL:.0e} * ||h||")
    return SpectralData(eigenvalues=evals, gammas=np.sqrt(evals), modes=vecs, bc=bc)


def localized_modes(spec: SpectralData, lambda0: float) -> np.ndarray:
    """Indices j with gamma_j^2 <= lambda0 (a prefix, gammas are ascending)."""
    if lambda0 < 0:
        raise ValueError("lambda0 must be nonnegative")
    count = int(np.searchsorted(spec.eigenvalues, lambda0, side="right"))
    return np.arange(count)


def eigencorrelator(spec: SpectralData, lambda0: float, s: int, x: int, y: int) -> float:
    """Q_s(x, y) for s in {-1, 0, +1}; zero when no mode is below lambda0."""
    return float(eigencorrelator_profile(spec, lambda0, s, x)[int(y)])


def eigencorrelator_profile(spec: SpectralData, lambda0: float, s: int, x: int) -> np.ndarray:
    """Vector of Q_s(x, y) over all sites y, for s in {-1, 0, +1}."""
    if s not in (-1, 0, 1):
        raise ValueError("power s must be -1, 0 or +1")
    S = localized_modes(spec, lambda0)
    n = spec.n
    if not 0 <= int(x) < n:
        raise ValueError(f"site index {x} outside 0..{n - 1}")
    if S.size == 0:
        return np.zeros(n)
    phi = np.abs(spec.modes[:, S])
    weights = spec.gammas[S] ** s if s != 0 else np.ones(S.size)
    return phi @ (weights * phi[int(x)])


def min_gap(spec: SpectralData) -> float:
    """Smallest eigenvalue spacing of h, reported per realization."""
    return spec.min_gap()
