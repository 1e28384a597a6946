"""Monte Carlo disorder-averaging engine and the experiment kernels.

Each disorder realization is a pure function of (seed, sample index): the
worker assembles and diagonalizes the effective Hamiltonian, evaluates the
experiment's kernel on it, and returns per-key scalar rows.  Reduction
happens after all samples are collected, in sample-index order, so the
output is bit-identical regardless of the worker count.

Every kernel also verifies its theorem-shape dominations pointwise on the
evaluation grid (commutator values against envelopes, quasi-locality
errors against their bounds, correlations against the uniform bound 2,
counting-function bracketing) and reports violation counts in the flags.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .anderson import (
    DEGENERACY_RTOL,
    DisorderConfig,
    assemble,
    diagonalize,
    localized_modes,
    sample_disorder,
)
from .config import ExperimentConfig
from .errors import NumericError
from .freeboson import default_time_grid, excitation_energy_density, counting_function
from .lattice import BoxGeometry, box_boundary, l1_distances_from, neighborhood
from .results import EnsembleResult, ResultRow
from .weyl import diagonal_elements

#: Slack for floating-point comparisons of mathematically strict dominations.
DOMINATION_SLACK = 1e-12


@dataclass
class SampleOutcome:
    index: int
    rows: list
    flags: dict = field(default_factory=dict)
    extrema: dict = field(default_factory=dict)


def _disorder_config(config: ExperimentConfig) -> DisorderConfig:
    return DisorderConfig(
        k_max=config.k_max,
        master_seed=config.seed,
        kind=config.disorder_kind,
        table_u=config.table_u,
        table_k=config.table_k,
    )


def _time_grid(config: ExperimentConfig, spec) -> np.ndarray:
    return default_time_grid(spec, points=config.time_points, t_max=config.t_max)


def _shell_sites(box: BoxGeometry, center: int, shells) -> dict[int, np.ndarray]:
    dists = l1_distances_from(box, center)
    return {int(d): np.flatnonzero(dists == int(d)) for d in shells}


def sup_alpha_strategy(kappa: int, n_modes: int, regime_modes, rng=None, random_count: int = 2):
    """Finite occupation-vector family over which eigenstate suprema are taken.

    Always contains the vacuum; for kappa > 0 also the vector with kappa
    excitations in every regime mode, plus ``random_count`` random vectors
    supported there.  A documented lower bound on the supremum over the
    full regime: enlarging the family can only increase the reported value.
    """
    regime = np.asarray(regime_modes, dtype=int)
    seen = set()
    out = []

    def push(alpha):
        key = tuple(alpha.tolist())
        if key not in seen:
            seen.add(key)
            out.append(alpha)

    push(np.zeros(n_modes, dtype=int))
    if kappa > 0 and regime.size:
        full = np.zeros(n_modes, dtype=int)
        full[regime] = kappa
        push(full)
        if rng is not None:
            for _ in range(random_count):
                alpha = np.zeros(n_modes, dtype=int)
                alpha[regime] = rng.integers(0, kappa + 1, size=regime.size)
                push(alpha)
    return out


def _alpha_rng(config: ExperimentConfig, index: int) -> np.random.Generator:
    return np.random.default_rng([int(config.seed), int(index), 0xA1FA])


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

def _delta_mode_matrix(spec) -> np.ndarray:
    """Row x = V(delta_x): real mode coefficients gamma^{-1/2} phi_j(x)."""
    return spec.modes / np.sqrt(spec.gammas)[None, :]


def _kernel_eigencorrelator(config, box, spec, index):
    lam = config.lambda0_value()
    center = config.center_index()
    shells = _shell_sites(box, center, config.shell_values())
    names = {-1: "q_minus", 0: "q_zero", 1: "q_plus"}
    cnt = localized_modes(spec, lam).size
    phi = np.abs(spec.modes[:, :cnt])
    rows = []
    for s in config.powers:
        if s not in names:
            raise NumericError(f"eigencorrelator power {s} not in {{-1,0,1}}")
        weights = spec.gammas[:cnt] ** s if s != 0 else np.ones(cnt)
        profile = phi @ (weights * phi[center]) if cnt else np.zeros(spec.n)
        for d, sites in shells.items():
            rows.append(((d, names[s]), float(profile[sites].mean())))
    return rows, {}, {}


def _kernel_lr(config, box, spec, index):
    lam = config.lambda0_value()
    cnt = localized_modes(spec, lam).size
    center = config.center_index()
    shells = _shell_sites(box, center, config.shell_values())
    a2 = config.amplitude**2
    times = _time_grid(config, spec)
    w = _delta_mode_matrix(spec)
    tails = np.sum(w[:, cnt:] ** 2, axis=1)
    c_center = np.exp(-0.25 * a2 * tails[center])
    c_sites = np.exp(-0.25 * a2 * tails)

    ys = np.concatenate([sites for sites in shells.values()]) if shells else np.array([], int)
    coef = w[center, :cnt][:, None] * w[ys, :cnt].T  # (modes, sites)
    ang = 2.0 * times[:, None] * spec.gammas[:cnt][None, :]
    theta = -a2 * (np.sin(ang) @ coef)  # (times, sites)
    cc = c_center * c_sites[ys]
    values = 2.0 * np.abs(np.sin(theta / 2.0)) * cc[None, :]
    envelopes = cc * np.minimum(2.0, a2 * np.sum(np.abs(coef), axis=0))
    violations = int(np.sum(values > envelopes[None, :] + DOMINATION_SLACK))

    sups = values.max(axis=0) if times.size else np.zeros(ys.size)
    rows = []
    pos = 0
    for d, sites in shells.items():
        sl = slice(pos, pos + sites.size)
        rows.append(((d, "commutator_sup"), float(sups[sl].mean())))
        rows.append(((d, "commutator_envelope"), float(envelopes[sl].mean())))
        pos += sites.size
    return rows, {"domination_violations": violations}, {}


def _kernel_pq(config, box, spec, index):
    lam = config.lambda0_value()
    cnt = localized_modes(spec, lam).size
    center = config.center_index()
    shells = _shell_sites(box, center, config.shell_values())
    times = _time_grid(config, spec)
    gam = spec.gammas[:cnt]
    ys = np.concatenate([sites for sites in shells.values()]) if shells else np.array([], int)
    prod = spec.modes[center, :cnt][:, None] * spec.modes[ys, :cnt].T  # (modes, sites)
    ang = 2.0 * times[:, None] * gam[None, :]
    cos, sin = np.cos(ang), np.sin(ang)

    qq = np.abs(sin @ (prod / gam[:, None]))
    qp = np.abs(cos @ prod)
    pp = np.abs(sin @ (prod * gam[:, None]))
    env_minus = np.sum(np.abs(prod) / gam[:, None], axis=0)
    env_zero = np.sum(np.abs(prod), axis=0)
    env_plus = np.sum(np.abs(prod) * gam[:, None], axis=0)
    violations = int(
        np.sum(qq > env_minus[None, :] + DOMINATION_SLACK)
        + np.sum(qp > env_zero[None, :] + DOMINATION_SLACK)
        + np.sum(pp > env_plus[None, :] + DOMINATION_SLACK)
    )

    rows = []
    pos = 0
    quantities = (
        ("qq_sup", qq.max(axis=0)),
        ("qp_sup", qp.max(axis=0)),
        ("pq_sup", qp.max(axis=0)),
        ("pp_sup", pp.max(axis=0)),
        ("envelope_minus", env_minus),
        ("envelope_zero", env_zero),
        ("envelope_plus", env_plus),
    )
    for d, sites in shells.items():
        sl = slice(pos, pos + sites.size)
        for name, vals in quantities:
            rows.append(((d, name), float(vals[sl].mean())))
        pos += sites.size
    return rows, {"domination_violations": violations}, {}


def _kernel_correlations(config, box, spec, index):
    lam = config.lambda0_value()
    S = localized_modes(spec, lam)
    cnt = S.size
    center = config.center_index()
    shells = _shell_sites(box, center, config.shell_values())
    a = config.amplitude
    times = _time_grid(config, spec)
    w = _delta_mode_matrix(spec)
    tails = np.sum(w[:, cnt:] ** 2, axis=1)
    c_center = np.exp(-0.25 * a * a * tails[center])
    alphas = sup_alpha_strategy(
        config.kappa, spec.n, S, rng=_alpha_rng(config, index), random_count=config.alpha_random
    )

    gam = spec.gammas[:cnt]
    eta = a * np.exp(2j * times[:, None] * gam[None, :]) * w[center, :cnt][None, :]  # (T, modes)
    abs_eta = a * np.abs(w[center, :cnt])

    rows = []
    violations = 0
    for d, sites in shells.items():
        sup_d, env_d = [], []
        for y in sites:
            xi = a * w[y, :cnt]
            cc = c_center * np.exp(-0.25 * a * a * tails[y])
            theta = np.sum(np.imag(np.conj(eta) * xi[None, :]), axis=1)
            joint = eta + xi[None, :]
            best = 0.0
            for alpha in alphas:
                al = alpha[:cnt]
                d_joint = np.prod(diagonal_elements(al[None, :], joint), axis=1)
                d_eta = float(np.prod(diagonal_elements(al, abs_eta)))
                d_xi = float(np.prod(diagonal_elements(al, xi)))
                corr = cc * (np.exp(-0.5j * theta) * d_joint - d_eta * d_xi)
                mags = np.abs(corr)
                violations += int(np.sum(mags > 2.0 + DOMINATION_SLACK))
                best = max(best, float(mags.max()))
            sup_d.append(best)
            env_d.append(float(np.sum(abs_eta * np.abs(xi))))
        rows.append(((d, "correlation_sup"), float(np.mean(sup_d))))
        rows.append(((d, "overlap_sum"), float(np.mean(env_d))))
    return rows, {"correlation_bound_violations": violations}, {}


def _kernel_quasi_locality(config, box, spec, index):
    lam = config.lambda0_value()
    S = localized_modes(spec, lam)
    cnt = S.size
    center = config.center_index()
    a = config.amplitude
    times = _time_grid(config, spec)
    w = _delta_mode_matrix(spec)
    tails = np.sum(w[center, cnt:] ** 2)
    c_f = np.exp(-0.25 * a * a * tails)
    gam = spec.gammas[:cnt]
    sq = np.sqrt(gam)
    alphas = sup_alpha_strategy(
        config.kappa, spec.n, S, rng=_alpha_rng(config, index), random_count=config.alpha_random
    )

    # X f_t in position space for the whole grid at once: (sites, times)
    eta = a * np.exp(2j * gam[:, None] * times[None, :]) * w[center, :cnt][:, None]
    phi = spec.modes[:, :cnt]
    pos = phi @ (sq[:, None] * eta.real) + 1j * (phi @ (eta.imag / sq[:, None]))

    rows = []
    violations = 0
    for n in config.n_range():
        keep = np.ones(box.n_sites, dtype=bool)
        keep[neighborhood(box, [center], int(n))] = False
        r = pos * keep[:, None]
        vr = (phi.T @ r.real) / sq[:, None] + 1j * sq[:, None] * (phi.T @ r.imag)
        norms = np.sqrt(np.sum(np.abs(vr) ** 2, axis=0))
        best = 0.0
        for alpha in alphas:
            al = alpha[:cnt]
            diag = np.prod(diagonal_elements(al[None, :], vr.T), axis=1)
            err = c_f * np.sqrt(np.maximum(0.0, 2.0 - 2.0 * diag.real))
            per_state = np.sqrt(2.0 * (int(al.max(initial=0)) + 1)) * norms
            violations += int(np.sum(err > per_state + DOMINATION_SLACK))
            best = max(best, float(err.max()))
        bound = float(np.sqrt(2.0 * (config.kappa + 1)) * norms.max())
        rows.append(((int(n), "error_sup"), best))
        rows.append(((int(n), "bound_sup"), bound))
    return rows, {"bound_violations": violations}, {}


def _energy_density_sample(config, index):
    disorder = _disorder_config(config)
    lam = config.lambda0_value()
    grid_max = config.lambda_grid_max
    if grid_max is None:
        grid_max = 4.0 * 1 + config.k_max  # nu = 1 ladder boxes
    rows = []
    bracketing = 0
    ordering = 0
    degenerate = 0
    for length in config.lengths_ladder:
        box = BoxGeometry.of_lengths([int(length)])
        sample = sample_disorder(disorder, box, index)
        spec_n = diagonalize(assemble(box, sample, "neumann"), "neumann")
        spec_d = diagonalize(assemble(box, sample, "dirichlet"), "dirichlet")
        degenerate += int(spec_n.flag_degenerate() or spec_d.flag_degenerate())
        grid = np.linspace(0.0, grid_max, config.lambda_grid_points)
        diff = counting_function(spec_n, grid) - counting_function(spec_d, grid)
        limit = box_boundary(box).size
        bracketing += int(np.sum((diff < 0) | (diff > limit)))
        rho_n = excitation_energy_density(spec_n, lam, config.kappa)
        rho_d = excitation_energy_density(spec_d, lam, config.kappa)
        ordering += int(rho_n < rho_d - DOMINATION_SLACK)
        rows.append(((int(length), "neumann_density"), rho_n))
        rows.append(((int(length), "dirichlet_density"), rho_d))
        rows.append(((int(length), "density_gap"), rho_n - rho_d))
    flags = {
        "bracketing_violations": bracketing,
        "ordering_violations": ordering,
        "degenerate_samples": degenerate,
    }
    return SampleOutcome(index=index, rows=rows, flags=flags)


def _gap_stats_sample(config, index):
    disorder = _disorder_config(config)
    box = config.box()
    spec = diagonalize(assemble(box, sample_disorder(disorder, box, index)))
    gap = spec.min_gap()
    rel = gap / spec.norm
    mb_box = BoxGeometry.of_lengths([config.mb_length])
    mb_spec = diagonalize(assemble(mb_box, sample_disorder(disorder, mb_box, index)))
    occ = config.mb_occupation
    grids = np.meshgrid(*[np.arange(occ + 1)] * mb_box.n_sites, indexing="ij")
    alphas = np.stack([g.ravel() for g in grids], axis=1)
    energies = np.sort((2 * alphas + 1) @ mb_spec.gammas)
    mb_gap = float(np.min(np.diff(energies)))
    rows = [
        (("one_body_min_gap",), float(gap)),
        (("one_body_rel_gap",), float(rel)),
        (("many_body_min_gap",), mb_gap),
    ]
    flags = {
        "one_body_gap_violations": int(rel <= DEGENERACY_RTOL),
        "many_body_gap_violations": int(mb_gap <= 1e-10),
    }
    extrema = {"one_body_rel_gap_min": float(rel), "many_body_gap_min": mb_gap}
    return SampleOutcome(index=index, rows=rows, flags=flags, extrema=extrema)


KERNELS = {
    "eigencorrelator": _kernel_eigencorrelator,
    "lr-bound": _kernel_lr,
    "pq-bound": _kernel_pq,
    "correlations": _kernel_correlations,
    "quasi-locality": _kernel_quasi_locality,
}

KEY_FIELDS = {
    "eigencorrelator": ("distance", "quantity"),
    "lr-bound": ("distance", "quantity"),
    "pq-bound": ("distance", "quantity"),
    "correlations": ("distance", "quantity"),
    "quasi-locality": ("n", "quantity"),
    "energy-density": ("L", "quantity"),
    "gap-stats": ("quantity",),
    "oracle-check": ("check",),
}


def run_sample(config: ExperimentConfig, index: int) -> SampleOutcome:
    """Evaluate one disorder realization; pure in (config, index)."""
    kind = config.experiment
    if kind == "energy-density":
        return _energy_density_sample(config, index)
    if kind == "gap-stats":
        return _gap_stats_sample(config, index)
    box = config.box()
    sample = sample_disorder(_disorder_config(config), box, index)
    spec = diagonalize(assemble(box, sample))
    rows, flags, extrema = KERNELS[kind](config, box, spec, index)
    flags["degenerate_samples"] = flags.get("degenerate_samples", 0) + int(spec.flag_degenerate())
    return SampleOutcome(index=index, rows=rows, flags=flags, extrema=extrema)


def _reduce(config: ExperimentConfig, outcomes: list[SampleOutcome]) -> EnsembleResult:
    outcomes = sorted(outcomes, key=lambda o: o.index)
    per_key: dict = {}
    order: list = []
    flags: dict = {}
    extrema: dict = {}
    for outcome in outcomes:
        for key, value in outcome.rows:
            if key not in per_key:
                per_key[key] = []
                order.append(key)
            per_key[key].append(value)
        for name, count in outcome.flags.items():
            flags[name] = flags.get(name, 0) + int(count)
        for name, value in outcome.extrema.items():
            extrema[name] = min(extrema.get(name, np.inf), value)

    rows = []
    for key in order:
        vals = np.asarray(per_key[key], dtype=float)
        mean = float(vals.mean())
        stderr = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
        rows.append(ResultRow(key=key, mean=mean, stderr=stderr, count=int(vals.size)))

    metadata = {
        "config_digest": config.digest(),
        "seed": config.seed,
        "kind": config.experiment,
        "samples": config.samples,
        "lambda0": config.lambda0 if config.lambda0 == "full" else float(config.lambda0),
        "kappa": config.kappa,
        **{k: int(v) for k, v in sorted(flags.items())},
        **{k: float(v) for k, v in sorted(extrema.items())},
    }
    return EnsembleResult(
        kind=config.experiment,
        key_fields=KEY_FIELDS[config.experiment],
        rows=rows,
        metadata=metadata,
    )


def run_ensemble(config: ExperimentConfig, workers: int | None = None) -> EnsembleResult:
    """Run all disorder samples of an experiment and aggregate per key.

    ``workers`` overrides the config; per-sample results are collected and
    reduced in index order, so the numbers are independent of parallelism.
    """
    if config.experiment == "oracle-check":
        from .oracle_suite import suite_result

        return suite_result(config)
    n_workers = int(workers if workers is not None else config.workers)
    indices = range(config.samples)
    if n_workers <= 1 or config.samples == 1:
        outcomes = [run_sample(config, i) for i in indices]
    else:
        job = partial(run_sample, config)
        completed = 0
        outcomes = []
        try:
            with concurrent.futures.ProcessPoolExecutor(max_workers=n_workers) as pool:
                for outcome in pool.map(job, indices):
                    outcomes.append(outcome)
                    completed += 1
        except Exception as exc:
            raise NumericError(
                f"worker failure after {completed} of {config.samples} samples: {exc}"
            ) from exc
    return _reduce(config, outcomes)
