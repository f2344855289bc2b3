"""Both sides of the vectorial Poincare-Beckner inequality, the ratio
optimizer behind the best-constant estimate, and sampling verifiers for
the stability lemmas of the auxiliary functions g and v.

Zero handling: residuals f are affine in u, so at a degenerate state
the exact values vanish while floating point leaves noise of relative
size ~1e-16.  Every routine here flushes |f_i| below 1e-13 of its
cellwise evaluation bound to exact zero, so the documented conventions
(ratio 0 when the left side vanishes, +inf when only the right side
does, the tie rule for v) fire at the states they describe.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .coefficients import (
    CoefficientSystem,
    IndexSet,
    admissibility_margin,
    all_index_sets,
)
from .errors import InadmissibleSystemError
from .fields import Grid, GridField, regime_sets
from .polytope import (
    DegenerateState,
    all_degenerate_states,
    sigma_obs,
    truncation_bound,
)

_FLUSH_REL = 1e-13


def _flushed_f(sys: CoefficientSystem, u: np.ndarray) -> np.ndarray:
    """f = m - A u with roundoff-level values snapped to exact zero.
    u has shape (N, ...) and the result matches it."""
    shape_tail = (1,) * (u.ndim - 1)
    m = sys.vector_m.reshape((-1,) + shape_tail)
    f = m - np.einsum("ij,j...->i...", sys.matrix_a, u)
    bound = np.abs(m) + np.einsum("ij,j...->i...", np.abs(sys.matrix_a), np.abs(u))
    return np.where(np.abs(f) <= _FLUSH_REL * bound, 0.0, f)


@dataclass(frozen=True)
class PointEvaluation:
    """g = sum |f_i|^p and the weighted average v at one point.  When
    g vanishes (so u is the coexistence state) the tie rule v = min u_i
    applies and tie_flag is set."""

    g_value: float
    v_value: float
    tie_flag: bool


def point_eval(sys: CoefficientSystem, u: np.ndarray, p: float) -> PointEvaluation:
    if p < 1:
        raise ValueError("p must be >= 1")
    u = np.asarray(u, dtype=float)
    if u.shape != (sys.n_species,):
        raise ValueError(f"u must have length {sys.n_species}")
    f = _flushed_f(sys, u)
    fp = np.abs(f) ** p
    g = float(np.sum(fp))
    if g > 0.0:
        return PointEvaluation(g, float(np.dot(u, fp) / g), False)
    return PointEvaluation(0.0, float(np.min(u)), True)


def point_eval_batch(
    sys: CoefficientSystem, u: np.ndarray, p: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized g, v and tie mask for points stacked as (n, N)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    u = np.asarray(u, dtype=float)
    f = _flushed_f(sys, u.T).T
    fp = np.abs(f) ** p
    g = fp.sum(axis=1)
    tie = g <= 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        v = np.where(tie, u.min(axis=1), (u * fp).sum(axis=1) / np.where(tie, 1.0, g))
    return g, v, tie


def truncate(u: GridField, m_bound: float) -> GridField:
    """Componentwise min(u, m_bound)."""
    if m_bound <= 0:
        raise ValueError("m_bound must be positive")
    return GridField(u.grid, np.minimum(u.values, m_bound))


@dataclass(frozen=True)
class InequalityReport:
    """One evaluation of the inequality: lhs = integral of sum |f_i|^p,
    rhs = integral of sum u~_i (|f_i|^p + |grad f_i|^p)."""

    lhs: float
    rhs: float
    ratio: float
    p: float
    truncated: bool
    regime_measures: dict[IndexSet, float]


def _ratio_convention(lhs: float, rhs: float) -> float:
    if lhs == 0.0:
        return 0.0
    if rhs > 0.0:
        return lhs / rhs
    return float("inf")


def _lhs_rhs(
    sys: CoefficientSystem,
    u: GridField,
    p: float,
    weights: np.ndarray,
) -> tuple[float, float]:
    """Integrals of sum |f_i|^p and sum w_i (|f_i|^p + |grad f_i|^p)
    where w is the (possibly truncated) weight field."""
    grid = u.grid
    f = _flushed_f(sys, u.values)
    fp = np.abs(f) ** p
    lhs = float(np.sum(fp)) * grid.cell_volume
    rhs_density = weights * fp
    for i in range(sys.n_species):
        g = np.gradient(f[i], *grid.spacing, edge_order=1)
        if grid.dim == 1:
            g = [g]
        gn = np.sqrt(sum(gi * gi for gi in g))
        rhs_density[i] = rhs_density[i] + weights[i] * gn**p
    rhs = float(np.sum(rhs_density)) * grid.cell_volume
    return lhs, rhs


def evaluate_inequality(
    sys: CoefficientSystem,
    u: GridField,
    p: float,
    use_truncation: bool = False,
    sigma: float | None = None,
    m_bound: float | None = None,
) -> InequalityReport:
    """Evaluate both sides on a field, the ratio with the vanishing
    conventions, and the regime-set measures at sigma (computed by LP
    bisection when not supplied)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if u.n_components != sys.n_species:
        raise ValueError("component count does not match the system")
    if float(u.values.min()) < -1e-12:
        warnings.warn("field has negative components; evaluating anyway")
    weights = u.values
    if use_truncation:
        bound = truncation_bound(sys) if m_bound is None else float(m_bound)
        weights = np.minimum(weights, bound)
    lhs, rhs = _lhs_rhs(sys, u, p, weights)
    if sigma is None:
        sigma = sigma_obs(sys).sigma
    regimes = regime_sets(sys, u, sigma)
    measures = {i_set: region.measure for i_set, region in regimes.regions.items()}
    return InequalityReport(
        lhs=lhs,
        rhs=rhs,
        ratio=_ratio_convention(lhs, rhs),
        p=float(p),
        truncated=bool(use_truncation),
        regime_measures=measures,
    )


def blowup_sequence(
    sys: CoefficientSystem,
    i_set: IndexSet,
    steps: int,
    grid: Grid,
    p: float = 2.0,
) -> list[tuple[GridField, InequalityReport]]:
    """Constant fields u_k = u_I + (u_coex - u_I)/k for k = 1..steps.
    The residuals scale like (1 - 1/k) f(u_I), so the ratio grows
    linearly in k and demonstrates the blow-up toward the degenerate
    state; k = 1 is exactly the coexistence state with ratio 0."""
    if len(i_set) == 0:
        raise ValueError("blow-up needs a nonempty index set")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    states = all_degenerate_states(sys)
    u_deg = states[i_set].u_vector
    u_coex = states[IndexSet.empty()].u_vector
    sigma = sigma_obs(sys).sigma
    out = []
    for k in range(1, steps + 1):
        vec = u_coex if k == 1 else np.maximum(u_deg + (u_coex - u_deg) / k, 0.0)
        u_field = GridField.constant(grid, vec)
        report = evaluate_inequality(sys, u_field, p, sigma=sigma)
        out.append((u_field, report))
    return out


def entropy(sys: CoefficientSystem, u: GridField) -> float:
    """Quadratic entropy 0.5 * integral of A (u - u_coex).(u - u_coex).
    Asymmetric A is symmetrized with a warning."""
    a = sys.matrix_a
    if float(np.max(np.abs(a - a.T))) > 1e-12:
        warnings.warn("matrix A is not symmetric; using (A + A^T)/2")
    a_sym = 0.5 * (a + a.T)
    u_coex = all_degenerate_states(sys)[IndexSet.empty()].u_vector
    w = u.values - u_coex.reshape((-1,) + (1,) * u.grid.dim)
    density = np.einsum("ij,i...,j...->...", a_sym, w, w)
    return 0.5 * float(np.sum(density)) * u.grid.cell_volume


# ---------------------------------------------------------------------------
# Best-constant estimation


@dataclass(frozen=True)
class SeparationSpec:
    """Feasibility floor: normalized L1 distance (1/|Omega|) int |u - u_I|
    must stay >= rho for every degenerate state with nonempty I."""

    rho: float

    def __post_init__(self) -> None:
        if not self.rho > 0:
            raise ValueError("rho must be positive")


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs for projected gradient ascent and its random-search
    baseline; the seed is mandatory for reproducibility."""

    seed: int
    n_starts: int = 16
    n_iters: int = 500
    baseline_evals: int | None = None
    constant_fields: bool = False
    step0_fraction: float = 0.05
    divergence_ratio: float = 1e12
    grad_check_coords: int = 8


@dataclass(frozen=True)
class ConstantEstimate:
    c_estimate: float
    maximizer: GridField
    trace: tuple[tuple[int, int, float], ...]
    optimizer_best: float
    baseline_best: float
    baseline_evals: int
    diverged: bool
    grad_check_rel_err: float
    rho: float
    p: float


def _l1_distance(values: np.ndarray, state: np.ndarray) -> float:
    """Normalized L1 distance between a field (N, *shape) and a
    constant state vector."""
    diff = np.abs(values - state.reshape((-1,) + (1,) * (values.ndim - 1)))
    return float(diff.sum(axis=0).mean())


def _project_separated(
    values: np.ndarray,
    states_ne: list[np.ndarray],
    u_coex: np.ndarray,
    rho: float,
    hi: float,
) -> np.ndarray:
    """Clamp to [0, hi] and push radially away from every separated
    state until the distance floor holds."""
    tail = (1,) * (values.ndim - 1)
    v = np.clip(values, 0.0, hi)
    for _ in range(50):
        worst = None
        worst_d = rho
        for s in states_ne:
            d = _l1_distance(v, s)
            if d < worst_d * (1.0 - 1e-12):
                worst, worst_d = s, d
        if worst is None:
            return v
        s_col = worst.reshape((-1,) + tail)
        d = _l1_distance(v, worst)
        if d < 1e-14:
            # Sitting exactly on the state: leave along the coexistence ray.
            gap = float(np.abs(u_coex - worst).sum())
            v = s_col + (u_coex - worst).reshape((-1,) + tail) * (
                1.01 * rho / max(gap, 1e-12)
            )
        else:
            v = s_col + (v - s_col) * (1.000001 * rho / d)
        v = np.clip(v, 0.0, hi)
    # Pushback did not settle; the coexistence state is always feasible.
    return np.broadcast_to(u_coex.reshape((-1,) + tail), values.shape).copy()


def _gradient_adjoint(w: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Adjoint of the np.gradient stencil (central interior, one-sided
    first-order boundary) along one axis."""
    w = np.moveaxis(w, axis, 0)
    out = np.zeros_like(w)
    n = w.shape[0]
    out[2:] += w[1 : n - 1] / (2.0 * h)
    out[: n - 2] -= w[1 : n - 1] / (2.0 * h)
    out[0] -= w[0] / h
    out[1] += w[0] / h
    out[n - 2] -= w[n - 1] / h
    out[n - 1] += w[n - 1] / h
    return np.moveaxis(out, 0, axis)


class _RatioObjective:
    """Smoothed ratio L/(R + eps) on nonnegative fields, with the exact
    discrete gradient by the quotient rule."""

    def __init__(self, sys: CoefficientSystem, grid: Grid, p: float):
        self.sys = sys
        self.grid = grid
        self.p = p
        self.eps = 1e-9 * grid.domain_measure
        self.vol = grid.cell_volume

    def parts(self, values: np.ndarray):
        p = self.p
        f = _flushed_f(self.sys, values)
        fp = np.abs(f) ** p
        grads = [
            np.gradient(f[i], *self.grid.spacing, edge_order=1)
            for i in range(self.sys.n_species)
        ]
        if self.grid.dim == 1:
            grads = [[g] for g in grads]
        gn = np.stack(
            [np.sqrt(sum(gi * gi for gi in g)) for g in grads]
        )
        lhs = float(fp.sum()) * self.vol
        rhs = float((values * (fp + gn**p)).sum()) * self.vol
        return f, fp, grads, gn, lhs, rhs

    def value(self, values: np.ndarray) -> tuple[float, float]:
        """(smoothed objective, exact ratio)."""
        _, _, _, _, lhs, rhs = self.parts(values)
        return lhs / (rhs + self.eps), _ratio_convention(lhs, rhs)

    def gradient(self, values: np.ndarray) -> np.ndarray:
        p = self.p
        a = self.sys.matrix_a
        f, fp, grads, gn, lhs, rhs = self.parts(values)
        # d|f_i|^p/df_i, guarded at f = 0 for p < 2.
        with np.errstate(invalid="ignore", divide="ignore"):
            dfp = np.where(f != 0.0, p * np.abs(f) ** (p - 1) * np.sign(f), 0.0)
        # dL/du_k = -sum_i a_ik dfp_i.
        d_lhs = -np.einsum("ij,i...->j...", a, dfp) * self.vol
        # Direct and chain terms of dR/du_k.
        d_rhs = (fp + gn**p) - np.einsum("ij,i...->j...", a, values * dfp)
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(gn > 0.0, p * gn ** (p - 2), 0.0) * values
        for i in range(self.sys.n_species):
            adj = np.zeros(self.grid.shape)
            for d in range(self.grid.dim):
                adj += _gradient_adjoint(
                    scale[i] * grads[i][d], d, self.grid.spacing[d]
                )
            d_rhs -= a[i].reshape((-1,) + (1,) * self.grid.dim) * adj
        d_rhs = d_rhs * self.vol
        denom = rhs + self.eps
        return (d_lhs * denom - lhs * d_rhs) / denom**2


def _start_fields(
    sys: CoefficientSystem,
    grid: Grid,
    states: dict[IndexSet, DegenerateState],
    rho: float,
    hi: float,
    n_starts: int,
    constant_fields: bool,
    rng: np.random.Generator,
) -> list[np.ndarray]:
    n = sys.n_species
    u_coex = states[IndexSet.empty()].u_vector
    nonempty = [s.u_vector for i_set, s in states.items() if len(i_set)]
    tail = (1,) * grid.dim

    def constant(vec: np.ndarray) -> np.ndarray:
        return np.broadcast_to(
            np.clip(vec, 0.0, hi).reshape((-1,) + tail), (n,) + grid.shape
        ).copy()

    starts = [constant(u_coex)]
    k = 0
    while len(starts) < n_starts:
        kind = k % 4
        k += 1
        if kind == 0:
            s = nonempty[int(rng.integers(len(nonempty)))]
            direction = rng.uniform(0.0, 1.0, size=n)
            direction /= max(direction.sum(), 1e-12)
            starts.append(constant(s + 1.25 * rho * direction))
        elif kind == 1:
            starts.append(constant(rng.uniform(0.0, hi, size=n)))
        elif kind == 2:
            starts.append(constant(u_coex * rng.uniform(0.25, 1.75, size=n)))
        elif constant_fields:
            starts.append(constant(rng.uniform(0.0, hi, size=n)))
        else:
            base = constant(rng.uniform(0.1, 0.9, size=n) * hi)
            coords = grid.meshgrid()
            wave = np.zeros(grid.shape)
            for _ in range(3):
                freq = rng.integers(1, 4, size=grid.dim)
                phase = rng.uniform(0, 2 * np.pi)
                arg = sum(
                    np.pi * freq[d] * coords[d] / grid.extents[d]
                    for d in range(grid.dim)
                )
                wave += np.cos(arg + phase)
            base *= 1.0 + 0.25 * wave / 3.0
            starts.append(np.clip(base, 0.0, hi))
    return starts[:n_starts]


def _baseline_samples(
    sys: CoefficientSystem,
    grid: Grid,
    states: dict[IndexSet, DegenerateState],
    rho: float,
    hi: float,
    n_evals: int,
    constant_fields: bool,
    rng: np.random.Generator,
):
    """Generator of random candidate fields for the pure-search
    baseline; mixes constants near the separated states with uniform
    constants and smooth random fields."""
    n = sys.n_species
    nonempty = [s.u_vector for i_set, s in states.items() if len(i_set)]
    tail = (1,) * grid.dim

    def constant(vec: np.ndarray) -> np.ndarray:
        return np.broadcast_to(
            np.clip(vec, 0.0, hi).reshape((-1,) + tail), (n,) + grid.shape
        ).copy()

    for e in range(n_evals):
        kind = e % 4 if not constant_fields else e % 3
        if kind == 0:
            s = nonempty[int(rng.integers(len(nonempty)))]
            direction = rng.uniform(0.0, 1.0, size=n)
            direction /= max(direction.sum(), 1e-12)
            radius = rho * (1.0 + rng.exponential(0.5))
            yield constant(s + radius * direction)
        elif kind == 1:
            yield constant(rng.uniform(0.0, hi, size=n))
        elif kind == 2:
            u_coex = states[IndexSet.empty()].u_vector
            yield constant(u_coex + rng.normal(0.0, 0.2 * hi, size=n))
        else:
            base = constant(rng.uniform(0.0, hi, size=n))
            noise = rng.normal(0.0, 0.15 * hi, size=(n,) + grid.shape)
            coords = grid.meshgrid()
            envelope = np.ones(grid.shape)
            for d in range(grid.dim):
                envelope *= np.sin(np.pi * coords[d] / grid.extents[d])
            yield np.clip(base + noise * envelope, 0.0, hi)


def estimate_constant(
    sys: CoefficientSystem,
    p: float,
    grid: Grid,
    sep: SeparationSpec,
    config: OptimizerConfig,
) -> ConstantEstimate:
    """Estimate the best constant as the supremum of lhs/rhs over
    nonnegative fields separated from the nonempty degenerate states.

    Multi-start projected gradient ascent on the smoothed ratio, with
    a pure random-search baseline as a consistency oracle; the reported
    estimate is the better of the two and never falls below either.
    A ratio exceeding the divergence threshold while feasible is
    reported through the ``diverged`` flag rather than raised.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    states = all_degenerate_states(sys)
    vectors = [s.u_vector for s in states.values()]
    min_gap = min(
        float(np.abs(a - b).sum())
        for idx, a in enumerate(vectors)
        for b in vectors[idx + 1 :]
    )
    if not sep.rho < min_gap:
        raise ValueError(
            f"rho={sep.rho:g} must be below the minimal state gap {min_gap:g}"
        )
    nonempty = [s.u_vector for i_set, s in states.items() if len(i_set)]
    u_coex = states[IndexSet.empty()].u_vector
    hi = 2.0 * truncation_bound(sys)
    rng = np.random.default_rng(config.seed)
    objective = _RatioObjective(sys, grid, p)

    def project(values: np.ndarray) -> np.ndarray:
        return _project_separated(values, nonempty, u_coex, sep.rho, hi)

    starts = _start_fields(
        sys, grid, states, sep.rho, hi, config.n_starts, config.constant_fields, rng
    )

    best_ratio = -np.inf
    best_values: np.ndarray | None = None
    trace: list[tuple[int, int, float]] = []
    diverged = False
    grad_check_err = 0.0

    for s_idx, start in enumerate(starts):
        u = project(start)
        phi, ratio = objective.value(u)
        if s_idx == 0 and config.grad_check_coords > 0:
            grad_check_err = _finite_difference_check(
                objective, u, config.grad_check_coords, rng
            )
        step = config.step0_fraction * hi
        for it in range(config.n_iters):
            trace.append((s_idx, it, ratio))
            if ratio > best_ratio:
                best_ratio, best_values = ratio, u.copy()
            if ratio > config.divergence_ratio:
                diverged = True
                break
            g = objective.gradient(u)
            g_max = float(np.max(np.abs(g)))
            if g_max <= 0.0 or not np.isfinite(g_max):
                break
            candidate = project(u + (step / g_max) * g)
            phi_new, ratio_new = objective.value(candidate)
            if phi_new > phi:
                u, phi, ratio = candidate, phi_new, ratio_new
            else:
                step *= 0.5
                if step < 1e-12 * hi:
                    break
        if ratio > best_ratio:
            best_ratio, best_values = ratio, u.copy()

    n_baseline = (
        config.baseline_evals
        if config.baseline_evals is not None
        else config.n_starts * config.n_iters
    )
    baseline_best = -np.inf
    baseline_values: np.ndarray | None = None
    for sample in _baseline_samples(
        sys, grid, states, sep.rho, hi, n_baseline, config.constant_fields, rng
    ):
        u = project(sample)
        _, ratio = objective.value(u)
        if ratio > baseline_best:
            baseline_best, baseline_values = ratio, u

    if baseline_best > best_ratio and baseline_values is not None:
        c_estimate, maximizer_values = baseline_best, baseline_values
    else:
        c_estimate, maximizer_values = best_ratio, best_values
    return ConstantEstimate(
        c_estimate=float(c_estimate),
        maximizer=GridField(grid, maximizer_values),
        trace=tuple(trace),
        optimizer_best=float(best_ratio),
        baseline_best=float(baseline_best),
        baseline_evals=n_baseline,
        diverged=diverged,
        grad_check_rel_err=float(grad_check_err),
        rho=sep.rho,
        p=float(p),
    )


def _finite_difference_check(
    objective: _RatioObjective,
    values: np.ndarray,
    n_coords: int,
    rng: np.random.Generator,
) -> float:
    """Max relative mismatch between the analytic gradient and central
    differences at randomly chosen coordinates."""
    g = objective.gradient(values)
    flat = values.ravel()
    worst = 0.0
    for _ in range(n_coords):
        idx = int(rng.integers(flat.size))
        h = 1e-6 * max(1.0, abs(flat[idx]))
        bumped = values.copy().ravel()
        bumped[idx] += h
        up, _ = objective.value(bumped.reshape(values.shape))
        bumped[idx] -= 2 * h
        dn, _ = objective.value(bumped.reshape(values.shape))
        fd = (up - dn) / (2 * h)
        ga = g.ravel()[idx]
        denom = max(abs(fd), abs(ga), 1e-9)
        worst = max(worst, abs(fd - ga) / denom)
    return worst


# ---------------------------------------------------------------------------
# Sampling verifiers for the limit lemmas


@dataclass(frozen=True)
class SampleConfig:
    """Seeded sampling plan shared by the four limit-lemma checks."""

    seed: int
    p: float = 2.0
    n_samples: int = 100_000
    v_bins: tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4)
    delta: float = 1e-3
    n_rays: int = 64
    ray_taus: tuple[float, ...] = (10.0, 100.0, 1000.0)
    epsilon_candidates: tuple[float, ...] = tuple(np.geomspace(1e-4, 1.0, 17))


@dataclass(frozen=True)
class GstabCheck:
    bin_edges: tuple[float, ...]
    bin_counts: tuple[int, ...]
    bin_max_distance: tuple[float, ...]
    passed: bool


@dataclass(frozen=True)
class LimvCheck:
    n_rays: int
    n_skipped_degenerate: int
    min_growth_factor: float
    monotone_failures: int
    passed: bool


@dataclass(frozen=True)
class Sigma1Check:
    sigma: float
    epsilon_zero: float
    counterexamples_at_candidates: tuple[tuple[float, int], ...]
    abs_signed_mismatches: int
    passed: bool


@dataclass(frozen=True)
class GenlimvCheck:
    delta: float
    n_below_delta: int
    counterexamples: int
    epsilon_of_delta: float
    cor_gstab_max: float
    passed: bool


@dataclass(frozen=True)
class LimitLemmaReport:
    gstab: GstabCheck
    limv: LimvCheck
    sigma1: Sigma1Check
    genlimv: GenlimvCheck

    @property
    def passed(self) -> bool:
        return (
            self.gstab.passed
            and self.limv.passed
            and self.sigma1.passed
            and self.genlimv.passed
        )


def _sample_mixture(
    sys: CoefficientSystem,
    states: dict[IndexSet, DegenerateState],
    n: int,
    box_hi: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Half uniform over [0, box]^N, half concentrated at log-spaced
    radii around the degenerate states so that small-v shells are
    populated."""
    n_species = sys.n_species
    n_uniform = n // 2
    uniform = rng.uniform(0.0, box_hi, size=(n_uniform, n_species))
    n_near = n - n_uniform
    centers = np.array([s.u_vector for s in states.values()])
    picks = rng.integers(len(centers), size=n_near)
    radii = 10.0 ** rng.uniform(-6.0, np.log10(box_hi), size=n_near)
    dirs = rng.normal(size=(n_near, n_species))
    dirs /= np.maximum(np.linalg.norm(dirs, axis=1, keepdims=True), 1e-12)
    near = np.clip(centers[picks] + radii[:, np.newaxis] * dirs, 0.0, box_hi)
    return np.vstack([uniform, near])


def verify_limit_lemmas(
    sys: CoefficientSystem, config: SampleConfig
) -> LimitLemmaReport:
    """Sampling verifiers for the stability of v near the degenerate
    states: shrinking v-shells shrink the distance to the nearest
    nonempty-index state (gstab), v grows along rays to infinity
    (limv), small v forces a residual above sigma (sigma1), and small v
    exhibits an index set with small complementary mass and residuals
    above sigma (genlimv).  Counterexamples are counted, not raised.
    """
    report = admissibility_margin(sys)
    if not report.is_admissible:
        raise InadmissibleSystemError(
            f"verifiers need an admissible system (kappa_star={report.kappa_star:g})"
        )
    rng = np.random.default_rng(config.seed)
    states = all_degenerate_states(sys)
    box_hi = 2.0 * truncation_bound(sys)
    sigma = sigma_obs(sys).sigma
    p = config.p

    samples = _sample_mixture(sys, states, config.n_samples, box_hi, rng)
    g, v, _ = point_eval_batch(sys, samples, p)
    f = _flushed_f(sys, samples.T).T
    nonempty_states = np.array(
        [s.u_vector for i_set, s in states.items() if len(i_set)]
    )
    dists = np.linalg.norm(
        samples[:, np.newaxis, :] - nonempty_states[np.newaxis, :, :], axis=2
    ).min(axis=1)

    # (a) gstab: max distance per v-shell must not grow as shells shrink.
    edges = tuple(sorted(config.v_bins, reverse=True))
    bin_counts = []
    bin_max = []
    for k, upper in enumerate(edges):
        lower = edges[k + 1] if k + 1 < len(edges) else 0.0
        members = (v <= upper) & (v > lower)
        bin_counts.append(int(members.sum()))
        bin_max.append(float(dists[members].max()) if members.any() else float("nan"))
    finite = [b for b in bin_max if np.isfinite(b)]
    gstab_pass = all(b2 <= b1 + 1e-12 for b1, b2 in zip(finite, finite[1:]))
    gstab = GstabCheck(
        bin_edges=edges,
        bin_counts=tuple(bin_counts),
        bin_max_distance=tuple(bin_max),
        passed=bool(gstab_pass and len(finite) == len(bin_max)),
    )

    # (b) limv: v increases along rays and grows by 10x from the first
    # to the last sampled radius.
    taus = sorted(config.ray_taus)
    dirs = np.abs(rng.normal(size=(config.n_rays, sys.n_species)))
    dirs /= np.maximum(np.linalg.norm(dirs, axis=1, keepdims=True), 1e-12)
    skipped = 0
    min_growth = float("inf")
    monotone_failures = 0
    for b in dirs:
        lead = float(np.sum(b * np.abs(sys.matrix_a @ b) ** p))
        if lead < 1e-8:
            skipped += 1
            continue
        ray = np.array([tau * b for tau in taus])
        _, v_ray, _ = point_eval_batch(sys, ray, p)
        if not np.all(np.diff(v_ray) > 0):
            monotone_failures += 1
        growth = float(v_ray[-1] / max(v_ray[0], 1e-300))
        min_growth = min(min_growth, growth)
    limv = LimvCheck(
        n_rays=config.n_rays,
        n_skipped_degenerate=skipped,
        min_growth_factor=min_growth,
        monotone_failures=monotone_failures,
        passed=bool(monotone_failures == 0 and min_growth > 10.0),
    )

    # (c) sigma1: below the reported epsilon_zero some residual exceeds
    # sigma (signed form); track where only the |f| form would pass.
    max_f = f.max(axis=1)
    max_abs_f = np.abs(f).max(axis=1)
    bad_signed = max_f <= sigma
    counter_rows = []
    epsilon_zero = 0.0
    for cand in sorted(config.epsilon_candidates):
        n_counter = int(np.count_nonzero((v < cand) & bad_signed))
        counter_rows.append((float(cand), n_counter))
        if n_counter == 0:
            epsilon_zero = float(cand)
    mismatches = int(np.count_nonzero(bad_signed & (max_abs_f > sigma)))
    sigma1 = Sigma1Check(
        sigma=sigma,
        epsilon_zero=epsilon_zero,
        counterexamples_at_candidates=tuple(counter_rows),
        abs_signed_mismatches=mismatches,
        passed=bool(epsilon_zero > 0.0),
    )

    # (d) genlimv: every small-v sample admits a nonempty I with
    # residuals above sigma on I and small mass off it.
    below = v < config.delta
    n_below = int(np.count_nonzero(below))
    u_below = samples[below]
    f_below = f[below]
    best = np.full(n_below, np.inf)
    best_unconstrained = np.full(n_below, np.inf)
    for i_set in all_index_sets(sys.n_species):
        if len(i_set) == 0:
            continue
        on = np.array([i - 1 for i in i_set])
        off = np.array([j for j in range(sys.n_species) if j + 1 not in i_set], dtype=int)
        mass = u_below[:, on].sum(axis=1)
        if off.size:
            mass = mass + np.abs(f_below[:, off]).sum(axis=1)
        valid = (
            f_below[:, on].min(axis=1) > sigma
            if n_below
            else np.zeros(0, dtype=bool)
        )
        best = np.minimum(best, np.where(valid, mass, np.inf))
        best_unconstrained = np.minimum(best_unconstrained, mass)
    counterexamples = int(np.count_nonzero(~np.isfinite(best))) if n_below else 0
    epsilon_of_delta = (
        float(best[np.isfinite(best)].max()) if n_below and np.isfinite(best).any() else 0.0
    )
    genlimv = GenlimvCheck(
        delta=config.delta,
        n_below_delta=n_below,
        counterexamples=counterexamples,
        epsilon_of_delta=epsilon_of_delta,
        cor_gstab_max=float(best_unconstrained.max()) if n_below else 0.0,
        passed=bool(counterexamples == 0 and n_below > 0),
    )

    return LimitLemmaReport(gstab=gstab, limv=limv, sigma1=sigma1, genlimv=genlimv)
