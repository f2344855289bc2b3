"""Degenerate states, the feasibility polytope, and the uniform
observability gap sigma.

The feasible set {u >= 0, f(u) >= 0} of an admissible system is a
polytope whose vertices are exactly the degenerate states u_I (zeros
on I, vanishing residuals off I), and whose face structure is that of
an N-cube.  ``verify_cuboid`` checks this combinatorially from a brute
force vertex enumeration.  ``sigma_obs`` certifies by LP bisection the
largest gap sigma such that u_j <= sigma and f_j(u) <= sigma force
min_i f_i(u) <= -sigma.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .coefficients import (
    CoefficientSystem,
    IndexSet,
    admissibility_margin,
    all_index_sets,
    augmented_determinant,
    evaluate_f,
    minor_determinant,
    DEFAULT_ENUMERATION_CAP,
)
from .errors import (
    CapacityError,
    DegenerateMarginError,
    InadmissibleSystemError,
    SingularSystemError,
)
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, solve_lp_max

_SINGULAR_TOL = 1e-12
_FEASIBLE_TOL = 1e-9
_DEDUP_TOL = 1e-8
_VERTEX_MATCH_TOL = 1e-9
TRUNCATION_MARGIN = 1.5


@dataclass(frozen=True)
class DegenerateState:
    """Solution of u_i = 0 (i in I), f_j = 0 (j not in I), with the
    residual vector f(u_I)."""

    i_set: IndexSet
    u_vector: np.ndarray
    f_vector: np.ndarray

    @property
    def is_coexistence(self) -> bool:
        return len(self.i_set) == 0


def degenerate_state(sys: CoefficientSystem, i_set: IndexSet) -> DegenerateState:
    """Solve the degenerate system for i_set by Cramer's rule on the
    free block."""
    sys._check_index_set(i_set)
    n = sys.n_species
    free = i_set.complement(n)
    delta_free = minor_determinant(sys, free)
    if abs(delta_free) < _SINGULAR_TOL:
        raise SingularSystemError(
            f"principal minor on {free} is numerically singular ({delta_free:g})"
        )
    u = np.zeros(n)
    for i in free:
        reduced = IndexSet.of(k for k in free if k != i)
        u[i - 1] = augmented_determinant(sys, reduced, i) / delta_free
    f = evaluate_f(sys, u)
    u.setflags(write=False)
    f.setflags(write=False)
    return DegenerateState(i_set=i_set, u_vector=u, f_vector=f)


def all_degenerate_states(
    sys: CoefficientSystem, cap: int = DEFAULT_ENUMERATION_CAP
) -> dict[IndexSet, DegenerateState]:
    """All 2^N degenerate states; the empty index set is the
    coexistence state A^{-1} m."""
    if sys.n_species > cap:
        raise CapacityError(f"N={sys.n_species} exceeds enumeration cap {cap}")
    return {i_set: degenerate_state(sys, i_set) for i_set in all_index_sets(sys.n_species)}


def truncation_bound(sys: CoefficientSystem) -> float:
    """Strict upper bound for every degenerate-state coordinate: the
    supremum times a 1.5 margin."""
    states = all_degenerate_states(sys)
    sup = max(float(np.max(s.u_vector)) for s in states.values())
    return TRUNCATION_MARGIN * sup


def enumerate_vertices(
    sys: CoefficientSystem,
    cap: int = DEFAULT_ENUMERATION_CAP,
    shuffle_seed: int | None = None,
) -> np.ndarray:
    """Vertices of {u >= 0, f(u) >= 0} by brute force over all
    N-subsets of the 2N hyperplanes {u_i = 0}, {f_i = 0}.  Returns a
    (V, N) array sorted lexicographically; duplicates within 1e-8 are
    merged and singular subsets skipped."""
    n = sys.n_species
    if n > cap:
        raise CapacityError(f"N={n} exceeds enumeration cap {cap}")
    # Hyperplane h: rows[h] . u = rhs[h].  0..N-1 are u_i = 0, N..2N-1
    # are f_i = 0.
    rows = np.vstack([np.eye(n), sys.matrix_a])
    rhs = np.concatenate([np.zeros(n), sys.vector_m])

    combos = list(itertools.combinations(range(2 * n), n))
    if shuffle_seed is not None:
        np.random.default_rng(shuffle_seed).shuffle(combos)

    vertices: list[np.ndarray] = []
    for combo in combos:
        mat = rows[list(combo)]
        try:
            u = np.linalg.solve(mat, rhs[list(combo)])
        except np.linalg.LinAlgError:
            continue
        if not np.isfinite(u).all():
            continue
        f = evaluate_f(sys, u)
        if u.min() < -_FEASIBLE_TOL or f.min() < -_FEASIBLE_TOL:
            continue
        if any(np.max(np.abs(u - v)) <= _DEDUP_TOL for v in vertices):
            continue
        vertices.append(u)
    if not vertices:
        return np.zeros((0, n))
    out = np.array(vertices)
    order = np.lexsort(out.T[::-1])
    return out[order]


@dataclass(frozen=True)
class PolytopeReport:
    """Vertex enumeration plus the cube-isomorphism certificate.

    facet_incidence maps each hyperplane ("u" or "f", species index)
    to the indices of incident rows of ``vertices``.  When the vertex
    set matches the degenerate states, ``vertex_to_index_set`` is that
    bijection and ``certificate`` sends each index set to its 0/1 cube
    vertex (0 exactly on the index set).
    """

    vertices: np.ndarray
    vertex_to_index_set: dict[int, IndexSet]
    facet_incidence: dict[tuple[str, int], tuple[int, ...]]
    is_cuboid: bool
    certificate: dict[IndexSet, tuple[int, ...]]


def verify_cuboid(sys: CoefficientSystem) -> PolytopeReport:
    """Check that the feasibility polytope is combinatorially a cube:
    (a) its vertices are exactly the degenerate states, (b) each of the
    2N hyperplanes is incident to exactly the states with the matching
    zero pattern, (c) the 0/1 labelling preserves facets."""
    n = sys.n_species
    vertices = enumerate_vertices(sys)
    states = all_degenerate_states(sys)

    vertex_to_index_set: dict[int, IndexSet] = {}
    matched_states: set[IndexSet] = set()
    for row, v in enumerate(vertices):
        for i_set, state in states.items():
            if i_set in matched_states:
                continue
            if np.max(np.abs(v - state.u_vector)) <= _VERTEX_MATCH_TOL:
                vertex_to_index_set[row] = i_set
                matched_states.add(i_set)
                break
    vertices_match = (
        len(vertex_to_index_set) == len(vertices) == len(states)
    )

    facet_incidence: dict[tuple[str, int], tuple[int, ...]] = {}
    for i in range(1, n + 1):
        on_u = []
        on_f = []
        for row, v in enumerate(vertices):
            if abs(v[i - 1]) <= _VERTEX_MATCH_TOL:
                on_u.append(row)
            if abs(evaluate_f(sys, v)[i - 1]) <= _VERTEX_MATCH_TOL:
                on_f.append(row)
        facet_incidence[("u", i)] = tuple(on_u)
        facet_incidence[("f", i)] = tuple(on_f)

    incidence_match = vertices_match
    if vertices_match:
        for i in range(1, n + 1):
            expect_u = {r for r, s in vertex_to_index_set.items() if i in s}
            expect_f = {r for r, s in vertex_to_index_set.items() if i not in s}
            if set(facet_incidence[("u", i)]) != expect_u:
                incidence_match = False
            if set(facet_incidence[("f", i)]) != expect_f:
                incidence_match = False

    certificate = {
        i_set: tuple(0 if i in i_set else 1 for i in range(1, n + 1))
        for i_set in states
    }
    # (c) follows once (a) and (b) hold: the labelling sends the
    # incident set of {u_i = 0} onto the cube facet {alpha_i = 0} and
    # of {f_i = 0} onto {alpha_i = 1}; assert the labels are distinct.
    labels_bijective = len(set(certificate.values())) == len(certificate)

    return PolytopeReport(
        vertices=vertices,
        vertex_to_index_set=vertex_to_index_set,
        facet_incidence=facet_incidence,
        is_cuboid=bool(vertices_match and incidence_match and labels_bijective),
        certificate=certificate,
    )


def lp_max_min_f(
    sys: CoefficientSystem, j: int, sigma: float
) -> tuple[str, float | None]:
    """Maximize min_i f_i(u) over the slab u >= 0, u_j <= sigma,
    f_j(u) <= sigma.  Returns (status, optimum or None)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    n = sys.n_species
    if not 1 <= j <= n:
        raise ValueError(f"j={j} out of range 1..{n}")
    a = sys.matrix_a
    m = sys.vector_m
    # Variables (u, t+, t-), t = t+ - t- free; maximize t subject to
    # A u + t <= m (f_i >= t), u_j <= sigma, -A_j u <= sigma - m_j.
    n_var = n + 2
    a_ub = np.zeros((n + 2, n_var))
    b_ub = np.zeros(n + 2)
    a_ub[:n, :n] = a
    a_ub[:n, n] = 1.0
    a_ub[:n, n + 1] = -1.0
    b_ub[:n] = m
    a_ub[n, j - 1] = 1.0
    b_ub[n] = sigma
    a_ub[n + 1, :n] = -a[j - 1]
    b_ub[n + 1] = sigma - m[j - 1]
    c = np.zeros(n_var)
    c[n] = 1.0
    c[n + 1] = -1.0
    result = solve_lp_max(c, a_ub, b_ub)
    if result.status == OPTIMAL:
        return OPTIMAL, float(result.value)
    return result.status, None


@dataclass(frozen=True)
class SigmaCertificate:
    """Largest certified sigma for the observability gap, with the
    per-index bisection profiles (sigma probe, LP status, optimum)."""

    sigma: float
    per_index_profile: dict[int, tuple[tuple[float, str, float | None], ...]]

    def to_rows(self) -> list[tuple[int, float, str, float | None]]:
        rows = []
        for j in sorted(self.per_index_profile):
            for sig, status, t_star in self.per_index_profile[j]:
                rows.append((j, sig, status, t_star))
        return rows


def sigma_obs(sys: CoefficientSystem, tol: float = 1e-6) -> SigmaCertificate:
    """Bisection for the largest sigma such that for every j the slab
    LP is infeasible or its optimum is <= -sigma.  The reported value
    is the last probe certified valid (supremum minus at most tol)."""
    report = admissibility_margin(sys)
    if not report.is_admissible:
        raise InadmissibleSystemError(
            f"sigma_obs needs an admissible system (kappa_star={report.kappa_star:g})"
        )
    sigma_max = truncation_bound(sys)
    profiles: dict[int, tuple[tuple[float, str, float | None], ...]] = {}
    per_j_sigma = []
    for j in range(1, sys.n_species + 1):
        trail: list[tuple[float, str, float | None]] = []

        def holds(sigma: float) -> bool:
            status, t_star = lp_max_min_f(sys, j, sigma)
            trail.append((sigma, status, t_star))
            if status == INFEASIBLE:
                return True
            if status == UNBOUNDED:
                return False
            return t_star <= -sigma + 1e-9

        lo = tol
        if not holds(lo):
            raise DegenerateMarginError(
                f"observability gap below {tol:g} for j={j}; "
                "system too close to inadmissible"
            )
        hi = sigma_max
        if holds(hi):
            lo = hi
        else:
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if holds(mid):
                    lo = mid
                else:
                    hi = mid
        per_j_sigma.append(lo)
        profiles[j] = tuple(trail)
    return SigmaCertificate(sigma=float(min(per_j_sigma)), per_index_profile=profiles)


@dataclass(frozen=True)
class SlabSampleReport:
    n_candidates: int
    n_in_slab: int
    n_violations: int
    worst_min_f: float


def slab_sample_check(
    sys: CoefficientSystem,
    sigma: float,
    n_samples: int,
    seed: int,
    slack: float = 1e-6,
) -> SlabSampleReport:
    """Dense-sampling validation of a sigma certificate: draw points of
    the slab u_j <= sigma, f_j <= sigma inside [0, M]^N and count those
    with min_i f_i > -sigma + slack."""
    rng = np.random.default_rng(seed)
    n = sys.n_species
    box_hi = truncation_bound(sys)
    per_j = max(1, n_samples // n)
    in_slab = 0
    violations = 0
    worst = -np.inf
    for j in range(1, n + 1):
        u = rng.uniform(0.0, box_hi, size=(per_j, n))
        u[:, j - 1] = rng.uniform(0.0, sigma, size=per_j)
        f = sys.vector_m[np.newaxis, :] - u @ sys.matrix_a.T
        keep = f[:, j - 1] <= sigma
        min_f = f[keep].min(axis=1) if keep.any() else np.empty(0)
        in_slab += int(keep.sum())
        if min_f.size:
            worst = max(worst, float(min_f.max()))
            violations += int(np.count_nonzero(min_f > -sigma + slack))
    return SlabSampleReport(
        n_candidates=per_j * n,
        n_in_slab=in_slab,
        n_violations=violations,
        worst_min_f=worst,
    )
