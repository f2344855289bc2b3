"""Coefficient systems (A, m), the affine fitness functions f, and the
determinant-based admissibility certificate.

A system is admissible at level kappa when the entries of A and m are
bounded by 1/kappa, every principal minor of A is >= kappa, and every
augmented determinant (principal block of A bordered by a row of A and
the corresponding entries of m) is >= kappa.  ``admissibility_margin``
evaluates all of them exhaustively and reports the largest kappa that
works, together with the worst witnesses.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import CapacityError

# Exhaustive subset enumeration stays comfortable up to 2^12 minors.
DEFAULT_ENUMERATION_CAP = 12


@dataclass(frozen=True)
class IndexSet:
    """Sorted tuple of distinct 1-based species indices; may be empty."""

    members: tuple[int, ...]

    def __post_init__(self) -> None:
        members = tuple(int(i) for i in self.members)
        if any(i < 1 for i in members):
            raise ValueError("indices are 1-based and must be >= 1")
        if any(a >= b for a, b in zip(members, members[1:])):
            raise ValueError("indices must be strictly increasing")
        object.__setattr__(self, "members", members)

    @classmethod
    def of(cls, indices: Iterable[int]) -> "IndexSet":
        return cls(tuple(sorted(set(int(i) for i in indices))))

    @classmethod
    def empty(cls) -> "IndexSet":
        return cls(())

    def complement(self, n: int) -> "IndexSet":
        inside = set(self.members)
        return IndexSet(tuple(i for i in range(1, n + 1) if i not in inside))

    def __iter__(self) -> Iterator[int]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, i: object) -> bool:
        return i in self.members

    def __str__(self) -> str:
        return "{" + ";".join(str(i) for i in self.members) + "}"


def all_index_sets(n: int) -> list[IndexSet]:
    """All 2^n index sets over {1, ..., n}, by size then lexicographically."""
    sets = []
    for r in range(n + 1):
        for combo in itertools.combinations(range(1, n + 1), r):
            sets.append(IndexSet(combo))
    return sets


@dataclass(frozen=True)
class CoefficientSystem:
    """Constant coefficients: N species, interaction matrix A, growth
    vector m.  The affine functions are f_i(u) = m_i - sum_j a_ij u_j."""

    n_species: int
    matrix_a: np.ndarray
    vector_m: np.ndarray

    def __post_init__(self) -> None:
        n = int(self.n_species)
        if n < 1:
            raise ValueError("n_species must be >= 1")
        a = np.array(self.matrix_a, dtype=float)
        m = np.array(self.vector_m, dtype=float)
        if a.shape != (n, n):
            raise ValueError(f"matrix_a must be {n}x{n}, got {a.shape}")
        if m.shape != (n,):
            raise ValueError(f"vector_m must have length {n}, got {m.shape}")
        if not (np.isfinite(a).all() and np.isfinite(m).all()):
            raise ValueError("coefficients must be finite")
        a.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "n_species", n)
        object.__setattr__(self, "matrix_a", a)
        object.__setattr__(self, "vector_m", m)

    @classmethod
    def from_config(cls, cfg: dict) -> "CoefficientSystem":
        """Build from a key-value record with fields n, a (row-major), m."""
        try:
            n = int(cfg["n"])
            a = np.array(cfg["a"], dtype=float).reshape(n, n)
            m = np.array(cfg["m"], dtype=float).reshape(n)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"bad coefficient record: {exc}") from exc
        return cls(n, a, m)

    @classmethod
    def from_json(cls, path: str) -> "CoefficientSystem":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_config(json.load(fh))

    def _check_index_set(self, i_set: IndexSet) -> None:
        if len(i_set) and max(i_set.members) > self.n_species:
            raise ValueError(f"index set {i_set} exceeds N={self.n_species}")


@dataclass(frozen=True)
class AdmissibilityReport:
    """Result of the exhaustive determinant sweep.

    kappa_star is the largest level at which all three admissibility
    conditions hold simultaneously, clamped at zero.  The witnesses
    record where the minimum is attained.
    """

    kappa_star: float
    worst_minor: tuple[IndexSet, float]
    worst_augmented: tuple[IndexSet, int, float]
    bound_margin: float

    @property
    def is_admissible(self) -> bool:
        return self.kappa_star > 0.0

    def admissible_at(self, kappa: float) -> bool:
        return self.kappa_star > 0.0 and kappa <= self.kappa_star

    def to_record(self) -> dict:
        """Flat key-value record for serialization."""
        i_set, minor_val = self.worst_minor
        j_set, j, aug_val = self.worst_augmented
        return {
            "kappa_star": self.kappa_star,
            "worst_minor_index_set": list(i_set.members),
            "worst_minor_value": minor_val,
            "worst_augmented_index_set": list(j_set.members),
            "worst_augmented_j": j,
            "worst_augmented_value": aug_val,
            "bound_margin": self.bound_margin,
        }


def evaluate_f(sys: CoefficientSystem, u: np.ndarray) -> np.ndarray:
    """f_i(u) = m_i - sum_j a_ij u_j for a single point u."""
    u = np.asarray(u, dtype=float)
    if u.shape != (sys.n_species,):
        raise ValueError(f"u must have length {sys.n_species}, got {u.shape}")
    return sys.vector_m - sys.matrix_a @ u


def minor_determinant(sys: CoefficientSystem, i_set: IndexSet) -> float:
    """Determinant of the principal submatrix of A on i_set; 1 for the
    empty set (empty-product convention)."""
    sys._check_index_set(i_set)
    if len(i_set) == 0:
        return 1.0
    rows = np.array(i_set.members) - 1
    sub = sys.matrix_a[np.ix_(rows, rows)]
    return float(np.linalg.det(sub))


def augmented_determinant(sys: CoefficientSystem, i_set: IndexSet, j: int) -> float:
    """Determinant of the (r+1)x(r+1) block with rows i_1..i_r, j and
    columns i_1..i_r plus the m-column.  Reduces to m_j for empty i_set."""
    sys._check_index_set(i_set)
    j = int(j)
    if not 1 <= j <= sys.n_species:
        raise ValueError(f"j={j} out of range 1..{sys.n_species}")
    if j in i_set:
        raise ValueError(f"j={j} must not belong to {i_set}")
    rows = np.array(list(i_set.members) + [j]) - 1
    cols = np.array(i_set.members, dtype=int) - 1
    r = len(i_set)
    block = np.empty((r + 1, r + 1))
    block[:, :r] = sys.matrix_a[np.ix_(rows, cols)]
    block[:, r] = sys.vector_m[rows]
    return float(np.linalg.det(block))


def admissibility_margin(
    sys: CoefficientSystem, cap: int = DEFAULT_ENUMERATION_CAP
) -> AdmissibilityReport:
    """Evaluate every minor and augmented determinant and report the
    margin kappa_star = min(minors, augmented, entry bounds), clamped
    at zero.  The system is admissible at level kappa iff kappa_star > 0
    and kappa <= kappa_star."""
    n = sys.n_species
    if n > cap:
        raise CapacityError(f"N={n} exceeds enumeration cap {cap}")

    worst_minor_val = np.inf
    worst_minor_set = IndexSet.empty()
    worst_aug_val = np.inf
    worst_aug_set = IndexSet.empty()
    worst_aug_j = 0
    for i_set in all_index_sets(n):
        val = minor_determinant(sys, i_set)
        if val < worst_minor_val:
            worst_minor_val = val
            worst_minor_set = i_set
        for j in range(1, n + 1):
            if j in i_set:
                continue
            aug = augmented_determinant(sys, i_set, j)
            if aug < worst_aug_val:
                worst_aug_val = aug
                worst_aug_set = i_set
                worst_aug_j = j

    max_entry = float(np.max(np.abs(sys.matrix_a)))
    max_m = float(np.max(sys.vector_m))
    bound_margin = min(
        1.0 / max_entry if max_entry > 0 else np.inf,
        1.0 / max_m if max_m > 0 else np.inf,
    )
    kappa_star = max(0.0, min(worst_minor_val, worst_aug_val, bound_margin))
    return AdmissibilityReport(
        kappa_star=float(kappa_star),
        worst_minor=(worst_minor_set, float(worst_minor_val)),
        worst_augmented=(worst_aug_set, worst_aug_j, float(worst_aug_val)),
        bound_margin=float(bound_margin),
    )
