"""Discretized rectangular domains and the level-set geometry on them.

Fields are cell-centered on a uniform grid over an axis-aligned
rectangle in dimension 1 or 2.  Perimeters are estimated by counting
interior faces between cells inside and outside a region, which is
exact for axis-aligned boundaries and overestimates smooth ones by an
orientation-dependent factor up to sqrt(2); the calibrated estimators
below correct that bias either with the local field gradient or, when
no field is available, with the isotropic average factor pi/4.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .coefficients import CoefficientSystem, IndexSet, all_index_sets
from .errors import CapacityError

DEFAULT_CELL_CAP = 1 << 24
ISOTROPIC_FACE_FACTOR = math.pi / 4.0

_BINARY_HEADER_LEN = 5  # dim, three resolution slots (unused ones = 1), K


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid on an axis-aligned rectangle."""

    extents: tuple[float, ...]
    resolution: tuple[int, ...]

    def __post_init__(self) -> None:
        extents = tuple(float(e) for e in np.atleast_1d(self.extents))
        resolution = tuple(int(r) for r in np.atleast_1d(self.resolution))
        if len(extents) not in (1, 2) or len(extents) != len(resolution):
            raise ValueError("grid must be 1-D or 2-D with matching extents")
        if any(e <= 0 or not np.isfinite(e) for e in extents):
            raise ValueError("extents must be positive and finite")
        if any(r < 4 for r in resolution):
            raise ValueError("resolution must be >= 4 per axis")
        if int(np.prod(resolution)) > DEFAULT_CELL_CAP:
            raise CapacityError(
                f"{int(np.prod(resolution))} cells exceed cap {DEFAULT_CELL_CAP}"
            )
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "resolution", resolution)

    @classmethod
    def unit_interval(cls, n: int) -> "Grid":
        return cls((1.0,), (n,))

    @classmethod
    def unit_square(cls, n: int) -> "Grid":
        return cls((1.0, 1.0), (n, n))

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.resolution

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(e / r for e, r in zip(self.extents, self.resolution))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def domain_measure(self) -> float:
        return float(np.prod(self.extents))

    def axis_centers(self, axis: int) -> np.ndarray:
        h = self.spacing[axis]
        return (np.arange(self.resolution[axis]) + 0.5) * h

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        axes = [self.axis_centers(d) for d in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))


@dataclass(frozen=True)
class GridField:
    """K real components sampled at the cell centers of a grid.
    values has shape (K, *grid.shape)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim == self.grid.dim:
            values = values[np.newaxis]
        if values.shape[1:] != self.grid.shape:
            raise ValueError(
                f"component shape {values.shape[1:]} != grid {self.grid.shape}"
            )
        if not np.isfinite(values).all():
            raise ValueError("field values must be finite")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_components(self) -> int:
        return self.values.shape[0]

    def component(self, k: int) -> np.ndarray:
        return self.values[k]

    def scalar(self) -> np.ndarray:
        if self.n_components != 1:
            raise ValueError("expected a scalar field")
        return self.values[0]

    @classmethod
    def constant(cls, grid: Grid, vector: Sequence[float]) -> "GridField":
        vec = np.atleast_1d(np.asarray(vector, dtype=float))
        values = np.broadcast_to(
            vec.reshape((len(vec),) + (1,) * grid.dim, ), (len(vec),) + grid.shape
        ).copy()
        return cls(grid, values)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> "GridField":
        """Sample fn(*coordinate_arrays) at the cell centers.  fn may
        return one array (scalar field) or a stack of K arrays."""
        out = np.asarray(fn(*grid.meshgrid()), dtype=float)
        return cls(grid, out)

    def with_values(self, values: np.ndarray) -> "GridField":
        return GridField(self.grid, values)


@dataclass(frozen=True)
class Region:
    """Boolean cell mask over a grid."""

    grid: Grid
    mask: np.ndarray

    def __post_init__(self) -> None:
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != self.grid.shape:
            raise ValueError(f"mask shape {mask.shape} != grid {self.grid.shape}")
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def measure(self) -> float:
        return float(np.count_nonzero(self.mask)) * self.grid.cell_volume

    def complement(self) -> "Region":
        return Region(self.grid, ~self.mask)

    def union(self, other: "Region") -> "Region":
        if other.grid != self.grid:
            raise ValueError("regions live on different grids")
        return Region(self.grid, self.mask | other.mask)


def field_f(sys: CoefficientSystem, u: GridField) -> GridField:
    """Apply f_i = m_i - sum_j a_ij u_j cellwise to an N-component field."""
    if u.n_components != sys.n_species:
        raise ValueError(
            f"field has {u.n_components} components, system has {sys.n_species}"
        )
    if float(u.values.min()) < -1e-12:
        warnings.warn("field has negative components; f is evaluated anyway")
    f = np.einsum("ij,j...->i...", sys.matrix_a, u.values)
    f = sys.vector_m.reshape((-1,) + (1,) * u.grid.dim) - f
    return GridField(u.grid, f)


def gradient(field: GridField) -> GridField:
    """Central differences in the interior, one-sided at the boundary.
    Returns one component per axis."""
    values = field.scalar()
    grads = np.gradient(values, *field.grid.spacing, edge_order=1)
    if field.grid.dim == 1:
        grads = [grads]
    return GridField(field.grid, np.stack(grads))


def gradient_norm(field: GridField) -> np.ndarray:
    g = gradient(field).values
    return np.sqrt(np.sum(g * g, axis=0))


def integrate(field: GridField) -> float:
    """Midpoint quadrature: sum of cell values times cell volume."""
    return float(np.sum(field.scalar())) * field.grid.cell_volume


def superlevel_set(field: GridField, t: float) -> Region:
    return Region(field.grid, field.scalar() > t)


def sublevel_set(field: GridField, t: float) -> Region:
    return Region(field.grid, field.scalar() < t)


def union_levelset_region(
    f: GridField, t: float, mode: str = "symmetric", lead: int | None = None
) -> Region:
    """Union of level-set regions of the components of f.

    mode "symmetric": union over i of [|f_i| > t].
    mode "signed":    [f_lead > t] union over all i of [f_i < -t].
    """
    if t <= 0:
        raise ValueError("t must be positive")
    vals = f.values
    if mode == "symmetric":
        mask = np.any(np.abs(vals) > t, axis=0)
    elif mode == "signed":
        if lead is None or not 1 <= lead <= f.n_components:
            raise ValueError("signed mode needs lead in 1..N")
        mask = (vals[lead - 1] > t) | np.any(vals < -t, axis=0)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return Region(f.grid, mask)


def _face_measure(grid: Grid, axis: int) -> float:
    # Measure of one cell face orthogonal to `axis` (1.0 in 1-D).
    return grid.cell_volume / grid.spacing[axis]


def _face_changes(mask: np.ndarray, axis: int) -> np.ndarray:
    lo = [slice(None)] * mask.ndim
    hi = [slice(None)] * mask.ndim
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    return mask[tuple(lo)] != mask[tuple(hi)]


def relative_perimeter(region: Region) -> float:
    """Face-counting perimeter of the region inside the domain.  Faces
    on the domain boundary are never counted."""
    grid = region.grid
    total = 0.0
    for axis in range(grid.dim):
        changes = _face_changes(region.mask, axis)
        total += float(np.count_nonzero(changes)) * _face_measure(grid, axis)
    return total


def calibrated_perimeter(region: Region, orientation: GridField | None = None) -> float:
    """Perimeter with the staircase bias removed.

    With an orientation field, each boundary face is weighted by
    |g|_2 / |g|_1 of the field gradient there (1 for axis-aligned
    interfaces, 1/sqrt(2) for diagonal ones); faces with no gradient
    information fall back to the isotropic factor pi/4.  Without a
    field the raw count is simply scaled by pi/4.
    """
    grid = region.grid
    if grid.dim == 1:
        return relative_perimeter(region)
    if orientation is None:
        return ISOTROPIC_FACE_FACTOR * relative_perimeter(region)
    g = gradient(orientation).values
    total = 0.0
    for axis in range(grid.dim):
        changes = _face_changes(region.mask, axis)
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        g_face = 0.5 * (g[(slice(None),) + tuple(lo)] + g[(slice(None),) + tuple(hi)])
        norm1 = np.sum(np.abs(g_face), axis=0)
        norm2 = np.sqrt(np.sum(g_face * g_face, axis=0))
        with np.errstate(invalid="ignore", divide="ignore"):
            w = np.where(norm1 > 0, norm2 / np.maximum(norm1, 1e-300),
                         ISOTROPIC_FACE_FACTOR)
        total += float(np.sum(w[changes])) * _face_measure(grid, axis)
    return total


@dataclass(frozen=True)
class CoareaReport:
    """Both sides of the coarea identity on a band of levels, with the
    perimeter side reported raw and calibrated."""

    grad_integral: float
    level_integral_raw: float
    level_integral_calibrated: float
    rel_error_raw: float
    rel_error_calibrated: float
    t_lo: float
    t_hi: float
    n_levels: int


def coarea_check(
    field: GridField, t_lo: float, t_hi: float, n_levels: int = 64
) -> CoareaReport:
    """Compare the gradient integral over the band [t_lo < f < t_hi]
    with the midpoint-rule integral of level-set perimeters."""
    if not t_lo < t_hi:
        raise ValueError("need t_lo < t_hi")
    if n_levels < 8:
        raise ValueError("need n_levels >= 8")
    values = field.scalar()
    gn = gradient_norm(field)
    band = (values > t_lo) & (values < t_hi)
    grad_integral = float(np.sum(gn[band])) * field.grid.cell_volume

    dt = (t_hi - t_lo) / n_levels
    raw = 0.0
    calibrated = 0.0
    for k in range(n_levels):
        t = t_lo + (k + 0.5) * dt
        region = superlevel_set(field, t)
        raw += relative_perimeter(region) * dt
        calibrated += calibrated_perimeter(region, field) * dt

    denom = max(grad_integral, 1e-12)
    return CoareaReport(
        grad_integral=grad_integral,
        level_integral_raw=raw,
        level_integral_calibrated=calibrated,
        rel_error_raw=abs(grad_integral - raw) / denom,
        rel_error_calibrated=abs(grad_integral - calibrated) / denom,
        t_lo=float(t_lo),
        t_hi=float(t_hi),
        n_levels=int(n_levels),
    )


DEFAULT_ISO_FAMILIES = (
    "half_slab",
    "quarter_disc",
    "centered_disc",
    "random_rectangles",
)


@dataclass(frozen=True)
class IsoperimetricSample:
    label: str
    measure: float
    perimeter: float
    ratio: float


@dataclass(frozen=True)
class IsoperimetricReport:
    c_estimate: float
    samples: tuple[IsoperimetricSample, ...]


def _disc_mask(grid: Grid, center: tuple[float, float], radius: float) -> np.ndarray:
    xx, yy = grid.meshgrid()
    return (xx - center[0]) ** 2 + (yy - center[1]) ** 2 < radius**2


def _rect_mask(grid: Grid, lo: Sequence[float], hi: Sequence[float]) -> np.ndarray:
    coords = grid.meshgrid()
    mask = np.ones(grid.shape, dtype=bool)
    for d in range(grid.dim):
        mask &= (coords[d] > lo[d]) & (coords[d] < hi[d])
    return mask


def estimate_isoperimetric_constant(
    grid: Grid,
    families: Sequence[str] = DEFAULT_ISO_FAMILIES,
    n_random: int = 32,
    seed: int = 0,
) -> IsoperimetricReport:
    """Empirical upper bound on the relative isoperimetric constant:
    the minimum of P(A; Omega) / |A|^((d-1)/d) over the sampled regions
    with |A| <= |Omega|/2.  Perimeters are raw face counts."""
    rng = np.random.default_rng(seed)
    half = grid.domain_measure / 2.0
    exponent = (grid.dim - 1) / grid.dim
    min_ext = min(grid.extents)
    candidates: list[tuple[str, np.ndarray]] = []

    for family in families:
        if family == "half_slab":
            coords = grid.meshgrid()
            for d in range(grid.dim):
                candidates.append(
                    (f"half_slab_axis{d}", coords[d] < grid.extents[d] / 2.0)
                )
        elif family == "quarter_disc":
            for frac in (0.25, 0.4, 0.6, 0.75):
                r = frac * min_ext
                if grid.dim == 1:
                    mask = grid.axis_centers(0) < r
                else:
                    mask = _disc_mask(grid, (0.0, 0.0), r)
                candidates.append((f"quarter_disc_r{frac}", mask))
        elif family == "centered_disc":
            center = tuple(e / 2.0 for e in grid.extents)
            for frac in (0.1, 0.2, 0.3, 0.39):
                r = frac * min_ext
                if grid.dim == 1:
                    mask = np.abs(grid.axis_centers(0) - center[0]) < r
                else:
                    mask = _disc_mask(grid, center, r)
                candidates.append((f"centered_disc_r{frac}", mask))
        elif family == "random_rectangles":
            for k in range(n_random):
                mask = np.zeros(grid.shape, dtype=bool)
                for _ in range(int(rng.integers(1, 4))):
                    lo = rng.uniform(0.0, 0.7, size=grid.dim) * np.array(grid.extents)
                    size = rng.uniform(0.1, 0.6, size=grid.dim) * np.array(grid.extents)
                    mask |= _rect_mask(grid, lo, lo + size)
                candidates.append((f"random_rectangles_{k}", mask))
        else:
            raise ValueError(f"unknown sample family {family!r}")

    samples = []
    for label, mask in candidates:
        region = Region(grid, mask)
        measure = region.measure
        if measure <= 0.0 or measure > half:
            continue
        perimeter = relative_perimeter(region)
        ratio = perimeter / measure**exponent if exponent > 0 else perimeter
        samples.append(IsoperimetricSample(label, measure, perimeter, ratio))
    if not samples:
        raise ValueError("no admissible sample regions (all empty or too large)")
    c_estimate = min(s.ratio for s in samples)
    return IsoperimetricReport(c_estimate=c_estimate, samples=tuple(samples))


@dataclass(frozen=True)
class RegimeReport:
    """The 2^N regime regions and the measure of the uncovered rest."""

    regions: dict[IndexSet, Region]
    leftover_measure: float


def regime_sets(sys: CoefficientSystem, u: GridField, sigma: float) -> RegimeReport:
    """Classify cells by which components have f_i > sigma (set I) while
    all others satisfy |f_j| < sigma/2.  Distinct index sets give
    disjoint regions; cells matching no pattern make up the leftover."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    f = field_f(sys, u).values
    above = f > sigma
    small = np.abs(f) < sigma / 2.0
    regions: dict[IndexSet, Region] = {}
    covered = 0.0
    for i_set in all_index_sets(sys.n_species):
        mask = np.ones(u.grid.shape, dtype=bool)
        for i in range(1, sys.n_species + 1):
            mask &= above[i - 1] if i in i_set else small[i - 1]
        region = Region(u.grid, mask)
        regions[i_set] = region
        covered += region.measure
    leftover = u.grid.domain_measure - covered
    return RegimeReport(regions=regions, leftover_measure=leftover)


# ---------------------------------------------------------------------------
# Field import/export


def field_to_csv(field: GridField, path: str) -> None:
    """One row per cell: axis coordinates then component values."""
    grid = field.grid
    coords = grid.meshgrid()
    axis_names = ["x", "y"][: grid.dim]
    header = axis_names + [f"u_{k + 1}" for k in range(field.n_components)]
    columns = [c.ravel() for c in coords] + [
        field.values[k].ravel() for k in range(field.n_components)
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def field_from_csv(path: str) -> GridField:
    """Rebuild a field from the CSV layout written by field_to_csv; the
    grid is inferred from the coordinate columns (uniform spacing)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    dim = sum(1 for name in header if name in ("x", "y"))
    if dim not in (1, 2) or data.shape[1] != len(header):
        raise ValueError("unrecognized field CSV layout")
    resolution = []
    spacing = []
    for d in range(dim):
        uniq = np.unique(data[:, d])
        resolution.append(len(uniq))
        gaps = np.diff(uniq)
        if len(gaps) and not np.allclose(gaps, gaps[0], rtol=1e-8, atol=1e-12):
            raise ValueError("coordinates are not uniformly spaced")
        spacing.append(gaps[0] if len(gaps) else 1.0)
    extents = tuple(s * r for s, r in zip(spacing, resolution))
    grid = Grid(extents, tuple(resolution))
    n_comp = data.shape[1] - dim
    values = np.stack(
        [data[:, dim + k].reshape(grid.shape) for k in range(n_comp)]
    )
    return GridField(grid, values)


def field_to_binary(field: GridField, path: str) -> None:
    """Compact layout: 5 little-endian int64 (dim, up-to-3 resolutions
    padded with 1, component count), then the component arrays as
    row-major little-endian float64."""
    grid = field.grid
    res = list(grid.resolution) + [1] * (3 - grid.dim)
    header = np.array([grid.dim, *res, field.n_components], dtype="<i8")
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(field.values.astype("<f8").tobytes())


def field_from_binary(path: str, extents: Sequence[float] | None = None) -> GridField:
    """Inverse of field_to_binary.  The layout carries no extents; pass
    them explicitly or get a unit box."""
    with open(path, "rb") as fh:
        header = np.frombuffer(fh.read(8 * _BINARY_HEADER_LEN), dtype="<i8")
        dim, r0, r1, r2, n_comp = (int(v) for v in header)
        if dim not in (1, 2) or r2 != 1:
            raise ValueError("unsupported binary field header")
        resolution = (r0,) if dim == 1 else (r0, r1)
        if extents is None:
            extents = (1.0,) * dim
        grid = Grid(tuple(extents), resolution)
        count = n_comp * int(np.prod(resolution))
        raw = np.frombuffer(fh.read(8 * count), dtype="<f8")
        if raw.size != count:
            raise ValueError("binary field payload truncated")
    return GridField(grid, raw.reshape((n_comp,) + grid.shape).copy())


def region_to_csv(region: Region, path: str) -> None:
    """0/1 grid, one row per index along the first axis."""
    mask = region.mask.astype(int)
    if region.grid.dim == 1:
        mask = mask[np.newaxis]
    with open(path, "w", encoding="utf-8") as fh:
        for row in mask:
            fh.write(",".join(str(v) for v in row) + "\n")
