from fractions import Fraction
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from exceptions import NonCommutingError
from service_rules import TOLERANCES


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


class Subspace(BaseModel):
    """Closed subspace of C^d held as an orthonormal d x k frame (k may be 0)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    ambient_dim: int = Field(gt=0)
    frame: np.ndarray

    @field_validator('frame', mode='before')
    @classmethod
    def validate_frame(cls, v):
        frame = np.asarray(v, dtype=complex)
        if frame.ndim == 1:
            frame = frame.reshape(-1, 1)
        if frame.ndim != 2:
            raise ValueError("frame must be a d x k matrix")
        return _readonly(frame)

    @model_validator(mode='after')
    def check_orthonormal(self):
        d, k = self.frame.shape
        if d != self.ambient_dim:
            raise ValueError(f"frame has {d} rows, ambient dimension is {self.ambient_dim}")
        if k > d:
            raise ValueError("frame has more columns than the ambient dimension")
        if k:
            gram = self.frame.conj().T @ self.frame
            deviation = np.max(np.abs(gram - np.eye(k)))
            if deviation > TOLERANCES.orthonormal * max(1.0, np.sqrt(d)) * 10:
                raise ValueError(f"frame columns are not orthonormal (deviation {deviation:.3e})")
        return self

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.frame @ self.frame.conj().T


class TraceValue(BaseModel):
    """Normalized trace of a projection, kept as exact rank arithmetic."""
    rank: int = Field(ge=0)
    ambient_dim: int = Field(gt=0)

    @model_validator(mode='after')
    def check_rank(self):
        if self.rank > self.ambient_dim:
            raise ValueError("rank exceeds the ambient dimension")
        return self

    @property
    def value(self) -> Fraction:
        return Fraction(self.rank, self.ambient_dim)

    def __float__(self) -> float:
        return self.rank / self.ambient_dim


class Idempotent(BaseModel):
    """Not necessarily self-adjoint idempotent, stored as its (range, kernel) pair."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    ambient_dim: int = Field(gt=0)
    range_frame: Subspace
    kernel_frame: Subspace

    @model_validator(mode='after')
    def check_complementary(self):
        d = self.ambient_dim
        if self.range_frame.ambient_dim != d or self.kernel_frame.ambient_dim != d:
            raise ValueError("range and kernel must live in the ambient space")
        if self.range_frame.dim + self.kernel_frame.dim != d:
            raise ValueError(
                f"dim(range) + dim(kernel) = {self.range_frame.dim + self.kernel_frame.dim}, expected {d}")
        if self.range_frame.dim and self.kernel_frame.dim:
            cosines = np.linalg.svd(self.range_frame.frame.conj().T @ self.kernel_frame.frame, compute_uv=False)
            if cosines[0] > 1 - TOLERANCES.complement_gap:
                raise ValueError("range and kernel intersect")
        return self

    @property
    def rank(self) -> int:
        return self.range_frame.dim


class CommutingTuple(BaseModel):
    """n square matrices of a common dimension that commute pairwise."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mats: list[np.ndarray]
    commutator_bound: float = 0.0

    @model_validator(mode='before')
    @classmethod
    def check_commuting(cls, data):
        mats = [_readonly(m) for m in data['mats']]
        if not mats:
            raise ValueError("a tuple needs at least one operator")
        d = mats[0].shape[0]
        for m in mats:
            if m.ndim != 2 or m.shape != (d, d):
                raise ValueError("operators must be square matrices of a common dimension")
            if not np.all(np.isfinite(m)):
                raise ValueError("operator entries must be finite")
        norms = [np.linalg.norm(m) for m in mats]
        bound = 0.0
        for i in range(len(mats)):
            for j in range(i + 1, len(mats)):
                comm = np.linalg.norm(mats[i] @ mats[j] - mats[j] @ mats[i])
                bound = max(bound, comm)
                if comm > TOLERANCES.commutator * norms[i] * norms[j]:
                    raise NonCommutingError(comm)
        return {'mats': mats, 'commutator_bound': bound}

    @property
    def n(self) -> int:
        return len(self.mats)

    @property
    def d(self) -> int:
        return self.mats[0].shape[0]


class Cluster(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    point: np.ndarray
    multiplicity: int = Field(gt=0)
    frame: np.ndarray  # invariant basis, not necessarily orthonormal
    space: Subspace

    @field_validator('point', 'frame', mode='before')
    @classmethod
    def validate_arrays(cls, v):
        return _readonly(v)


class JointDecomposition(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    operators: CommutingTuple
    clusters: list[Cluster]
    condition: float

    @model_validator(mode='after')
    def check_multiplicities(self):
        total = sum(c.multiplicity for c in self.clusters)
        if total != self.operators.d:
            raise ValueError(f"multiplicities sum to {total}, expected {self.operators.d}")
        for c in self.clusters:
            if c.space.dim != c.multiplicity or c.point.shape != (self.operators.n,):
                raise ValueError("cluster space or point does not match its multiplicity")
        return self

    @property
    def points(self) -> np.ndarray:
        return np.array([c.point for c in self.clusters])

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([c.multiplicity for c in self.clusters])


def _merge_atoms(points: np.ndarray, weights: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Merge atoms closer than tol, returning them in lexicographic order."""
    k, n = points.shape
    if k == 0:
        return points, weights
    coords = np.column_stack([points.real, points.imag])[:, np.ravel(np.column_stack([np.arange(n), n + np.arange(n)]))]
    order = np.lexsort(coords.T[::-1])
    points, weights, coords = points[order], weights[order], coords[order]
    pairs = cKDTree(coords).query_pairs(r=tol, output_type='ndarray')
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(k, k))
    count, labels = connected_components(graph, directed=False)
    merged_points = np.zeros((count, n), dtype=complex)
    merged_weights = np.zeros(count)
    for i in range(k):
        merged_points[labels[i]] += weights[i] * points[i]
        merged_weights[labels[i]] += weights[i]
    merged_points /= merged_weights[:, None]
    # components are labelled in order of their first (lexicographically smallest) member
    return merged_points, merged_weights


class AtomicMeasure(BaseModel):
    """Finitely supported probability measure on C^n; atoms closer than the merge tolerance are merged."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dim: int = Field(gt=0)
    points: np.ndarray
    weights: np.ndarray

    @model_validator(mode='before')
    @classmethod
    def normalize_atoms(cls, data):
        dim = data['dim']
        points = np.array(data['points'], dtype=complex).reshape(-1, dim)
        weights = np.array(data['weights'], dtype=float).reshape(-1)
        if len(points) != len(weights):
            raise ValueError("points and weights differ in length")
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise ValueError("atom weights must be positive")
        if not np.all(np.isfinite(points)):
            raise ValueError("atom points must be finite")
        if abs(weights.sum() - 1.0) > TOLERANCES.mass * max(1, len(weights)):
            raise ValueError(f"weights sum to {weights.sum()!r}, expected 1")
        points, weights = _merge_atoms(points, weights, TOLERANCES.merge)
        points.setflags(write=False)
        weights.setflags(write=False)
        return {'dim': dim, 'points': points, 'weights': weights}

    @property
    def size(self) -> int:
        return len(self.weights)


class PolynomialTerm(BaseModel):
    powers: list[int]
    coefficient: tuple[float, float] = (1.0, 0.0)  # (re, im)

    @field_validator('powers')
    @classmethod
    def validate_powers(cls, v):
        if any(p < 0 for p in v):
            raise ValueError("powers must be nonnegative")
        return v

    @property
    def value(self) -> complex:
        return complex(*self.coefficient)


MapVariant = Literal['polynomial', 'add_last', 'mul_last', 'scale_pair', 'permutation', 'duplicate']


class MapDescriptor(BaseModel):
    """A map C^arity -> C^output_dim from the family push-forwards are taken under.

    Indices in `sigma` and `index` are 0-based.
    """
    variant: MapVariant
    arity: int = Field(gt=0)
    terms: list[PolynomialTerm] = []
    alpha: tuple[float, float] = (1.0, 0.0)
    beta: tuple[float, float] = (1.0, 0.0)
    sigma: list[int] = []
    index: int = 0

    @model_validator(mode='after')
    def check_variant(self):
        if self.variant == 'polynomial':
            if any(len(t.powers) != self.arity for t in self.terms):
                raise ValueError("every polynomial term needs one power per variable")
        elif self.variant in ('add_last', 'mul_last'):
            if self.arity < 2:
                raise ValueError(f"{self.variant} needs at least two variables")
        elif self.variant == 'scale_pair':
            if self.arity != 2:
                raise ValueError("scale_pair acts on pairs")
        elif self.variant == 'permutation':
            if sorted(self.sigma) != list(range(self.arity)):
                raise ValueError("sigma must be a permutation of the coordinates")
        elif self.variant == 'duplicate':
            if not 0 <= self.index < self.arity:
                raise ValueError("duplicated index out of range")
        return self

    @property
    def output_dim(self) -> int:
        return {
            'polynomial': 1,
            'add_last': self.arity - 1,
            'mul_last': self.arity - 1,
            'scale_pair': 2,
            'permutation': self.arity,
            'duplicate': self.arity + 1,
        }[self.variant]


RegionKind = Literal['box', 'open_ball', 'closed_ball', 'full', 'empty',
                     'union', 'intersection', 'complement', 'product', 'preimage', 'conjugate']


class Region(BaseModel):
    """Borel set descriptor: an expression tree over boxes, balls, full and empty space.

    `center` holds one (re, im) pair per coordinate; `radius` is the ball radius or the
    half-width delta of a half-open box.
    """
    kind: RegionKind
    dim: int = Field(gt=0)
    center: list[tuple[float, float]] = []
    radius: float = Field(0.0, ge=0)
    children: list['Region'] = []
    mapping: MapDescriptor | None = None

    @model_validator(mode='after')
    def check_dims(self):
        if self.kind == 'box':
            if self.dim != 1 or len(self.center) != 1 or self.radius <= 0:
                raise ValueError("a box is a half-open square in C with positive half-width")
        elif self.kind in ('open_ball', 'closed_ball'):
            if len(self.center) != self.dim:
                raise ValueError("ball center dimension mismatch")
        elif self.kind in ('union', 'intersection'):
            if any(c.dim != self.dim for c in self.children):
                raise ValueError(f"{self.kind} of regions with different dimensions")
        elif self.kind in ('complement', 'conjugate'):
            if len(self.children) != 1 or self.children[0].dim != self.dim:
                raise ValueError(f"{self.kind} takes one region of the same dimension")
        elif self.kind == 'product':
            if not self.children or sum(c.dim for c in self.children) != self.dim:
                raise ValueError("product dimension must be the sum of its factors")
        elif self.kind == 'preimage':
            if len(self.children) != 1 or self.mapping is None:
                raise ValueError("preimage needs one target region and a map")
            if self.mapping.output_dim != self.children[0].dim or self.mapping.arity != self.dim:
                raise ValueError("preimage map dimensions do not match")
        return self

    @property
    def center_value(self) -> np.ndarray:
        return np.array([complex(re, im) for re, im in self.center])


Region.model_rebuild()


class BoxCover(BaseModel):
    """Disjoint half-open boxes I(z, delta) x I(w, delta) inside the preimage of `target`.

    `boxes` rows are (z_re, z_im, w_re, w_im, delta, level).
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    boxes: np.ndarray
    depth: int = Field(ge=0)
    target: Region
    mapping: Literal['add', 'multiply']
    norm_bound: float | None = None
    coverage: list[float] = []
    truncated: bool = False

    @field_validator('boxes', mode='before')
    @classmethod
    def validate_boxes(cls, v):
        boxes = np.array(v, dtype=float).reshape(-1, 6)
        boxes.setflags(write=False)
        return boxes

    @property
    def size(self) -> int:
        return len(self.boxes)


class GridSpec(BaseModel):
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int = Field(200, gt=2)
    ny: int = Field(200, gt=2)

    @model_validator(mode='after')
    def check_extent(self):
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError("empty grid extent")
        return self

    @property
    def hx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def hy(self) -> float:
        return (self.y_max - self.y_min) / self.ny

    @property
    def x_centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.nx) + 0.5) * self.hx

    @property
    def y_centers(self) -> np.ndarray:
        return self.y_min + (np.arange(self.ny) + 0.5) * self.hy


class GridDensity(BaseModel):
    """Cell masses of the grid-regularized Brown measure; `cell_mass[j, i]` sits at (x_i, y_j)."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: GridSpec
    cell_mass: np.ndarray
    epsilon: float = Field(gt=0)
    total_mass: float
    leak: float = Field(ge=0)

    def mass_within(self, center: complex, radius: float) -> float:
        xs, ys = np.meshgrid(self.grid.x_centers, self.grid.y_centers)
        inside = np.abs(xs + 1j * ys - center) <= radius
        return float(self.cell_mass[inside].sum())


class ModelSpec(BaseModel):
    kind: Literal['ginibre', 'conjugated_diagonal', 'poly_of_jordan', 'kronecker_pair', 'explicit']
    d: int = Field(4, gt=0)
    n: int = Field(1, gt=0)
    seed: int = 0
    conditioning: float = Field(10.0, ge=1.0, le=1e3)
    d2: int = Field(2, gt=0)  # second factor dimension for kronecker_pair
    degree: int = Field(2, ge=1)  # polynomial degree for poly_of_jordan
    paths: list[str] = []


class GeneratedModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    spec: ModelSpec
    mats: list[np.ndarray]
    oracle: AtomicMeasure | None = None


class Assertion(BaseModel):
    label: str
    observed: float
    tolerance: float
    passed: bool


class Report(BaseModel):
    check: str
    assertions: list[Assertion] = []
    details: dict = {}

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def expect(self, label: str, observed: float, tolerance: float) -> bool:
        observed = float(observed)
        passed = bool(observed <= tolerance)
        self.assertions.append(Assertion(label=label, observed=observed, tolerance=tolerance, passed=passed))
        return passed

    def expect_equal(self, label: str, observed, expected) -> bool:
        gap = abs(observed - expected)
        return self.expect(label, float(gap), 0.0)


class CommandResult(BaseModel):
    exit_code: int = 0
    content: dict = {}
