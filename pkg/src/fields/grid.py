from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.utils.errors import DomainError

MIN_POINTS_PER_AXIS = 16


class Frame(Enum):
    """Coordinate frame a field is sampled in."""
    ORIGINAL_X = "original_x"
    CONE_Y = "cone_y"
    CYLINDER_Z = "cylinder_z"

    @property
    def code(self) -> int:
        return list(Frame).index(self)

    @classmethod
    def from_code(cls, code: int) -> "Frame":
        return list(Frame)[int(code)]


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on [-h, h)^n with points_per_axis nodes per axis; the origin is a node."""
    n: int
    points_per_axis: int
    half_extent: float

    def __post_init__(self):
        N = self.points_per_axis
        if N < MIN_POINTS_PER_AXIS or N & (N - 1):
            raise DomainError(f"points_per_axis must be a power of two >= 16, got {N}")
        if self.n < 1:
            raise DomainError(f"grid dimension must be positive, got {self.n}")
        if not self.half_extent > 0:
            raise DomainError(f"half_extent must be positive, got {self.half_extent}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / self.points_per_axis

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.points_per_axis,) * self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.n

    @property
    def origin_index(self) -> Tuple[int, ...]:
        return (self.points_per_axis // 2,) * self.n

    def axis(self) -> np.ndarray:
        """Node coordinates along one axis."""
        return -self.half_extent + self.spacing * np.arange(self.points_per_axis)

    def mesh(self) -> List[np.ndarray]:
        a = self.axis()
        return np.meshgrid(*([a] * self.n), indexing="ij")

    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c * c for c in self.mesh()))

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.n, self.points_per_axis * factor, self.half_extent)


def _as_samples(samples, expected: Tuple[int, ...]) -> np.ndarray:
    arr = np.array(samples, dtype=float)
    if arr.shape != expected:
        raise DomainError(f"sample shape {arr.shape} does not match grid shape {expected}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("field samples must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ScalarField:
    """Sampled scalar field with grid, frame and time tag (t or s)."""
    spec: GridSpec
    samples: np.ndarray
    frame: Frame = Frame.ORIGINAL_X
    time_tag: float = 0.0
    meta: Dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "samples", _as_samples(self.samples, self.spec.shape))

    def with_samples(self, samples: np.ndarray, **meta) -> "ScalarField":
        return ScalarField(self.spec, samples, self.frame, self.time_tag, {**self.meta, **meta})

    def at_origin(self) -> float:
        return float(self.samples[self.spec.origin_index])


@dataclass(frozen=True)
class VectorField:
    """Sampled vector field; samples have shape (components, *grid shape)."""
    spec: GridSpec
    samples: np.ndarray
    frame: Frame = Frame.ORIGINAL_X
    time_tag: float = 0.0
    meta: Dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != self.spec.n + 1:
            raise DomainError(f"vector samples need {self.spec.n + 1} axes, got {arr.ndim}")
        object.__setattr__(self, "samples",
                           _as_samples(arr, (arr.shape[0],) + self.spec.shape))

    @property
    def components(self) -> int:
        return self.samples.shape[0]

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.spec, self.samples[i], self.frame, self.time_tag, dict(self.meta))

    @classmethod
    def from_components(cls, parts: Sequence[ScalarField], **meta) -> "VectorField":
        if not parts:
            raise DomainError("a vector field needs at least one component")
        first = parts[0]
        return cls(first.spec, np.stack([p.samples for p in parts]), first.frame,
                   first.time_tag, {**first.meta, **meta})

    def with_samples(self, samples: np.ndarray, **meta) -> "VectorField":
        return VectorField(self.spec, samples, self.frame, self.time_tag, {**self.meta, **meta})

    def at_origin(self) -> np.ndarray:
        return self.samples[(slice(None),) + self.spec.origin_index].copy()


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered slices of a vector field; samples have shape (slices, components, *grid)."""
    spec: GridSpec
    times: np.ndarray
    samples: np.ndarray
    frame: Frame = Frame.CONE_Y
    meta: Dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != self.spec.n + 2 or arr.shape[0] != times.size:
            raise DomainError(f"trajectory samples of shape {arr.shape} do not match "
                              f"{times.size} slices on a {self.spec.n}-d grid")
        if arr.shape[2:] != self.spec.shape:
            raise DomainError(f"trajectory grid shape {arr.shape[2:]} != {self.spec.shape}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.times.size

    @property
    def components(self) -> int:
        return self.samples.shape[1]

    def slice(self, index: int) -> VectorField:
        return VectorField(self.spec, self.samples[index], self.frame, float(self.times[index]),
                           dict(self.meta))

    def center_series(self, component: int = 0) -> np.ndarray:
        """Values at the grid origin for every slice."""
        return self.samples[(slice(None), component) + self.spec.origin_index].copy()

    def with_samples(self, samples: np.ndarray, **meta) -> "Trajectory":
        return Trajectory(self.spec, self.times, samples, self.frame, {**self.meta, **meta})
