"""Cell-sampled functions on the unit cube and their zero extensions.

A function is stored by its values at the midpoints of the 2^(d*L) cells of
side 2^-L tiling Q = [0,1]^d and is treated as constant on each cell.  Under
that convention every L^p integral of lattice-aligned data is an exact finite
sum and lattice shifts need no interpolation, so the inequality suites in the
other modules are checked in exact cell arithmetic (floating point aside).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_DIM = 3


def _readonly(a) -> np.ndarray:
    out = np.ascontiguousarray(np.asarray(a, dtype=float))
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class GridFunction:
    """Samples at the cell midpoints of the dyadic lattice on [0,1]^d.

    ``level`` is the resolution exponent: the lattice has 2^level cells per
    axis, each of side 2^-level.  Immutable after construction.
    """

    d: int
    level: int
    samples: np.ndarray

    def __post_init__(self):
        if not 1 <= self.d <= MAX_DIM:
            raise ValueError(f"dimension must be in 1..{MAX_DIM}, got {self.d}")
        if self.level < 1:
            raise ValueError("resolution exponent must be >= 1")
        a = _readonly(self.samples)
        n = 1 << self.level
        if a.shape != (n,) * self.d:
            raise ValueError(f"expected samples of shape {(n,) * self.d}, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", a)

    @property
    def n(self) -> int:
        return 1 << self.level

    @property
    def cell_volume(self) -> float:
        return 2.0 ** (-self.d * self.level)

    def _like(self, samples) -> "GridFunction":
        return GridFunction(self.d, self.level, samples)

    def _check_same(self, other):
        if not isinstance(other, GridFunction):
            raise TypeError("expected a GridFunction")
        if (other.d, other.level) != (self.d, self.level):
            raise ValueError("grid geometry mismatch")

    def __add__(self, other):
        self._check_same(other)
        return self._like(self.samples + other.samples)

    def __sub__(self, other):
        self._check_same(other)
        return self._like(self.samples - other.samples)

    def __mul__(self, c):
        return self._like(self.samples * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self._like(-self.samples)


@dataclass(frozen=True)
class ExtendedGridFunction:
    """Zero-extension window: ``margin`` extra cells per side along each axis.

    Samples cover [-margin*2^-L, 1 + margin*2^-L]^d.  For windows produced by
    :func:`zero_extend` every cell whose midpoint lies outside the unit cube
    holds an exact zero, and the central block reproduces ``base`` bit for
    bit.
    """

    base: GridFunction
    margin: int
    samples: np.ndarray

    def __post_init__(self):
        if self.margin < 0:
            raise ValueError("margin must be >= 0")
        a = _readonly(self.samples)
        size = self.base.n + 2 * self.margin
        if a.shape != (size,) * self.base.d:
            raise ValueError(f"expected window of shape {(size,) * self.base.d}, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("samples must be finite")
        core = tuple(slice(self.margin, self.margin + self.base.n) for _ in range(self.base.d))
        if not np.array_equal(a[core], self.base.samples):
            raise ValueError("central block must reproduce the base samples exactly")
        object.__setattr__(self, "samples", a)

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def level(self) -> int:
        return self.base.level

    @property
    def size(self) -> int:
        return self.base.n + 2 * self.margin

    @property
    def cell_volume(self) -> float:
        return self.base.cell_volume

    @classmethod
    def from_window(cls, d, level, margin, samples) -> "ExtendedGridFunction":
        """Build from raw window samples; the base is the central block."""
        a = np.asarray(samples, dtype=float)
        n = 1 << level
        core = tuple(slice(margin, margin + n) for _ in range(d))
        return cls(GridFunction(d, level, a[core].copy()), margin, a)

    def _check_same(self, other):
        if not isinstance(other, ExtendedGridFunction):
            raise TypeError("expected an ExtendedGridFunction")
        if (other.d, other.level, other.margin) != (self.d, self.level, self.margin):
            raise ValueError("window geometry mismatch")

    def __add__(self, other):
        self._check_same(other)
        return ExtendedGridFunction.from_window(
            self.d, self.level, self.margin, self.samples + other.samples)

    def __sub__(self, other):
        self._check_same(other)
        return ExtendedGridFunction.from_window(
            self.d, self.level, self.margin, self.samples - other.samples)

    def __mul__(self, c):
        return ExtendedGridFunction.from_window(
            self.d, self.level, self.margin, self.samples * float(c))

    __rmul__ = __mul__


@dataclass(frozen=True)
class LatticeShift:
    """Integer lattice shift k at resolution ``level``; h = k * 2^-level."""

    k: tuple
    level: int

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))
        if not self.k:
            raise ValueError("shift needs at least one component")

    @property
    def d(self) -> int:
        return len(self.k)

    @property
    def h(self) -> tuple:
        return tuple(v * 2.0 ** (-self.level) for v in self.k)

    @property
    def length(self) -> float:
        return math.sqrt(sum(v * v for v in self.k)) * 2.0 ** (-self.level)


def zero_extend(f: GridFunction, margin: int | None = None) -> ExtendedGridFunction:
    """Extend by zero onto a margin-padded window.

    The default margin is half a unit per side (2^(L-1) cells), enough for
    every truncated kernel and shift used by the default experiment grids.
    """
    if margin is None:
        margin = 1 << (f.level - 1)
    margin = int(margin)
    if margin < 0:
        raise ValueError("margin must be >= 0")
    size = f.n + 2 * margin
    window = np.zeros((size,) * f.d)
    core = tuple(slice(margin, margin + f.n) for _ in range(f.d))
    window[core] = f.samples
    return ExtendedGridFunction(f, margin, window)


def lp_norm(f, p: float) -> float:
    """Midpoint-sum L^p norm; exact for functions constant on cells."""
    if p < 1:
        raise ValueError("p must be >= 1")
    a = np.abs(f.samples)
    if p == 1:
        total = a.sum()
    else:
        total = (a ** p).sum()
    return float((f.cell_volume * total) ** (1.0 / p))


def shifted_samples(window: np.ndarray, k) -> np.ndarray:
    """Array b with b[i] = window[i + k], reading zero outside the window."""
    out = np.zeros_like(window)
    src, dst = [], []
    for ka, n in zip(k, window.shape):
        ka = int(ka)
        if ka >= 0:
            lo, hi, dlo, dhi = ka, n, 0, n - ka
        else:
            lo, hi, dlo, dhi = 0, n + ka, -ka, n
        if lo >= hi:
            return out
        src.append(slice(lo, hi))
        dst.append(slice(dlo, dhi))
    out[tuple(dst)] = window[tuple(src)]
    return out


def difference(g: ExtendedGridFunction, shift: LatticeShift) -> ExtendedGridFunction:
    """Forward difference g(. + h) - g(.), h a lattice multiple of the cell side.

    Indices shifted past the padded window read as zero, consistent with the
    zero-extension convention.  Exact: no interpolation is ever performed.
    """
    if shift.level != g.level:
        raise ValueError("shift resolution must match the window resolution")
    if shift.d != g.d:
        raise ValueError("shift dimension must match the window dimension")
    out = shifted_samples(g.samples, shift.k) - g.samples
    return ExtendedGridFunction.from_window(g.d, g.level, g.margin, out)


# ---------------------------------------------------------------------------
# analytic test-function catalog


_TAG_KEYS = {
    "const": {"value"},
    "linear": set(),
    "indicator": {"lo", "hi"},
    "cusp": {"alpha", "center"},
    "boundary-power": {"alpha"},
    "random": {"level", "seed"},
    "tensor": {"base", "alpha", "center", "lo", "hi", "value", "level", "seed"},
}
_INT_KEYS = {"level", "seed"}


@dataclass(frozen=True)
class FunctionSpec:
    """Deterministic recipe for an analytic test function on the cube.

    Catalog: ``const value=c``; ``linear`` (sum of coordinates);
    ``indicator lo=a hi=b`` (box [a,b]^d); ``cusp alpha=a center=c``
    (product of |x_i - c|^a); ``boundary-power alpha=a`` (x_1^a);
    ``random level=k seed=s`` (seeded piecewise constant on the level-k
    dyadic cells); ``tensor base=<tag> ...`` (product of the base's
    one-dimensional profile over the axes).
    """

    tag: str
    params: tuple = ()

    def __post_init__(self):
        if self.tag not in _TAG_KEYS:
            raise ValueError(f"unknown function tag {self.tag!r}")
        items = tuple(sorted((str(k), v) for k, v in self.params))
        for key, _ in items:
            if key not in _TAG_KEYS[self.tag]:
                raise ValueError(f"key {key!r} not valid for tag {self.tag!r}")
        object.__setattr__(self, "params", items)

    def param(self, name, default=None):
        for key, value in self.params:
            if key == name:
                return value
        if default is None:
            raise KeyError(f"spec {self.tag!r} is missing parameter {name!r}")
        return default

    def describe(self) -> str:
        parts = [self.tag]
        for key, value in self.params:
            if isinstance(value, str) or isinstance(value, int):
                parts.append(f"{key}={value}")
            else:
                parts.append(f"{key}={value:g}")
        return " ".join(parts)

    @property
    def is_random(self) -> bool:
        return self.tag == "random" or (
            self.tag == "tensor" and self.param("base") == "random")

    def values(self, pts: np.ndarray) -> np.ndarray:
        """Evaluate at points of shape (..., d)."""
        pts = np.asarray(pts, dtype=float)
        d = pts.shape[-1]
        if self.tag == "const":
            return np.full(pts.shape[:-1], float(self.param("value")))
        if self.tag == "linear":
            return pts.sum(axis=-1)
        if self.tag == "indicator":
            lo = float(self.param("lo", 0.0))
            hi = float(self.param("hi", 0.5))
            inside = np.all((pts >= lo) & (pts <= hi), axis=-1)
            return inside.astype(float)
        if self.tag == "cusp":
            alpha = float(self.param("alpha"))
            if not 0.0 < alpha < 1.0:
                raise ValueError("cusp exponent must lie in (0,1)")
            center = float(self.param("center", 0.5))
            return np.prod(np.abs(pts - center) ** alpha, axis=-1)
        if self.tag == "boundary-power":
            alpha = float(self.param("alpha"))
            return np.clip(pts[..., 0], 0.0, None) ** alpha
        if self.tag == "random":
            return self._random_values(pts, d)
        if self.tag == "tensor":
            base = _base_spec(self)
            out = np.ones(pts.shape[:-1])
            for axis in range(d):
                out = out * base._profile_1d(pts[..., axis])
            return out
        raise AssertionError(self.tag)

    def _profile_1d(self, x: np.ndarray) -> np.ndarray:
        return self.values(x[..., None])

    def _random_values(self, pts, d):
        k = int(self.param("level"))
        seed = int(self.param("seed"))
        m = 1 << k
        rng = np.random.default_rng(seed)
        table = rng.standard_normal((m,) * d)
        idx = tuple(
            np.clip((pts[..., a] * m).astype(np.int64), 0, m - 1) for a in range(d))
        return table[idx]


def _base_spec(tensor_spec: FunctionSpec) -> FunctionSpec:
    base = tensor_spec.param("base")
    if base == "tensor":
        raise ValueError("tensor specs cannot nest")
    kept = tuple((k, v) for k, v in tensor_spec.params
                 if k != "base" and k in _TAG_KEYS[base])
    return FunctionSpec(base, kept)


def const(value: float) -> FunctionSpec:
    return FunctionSpec("const", (("value", float(value)),))


def linear() -> FunctionSpec:
    return FunctionSpec("linear")


def indicator(lo: float = 0.0, hi: float = 0.5) -> FunctionSpec:
    if not (0.0 <= lo < hi <= 1.0):
        raise ValueError("indicator box must satisfy 0 <= lo < hi <= 1")
    return FunctionSpec("indicator", (("lo", float(lo)), ("hi", float(hi))))


def cusp(alpha: float, center: float = 0.5) -> FunctionSpec:
    return FunctionSpec("cusp", (("alpha", float(alpha)), ("center", float(center))))


def boundary_power(alpha: float) -> FunctionSpec:
    return FunctionSpec("boundary-power", (("alpha", float(alpha)),))


def random_dyadic(level: int, seed: int) -> FunctionSpec:
    if level < 0:
        raise ValueError("level must be >= 0")
    return FunctionSpec("random", (("level", int(level)), ("seed", int(seed))))


def tensor_product(base: FunctionSpec) -> FunctionSpec:
    return FunctionSpec("tensor", (("base", base.tag),) + base.params)


def parse_spec(text: str) -> FunctionSpec:
    """Parse the plain-text grammar ``tag key=value key=value ...``."""
    tokens = text.split()
    if not tokens:
        raise ValueError("empty function spec")
    tag = tokens[0]
    if tag not in _TAG_KEYS:
        raise ValueError(f"unknown function tag {tag!r}")
    params = []
    for token in tokens[1:]:
        if "=" not in token:
            raise ValueError(f"malformed parameter {token!r}; expected key=value")
        key, raw = token.split("=", 1)
        if key == "base":
            value = raw
        elif key in _INT_KEYS:
            value = int(raw)
        else:
            value = float(raw)
        params.append((key, value))
    spec = FunctionSpec(tag, tuple(params))
    if spec.is_random:
        spec.param("seed")  # random specs must carry an explicit seed
    return spec


def sample(spec: FunctionSpec, d: int, level: int) -> GridFunction:
    """Evaluate a spec at the cell midpoints of the level-`level` lattice."""
    if not 1 <= d <= MAX_DIM:
        raise ValueError(f"dimension must be in 1..{MAX_DIM}")
    if level < 1:
        raise ValueError("resolution exponent must be >= 1")
    n = 1 << level
    mids = (np.arange(n) + 0.5) / n
    if d == 1:
        pts = mids[:, None]
    else:
        grids = np.meshgrid(*([mids] * d), indexing="ij")
        pts = np.stack(grids, axis=-1)
    return GridFunction(d, level, spec.values(pts))


@dataclass(frozen=True)
class CorpusMember:
    name: str
    spec: FunctionSpec
    d: int


_CORPUS = (
    CorpusMember("const1_d1", const(1.0), 1),
    CorpusMember("linear_d1", linear(), 1),
    CorpusMember("halfbox_d1", indicator(0.0, 0.5), 1),
    CorpusMember("cusp03_d1", cusp(0.3), 1),
    CorpusMember("cusp05_d1", cusp(0.5), 1),
    CorpusMember("cusp07_d1", cusp(0.7), 1),
    CorpusMember("edge08_d1", boundary_power(0.8), 1),
    CorpusMember("rand3_d1", random_dyadic(3, 11), 1),
    CorpusMember("linear_d2", linear(), 2),
    CorpusMember("rand2_d2", random_dyadic(2, 7), 2),
)


def corpus(d: int | None = None) -> tuple:
    """The fixed ten-member test corpus (eight 1-d members, two 2-d)."""
    if d is None:
        return _CORPUS
    return tuple(m for m in _CORPUS if m.d == d)
