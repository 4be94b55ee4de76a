"""Piecewise constants on dyadic cubes: averaging, error, and shift bounds.

The level-N average projection replaces a grid function by its mean on each
of the 2^(dN) dyadic cubes of side 2^-N.  Two exact inequality checkers live
here:

* ``average_error_report``: the averaging error in L^p against the interior
  modulus at the cube scale, with the explicit constant
  (v_d * d^((d+p)/2))^(1/p), v_d the unit-ball volume.
* ``shift_bound_check``: for a piecewise constant extended by zero, the p-th
  power of a shifted difference against 2^p min{|h| 2^k sqrt(d), 1} times the
  p-th power norm (uniform grids), or the cube-by-cube form
  2^p sum_Q min{sqrt(d)|h|/l(Q), 1} |Q| |a_Q|^p for arbitrary partitions.

Both sides are computed in exact cell arithmetic, so failures beyond a 1e-12
floating-point allowance are genuine.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import (GridFunction, LatticeShift, difference, lp_norm,
                   zero_extend)
from .moduli import interior_modulus

SUITE_CSV_HEADER = "seed,d,k,p,h,lhs,rhs,pass"


def unit_ball_volume(d: int) -> float:
    # closed form pi^(d/2)/Gamma(d/2+1), written out for d <= 3
    return {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}[d]


@dataclass(frozen=True)
class DyadicCube:
    """Dyadic cube of side 2^-level with lattice corner ``origin``."""

    level: int
    origin: tuple

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(int(v) for v in self.origin))
        if self.level < 0:
            raise ValueError("cube level must be >= 0")
        m = 1 << self.level
        if any(not 0 <= v < m for v in self.origin):
            raise ValueError("cube origin outside the unit cube")

    @property
    def d(self) -> int:
        return len(self.origin)

    @property
    def side(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def volume(self) -> float:
        return self.side ** self.d

    def children(self) -> tuple:
        from itertools import product

        return tuple(
            DyadicCube(self.level + 1,
                       tuple(2 * o + b for o, b in zip(self.origin, bits)))
            for bits in product((0, 1), repeat=self.d))

    def parent(self) -> "DyadicCube":
        if self.level == 0:
            raise ValueError("the root cube has no parent")
        return DyadicCube(self.level - 1, tuple(o // 2 for o in self.origin))

    def cell_slices(self, grid_level: int) -> tuple:
        """Index slices of the cells covered at resolution ``grid_level``."""
        if grid_level < self.level:
            raise ValueError("grid resolution is coarser than the cube")
        b = 1 << (grid_level - self.level)
        return tuple(slice(o * b, (o + 1) * b) for o in self.origin)


def _check_tiling(d: int, cubes) -> int:
    """Verify the cubes tile the unit cube exactly; returns the deepest level."""
    if not cubes:
        raise ValueError("empty partition")
    deepest = max(c.level for c in cubes)
    m = 1 << deepest
    counts = np.zeros((m,) * d, dtype=np.int32)
    for c in cubes:
        if c.d != d:
            raise ValueError("cube dimension mismatch")
        counts[c.cell_slices(deepest)] += 1
    if not np.all(counts == 1):
        raise ValueError("cubes do not tile the unit cube exactly")
    return deepest


@dataclass(frozen=True)
class PiecewiseConstant:
    """One real value per cube of a dyadic partition of the unit cube."""

    d: int
    cubes: tuple
    values: np.ndarray
    uniform_level: int | None = None

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=float)).ravel()
        vals.setflags(write=False)
        if len(vals) != len(self.cubes):
            raise ValueError("one value per cube required")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        _check_tiling(self.d, self.cubes)
        if self.uniform_level is not None:
            k = self.uniform_level
            if len(self.cubes) != 1 << (self.d * k) or any(
                    c.level != k for c in self.cubes):
                raise ValueError("partition is not the uniform level-k grid")
        object.__setattr__(self, "cubes", tuple(self.cubes))
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_uniform(cls, d: int, level: int, values) -> "PiecewiseConstant":
        vals = np.asarray(values, dtype=float)
        m = 1 << level
        if vals.shape != (m,) * d:
            raise ValueError(f"expected values of shape {(m,) * d}")
        cubes = tuple(DyadicCube(level, idx) for idx in np.ndindex(*vals.shape))
        return cls(d, cubes, vals.ravel(), uniform_level=level)

    @property
    def max_level(self) -> int:
        return max(c.level for c in self.cubes)

    def render(self, grid_level: int) -> GridFunction:
        n = 1 << grid_level
        out = np.empty((n,) * self.d)
        for cube, value in zip(self.cubes, self.values):
            out[cube.cell_slices(grid_level)] = value
        return GridFunction(self.d, grid_level, out)

    def norm_power(self, p: float) -> float:
        """sum over cubes of |Q| |a_Q|^p (the p-th power of the L^p norm)."""
        vols = np.array([c.volume for c in self.cubes])
        return float((vols * np.abs(self.values) ** p).sum())


def block_means(samples: np.ndarray, d: int, from_level: int, to_level: int) -> np.ndarray:
    """Means over dyadic blocks via successive pairwise averaging.

    Pairwise halving keeps the projection property bit-exact: averaging an
    already block-constant array returns it unchanged.
    """
    if to_level > from_level:
        raise ValueError("target level must not exceed the source level")
    a = samples
    for _ in range(from_level - to_level):
        for axis in range(d):
            even = [slice(None)] * d
            odd = [slice(None)] * d
            even[axis] = slice(0, None, 2)
            odd[axis] = slice(1, None, 2)
            a = 0.5 * (a[tuple(even)] + a[tuple(odd)])
    return a


def dyadic_average(f: GridFunction, level: int) -> PiecewiseConstant:
    """Project onto constants over the level-`level` dyadic cubes (exact means)."""
    if not 0 <= level <= f.level:
        raise ValueError("average level must lie in 0..L")
    means = block_means(f.samples, f.d, f.level, level)
    return PiecewiseConstant.from_uniform(f.d, level, means)


def render_average(f: GridFunction, level: int) -> GridFunction:
    """The level-`level` average projection, re-rendered on f's own lattice."""
    means = block_means(f.samples, f.d, f.level, level)
    b = 1 << (f.level - level)
    out = means
    for axis in range(f.d):
        out = np.repeat(out, b, axis=axis)
    return GridFunction(f.d, f.level, out)


def average_error_constant(d: int, p: float) -> float:
    return (unit_ball_volume(d) * d ** ((d + p) / 2.0)) ** (1.0 / p)


def average_error_report(f: GridFunction, level: int, p: float,
                         method: str = "auto") -> tuple:
    """(error, bound, constant) for the level-`level` average projection.

    error is ||f - f_avg||_p as an exact cell sum; bound is the constant
    times the interior modulus at scale 2^-level.
    """
    if level > f.level - 2:
        raise ValueError("need level <= L-2 so the modulus scale is resolvable")
    error = lp_norm(f - render_average(f, level), p)
    constant = average_error_constant(f.d, p)
    bound = constant * interior_modulus(f, p, 2.0 ** (-level), method=method)
    return error, bound, constant


def shift_bound_check(pc: PiecewiseConstant, shift: LatticeShift, p: float) -> tuple:
    """Exact two sides of the shifted-difference bound for zero-extended
    piecewise constants.

    lhs: p-th power of the L^p norm of psi(.+h) - psi(.) over the padded
    window.  rhs: 2^p min{|h| 2^k sqrt(d), 1} ||psi||_p^p when the partition
    is the uniform level-k grid, otherwise the cube-by-cube form.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if shift.level < pc.max_level:
        raise ValueError("shift resolution must refine the partition")
    if shift.d != pc.d:
        raise ValueError("shift dimension mismatch")
    rendered = pc.render(shift.level)
    margin = max(1, max(abs(v) for v in shift.k))
    ext = zero_extend(rendered, margin)
    delta = difference(ext, shift)
    lhs = float((np.abs(delta.samples) ** p).sum() * ext.cell_volume)
    root_d = math.sqrt(pc.d)
    if pc.uniform_level is not None:
        rhs = (2.0 ** p) * min(shift.length * (1 << pc.uniform_level) * root_d, 1.0) \
            * pc.norm_power(p)
    else:
        sides = np.array([c.side for c in pc.cubes])
        vols = np.array([c.volume for c in pc.cubes])
        weights = np.minimum(root_d * shift.length / sides, 1.0)
        rhs = (2.0 ** p) * float((weights * vols * np.abs(pc.values) ** p).sum())
    return lhs, rhs


def random_partition(rng: np.random.Generator, d: int, max_level: int,
                     split_prob: float = 0.55) -> tuple:
    """Random dyadic partition of the unit cube (tree of seeded subdivisions)."""
    cubes = []
    stack = [DyadicCube(0, (0,) * d)]
    while stack:
        cube = stack.pop()
        if cube.level < max_level and rng.random() < split_prob:
            stack.extend(cube.children())
        else:
            cubes.append(cube)
    cubes.sort(key=lambda c: (c.level, c.origin))
    return tuple(cubes)


def random_shift(rng: np.random.Generator, d: int, level: int) -> LatticeShift:
    """Nonzero lattice shift with |h| <= 1 at the given resolution."""
    n = 1 << level
    while True:
        k = rng.integers(-n, n + 1, size=d)
        if not k.any():
            continue
        if float((k * k).sum()) <= n * n:
            return LatticeShift(tuple(int(v) for v in k), level)


def equality_case() -> dict:
    """The hand-computed equality instance: +-1 on the halves, p=1, h=1/4."""
    pc = PiecewiseConstant.from_uniform(1, 1, np.array([1.0, -1.0]))
    shift = LatticeShift((1,), 2)  # h = 1/4 at resolution 2^-2
    lhs, rhs = shift_bound_check(pc, shift, 1.0)
    return {"seed": -1, "d": 1, "k": 1, "p": 1.0, "h": shift.length,
            "lhs": lhs, "rhs": rhs, "pass": lhs <= rhs + 1e-12}


def shift_bound_suite(n_functions: int = 100, shifts_each: int = 10,
                      p_values=(1.0, 2.0, 3.0), seed: int = 7,
                      max_level: int = 5) -> list:
    """Seeded randomized suite over uniform and arbitrary partitions.

    Returns one row dict per (function, shift, p) case plus the equality
    instance; rows carry both sides so slack can be studied downstream.
    """
    master = np.random.default_rng(seed)
    case_seeds = master.integers(0, 2 ** 31 - 1, size=n_functions)
    rows = []
    for i, case_seed in enumerate(case_seeds):
        rng = np.random.default_rng(int(case_seed))
        d = 1 if i % 2 == 0 else 2
        uniform = (i // 2) % 2 == 0
        k = int(rng.integers(1, max_level + 1))
        if uniform:
            m = 1 << k
            pc = PiecewiseConstant.from_uniform(d, k, rng.standard_normal((m,) * d))
        else:
            cubes = random_partition(rng, d, k)
            pc = PiecewiseConstant(d, cubes, rng.standard_normal(len(cubes)))
        level = pc.max_level + 2
        for _ in range(shifts_each):
            shift = random_shift(rng, d, level)
            for p in p_values:
                lhs, rhs = shift_bound_check(pc, shift, p)
                rows.append({
                    "seed": int(case_seed), "d": d,
                    "k": k if uniform else pc.max_level, "p": float(p),
                    "h": shift.length, "lhs": lhs, "rhs": rhs,
                    "pass": lhs <= rhs + 1e-12,
                })
    rows.append(equality_case())
    return rows


def suite_to_csv(rows) -> str:
    lines = [SUITE_CSV_HEADER]
    for r in rows:
        lines.append(",".join([
            str(r["seed"]), str(r["d"]), str(r["k"]), repr(r["p"]),
            repr(r["h"]), repr(r["lhs"]), repr(r["rhs"]),
            "true" if r["pass"] else "false",
        ]))
    return "\n".join(lines) + "\n"
