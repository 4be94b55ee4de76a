"""Approximate identities by convolution and their error operators.

Three nonnegative unit-mass families, each with a fixed scale map:

* ``gauss``         density with standard deviation t (separable)
* ``poisson``       the d-dimensional Poisson kernel with scale t (radial)
* ``fejer_tensor``  tensor product of line Fejer kernels with bandwidth 1/t

Kernels are truncated to a radius chosen so the omitted mass stays within the
requested tail budget, then renormalized to exact unit discrete mass.  With a
nonnegative unit-mass kernel the smoothing is an L^p contraction, so that
property is exact here rather than approximate; the price is that the
truncated kernel lives on a finite window, with the budget that fixed its
radius carried in :class:`KernelSpec`.

The error operator is smoothing minus identity applied to zero-extensions,
measured in L^p over the padded window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal
from scipy.special import erfcinv

from .besov import fit_points
from .grid import ExtendedGridFunction, GridFunction, lp_norm, zero_extend
from .moduli import hybrid_modulus, interior_ladder, whole_modulus

FAMILIES = ("gauss", "poisson", "fejer_tensor")

_MAX_RADIUS_CELLS = 4 * 10 ** 6
_FFT_KERNEL_CUTOFF = 256  # 1-d kernels longer than this convolve via FFT


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family, scale, and truncation tail budget."""

    family: str
    t: float
    truncation_tail: float = 1e-6

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.t <= 0:
            raise ValueError("kernel scale must be positive")
        if not 0 < self.truncation_tail < 0.5:
            raise ValueError("truncation tail budget must lie in (0, 0.5)")


def _poisson3_radius_factor(tail: float) -> float:
    # solve (2/pi)(atan(x) - x/(1+x^2)) = 1 - tail for x by bisection
    lo, hi = 1.0, 1e12
    target = 1.0 - tail
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        mass = (2.0 / math.pi) * (math.atan(mid) - mid / (1.0 + mid * mid))
        if mass < target:
            lo = mid
        else:
            hi = mid
    return hi


def truncation_radius(spec: KernelSpec, d: int) -> float:
    """Physical radius keeping the omitted mass within the tail budget."""
    t, tail = spec.t, spec.truncation_tail
    if spec.family == "gauss":
        # separable: split the tail budget across the axes
        return t * math.sqrt(2.0) * float(erfcinv(tail / d))
    if spec.family == "fejer_tensor":
        # per-axis tail of the line Fejer kernel is at most 4 t / (pi R)
        per_axis = tail / d
        return 4.0 * t / (math.pi * per_axis)
    if spec.family == "poisson":
        if d == 1:
            return t / math.tan(math.pi * tail / 2.0)
        if d == 2:
            return t * math.sqrt(1.0 / (tail * tail) - 1.0)
        return t * _poisson3_radius_factor(tail)
    raise AssertionError(spec.family)


def kernel_radius_cells(spec: KernelSpec, d: int, level: int) -> int:
    r = int(math.ceil(truncation_radius(spec, d) * (1 << level)))
    r = max(r, 1)
    if r > _MAX_RADIUS_CELLS:
        raise ValueError(
            f"tail budget {spec.truncation_tail:g} needs a {r}-cell radius; "
            "relax the budget or coarsen the lattice")
    return r


def _profile_1d(spec: KernelSpec, xs: np.ndarray) -> np.ndarray:
    t = spec.t
    if spec.family == "gauss":
        return np.exp(-0.5 * (xs / t) ** 2)
    if spec.family == "fejer_tensor":
        lam = 1.0 / t
        return lam / (2.0 * math.pi) * np.sinc(lam * xs / (2.0 * math.pi)) ** 2
    raise AssertionError(spec.family)


def kernel_weights(spec: KernelSpec, d: int, level: int):
    """("separable", per-axis weights) or ("full", d-dim weights); mass 1."""
    r = kernel_radius_cells(spec, d, level)
    h = 2.0 ** (-level)
    offsets = np.arange(-r, r + 1) * h
    if spec.family in ("gauss", "fejer_tensor"):
        w = _profile_1d(spec, offsets)
        w = w / w.sum()
        return "separable", [w] * d
    # poisson: radial, non-separable beyond one dimension
    t = spec.t
    if d == 1:
        w = t / (t * t + offsets ** 2)
        return "separable", [w / w.sum()]
    grids = np.meshgrid(*([offsets] * d), indexing="ij")
    rsq = sum(g * g for g in grids)
    w = t / (t * t + rsq) ** ((d + 1) / 2.0)
    return "full", w / w.sum()


def _convolve_axis(a: np.ndarray, w: np.ndarray, axis: int) -> np.ndarray:
    if len(w) <= 2 * _FFT_KERNEL_CUTOFF + 1:
        return ndimage.convolve1d(a, w, axis=axis, mode="constant", cval=0.0)
    moved = np.moveaxis(a, axis, -1)
    flat = moved.reshape(-1, moved.shape[-1])
    out = signal.fftconvolve(flat, w[None, :], mode="same", axes=1)
    return np.moveaxis(out.reshape(moved.shape), -1, axis)


def apply_kernel(spec: KernelSpec, g: ExtendedGridFunction) -> ExtendedGridFunction:
    """Convolve the window with the truncated, renormalized kernel.

    Linear, and an exact L^p contraction for every p >= 1.  Requires the
    margin to cover the truncation radius so the smoothed support stays
    inside the window.
    """
    radius = kernel_radius_cells(spec, g.d, g.level)
    if radius > g.margin:
        raise ValueError(
            f"kernel radius {radius} cells exceeds margin {g.margin}; re-extend")
    mode, weights = kernel_weights(spec, g.d, g.level)
    if mode == "separable":
        out = g.samples
        for axis, w in enumerate(weights):
            out = _convolve_axis(out, w, axis)
    else:
        out = signal.fftconvolve(g.samples, weights, mode="same")
    return ExtendedGridFunction.from_window(g.d, g.level, g.margin, out)


def apply_kernel_direct(spec: KernelSpec, g: ExtendedGridFunction) -> ExtendedGridFunction:
    """Direct-sum convolution; regression reference for the fast paths."""
    radius = kernel_radius_cells(spec, g.d, g.level)
    if radius > g.margin:
        raise ValueError("kernel radius exceeds margin")
    mode, weights = kernel_weights(spec, g.d, g.level)
    if mode == "separable":
        full = weights[0]
        for w in weights[1:]:
            full = np.multiply.outer(full, w)
    else:
        full = weights
    out = np.zeros_like(g.samples)
    r = (full.shape[0] - 1) // 2
    from .grid import shifted_samples

    for idx in np.ndindex(*full.shape):
        k = tuple(int(i) - r for i in idx)
        out += full[idx] * shifted_samples(g.samples, k)
    return ExtendedGridFunction.from_window(g.d, g.level, g.margin, out)


def error_norm(spec: KernelSpec, f: GridFunction, p: float,
               margin: int | None = None) -> float:
    """L^p size of (smoothing - identity) applied to the zero-extension."""
    if margin is None:
        margin = kernel_radius_cells(spec, f.d, f.level)
    g = zero_extend(f, margin)
    return lp_norm(apply_kernel(spec, g) - g, p)


# ---------------------------------------------------------------------------
# hypothesis-style ratio tables


@dataclass(frozen=True)
class RatioRow:
    t: float
    error: float
    modulus: float
    ratio: float
    flag: str


@dataclass(frozen=True)
class RatioTable:
    family: str
    p: float
    rows: tuple

    def ratios(self):
        return [r.ratio for r in self.rows if not r.flag]

    @property
    def band(self) -> float:
        vals = self.ratios()
        if not vals or min(vals) <= 0:
            return math.inf
        return max(vals) / min(vals)


def error_modulus_ratio(family: str, f: GridFunction, p: float, t_grid,
                        truncation_tail: float = 1e-6,
                        method: str = "auto") -> RatioTable:
    """Per-scale ratio of the smoothing error to the extension modulus.

    A flat, bounded ratio is the empirical signature that the two quantities
    are equivalent for this kernel family.  Rows where the modulus vanishes
    (globally constant window) are flagged undefined rather than infinite.
    """
    if p <= 1:
        raise ValueError("the equivalence band applies to p > 1")
    rows = []
    for t in sorted(t_grid):
        spec = KernelSpec(family, t, truncation_tail)
        radius = kernel_radius_cells(spec, f.d, f.level)
        shift_cap = int(math.floor(t * f.n + 1e-9))
        margin = max(radius, shift_cap, 1)
        g = zero_extend(f, margin)
        err = lp_norm(apply_kernel(spec, g) - g, p)
        om = whole_modulus(g, p, t, method=method)
        if om <= 0:
            rows.append(RatioRow(t, err, om, math.nan, "undefined"))
        else:
            rows.append(RatioRow(t, err, om, err / om, ""))
    return RatioTable(family, p, tuple(rows))


@dataclass(frozen=True)
class LogRatioRow:
    t: float
    error: float
    modulus: float
    log_term: float
    ratio: float
    flag: str


def l1_log_ratio(family: str, f: GridFunction, t_grid,
                 truncation_tail: float = 1e-3, method: str = "auto") -> tuple:
    """L^1 smoothing error against modulus times log(norm/modulus).

    Rows where the log argument is not above one are flagged; the remaining
    ratios should stay within a fixed band if the log-weighted comparison
    holds for this family.
    """
    norm1 = lp_norm(f, 1.0)
    rows = []
    for t in sorted(t_grid):
        spec = KernelSpec(family, t, truncation_tail)
        radius = kernel_radius_cells(spec, f.d, f.level)
        shift_cap = int(math.floor(t * f.n + 1e-9))
        margin = max(radius, shift_cap, 1)
        g = zero_extend(f, margin)
        err = lp_norm(apply_kernel(spec, g) - g, 1.0)
        om = whole_modulus(g, 1.0, t, method=method)
        if om <= 0 or om >= norm1:
            rows.append(LogRatioRow(t, err, om, math.nan, math.nan, "flagged"))
            continue
        log_term = om * math.log(norm1 / om)
        rows.append(LogRatioRow(t, err, om, log_term, err / log_term, ""))
    return tuple(rows)


@dataclass(frozen=True)
class ExtensionBoundReport:
    t_values: tuple
    error_ratio: tuple      # smoothing error over the hybrid modulus
    modulus_ratio: tuple    # extension modulus over the hybrid modulus
    error_slope: float | None
    modulus_slope: float | None
    max_error_ratio: float
    max_modulus_ratio: float
    flags: tuple
    passed: bool


def extension_bound_check(family: str, f: GridFunction, p: float, t_grid,
                          truncation_tail: float = 1e-6, method: str = "auto",
                          slope_floor: float = -0.05) -> ExtensionBoundReport:
    """Boundedness of error/hybrid and extension-modulus/hybrid as t shrinks.

    Both ratios should stay bounded, so their fitted log-log slopes must not
    be meaningfully negative.  Scales where the hybrid modulus vanishes (the
    zero function) are flagged and excluded from the fits.
    """
    ts = tuple(sorted(t_grid))
    ladder = interior_ladder(f, p, method=method)
    norm = lp_norm(f, p)
    r_err, r_mod, flags = [], [], []
    for t in ts:
        spec = KernelSpec(family, t, truncation_tail)
        radius = kernel_radius_cells(spec, f.d, f.level)
        shift_cap = int(math.floor(t * f.n + 1e-9))
        margin = max(radius, shift_cap, 1)
        g = zero_extend(f, margin)
        err = lp_norm(apply_kernel(spec, g) - g, p)
        om = whole_modulus(g, p, t, method=method)
        hyb, _ = hybrid_modulus(f, p, t, ladder=ladder, norm=norm)
        if hyb <= 0:
            r_err.append(math.nan)
            r_mod.append(math.nan)
            flags.append("undefined")
        else:
            r_err.append(err / hyb)
            r_mod.append(om / hyb)
            flags.append("")
    clean = [i for i, fl in enumerate(flags) if not fl]
    err_slope = mod_slope = None
    if len(clean) >= 4:
        tt = [ts[i] for i in clean]
        if all(r_err[i] > 0 for i in clean):
            err_slope = fit_points(tt, [r_err[i] for i in clean]).slope
        if all(r_mod[i] > 0 for i in clean):
            mod_slope = fit_points(tt, [r_mod[i] for i in clean]).slope
    max_err = max((r_err[i] for i in clean), default=math.nan)
    max_mod = max((r_mod[i] for i in clean), default=math.nan)
    passed = (err_slope is None or err_slope >= slope_floor) and \
             (mod_slope is None or mod_slope >= slope_floor)
    return ExtensionBoundReport(ts, tuple(r_err), tuple(r_mod), err_slope,
                                mod_slope, max_err, max_mod, tuple(flags), passed)


def error_curve(family: str, f: GridFunction, p: float, t_grid,
                truncation_tail: float = 1e-6, name: str = ""):
    """Error-norm curve in the standard modulus-curve container."""
    from .moduli import ModulusCurve

    ts = tuple(sorted(t_grid))
    points = []
    for t in ts:
        spec = KernelSpec(family, t, truncation_tail)
        points.append((t, error_norm(spec, f, p)))
    meta = {"d": f.d, "L": f.level, "function": name, "kernel": family,
            "truncation_tail": truncation_tail}
    return ModulusCurve("error_norm", p, tuple(points), meta)
