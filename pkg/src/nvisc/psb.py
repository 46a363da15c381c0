"""Phonon-sideband model: one-phonon spectra and their Poisson-weighted
self-convolutions.

The emission sideband is represented by a vibrational overlap density
F(omega) (meV^-1).  Internally F is carried in the unit-emission
convention: the one-phonon density f integrates to 1, the mean phonon
count S0 sets the Poisson weights, and the full sideband

    F = e^{-S} sum_{i>=1} (S^i / i!) F_i,     F_i = F_{i-1} (x) F_1

integrates to 1 - e^{-S} (the zero-phonon term is excluded).  Measured
sideband tables may come in a different amplitude convention; their
overall factor is preserved separately as ``PsbModel.scale`` so the
dimensionless machinery stays normalized while rate formulas see the
calibrated amplitude.

At finite temperature the one-phonon function gains an absorption branch,

    F_1(omega, T) = [n(omega) + 1] f(omega)      omega >= 0
                    n(|omega|) f(|omega|)        omega < 0

and the phonon count grows as S(T) = S0 int (2n+1) f domega.
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from .gridfn import GridFunction, convolve, integrate, read_csv
from .units import thermal_energy

__all__ = [
    "thermal_occupation",
    "poisson_i_max",
    "thermal_one_phonon",
    "huang_rhys",
    "forward_sideband",
    "extract_one_phonon",
    "thermal_overlap",
    "PsbModel",
    "DeconvolutionError",
]

# one-phonon support cap (meV): roughly the top of the phonon spectrum,
# regularizes the deconvolution
DEFAULT_SUPPORT_CAP = 200.0

# exponent guard: exp(x) for x > ~700 overflows a double
_EXP_MAX = 700.0


class DeconvolutionError(RuntimeError):
    """Fixed-point deconvolution failed to converge; carries the residual."""

    def __init__(self, message: str, residual: float, n_iter: int):
        super().__init__(message)
        self.residual = residual
        self.n_iter = n_iter


def thermal_occupation(omega_mev, temperature_k: float):
    """Bose occupation n(omega, T) = 1/(e^{omega/kT} - 1).

    Scalar or vectorized in omega.  T = 0 gives 0 for any omega > 0;
    omega <= 0 with T > 0 is rejected (divergent or unphysical).
    """
    kt = thermal_energy(temperature_k)
    x = np.asarray(omega_mev, dtype=float)
    scalar = np.ndim(omega_mev) == 0
    if kt == 0.0:
        if np.any(x <= 0.0):
            raise ValueError("thermal_occupation needs omega > 0")
        out = np.zeros_like(x)
        return float(out) if scalar else out
    if np.any(x <= 0.0):
        raise ValueError("thermal_occupation diverges at omega <= 0 for T > 0")
    with np.errstate(over="ignore"):
        # overflow to inf is the intended saturation; occupation -> 0
        r = x / kt
    out = np.zeros_like(r)
    small = r < _EXP_MAX
    out[small] = 1.0 / np.expm1(r[small])
    return float(out) if scalar else out


def poisson_i_max(s: float) -> int:
    """Truncation index for the Poisson-weighted convolution series.

    max(20, ceil(s + 10 sqrt(s))) keeps the neglected tail weight below
    1e-9 for any s.
    """
    if s < 0:
        raise ValueError("mean phonon count must be >= 0")
    return max(20, int(math.ceil(s + 10.0 * math.sqrt(s))))


def thermal_one_phonon(f: GridFunction, temperature_k: float) -> GridFunction:
    """Two-sided one-phonon function F_1(omega, T) from the density f.

    Emission branch (omega >= 0) weighted by n+1, absorption branch
    (omega < 0) by n, satisfying detailed balance
    F_1(-omega) = e^{-omega/kT} F_1(omega).  At T = 0 returns f itself.
    """
    if f.omega_min < -1e-12:
        raise ValueError("one-phonon density must be supported on omega >= 0")
    if temperature_k == 0.0:
        return f
    if abs(f.omega_min) > 1e-12:
        # grid must start at 0 so the mirrored grid is node-aligned
        raise ValueError("one-phonon density grid must start at omega = 0")
    if f.values[0] != 0.0:
        raise ValueError("f(0) must be 0 for T > 0 (occupation diverges)")
    om = f.grid[1:]
    n = thermal_occupation(om, temperature_k)
    emission = f.values.copy()
    emission[1:] = (n + 1.0) * f.values[1:]
    absorption = (n * f.values[1:])[::-1]
    vals = np.concatenate([absorption, emission])
    return GridFunction(-f.omega_max, f.step, vals)


def huang_rhys(f: GridFunction, s0: float, temperature_k: float,
               omega_cap: float) -> float:
    """Temperature-dependent mean phonon count
    S(T) = S0 int_0^cap (2n+1) f domega (equals S0 at T = 0 for unit f)."""
    if temperature_k == 0.0:
        return s0 * integrate(f, 0.0, omega_cap)
    vals = f.values.copy()
    pos = f.grid > 0.0
    vals[pos] *= 2.0 * thermal_occupation(f.grid[pos], temperature_k) + 1.0
    # node omega = 0 contributes nothing: (2n+1) f -> 0 there for a density
    # vanishing at 0, which thermal_one_phonon enforces
    weighted = GridFunction(f.omega_min, f.step, vals)
    return s0 * integrate(weighted, 0.0, omega_cap)


def _poisson_weights(s: float, i_max: int) -> np.ndarray:
    """e^{-s} s^i / i! for i = 1..i_max, computed in log space."""
    i = np.arange(1, i_max + 1, dtype=float)
    return np.exp(-s + i * math.log(s) - gammaln(i + 1.0))


def _self_convolution_sum(f1: GridFunction, s: float, i_max: int,
                          crop_len: int | None = None) -> GridFunction:
    """Accumulate e^{-s} sum_i (s^i/i!) F_i with F_i = F_{i-1} (x) F_1.

    ``crop_len`` truncates every term to its first crop_len samples;
    since each support starts at i * omega_min this is exact on the kept
    window when omega_min = 0 (used inside the deconvolution loop).
    """
    h = f1.step
    weights = _poisson_weights(s, i_max)
    if crop_len is not None:
        if abs(f1.omega_min) > 1e-12:
            raise ValueError("windowed accumulation assumes support from 0")
        acc = np.zeros(crop_len)
        term = f1.values[:crop_len]
        acc[: term.size] += weights[0] * term
        g = f1
        for i in range(2, i_max + 1):
            g = convolve(g, f1)
            if g.size > crop_len:
                g = GridFunction(g.omega_min, h, g.values[:crop_len])
            acc[: g.size] += weights[i - 1] * g.values
            if weights[i - 1] * np.max(g.values) < 1e-16 and i > 3:
                break
        return GridFunction(0.0, h, acc)

    # full-span accumulation: term i spans [i*a, i*b]
    a = f1.omega_min
    n1 = f1.size
    total_len = (n1 - 1) * i_max + 1
    acc = np.zeros(total_len)
    final_min = a * i_max
    g = f1
    for i in range(1, i_max + 1):
        if i > 1:
            g = convolve(g, f1)
        # start index of term i inside the final grid
        off = round((g.omega_min - final_min) / h)
        acc[off: off + g.size] += weights[i - 1] * g.values
    return GridFunction(final_min, h, acc)


def forward_sideband(f: GridFunction, s0: float,
                     i_max: int | None = None) -> GridFunction:
    """Low-temperature sideband from a one-phonon density (unit integral not
    required; f is normalized internally and s0 carries the intensity)."""
    mass = integrate(f)
    if mass <= 0:
        raise ValueError("one-phonon density must have positive mass")
    fn = f.scaled(1.0 / mass)
    need = poisson_i_max(s0)
    if i_max is None:
        i_max = need
    elif i_max < need:
        raise ValueError(f"i_max = {i_max} below truncation requirement {need}")
    return _self_convolution_sum(fn, s0, i_max)


def _marching_solve(target: np.ndarray, h: float, s0: float,
                    n_cap: int, i_max: int) -> np.ndarray:
    """Direct node-by-node solve of the convolution series on [0, cap].

    The discrete series is lower triangular in the node index: with
    f[0] = 0, every self-convolution value at node k depends only on
    f[1..k-1], so

        f[k] = (target[k] - sum_{i>=2} w_i F_i[k]) / w_1

    can be marched left to right (a Volterra-type inversion).  Negative
    excursions from noise are clipped as we go.
    """
    w = _poisson_weights(s0, i_max)
    f = np.zeros(n_cap)
    conv = np.zeros((i_max + 1, n_cap))  # conv[i] = f^{(x) i}, conv[1] = f
    for k in range(1, n_cap):
        higher = 0.0
        for i in range(2, i_max + 1):
            # F_i[k] = h * sum_j F_{i-1}[j] f[k-j], j = 1..k-1
            c = h * float(np.dot(conv[i - 1, 1:k], f[k - 1:0:-1]))
            conv[i, k] = c
            higher += w[i - 1] * c
            if conv[i - 1, : k].max(initial=0.0) == 0.0:
                break
        val = (target[k] - higher) / w[0]
        f[k] = val if val > 0.0 else 0.0
        conv[1, k] = f[k]
    return f


def extract_one_phonon(f0: GridFunction, s0: float, *,
                       support_cap: float = DEFAULT_SUPPORT_CAP,
                       relax: float = 0.5, max_iter: int = 500,
                       tol: float = 1e-5) -> GridFunction:
    """Recover the one-phonon density from a measured sideband.

    The target is the input rescaled to mass 1 - e^{-s0}, so any overall
    amplitude calibration of the table drops out.  A direct marching
    solve of the (lower triangular) discrete convolution series supplies
    the starting iterate; a damped fixed-point loop
    f <- f + relax (target - forward(f)), clipped non-negative and
    renormalized each step, then polishes and verifies.  The plain
    relaxation alone is only locally convergent: started cold it stalls
    on a spurious clipped fixed point, which is why the marching pass is
    not optional.  Convergence criterion: L1 residual on the full input
    window below ``tol``.
    """
    if s0 <= 0:
        raise ValueError("s0 must be > 0")
    if abs(f0.omega_min) > 1e-9:
        raise ValueError("sideband table must start at omega = 0")
    if np.any(f0.values < -1e-12 * max(1.0, float(np.max(f0.values)))):
        raise ValueError("sideband table must be non-negative")

    h = f0.step
    mass0 = integrate(f0)
    if mass0 <= 0:
        raise ValueError("sideband table must have positive mass")
    target = f0.values * ((1.0 - math.exp(-s0)) / mass0)
    n_win = f0.size
    n_cap = min(n_win, int(math.floor(support_cap / h + 1e-9)) + 1)
    i_max = poisson_i_max(s0)

    f_vals = _marching_solve(target, h, s0, n_cap, i_max)
    f_mass = np.trapezoid(f_vals, dx=h)
    if f_mass <= 0:
        raise ValueError("sideband table vanishes on the one-phonon window")
    f_vals = f_vals / f_mass

    residual = math.inf
    for it in range(1, max_iter + 1):
        f = GridFunction(0.0, h, f_vals)
        fwd = _self_convolution_sum(f, s0, i_max, crop_len=n_win)
        diff = target - fwd.values
        residual = float(np.trapezoid(np.abs(diff), dx=h))
        if residual < tol:
            return f
        f_vals = f_vals + relax * diff[:n_cap]
        np.clip(f_vals, 0.0, None, out=f_vals)
        m = np.trapezoid(f_vals, dx=h)
        if m <= 0:
            raise DeconvolutionError(
                "deconvolution collapsed to zero", residual, it)
        f_vals /= m
    raise DeconvolutionError(
        f"deconvolution did not reach L1 residual {tol:g} in {max_iter} "
        f"iterations (residual {residual:.3e})", residual, max_iter)


def thermal_overlap(model: "PsbModel", temperature_k: float,
                    i_max: int | None = None) -> GridFunction:
    """Temperature-dependent sideband in the unit-emission convention.

    Builds F_1(omega, T), normalizes it, and sums Poisson-weighted
    self-convolutions with intensity S(T); the result integrates to
    1 - e^{-S(T)} up to the truncation tail (< 1e-9).  Note the model's
    amplitude calibration is NOT applied here; see
    ``PsbModel.calibrated_overlap``.
    """
    s_t = model.huang_rhys_at(temperature_k)
    need = poisson_i_max(s_t)
    if i_max is None:
        i_max = need
    elif i_max < need:
        raise ValueError(f"i_max = {i_max} below truncation requirement {need}")
    f1t = thermal_one_phonon(model.f1, temperature_k)
    f1n = f1t.scaled(1.0 / integrate(f1t))
    return _self_convolution_sum(f1n, s_t, i_max)


@dataclasses.dataclass(frozen=True)
class PsbModel:
    """Sideband model: measured table, extracted one-phonon density,
    low-temperature phonon count and the spectral cap for S(T).

    ``scale`` is the amplitude of the source table relative to the
    unit-emission convention (integral of the raw table divided by
    1 - e^{-s0}); rate formulas evaluate scale * F so they see the
    calibrated table amplitude.
    """

    f0: GridFunction
    f1: GridFunction
    s0: float
    omega_mev: float
    scale: float = 1.0

    def __post_init__(self):
        if self.s0 <= 0:
            raise ValueError("s0 must be > 0")
        if self.omega_mev <= 0:
            raise ValueError("omega_mev must be > 0")
        if self.scale <= 0:
            raise ValueError("scale must be > 0")
        m1 = integrate(self.f1)
        if abs(m1 - 1.0) > 1e-6:
            raise ValueError(f"one-phonon density mass {m1} != 1")
        if np.any(self.f1.values < -1e-12):
            raise ValueError("one-phonon density must be non-negative")
        m0 = integrate(self.f0)
        if abs(m0 - (1.0 - math.exp(-self.s0))) > 1e-3:
            raise ValueError(
                f"stored sideband mass {m0} is not 1 - e^-s0 within 1e-3")
        # per-instance memo for thermal overlaps; the model is immutable so
        # entries never invalidate, and sweeps reuse them heavily
        object.__setattr__(self, "_overlap_cache", {})

    # -- constructors -------------------------------------------------

    @classmethod
    def from_overlap(cls, f0_raw: GridFunction, s0: float,
                     omega_mev: float = DEFAULT_SUPPORT_CAP,
                     support_cap: float = DEFAULT_SUPPORT_CAP,
                     tol: float = 1e-5, max_iter: int = 4000) -> "PsbModel":
        """Build from a measured sideband table in any amplitude convention.

        The default residual tolerance leaves room for the multi-phonon
        tail a finite table window cuts off.
        """
        mass = integrate(f0_raw)
        frac = 1.0 - math.exp(-s0)
        f0n = f0_raw.scaled(frac / mass)
        f1 = extract_one_phonon(f0n, s0, support_cap=support_cap,
                                tol=tol, max_iter=max_iter)
        return cls(f0n, f1, s0, omega_mev, scale=mass / frac)

    @classmethod
    def from_one_phonon(cls, f1: GridFunction, s0: float,
                        omega_mev: float = DEFAULT_SUPPORT_CAP,
                        scale: float = 1.0) -> "PsbModel":
        """Build synthetically from a known one-phonon density."""
        mass = integrate(f1)
        f1n = f1.scaled(1.0 / mass)
        f0 = forward_sideband(f1n, s0)
        return cls(f0, f1n, s0, omega_mev, scale=scale)

    @classmethod
    def from_manifest(cls, path) -> "PsbModel":
        """Load from a key=value manifest naming the table CSV, s0 and
        the S(T) spectral cap (f0_csv, s0, omega_mev)."""
        p = Path(path)
        keys: dict[str, str] = {}
        for lineno, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{p}:{lineno}: expected key=value")
            k, v = line.split("=", 1)
            keys[k.strip()] = v.strip()
        missing = {"f0_csv", "s0", "omega_mev"} - keys.keys()
        if missing:
            raise ValueError(f"{p}: manifest missing keys: {sorted(missing)}")
        unknown = keys.keys() - {"f0_csv", "s0", "omega_mev"}
        if unknown:
            raise ValueError(f"{p}: unknown manifest keys: {sorted(unknown)}")
        csv_path = Path(keys["f0_csv"])
        if not csv_path.is_absolute():
            csv_path = p.parent / csv_path
        f0_raw = read_csv(csv_path)
        return cls.from_overlap(f0_raw, float(keys["s0"]),
                                omega_mev=float(keys["omega_mev"]))

    # -- evaluation ----------------------------------------------------

    def huang_rhys_at(self, temperature_k: float) -> float:
        return huang_rhys(self.f1, self.s0, temperature_k, self.omega_mev)

    def calibrated_overlap(self, temperature_k: float = 0.0,
                           i_max: int | None = None) -> GridFunction:
        """Thermal sideband with the source-table amplitude applied."""
        key = (float(temperature_k), i_max)
        cache: dict = self._overlap_cache
        if key not in cache:
            cache[key] = thermal_overlap(self, temperature_k, i_max).scaled(self.scale)
        return cache[key]

    def roundtrip_residual(self) -> float:
        """L1 distance between the stored table and the reconvolved one."""
        rec = forward_sideband(self.f1, self.s0)
        xs = self.f0.grid
        return float(np.trapezoid(np.abs(rec.sample(xs) - self.f0.values),
                                  dx=self.f0.step))
