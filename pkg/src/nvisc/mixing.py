"""Phonon-driven mixing between the orbital branches of the excited
triplet.

The dominant channel is a two-phonon Raman process (absorb omega, emit
omega + splitting) whose rate integrates to a T^5 law,

    Gamma_Mix = (64/pi) alpha eta^2 (k_B T)^5,
    alpha(x_d) = int_0^inf x^4 n(x) [n(x + x_d) + 1] dx,

with x_d the splitting over k_B T.  alpha interpolates between
24 zeta(4) (x_d -> 0) and 24 zeta(5) (x_d -> inf).  A direct one-phonon
channel, rate 4 eta [n+1] delta_xy^3, matters only for splittings of
tens of GHz.  The inverse problem (coupling strength from a measured
rate-vs-temperature series) is weighted least squares, linear in eta^2.
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from .gridfn import GridFunction
from .rates import RateResult
from .units import MEV_TO_MHZ, eta_mhz_to_internal, ghz_to_mev, thermal_energy

__all__ = [
    "MixingParams",
    "MixSeries",
    "OnePhononMixing",
    "EtaFit",
    "alpha_const",
    "gamma_mix",
    "gamma_mix_spectral",
    "gamma_mix_one_phonon",
    "extract_eta",
]

# exp overflow guard
_EXP_MAX = 690.0

DEFAULT_DELTA_XY_MEV = ghz_to_mev(3.9)


@dataclasses.dataclass(frozen=True)
class MixingParams:
    """Coupling strength (MHz meV^-3), orbital splitting (meV) and
    temperature (K) for the mixing-rate formulas."""

    eta_mhz: float
    delta_xy_mev: float = DEFAULT_DELTA_XY_MEV
    temperature_k: float = 5.0
    eta_band_mhz: tuple[float, float] | None = None

    def __post_init__(self):
        if self.eta_mhz <= 0:
            raise ValueError("eta must be > 0")
        if self.delta_xy_mev < 0:
            raise ValueError("splitting must be >= 0")
        if self.temperature_k < 0:
            raise ValueError("temperature must be >= 0")


@dataclasses.dataclass(frozen=True)
class MixSeries:
    """Measured mixing rates vs temperature with 1-sigma errors."""

    temperatures_k: np.ndarray
    rates_mhz: np.ndarray
    sigmas_mhz: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.temperatures_k, dtype=float)
        r = np.asarray(self.rates_mhz, dtype=float)
        s = np.asarray(self.sigmas_mhz, dtype=float)
        if not (t.size == r.size == s.size):
            raise ValueError("series columns must have equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("temperatures must be strictly increasing")
        if np.any(t <= 0):
            raise ValueError("temperatures must be > 0 K")
        if np.any(s <= 0):
            raise ValueError("sigmas must be > 0")
        for name, arr in (("temperatures_k", t), ("rates_mhz", r),
                          ("sigmas_mhz", s)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.temperatures_k.size

    def to_csv(self, path, header_comment: str | None = None) -> None:
        lines = []
        if header_comment:
            lines.extend(f"# {ln}" for ln in header_comment.splitlines())
        lines.append("temperature_K,gamma_mix_MHz,sigma_MHz")
        for t, r, s in zip(self.temperatures_k, self.rates_mhz, self.sigmas_mhz):
            lines.append(f"{t:.10g},{r:.12g},{s:.12g}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def from_csv(cls, path) -> "MixSeries":
        """Read "temperature_K,gamma_mix_MHz,sigma_MHz" rows ('#' comments)."""
        rows = []
        for lineno, raw in enumerate(
                Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.lower().startswith("temperature"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(
                    f"{path}:{lineno}: expected temperature_K,gamma_mix_MHz,sigma_MHz")
            rows.append([float(p) for p in parts])
        if not rows:
            raise ValueError(f"{path}: no data rows")
        arr = np.asarray(rows)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])


def alpha_const(x_delta: float) -> float:
    """Dimensionless two-phonon integral alpha(x_delta).

    Adaptive quadrature with the x -> 0 limit of the integrand taken
    analytically (it vanishes like x^3); absolute tolerance 1e-9.
    """
    if x_delta < 0:
        raise ValueError("x_delta must be >= 0")

    def integrand(x: float) -> float:
        if x <= 0.0 or x > _EXP_MAX:
            return 0.0
        absorb = 1.0 / math.expm1(x)
        xe = x + x_delta
        emit = (1.0 / math.expm1(xe) if xe < _EXP_MAX else 0.0) + 1.0
        return x**4 * absorb * emit

    val, _ = quad(integrand, 0.0, math.inf, epsabs=1e-9, epsrel=1e-11,
                  limit=200)
    return val


def gamma_mix(mp: MixingParams) -> RateResult:
    """Two-phonon mixing rate (64/pi) alpha eta^2 (kT)^5, in MHz."""
    if mp.temperature_k <= 0:
        raise ValueError("mixing rate needs T > 0")
    kt = thermal_energy(mp.temperature_k)
    alpha = alpha_const(mp.delta_xy_mev / kt)

    def rate(eta_mhz: float) -> float:
        eta = eta_mhz_to_internal(eta_mhz)
        return (64.0 / math.pi) * alpha * eta * eta * kt**5 * MEV_TO_MHZ

    band = None
    if mp.eta_band_mhz is not None:
        band = (rate(mp.eta_band_mhz[0]), rate(mp.eta_band_mhz[1]))
    return RateResult(rate(mp.eta_mhz), band)


def gamma_mix_spectral(mp: MixingParams, omega_max: float | None = None,
                       step: float | None = None) -> GridFunction:
    """Spectral decomposition of the two-phonon rate (MHz/meV) over the
    absorbed-phonon energy; integrates to gamma_mix.

    Default axis [0, 40 kT] with step kT/100; the integrand rises as
    omega^2, peaks near 4 kT and is exponentially negligible at the
    upper end.
    """
    if mp.temperature_k <= 0:
        raise ValueError("mixing spectrum needs T > 0")
    kt = thermal_energy(mp.temperature_k)
    if omega_max is None:
        omega_max = 40.0 * kt
    if step is None:
        step = kt / 100.0
    n = max(2, int(math.ceil(omega_max / step)) + 1)
    om = np.linspace(0.0, omega_max, n)
    vals = np.zeros(n)
    x = om[1:] / kt
    with np.errstate(over="ignore"):
        absorb = np.where(x < _EXP_MAX, 1.0 / np.expm1(np.minimum(x, _EXP_MAX)), 0.0)
        xe = (om[1:] + mp.delta_xy_mev) / kt
        emit = np.where(xe < _EXP_MAX, 1.0 / np.expm1(np.minimum(xe, _EXP_MAX)), 0.0) + 1.0
    eta = eta_mhz_to_internal(mp.eta_mhz)
    vals[1:] = (64.0 / math.pi) * eta * eta * om[1:] ** 4 * absorb * emit * MEV_TO_MHZ
    return GridFunction(0.0, om[1] - om[0], vals)


@dataclasses.dataclass(frozen=True)
class OnePhononMixing:
    """Direct one-phonon mixing: downward (emission) and upward
    (absorption) rates, and the small-splitting linear form
    4 eta k_B delta_xy^2 T (all MHz)."""

    emission_mhz: float
    absorption_mhz: float
    linear_mhz: float

    @property
    def mean_mhz(self) -> float:
        """Direction-averaged rate; this is what the linear form tracks
        to O((delta_xy/kT)^2)."""
        return 0.5 * (self.emission_mhz + self.absorption_mhz)

    @property
    def net_mhz(self) -> float:
        """Emission minus absorption = 4 eta delta_xy^3 exactly."""
        return self.emission_mhz - self.absorption_mhz


def gamma_mix_one_phonon(mp: MixingParams) -> OnePhononMixing:
    """One-phonon mixing rates at the orbital splitting."""
    eta = eta_mhz_to_internal(mp.eta_mhz)
    d = mp.delta_xy_mev
    if d == 0.0:
        return OnePhononMixing(0.0, 0.0, 0.0)
    kt = thermal_energy(mp.temperature_k)
    if kt == 0.0:
        occ = 0.0
    else:
        x = d / kt
        occ = 1.0 / math.expm1(x) if x < _EXP_MAX else 0.0
    emission = 4.0 * eta * (occ + 1.0) * d**3 * MEV_TO_MHZ
    absorption = 4.0 * eta * occ * d**3 * MEV_TO_MHZ
    linear = 4.0 * eta * kt * d**2 * MEV_TO_MHZ
    return OnePhononMixing(emission, absorption, linear)


@dataclasses.dataclass(frozen=True)
class EtaFit:
    """Coupling strength recovered from a rate-vs-temperature series."""

    eta_mhz: float
    sigma_mhz: float
    eta_sq: float
    sigma_eta_sq: float
    n_points: int


def extract_eta(data: MixSeries, delta_xy_mev: float = DEFAULT_DELTA_XY_MEV) -> EtaFit:
    """Weighted least squares for the coupling strength.

    The model is linear in eta^2: nu_i = g(T_i) eta^2 with g the
    unit-coupling rate (alpha recomputed at every temperature, so the
    slight x_delta drift is not approximated away).  1-sigma on eta by
    linear propagation from the eta^2 estimate.
    """
    if len(data) < 3:
        raise ValueError("need at least 3 points to fit the coupling")
    g = np.array([
        gamma_mix(MixingParams(1.0, delta_xy_mev, t)).value_mhz
        for t in data.temperatures_k
    ])
    w = 1.0 / data.sigmas_mhz**2
    denom = float(np.sum(w * g * g))
    eta_sq = float(np.sum(w * g * data.rates_mhz)) / denom
    sigma_eta_sq = 1.0 / math.sqrt(denom)
    if eta_sq <= 0:
        raise ValueError(
            f"fitted eta^2 = {eta_sq:.3e} <= 0; data inconsistent with the "
            "T^5 mixing model")
    eta = math.sqrt(eta_sq)
    return EtaFit(eta, sigma_eta_sq / (2.0 * eta), eta_sq, sigma_eta_sq,
                  len(data))
