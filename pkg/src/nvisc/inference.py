"""Inverse analyses on top of the rate models.

Four questions are answered here: which gap energies are consistent
with the measured direct-crossing rate (interval intersection of the
predicted confidence band with the measured band); which acoustic
cutoff makes the assisted-to-direct ratio match its measured value
(monotone bracketing in the cutoff); how large the error of the
zero-temperature rate formula is at finite temperature; and what
activation parameters fit the high-temperature lifetime quenching
(damped least squares on a Mott-Seitz model).  A small forward
composition producing lifetime-vs-temperature tables and a finite
difference sensitivity of the averaged crossing rate round it out.
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from .gridfn import GridFunction, IntervalSet, MeasuredBand, band_intersections
from .psb import PsbModel
from .rates import (
    HighTempParams,
    LevelSpacings,
    PhononCoupling,
    RateResult,
    SpinOrbitParams,
    e12_a1_ratio,
    gamma_a1,
    gamma_e12_finiteT,
    gamma_e12_lowT,
    gamma_ht,
    isc_average,
    lifetime,
)
from .units import rate_mev_to_mhz, thermal_energy

__all__ = [
    "LifetimeSeries",
    "LifetimeCurves",
    "MottSeitzFit",
    "infer_delta",
    "infer_omega",
    "asymptotic_ratio",
    "low_delta_exclusion",
    "lowT_error_map",
    "fit_mott_seitz",
    "lifetime_curves",
    "isc_sensitivity",
]

# default gap sweep for interval inference (meV)
DELTA_SWEEP = (20.0, 600.0, 1.0)
# default gap range the cutoff inference averages over (meV)
DELTA_RANGE = (344.0, 430.0)
OMEGA_GRID_STEP = 0.25


# ---------------------------------------------------------------------------
# measured lifetime tables


@dataclasses.dataclass(frozen=True)
class LifetimeSeries:
    """Measured lifetimes vs temperature with 1-sigma errors, tagged by
    spin class ("ms0" or "ms1")."""

    temperatures_k: np.ndarray
    taus_ns: np.ndarray
    sigmas_ns: np.ndarray
    spin_classes: tuple[str, ...]

    def __post_init__(self):
        t = np.asarray(self.temperatures_k, dtype=float)
        v = np.asarray(self.taus_ns, dtype=float)
        s = np.asarray(self.sigmas_ns, dtype=float)
        cls = tuple(self.spin_classes)
        if not (t.size == v.size == s.size == len(cls)):
            raise ValueError("series columns must have equal length")
        if np.any(t <= 0) or np.any(v <= 0) or np.any(s <= 0):
            raise ValueError("temperatures, lifetimes and sigmas must be > 0")
        if any(c not in ("ms0", "ms1") for c in cls):
            raise ValueError("spin class must be ms0 or ms1")
        for name, arr in (("temperatures_k", t), ("taus_ns", v),
                          ("sigmas_ns", s)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "spin_classes", cls)

    def __len__(self) -> int:
        return self.temperatures_k.size

    def select(self, spin_class: str) -> "LifetimeSeries":
        keep = [i for i, c in enumerate(self.spin_classes) if c == spin_class]
        if not keep:
            raise ValueError(f"no {spin_class} rows in series")
        return LifetimeSeries(self.temperatures_k[keep], self.taus_ns[keep],
                              self.sigmas_ns[keep],
                              tuple(self.spin_classes[i] for i in keep))

    def to_csv(self, path, header_comment: str | None = None) -> None:
        lines = []
        if header_comment:
            lines.extend(f"# {ln}" for ln in header_comment.splitlines())
        lines.append("temperature_K,tau_ns,sigma_ns,spin_class")
        for t, v, s, c in zip(self.temperatures_k, self.taus_ns,
                              self.sigmas_ns, self.spin_classes):
            lines.append(f"{t:.10g},{v:.12g},{s:.12g},{c}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def from_csv(cls, path) -> "LifetimeSeries":
        """Read "temperature_K,tau_ns,sigma_ns,spin_class" rows."""
        temps, taus, sigmas, classes = [], [], [], []
        for lineno, raw in enumerate(
                Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.lower().startswith("temperature"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 4:
                raise ValueError(
                    f"{path}:{lineno}: expected "
                    "temperature_K,tau_ns,sigma_ns,spin_class")
            temps.append(float(parts[0]))
            taus.append(float(parts[1]))
            sigmas.append(float(parts[2]))
            classes.append(parts[3])
        if not temps:
            raise ValueError(f"{path}: no data rows")
        return cls(np.asarray(temps), np.asarray(taus), np.asarray(sigmas),
                   tuple(classes))


# ---------------------------------------------------------------------------
# gap interval from the direct-crossing rate


def infer_delta(so: SpinOrbitParams, f: GridFunction, target: MeasuredBand,
                exclusion_floor: float = 148.0,
                sweep: tuple[float, float, float] = DELTA_SWEEP) -> IntervalSet:
    """Gap intervals where the predicted direct-rate band meets the
    measured band; content below ``exclusion_floor`` is dropped
    afterwards (the floor comes from the independent ratio analysis, so
    it acts as a pure post-filter here)."""
    lo, hi, step = sweep
    lo = max(lo, f.omega_min)
    hi = min(hi, f.omega_max)
    n = int(math.floor((hi - lo) / step)) + 1
    if n < 2:
        return IntervalSet.empty()
    grid = lo + step * np.arange(n)
    vals = f.sample(grid)

    def curve(ratio: float) -> GridFunction:
        lp = so.lambda_par * ratio
        return GridFunction(
            lo, step, rate_mev_to_mhz(4.0 * math.pi * lp * lp) * vals)

    found = band_intersections(curve(so.ratio_band[0]),
                               curve(so.ratio_band[1]), target)
    return found.clip_below(exclusion_floor)


# ---------------------------------------------------------------------------
# acoustic cutoff from the rate ratio


def _cumulative_ratio(pc_eta_internal: float, f: GridFunction, delta: float,
                      delta_prime: float, include_singlet_path: bool,
                      omega_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Monotone cutoff -> ratio curve via a running trapezoid sum."""
    fd = f.sample(delta)
    if fd <= 0.0:
        raise ValueError(
            f"F(Delta) = 0 at Delta = {delta} meV; ratio is undefined")
    h = OMEGA_GRID_STEP
    om = h * np.arange(int(math.ceil(min(omega_max, delta) / h)) + 1)
    w = om.copy()
    if include_singlet_path and math.isfinite(delta_prime):
        w = om * (1.0 - 2.0 * om / (delta + delta_prime)) ** 2
    integrand = w * f.sample(delta - om)
    cum = np.concatenate(
        [[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * h)])
    return om, (2.0 / math.pi) * pc_eta_internal * cum / fd


def asymptotic_ratio(pc: PhononCoupling, f: GridFunction, ls: LevelSpacings,
                     include_singlet_path: bool = True) -> float:
    """Ratio in the no-cutoff limit (the integral truncates at the gap
    itself, so this is the largest ratio any cutoff can produce)."""
    om, r = _cumulative_ratio(pc.eta_internal, f, ls.delta, ls.delta_prime,
                              include_singlet_path, ls.delta)
    return float(r[-1])


def infer_omega(so: SpinOrbitParams, pc: PhononCoupling, psb: PsbModel,
                ls: LevelSpacings, ratio_target: MeasuredBand,
                deltas=None, include_singlet_path: bool = True,
                omega_max: float = 150.0) -> IntervalSet:
    """Cutoff interval consistent with the measured rate ratio.

    The ratio is non-decreasing in the cutoff, so each target-band edge
    maps to a cutoff by inverse interpolation; the returned interval is
    the union over the swept gap values (default: the gap interval the
    direct-rate analysis produced).  An unreachable target gives the
    empty set; see ``asymptotic_ratio`` for the diagnostic ceiling.
    """
    if deltas is None:
        deltas = np.linspace(DELTA_RANGE[0], DELTA_RANGE[1], 21)
    f = psb.calibrated_overlap(0.0)
    los, his = [], []
    for delta in np.atleast_1d(np.asarray(deltas, dtype=float)):
        om, r = _cumulative_ratio(pc.eta_internal, f, delta, ls.delta_prime,
                                  include_singlet_path, omega_max)
        if r[-1] < ratio_target.lo:
            continue
        los.append(float(np.interp(ratio_target.lo, r, om)))
        his.append(float(np.interp(ratio_target.hi, r, om,
                                   right=float(om[-1]))))
    if not los:
        return IntervalSet.empty()
    return IntervalSet.from_pairs([(min(los), max(his))])


def low_delta_exclusion(pc: PhononCoupling, f: GridFunction,
                        target_lo: float, floor: float = 148.0,
                        delta_prime: float = 1190.0,
                        include_singlet_path: bool = True) -> float:
    """Largest no-cutoff ratio over gaps up to ``floor``.

    A value below ``target_lo`` means no cutoff can reconcile those gaps
    with the measured ratio, which is what justifies dropping the low
    interval in infer_delta.
    """
    out = 0.0
    for delta in np.arange(24.0, floor + 0.5, 2.0):
        if f.sample(delta) <= 0.0:
            continue
        out = max(out, asymptotic_ratio(
            pc, f, LevelSpacings(delta, delta_prime), include_singlet_path))
    return out


# ---------------------------------------------------------------------------
# error of the zero-temperature limit


def lowT_error_map(so: SpinOrbitParams, pc: PhononCoupling, psb: PsbModel,
                   ls: LevelSpacings, temperature_k: float,
                   axis: str = "delta", lo: float = 300.0, hi: float = 450.0,
                   step: float = 5.0) -> GridFunction:
    """Relative deviation of the zero-temperature assisted rate from the
    finite-temperature one, swept over the gap or the cutoff.

    The direct rate drops out of the assisted-to-direct ratio when both
    use the same overlap, so the rates are compared directly.
    """
    if axis not in ("delta", "omega"):
        raise ValueError("axis must be delta or omega")
    if temperature_k < 0:
        raise ValueError("temperature must be >= 0")
    f0 = psb.calibrated_overlap(0.0)
    grid = lo + step * np.arange(int(math.floor((hi - lo) / step)) + 1)
    errs = np.empty(grid.size)
    for i, x in enumerate(grid):
        if axis == "delta":
            ls_i, pc_i = LevelSpacings(float(x), ls.delta_prime), pc
        else:
            ls_i, pc_i = ls, pc.with_omega(float(x))
        cold = gamma_e12_lowT(so, pc_i, f0, ls_i).value_mhz
        warm = gamma_e12_finiteT(so, pc_i, psb, ls_i, temperature_k).value_mhz
        errs[i] = abs(warm - cold) / cold
    return GridFunction(float(grid[0]), step, errs)


# ---------------------------------------------------------------------------
# Mott-Seitz fit of the high-temperature quenching


@dataclasses.dataclass(frozen=True)
class MottSeitzFit:
    """Activation parameters with 1-sigma uncertainties and fit stats."""

    params: HighTempParams
    sigma_s: float
    sigma_delta_e_ev: float
    nu0_mhz: float
    residual_rms: float
    n_points: int

    @property
    def s(self) -> float:
        return self.params.s

    @property
    def delta_e_ev(self) -> float:
        return self.params.delta_e_ev


def _ms_tau(nu0: float, s: float, delta_e_ev: float,
            temps: np.ndarray) -> np.ndarray:
    kt_ev = np.array([thermal_energy(t) for t in temps]) * 1e-3
    return 1e3 / (2.0 * math.pi * nu0 * (1.0 + s * np.exp(-delta_e_ev / kt_ev)))


def fit_mott_seitz(data: LifetimeSeries, g_rad: RateResult,
                   tau0_ns: float = 12.0) -> MottSeitzFit:
    """Fit tau(T) = 1e3 / (2 pi nu0 (1 + s e^{-dE/kT})) to a shelf-class
    series, with the base rate pinned to the measured radiative rate.

    Initialization is deterministic: the activation energy from the
    Arrhenius slope of the last three points, the prefactor from the
    last point's residual rate.  ``tau0_ns`` is the no-quenching anchor
    used to decide whether a turn-on is present at all.
    """
    if any(c != "ms0" for c in data.spin_classes):
        data = data.select("ms0")
    if len(data) < 3:
        raise ValueError("need at least 3 points to fit the quenching")
    nu0 = g_rad.value_mhz
    temps, taus, sigmas = data.temperatures_k, data.taus_ns, data.sigmas_ns

    tau_flat = min(tau0_ns, 1e3 / (2.0 * math.pi * nu0))
    if np.all(taus > tau_flat - sigmas):
        raise ValueError(
            "deltaE unidentifiable: no lifetime point drops below the "
            "no-quenching anchor by more than one sigma")

    # rate excess over the base, for the Arrhenius initializer
    kt_ev = np.array([thermal_energy(t) for t in temps]) * 1e-3
    excess = 1e3 / (2.0 * math.pi * taus) - nu0
    tail = excess[-3:]
    if np.any(tail <= 0):
        raise ValueError(
            "deltaE unidentifiable: no activated excess rate in the last "
            "three points")
    slope = np.polyfit(1.0 / kt_ev[-3:], np.log(tail), 1)[0]
    de0 = max(-slope, 0.01)
    s0 = float(tail[-1] * math.exp(de0 / kt_ev[-1]) / nu0)

    def resid(theta):
        ln_s, de = theta
        return (_ms_tau(nu0, math.exp(ln_s), de, temps) - taus) / sigmas

    res = least_squares(resid, np.array([math.log(s0), de0]),
                        bounds=([-5.0, 0.01], [40.0, 4.0]), xtol=1e-14,
                        ftol=1e-14, gtol=1e-14)
    ln_s, de = res.x
    s = math.exp(ln_s)

    dof = max(len(data) - 2, 1)
    chi2 = 2.0 * res.cost
    jtj = res.jac.T @ res.jac
    try:
        cov = np.linalg.inv(jtj) * max(chi2 / dof, 1e-30)
        sigma_ln_s = math.sqrt(max(cov[0, 0], 0.0))
        sigma_de = math.sqrt(max(cov[1, 1], 0.0))
    except np.linalg.LinAlgError:
        sigma_ln_s = sigma_de = math.inf
    return MottSeitzFit(HighTempParams(s, de), s * sigma_ln_s, sigma_de,
                        nu0, math.sqrt(chi2 / len(data)), len(data))


# ---------------------------------------------------------------------------
# forward lifetime curves


@dataclasses.dataclass(frozen=True)
class LifetimeCurves:
    """Predicted lifetimes per temperature, spin class and activated
    channel admixture epsilon (parallel columns)."""

    temperatures_k: tuple[float, ...]
    spin_classes: tuple[str, ...]
    epsilons: tuple[float, ...]
    taus_ns: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.temperatures_k)

    def rows(self):
        return zip(self.temperatures_k, self.spin_classes, self.epsilons,
                   self.taus_ns)

    def select(self, spin_class: str, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
        keep = [i for i in range(len(self))
                if self.spin_classes[i] == spin_class
                and abs(self.epsilons[i] - epsilon) < 1e-12]
        return (np.array([self.temperatures_k[i] for i in keep]),
                np.array([self.taus_ns[i] for i in keep]))

    def to_csv(self, path, header_comment: str | None = None) -> None:
        lines = []
        if header_comment:
            lines.append(f"# {header_comment}")
        lines.append("temperature_K,spin_class,epsilon,tau_ns")
        for t, cls, eps, tau in self.rows():
            lines.append(f"{t:.10g},{cls},{eps:g},{tau:.10g}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "LifetimeCurves":
        temps, classes, epss, taus = [], [], [], []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if line.startswith("temperature_K"):
                    continue
                parts = line.split(",")
                if len(parts) != 4:
                    raise ValueError(
                        f"{path}:{lineno}: expected "
                        "'temperature_K,spin_class,epsilon,tau_ns'")
                try:
                    temps.append(float(parts[0]))
                    epss.append(float(parts[2]))
                    taus.append(float(parts[3]))
                except ValueError as exc:
                    raise ValueError(
                        f"{path}:{lineno}: non-numeric row {line!r}") from exc
                classes.append(parts[1])
        if not temps:
            raise ValueError(f"{path}: no data rows")
        return cls(tuple(temps), tuple(classes), tuple(epss), tuple(taus))


def lifetime_curves(so: SpinOrbitParams, pc: PhononCoupling, psb: PsbModel,
                    ls: LevelSpacings, g_rad: RateResult,
                    ht: HighTempParams, temperatures,
                    epsilons=(0.0, 0.5, 1.0)) -> LifetimeCurves:
    """Compose the crossing, radiative and activated channels into
    tau(T) for both spin classes and each epsilon."""
    temps_c, cls_c, eps_c, tau_c = [], [], [], []
    for t in np.atleast_1d(np.asarray(temperatures, dtype=float)):
        f_t = psb.calibrated_overlap(float(t))
        g_a1 = gamma_a1(so, f_t, ls.delta)
        g_e12 = gamma_e12_finiteT(so, pc, psb, ls, float(t))
        g_isc = isc_average(g_a1, g_e12)
        g_therm = gamma_ht(ht, g_rad, float(t))
        for eps in epsilons:
            for cls in ("ms0", "ms1"):
                temps_c.append(float(t))
                cls_c.append(cls)
                eps_c.append(float(eps))
                tau_c.append(lifetime(g_rad, g_isc, g_therm, eps, cls))
    return LifetimeCurves(tuple(temps_c), tuple(cls_c), tuple(eps_c),
                          tuple(tau_c))


# ---------------------------------------------------------------------------
# sensitivity of the averaged crossing rate to the gap


def isc_sensitivity(so: SpinOrbitParams, pc: PhononCoupling, psb: PsbModel,
                    ls: LevelSpacings, h: float = 2.0,
                    include_singlet_path: bool = True) -> float:
    """Finite-difference slope of the orbit-averaged crossing rate,
    in MHz per meV, positive when the rate grows as the gap shrinks."""
    f0 = psb.calibrated_overlap(0.0)
    if ls.delta - h <= f0.omega_min or ls.delta + h >= f0.omega_max:
        raise ValueError("gap too close to the sideband support edge for "
                         "a central difference")

    def nu_isc(delta: float) -> float:
        ls_d = LevelSpacings(delta, ls.delta_prime)
        g_a1 = gamma_a1(so, f0, delta)
        if g_a1.value_mhz == 0.0:
            raise ValueError(f"overlap vanishes at {delta} meV")
        g_e12 = gamma_e12_lowT(so, pc, f0, ls_d, include_singlet_path)
        return isc_average(g_a1, g_e12).value_mhz

    return (nu_isc(ls.delta - h) - nu_isc(ls.delta + h)) / (2.0 * h)
