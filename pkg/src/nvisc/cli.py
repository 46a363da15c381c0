"""Command-line front end.

Flat key=value configs (unit-suffixed keys, '#' comments) drive a set of
subcommands that emit plot-ready CSVs plus a plain-text run summary.
Outputs are deterministic for fixed inputs: no timestamps, atomic
write-temp-then-rename file creation.

Exit codes: 0 ok, 2 config error, 3 numerical error, 4 empty inference
result.
"""

from __future__ import annotations

import argparse
import dataclasses
import importlib.resources
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import inference, mixing, psb, rates, units
from .gridfn import GridFunction, IntervalSet, MeasuredBand, integrate, write_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_EMPTY = 4


class ConfigError(Exception):
    pass


class EmptyResultError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration

_PATH = "path"
_FLOAT = "float"
_LIST = "float_list"

# key -> (kind, required, default); unit suffixes are part of the key
# names, so a wrong suffix surfaces as an unknown-key error
_SCHEMA = {
    "psb_manifest": (_PATH, True, None),
    "lambda_par_ghz": (_FLOAT, True, None),
    "perp_ratio": (_FLOAT, True, None),
    "perp_ratio_lo": (_FLOAT, True, None),
    "perp_ratio_hi": (_FLOAT, True, None),
    "eta_mhz_per_mev3": (_FLOAT, True, None),
    "eta_lo_mhz_per_mev3": (_FLOAT, False, None),
    "eta_hi_mhz_per_mev3": (_FLOAT, False, None),
    "omega_cutoff_mev": (_FLOAT, True, None),
    "delta_mev": (_FLOAT, True, None),
    "delta_prime_mev": (_FLOAT, True, None),
    "delta_xy_ghz": (_FLOAT, False, 3.9),
    "gamma_rad_mhz": (_FLOAT, True, None),
    "gamma_rad_lo_mhz": (_FLOAT, False, None),
    "gamma_rad_hi_mhz": (_FLOAT, False, None),
    "target_rate_mhz": (_FLOAT, False, 16.0),
    "target_rate_lo_mhz": (_FLOAT, False, 15.4),
    "target_rate_hi_mhz": (_FLOAT, False, 16.6),
    "ratio_target": (_FLOAT, False, 0.50),
    "ratio_target_lo": (_FLOAT, False, 0.45),
    "ratio_target_hi": (_FLOAT, False, 0.55),
    "exclusion_floor_mev": (_FLOAT, False, 148.0),
    "temperature_k": (_FLOAT, True, None),
    "tau0_ns": (_FLOAT, False, 12.0),
    "ht_s_factor": (_FLOAT, False, None),
    "ht_delta_e_ev": (_FLOAT, False, None),
    "epsilon_list": (_LIST, False, (0.0, 0.5, 1.0)),
    "mix_csv": (_PATH, False, None),
    "lifetime_csv": (_PATH, False, None),
}


@dataclasses.dataclass
class RunConfig:
    values: dict
    base_dir: Path
    source: str

    def __getitem__(self, key):
        return self.values[key]

    def path(self, key) -> Path | None:
        raw = self.values.get(key)
        if raw is None:
            return None
        p = Path(raw)
        return p if p.is_absolute() else self.base_dir / p

    def require_path(self, key) -> Path:
        p = self.path(key)
        if p is None:
            raise ConfigError(f"{self.source}: key '{key}' is required by "
                              "this command")
        if not p.exists():
            raise ConfigError(f"{self.source}: {key} = {p} does not exist")
        return p

    # parameter-object builders

    def spin_orbit(self) -> rates.SpinOrbitParams:
        return rates.SpinOrbitParams.from_ghz(
            self["lambda_par_ghz"], self["perp_ratio"],
            (self["perp_ratio_lo"], self["perp_ratio_hi"]))

    def phonon_coupling(self) -> rates.PhononCoupling:
        band = None
        if self.values.get("eta_lo_mhz_per_mev3") is not None:
            band = (self["eta_lo_mhz_per_mev3"], self["eta_hi_mhz_per_mev3"])
        return rates.PhononCoupling(self["eta_mhz_per_mev3"],
                                    self["omega_cutoff_mev"], band)

    def level_spacings(self) -> rates.LevelSpacings:
        return rates.LevelSpacings(self["delta_mev"], self["delta_prime_mev"])

    def g_rad(self) -> rates.RateResult:
        band = None
        if self.values.get("gamma_rad_lo_mhz") is not None:
            band = (self["gamma_rad_lo_mhz"], self["gamma_rad_hi_mhz"])
        return rates.RateResult(self["gamma_rad_mhz"], band)

    def target_band(self) -> MeasuredBand:
        return MeasuredBand(self["target_rate_mhz"],
                            self["target_rate_lo_mhz"],
                            self["target_rate_hi_mhz"])

    def ratio_band(self) -> MeasuredBand:
        return MeasuredBand(self["ratio_target"], self["ratio_target_lo"],
                            self["ratio_target_hi"])

    def mixing_params(self, temperature_k=None) -> mixing.MixingParams:
        band = None
        if self.values.get("eta_lo_mhz_per_mev3") is not None:
            band = (self["eta_lo_mhz_per_mev3"], self["eta_hi_mhz_per_mev3"])
        return mixing.MixingParams(
            self["eta_mhz_per_mev3"],
            units.ghz_to_mev(self["delta_xy_ghz"]),
            self["temperature_k"] if temperature_k is None else temperature_k,
            band)

    def ht_params(self, epsilon: float = 0.0) -> rates.HighTempParams:
        s, de = self.values.get("ht_s_factor"), self.values.get("ht_delta_e_ev")
        if s is None or de is None:
            raise ConfigError(
                f"{self.source}: ht_s_factor and ht_delta_e_ev are required "
                "by this command")
        return rates.HighTempParams(s, de, epsilon)

    def model(self) -> psb.PsbModel:
        return _load_model(self.require_path("psb_manifest"))


_MODEL_CACHE: dict = {}


def _load_model(manifest: Path) -> psb.PsbModel:
    st = manifest.stat()
    key = (str(manifest.resolve()), st.st_mtime_ns, st.st_size)
    if key not in _MODEL_CACHE:
        _MODEL_CACHE[key] = psb.PsbModel.from_manifest(manifest)
    return _MODEL_CACHE[key]


def parse_config(text: str, base_dir: Path, source: str = "config") -> RunConfig:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{key}'")
        kind = _SCHEMA[key][0]
        try:
            if kind == _FLOAT:
                values[key] = float(val)
            elif kind == _LIST:
                values[key] = tuple(float(p) for p in val.split(",") if p.strip())
            else:
                values[key] = val
        except ValueError:
            raise ConfigError(
                f"{source}:{lineno}: malformed number for '{key}': {val!r}")
    missing = [k for k, (_, req, _) in _SCHEMA.items()
               if req and k not in values]
    if missing:
        raise ConfigError(
            f"{source}: missing required keys: {', '.join(missing)}")
    for key, (_, req, default) in _SCHEMA.items():
        values.setdefault(key, default)
    _validate_bands(values, source)
    return RunConfig(values, base_dir, source)


def _validate_bands(values: dict, source: str) -> None:
    bands = (
        ("perp_ratio_lo", "perp_ratio", "perp_ratio_hi"),
        ("eta_lo_mhz_per_mev3", "eta_mhz_per_mev3", "eta_hi_mhz_per_mev3"),
        ("gamma_rad_lo_mhz", "gamma_rad_mhz", "gamma_rad_hi_mhz"),
        ("target_rate_lo_mhz", "target_rate_mhz", "target_rate_hi_mhz"),
        ("ratio_target_lo", "ratio_target", "ratio_target_hi"),
    )
    for lo_k, mid_k, hi_k in bands:
        lo, mid, hi = values.get(lo_k), values.get(mid_k), values.get(hi_k)
        if (lo is None) != (hi is None):
            raise ConfigError(f"{source}: {lo_k} and {hi_k} must be given "
                              "together")
        if lo is not None and not (lo <= mid <= hi):
            raise ConfigError(
                f"{source}: band {lo_k} <= {mid_k} <= {hi_k} is not ordered "
                f"({lo} / {mid} / {hi})")


def load_config(path_arg: str) -> RunConfig:
    if path_arg == "default":
        res = importlib.resources.files("nvisc") / "data" / "default_config.txt"
        with importlib.resources.as_file(res) as p:
            return parse_config(p.read_text(encoding="utf-8"), p.parent,
                                str(p))
    p = Path(path_arg)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(encoding="utf-8"), p.parent.resolve(),
                        str(p))


# ---------------------------------------------------------------------------
# output helpers


def _atomic_text(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_grid_csv(path: Path, g: GridFunction, header: str,
                     column_header: str | None = None) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    os.close(fd)
    try:
        write_csv(g, tmp, header_comment=header)
        if column_header is not None:
            lines = Path(tmp).read_text(encoding="utf-8").splitlines()
            lines = [column_header if ln == "omega_meV,value" else ln
                     for ln in lines]
            Path(tmp).write_text("\n".join(lines) + "\n", encoding="utf-8")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _intervals_csv(path: Path, found: IntervalSet, header: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    os.close(fd)
    try:
        found.to_csv(tmp, header_comment=header)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt_band(res: rates.RateResult, unit: str = "MHz") -> str:
    if res.band_mhz is None:
        return f"{res.value_mhz:.6g} {unit}"
    lo, hi = res.band_mhz
    return f"{res.value_mhz:.6g} {unit} (band {lo:.6g} .. {hi:.6g})"


_UNIT_NOTE = (
    "units: energies in meV (hbar = 1); rates are ordinary frequencies "
    "Gamma/2pi in MHz; temperatures in K")


# ---------------------------------------------------------------------------
# commands


def cmd_psb_build(cfg: RunConfig, args, out: Path) -> list[str]:
    model = cfg.model()
    t = cfg["temperature_k"]
    cold = model.calibrated_overlap(0.0)
    warm = model.calibrated_overlap(t)
    _atomic_grid_csv(out / "psb_overlap_0K.csv", cold,
                     "calibrated sideband overlap at T = 0")
    _atomic_grid_csv(out / f"psb_overlap_T.csv", warm,
                     f"calibrated sideband overlap at T = {t:g} K")
    return [
        f"sideband intensity S0 = {model.s0:.6g}",
        f"S({t:g} K) = {model.huang_rhys_at(t):.6g}",
        f"amplitude scale = {model.scale:.8g}",
        f"deconvolution round-trip residual = {model.roundtrip_residual():.3e}",
        f"overlap mass 0 K = {integrate(cold):.8g}",
        f"overlap mass {t:g} K = {integrate(warm):.8g}",
    ]


def cmd_deconvolve(cfg: RunConfig, args, out: Path) -> list[str]:
    model = cfg.model()
    _atomic_grid_csv(out / "one_phonon_density.csv", model.f1,
                     "one-phonon spectral density recovered from the "
                     "sideband table (unit mass)")
    return [
        f"one-phonon density mass = {integrate(model.f1):.8g}",
        f"support = [0, {model.f1.omega_max:g}] meV",
        f"round-trip residual (L1) = {model.roundtrip_residual():.3e}",
    ]


def cmd_rate_a1(cfg: RunConfig, args, out: Path) -> list[str]:
    model = cfg.model()
    res = rates.gamma_a1(cfg.spin_orbit(), model.calibrated_overlap(0.0),
                         cfg["delta_mev"])
    lines = [f"Gamma_A1/2pi = {_fmt_band(res)} at Delta = "
             f"{cfg['delta_mev']:g} meV"]
    if res.note:
        lines.append(f"note: {res.note}")
    return lines


def cmd_rate_e12(cfg: RunConfig, args, out: Path) -> list[str]:
    model = cfg.model()
    so, pc, ls = cfg.spin_orbit(), cfg.phonon_coupling(), cfg.level_spacings()
    f0 = model.calibrated_overlap(0.0)
    t = cfg["temperature_k"]
    cold_plain = rates.gamma_e12_lowT(so, pc, f0, ls)
    cold_corr = rates.gamma_e12_lowT(so, pc, f0, ls, include_singlet_path=True)
    warm = rates.gamma_e12_finiteT(so, pc, model, ls, t)
    spec = rates.gamma_e12_spectral(so, pc, model, ls, t,
                                    step=args.grid_step or rates.RATE_STEP)
    _atomic_grid_csv(out / "rate_e12_spectral.csv", spec,
                     f"assisted-rate spectral density at T = {t:g} K",
                     "omega_meV,rate_density_MHz_per_meV")
    return [
        f"Gamma_E12/2pi (T = 0) = {_fmt_band(cold_plain)}",
        f"Gamma_E12/2pi (T = 0, interference-corrected) = "
        f"{_fmt_band(cold_corr)}",
        f"Gamma_E12/2pi (T = {t:g} K) = {_fmt_band(warm)}",
        f"spectral file integrates to {integrate(spec):.6g} MHz",
    ]


def cmd_ratio(cfg: RunConfig, args, out: Path) -> list[str]:
    model = cfg.model()
    pc, ls = cfg.phonon_coupling(), cfg.level_spacings()
    f0 = model.calibrated_overlap(0.0)
    off = rates.e12_a1_ratio(pc, f0, ls, include_singlet_path=False)
    on = rates.e12_a1_ratio(pc, f0, ls, include_singlet_path=True)
    return [
        f"Gamma_E12/Gamma_A1 = {off:.6g} (plain weight)",
        f"Gamma_E12/Gamma_A1 = {on:.6g} (interference-corrected)",
        f"correction = {100.0 * (1.0 - on / off):.4g}% downward",
    ]


def cmd_mix(cfg: RunConfig, args, out: Path) -> list[str]:
    mp = cfg.mixing_params()
    res = mixing.gamma_mix(mp)
    one = mixing.gamma_mix_one_phonon(mp)
    return [
        f"two-phonon mixing rate = {_fmt_band(res)} at T = "
        f"{mp.temperature_k:g} K",
        f"one-phonon mixing: emission {one.emission_mhz:.6g} MHz, "
        f"absorption {one.absorption_mhz:.6g} MHz, "
        f"small-splitting form {one.linear_mhz:.6g} MHz",
    ]


def cmd_mix_spectral(cfg: RunConfig, args, out: Path) -> list[str]:
    mp = cfg.mixing_params()
    spec = mixing.gamma_mix_spectral(mp, step=args.grid_step)
    _atomic_grid_csv(out / "mix_spectral.csv", spec,
                     f"two-phonon mixing spectral density at T = "
                     f"{mp.temperature_k:g} K",
                     "omega_meV,rate_density_MHz_per_meV")
    kt = units.thermal_energy(mp.temperature_k)
    peak = spec.grid[int(np.argmax(spec.values))]
    return [
        f"spectral integral = {integrate(spec):.6g} MHz "
        f"(closed form {mixing.gamma_mix(mp).value_mhz:.6g} MHz)",
        f"peak at {peak:.4g} meV = {peak / kt:.4g} kT",
    ]


def cmd_extract_eta(cfg: RunConfig, args, out: Path) -> list[str]:
    series = mixing.MixSeries.from_csv(cfg.require_path("mix_csv"))
    fit = mixing.extract_eta(series, units.ghz_to_mev(cfg["delta_xy_ghz"]))
    return [
        f"eta = {fit.eta_mhz:.6g} +- {fit.sigma_mhz:.3g} MHz/meV^3 "
        f"({fit.n_points} points)",
        f"eta^2 = {fit.eta_sq:.6g} +- {fit.sigma_eta_sq:.3g}",
    ]


def cmd_infer_delta(cfg: RunConfig, args, out: Path) -> list[str]:
    model = cfg.model()
    so, target = cfg.spin_orbit(), cfg.target_band()
    f0 = model.calibrated_overlap(0.0)
    step = args.grid_step or 1.0
    raw = inference.infer_delta(so, f0, target, exclusion_floor=0.0,
                                sweep=(20.0, 600.0, step))
    found = raw.clip_below(cfg["exclusion_floor_mev"])
    _intervals_csv(out / "delta_intervals.csv", found,
                   "gap intervals consistent with the measured direct rate")
    lines = [
        f"target = {target.value:g} MHz in [{target.lo:g}, {target.hi:g}]",
        "raw intervals (meV): "
        + (", ".join(f"[{a:.1f}, {b:.1f}]" for a, b in raw) or "none"),
        f"after {cfg['exclusion_floor_mev']:g} meV exclusion: "
        + (", ".join(f"[{a:.1f}, {b:.1f}]" for a, b in found) or "none"),
    ]
    if found.is_empty:
        raise EmptyResultError("\n".join(lines))
    return lines


def cmd_infer_omega(cfg: RunConfig, args, out: Path) -> list[str]:
    model = cfg.model()
    so, pc, ls = cfg.spin_orbit(), cfg.phonon_coupling(), cfg.level_spacings()
    target = cfg.ratio_band()
    found = inference.infer_omega(so, pc, model, ls, target)
    _intervals_csv(out / "omega_interval.csv", found,
                   "acoustic-cutoff interval consistent with the measured "
                   "rate ratio")
    lines = [f"ratio target = {target.value:g} in [{target.lo:g}, "
             f"{target.hi:g}]"]
    if found.is_empty:
        ceiling = inference.asymptotic_ratio(
            pc, model.calibrated_overlap(0.0), ls)
        lines.append(f"no cutoff reaches the target; asymptotic ratio at "
                     f"Delta = {ls.delta:g} meV is {ceiling:.4g}")
        raise EmptyResultError("\n".join(lines))
    lines.append("cutoff interval (meV): "
                 + ", ".join(f"[{a:.2f}, {b:.2f}]" for a, b in found))
    return lines


def cmd_lowt_error(cfg: RunConfig, args, out: Path) -> list[str]:
    model = cfg.model()
    so, pc, ls = cfg.spin_orbit(), cfg.phonon_coupling(), cfg.level_spacings()
    t = cfg["temperature_k"]
    step = args.grid_step or 5.0
    errs_d = inference.lowT_error_map(so, pc, model, ls, t, axis="delta",
                                      lo=300.0, hi=450.0, step=step)
    errs_o = inference.lowT_error_map(so, pc, model, ls, t, axis="omega",
                                      lo=60.0, hi=110.0, step=step)
    _atomic_grid_csv(out / "lowt_error_vs_delta.csv", errs_d,
                     f"relative zero-temperature-limit error at T = {t:g} K",
                     "delta_meV,relative_error")
    _atomic_grid_csv(out / "lowt_error_vs_omega.csv", errs_o,
                     f"relative zero-temperature-limit error at T = {t:g} K",
                     "omega_cutoff_meV,relative_error")
    return [
        f"max error vs gap in [300, 450] meV: {float(np.max(errs_d.values)):.3e}",
        f"max error vs cutoff in [60, 110] meV: {float(np.max(errs_o.values)):.3e}",
    ]


def _lifetime_rows(cfg: RunConfig, temperatures) -> inference.LifetimeCurves:
    model = cfg.model()
    return inference.lifetime_curves(
        cfg.spin_orbit(), cfg.phonon_coupling(), model, cfg.level_spacings(),
        cfg.g_rad(), cfg.ht_params(), temperatures,
        epsilons=cfg["epsilon_list"])


def _curves_csv(path: Path, curves: inference.LifetimeCurves,
                header: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    os.close(fd)
    try:
        curves.to_csv(tmp, header_comment=header)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cmd_lifetime(cfg: RunConfig, args, out: Path) -> list[str]:
    t = cfg["temperature_k"]
    curves = _lifetime_rows(cfg, [t])
    _curves_csv(out / "lifetimes.csv", curves,
                f"predicted lifetimes at T = {t:g} K")
    lines = []
    for tt, cls, eps, tau in curves.rows():
        lines.append(f"tau({cls}, eps = {eps:g}) = {tau:.6g} ns at "
                     f"T = {tt:g} K")
    return lines


def cmd_fit_mott_seitz(cfg: RunConfig, args, out: Path) -> list[str]:
    data = inference.LifetimeSeries.from_csv(cfg.require_path("lifetime_csv"))
    fit = inference.fit_mott_seitz(data.select("ms0"), cfg.g_rad(),
                                   cfg["tau0_ns"])
    temps = data.select("ms0").temperatures_k
    grid = np.linspace(float(temps[0]), float(temps[-1]), 101)
    taus = [inference._ms_tau(fit.nu0_mhz, fit.s, fit.delta_e_ev,
                              np.array([t]))[0] for t in grid]
    curve = GridFunction(float(grid[0]), float(grid[1] - grid[0]),
                         np.asarray(taus))
    _atomic_grid_csv(out / "mott_seitz_curve.csv", curve,
                     "fitted thermal-quenching lifetime curve",
                     "temperature_K,tau_ns")
    return [
        f"activation energy = {fit.delta_e_ev:.6g} +- "
        f"{fit.sigma_delta_e_ev:.3g} eV",
        f"prefactor s = {fit.s:.6g} +- {fit.sigma_s:.3g}",
        f"base rate nu0 = {fit.nu0_mhz:.6g} MHz, residual rms = "
        f"{fit.residual_rms:.3g} sigma units ({fit.n_points} points)",
    ]


def cmd_sensitivity(cfg: RunConfig, args, out: Path) -> list[str]:
    model = cfg.model()
    so, pc, ls = cfg.spin_orbit(), cfg.phonon_coupling(), cfg.level_spacings()
    full = inference.isc_sensitivity(so, pc, model, ls, h=2.0)
    half = inference.isc_sensitivity(so, pc, model, ls, h=1.0)
    return [
        f"averaged-crossing-rate sensitivity at Delta = {ls.delta:g} meV: "
        f"{full:.6g} MHz/meV (positive = grows as the gap shrinks)",
        f"step-halving check: {half:.6g} MHz/meV",
    ]


def cmd_sweep(cfg: RunConfig, args, out: Path) -> list[str]:
    if args.sweep_command != "lifetime":
        raise ConfigError(
            f"sweep supports the 'lifetime' command, got "
            f"{args.sweep_command!r}")
    if args.axis != "T":
        raise ConfigError(f"sweep supports --axis T, got {args.axis!r}")
    if args.step_value <= 0 or args.to_value < args.from_value:
        raise ConfigError("sweep needs --from <= --to and --step > 0")
    n = int(math.floor((args.to_value - args.from_value) / args.step_value + 1e-9))
    temps = args.from_value + args.step_value * np.arange(n + 1)
    curves = _lifetime_rows(cfg, temps)
    _curves_csv(out / "lifetime_vs_T.csv", curves,
                f"predicted lifetimes, T = {args.from_value:g} .. "
                f"{args.to_value:g} K step {args.step_value:g} K")
    return [
        f"swept {temps.size} temperatures x "
        f"{len(cfg['epsilon_list'])} epsilon values x 2 spin classes "
        f"= {len(curves)} rows",
    ]


_COMMANDS = {
    "psb-build": cmd_psb_build,
    "deconvolve": cmd_deconvolve,
    "rate-a1": cmd_rate_a1,
    "rate-e12": cmd_rate_e12,
    "ratio": cmd_ratio,
    "mix": cmd_mix,
    "mix-spectral": cmd_mix_spectral,
    "extract-eta": cmd_extract_eta,
    "infer-delta": cmd_infer_delta,
    "infer-omega": cmd_infer_omega,
    "lowt-error": cmd_lowt_error,
    "lifetime": cmd_lifetime,
    "fit-mott-seitz": cmd_fit_mott_seitz,
    "sensitivity": cmd_sensitivity,
    "sweep": cmd_sweep,
}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True,
                        help="config file path, or 'default' for the "
                             "packaged example configuration")
    common.add_argument("--out", default="./out", help="output directory")
    common.add_argument("--grid-step", type=float, default=None,
                        metavar="MEV",
                        help="override the sweep/spectral grid step in meV")
    common.add_argument("--quiet", action="store_true",
                        help="suppress stdout (files are still written)")
    ap = argparse.ArgumentParser(
        prog="nvisc",
        description="Crossing-rate, sideband and mixing analyses driven by "
                    "a key=value config; emits CSVs plus summary.txt.")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")
    for name in sorted(_COMMANDS):
        if name == "sweep":
            continue
        sub.add_parser(name, parents=[common])
    sw = sub.add_parser("sweep", parents=[common])
    sw.add_argument("sweep_command", help="command to sweep (only: lifetime)")
    sw.add_argument("--axis", default="T", help="sweep axis (only: T)")
    sw.add_argument("--from", dest="from_value", type=float, default=300.0,
                    help="sweep start")
    sw.add_argument("--to", dest="to_value", type=float, default=700.0,
                    help="sweep end")
    sw.add_argument("--step", dest="step_value", type=float, default=25.0,
                    help="sweep step")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        body = _COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyResultError as exc:
        summary = _summary_text(args, ["inference returned no interval:",
                                       str(exc)])
        _atomic_text(Path(args.out) / "summary.txt", summary)
        if not args.quiet:
            print(summary, end="")
        return EXIT_EMPTY
    except (ValueError, ArithmeticError, np.linalg.LinAlgError,
            psb.DeconvolutionError) as exc:
        print(f"numerical error in {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    summary = _summary_text(args, body)
    _atomic_text(out / "summary.txt", summary)
    if not args.quiet:
        print(summary, end="")
    return EXIT_OK


def _summary_text(args, body: list[str]) -> str:
    trailing = getattr(args, "sweep_command", None)
    lines = [f"command: {args.command}"
             + (f" {trailing}" if trailing else ""),
             f"config: {args.config}", _UNIT_NOTE]
    lines.extend(body)
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    sys.exit(main())
