"""End-to-end link evaluation: configuration, single points, sweeps, emission.

A point runs atmosphere, polarization averaging, detection, key rate and
(optionally) decoy estimation in that order. Distances are given in km and
angles in degrees at this layer; everything below is SI.
"""

from __future__ import annotations

import configparser
import contextlib
import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from . import presets
from .atmosphere import LinkGeometry
from .channel import ChannelSetup, effective_eta, effective_polarization, resolve_channel
from .decoy import DecoySettings, evaluate_decoy
from .detection import ETA_DET, L_OPT, eta_total
from .errors import InputDomainError, NumericalError
from .oracle import validate_setup
from .security import E_MAX, F_EC, SecurityInput, evaluate, hom_visibility

COLUMNS = (
    "distance_km", "weather", "aperture_m", "elevation_deg", "ao", "kappa", "sigma_R2", "regime",
    "lambda_eff", "r2_eff", "sigma_drift2_m2", "eta_eff", "eta_total", "Q_Z", "E_Z", "e_X11",
    "skr_bits_per_pulse", "skr_decoy_bits_per_pulse",
)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_VALIDATION = 0, 1, 2, 3


@dataclass(frozen=True)
class LinkConfig:
    """One link evaluation. ``cn2_override`` replaces the HV law with a constant C_n^2."""

    distance_km: float = 10.0
    weather: str = "clear"
    aperture_m: float = 0.6
    elevation_deg: float = 85.0
    ao: str = "medium"
    kappa: float = 1.0
    wavelength_m: float = 850e-9
    w0_m: float = 0.1
    H_atm_m: float = 20_000.0
    direction: str = "uplink"
    eta_det: float = ETA_DET
    L_opt: float = L_OPT
    f: float = F_EC
    E_max: float = E_MAX
    hom: bool = False
    decoy: bool = False
    decoy_settings: DecoySettings = field(default_factory=DecoySettings)
    cn2_override: float | None = None

    def __post_init__(self):
        if not (self.distance_km > 0):
            raise InputDomainError(f"distance_km must be > 0, got {self.distance_km!r}")
        if not (0 < self.elevation_deg <= 90):
            raise InputDomainError(f"elevation_deg must lie in (0, 90], got {self.elevation_deg!r}")
        if self.kappa < 0:
            raise InputDomainError(f"kappa must be >= 0, got {self.kappa!r}")
        if self.cn2_override is not None and self.cn2_override < 0:
            raise InputDomainError("cn2_override must be >= 0")

    def geometry(self) -> LinkGeometry:
        return LinkGeometry(
            z=self.distance_km * 1e3, theta_el=math.radians(self.elevation_deg), direction=self.direction,
            w0=self.w0_m, wavelength=self.wavelength_m, aperture_a=self.aperture_m, H_atm=self.H_atm_m,
        )

    def channel(self) -> ChannelSetup:
        cn2 = None
        if self.cn2_override is not None:
            value = self.cn2_override
            cn2 = lambda h: value + 0.0 * h  # noqa: E731
        return resolve_channel(self.geometry(), presets.weather(self.weather), presets.ao(self.ao), self.kappa, cn2)


@dataclass(frozen=True)
class ResultRow:
    distance_km: float
    weather: str
    aperture_m: float
    elevation_deg: float
    ao: str
    kappa: float
    sigma_R2: float = math.nan
    regime: str = ""
    lambda_eff: float = math.nan
    r2_eff: float = math.nan
    sigma_drift2_m2: float = math.nan
    eta_eff: float = math.nan
    eta_total: float = math.nan
    Q_Z: float = math.nan
    E_Z: float = math.nan
    e_X11: float = math.nan
    skr_bits_per_pulse: float = math.nan
    skr_decoy_bits_per_pulse: float | None = None
    error: str = ""


@contextlib.contextmanager
def _stage(name: str):
    """Re-raise errors from one pipeline stage with the stage named, keeping the type."""
    try:
        yield
    except NumericalError as exc:
        raise NumericalError(f"[{name}] {exc.args[0]}", exc.achieved) from exc
    except InputDomainError as exc:
        raise InputDomainError(f"[{name}] {exc}") from exc


def run_point(cfg: LinkConfig) -> ResultRow:
    """Evaluate one configuration through every stage."""
    with _stage("atmosphere"):
        setup = cfg.channel()
    with _stage("polchannel"):
        pol = effective_polarization(setup)
    with _stage("detection"):
        e_eff = effective_eta(setup)
        e_tot = eta_total(e_eff, setup.L_atm, cfg.eta_det, cfg.L_opt)
    with _stage("security"):
        m = hom_visibility(setup.sigma_drift2, setup.sigma_drift2, setup.w_z) if cfg.hom else 1.0
        sec = evaluate(SecurityInput(pol.lambda_eff, pol.lambda_eff, pol.r2_eff, e_tot, e_tot,
                                     f=cfg.f, E_max=cfg.E_max, M_spatial=m))
    skr_decoy = None
    if cfg.decoy:
        with _stage("decoy"):
            settings = replace(cfg.decoy_settings, f=cfg.f)
            skr_decoy = evaluate_decoy(settings, pol.lambda_eff, pol.r2_eff, e_tot, setup.shape,
                                       E_max=cfg.E_max).R_decoy
    return ResultRow(
        distance_km=cfg.distance_km, weather=presets.weather(cfg.weather).label, aperture_m=cfg.aperture_m,
        elevation_deg=cfg.elevation_deg, ao=cfg.ao, kappa=cfg.kappa, sigma_R2=setup.sigma_R2,
        regime=setup.regime, lambda_eff=pol.lambda_eff, r2_eff=pol.r2_eff, sigma_drift2_m2=setup.sigma_drift2,
        eta_eff=e_eff, eta_total=e_tot, Q_Z=sec.Q_Z, E_Z=sec.E_Z, e_X11=sec.e_X11, skr_bits_per_pulse=sec.R,
        skr_decoy_bits_per_pulse=skr_decoy,
    )


# --------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepSpec:
    """Grid axes; rows come out with weather outermost and distance innermost."""

    distances_km: tuple[float, ...]
    apertures_m: tuple[float, ...] = (0.6,)
    weathers: tuple[str, ...] = ("clear",)
    elevations_deg: tuple[float, ...] = (85.0,)
    ao_names: tuple[str, ...] = ("medium",)
    decoy: bool = False
    kappa: float = 1.0
    seed: int = 0
    base: LinkConfig = field(default_factory=LinkConfig)

    def __post_init__(self):
        for name in ("distances_km", "apertures_m", "weathers", "elevations_deg", "ao_names"):
            if len(getattr(self, name)) == 0:
                raise InputDomainError(f"sweep axis {name} is empty")
        if any(d <= 0 for d in self.distances_km):
            raise InputDomainError("sweep distances must be > 0")

    def configs(self) -> list[LinkConfig]:
        grid = itertools.product(self.weathers, self.ao_names, self.elevations_deg, self.apertures_m,
                                 self.distances_km)
        return [
            replace(self.base, weather=w, ao=ao, elevation_deg=el, aperture_m=a, distance_km=d,
                    kappa=self.kappa, decoy=self.decoy)
            for w, ao, el, a, d in grid
        ]


def _safe_point(cfg: LinkConfig) -> ResultRow:
    try:
        return run_point(cfg)
    except (InputDomainError, NumericalError) as exc:
        return ResultRow(cfg.distance_km, cfg.weather, cfg.aperture_m, cfg.elevation_deg, cfg.ao, cfg.kappa,
                         error=f"{type(exc).__name__}: {exc}")


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[ResultRow]:
    """Evaluate the cartesian grid; failing points carry an error message instead of aborting."""
    configs = spec.configs()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_safe_point, configs, chunksize=max(1, len(configs) // (4 * workers))))
    return [_safe_point(c) for c in configs]


# --------------------------------------------------------------------------
# emission


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _columns(rows) -> tuple[str, ...]:
    return COLUMNS + ("error",) if any(r.error for r in rows) else COLUMNS


def to_csv(rows: list[ResultRow]) -> str:
    """CSV text; an ``error`` column is appended only when some row failed."""
    cols = _columns(rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        writer.writerow([_cell(getattr(r, c)) for c in cols])
    return buf.getvalue()


def to_json(rows: list[ResultRow]) -> str:
    cols = _columns(rows)
    records = []
    for r in rows:
        d = asdict(r)
        records.append({c: (None if isinstance(d[c], float) and not math.isfinite(d[c]) else d[c]) for c in cols})
    return json.dumps({"columns": list(cols), "rows": records}, indent=1)


def emit(rows: list[ResultRow], fmt: str = "csv", path: str | Path | None = None) -> str:
    """Serialise rows; writes to ``path`` when given and always returns the text."""
    if fmt == "csv":
        text = to_csv(rows)
    elif fmt == "json":
        text = to_json(rows)
    else:
        raise InputDomainError(f"unknown format {fmt!r}; use csv or json")
    if path is not None:
        Path(path).write_text(text)
    return text


# --------------------------------------------------------------------------
# validation against the Monte Carlo oracle


def validate(cfg: LinkConfig, n_samples: int = 1_000_000, seed: int = 42, workers: int = 1,
             lambda_offset: float = 0.0) -> tuple[dict, int]:
    """Compare closed forms with the oracle; returns ``(report, exit_code)``.

    ``lambda_offset`` shifts the closed-form lambda before comparison, which
    lets a test confirm that a wrong closed form is caught.
    """
    setup = cfg.channel()
    override = None
    if lambda_offset:
        pol = effective_polarization(setup)
        override = {"lambda": pol.lambda_eff + lambda_offset}
    report, est = validate_setup(setup, n_samples, seed, workers, override)
    report["config"] = {k: v for k, v in asdict(cfg).items() if k != "decoy_settings"}
    report["regime"] = setup.regime
    report["state_error"] = est.state_error
    return report, EXIT_OK if report["passed"] else EXIT_VALIDATION


# --------------------------------------------------------------------------
# configuration files

_KEYS = {
    "geometry": {"distance_km": float, "elevation_deg": float, "aperture_m": float, "wavelength_m": float,
                 "w0_m": float, "H_atm_m": float, "direction": str},
    "turbulence": {"weather": str, "kappa": float, "cn2_override": float},
    "ao": {"profile": str},
    "detection": {"eta_det": float, "L_opt": float, "f": float, "E_max": float, "hom": bool},
    "decoy": {"enabled": bool, "mu": float, "nu": float, "p_mu": float, "p_nu": float, "p_0": float,
              "p_Z": float, "p_X": float, "Y0": float},
    "sweep": {"distances_km": list, "apertures_m": list, "weathers": list, "elevations_deg": list, "ao": list},
}
_RENAME = {("ao", "profile"): "ao", ("decoy", "enabled"): "decoy"}


def _float_list(text: str) -> tuple:
    """Split ``"1, 2, 5"``; a ``lo:hi:step`` item expands to an inclusive range."""
    items = []
    for part in text.replace(",", " ").split():
        if ":" in part:
            lo, hi, step = (float(x) for x in part.split(":"))
            n = int(round((hi - lo) / step))
            items.extend(lo + i * step for i in range(n + 1))
        else:
            items.append(part)
    return tuple(items)


def read_config(path: str | Path) -> tuple[LinkConfig, dict]:
    """Parse an INI file into a link config and the raw ``[sweep]`` axes (possibly empty)."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    if not parser.read(path):
        raise InputDomainError(f"cannot read config file {str(path)!r}")
    link, decoy, sweep = {}, {}, {}
    for section in parser.sections():
        if section not in _KEYS:
            raise InputDomainError(f"unknown config section [{section}]; known: {', '.join(_KEYS)}")
        for key, raw in parser.items(section):
            if key not in _KEYS[section]:
                raise InputDomainError(f"unknown key {key!r} in [{section}]")
            kind = _KEYS[section][key]
            try:
                if kind is bool:
                    value = parser.getboolean(section, key)
                elif kind is list:
                    value = _float_list(raw)
                    if key not in ("weathers", "ao"):
                        value = tuple(float(v) for v in value)
                else:
                    value = kind(raw)
            except ValueError as exc:
                raise InputDomainError(f"bad value for {key} in [{section}]: {raw!r}") from exc
            if section == "sweep":
                sweep[key] = value
            elif section == "decoy" and key != "enabled":
                decoy[key] = value
            else:
                link[_RENAME.get((section, key), key)] = value
    if decoy:
        link["decoy_settings"] = DecoySettings(**decoy)
    return LinkConfig(**link), sweep


def config_fields() -> list[str]:
    return [f.name for f in fields(LinkConfig)]
