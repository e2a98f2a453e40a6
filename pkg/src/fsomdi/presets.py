"""Named weather, adaptive-optics and decoy parameter sets."""

from __future__ import annotations

from .atmosphere import TurbulenceProfile
from .decoy import DecoySettings
from .errors import InputDomainError
from .polchannel import NO_AO, AoProfile

WEATHER = {
    "clear": TurbulenceProfile(A=1.7e-14, v=21.0, alpha_atm=0.004, label="clear"),
    "overcast": TurbulenceProfile(A=50e-14, v=25.0, alpha_atm=0.010, label="overcast"),
    "hazy": TurbulenceProfile(A=100e-14, v=30.0, alpha_atm=0.020, label="hazy"),
}
WEATHER_ALIASES = {"haze": "hazy"}

AO = {
    "none": NO_AO,
    "mild": AoProfile(rho_trk=0.80, kappa_w=0.95, kappa_phi=0.80, name="mild"),
    "medium": AoProfile(rho_trk=0.50, kappa_w=0.80, kappa_phi=0.60, name="medium"),
    "strong": AoProfile(rho_trk=0.20, kappa_w=0.60, kappa_phi=0.40, name="strong"),
}

DECOY = {"decoy": DecoySettings()}


def available() -> dict[str, list[str]]:
    return {"weather": sorted(WEATHER) + sorted(WEATHER_ALIASES), "ao": sorted(AO), "decoy": sorted(DECOY)}


def _unknown(kind: str, name: str, names) -> InputDomainError:
    return InputDomainError(f"unknown {kind} preset {name!r}; available: {', '.join(sorted(names))}")


def weather(name: str) -> TurbulenceProfile:
    key = WEATHER_ALIASES.get(name.lower(), name.lower())
    if key not in WEATHER:
        raise _unknown("weather", name, list(WEATHER) + list(WEATHER_ALIASES))
    return WEATHER[key]


def ao(name: str) -> AoProfile:
    key = name.lower()
    if key not in AO:
        raise _unknown("AO", name, AO)
    return AO[key]


def load_presets(name: str) -> TurbulenceProfile | AoProfile | DecoySettings:
    """Look a preset up by name across all kinds.

    The AO level "strong" shares no name with a weather label, so the lookup
    is unambiguous. ``"ao:strong"``-style prefixes are also accepted.
    """
    kind, _, key = name.partition(":") if ":" in name else ("", "", name)
    key = key.lower()
    tables = {"weather": WEATHER, "ao": AO, "decoy": DECOY}
    if kind:
        if kind not in tables:
            raise InputDomainError(f"unknown preset kind {kind!r}; available: {', '.join(tables)}")
        if kind == "weather":
            return weather(key)
        if key not in tables[kind]:
            raise _unknown(kind, key, tables[kind])
        return tables[kind][key]
    key = WEATHER_ALIASES.get(key, key)
    for table in tables.values():
        if key in table:
            return table[key]
    everything = [n for t in tables.values() for n in t] + list(WEATHER_ALIASES)
    raise _unknown("", name, everything)
