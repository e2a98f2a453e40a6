import csv
import io
import json
import math
from dataclasses import replace

import pytest

from fsomdi import cli, pipeline
from fsomdi.decoy import DecoySettings
from fsomdi.errors import InputDomainError, NumericalError
from fsomdi.pipeline import COLUMNS, LinkConfig, SweepSpec, emit, run_point, run_sweep
from fsomdi.polchannel import AoProfile
from fsomdi.presets import load_presets
from fsomdi.security import loss_only_rate

HEADER = ("distance_km,weather,aperture_m,elevation_deg,ao,kappa,sigma_R2,regime,lambda_eff,r2_eff,"
          "sigma_drift2_m2,eta_eff,eta_total,Q_Z,E_Z,e_X11,skr_bits_per_pulse,skr_decoy_bits_per_pulse")


# -- presets ----------------------------------------------------------------

def test_presets_table_values():
    clear = load_presets("clear")
    assert (clear.A, clear.v, clear.alpha_atm) == (1.7e-14, 21.0, 0.004)
    assert (load_presets("overcast").A, load_presets("overcast").v, load_presets("overcast").alpha_atm) == (
        50e-14, 25.0, 0.010)
    assert load_presets("haze") is load_presets("hazy")
    assert load_presets("hazy").A == 100e-14 and load_presets("hazy").alpha_atm == 0.020
    med = load_presets("medium")
    assert isinstance(med, AoProfile) and (med.rho_trk, med.kappa_w, med.kappa_phi) == (0.50, 0.80, 0.60)
    assert (load_presets("ao:mild").kappa_w, load_presets("strong").rho_trk) == (0.95, 0.20)
    d = load_presets("decoy")
    assert isinstance(d, DecoySettings) and (d.mu, d.nu, d.p_mu, d.p_Z) == (0.5, 0.1, 0.8, 0.9)


def test_unknown_preset_lists_available():
    with pytest.raises(InputDomainError, match="available: .*clear.*"):
        load_presets("bogus")


# -- single points ----------------------------------------------------------

def test_turbulence_free_point_is_loss_only():
    row = run_point(LinkConfig(cn2_override=0.0))
    assert row.lambda_eff == 0.0 and row.r2_eff == pytest.approx(1.0, abs=1e-12)
    assert row.skr_bits_per_pulse == pytest.approx(loss_only_rate(row.eta_total), rel=1e-12)


def test_reference_point_regression():
    row = run_point(LinkConfig(distance_km=10.0, weather="clear", aperture_m=0.6, elevation_deg=85.0, ao="medium"))
    assert row.regime == "weak" and row.skr_bits_per_pulse > 0
    # frozen from this implementation
    assert row.skr_bits_per_pulse == pytest.approx(0.10041060310629016, rel=1e-8)
    assert row.lambda_eff == pytest.approx(0.1298415127299231, rel=1e-8)


def test_cutoff_configuration_gives_zero():
    row = run_point(LinkConfig(distance_km=150.0, weather="overcast", ao="none"))
    assert row.E_Z > 0.15 and row.skr_bits_per_pulse == 0.0


def test_strong_point():
    row = run_point(LinkConfig(cn2_override=1e-11, decoy=True))
    assert row.regime == "strong"
    assert (row.lambda_eff, row.r2_eff, row.skr_bits_per_pulse, row.skr_decoy_bits_per_pulse) == (1.0, 0.0, 0.0, 0.0)


def test_stage_is_named_in_errors():
    with pytest.raises(InputDomainError, match=r"\[atmosphere\]"):
        run_point(LinkConfig(weather="bogus"))
    with pytest.raises(InputDomainError):
        LinkConfig(distance_km=-1.0)


def test_hom_flag_lowers_or_keeps_rate():
    base = run_point(LinkConfig(distance_km=5.0))
    hom = run_point(LinkConfig(distance_km=5.0, hom=True))
    assert hom.e_X11 >= base.e_X11 and hom.skr_bits_per_pulse <= base.skr_bits_per_pulse


# -- sweeps -----------------------------------------------------------------

def test_single_point_sweep_equals_point():
    rows = run_sweep(SweepSpec(distances_km=(12.0,)))
    assert rows == [run_point(LinkConfig(distance_km=12.0))]


def test_empty_sweep_rejected():
    with pytest.raises(InputDomainError):
        SweepSpec(distances_km=())
    with pytest.raises(InputDomainError):
        SweepSpec(distances_km=(1.0,), weathers=())
    with pytest.raises(InputDomainError):
        SweepSpec(distances_km=(0.0,))


def test_sweep_order_and_failures_recorded():
    spec = SweepSpec(distances_km=(5.0, 10.0), apertures_m=(0.5, -0.1), weathers=("clear", "hazy"))
    rows = run_sweep(spec)
    keys = [(r.weather, r.aperture_m, r.distance_km) for r in rows]
    assert keys == sorted(keys, key=lambda k: (("clear", "hazy").index(k[0]), -k[1], k[2]))
    bad = [r for r in rows if r.aperture_m < 0]
    assert len(bad) == 4 and all("aperture" in r.error for r in bad)
    assert all(not r.error for r in rows if r.aperture_m > 0)
    text = emit(rows)
    assert text.splitlines()[0] == HEADER + ",error"


def test_row_invariants():
    rows = run_sweep(SweepSpec(distances_km=(2.0, 30.0, 150.0), weathers=("clear", "overcast"),
                               ao_names=("none", "strong"), decoy=True))
    for r in rows:
        assert 0 <= r.lambda_eff <= 1 and 0 <= r.r2_eff <= 1 and 0 <= r.eta_total <= 1
        assert r.skr_bits_per_pulse >= 0 and r.skr_decoy_bits_per_pulse >= 0
        assert r.regime == ("weak" if r.sigma_R2 < 1 else "medium" if r.sigma_R2 < 5 else "strong")
        for c in COLUMNS:
            v = getattr(r, c)
            if isinstance(v, float):
                assert math.isfinite(v)


# -- emission ---------------------------------------------------------------

def test_emit_empty_and_header():
    assert emit([]) == HEADER + "\n"


def test_emit_round_trips(tmp_path):
    rows = [run_point(LinkConfig(decoy=True))]
    path = tmp_path / "out.json"
    emit(rows, "json", path)
    data = json.loads(path.read_text())
    assert data["columns"] == list(COLUMNS)
    for c in COLUMNS:
        assert data["rows"][0][c] == getattr(rows[0], c)
    parsed = next(csv.DictReader(io.StringIO(emit(rows))))
    assert float(parsed["lambda_eff"]) == rows[0].lambda_eff
    assert parsed["regime"] == "weak"


def test_emit_bad_format_and_path(tmp_path):
    with pytest.raises(InputDomainError):
        emit([], "xml")
    with pytest.raises(OSError):
        emit([], "csv", tmp_path / "missing" / "x.csv")


# -- configuration files ----------------------------------------------------

def test_read_config(tmp_path):
    p = tmp_path / "link.ini"
    p.write_text(
        "[geometry]\ndistance_km = 7\naperture_m = 0.7\n[turbulence]\nweather = overcast\nkappa = 2\n"
        "[ao]\nprofile = strong\n[detection]\nhom = yes\n[decoy]\nenabled = true\nmu = 0.6\n"
        "[sweep]\ndistances_km = 1:3:1, 10\nweathers = clear hazy\n"
    )
    cfg, sweep = pipeline.read_config(p)
    assert (cfg.distance_km, cfg.aperture_m, cfg.weather, cfg.kappa, cfg.ao, cfg.hom, cfg.decoy) == (
        7.0, 0.7, "overcast", 2.0, "strong", True, True)
    assert cfg.decoy_settings.mu == 0.6
    assert sweep["distances_km"] == (1.0, 2.0, 3.0, 10.0) and sweep["weathers"] == ("clear", "hazy")
    p.write_text("[bogus]\nx = 1\n")
    with pytest.raises(InputDomainError):
        pipeline.read_config(p)


# -- validation -------------------------------------------------------------

def test_validate_calm_passes_and_corruption_fails():
    cfg = LinkConfig(cn2_override=0.0)
    rep, code = pipeline.validate(cfg, 100_000, 42)
    assert code == 0 and rep["passed"]
    rep, code = pipeline.validate(cfg, 100_000, 42, lambda_offset=0.05)
    assert code == pipeline.EXIT_VALIDATION and rep["failures"] == ["lambda"]


# -- command line -----------------------------------------------------------

def test_cli_point_and_flags_override_config(tmp_path, capsys):
    p = tmp_path / "c.ini"
    p.write_text("[geometry]\ndistance_km = 50\n")
    out = tmp_path / "o.csv"
    assert cli.main(["point", "--config", str(p), "--distance-km", "10", "--out", str(out)]) == 0
    row = next(csv.DictReader(out.open()))
    assert row["distance_km"] == "10.0"
    assert float(row["skr_bits_per_pulse"]) == pytest.approx(0.10041060310629016, rel=1e-8)


def test_cli_sweep_and_decoy(tmp_path):
    out = tmp_path / "s.json"
    assert cli.main(["sweep", "--distance-km", "5,10", "--weather", "clear,hazy", "--format", "json",
                     "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())["rows"]) == 4
    out = tmp_path / "d.csv"
    assert cli.main(["decoy", "--distance-km", "5", "--out", str(out)]) == 0
    assert next(csv.DictReader(out.open()))["skr_decoy_bits_per_pulse"] != ""


def test_cli_exit_codes(tmp_path, capsys, monkeypatch):
    assert cli.main(["presets"]) == 0
    assert "medium" in capsys.readouterr().out
    assert cli.main(["point", "--weather", "bogus"]) == 1
    assert "available" in capsys.readouterr().err
    assert cli.main(["point", "--distance-km", "1,2"]) == 1
    assert cli.main(["validate", "--distance-km", "10", "--samples", "20000", "--out",
                     str(tmp_path / "v.json")]) == 3

    def broken(cfg):
        raise NumericalError("quadrature stalled", 1e-3)
    monkeypatch.setattr(pipeline, "run_point", broken)
    assert cli.main(["point"]) == 2
    with pytest.raises(SystemExit):
        cli.main(["nonsense"])


def test_validate_cli_calm_passes(tmp_path):
    p = tmp_path / "calm.ini"
    p.write_text("[turbulence]\ncn2_override = 0\n")
    out = tmp_path / "v.json"
    assert cli.main(["validate", "--config", str(p), "--samples", "50000", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["passed"]


def test_sweep_parallel_matches_serial():
    spec = SweepSpec(distances_km=(3.0, 30.0), weathers=("clear", "overcast"))
    assert emit(run_sweep(spec, workers=2)) == emit(run_sweep(spec))
    assert replace(spec, seed=5).configs() == spec.configs()
