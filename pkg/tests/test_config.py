import math

import pytest
from hypothesis import given, settings, strategies as st

from phonon_laser import config as cfgmod
from phonon_laser.errors import ValidationError

finite = st.floats(min_value=1e-30, max_value=1e30, allow_nan=False, allow_infinity=False)


def test_units_convert_to_si():
    cfg = cfgmod.parse_text("""
[mechanics]
omega_m = 40 MHz
m_eff = 5e-11 kg
[pump]
power = 19 uW
[device]
wavelength = 1550 nm
radius = 31.5 um
temperature = 300 K
""")
    assert cfg.get("mechanics", "omega_m")[0] == pytest.approx(2 * math.pi * 40e6, rel=1e-15)
    assert cfg.get("pump", "power") == pytest.approx(19e-6, rel=1e-15)
    assert cfg.get("device", "wavelength") == pytest.approx(1550e-9, rel=1e-15)
    assert cfg.get("device", "radius") == pytest.approx(31.5e-6, rel=1e-15)


@pytest.mark.parametrize("text,key", [
    ("[pump]\npowr = 1 uW\n", "pump.powr"),
    ("[pump]\npower = 1\n", "pump.power"),
    ("[pump]\npower = 1 furlong\n", "pump.power"),
    ("[mechanics]\nq_mech = 1e3 Hz\n", "mechanics.q_mech"),
    ("[sim]\ndecimation = 2.5\n", "sim.decimation"),
    ("[nonsense]\nx = 1\n", "nonsense"),
])
def test_bad_entries_name_the_key(text, key):
    with pytest.raises(ValidationError) as err:
        cfgmod.parse_text(text)
    assert err.value.key == key


@pytest.mark.parametrize("name", ["paper_device.cfg", "gain_tuning.cfg"])
def test_bundled_configs_round_trip(name):
    cfg = cfgmod.load(name)
    assert cfgmod.parse_text(cfgmod.echo(cfg)) == cfg


@settings(max_examples=80, deadline=None)
@given(
    omega=st.lists(finite, min_size=1, max_size=4),
    power=finite,
    q=finite,
    seed=st.integers(0, 2 ** 63),
    noise=st.booleans(),
    branch=st.sampled_from(["blue", "red"]),
)
def test_echo_round_trips_exactly(omega, power, q, seed, noise, branch):
    cfg = cfgmod.RunConfig({
        "run": {"seed": seed},
        "mechanics": {"omega_m": tuple(omega), "q_mech": (q,)},
        "pump": {"power": power, "branch": branch},
        "sim": {"noise": noise},
    })
    assert cfgmod.parse_text(cfgmod.echo(cfg)) == cfg


def test_overrides():
    cfg = cfgmod.apply_overrides(cfgmod.load("paper_device.cfg"), ["pump.power=20 uW", "run.seed=4"])
    assert cfg.get("pump", "power") == pytest.approx(20e-6)
    assert cfg.get("run", "seed") == 4
    with pytest.raises(ValidationError):
        cfgmod.apply_overrides(cfg, ["nodot=1"])


def test_missing_file():
    with pytest.raises(ValidationError) as err:
        cfgmod.load("/nonexistent/none.cfg")
    assert err.value.key == "config"
