from pathlib import Path

import pytest

from twistfcs.config import RunConfig, config_from_text, load_config, parse_complex, parse_ell_range
from twistfcs.errors import ConfigError
from twistfcs.twist import Twist

ROOT = Path(__file__).resolve().parents[1]
EXAMPLES = sorted((ROOT / "configs").glob("*.yaml"))
FIXTURES = Path(__file__).parent / "fixtures"

INVALID = {
    "invalid_unknown_key.yaml": ("betta", 2),
    "invalid_odd_length.yaml": ("L", 1),
    "invalid_large_length.yaml": ("L", 1),
    "invalid_twist_missing.yaml": ("twist", 2),
    "invalid_twist_singular.yaml": ("twist", 2),
    "invalid_beta_length.yaml": ("beta", 2),
    "invalid_ell_range.yaml": ("ell", 2),
    "invalid_branch.yaml": ("branch", 2),
    "invalid_mode.yaml": ("mode", 2),
    "invalid_output_format.yaml": ("output.format", 3),
    "invalid_c.yaml": ("c", 2),
    "invalid_state.yaml": ("state", 2),
    "invalid_tolerance.yaml": ("tolerance", 2),
}


def test_examples_exist():
    assert len(EXAMPLES) >= 2


@pytest.mark.parametrize("path", EXAMPLES, ids=lambda p: p.name)
def test_every_example_config_validates(path):
    rc = load_config(path)
    assert rc.L % 2 == 0
    assert rc.twist_obj.is_generic


def test_default_config_matches_defaults():
    rc = load_config(ROOT / "configs" / "default.yaml")
    assert rc == RunConfig(ells=(0, 1, 2, 3, 4))
    assert rc.twist_obj == Twist.pauli("x")


def test_every_invalid_fixture_is_covered():
    assert {p.name for p in FIXTURES.glob("invalid_*.yaml")} == set(INVALID)


@pytest.mark.parametrize("name", sorted(INVALID))
def test_invalid_fixture_names_field_and_line(name):
    field, line = INVALID[name]
    with pytest.raises(ConfigError) as exc:
        load_config(FIXTURES / name)
    assert exc.value.field == field
    assert exc.value.line == line
    assert field in str(exc.value)


def test_overrides_win_over_file():
    rc = load_config(ROOT / "configs" / "default.yaml", L=2, ells=(0, 1), branch="both")
    assert (rc.L, rc.ell_list, rc.branches) == (2, [0, 1], [0, 1])


def test_parse_helpers():
    assert parse_complex([1, -2], "x") == 1 - 2j
    assert parse_complex(3, "x") == 3
    assert parse_complex("1+2i", "x") == 1 + 2j
    assert parse_ell_range("2..5") == (2, 3, 4, 5)
    assert parse_ell_range("3") == (3,)
    with pytest.raises(ConfigError):
        parse_ell_range("5..2")
    with pytest.raises(ConfigError):
        parse_complex(True, "x")


def test_malformed_yaml_reports_line():
    with pytest.raises(ConfigError) as exc:
        config_from_text("L: 4\nbeta: [1, 0\n")
    assert exc.value.line is not None


def test_defaults():
    rc = config_from_text("")
    assert rc.L == 4 and rc.ell_list == [0, 1, 2, 3, 4] and rc.state_index == 0 and rc.mode == "maba"
