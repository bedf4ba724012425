import math
import pytest
from treemg.config import RunConfig
from treemg.exceptions import ConfigurationError, UsageError
from treemg.omega import OmegaKind, OmegaPolicy
from treemg.problems import ChiKind

CONFIG = """
# helmholtz benchmark
problem = helmholtz
cycle = tdBPX
bpx = true
omega = transition
omega-s = 0.6
theta = 30
level = 3    # fixed grid
phi = 4, 9
chi = sin, ball
channels = 2
target = 1e-8
"""


def test_from_text():
    config = RunConfig.from_text(CONFIG)
    assert config.problem == "helmholtz"
    assert config.cycle == "tdBPX"
    assert config.level == 3
    assert config.theta == pytest.approx(math.radians(30))
    assert config.target == 1e-8
    assert config.phi_values() == [4.0, 9.0]
    assert config.chi_kinds() == [ChiKind.SIN, ChiKind.BALL]
    assert config.omega_policy() == OmegaPolicy(OmegaKind.TRANSITION, 0.6, bpx=True)
    assert not config.adaptive
    assert config.amr_config() is None
    config.validate()


def test_from_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("level = 2\nh_max=\n", encoding="utf-8")
    config = RunConfig.from_file(path)
    assert config.level == 2
    assert config.h_max is None
    assert config.cycle == "tdAdd"
    assert config.norm == "h"


def test_malformed_text():
    with pytest.raises(UsageError) as e_info:
        RunConfig.from_text("level = 2\nbpx\n")
    assert str(e_info.value) == "line 2: expected 'key = value', got 'bpx'"
    with pytest.raises(UsageError) as e_info:
        RunConfig.from_text("levels = 2\n")
    assert str(e_info.value) == "unknown option 'levels'"
    with pytest.raises(ConfigurationError) as e_info:
        RunConfig.from_text("level = two\n")
    assert str(e_info.value) == "invalid value 'two' for option 'level'"


def test_constructor_values():
    config = RunConfig({"level": 2, "omega_s": 0.5})
    assert config.omega_s == 0.5 + 0j
    with pytest.raises(ConfigurationError) as e_info:
        RunConfig({"level": "2"})
    assert str(e_info.value) == "Integer value must be int"


def test_adaptive_settings():
    config = RunConfig.from_text("h_max = 1/9\nh_min = 1/243\nbins = 10\n")
    config.validate()
    amr = config.amr_config()
    assert amr is not None
    assert amr.h_max == pytest.approx(1 / 9)
    assert amr.bin_count == 10
    assert amr.refine_fraction == 0.10


@pytest.mark.parametrize(
    "text, message",
    [
        ("", "set either a fixed level or both h_max and h_min"),
        ("level = 2\nh_max = 0.1\nh_min = 0.01", "set either a fixed level or both h_max and h_min"),
        ("h_max = 0.1", "adaptive runs need both h_max and h_min"),
        ("h_max = 0.01\nh_min = 0.1", "need 0 < h_min <= h_max, got h_min=0.1, h_max=0.01"),
        ("h_max = 0.1\nh_min = 0.09", "no level has a mesh width between h_min=0.09 and h_max=0.1"),
        ("level = 1\nmin_level = 2", "level 1 is below the coarsest compute level 2"),
        ("level = 2\nmax_sweeps = 0", "max_sweeps must be at least 1, got 0"),
        ("level = 2\ncycle = tdBPX", "tdBPX requires bpx = true"),
        ("level = 2\nbpx = yes", "tdAdd cannot realise bpx, use tdBPX"),
        ("h_max = 0.34\nh_min = 0.01\ncycle = textbookAdd", "textbookAdd is only supported on regular grids"),
        ("level = 2\ncoupling = coupled", "coupled channels need at least two channels"),
        ("level = 2\nchannels = 0", "channels must be at least 1, got 0"),
        ("level = 2\nk = 5\nphi = 25", "set either phi or k"),
        ("level = 2\nproblem = gaussian\np = 3", "gaussian scenario is only defined for p=2, got p=3"),
        ("level = 2\nomega_cg = 0.5", "omega_cg only applies to textbookAdd"),
        ("level = 2\nchi = sin, cos", "unknown right-hand side in 'sin, cos'"),
        ("level = 2\nphi = 1, x", "invalid shift in '1, x'"),
        ("level = 2\np = 5", "p must be between 1 and 4, got 5"),
        ("level = 2\ntheta = 60", "theta must be within [0, 45] degrees, got 60"),
        ("level = 2\nphi = 1, 2", "phi has 2 values for 1 channels"),
        ("level = 2\nchannels = 3\nchi = sin, ball", "chi has 2 values for 3 channels"),
        ("k = 10", "wave number 10.0 does not give kh=5/9 on a 3-partitioned grid"),
    ],
    ids=[
        "no-grid",
        "both-grids",
        "h-min-missing",
        "h-order",
        "no-level-between",
        "min-level",
        "max-sweeps",
        "td-bpx",
        "td-add-bpx",
        "textbook-adaptive",
        "coupled-one-channel",
        "channels",
        "phi-and-k",
        "gaussian-3d",
        "omega-cg",
        "chi",
        "phi",
        "p-range",
        "theta-range",
        "phi-count",
        "chi-count",
        "k-level",
    ],
)
def test_validate(text, message):
    config = RunConfig.from_text(text)
    with pytest.raises(UsageError) as e_info:
        config.validate()
    assert str(e_info.value) == message


def test_wave_number_sets_shift():
    config = RunConfig.from_text("level = 2\nk = 15")
    assert config.phi_values() == [225.0]


def test_wave_number_sets_level():
    config = RunConfig.from_text("k = 45")
    config.validate()
    assert config.grid_level == 4
    assert RunConfig.from_text("k = 45\nlevel = 2").grid_level == 2
    assert RunConfig.from_text("k = 45\nh_max = 0.1\nh_min = 0.01").grid_level is None


def test_options_have_help():
    options = RunConfig.options()
    assert "omega_cg" in options
    assert all(option.help for option in options.values())
