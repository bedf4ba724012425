import math
import pytest
from treemg.exceptions import ContractError
from treemg.omega import TWO_PHASE_OMEGA, OmegaKind, OmegaPolicy, omega_of, two_phase_schedule
from treemg.spacetree import Vertex, VertexPayload


def _vertex(level, index, succ):
    vertex = Vertex(level, index, VertexPayload(1), boundary=False)
    vertex.succ = succ
    return vertex


def test_policy_kinds():
    coarse = _vertex(1, (1, 1), 2)
    fine = _vertex(3, (1, 1), 0)
    assert omega_of(OmegaPolicy(OmegaKind.JACOBI), fine, 1) == pytest.approx(0.8)
    assert omega_of(OmegaPolicy(OmegaKind.JACOBI), coarse, 1) == 0
    assert omega_of(OmegaPolicy(OmegaKind.UNDAMPED), coarse, 1) == pytest.approx(0.8)
    assert omega_of(OmegaPolicy(OmegaKind.EXPONENTIAL), coarse, 1) == pytest.approx(0.8**3)
    assert omega_of(OmegaPolicy(OmegaKind.EXPONENTIAL), fine, 1) == pytest.approx(0.8)


def test_policy_l_grid():
    policy = OmegaPolicy(OmegaKind.L_GRID, grids=1)
    assert omega_of(policy, _vertex(2, (1, 1), 1), 1) == pytest.approx(0.8)
    assert omega_of(policy, _vertex(1, (1, 1), 2), 1) == 0


def test_policy_transition():
    policy = OmegaPolicy(OmegaKind.TRANSITION, omega_s=0.5)
    coarse = _vertex(1, (1, 1), 2)
    # starts undamped and approaches the exponential policy
    assert omega_of(policy, coarse, 1) == pytest.approx(1.0)
    assert omega_of(policy, coarse, 2) == pytest.approx(0.5**1.5)
    assert abs(omega_of(policy, coarse, 10_000) - 0.5**3) < 1e-3


def test_hb_mask():
    policy = OmegaPolicy(OmegaKind.UNDAMPED, hb_mask=True)
    c_point = _vertex(2, (3, 6), 0)
    f_point = _vertex(2, (3, 4), 0)
    assert c_point.c_point and not f_point.c_point
    assert omega_of(policy, c_point, 1) == 0
    assert omega_of(policy, f_point, 1) == pytest.approx(0.8)
    # c-points of the coarsest compute level keep their update
    assert omega_of(policy, c_point, 1, min_level=2) == pytest.approx(0.8)


def test_complex_weight():
    policy = OmegaPolicy(OmegaKind.EXPONENTIAL, omega_s=0.5j)
    assert omega_of(policy, _vertex(1, (1,), 1), 1) == pytest.approx(-0.25)


def test_two_phase_schedule():
    assert TWO_PHASE_OMEGA == pytest.approx(complex(0.01 * math.sqrt(3), -0.01))
    assert two_phase_schedule(1) == TWO_PHASE_OMEGA
    assert two_phase_schedule(2) == pytest.approx(complex(-0.01 * math.sqrt(3), -0.01))
    assert two_phase_schedule(3) == TWO_PHASE_OMEGA
    policy = OmegaPolicy(OmegaKind.UNDAMPED, two_phase=True)
    assert policy.smoothing_weight(2) == two_phase_schedule(2)
    assert omega_of(policy, _vertex(1, (1,), 0), 4) == two_phase_schedule(4)


def test_iteration_counter():
    with pytest.raises(ContractError) as e_info:
        two_phase_schedule(0)
    assert str(e_info.value) == "iteration counter starts at 1, got 0"
    with pytest.raises(ContractError) as e_info:
        omega_of(OmegaPolicy(), _vertex(1, (1,), 0), 0)
    assert str(e_info.value) == "iteration counter starts at 1, got 0"
