import json

import numpy as np
import pytest

from siplab import sampling
from siplab.errors import UnsupportedModelError
from siplab.norms import (
    FiniteSupportElement,
    LpNorm,
    SumSpace,
    SumStream,
    default_mixed_block,
    finite_difference_gradient,
)
from siplab.sip import axioms_check, sip_eval, sip_sum_eval


def test_pairing_with_itself_is_norm_squared():
    m = LpNorm(3, 2)
    x = np.array([1.0, 0.0])
    assert sip_eval(x, x, m) == pytest.approx(1.0, abs=1e-15)


def test_pairing_closed_form_l3_zero():
    m = LpNorm(3, 2)
    x, y = np.array([1.0, -1.0]), np.array([1.0, 1.0])
    v = sip_eval(x, y, m)
    assert v == pytest.approx(0.0, abs=1e-15)
    # independent route: ||y|| times the finite-difference functional at y
    fd = finite_difference_gradient(y, m)
    assert m.norm(y) * float(fd @ x) == pytest.approx(v, abs=1e-6)


def test_pairing_against_unit_coordinate_reads_coordinate():
    m = LpNorm(2.7, 3)
    x = np.array([0.37, -1.4, 0.9])
    assert sip_eval(x, np.array([1.0, 0.0, 0.0]), m) == pytest.approx(x[0], rel=1e-14)


def test_pairing_zero_second_argument_is_zero():
    m = LpNorm(3, 2)
    assert sip_eval([1.0, 2.0], [0.0, 0.0], m) == 0.0
    ss = SumSpace(3.0, (SumStream(LpNorm(3, 2), 4),))
    z = FiniteSupportElement({(0, 1): [1.0, 1.0]})
    assert sip_sum_eval(z, FiniteSupportElement({}), ss) == 0.0


def test_second_slot_homogeneity_negative_lambda():
    m = LpNorm(3, 3)
    rng = sampling.rng_from_seed(5)
    x = sampling.sample_scaled(rng, 3)
    y = sampling.sample_scaled(rng, 3)
    base = sip_eval(x, y, m)
    for lam in (-2.0, -0.5, 0.25, 3.0):
        assert sip_eval(x, lam * y, m) == pytest.approx(lam * base, rel=1e-12, abs=1e-14)


def test_pairing_not_symmetric_witness():
    m = LpNorm(3, 2)
    x, y = np.array([1.0, 1.0]), np.array([1.0, 0.0])
    assert abs(sip_eval(x, y, m) - sip_eval(y, x, m)) > 0.1


def test_sampled_asymmetry_exists_in_l3():
    m = LpNorm(3, 3)
    rng = sampling.rng_from_seed(17)
    found = False
    for _ in range(100):
        x = sampling.sample_scaled(rng, 3)
        y = sampling.sample_scaled(rng, 3)
        if abs(sip_eval(x, y, m) - sip_eval(y, x, m)) > 0.1:
            found = True
            break
    assert found


def test_sum_pairing_single_unit_block():
    ss = SumSpace(3.0, (SumStream(LpNorm(3, 1), 2),))
    x = FiniteSupportElement({(0, 0): [1.0], (0, 1): [1.0]})
    y = FiniteSupportElement({(0, 0): [1.0]})
    assert sip_sum_eval(x, y, ss) == pytest.approx(1.0, abs=1e-14)


def test_sum_pairing_sip4():
    ss = SumSpace(2.5, (SumStream(LpNorm(3, 2), None), SumStream(LpNorm(1.5, 3), None)))
    rng = sampling.rng_from_seed(23)
    for _ in range(25):
        z = sampling.sample_element(rng, ss)
        assert sip_sum_eval(z, z, ss) == pytest.approx(ss.norm(z) ** 2, rel=1e-12)


def test_sum_pairing_matches_flattening_oracle():
    ss = SumSpace(3.0, (SumStream(LpNorm(3, 2), 4),))
    flat = LpNorm(3.0, 8)

    def flatten(z):
        v = np.zeros(8)
        for (_, i), blk in z.entries.items():
            v[2 * i:2 * i + 2] = blk
        return v

    rng = sampling.rng_from_seed(3)
    worst = 0.0
    for _ in range(300):
        x = sampling.sample_element(rng, ss, max_block=4)
        y = sampling.sample_element(rng, ss, max_block=4)
        worst = max(worst, abs(sip_sum_eval(x, y, ss) - sip_eval(flatten(x), flatten(y), flat)))
    assert worst <= 1e-10


def test_sip_eval_dispatches_to_sum():
    ss = SumSpace(3.0, (SumStream(LpNorm(3, 2), 2),))
    x = FiniteSupportElement({(0, 0): [1.0, 0.5]})
    assert sip_eval(x, x, ss) == pytest.approx(ss.norm(x) ** 2, rel=1e-13)


def test_axioms_check_residual_ladder():
    # Euclidean pairing satisfies everything to rounding
    rep = axioms_check(LpNorm(2.0, 3), 1000, seed=1)
    assert rep.worst_residual <= 1e-9
    rep = axioms_check(LpNorm(1.5, 3), 1000, seed=1)
    assert rep.worst_residual <= 1e-7
    rep = axioms_check(default_mixed_block(), 1000, seed=1)
    assert rep.worst_residual <= 1e-6
    assert rep.path == "closed-form"
    assert set(rep.axioms) == {
        "sip1_first_slot_linearity",
        "sip2_second_slot_homogeneity",
        "sip3_cauchy_schwarz",
        "sip4_norm_compatibility",
    }


def test_axioms_check_reports_witnesses_and_serialises():
    rep = axioms_check(LpNorm(3.0, 2), 50, seed=9, tol=1e-8)
    doc = rep.to_doc()
    json.dumps(doc)  # JSON-clean
    for entry in doc["axioms"].values():
        assert "worst_residual" in entry and "witness" in entry
    assert doc["passed"] is True


def test_axioms_check_deterministic():
    a = axioms_check(default_mixed_block(), 200, seed=4).to_doc()
    b = axioms_check(default_mixed_block(), 200, seed=4).to_doc()
    assert a == b


def test_axioms_check_on_sum_space():
    ss = SumSpace(3.0, (SumStream(LpNorm(3, 2), 4),))
    rep = axioms_check(ss, 300, seed=2)
    assert rep.worst_residual <= 1e-9
    assert rep.path.startswith("sum-formula")


def test_non_smooth_rejected():
    class Fake(LpNorm):
        smooth = False

    with pytest.raises(UnsupportedModelError):
        sip_eval([1.0], [1.0], Fake(2.0, 1))
