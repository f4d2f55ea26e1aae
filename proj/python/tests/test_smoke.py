import math

import pytest

import univconf as uc


def test_eq13_certifies_with_unit_worst_case():
    cert = uc.certify(uc.eq13_predictor(4), "rand-e")
    assert cert.passed
    assert abs(cert.worst_value - 1.0) < 1e-9
    assert abs(cert.witness_distribution[1] - 0.2) < 1e-6


def test_relative_deviation_of_laplace():
    e = uc.laplace_predictor(10)
    ex = uc.relative_deviation(e)
    seq = [0] * 10 + [1]
    assert abs(e(seq) / ex(seq) - (1 + 1 / 10) ** 10) < 1e-9
    assert uc.certify(ex, "exch-e").passed


def test_theorem2_refutation():
    assert abs(uc.theorem2_value_at_zero(9, 0.4) - 0.4 * (10 / 9) ** 9) < 1e-12
    cert = uc.theorem2_certificate(9, 0.4)
    assert cert.verdict == uc.Verdict.fail


def test_predictor_text_round_trip():
    space = uc.labels_only(["a", "b"])
    p = uc.table_predictor(space, 1, uc.Flavor.e, [1.0, 0.0, 3.0, 1.0])
    back = uc.predictor_from_text(p.to_text())
    assert back([(0, 0), (0, 1)]) == 3.0
    assert not uc.certify(back, "exch-e").passed


def test_calibrator_and_modular_probability():
    assert abs(uc.power_calibrator_integral(0.5) - 1.0) < 1e-6
    assert abs(uc.modular_sum_probability([0.2] * 5, 2001) - 0.2) < 1e-12


def test_scenario_report():
    report = uc.run_scenario("laplace-gap", ns="10,100")
    assert report["passed"]
    assert report["inputs"]["ns"] == "10,100"
    assert uc.format_number(1 / 3) == "0.333333333333"


def test_errors_surface_as_value_errors():
    with pytest.raises(ValueError):
        uc.numbered_labels(1)
    with pytest.raises(ValueError):
        uc.run_scenario("thm1-mc")


def test_monte_carlo_mean():
    mean, se = uc.mc_expectation(uc.eq13_predictor(6), [6 / 7, 1 / 7], 20000, 3)
    assert abs(mean - 1.0) <= 4 * se + 1e-12
    assert math.isfinite(se)
