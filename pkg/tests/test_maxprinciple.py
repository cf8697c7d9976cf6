"""Tests for maximum-principle verdicts, certificates and counterexamples."""
import numpy as np
import pytest

from nonlocal_spectra.core.coefficient import build_coefficient, constant_coefficient
from nonlocal_spectra.core.exceptions import EigenvalueNotNegative
from nonlocal_spectra.core.geometry import build_domain
from nonlocal_spectra.core.kernel import make_kernel
from nonlocal_spectra.core.maxprinciple import (
    Counterexample,
    SupersolutionCertificate,
    build_counterexample,
    check_supersolution,
    classify,
    cutoff_schedule,
    mp_audit,
    mp_verdict,
)
from nonlocal_spectra.core.operator import OperatorSpec, SpaceTimeFunction, apply_L
from nonlocal_spectra.core.spectral import (
    certify_test_pair,
    eigen_test_function,
    principal_spectrum_point,
)

SHIFTS = [-1.0, -0.5, -0.1, 0.0, 0.1, 0.5, 1.0]


@pytest.fixture
def audit_spec(unit_interval, epanechnikov):
    """Spatially flat growth with time average -1/4, so lambda1 = 1/4."""
    return OperatorSpec(
        domain=unit_interval,
        kernel=epanechnikov,
        coeff=build_coefficient("time_only", c="-0.25 + 0.3*sin(2*pi*t)"),
        D=1.0,
        sigma=1.0,
    )


def test_classify_dead_band():
    assert classify(0.1) == {"strong_mp": True, "strict_mp": True, "inconclusive": False}
    assert classify(-0.1) == {"strong_mp": False, "strict_mp": False, "inconclusive": False}
    assert classify(1e-10) == {"strong_mp": True, "strict_mp": False, "inconclusive": True}


def test_cutoff_schedule_descends_to_h():
    widths = cutoff_schedule(0.025, 0.5)
    np.testing.assert_allclose(widths, [0.4, 0.2, 0.1, 0.05, 0.025])
    assert cutoff_schedule(0.3, 0.5) == [0.3]


def test_positive_lambda1_gives_supersolution_certificate(audit_spec):
    verdict = mp_verdict(audit_spec)
    assert verdict.lambda1 == pytest.approx(0.25, abs=1e-8)
    assert verdict.strong_mp and verdict.strict_mp and not verdict.inconclusive
    assert isinstance(verdict.certificate, SupersolutionCertificate)
    assert verdict.certificate.worst_residual <= 1e-8
    assert verdict.certificate.min_value > 0
    assert verdict.to_dict()["certificate"]["type"] == "supersolution"
    assert verdict.certificate.certifies


def test_negative_lambda1_gives_counterexample(audit_spec):
    spec = audit_spec.with_(coeff=audit_spec.coeff.shifted(0.75))
    verdict = mp_verdict(spec)
    assert verdict.lambda1 == pytest.approx(-0.5, abs=1e-8)
    assert not verdict.strong_mp and not verdict.strict_mp
    certificate = verdict.certificate
    assert isinstance(certificate, Counterexample)
    assert certificate.min_Lu > 0
    assert certificate.tried[-1] == certificate.delta
    assert certificate.snapshots.min() > 0
    # boundary values are cut down, the interior keeps the eigenfunction
    assert certificate.eta[0] < 1.0 and certificate.eta[spec.size // 2] == 1.0


def test_counterexample_image_is_positive_at_its_times(audit_spec):
    spec = audit_spec.with_(coeff=audit_spec.coeff.shifted(1.0))
    result = principal_spectrum_point(spec)
    certificate = build_counterexample(spec, result=result, mt_samples=8)
    assert len(certificate.times) == 8
    u = eigen_test_function(spec, result).scaled(certificate.eta)
    for t in certificate.times:
        assert apply_L(spec, u, t).min() > 0


def test_counterexample_needs_negative_lambda1(audit_spec):
    with pytest.raises(EigenvalueNotNegative):
        build_counterexample(audit_spec)


def test_audit_matches_shifted_eigenvalues(audit_spec):
    rows = mp_audit(audit_spec, SHIFTS, jobs=2)
    assert [r.shift for r in rows] == SHIFTS
    for row in rows:
        assert row.error is None
        assert row.lambda1 == pytest.approx(0.25 - row.shift, abs=1e-7)
        assert row.strong_mp == (row.lambda1 >= -1e-6)
        assert row.strict_mp == (row.lambda1 >= 1e-6)
        if row.lambda1 < -1e-3:
            assert row.counterexample
            assert row.min_Lu > 0
        else:
            assert not row.counterexample


@pytest.mark.parametrize("growth", [5e-9, -5e-9])
def test_dead_band_certificate_is_inconclusive(unit_interval, epanechnikov, growth):
    spec = OperatorSpec(
        domain=unit_interval, kernel=epanechnikov, coeff=constant_coefficient(growth), D=1.0, sigma=1.0
    )
    verdict = mp_verdict(spec)
    assert verdict.lambda1 == pytest.approx(-growth, abs=1e-12)
    assert verdict.inconclusive and verdict.strong_mp and not verdict.strict_mp
    assert isinstance(verdict.certificate, SupersolutionCertificate)
    assert not verdict.certificate.certifies
    certificate = verdict.to_dict()["certificate"]
    assert certificate["type"] == "inconclusive"
    assert certificate["certifies"] is False


def test_counterexample_on_the_unit_square():
    spec = OperatorSpec(
        domain=build_domain(2, [(0.0, 1.0), (0.0, 1.0)], [16, 16]),
        kernel=make_kernel("radial_bump2d"),
        coeff=constant_coefficient(0.5),
        D=1.0,
        sigma=1.0,
    )
    verdict = mp_verdict(spec)
    assert verdict.lambda1 == pytest.approx(-0.5, abs=1e-8)
    certificate = verdict.certificate
    assert isinstance(certificate, Counterexample)
    assert certificate.delta in certificate.tried
    assert certificate.min_Lu > 0
    assert certificate.eta.min() < 1.0
    assert verdict.to_dict()["certificate"]["delta"] == certificate.delta


def test_counterexample_with_varying_eigenfunction_is_certified(separable_spec):
    spec = separable_spec.with_(coeff=separable_spec.coeff.shifted(1.0))
    result = principal_spectrum_point(spec)
    assert result.lambda1 < -0.5
    # the eigenfunction is far from flat across the cutoff layer
    assert result.eigenfunction.min() < 0.9 * result.eigenfunction.max()
    certificate = build_counterexample(spec, result=result)
    u = eigen_test_function(spec, result).scaled(certificate.eta)
    pair = certify_test_pair(spec, 0.0, u, ">=", mt_samples=len(certificate.times))
    assert pair.holds
    assert pair.worst_residual > 0
    assert pair.worst_residual == pytest.approx(certificate.min_Lu, rel=1e-10)


def test_audit_on_spatially_varying_growth(separable_spec):
    base = principal_spectrum_point(separable_spec).lambda1
    targets = [0.5, 0.1, -0.1, -0.5]
    rows = mp_audit(separable_spec, [base - target for target in targets], jobs=2)
    for target, row in zip(targets, rows):
        assert row.error is None
        assert row.lambda1 == pytest.approx(target, abs=1e-6)
        assert row.strong_mp == (target > 0)
        assert row.strict_mp == (target > 0)
        assert row.counterexample == (target < 0)
        if row.counterexample:
            assert row.min_Lu > 0
            assert row.delta > 0


class TestCheckSupersolution:
    def test_strict_supersolution_implies_positive(self, unit_interval, epanechnikov):
        spec = OperatorSpec(
            domain=unit_interval, kernel=epanechnikov, coeff=constant_coefficient(-0.5), D=1.0, sigma=1.0
        )
        check = check_supersolution(spec, SpaceTimeFunction.constant(spec.size), strict=True)
        assert check.is_supersolution
        assert check.implies == "lambda1 > 0"
        assert check.max_residual == pytest.approx(-0.5)
        assert check.consistent_with_theorems
        assert check.lambda1 == pytest.approx(0.5, abs=1e-8)

    def test_failed_check_implies_nothing(self, separable_spec):
        check = check_supersolution(
            separable_spec, SpaceTimeFunction.constant(separable_spec.size), strict=False, lambda1=0.0
        )
        assert not check.is_supersolution
        assert check.implies is None
        assert check.consistent_with_theorems
        assert check.max_residual > 0

    def test_contradiction_is_reported(self, unit_interval, epanechnikov):
        spec = OperatorSpec(
            domain=unit_interval, kernel=epanechnikov, coeff=constant_coefficient(-0.5), D=1.0, sigma=1.0
        )
        check = check_supersolution(
            spec, SpaceTimeFunction.constant(spec.size), strict=True, lambda1=-1.0
        )
        assert check.is_supersolution
        assert not check.consistent_with_theorems
