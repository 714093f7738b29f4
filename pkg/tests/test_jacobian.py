import numpy as np
import pytest

from xvasensi.jacobian import (CalibrationError, CalibrationSpec, cal_err, cal_grad, calibrate,
                               jacobian_to_csv, market_sensis_to_csv, market_sensitivities,
                               param_jacobian)

from toys import VASICEK_FREE, VASICEK_RHO0, book_model_sensis, book_value, vasicek_spec, vasicek_zc


def recalibrated_sensis(spec, z0, psi0, rel=1e-4):
    """Bump each quote, recalibrate and reprice the book: the direct oracle."""
    out = np.empty(z0.size)
    for j in range(z0.size):
        h = rel * z0[j]
        vals = []
        for sgn in (1, -1):
            z = z0.copy()
            z[j] += sgn * h
            psi = calibrate(spec, z, psi0)
            vals.append(book_value(spec.full(psi)))
        out[j] = (vals[0] - vals[1]) / (2 * h)
    return out


class TestCalibration:
    def test_recovers_generating_parameters(self):
        spec = vasicek_spec()
        z0 = vasicek_zc(VASICEK_RHO0)
        psi = calibrate(spec, z0, np.array([0.03, 0.2, 0.05]))
        assert np.allclose(psi, VASICEK_RHO0[VASICEK_FREE], rtol=1e-6)
        assert cal_err(spec, z0, psi) < 1e-20
        assert np.linalg.norm(cal_grad(spec, z0, psi)) < 1e-10

    def test_underdetermined_rejected(self):
        spec = CalibrationSpec(lambda r: r[:2], np.ones(3), np.ones(3, bool))
        with pytest.raises(CalibrationError, match="underdetermined"):
            calibrate(spec, np.ones(2))

    def test_non_convergence_reported(self):
        spec = CalibrationSpec(lambda r: np.array([r[0] ** 2 + 1.0, r[0] ** 2 + 1.0]), np.array([1.0]),
                               np.array([True]))
        with pytest.raises(CalibrationError, match="did not converge"):
            calibrate(spec, np.array([0.0, 0.5]), max_iter=3, tol=1e-30)

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            cal_err(vasicek_spec(), np.ones(3), VASICEK_RHO0[VASICEK_FREE])


class TestJacobian:
    def test_identity_calibration(self):
        spec = CalibrationSpec(lambda r: r.copy(), np.array([0.3, 1.2, 2.0]), np.ones(3, bool),
                               price_jacobian=lambda r: np.eye(3))
        jac = param_jacobian(spec, np.array([0.3, 1.2, 2.0]), np.array([0.3, 1.2, 2.0]))
        assert np.array_equal(jac, np.eye(3))

    @pytest.mark.parametrize("method", ["gauss-newton", "hessian"])
    def test_chain_rule_matches_recalibration(self, method):
        spec = vasicek_spec()
        z0 = vasicek_zc(VASICEK_RHO0)
        psi0 = VASICEK_RHO0[VASICEK_FREE]
        jac = param_jacobian(spec, z0, psi0, method=method)
        chain = market_sensitivities(book_model_sensis(VASICEK_RHO0)[VASICEK_FREE], jac)
        direct = recalibrated_sensis(spec, z0, psi0)
        assert np.allclose(chain, direct, rtol=1e-3, atol=1e-6 * np.abs(direct).max())

    def test_singular_hessian_reported(self):
        # the two free parameters enter only through their sum
        spec = CalibrationSpec(lambda r: np.array([r[0] + r[1], 2 * (r[0] + r[1]), 3.0]),
                               np.array([1.0, 1.0]), np.ones(2, bool), names=["u", "v"])
        with pytest.raises(CalibrationError, match="singular"):
            param_jacobian(spec, np.array([2.0, 4.0, 3.0]), np.array([1.0, 1.0]))

    def test_dimension_checks(self):
        with pytest.raises(ValueError):
            market_sensitivities(np.ones(3), np.ones((2, 5)))
        with pytest.raises(ValueError):
            param_jacobian(vasicek_spec(), vasicek_zc(VASICEK_RHO0), VASICEK_RHO0[VASICEK_FREE], method="x")

    def test_csv(self, tmp_path):
        jac = np.arange(6.0).reshape(2, 3)
        jacobian_to_csv(jac, ["a", "b"], ["z1", "z2", "z3"], tmp_path / "j.csv")
        assert (tmp_path / "j.csv").read_text().splitlines()[1] == "a,0,1,2"
        market_sensis_to_csv([1.5, -2.0], [("zc", 0, 0.5), ("cds", 1, 10.0)], tmp_path / "m.csv", "bump")
        lines = (tmp_path / "m.csv").read_text().splitlines()
        assert lines[0] == "curve,index,pillar,sensitivity,method"
        assert lines[2] == "cds,1,10,-2,bump"
