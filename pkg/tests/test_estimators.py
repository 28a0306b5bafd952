import math

import numpy as np
import pytest
from sklearn.base import clone

from discrest import ParameterError, gen_lattice_paraboloid
from discrest.estimators import AdditiveEnergy, CapAssigner, LpAverage, PowerLawRegressor
from discrest.validation import as_pointset, check_points, check_scales


def test_get_params_and_clone():
    est = AdditiveEnergy(k=3, method="bruteforce")
    assert est.get_params() == {"k": 3, "method": "bruteforce", "collect_witnesses": False}
    copy = clone(est)
    assert copy.get_params() == est.get_params() and copy is not est
    assert LpAverage(p=4).set_params(R=7.0).R == 7.0


def test_additive_energy_array_input():
    X = np.array([[-1, 1], [0, 0], [1, 1]])
    est = AdditiveEnergy().fit(X)
    assert est.energy_ == 15 and est.n_features_in_ == 2
    assert est.report_.method == "hashed"


def test_lp_average_torus():
    est = LpAverage(p=4, method="torus").fit(gen_lattice_paraboloid(2, 1))
    assert est.value_ ** 4 == pytest.approx(15)


def test_lp_average_ball():
    est = LpAverage(p=2, R=200, samples=20_000).fit([[0, 0], [1, 1]])
    assert est.value_ == pytest.approx(math.sqrt(2), rel=0.05)


def test_power_law_regressor():
    x = np.array([1, 2, 4, 8.0])
    reg = PowerLawRegressor().fit(x.reshape(-1, 1), 3 * x ** -0.5)
    assert reg.coef_ == pytest.approx(-0.5)
    assert reg.predict([[16]])[0] == pytest.approx(0.75)
    assert reg.score(x.reshape(-1, 1), 3 * x ** -0.5) == pytest.approx(1.0)


def test_cap_assigner():
    X = [["-1/2", "1/4"], ["0", "0"], ["13/50", "169/2500"]]
    idx = CapAssigner(delta="1/4").fit_transform(X)
    assert idx.tolist() == [[-2], [0], [1]]


def test_validation_helpers():
    assert as_pointset([[0, 1], [1, 0]]).surface == "sphere"
    assert as_pointset([[2, 3]]).surface == "none"
    with pytest.raises(ParameterError):
        check_points([[0, 0], [1, 2, 3]])
    with pytest.raises(ParameterError):
        check_points(np.zeros(3))
    with pytest.raises(ParameterError):
        check_scales(np.zeros((2, 2)))
    with pytest.raises(ParameterError):
        as_pointset([])
