import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from cfdim.boxcount import cantor_sample
from cfdim.estimators import BoxCountingDimension, CantorSampler, DimensionSolver


def test_box_counting_estimator():
    x = cantor_sample(5000, seed=4)
    est = BoxCountingDimension(scales=[3.0**-k for k in range(1, 7)]).fit(x.reshape(-1, 1))
    assert est.dimension_ == pytest.approx(math.log(2) / math.log(3), abs=0.05)
    assert est.score() == est.r2_
    assert len(est.counts_) == 6


def test_box_counting_rejects_multicolumn():
    with pytest.raises(ValueError):
        BoxCountingDimension().fit(np.zeros((1000, 2)))


def test_params_round_trip():
    est = DimensionSolver(r=2, tau="const:1", M_list=(20, 50))
    assert est.get_params()["r"] == 2
    twin = clone(est).set_params(r=1)
    assert twin.r == 1 and est.r == 2


def test_dimension_solver():
    est = DimensionSolver(r=2, tau="const:1", M_list=(20, 200)).fit()
    assert est.s_star_ == pytest.approx((math.sqrt(5) - 1) / 2, abs=0.02)
    assert est.M_sequence_.shape == (2, 2)
    assert est.oracle() == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-12)


def test_oracle_absent_for_general_potentials():
    est = DimensionSolver(tau="expr:0.5 + x", M_list=(5, 10)).fit()
    assert est.oracle() is None


def test_unfitted():
    with pytest.raises(NotFittedError):
        DimensionSolver().oracle()
    with pytest.raises(NotFittedError):
        CantorSampler().sample(3)


def test_cantor_sampler():
    smp = CantorSampler(r=2, M=20, J=3).fit()
    assert 0.5 < smp.s_ < 1
    pts = smp.sample(4, seed=10)
    assert [p.seed for p in pts] == [10, 11, 12, 13]
    vals = smp.transform(np.array([10, 11]))
    assert np.array_equal(vals, [float(pts[0].value), float(pts[1].value)])
