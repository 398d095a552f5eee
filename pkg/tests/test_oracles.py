"""The frozen two-class oracle values used by the acceptance gate are reproducible."""

import pytest

pytest.importorskip("numpy")

from tests.oracles import two_class_mc
from tests.test_acceptance import ORACLE_MAXPROB_AUC, ORACLE_VRO_AUC, ORACLE_VRO_MEAN
from uqgen.generators import two_class_model


def test_two_class_oracle_matches_frozen_values():
    got = two_class_mc.run(two_class_model().to_dict())
    assert got["vro_auc"] == pytest.approx(ORACLE_VRO_AUC, abs=1e-7)
    assert got["maxprob_auc"] == pytest.approx(ORACLE_MAXPROB_AUC, abs=1e-12)
    for cls, (mean, se) in ORACLE_VRO_MEAN.items():
        assert got[f"vro_mean_{cls}"] == pytest.approx(mean, abs=1e-6)
        assert got[f"vro_se_{cls}"] == pytest.approx(se, rel=0.05)
