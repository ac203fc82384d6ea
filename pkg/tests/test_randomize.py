import numpy as np
import pytest
from hypothesis import given, strategies as st

from surrogate_cara.randomize import (RuleConfig, design_rule, expand_designs, h_nu, parse_design,
                                      surrogate_rule)

CFG = RuleConfig(nu=0.1, alpha=0.05)
finite = st.floats(-50, 50, allow_nan=False)
width = st.floats(1e-3, 20)
nus = st.floats(0, 0.49)


class TestHnu:
    def test_cap(self):
        assert h_nu(2.0, 1.0, 0.1) == pytest.approx(0.9)
        assert h_nu(-2.0, 1.0, 0.1) == pytest.approx(0.1)

    def test_centre(self):
        assert h_nu(0.0, 3.7, 0.23) == 0.5

    def test_interior_value(self):
        # 0.5 + 0.4 * (0.75 - 0.0625)
        assert h_nu(0.5, 1.0, 0.1) == pytest.approx(0.775, abs=1e-15)

    def test_rejects_nonpositive_width(self):
        with pytest.raises(ValueError):
            h_nu(0.1, 0.0, 0.1)

    def test_vectorized(self):
        out = h_nu(np.array([-2.0, 0.0, 2.0]), 1.0, 0.1)
        assert np.allclose(out, [0.1, 0.5, 0.9])

    @given(finite, width, nus)
    def test_range(self, x, b, nu):
        p = h_nu(x, b, nu)
        assert nu - 1e-15 <= p <= 1 - nu + 1e-15

    @given(finite, width, nus)
    def test_odd_symmetry(self, x, b, nu):
        assert abs(h_nu(-x, b, nu) - (1 - h_nu(x, b, nu))) <= 1e-12

    @given(finite, finite, width, nus)
    def test_monotone(self, x1, x2, b, nu):
        lo, hi = min(x1, x2), max(x1, x2)
        assert h_nu(lo, b, nu) <= h_nu(hi, b, nu) + 1e-15

    @given(width, nus)
    def test_boundary_continuity(self, b, nu):
        for edge in (b, -b):
            for eps in (1e-9, -1e-9):
                assert abs(h_nu(edge + eps, b, nu) - h_nu(edge, b, nu)) <= 1e-6


class TestSurrogateRule:
    def test_uninformed(self):
        r = surrogate_rule(None, 2, CFG)
        assert r.p1 == 0.5 and not r.informed

    def test_ci_excludes_zero(self):
        assert CFG.z == pytest.approx(1.959964, abs=1e-6)
        assert surrogate_rule((0.3, 0.05), 1, CFG).p1 == pytest.approx(0.9)
        assert surrogate_rule((-0.3, 0.05), 1, CFG).p1 == pytest.approx(0.1)

    def test_zero_se_sign_rule(self):
        p = surrogate_rule((np.array([0.2, -0.2, 0.0]), np.zeros(3)), 1, CFG).p1
        assert np.allclose(p, [0.9, 0.1, 0.5])

    def test_infinite_se_is_fair_coin(self):
        p = surrogate_rule((np.array([5.0, -5.0]), np.full(2, np.inf)), 1, CFG).p1
        assert np.all(p == 0.5)

    def test_p0(self):
        r = surrogate_rule((np.array([0.01]), np.array([0.05])), 3, CFG)
        assert np.allclose(r.p0 + r.p1, 1.0)


class TestDesignRule:
    summaries = {k: (np.array([0.4]), np.array([0.01])) for k in range(1, 6)}

    def test_rct(self):
        for t in (1, 7, 50):
            assert design_rule("rct", t, self.summaries, 3, CFG, 5).p1 == 0.5

    def test_fixed(self):
        assert design_rule("fixed1", 1, {1: None}, None, CFG, 5).p1 == 0.5
        r = design_rule("fixed1", 2, self.summaries, None, CFG, 5)
        assert r.informed and r.source_k == 1
        assert np.allclose(r.p1, 0.9)

    def test_superlearner_waits_for_k_plus_one(self):
        assert design_rule("sl", 5, self.summaries, 2, CFG, 5).p1 == 0.5
        r = design_rule("sl", 6, self.summaries, 2, CFG, 5)
        assert r.source_k == 2 and np.allclose(r.p1, 0.9)

    def test_superlearner_needs_selection(self):
        with pytest.raises(ValueError):
            design_rule("sl", 6, self.summaries, None, CFG, 5)


class TestDesigns:
    def test_parse(self):
        assert parse_design("rct", 5) == ("rct", None)
        assert parse_design("fixed(3)", 5) == ("fixed", 3)
        assert parse_design("fixed5", 5) == ("fixed", 5)
        assert parse_design("superlearner", 5) == ("sl", None)

    def test_bad(self):
        for bad in ("fixed0", "fixed6", "bandit"):
            with pytest.raises(ValueError):
                parse_design(bad, 5)

    def test_expand(self):
        assert expand_designs("rct,fixed1..fixed3,sl") == ["rct", "fixed1", "fixed2", "fixed3", "sl"]

    def test_config_bounds(self):
        with pytest.raises(ValueError):
            RuleConfig(nu=0.5)
        with pytest.raises(ValueError):
            RuleConfig(alpha=1.0)
