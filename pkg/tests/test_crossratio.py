from itertools import combinations

import numpy as np
import pytest
from fractions import Fraction

from poslab import crossratio as cr
from poslab import flags as fl
from poslab import groups as gr
from poslab import matrices as mx
from poslab.errors import DomainError, TransversalityError

SPECS = [gr.GroupSpec.sl(3), gr.GroupSpec.sl(4), gr.GroupSpec.sp(4),
         gr.GroupSpec.so(3, 4)]


def _pt(z):
    return (1.0, 0.0) if z == "inf" else (float(z), 1.0)


def test_proj_cr_chart_normalization():
    for z in (3.0, -2.0, 0.25):
        assert cr.proj_cr_p1(_pt("inf"), _pt(0), _pt(1), _pt(z)) == pytest.approx(z)


def test_proj_cr_degenerate_first_pair_is_one():
    rng = np.random.default_rng(20)
    x = rng.standard_normal(4)
    X, Y = rng.standard_normal((2, 4))
    assert cr.proj_cr(x, x, X, Y) == pytest.approx(1.0)


def test_proj_cr_affine_chart_oracle():
    rng = np.random.default_rng(21)
    for _ in range(50):
        x, y, X, Y = rng.uniform(-4, 4, size=4)
        if min(abs(X - y), abs(Y - x)) < 1e-2:
            continue
        affine = (X - x) * (Y - y) / ((X - y) * (Y - x))
        assert cr.proj_cr_p1(_pt(x), _pt(y), _pt(X), _pt(Y)) == \
            pytest.approx(affine, rel=1e-10)


def test_proj_cr_scaling_invariance():
    rng = np.random.default_rng(22)
    vecs = [rng.standard_normal(3) for _ in range(4)]
    base = cr.proj_cr(*vecs)
    scaled = cr.proj_cr(2.5 * vecs[0], -3.0 * vecs[1], 0.5 * vecs[2], -7.0 * vecs[3])
    assert scaled == pytest.approx(base, rel=1e-12)


def test_proj_cr_raises_on_vanishing_pairing():
    with pytest.raises(TransversalityError):
        cr.proj_cr(np.array([1.0, 0]), np.array([0, 1.0]),
                   np.array([1.0, 0]), np.array([0, 1.0]))


def test_weight_cr_degenerate_equal_points():
    spec = gr.GroupSpec.sl(3)
    v = [fl.veronese_flag(3, p) for p in [(1, 0), (1, 0), (0, 1), (-1, 1)]]
    q = cr.Quadruple(*v)
    assert cr.weight_cr(spec, 1, q) == pytest.approx(1.0)


def test_weight_cr_sl2_is_projective():
    spec = gr.GroupSpec.sl(2)

    def line(p):
        return fl.Flag(spec, [np.array([[p[0]], [p[1]]], dtype=float)])

    rng = np.random.default_rng(23)
    for _ in range(20):
        pts = [rng.standard_normal(2) for _ in range(4)]
        try:
            q = cr.Quadruple(*[line(p) for p in pts])
        except TransversalityError:
            continue
        assert cr.weight_cr(spec, 1, q) == pytest.approx(
            cr.proj_cr_p1(*pts), rel=1e-9)


def _laplace_pairing(a, b):
    """Independent highest-weight pairing: Laplace expansion of det(a|b)
    through complementary minors."""
    n = a.shape[0]
    k = a.shape[1]
    total = 0.0
    rows = list(range(n))
    for subset in combinations(rows, k):
        comp = [r for r in rows if r not in subset]
        sign = (-1) ** sum(subset)
        sign *= (-1) ** (k * (k - 1) // 2)
        total += sign * mx.det(a[list(subset), :]) * mx.det(b[comp, :])
    return total


def test_weight_cr_sl3_veronese_plucker_oracle():
    """The Veronese quadruple value equals both the Laplace-expansion oracle
    and the projective cross-ratio raised to k(n-k)."""
    spec = gr.GroupSpec.sl(3)
    pts = [(1, 0), (1, 1), (0, 1), (-1, 1)]
    v = [fl.veronese_flag(3, p) for p in pts]
    q = cr.Quadruple(*v)
    p1 = cr.proj_cr_p1(*pts)
    for k in (1, 2):
        val = cr.weight_cr(spec, k, q)
        oracle = (_laplace_pairing(v[0].subspace(k), v[2].subspace(3 - k)) *
                  _laplace_pairing(v[1].subspace(k), v[3].subspace(3 - k))) / (
            _laplace_pairing(v[1].subspace(k), v[2].subspace(3 - k)) *
            _laplace_pairing(v[0].subspace(k), v[3].subspace(3 - k)))
        assert val == pytest.approx(oracle, rel=1e-12)
        assert val == pytest.approx(p1 ** (k * (3 - k)), rel=1e-10)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.family}{s.size}")
def test_weight_cr_basis_invariance(spec):
    rng = np.random.default_rng(24)
    plus, minus = fl.standard_pair(spec)
    flags = []
    while len(flags) < 4:
        cand = fl.act(gr.random_group_element(spec, rng), plus)
        if all(fl.transverse(cand, f) for f in flags):
            flags.append(cand)
    q = cr.Quadruple(*flags)
    base = cr.weight_cr(spec, spec.theta[0], q)
    recombined = []
    for f in flags:
        subs = []
        for b in f.subspaces:
            d = b.shape[1]
            m = rng.standard_normal((d, d))
            while abs(np.linalg.det(m)) < 0.2:
                m = rng.standard_normal((d, d))
            subs.append(b @ m)
        recombined.append(fl.Flag(spec, subs))
    q2 = cr.Quadruple(*recombined)
    assert cr.weight_cr(spec, spec.theta[0], q2) == pytest.approx(base, rel=1e-12)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.family}{s.size}")
def test_cocycle_identities(spec):
    rng = np.random.default_rng(25)
    plus, _ = fl.standard_pair(spec)
    eta = gr.WeightForm.fundamental(spec, spec.theta[-1])
    done = 0
    while done < 10:
        flags = [fl.act(gr.random_group_element(spec, rng), plus)
                 for _ in range(6)]
        if not all(fl.transverse(a, b) for a, b in combinations(flags, 2)):
            continue
        x, w, y, xx, ww, yy = flags
        full = cr.form_cr(spec, eta, cr.Quadruple(x, y, xx, yy))
        first = cr.form_cr(spec, eta, cr.Quadruple(x, w, xx, yy)) * \
            cr.form_cr(spec, eta, cr.Quadruple(w, y, xx, yy))
        second = cr.form_cr(spec, eta, cr.Quadruple(x, y, xx, ww)) * \
            cr.form_cr(spec, eta, cr.Quadruple(x, y, ww, yy))
        assert first == pytest.approx(full, rel=1e-10)
        assert second == pytest.approx(full, rel=1e-10)
        done += 1


def test_form_cr_reduces_to_weight_cr():
    spec = gr.GroupSpec.sl(3)
    v = [fl.veronese_flag(3, p) for p in [(1, 0), (1, 1), (0, 1), (-1, 1)]]
    q = cr.Quadruple(*v)
    w1 = cr.weight_cr(spec, 1, q)
    assert cr.form_cr(spec, gr.WeightForm.fundamental(spec, 1), q) == \
        pytest.approx(w1)
    assert cr.form_cr(spec, gr.WeightForm.make(spec, {1: 2}), q) == \
        pytest.approx(w1 ** 2, rel=1e-12)
    combo = cr.form_cr(spec, gr.WeightForm.make(spec, {1: 1, 2: 1}), q)
    assert combo == pytest.approx(w1 * cr.weight_cr(spec, 2, q), rel=1e-12)


def test_form_cr_non_integer_power_needs_positive_base():
    spec = gr.GroupSpec.sl(2)

    def line(p):
        return fl.Flag(spec, [np.array([[p[0]], [p[1]]], dtype=float)])

    q = cr.Quadruple(line((1, 0)), line((0, 1)), line((1, 1)), line((1, -1)))
    assert cr.weight_cr(spec, 1, q) < 0
    with pytest.raises(DomainError):
        cr.form_cr(spec, gr.WeightForm.make(spec, {1: 0.5}), q)


def test_g_invariance_of_form_cr():
    rng = np.random.default_rng(26)
    for spec in SPECS:
        plus, _ = fl.standard_pair(spec)
        flags = []
        while len(flags) < 4:
            cand = fl.act(gr.random_group_element(spec, rng), plus)
            if all(fl.transverse(cand, f) for f in flags):
                flags.append(cand)
        eta = gr.WeightForm.make(spec, {spec.theta[0]: 2})
        base = cr.form_cr(spec, eta, cr.Quadruple(*flags))
        for _ in range(5):
            g = gr.random_group_element(spec, rng)
            moved = [fl.act(g, f) for f in flags]
            assert cr.form_cr(spec, eta, cr.Quadruple(*moved)) == \
                pytest.approx(base, rel=1e-10)


def test_period_dilation_on_p1():
    spec = gr.GroupSpec.sl(2)
    eta = gr.WeightForm.fundamental(spec, 1)
    lam = 3.7
    g = np.diag([np.sqrt(lam), 1 / np.sqrt(lam)])  # z -> lam z projectively
    assert cr.period(spec, eta, g) == pytest.approx(lam, rel=1e-12)


def test_period_known_spectrum():
    spec = gr.GroupSpec.sl(3)
    g = np.diag([4.0, 2.0, 1.0]) / 2.0  # det-normalized copy of diag(4,2,1)
    eta = gr.WeightForm.fundamental(spec, 1)
    assert cr.period(spec, eta, g) == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.family}{s.size}")
def test_period_equals_character_product(spec):
    rng = np.random.default_rng(27)
    for trial in range(30):
        g, _ = gr.random_loxodromic(spec, rng)
        for eta in (gr.WeightForm.fundamental(spec, spec.theta[0]),
                    gr.WeightForm.make(spec, {i: 1 for i in spec.theta})):
            p = cr.period(spec, eta, g)
            chi2 = gr.character(spec, eta, g) * \
                gr.character(spec, eta, np.linalg.inv(g))
            assert p == pytest.approx(chi2, rel=1e-8)


def test_period_aux_independent():
    spec = gr.GroupSpec.sl(3)
    rng = np.random.default_rng(28)
    g, _ = gr.random_loxodromic(spec, rng)
    eta = gr.WeightForm.make(spec, {1: 1, 2: 1})
    att, rep = fl.eigenflag(spec, g)
    plus, _ = fl.standard_pair(spec)
    values = []
    while len(values) < 20:
        aux = fl.act(gr.random_group_element(spec, rng), plus)
        if not (fl.transverse(aux, att) and fl.transverse(aux, rep)):
            continue
        try:
            values.append(cr.period(spec, eta, g, aux=aux))
        except TransversalityError:
            continue
    values = np.array(values)
    assert np.abs(values / values[0] - 1.0).max() < 1e-9


def test_period_rejects_non_loxodromic():
    spec = gr.GroupSpec.sl(3)
    with pytest.raises(DomainError):
        cr.period(spec, gr.WeightForm.fundamental(spec, 1), np.diag([4.0, 1.0, 1.0]))


def test_period_rejects_bad_aux():
    spec = gr.GroupSpec.sl(3)
    g = np.diag([4.0, 2.0, 1.0])
    att, _ = fl.eigenflag(spec, g)
    with pytest.raises(TransversalityError):
        cr.period(spec, gr.WeightForm.fundamental(spec, 1), g, aux=att)


def test_tensor_identity_samples():
    rng = np.random.default_rng(29)
    for _ in range(30):
        s1 = [rng.standard_normal(2) for _ in range(4)]
        s2 = [rng.standard_normal(2) for _ in range(4)]
        assert cr.tensor_cr_check(s1, s2) < 1e-12


def test_tensor_identity_degenerate_factor():
    rng = np.random.default_rng(30)
    x1 = rng.standard_normal(3)
    s1 = [x1, x1.copy(), rng.standard_normal(3), rng.standard_normal(3)]
    s2 = [rng.standard_normal(2) for _ in range(4)]
    b1 = cr.proj_cr(*s1)
    assert b1 == pytest.approx(1.0)
    assert cr.tensor_cr_check(s1, s2) < 1e-12


def test_tensor_identity_scaling_invariance():
    rng = np.random.default_rng(31)
    s1 = [rng.standard_normal(3) for _ in range(4)]
    s2 = [rng.standard_normal(2) for _ in range(4)]
    base = cr.tensor_cr_check(s1, s2)
    scaled = cr.tensor_cr_check([7.0 * s1[0], s1[1], -0.2 * s1[2], s1[3]], s2)
    assert scaled == pytest.approx(base, abs=1e-12)
