import numpy as np
import pytest
from fractions import Fraction

from poslab import flags as fl
from poslab import groups as gr
from poslab import matrices as mx
from poslab import positivity as po
from poslab.errors import CapabilityError, DomainError, TransversalityError

SPECS = [gr.GroupSpec.sl(3), gr.GroupSpec.sl(4), gr.GroupSpec.sp(4),
         gr.GroupSpec.so(3, 4)]


def test_standard_pair_sl3():
    plus, minus = fl.standard_pair(gr.GroupSpec.sl(3))
    assert np.array_equal(plus.subspace(1)[:, 0], [1, 0, 0])
    assert np.array_equal(plus.subspace(2), np.eye(3)[:, :2])
    assert np.array_equal(minus.subspace(1)[:, 0], [0, 0, 1])
    assert np.array_equal(minus.subspace(2), np.eye(3)[:, [2, 1]])


def test_standard_pair_sp4_lagrangians():
    spec = gr.GroupSpec.sp(4)
    plus, minus = fl.standard_pair(spec)
    assert np.array_equal(plus.subspaces[0], np.eye(4)[:, :2])   # <e1, e2>
    assert np.array_equal(minus.subspaces[0], np.eye(4)[:, 2:])  # <f1, f2>
    j = spec.form()
    for f in (plus, minus):
        b = f.subspaces[0]
        assert np.abs(b.T @ j @ b).max() == 0


def test_standard_pair_so34_isotropic():
    spec = gr.GroupSpec.so(3, 4)
    plus, minus = fl.standard_pair(spec)
    assert np.array_equal(plus.subspace(2), np.eye(7)[:, :2])
    g = spec.form()
    for f in (plus, minus):
        for b in f.subspaces:
            assert np.abs(b.T @ g @ b).max() == 0
    assert fl.transverse(plus, minus)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.family}{s.size}")
def test_transversality_basics(spec):
    plus, minus = fl.standard_pair(spec)
    assert fl.transverse(plus, minus)
    assert not fl.transverse(plus, plus)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.family}{s.size}")
def test_transversality_invariance_under_action(spec):
    rng = np.random.default_rng(11)
    plus, minus = fl.standard_pair(spec)
    for _ in range(100):
        g = gr.random_group_element(spec, rng)
        assert fl.transverse(fl.act(g, plus), fl.act(g, minus))


def test_transversality_symmetric():
    rng = np.random.default_rng(12)
    for spec in SPECS:
        plus, minus = fl.standard_pair(spec)
        for _ in range(25):
            a = fl.act(gr.random_group_element(spec, rng), plus)
            b = fl.act(gr.random_group_element(spec, rng), minus)
            assert fl.transverse(a, b) == fl.transverse(b, a)


def test_act_identity_and_composition():
    spec = gr.GroupSpec.sl(4)
    rng = np.random.default_rng(13)
    plus, _ = fl.standard_pair(spec)
    assert fl.flags_equal(fl.act(np.eye(4), plus), plus)
    g, h = (gr.random_group_element(spec, rng) for _ in range(2))
    assert fl.flags_equal(fl.act(g, fl.act(h, plus)), fl.act(g @ h, plus))


def test_act_rejects_form_violation():
    spec = gr.GroupSpec.sp(4)
    plus, _ = fl.standard_pair(spec)
    with pytest.raises(DomainError):
        fl.act(np.diag([2.0, 1.0, 1.0, 1.0]), plus)


def test_unipotent_perturbation_stays_in_big_cell():
    spec = gr.GroupSpec.sl(3)
    plus, minus = fl.standard_pair(spec)
    u = mx.to_float(po.sample_tp_unipotent(spec, np.random.default_rng(14)))
    moved = fl.act(u, minus)
    assert fl.transverse(moved, plus)
    assert fl.transverse(moved, minus) or fl.flags_equal(moved, minus) is False


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.family}{s.size}")
def test_standardize_recovers_standard_pair(spec):
    rng = np.random.default_rng(15)
    plus, minus = fl.standard_pair(spec)
    for _ in range(10):
        g = gr.random_group_element(spec, rng)
        x, y = fl.act(g, plus), fl.act(g, minus)
        s = fl.standardize(x, y)
        assert fl.flags_equal(fl.act(s, x, check_form=False), plus)
        assert fl.flags_equal(fl.act(s, y, check_form=False), minus)
        if spec.family != "SL":
            form = spec.form()
            assert np.abs(s.T @ form @ s - form).max() < 1e-10 * max(
                1.0, np.abs(s).max() ** 2)


def test_standardize_identity_up_to_levi():
    spec = gr.GroupSpec.sl(3)
    plus, minus = fl.standard_pair(spec)
    s = fl.standardize(plus, minus)
    assert np.abs(s - np.diag(np.diag(s))).max() < 1e-12


def test_standardize_exact_round_trip_sl():
    spec = gr.GroupSpec.sl(3)
    plus, minus = fl.standard_pair(spec, exact=True)
    upper = mx.unipotent_exp(mx.mat([[0, 1, 2], [0, 0, 3], [0, 0, 0]], exact=True))
    lower = mx.unipotent_exp(mx.mat([[0, 0, 0], [2, 0, 0], [1, 1, 0]], exact=True))
    g = upper @ lower
    x, y = fl.act(g, plus, check_form=False), fl.act(g, minus, check_form=False)
    s = fl.standardize(x, y)
    assert fl.flags_equal(fl.act(s, x, check_form=False), plus)


def test_standardize_exact_sp():
    spec = gr.GroupSpec.sp(4)
    plus, minus = fl.standard_pair(spec, exact=True)
    b = mx.mat([[1, 2], [2, -1]], exact=True)
    g = mx.identity(4, exact=True)
    g[0:2, 2:4] = b
    assert spec.preserves_form(g)
    x, y = fl.act(g, plus, check_form=False), fl.act(g, minus, check_form=False)
    s = fl.standardize(x, y)
    j = spec.form(exact=True)
    assert np.all(s.T @ j @ s == j)


def test_standardize_so_exact_unsupported():
    spec = gr.GroupSpec.so(3, 4)
    plus, minus = fl.standard_pair(spec, exact=True)
    with pytest.raises(CapabilityError):
        fl.standardize(plus, minus)


def test_standardize_requires_transversality():
    spec = gr.GroupSpec.sl(3)
    plus, _ = fl.standard_pair(spec)
    with pytest.raises(TransversalityError):
        fl.standardize(plus, plus)


def test_eigenflag_diagonal():
    spec = gr.GroupSpec.sl(3)
    g = np.diag([4.0, 2.0, 1.0])
    att, rep = fl.eigenflag(spec, g)
    plus, minus = fl.standard_pair(spec)
    assert fl.flags_equal(att, plus) and fl.flags_equal(rep, minus)


def test_eigenflag_equivariance():
    spec = gr.GroupSpec.sl(3)
    rng = np.random.default_rng(16)
    k = gr.random_group_element(spec, rng)
    g = k @ np.diag([4.0, 2.0, 1.0]) @ np.linalg.inv(k)
    att, rep = fl.eigenflag(spec, g)
    plus, minus = fl.standard_pair(spec)
    assert fl.flags_equal(att, fl.act(k, plus), 1e-7)
    assert fl.flags_equal(rep, fl.act(k, minus), 1e-7)


def test_eigenflag_fixed_and_power_invariant():
    spec = gr.GroupSpec.sp(4)
    rng = np.random.default_rng(17)
    g, _ = gr.random_loxodromic(spec, rng)
    att, rep = fl.eigenflag(spec, g)
    assert fl.flags_equal(fl.act(g, att, check_form=False), att, 1e-7)
    for m in (2, 3):
        att_m, rep_m = fl.eigenflag(spec, np.linalg.matrix_power(g, m))
        assert fl.flags_equal(att, att_m, 1e-6)
        assert fl.flags_equal(rep, rep_m, 1e-6)


def test_eigenflag_principal_matches_veronese():
    a = np.array([[2.0, 1.0], [1.0, 1.0]])
    spec = gr.GroupSpec.sl(3)
    img = gr.principal_embedding(3)(a)
    att, rep = fl.eigenflag(spec, img)
    ap, am = np.linalg.eig(a)[1][:, np.argsort(-np.abs(np.linalg.eig(a)[0]))].T
    assert fl.flags_equal(att, fl.veronese_flag(3, ap), 1e-7)
    assert fl.flags_equal(rep, fl.veronese_flag(3, am), 1e-7)


def test_eigenflag_rejects_non_loxodromic():
    spec = gr.GroupSpec.sl(3)
    with pytest.raises(DomainError):
        fl.eigenflag(spec, np.diag([4.0, 1.0, 1.0]))


def test_veronese_at_first_coordinate():
    plus, _ = fl.standard_pair(gr.GroupSpec.sl(4))
    assert fl.flags_equal(fl.veronese_flag(4, (1, 0)), plus)


def test_veronese_equivariance():
    rng = np.random.default_rng(18)
    for _ in range(10):
        g = rng.standard_normal((2, 2))
        if abs(np.linalg.det(g)) < 0.2:
            continue
        g /= abs(np.linalg.det(g)) ** 0.5
        p = rng.standard_normal(2)
        lhs = fl.veronese_flag(4, g @ p)
        rhs = fl.act(gr.principal_embedding(4)(g), fl.veronese_flag(4, p),
                     check_form=False)
        assert fl.flags_equal(lhs, rhs, 1e-8)


def test_veronese_rejects_zero():
    with pytest.raises(DomainError):
        fl.veronese_flag(3, (0, 0))


def test_flag_validation_errors():
    spec = gr.GroupSpec.sl(3)
    with pytest.raises(DomainError):
        fl.Flag(spec, [np.eye(3)[:, :1]])  # missing a level
    with pytest.raises(DomainError):
        fl.Flag(spec, [np.eye(3)[:, :1], np.eye(3)[:, 1:]])  # not nested
    sp = gr.GroupSpec.sp(4)
    with pytest.raises(DomainError):
        fl.Flag(sp, [np.eye(4)[:, [0, 2]]])  # not isotropic


def test_flag_immutability_and_json():
    spec = gr.GroupSpec.so(3, 4)
    plus, _ = fl.standard_pair(spec)
    with pytest.raises(AttributeError):
        plus.spec = None
    with pytest.raises(ValueError):
        plus.subspaces[0][0, 0] = 5.0
    back = fl.Flag.from_json(plus.to_json())
    assert fl.flags_equal(back, plus)


def test_circle_flags_transversality():
    rng = np.random.default_rng(19)
    for spec, maker in [(gr.GroupSpec.sp(4), fl.sp_circle_flag),
                        (gr.GroupSpec.so(3, 4), fl.so_circle_flag)]:
        pts = po.cyclic_parameters(4, rng)
        flags = [maker(spec, p) for p in pts]
        for i in range(4):
            for j in range(i + 1, 4):
                assert fl.transverse(flags[i], flags[j])
