import numpy as np
import pytest
from fractions import Fraction

from poslab import groups as gr
from poslab import matrices as mx
from poslab.errors import DomainError


@pytest.fixture
def sl3():
    return gr.GroupSpec.sl(3)


@pytest.fixture
def sp4():
    return gr.GroupSpec.sp(4)


@pytest.fixture
def so34():
    return gr.GroupSpec.so(3, 4)


def test_spec_validation():
    with pytest.raises(DomainError):
        gr.GroupSpec("SL", 3, theta=(1,))  # split form needs all simple roots
    with pytest.raises(DomainError):
        gr.GroupSpec("Sp", 4, theta=(1,))  # only the long root is legal
    with pytest.raises(DomainError):
        gr.GroupSpec.so(1, 5)


def test_spec_json_round_trip(sl3, sp4, so34):
    for spec in (sl3, sp4, so34):
        assert gr.GroupSpec.from_json(spec.to_json()) == spec
    assert so34.to_json() == {"family": "SO", "p": 3, "q": 4, "theta": [1, 2]}


def test_sl2_triple_defining(sl3):
    t = gr.sl2_triple(gr.GroupSpec.sl(2), 1, exact=True)
    assert t.x_plus[0, 1] == 1 and t.x_minus[1, 0] == 1
    assert t.h[0, 0] == 1 and t.h[1, 1] == -1


def test_sl2_triple_sl3_alpha1(sl3):
    t = gr.sl2_triple(sl3, 1, exact=True)
    assert t.x_plus[0, 1] == 1 and t.x_minus[1, 0] == 1
    assert [t.h[i, i] for i in range(3)] == [1, -1, 0]


def test_sl2_triple_sp4_long_root(sp4):
    t = gr.sl2_triple(sp4, 2, exact=True)
    assert t.verify()
    # supported on the (e2, f2)-plane: only rows/cols 2 and 4 are active
    active = {(i, j) for i in range(4) for j in range(4)
              if t.x_plus[i, j] != 0 or t.x_minus[i, j] != 0 or t.h[i, j] != 0}
    assert active <= {(1, 3), (3, 1), (1, 1), (3, 3)}
    form = sp4.form(exact=True)
    for m in (t.x_plus, t.x_minus, t.h):
        assert all(v == 0 for v in (m.T @ form + form @ m).flat)


def test_sl2_triples_bracket_relations(so34, sp4, sl3):
    for spec in (sl3, sp4, so34):
        for i in spec.theta:
            assert gr.sl2_triple(spec, i, exact=True).verify()
            assert gr.sl2_triple(spec, i).verify(tol=1e-12)


def test_sl2_triple_index_outside_theta(sp4):
    with pytest.raises(DomainError):
        gr.sl2_triple(sp4, 1)


def test_pairing_h(sl3):
    eta = gr.WeightForm.make(sl3, {1: 3, 2: 2})
    assert gr.pairing_h(eta, 2) == 2
    assert gr.pairing_h(gr.WeightForm.fundamental(sl3, 1), 1) == 1
    assert gr.pairing_h(gr.WeightForm.make(sl3, {}), 1) == 0


def test_weight_form_rejects_negative(sl3):
    with pytest.raises(DomainError):
        gr.WeightForm.make(sl3, {1: -1})


def test_principal_embedding_n2_identity():
    emb = gr.principal_embedding(2)
    a = mx.mat([[3, 1], [2, 1]], exact=True)
    assert np.all(emb(a) == a)


def test_principal_embedding_diagonal():
    emb = gr.principal_embedding(3)
    d = emb(mx.mat([["2", "0"], ["0", "1/2"]], exact=True))
    assert [d[i, i] for i in range(3)] == [4, 1, Fraction(1, 4)]


def test_principal_embedding_unipotent_monomial_basis():
    emb = gr.principal_embedding(3)
    u = emb(mx.mat([[1, 1], [0, 1]], exact=True))
    expected = mx.mat([[1, 2, 1], [0, 1, 1], [0, 0, 1]], exact=True)
    assert np.all(u == expected)


def test_principal_embedding_multiplicative():
    rng = np.random.default_rng(5)
    for n in (3, 4, 5):
        emb = gr.principal_embedding(n)
        a, b = rng.standard_normal((2, 2, 2))
        resid = np.abs(emb(a @ b) - emb(a) @ emb(b)).max()
        assert resid < 1e-10 * max(1.0, np.abs(emb(a @ b)).max())


def test_principal_embedding_loxodromic_images(sl3):
    a = np.array([[2.0, 1.0], [1.0, 1.0]])  # |tr| > 2
    img = gr.principal_embedding(3)(a)
    assert gr.is_loxodromic(sl3, img)
    moduli = mx.eigen_moduli(img)
    assert np.min(moduli[:-1] / moduli[1:]) > 1.0 + 1e-6


def test_jordan_projection_diagonal(sl3):
    logs = gr.jordan_projection(sl3, np.diag([4.0, 2.0, 1.0]))
    np.testing.assert_allclose(logs, np.log([4, 2, 1]) - np.mean(np.log([4, 2, 1])))


def test_jordan_projection_conjugation_invariant(so34):
    rng = np.random.default_rng(6)
    g, t = gr.random_loxodromic(so34, rng)
    k = gr.random_group_element(so34, rng)
    np.testing.assert_allclose(gr.jordan_projection(so34, g),
                               gr.jordan_projection(so34, k @ g @ np.linalg.inv(k)),
                               rtol=1e-8, atol=1e-8)


def test_jordan_projection_symmetric_power(sl3):
    img = gr.principal_embedding(3)(np.diag([2.0, 0.5]))
    np.testing.assert_allclose(gr.jordan_projection(sl3, img),
                               [np.log(4), 0.0, -np.log(4)], atol=1e-12)


def test_jordan_symmetry_forced(sp4, so34):
    rng = np.random.default_rng(7)
    for spec in (sp4, so34):
        g, _ = gr.random_loxodromic(spec, rng)
        logs = gr.jordan_projection(spec, g)
        np.testing.assert_allclose(logs, -logs[::-1], atol=1e-12)


def test_character_alpha1(sl3):
    g = np.diag([4.0, 2.0, 1.0])
    assert gr.root_character(sl3, 1, g) == pytest.approx(2.0)


def test_character_omega1_normalization(sl3):
    # chi_{w1}(diag(4,2,1)) = 4 / 8^(1/3) = 2; the scale-free oracle is
    # p^{w1}(g) = chi(g) chi(g^{-1}) = lam1/lam3 = 4
    g = np.diag([4.0, 2.0, 1.0])
    eta = gr.WeightForm.fundamental(sl3, 1)
    assert gr.character(sl3, eta, g) == pytest.approx(2.0)
    assert gr.character(sl3, eta, g) * gr.character(sl3, eta, np.linalg.inv(g)) \
        == pytest.approx(4.0)


def test_character_additive_in_eta(so34):
    rng = np.random.default_rng(8)
    g, _ = gr.random_loxodromic(so34, rng)
    e1 = gr.WeightForm.fundamental(so34, 1)
    e2 = gr.WeightForm.fundamental(so34, 2)
    assert gr.character(so34, e1 + e2, g) == pytest.approx(
        gr.character(so34, e1, g) * gr.character(so34, e2, g), rel=1e-10)


def test_loxodromy_error_names_root(sl3):
    with pytest.raises(DomainError, match="alpha_2"):
        gr.require_loxodromic(sl3, np.diag([4.0, 1.0, 1.0]))


def test_project_b_theta_sl_identity(sl3):
    x = mx.mat([[1, 0, 0], [0, 2, 0], [0, 0, -3]], exact=True)
    assert np.all(gr.project_b_theta(sl3, x) == x)


def test_project_b_theta_so(so34):
    # the h-direction of the unselected short root is killed
    h3 = gr.cartan_element(so34, [0, 0, 2], exact=True)
    proj = gr.project_b_theta(so34, h3)
    assert all(v == 0 for v in proj.flat)
    # image annihilates the unselected simple root, exactly
    x = gr.cartan_element(so34, [Fraction(5), Fraction(2), Fraction(1)], exact=True)
    proj = gr.project_b_theta(so34, x)
    t = gr.cartan_coordinates(so34, proj)
    assert gr.simple_root_value(so34, 3, t) == 0


def test_project_b_theta_idempotent(sp4):
    x = gr.cartan_element(sp4, [Fraction(3), Fraction(1)], exact=True)
    once = gr.project_b_theta(sp4, x)
    twice = gr.project_b_theta(sp4, once)
    assert np.all(once == twice)


def test_project_b_theta_rejects_non_cartan(sl3):
    with pytest.raises(DomainError):
        gr.project_b_theta(sl3, np.array([[0.0, 1.0, 0], [0, 0, 0], [0, 0, 0]]))


def test_weyl_rotation_in_group(sp4, so34, sl3):
    for spec in (sl3, sp4, so34):
        for i in spec.theta:
            s = gr.weyl_rotation(gr.sl2_triple(spec, i, exact=True))
            assert spec.preserves_form(s)


def test_random_group_elements_preserve_form(sp4, so34):
    rng = np.random.default_rng(9)
    for spec in (sp4, so34):
        for _ in range(5):
            assert spec.preserves_form(gr.random_group_element(spec, rng))
            assert spec.preserves_form(gr.random_compact_element(spec, rng))


def test_principal_symplectic(sp4):
    emb = gr.principal_symplectic(sp4)
    rng = np.random.default_rng(10)
    a, b = rng.standard_normal((2, 2, 2))
    j = sp4.form()
    img = emb(a)
    assert np.abs(img.T @ j @ img - np.linalg.det(a) ** 3 * j).max() < 1e-8
    assert np.abs(emb(a @ b) - emb(a) @ emb(b)).max() < 1e-8 * max(
        1.0, np.abs(emb(a @ b)).max())


def test_so_circle_embedding_in_group(so34):
    embed, _ = gr.so_circle_embedding(so34)
    a = np.array([[1.4, 0.3], [0.2, (1 + 0.3 * 0.2) / 1.4]])
    img = embed(a)
    g = so34.form()
    assert np.abs(img.T @ g @ img - g).max() < 1e-8
