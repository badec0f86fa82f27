"""Cross-ratios on flag manifolds: projective, fundamental-weight, and
weight-form versions, plus periods."""

from fractions import Fraction

import numpy as np

from . import flags as fl
from . import groups as gr
from . import matrices as mx
from .errors import DomainError, TransversalityError

# Noise floor for declaring a pairing determinant zero: values below this
# (relative to the Hadamard scale) carry no float information; transversality
# at tighter user-facing thresholds is enforced by the checker preconditions.
ZERO_TOL = 3e-13


def proj_cr(x, y, X, Y):
    """Projective cross-ratio <x|X><y|Y> / (<y|X><x|Y>) of two lines and two
    covectors, independent of representative scaling."""
    x, y, X, Y = (np.asarray(v) for v in (x, y, X, Y))
    num = (x @ X) * (y @ Y)
    den = (y @ X) * (x @ Y)
    if den == 0:
        raise TransversalityError("vanishing pairing in projective cross-ratio")
    return num / den


def proj_cr_p1(x, y, X, Y):
    """Projective cross-ratio of four points of the projective line, given
    as 2-vectors; [inf, 0, 1, z] = z with the usual charts."""

    def dual(p):
        return np.array([p[1], -p[0]])

    return proj_cr(np.asarray(x), np.asarray(y), dual(X), dual(Y))


class Quadruple:
    """Arguments (x, y, X, Y) of a cross-ratio; requires the two cross
    transversalities (y, X) and (x, Y).

    ``check=False`` skips the float transversality guards for callers that
    guarantee them structurally (model-coordinate evaluations, where the
    determinant-to-scale ratio is exponentially small but fully accurate).
    """

    __slots__ = ("x", "y", "X", "Y", "checked")

    def __init__(self, x, y, X, Y, check=True):
        self.x, self.y, self.X, self.Y = x, y, X, Y
        self.checked = bool(check)
        spec = x.spec
        for f in (y, X, Y):
            if f.spec != spec:
                raise DomainError("quadruple flags live on different groups")
        if check:
            if not fl.transverse(self.y, self.X, ZERO_TOL):
                raise TransversalityError("(y, X) must be transverse")
            if not fl.transverse(self.x, self.Y, ZERO_TOL):
                raise TransversalityError("(x, Y) must be transverse")

    @property
    def spec(self):
        return self.x.spec


def _pairing(spec, a, b, k, form):
    """Highest-weight-line pairing determinant at level k."""
    if spec.family == "SO":
        m = (a.subspace(k).T @ form) @ b.subspace(k)
    else:
        m = np.hstack([a.subspace(k), b.subspace(spec.size - k)])
    return mx.det(m), m


def weight_cr(spec, theta_index, quad, tol=None):
    """Cross-ratio of the fundamental weight of a selected simple root."""
    if theta_index not in spec.theta:
        raise DomainError(f"root index {theta_index} not in theta")
    exact = all(f.exact for f in (quad.x, quad.y, quad.X, quad.Y))
    form = spec.form(exact=exact) if spec.family == "SO" else None
    k = theta_index if spec.family != "Sp" else spec.size // 2
    xX, mxX = _pairing(spec, quad.x, quad.X, k, form)
    yY, myY = _pairing(spec, quad.y, quad.Y, k, form)
    yX, myX = _pairing(spec, quad.y, quad.X, k, form)
    xY, mxY = _pairing(spec, quad.x, quad.Y, k, form)
    if quad.checked and (mx.det_is_zero(yX, myX, ZERO_TOL)
                         or mx.det_is_zero(xY, mxY, ZERO_TOL)):
        raise TransversalityError("degenerate pairing in weight cross-ratio")
    if yX == 0 or xY == 0:
        raise TransversalityError("vanishing pairing in weight cross-ratio")
    return (xX * yY) / (yX * xY)


def form_cr(spec, eta, quad, tol=1e-9):
    """Cross-ratio of a weight form: product of powers of the fundamental
    cross-ratios, b^eta = prod_theta (b^{omega_theta})^{c_theta}."""
    result = None
    for i, c in eta.coeffs:
        if c == 0:
            continue
        base = weight_cr(spec, i, quad, tol)
        term = _power(base, c)
        result = term if result is None else result * term
    if result is None:
        return Fraction(1) if all(
            f.exact for f in (quad.x, quad.y, quad.X, quad.Y)) else 1.0
    return result


def _power(base, c):
    if isinstance(c, (int, np.integer)) or (isinstance(c, Fraction) and c.denominator == 1):
        return base ** int(c)
    if isinstance(c, float) and c == round(c):
        return base ** int(round(c))
    b = float(base)
    if b <= 0:
        raise DomainError("non-integer power of a non-positive cross-ratio")
    return b ** float(c)


def period(spec, eta, g, aux=None, tol=1e-9, fixed=None):
    """The eta-period of a loxodromic element: the cross-ratio of its fixed
    flags against any auxiliary flag and its image.

    ``fixed`` may supply precomputed (attracting, repelling) flags, e.g.
    from a constructor-known spectrum, bypassing the eigenvector solve.
    Without an explicit auxiliary flag, semisimple elements are evaluated in
    their own diagonal model (the cross-ratio is invariant, and diagonal
    scaling costs no float precision even for huge spectral spread).
    """
    gr.require_loxodromic(spec, g, tol)
    if aux is None and fixed is None and _is_semisimple_real(g, tol):
        t = gr.eps_coordinates_of_jordan(spec, gr.jordan_projection(spec, g, tol))
        model = gr.exp_cartan(spec, t)
        return _period_in_model(spec, eta, model, tol)
    att, rep = fl.eigenflag(spec, g, tol) if fixed is None else fixed
    if aux is None:
        aux = _default_aux(spec, att, rep, g)
    if not (fl.transverse(aux, att, tol) and fl.transverse(aux, rep, tol)):
        raise TransversalityError("auxiliary flag must be transverse to both "
                                  "fixed flags")
    quad = Quadruple(att, rep, aux, fl.act(g, aux, check_form=False))
    return form_cr(spec, eta, quad, tol)


def _is_semisimple_real(g, tol):
    gf = mx.to_float(g)
    vals, vecs = np.linalg.eig(gf)
    if np.abs(vals.imag).max() > tol * max(1.0, np.abs(vals).max()):
        return False
    try:
        recon = vecs @ np.diag(vals) @ np.linalg.inv(vecs)
    except np.linalg.LinAlgError:
        return False
    return np.abs(recon.real - gf).max() <= 1e-7 * max(1.0, np.abs(gf).max())


def _period_in_model(spec, eta, model, tol):
    plus, minus = fl.standard_pair(spec)
    rng = np.random.default_rng(481516)
    for _ in range(16):
        rot = gr.random_compact_element(spec, rng)
        z = fl.act(rot, plus, check_form=False)
        if min(_transversality_margin(z, plus),
               _transversality_margin(z, minus)) > 1e-2:
            quad = Quadruple(plus, minus, z, fl.act(model, z, check_form=False),
                             check=False)
            return form_cr(spec, eta, quad, tol)
    raise DomainError("could not find an auxiliary flag in the model")


def _transversality_margin(a, b):
    """Smallest normalized pairing determinant of a flag pair."""
    worst = float("inf")
    for m in fl._pairing_dets(a.to_float(), b.to_float()):
        worst = min(worst, abs(mx.det(m)) / mx.hadamard_scale(m))
    return worst


def _default_aux(spec, att, rep, g=None, attempts=24):
    """A healthy auxiliary flag: transverse to both fixed flags (and, with
    g given, with its g-image staying well transverse too)."""
    rng = np.random.default_rng(20240917)
    plus, minus = fl.standard_pair(spec)
    best, best_margin = None, 0.0
    for k in range(attempts + 2):
        if k == 0:
            cand = plus
        elif k == 1:
            cand = minus
        else:
            cand = fl.act(gr.random_group_element(spec, rng), plus,
                          check_form=False)
        margin = min(_transversality_margin(cand, att),
                     _transversality_margin(cand, rep))
        if g is not None and margin > best_margin:
            moved = fl.act(g, cand, check_form=False)
            margin = min(margin, _transversality_margin(moved, att),
                         _transversality_margin(moved, rep))
        if margin > best_margin:
            best, best_margin = cand, margin
        if best_margin > 1e-2:
            return best
    if best is None or best_margin <= 1e-12:
        raise DomainError("could not find an auxiliary flag")
    return best


def tensor_cr_check(sample1, sample2):
    """Residual of the Kronecker-product identity
    b^{E1 x E2}(x1*x2, ...) = b^{E1}(x1,...) b^{E2}(x2,...)."""
    x1, y1, X1, Y1 = (np.asarray(v, dtype=float) for v in sample1)
    x2, y2, X2, Y2 = (np.asarray(v, dtype=float) for v in sample2)
    b1 = proj_cr(x1, y1, X1, Y1)
    b2 = proj_cr(x2, y2, X2, Y2)
    b12 = proj_cr(np.kron(x1, x2), np.kron(y1, y2),
                  np.kron(X1, X2), np.kron(Y1, Y2))
    return abs(b12 - b1 * b2)
