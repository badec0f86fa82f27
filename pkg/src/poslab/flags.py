"""Flags for the three families: nested subspace data, transversality,
group action, standardization, eigenflags and limit-curve flags."""

from functools import lru_cache

import numpy as np

from . import groups as gr
from . import matrices as mx
from .errors import CapabilityError, DomainError, TransversalityError


class Flag:
    """A point of the flag manifold, stored as nested subspace bases.

    ``subspaces[i]`` is an (n x d_i) basis matrix; bases are frozen at
    construction and never canonicalized.  Downstream formulas are either
    basis-invariant ratios or divide the relevant Gram factors out.
    """

    __slots__ = ("spec", "subspaces")

    def __init__(self, spec, subspaces, check=True, tol=1e-9):
        subs = tuple(np.asarray(b) if mx.is_exact(b) else np.array(b, dtype=float)
                     for b in subspaces)
        for b in subs:
            b.setflags(write=False)
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "subspaces", subs)
        if check:
            self._validate(tol)

    def __setattr__(self, name, value):
        raise AttributeError("flags are immutable")

    def _validate(self, tol):
        dims = self.spec.flag_dims()
        if len(self.subspaces) != len(dims):
            raise DomainError(
                f"{self.spec.family} flag needs subspaces of dims {dims}")
        for b, d in zip(self.subspaces, dims):
            if b.shape != (self.spec.size, d):
                raise DomainError(f"subspace basis has shape {b.shape}, wanted "
                                  f"({self.spec.size}, {d})")
            if mx.rank(b, tol) != d:
                raise DomainError("subspace basis is rank deficient")
        for small, big in zip(self.subspaces, self.subspaces[1:]):
            stacked = np.hstack([small, big])
            if mx.rank(stacked, tol) != big.shape[1]:
                raise DomainError("flag subspaces are not nested")
        form = self.spec.form(exact=self.exact)
        if form is not None:
            for b in self.subspaces:
                gram = b.T @ form @ b
                if self.exact:
                    if any(x != 0 for x in gram.flat):
                        raise DomainError("subspace is not isotropic")
                elif float(np.abs(gram).max()) > tol * max(1.0, float(np.abs(b).max()) ** 2):
                    raise DomainError("subspace is not isotropic")

    @property
    def exact(self):
        return mx.is_exact(self.subspaces[0])

    def subspace(self, dim):
        """Basis of the subspace of the given dimension."""
        for b in self.subspaces:
            if b.shape[1] == dim:
                return b
        raise DomainError(f"flag has no subspace of dimension {dim}")

    def to_float(self):
        if not self.exact:
            return self
        return Flag(self.spec, [mx.to_float(b) for b in self.subspaces], check=False)

    def to_json(self):
        return {"spec": self.spec.to_json(),
                "subspaces": [mx.matrix_to_json(b) for b in self.subspaces]}

    @staticmethod
    def from_json(data):
        return Flag(gr.GroupSpec.from_json(data["spec"]),
                    [mx.matrix_from_json(b) for b in data["subspaces"]])


def standard_pair(spec, exact=False):
    """The ascending coordinate flag and its opposite descending flag."""
    n = spec.size
    eye = mx.identity(n, exact=exact)
    dims = spec.flag_dims()
    if spec.family == "Sp":
        half = n // 2
        plus = Flag(spec, [eye[:, :half]], check=False)
        minus = Flag(spec, [eye[:, half:]], check=False)
        return plus, minus
    plus = Flag(spec, [eye[:, :d] for d in dims], check=False)
    minus = Flag(spec, [eye[:, n - d:][:, ::-1] for d in dims], check=False)
    return plus, minus


def _pairing_dets(x, y):
    """The family's transversality determinants for a pair of flags."""
    spec = x.spec
    if spec.family == "SO":
        form = spec.form(exact=x.exact and y.exact)
        return [(x.subspace(d).T @ form) @ y.subspace(d) for d in spec.flag_dims()]
    n = spec.size
    return [np.hstack([x.subspace(d), y.subspace(n - d)]) for d in spec.flag_dims()
            ] if spec.family == "SL" else [np.hstack([x.subspaces[0], y.subspaces[0]])]


def transverse(x, y, tol=1e-9):
    """Whether two flags are transverse (all pairing determinants nonzero)."""
    if x.spec != y.spec:
        raise DomainError("flags live on different groups")
    if x.exact != y.exact:
        y = y.to_float() if x.exact is False else y
        x = x.to_float()
    for m in _pairing_dets(x, y):
        if mx.det_is_zero(mx.det(m), m, tol):
            return False
    return True


def act(g, x, check_form=True, tol=1e-6):
    """Left action of a group element on a flag."""
    if check_form and not x.spec.preserves_form(g, tol):
        raise DomainError("element does not preserve the invariant form")
    return Flag(x.spec, [g @ b for b in x.subspaces], check=False)


def flags_equal(x, y, tol=1e-8):
    """Span-wise equality of two flags."""
    if x.spec != y.spec:
        return False
    for bx, by in zip(x.subspaces, y.subspaces):
        if mx.rank(np.hstack([bx, by]) if bx.dtype == by.dtype
                   else np.hstack([mx.to_float(bx), mx.to_float(by)]), tol) != bx.shape[1]:
            return False
    return True


def subspace_intersection(a, b, tol=1e-9):
    """Basis of col(a) ∩ col(b)."""
    stacked = np.hstack([a, -b])
    null = mx.nullspace(stacked, tol)
    if null.shape[1] == 0:
        return null[:0, :]
    return a @ null[: a.shape[1], :]


def standardize(x, y, tol=1e-9):
    """A group element g with act(g, x), act(g, y) the standard pair.

    SL and Sp work on both backends; SO needs an isotropic completion with
    square roots and is float-only.
    """
    spec = x.spec
    if not transverse(x, y, tol):
        raise TransversalityError("standardize needs transverse flags")
    exact = x.exact and y.exact
    n = spec.size
    if spec.family == "SL":
        cols = []
        eye = mx.identity(n, exact=exact)
        for i in range(1, n + 1):
            xa = x.subspace(i) if i < n else eye
            yb = y.subspace(n - i + 1) if i > 1 else eye
            v = subspace_intersection(xa, yb, tol)
            if v.shape[1] != 1:
                raise TransversalityError("flag pair is not in general position")
            cols.append(v[:, 0])
        v = np.column_stack(cols)
        g = mx.inverse(v)
        if not exact:
            d = np.linalg.det(g)
            if d < 0:
                g[-1, :] = -g[-1, :]
                d = -d
            g = g / d ** (1.0 / n)
        return g
    if spec.family == "Sp":
        form = spec.form(exact=exact)
        u = x.subspaces[0]
        w0 = y.subspaces[0]
        m = u.T @ form @ w0
        w = w0 @ mx.inverse(m)
        v = np.hstack([u, w])
        return mx.inverse(v)
    # SO: hyperbolic pairs from the two flags, then a split of the complement
    if exact:
        raise CapabilityError("SO standardization is float-only (needs square roots)")
    form = spec.form()

    def pair_value(u, v):
        return float(u @ form @ v)

    bs, cs = [], []
    for i in range(1, spec.p + 1):
        xa = mx.to_float(x.subspace(i))
        cand = xa[:, -1]
        for b, c in zip(bs, cs):
            cand = cand - 2.0 * pair_value(cand, c) * b
        # make cand independent of earlier levels inside x^{(i)}
        if i > 1:
            prev = np.column_stack(bs)
            proj = prev @ np.linalg.lstsq(prev, cand, rcond=None)[0]
            if np.linalg.norm(cand - proj) < tol * max(1.0, np.linalg.norm(cand)):
                cand = xa[:, 0]
                for b, c in zip(bs, cs):
                    cand = cand - 2.0 * pair_value(cand, c) * b
        ya = mx.to_float(y.subspace(i))
        dual = ya[:, -1]
        for b, c in zip(bs, cs):
            dual = dual - 2.0 * pair_value(dual, b) * c
        scale = pair_value(cand, dual)
        if abs(scale) < 1e-12:
            raise TransversalityError("flag pair is not in general position")
        dual = dual / (2.0 * scale)
        bs.append(cand)
        cs.append(dual)
    span = np.column_stack(bs + cs)
    # complement of the hyperbolic span, orthogonal w.r.t. the form
    null = mx.nullspace(span.T @ form, tol)
    bz = null.T @ form @ null
    vals, vecs = np.linalg.eigh((bz + bz.T) / 2)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    if vals[0] <= 0 or np.any(vals[1:] >= 0):
        raise DomainError("complement signature is not (1, k)")
    zpos = null @ (vecs[:, 0] / np.sqrt(vals[0]))
    znegs = [null @ (vecs[:, j] / np.sqrt(-vals[j])) for j in range(1, null.shape[1])]
    b_extra = (zpos + znegs[-1]) / np.sqrt(2.0)
    c_extra = (zpos - znegs[-1]) / np.sqrt(2.0) / 2.0
    mids = znegs[:-1]
    cols = bs + [b_extra] + mids + [c_extra] + cs[::-1]
    v = np.column_stack(cols)
    resid = np.abs(v.T @ form @ v - form).max()
    if resid > 1e-7:
        raise DomainError(f"SO standardization failed, residual {resid:.2e}")
    return np.linalg.inv(v)


def eigenflag(spec, g, tol=1e-9):
    """(attracting, repelling) fixed flags of a loxodromic element."""
    gr.require_loxodromic(spec, g, tol)
    att = _attracting_flag(spec, g, tol)
    rep = _attracting_flag(spec, np.linalg.inv(mx.to_float(g)), tol)
    return att, rep


def _attracting_flag(spec, g, tol):
    g = mx.to_float(g)
    vals, vecs = np.linalg.eig(g)
    order = np.argsort(-np.abs(vals))
    vals, vecs = vals[order], vecs[:, order]
    dims = spec.flag_dims()
    top = max(dims)
    cols = []
    i = 0
    while len(cols) < top:
        lam = vals[i]
        if abs(lam.imag) <= tol * max(1.0, abs(lam)):
            v = vecs[:, i].real
            cols.append(v / np.linalg.norm(v))
            i += 1
        else:
            if len(cols) + 2 > top and (len(cols) + 1) in dims:
                raise DomainError("complex leading pair at a required gap")
            re, im = vecs[:, i].real, vecs[:, i].imag
            cols.append(re / np.linalg.norm(re))
            cols.append(im / np.linalg.norm(im))
            i += 2
    basis = np.column_stack(cols[:top])
    return Flag(spec, [basis[:, :d] for d in dims], tol=1e-6)


def veronese_flag(n, point, exact=False):
    """Osculating flag of the degree-(n-1) rational normal curve at a point
    of the projective line (point given as a nonzero 2-vector)."""
    a, b = point
    if exact:
        from fractions import Fraction
        a, b = Fraction(a), Fraction(b)
        if a == 0 and b == 0:
            raise DomainError("zero vector is not a projective point")
        s = a * a + b * b
        g2 = mx.mat([[a, -b / s], [b, a / s]], exact=True)
    else:
        a, b = float(a), float(b)
        norm = np.hypot(a, b)
        if norm == 0:
            raise DomainError("zero vector is not a projective point")
        a, b = a / norm, b / norm
        g2 = mx.mat([[a, -b], [b, a]])
    spec = gr.GroupSpec.sl(n)
    plus, _ = standard_pair(spec, exact=exact)
    return act(gr.principal_embedding(n)(g2), plus, check_form=False)


def sp_circle_flag(spec, point):
    """Lagrangian on the diagonal-embedding circle over a projective point."""
    if spec.family != "Sp":
        raise DomainError("sp_circle_flag needs an Sp spec")
    a, b = float(point[0]), float(point[1])
    norm = np.hypot(a, b)
    if norm == 0:
        raise DomainError("zero vector is not a projective point")
    half = spec.size // 2
    basis = np.vstack([a / norm * np.eye(half), b / norm * np.eye(half)])
    return Flag(spec, [basis])


@lru_cache(maxsize=None)
def _so_circle_data(spec):
    embed, chart = gr.so_circle_embedding(spec)
    return embed, chart


def so_circle_flag(spec, point):
    """Isotropic flag on the positive circle of SO(p+1,p+k)."""
    if spec.family != "SO":
        raise DomainError("so_circle_flag needs an SO spec")
    _, chart = _so_circle_data(spec)
    ver = veronese_flag(2 * spec.p + 1, point)
    subs = [chart @ ver.subspace(d) for d in spec.flag_dims()]
    return Flag(spec, subs, tol=1e-6)


def so_circle_embedding_matrix(spec, a2):
    embed, _ = _so_circle_data(spec)
    return embed(a2)
