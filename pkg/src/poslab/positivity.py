"""Total positivity certification, positive tuple checkers, cones and the
bracket-positivity pairing.

The SL backend certifies diamond membership through Lusztig-style minor
signs of unipotent coordinates; the Sp backend uses definiteness of the
triple form on Lagrangians.  SO tuple checking deliberately raises
``CapabilityError`` (the cone-level certificate is out of scope); SO enters
only through sampled positive circles.

Convention, calibrated once against sampler-certified tuples and frozen in
the test suite: after standardizing the extremities (x, y) to the standard
pair, the inner point's unipotent coordinate u (with z = u . E^-) must be
totally positive, and the outer point's coordinate v must have totally
positive inverse, for a single common sign-diagonal conjugation; both
cyclic orientations of the extremities are admitted.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product

import numpy as np

from . import flags as fl
from . import groups as gr
from . import matrices as mx
from .errors import CapabilityError, DomainError, TransversalityError

MAX_MINOR_SIZE = 5  # SL minor enumeration cap (<= 252 minors)


# ---------------------------------------------------------------------------
# minor pattern from the Pascal reference matrix

def pascal_unitriangular(n):
    """The binomial unitriangular matrix r_ij = C(j, i) (0-based), a
    classical interior point of the totally positive unipotent cone."""
    from math import comb
    return mx.mat([[comb(j, i) for j in range(n)] for i in range(n)], exact=True)


@lru_cache(maxsize=None)
def minor_pattern(n):
    """All square minors of size n, tagged by non-vanishing on the Pascal
    reference.  Returns a tuple of (rows, cols, in_pattern)."""
    if n > MAX_MINOR_SIZE:
        raise CapabilityError(
            f"minor enumeration is capped at n = {MAX_MINOR_SIZE}")
    ref = pascal_unitriangular(n)
    out = []
    for k in range(1, n + 1):
        for rows in combinations(range(n), k):
            for cols in combinations(range(n), k):
                val = mx.det(ref[np.ix_(rows, cols)])
                out.append((rows, cols, val != 0))
    return tuple(out)


@lru_cache(maxsize=None)
def _pattern_index_arrays(n):
    """Pattern minors grouped by size as numpy index arrays (float path)."""
    groups = {}
    for rows, cols, inside in minor_pattern(n):
        groups.setdefault((len(rows), inside), []).append((rows, cols))
    packed = {}
    for key, pairs in groups.items():
        ri = np.array([p[0] for p in pairs])
        ci = np.array([p[1] for p in pairs])
        packed[key] = (ri, ci)
    return packed


def _all_minor_values(u):
    """(pattern, outside) minors with their Hadamard scales (float path)."""
    n = u.shape[0]
    if mx.is_exact(u):
        inside, outside = [], []
        for rows, cols, in_pat in minor_pattern(n):
            val = mx.det(u[np.ix_(rows, cols)])
            (inside if in_pat else outside).append(val)
        return inside, outside
    inside, outside = [], []
    for (k, in_pat), (ri, ci) in _pattern_index_arrays(n).items():
        subs = u[ri[:, :, None], ci[:, None, :]]
        vals = np.linalg.det(subs) if k > 1 else subs[:, 0, 0]
        scales = np.sqrt((subs * subs).sum(axis=1)).prod(axis=1) if k > 1 \
            else np.ones(len(ri))
        pair = (np.asarray(vals, dtype=float), np.maximum(scales, 1.0))
        (inside if in_pat else outside).append(pair)

    def cat(parts):
        if not parts:
            return np.empty(0), np.empty(0)
        return (np.concatenate([p[0] for p in parts]),
                np.concatenate([p[1] for p in parts]))

    return cat(inside), cat(outside)


def _check_unitriangular(u, tol):
    n = u.shape[0]
    if mx.is_exact(u):
        for i in range(n):
            if u[i, i] != 1:
                raise DomainError("matrix is not unipotent upper-triangular")
            for j in range(i):
                if u[i, j] != 0:
                    raise DomainError("matrix is not unipotent upper-triangular")
    else:
        if np.abs(np.diag(u) - 1).max() > tol or np.abs(np.tril(u, -1)).max() > tol:
            raise DomainError("matrix is not unipotent upper-triangular")


def is_totally_positive(u, tol=mx.DEFAULT_TOL, strict=True):
    """Lusztig total positivity for a unipotent upper-triangular matrix.

    Every minor not identically zero on the unitriangular group (those
    nonzero on the Pascal reference) must be > 0 (``strict``) respectively
    >= 0; the remaining minors must vanish.  Float thresholds are relative
    to each minor's own Hadamard scale.
    """
    _check_unitriangular(u, 1e-8)
    if mx.is_exact(u):
        inside, outside = _all_minor_values(u)
        if any(v != 0 for v in outside):
            return False
        if strict:
            return all(v > 0 for v in inside)
        return all(v >= 0 for v in inside)
    (ins, ins_scale), (outs, outs_scale) = _all_minor_values(u)
    if outs.size and np.any(np.abs(outs) > tol * outs_scale):
        return False
    if strict:
        return bool(np.all(ins > tol * ins_scale))
    return bool(np.all(ins >= -tol * ins_scale))


# ---------------------------------------------------------------------------
# sampling totally positive unipotents

def longest_word(n):
    """The fixed reduced word (1), (2,1), (3,2,1), ... for the longest
    permutation."""
    word = []
    for k in range(1, n):
        word.extend(range(k, 0, -1))
    return tuple(word)


def sample_tp_unipotent(spec, rng, t_range=(0.2, 1.5), exact=False):
    """Product of exp(t E_alpha) with t > 0 along the fixed reduced word."""
    if spec.family != "SL":
        raise CapabilityError("totally positive sampling is SL-only")
    n = spec.size
    word = longest_word(n)
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    out = mx.identity(n, exact=exact)
    for letter in word:
        t = rng.uniform(*t_range)
        if exact:
            t = Fraction(t).limit_denominator(64)
        e = mx.zeros(n, exact=exact)
        e[letter - 1, letter] = t
        out = out @ (mx.identity(n, exact=exact) + e)
    return out


# ---------------------------------------------------------------------------
# unipotent coordinates of a flag in the big cell

def unipotent_from_flag(z):
    """The unique upper unitriangular u with u . E^- = z (full SL flag).

    Needs z transverse to the ascending coordinate flag; raises otherwise.
    """
    spec = z.spec
    n = spec.size
    exact = z.exact
    cols = [None] * n
    eye = mx.identity(n, exact=exact)
    for level in range(1, n + 1):
        j = n - level  # 0-based column index of u being determined
        basis = z.subspace(level) if level < n else eye
        block = basis[j:, :]
        rhs = mx.zeros(level, 1, exact=exact)
        rhs[0, 0] = Fraction(1) if exact else 1.0
        try:
            coeff = mx.solve(block, rhs)
        except (DomainError, np.linalg.LinAlgError):
            raise TransversalityError(
                "flag is not transverse to the ascending coordinate flag")
        if not exact:
            d = np.linalg.det(block)
            if mx.det_is_zero(d, block, 1e-10):
                raise TransversalityError(
                    "flag is not transverse to the ascending coordinate flag")
        cols[j] = (basis @ coeff)[:, 0]
    u = np.column_stack(cols)
    if exact:
        for i in range(n):
            for k in range(i):
                u[i, k] = Fraction(0)
            u[i, i] = Fraction(1)
    else:
        u = np.triu(u)
        np.fill_diagonal(u, 1.0)
    return u


def _sign_classes(n):
    out = []
    for tail in product((1, -1), repeat=n - 1):
        out.append(np.array((1,) + tail))
    return out


def _sign_conj(u, s):
    if mx.is_exact(u):
        si = [int(v) for v in s]
        out = u.copy()
        for i in range(u.shape[0]):
            for j in range(u.shape[1]):
                out[i, j] = u[i, j] * si[i] * si[j]
        return out
    return u * np.outer(s, s)


# ---------------------------------------------------------------------------
# Maslov triple form (Sp backend)

def maslov_form(spec, l1, l2, l3, tol=1e-9):
    """Symmetric form on the middle Lagrangian of a pairwise transverse
    triple: q(v) = omega(v_1, v_3) where v = v_1 + v_3 along L1 + L3."""
    if spec.family != "Sp":
        raise DomainError("maslov_form needs an Sp spec")
    for a, b in ((l1, l2), (l2, l3), (l1, l3)):
        if not fl.transverse(a, b, tol):
            raise TransversalityError("maslov_form needs a pairwise transverse triple")
    b1, b2, b3 = l1.subspaces[0], l2.subspaces[0], l3.subspaces[0]
    amat = np.hstack([b1, b3])
    coeff = mx.solve(amat, b2)
    half = spec.size // 2
    v1 = b1 @ coeff[:half, :]
    v3 = b3 @ coeff[half:, :]
    form = spec.form(exact=l1.exact and l2.exact and l3.exact)
    m = v1.T @ form @ v3
    return (m + m.T) / 2


def _definiteness(q, tol):
    """+1 / -1 for definite forms, 0 otherwise (float); exact uses leading
    principal minors."""
    if mx.is_exact(q):
        n = q.shape[0]
        lead = [mx.det(q[: k, : k]) for k in range(1, n + 1)]
        if all(v > 0 for v in lead):
            return 1
        if all((v > 0 if i % 2 else v < 0) for i, v in enumerate(lead)):
            return -1
        return 0
    vals = np.linalg.eigvalsh(mx.to_float(q))
    scale = max(1.0, np.abs(vals).max())
    if np.all(vals > tol * scale):
        return 1
    if np.all(vals < -tol * scale):
        return -1
    return 0


def _semidefiniteness(q, tol):
    """+1 / -1 if semidefinite of that sign (0 for indefinite)."""
    if mx.is_exact(q):
        vals = np.linalg.eigvalsh(mx.to_float(q))
    else:
        vals = np.linalg.eigvalsh(q)
    scale = max(1.0, np.abs(vals).max())
    nonneg = np.all(vals >= -tol * scale)
    nonpos = np.all(vals <= tol * scale)
    if nonneg and not nonpos:
        return 1
    if nonpos and not nonneg:
        return -1
    if nonneg and nonpos:
        return 2  # zero form: semidefinite of either sign
    return 0


# ---------------------------------------------------------------------------
# positive triples and quadruples

def _require_family(spec):
    if spec.family == "SO":
        raise CapabilityError(
            "SO tuple positivity checking is not implemented; only positive "
            "circles can be sampled")
    if spec.family == "SL" and spec.size > MAX_MINOR_SIZE:
        raise CapabilityError(
            f"SL checking is capped at n = {MAX_MINOR_SIZE}")


def _equilibrate(u):
    """Conjugate by a positive diagonal to balance entry magnitudes.

    Positive-diagonal conjugation is a Levi move: it preserves the total
    positivity verdict and every sign class, but keeps float minors well
    scaled for strongly contracted configurations.
    """
    if mx.is_exact(u):
        return u
    n = u.shape[0]
    d = np.ones(n)
    for i in range(n - 1):
        step = abs(u[i, i + 1])
        d[i + 1] = d[i] * (step if step > 1e-100 else 1.0)
    u2 = u * np.outer(d, 1.0 / d)
    return u2 if np.isfinite(u2).all() else u


def _sl_inner_coordinate(x, y, z, tol):
    """Unipotent coordinate of z after standardizing extremities (x, y)."""
    g = fl.standardize(x, y, tol)
    return unipotent_from_flag(fl.act(g, z, check_form=False))


def triple_positive(x, z, y, tol=mx.DEFAULT_TOL, certificate=None):
    """Whether z lies in one of the diamonds with extremities x and y."""
    spec = x.spec
    _require_family(spec)
    for a, b in ((x, y), (z, x), (z, y)):
        if not fl.transverse(a, b):
            raise TransversalityError("triple_positive needs pairwise transverse flags")
    if spec.family == "Sp":
        sign = _definiteness(maslov_form(spec, x, z, y), tol)
        if certificate is not None:
            certificate["maslov_sign"] = sign
        return sign != 0
    for ext in ((x, y), (y, x)):
        u = _equilibrate(_sl_inner_coordinate(ext[0], ext[1], z, tol))
        for s in _sign_classes(spec.size):
            if is_totally_positive(_sign_conj(u, s), tol):
                if certificate is not None:
                    certificate["orientation"] = 0 if ext[0] is x else 1
                    certificate["sign_class"] = [int(v) for v in s]
                return True
    return False


def quadruple_positive(x, z, y, w, tol=mx.DEFAULT_TOL, certificate=None):
    """Whether (x, z, y, w) is a positive quadruple: z in a diamond with
    extremities (x, y) and w in the opposite diamond."""
    spec = x.spec
    _require_family(spec)
    for a, b in ((x, y), (z, x), (z, y), (w, x), (w, y)):
        if not fl.transverse(a, b):
            raise TransversalityError(
                "quadruple_positive needs the diamond transversalities")
    if spec.family == "Sp":
        sz = _definiteness(maslov_form(spec, x, z, y), tol)
        sw = _definiteness(maslov_form(spec, x, w, y), tol)
        if certificate is not None:
            certificate["maslov_signs"] = (sz, sw)
        return sz != 0 and sw == -sz
    for ext in ((x, y), (y, x)):
        u = _equilibrate(_sl_inner_coordinate(ext[0], ext[1], z, tol))
        v = _sl_inner_coordinate(ext[0], ext[1], w, tol)
        v_inv = _equilibrate(mx.inverse(v))
        for s in _sign_classes(spec.size):
            if is_totally_positive(_sign_conj(u, s), tol) and \
               is_totally_positive(_sign_conj(v_inv, s), tol):
                if certificate is not None:
                    certificate["orientation"] = 0 if ext[0] is x else 1
                    certificate["sign_class"] = [int(v0) for v0 in s]
                return True
    return False


def quadruple_certificate(x, z, y, w, tol=mx.DEFAULT_TOL):
    """JSON-able audit record for a quadruple verdict: the accepting
    orientation and sign class plus the evaluated minors (SL) or the Maslov
    eigenvalues (Sp)."""
    spec = x.spec
    cert = {"verdict": None}
    cert["verdict"] = bool(quadruple_positive(x, z, y, w, tol, certificate=cert))
    if spec.family == "Sp":
        qz = maslov_form(spec, x, z, y)
        qw = maslov_form(spec, x, w, y)
        cert["maslov_eigenvalues"] = {
            "inner": [float(v) for v in np.linalg.eigvalsh(mx.to_float(qz))],
            "outer": [float(v) for v in np.linalg.eigvalsh(mx.to_float(qw))]}
        return cert
    if cert["verdict"]:
        ext = (x, y) if cert.get("orientation") == 0 else (y, x)
        s = np.array(cert["sign_class"])
        u = _sign_conj(_equilibrate(_sl_inner_coordinate(ext[0], ext[1], z, tol)), s)
        v_inv = _sign_conj(_equilibrate(
            mx.inverse(_sl_inner_coordinate(ext[0], ext[1], w, tol))), s)
        for label, mat in (("inner_minors", u), ("outer_inverse_minors", v_inv)):
            rows = []
            for rr, cc, in_pat in minor_pattern(spec.size):
                if in_pat:
                    val = mx.det(mx.to_float(mat)[np.ix_(rr, cc)])
                    rows.append({"rows": list(rr), "cols": list(cc),
                                 "value": float(val),
                                 "sign": int(np.sign(val))})
            cert[label] = rows
    return cert


def tuple_positive(points, tol=mx.DEFAULT_TOL):
    """Positivity of a k-tuple: every ordered 4-subtuple must be a positive
    quadruple (triples delegate to the diamond test)."""
    if len(points) < 3:
        raise DomainError("tuple positivity needs at least 3 flags")
    if len(points) == 3:
        return triple_positive(points[0], points[1], points[2], tol)
    for i, j, k, m in combinations(range(len(points)), 4):
        if not quadruple_positive(points[i], points[j], points[k], points[m], tol):
            return False
    return True


def semi_positive(X, Y, x, y, tol=mx.DEFAULT_TOL):
    """Closure test for quadruple positivity: the certificate runs with the
    strict minor / definiteness inequalities relaxed to >= 0, while the
    transversality hypotheses (X, Y against x, y) stay strict."""
    spec = X.spec
    _require_family(spec)
    for a, b in ((X, x), (X, y), (Y, x), (Y, y)):
        if not fl.transverse(a, b):
            raise TransversalityError("semi_positive requires X, Y transverse to x, y")
    orderings = [(X, Y, x, y), (x, y, X, Y), (Y, X, y, x), (y, x, Y, X)]
    feasible = False
    for (a, z, b, w) in orderings:
        if not fl.transverse(a, b):
            continue
        for ext in ((a, b), (b, a)):
            try:
                if spec.family == "Sp":
                    sz = _semidefiniteness(maslov_form(spec, ext[0], z, ext[1]), tol)
                    sw = _semidefiniteness(maslov_form(spec, ext[0], w, ext[1]), tol)
                    feasible = True
                    if sz != 0 and sw != 0 and (sz == 2 or sw == 2 or sw == -sz):
                        return True
                    continue
                u = _sl_inner_coordinate(ext[0], ext[1], z, tol)
                v = _sl_inner_coordinate(ext[0], ext[1], w, tol)
            except (TransversalityError, DomainError):
                continue
            if spec.family == "Sp":
                continue
            u = _equilibrate(u)
            v_inv = _equilibrate(mx.inverse(v))
            feasible = True
            for s in _sign_classes(spec.size):
                if is_totally_positive(_sign_conj(u, s), tol, strict=False) and \
                   is_totally_positive(_sign_conj(v_inv, s), tol, strict=False):
                    return True
    if not feasible:
        raise TransversalityError(
            "no certificate ordering is solvable for this configuration")
    return False


# ---------------------------------------------------------------------------
# samplers for certified positive tuples

def cyclic_parameters(count, rng):
    """Cyclically ordered points on the projective line, as 2-vectors."""
    phis = np.sort(rng.uniform(0.0, np.pi, size=count))
    while np.min(np.diff(phis)) < 1e-3:
        phis = np.sort(rng.uniform(0.0, np.pi, size=count))
    offset = rng.uniform(0.0, np.pi)
    return [(np.cos(p + offset), np.sin(p + offset)) for p in phis]


def sample_positive_tuple(spec, count, rng, conjugate=True):
    """Sampler-certified positive tuple of flags (the checker's oracle)."""
    pts = cyclic_parameters(count, rng)
    if spec.family == "SL":
        out = [fl.veronese_flag(spec.size, p) for p in pts]
    elif spec.family == "Sp":
        out = [fl.sp_circle_flag(spec, p) for p in pts]
    else:
        out = [fl.so_circle_flag(spec, p) for p in pts]
    if conjugate:
        g = gr.random_group_element(spec, rng)
        if rng.uniform() < 0.5 and spec.family == "SL":
            g = g @ mx.to_float(sample_tp_unipotent(spec, rng))
        out = [fl.act(g, f, check_form=False) for f in out]
    return out


# ---------------------------------------------------------------------------
# cones and the bracket pairing

@dataclass(frozen=True)
class ConeVector:
    """Coordinates of a root-space vector relative to the family's cone
    basis; side +1 means u_theta, side -1 means u_{-theta}."""

    spec: gr.GroupSpec
    theta_index: int
    coords: tuple
    side: int = 1

    def __post_init__(self):
        if self.theta_index not in self.spec.theta:
            raise DomainError("cone index outside theta")
        if self.side not in (1, -1):
            raise DomainError("side must be +1 or -1")
        dim = cone_dimension(self.spec, self.theta_index)
        if len(self.coords) != dim:
            raise DomainError(f"cone coordinates must have length {dim}")

    def matrix(self, exact=False):
        basis = cone_basis(self.spec, self.theta_index, self.side, exact=exact)
        out = mx.zeros(self.spec.size, exact=exact)
        for c, b in zip(self.coords, basis):
            out = out + c * b
        return out


def cone_dimension(spec, theta_index):
    if spec.family == "SO" and theta_index == spec.p:
        return spec.k + 1
    if spec.family == "Sp":
        half = spec.size // 2
        return half * (half + 1) // 2
    return 1


def _so_unit(spec, i, j, exact, scale=1):
    out = mx.zeros(spec.size, exact=exact)
    out[i - 1, j - 1] = Fraction(scale) if exact else float(scale)
    return out


@lru_cache(maxsize=None)
def _cone_basis_cached(spec, theta_index, side, exact):
    n = spec.size
    if spec.family == "SL":
        t = gr.sl2_triple(spec, theta_index, exact=exact)
        return (t.x_plus if side > 0 else t.x_minus,)
    if spec.family == "Sp":
        half = n // 2
        basis = []
        for i in range(half):
            for j in range(i, half):
                b = mx.zeros(n, exact=exact)
                one = Fraction(1) if exact else 1.0
                if side > 0:
                    b[i, half + j] = one
                    b[j, half + i] = one
                else:
                    b[half + i, j] = one
                    b[half + j, i] = one
                basis.append(b)
        return tuple(basis)
    # SO family
    p, s = spec.p, spec.mirror
    if theta_index < p:
        t = gr.sl2_triple(spec, theta_index, exact=exact)
        return (t.x_plus if side > 0 else t.x_minus,)
    half = Fraction(1, 2) if exact else 0.5
    basis = []
    if side > 0:
        basis.append(_so_unit(spec, p, p + 1, exact) - _so_unit(spec, s(p + 1), s(p), exact))
        for m in range(p + 2, p + spec.k + 1):
            basis.append(_so_unit(spec, p, m, exact) + half * _so_unit(spec, m, s(p), exact))
        basis.append(_so_unit(spec, p, s(p + 1), exact) - _so_unit(spec, p + 1, s(p), exact))
    else:
        basis.append(_so_unit(spec, p + 1, p, exact) - _so_unit(spec, s(p), s(p + 1), exact))
        for m in range(p + 2, p + spec.k + 1):
            basis.append(_so_unit(spec, m, p, exact) + 2 * _so_unit(spec, s(p), m, exact))
        basis.append(_so_unit(spec, s(p + 1), p, exact) - _so_unit(spec, s(p), p + 1, exact))
    form = spec.form(exact=exact)
    for b in basis:
        resid = b.T @ form + form @ b
        assert all(v == 0 for v in resid.flat) if exact else \
            float(np.abs(resid).max()) < 1e-12, "cone basis left the algebra"
    return tuple(basis)


def cone_basis(spec, theta_index, side=1, exact=False):
    return _cone_basis_cached(spec, theta_index, side, exact)


def _expand_in_basis(basis, target):
    flat = np.column_stack([b.reshape(-1) for b in basis])
    rows = []
    seen = set()
    for i in range(flat.shape[0]):
        if any(x != 0 for x in flat[i]):
            rows.append(i)
            if len(rows) == len(basis):
                break
    sub = flat[rows, :]
    coeff = mx.solve(sub if mx.is_exact(sub) else np.asarray(sub, dtype=float),
                     target.reshape(-1)[rows])
    return coeff


@lru_cache(maxsize=None)
def _so_cone_form(spec, side):
    """Invariant quadratic form on the special SO root space, exact.

    Solved from infinitesimal invariance under the unselected-root sl2 and
    the compact middle rotations; normalized so the sum of the two extreme
    basis vectors is interior and positive.
    """
    p, s = spec.p, spec.mirror
    exact = True
    basis = cone_basis(spec, p, side, exact=True)
    dim = len(basis)
    # generators of the Levi semisimple part: short-root sl2 partners + so(k-1)
    gens = []
    half = Fraction(1, 2)
    for m in range(p + 2, p + spec.k + 1):
        gens.append(_so_unit(spec, p + 1, m, True) + half * _so_unit(spec, m, s(p + 1), True))
        gens.append(_so_unit(spec, m, p + 1, True) + 2 * _so_unit(spec, s(p + 1), m, True))
    for m1 in range(p + 2, p + spec.k + 1):
        for m2 in range(m1 + 1, p + spec.k + 1):
            gens.append(_so_unit(spec, m1, m2, True) - _so_unit(spec, m2, m1, True))
    form = spec.form(exact=True)
    for gmat in gens:
        resid = gmat.T @ form + form @ gmat
        assert all(v == 0 for v in resid.flat)
    # ad-action matrices on the root space
    ads = []
    for gmat in gens:
        cols = [_expand_in_basis(basis, gmat @ b - b @ gmat) for b in basis]
        ads.append(np.column_stack(cols))
    # solve ad^T Q + Q ad = 0 for symmetric Q
    unknowns = [(i, j) for i in range(dim) for j in range(i, dim)]
    rows = []
    for ad in ads:
        for a in range(dim):
            for b in range(dim):
                row = [Fraction(0)] * len(unknowns)
                for idx, (i, j) in enumerate(unknowns):
                    val = Fraction(0)
                    # (ad^T Q)[a,b] = sum_k ad[k,a] Q[k,b]
                    if j == b:
                        val += ad[i, a]
                    if i == b and i != j:
                        val += ad[j, a]
                    # (Q ad)[a,b] = sum_k Q[a,k] ad[k,b]
                    if i == a:
                        val += ad[j, b]
                    if j == a and i != j:
                        val += ad[i, b]
                    row[idx] = val
                rows.append(row)
    system = mx.mat(rows, exact=True)
    null = mx.nullspace(system)
    assert null.shape[1] == 1, "invariant form is not unique up to scale"
    q = mx.zeros(dim, exact=True)
    for idx, (i, j) in enumerate(unknowns):
        q[i, j] = null[idx, 0]
        q[j, i] = null[idx, 0]
    probe = [Fraction(0)] * dim
    probe[0] = Fraction(1)
    probe[-1] = Fraction(1)
    pv = _quad_value(q, probe)
    assert pv != 0, "cone form degenerate on the boundary-root sum"
    if pv < 0:
        q = -q
    return q


def _quad_value(q, coords):
    acc = 0
    for i, a in enumerate(coords):
        for j, b in enumerate(coords):
            acc += a * q[i, j] * b
    return acc


def cone_contains(spec, theta_index, v, tol=mx.DEFAULT_TOL):
    """Open-cone membership for the family's invariant cone."""
    if isinstance(v, ConeVector):
        coords, side = v.coords, v.side
    else:
        coords, side = tuple(v), 1
    if theta_index not in spec.theta:
        raise DomainError("cone index outside theta")
    exact = any(isinstance(c, Fraction) for c in coords)
    if spec.family == "Sp":
        half = spec.size // 2
        smat = mx.zeros(half, exact=exact)
        idx = 0
        for i in range(half):
            for j in range(i, half):
                smat[i, j] = coords[idx]
                smat[j, i] = coords[idx]
                idx += 1
        return _definiteness(smat, tol) == 1
    if spec.family == "SL" or theta_index < spec.p:
        c = coords[0]
        return c > (0 if exact else tol)
    q = _so_cone_form(spec, 1 if (not isinstance(v, ConeVector) or v.side > 0) else -1)
    qv = _quad_value(q, coords)
    a = coords[0]
    if exact:
        return qv > 0 and a > 0
    scale = max(1.0, float(max(abs(float(c)) for c in coords))) ** 2
    return float(qv) > tol * scale and float(a) > tol


def bracket_pairing(u, v, eta, tol=mx.DEFAULT_TOL):
    """<p([u, v]) | eta> for cone vectors u in c_theta, v in c_{-theta}."""
    spec = u.spec
    if v.spec != spec or v.theta_index != u.theta_index:
        raise DomainError("bracket pairing needs matching cone data")
    if u.side != 1 or v.side != -1:
        raise DomainError("bracket pairing expects (u, v) in (c_theta, c_{-theta})")
    if not cone_contains(spec, u.theta_index, u, tol):
        raise DomainError("u is not in the open cone")
    if not cone_contains(spec, v.theta_index, v, tol):
        raise DomainError("v is not in the open cone")
    exact = any(isinstance(c, Fraction) for c in u.coords + v.coords)
    umat = u.matrix(exact=exact)
    vmat = v.matrix(exact=exact)
    w = umat @ vmat - vmat @ umat
    t = gr.cartan_component(spec, w)
    t_b = gr.project_b_theta_eps(spec, t, exact=exact)
    return gr.eval_form_on_cartan(spec, eta, t_b)
