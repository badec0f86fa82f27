"""Concrete models of the three implemented group families.

Families and their flag data:

* ``SL(n)``       full flags, every simple root selected;
* ``Sp(2n)``      Lagrangian Grassmannian, the long root alpha_n selected;
* ``SO(p+1,p+k)`` partial isotropic flags of dimensions 1..p, the long
  roots alpha_1..alpha_p selected.

Coordinates: ``Sp(2n)`` uses a symplectic basis (e_1..e_n, f_1..f_n) with
pairing <e_i, f_j> = delta_ij.  ``SO(p+1,p+k)`` uses the basis in which the
quadratic form reads  sum_{i<=p+1} x_i x_{N+1-i} - sum x_middle^2  with
N = 2p+k+1; index i pairs with N+1-i.

Root indices are 1-based throughout.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, log

import numpy as np
import scipy.linalg

from . import matrices as mx
from .errors import CapabilityError, DomainError, DimensionError

_FAMILIES = ("SL", "Sp", "SO")


@dataclass(frozen=True)
class GroupSpec:
    """A concrete group model: family, matrix size, selected simple roots."""

    family: str
    size: int                 # dimension of the defining representation
    p: int = 0                # SO only: number of flag levels (signature p+1)
    k: int = 0                # SO only: signature (p+1, p+k)
    theta: tuple = ()

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise DomainError(f"unknown family {self.family!r}")
        if self.family == "SL":
            if self.size < 2:
                raise DomainError("SL(n) needs n >= 2")
            legal = tuple(range(1, self.size))
        elif self.family == "Sp":
            if self.size < 4 or self.size % 2:
                raise DomainError("Sp needs even size >= 4")
            legal = (self.size // 2,)
        else:
            if self.p < 1 or self.k < 2:
                raise DomainError("SO(p+1,p+k) needs p >= 1, k >= 2")
            if self.size != 2 * self.p + self.k + 1:
                raise DomainError("SO size inconsistent with (p, k)")
            legal = tuple(range(1, self.p + 1))
        if tuple(self.theta) != legal:
            raise DomainError(
                f"{self.family} carries the positive structure only for "
                f"theta = {legal}, got {tuple(self.theta)}")

    # -- constructors -------------------------------------------------------
    @staticmethod
    def sl(n):
        return GroupSpec("SL", n, theta=tuple(range(1, n)))

    @staticmethod
    def sp(size):
        return GroupSpec("Sp", size, theta=(size // 2,))

    @staticmethod
    def so(p_sig, q_sig):
        """From the signature (p_sig, q_sig) = (p+1, p+k)."""
        p = p_sig - 1
        k = q_sig - p
        return GroupSpec("SO", p_sig + q_sig, p=p, k=k,
                         theta=tuple(range(1, p + 1)))

    @staticmethod
    def parse(token):
        """Parse compact names like SL3, Sp4, SO34."""
        token = token.strip()
        if token.startswith("SL"):
            return GroupSpec.sl(int(token[2:]))
        if token.startswith("Sp"):
            return GroupSpec.sp(int(token[2:]))
        if token.startswith("SO"):
            digits = token[2:].replace(",", "")
            return GroupSpec.so(int(digits[0]), int(digits[1]))
        raise DomainError(f"cannot parse group token {token!r}")

    # -- serialization ------------------------------------------------------
    def to_json(self):
        if self.family == "SO":
            return {"family": "SO", "p": self.p + 1, "q": self.p + self.k,
                    "theta": list(self.theta)}
        return {"family": self.family, "n": self.size, "theta": list(self.theta)}

    @staticmethod
    def from_json(data):
        if data["family"] == "SO":
            return GroupSpec.so(data["p"], data["q"])
        if data["family"] == "Sp":
            return GroupSpec.sp(data["n"])
        return GroupSpec.sl(data["n"])

    # -- root/Cartan bookkeeping -------------------------------------------
    @property
    def rank(self):
        """Number of simple restricted roots."""
        if self.family == "SL":
            return self.size - 1
        if self.family == "Sp":
            return self.size // 2
        return self.p + 1

    @property
    def eps_count(self):
        """Length of the epsilon-coordinate vector of the Cartan."""
        if self.family == "SL":
            return self.size
        if self.family == "Sp":
            return self.size // 2
        return self.p + 1

    def mirror(self, i):
        """1-based index paired with i under the SO form."""
        return self.size + 1 - i

    def form(self, exact=False):
        """Gram matrix of the invariant bilinear form (None for SL)."""
        if self.family == "SL":
            return None
        if self.family == "Sp":
            n = self.size // 2
            j = mx.zeros(self.size, exact=exact)
            one = Fraction(1) if exact else 1.0
            for i in range(n):
                j[i, n + i] = one
                j[n + i, i] = -one
            return j
        g = mx.zeros(self.size, exact=exact)
        half = Fraction(1, 2) if exact else 0.5
        for i in range(1, self.p + 2):
            g[i - 1, self.mirror(i) - 1] = half
            g[self.mirror(i) - 1, i - 1] = half
        for j in range(self.p + 2, self.p + self.k + 1):
            g[j - 1, j - 1] = -(Fraction(1) if exact else 1.0)
        return g

    def preserves_form(self, g, tol=1e-8):
        """Whether g preserves the invariant form (is invertible, for SL)."""
        form = self.form(exact=mx.is_exact(g))
        if form is None:
            d = mx.det(g)
            return not mx.det_is_zero(d, g, tol)
        resid = g.T @ form @ g - form
        if mx.is_exact(g):
            return all(x == 0 for x in resid.flat)
        scale = max(1.0, float(np.abs(mx.to_float(g)).max()) ** 2)
        return float(np.abs(resid).max()) <= tol * scale

    def flag_dims(self):
        """Subspace dimensions of a flag for this family."""
        if self.family == "SL":
            return tuple(range(1, self.size))
        if self.family == "Sp":
            return (self.size // 2,)
        return tuple(range(1, self.p + 1))

    def gap_position(self, theta_index):
        """Position in the sorted moduli vector where the root gap sits."""
        if theta_index not in self.theta:
            raise DomainError(f"root index {theta_index} is not in theta")
        return theta_index

    def iota(self, theta_index):
        """Opposition involution on the selected simple roots."""
        if theta_index not in self.theta:
            raise DomainError(f"root index {theta_index} is not in theta")
        return self.size - theta_index if self.family == "SL" else theta_index


# ---------------------------------------------------------------------------
# Cartan subalgebra

def cartan_element(spec, t, exact=False):
    """Matrix of the Cartan element with epsilon-coordinates t."""
    t = list(t)
    if len(t) != spec.eps_count:
        raise DimensionError("wrong number of Cartan coordinates")
    n = spec.size
    out = mx.zeros(n, exact=exact)
    if spec.family == "SL":
        for i, v in enumerate(t):
            out[i, i] = v
    elif spec.family == "Sp":
        half = n // 2
        for i, v in enumerate(t):
            out[i, i] = v
            out[half + i, half + i] = -v
    else:
        for i, v in enumerate(t):
            out[i, i] = v
            out[spec.mirror(i + 1) - 1, spec.mirror(i + 1) - 1] = -v
    return out


def exp_cartan(spec, t):
    """Group element exp of the Cartan element with coordinates t (float)."""
    mat = mx.to_float(cartan_element(spec, t))
    out = np.eye(spec.size)
    np.fill_diagonal(out, np.exp(np.diag(mat)))
    return out


def cartan_coordinates(spec, x, tol=1e-9):
    """Epsilon-coordinates of a Cartan matrix; error if x is not Cartan."""
    exact = mx.is_exact(x)
    d = np.array([x[i, i] for i in range(spec.size)], dtype=object if exact else float)
    if spec.family == "SL":
        t = list(d)
        if exact:
            if sum(t) != 0:
                raise DomainError("SL Cartan element must be traceless")
        elif abs(sum(t)) > tol * max(1.0, float(np.abs(d).max())):
            raise DomainError("SL Cartan element must be traceless")
    elif spec.family == "Sp":
        t = list(d[: spec.size // 2])
    else:
        t = list(d[: spec.p + 1])
    rebuilt = cartan_element(spec, t, exact=exact)
    resid = x - rebuilt
    if exact:
        ok = all(v == 0 for v in resid.flat)
    else:
        ok = float(np.abs(resid).max()) <= tol * max(1.0, float(np.abs(mx.to_float(x)).max()))
    if not ok:
        raise DomainError("matrix is not in the model Cartan subalgebra")
    return t


def simple_root_value(spec, i, t):
    """alpha_i evaluated on epsilon-coordinates t."""
    if spec.family == "SL":
        return t[i - 1] - t[i]
    if spec.family == "Sp":
        if i < spec.rank:
            return t[i - 1] - t[i]
        return 2 * t[-1]
    if i <= spec.p:
        return t[i - 1] - t[i]
    return t[spec.p]


def fundamental_weight_value(spec, i, t):
    """omega_i evaluated on epsilon-coordinates t (theta-indices only)."""
    if i not in spec.theta:
        raise DomainError(f"root index {i} is not in theta")
    if spec.family == "SL":
        total = sum(t)
        part = sum(t[:i])
        if isinstance(part, Fraction) or isinstance(total, Fraction):
            return part - Fraction(i, spec.size) * total
        return part - (i / spec.size) * total
    return sum(t[:i])


def h_coroot_eps(spec, i):
    """Epsilon-coordinates of the coroot h_{alpha_i} (all simple roots)."""
    m = spec.eps_count
    t = [0] * m
    if spec.family == "SL":
        t[i - 1], t[i] = 1, -1
    elif spec.family == "Sp":
        if i < spec.rank:
            t[i - 1], t[i] = 1, -1
        else:
            t[-1] = 1
    else:
        if i <= spec.p:
            t[i - 1], t[i] = 1, -1
        else:
            t[-1] = 2
    return t


def trace_form_eps(spec):
    """Gram matrix of the defining-rep trace form in epsilon-coordinates."""
    m = spec.eps_count
    if spec.family == "SL":
        return np.eye(m)
    return 2.0 * np.eye(m)


# ---------------------------------------------------------------------------
# weight forms

@dataclass(frozen=True)
class WeightForm:
    """Nonnegative combination of the fundamental weights of theta roots."""

    spec: GroupSpec
    coeffs: tuple  # ((theta_index, coefficient), ...)

    def __post_init__(self):
        seen = set()
        for i, c in self.coeffs:
            if i not in self.spec.theta:
                raise DomainError(f"index {i} outside theta {self.spec.theta}")
            if i in seen:
                raise DomainError("repeated root index in weight form")
            seen.add(i)
            if c < 0:
                raise DomainError("weight-form coefficients must be >= 0")

    @staticmethod
    def make(spec, mapping):
        return WeightForm(spec, tuple(sorted(mapping.items())))

    @staticmethod
    def fundamental(spec, i):
        return WeightForm.make(spec, {i: 1})

    def coefficient(self, i):
        for j, c in self.coeffs:
            if j == i:
                return c
        if i in self.spec.theta:
            return 0
        raise DomainError(f"index {i} outside theta")

    def value_on(self, t):
        """Evaluate on epsilon-coordinates t."""
        return sum(c * fundamental_weight_value(self.spec, i, t)
                   for i, c in self.coeffs)

    def __add__(self, other):
        merged = {i: c for i, c in self.coeffs}
        for i, c in other.coeffs:
            merged[i] = merged.get(i, 0) + c
        return WeightForm.make(self.spec, merged)

    def scaled(self, factor):
        return WeightForm.make(self.spec, {i: c * factor for i, c in self.coeffs})


def pairing_h(eta, theta_index):
    """<h_theta | eta>, the coefficient of omega_theta in eta."""
    return eta.coefficient(theta_index)


# ---------------------------------------------------------------------------
# sl2-triples

@dataclass(frozen=True)
class Sl2Triple:
    x_plus: np.ndarray
    x_minus: np.ndarray
    h: np.ndarray

    def verify(self, tol=1e-12):
        b1 = self.h @ self.x_plus - self.x_plus @ self.h - 2 * self.x_plus
        b2 = self.h @ self.x_minus - self.x_minus @ self.h + 2 * self.x_minus
        b3 = self.x_plus @ self.x_minus - self.x_minus @ self.x_plus - self.h
        for r in (b1, b2, b3):
            if mx.is_exact(r):
                if any(x != 0 for x in r.flat):
                    return False
            elif float(np.abs(r).max()) > tol * max(1.0, float(np.abs(mx.to_float(self.h)).max())):
                return False
        return True

    def conjugated(self, g, g_inv=None):
        gi = mx.inverse(g) if g_inv is None else g_inv
        return Sl2Triple(g @ self.x_plus @ gi, g @ self.x_minus @ gi, g @ self.h @ gi)

    def flipped(self):
        """The triple (x_-, x_+, -h); swaps the roles of the two fixed points."""
        return Sl2Triple(self.x_minus, self.x_plus, -self.h)


def _unit(n, i, j, exact):
    out = mx.zeros(n, exact=exact)
    out[i, j] = Fraction(1) if exact else 1.0
    return out


def sl2_triple(spec, theta_index, exact=False):
    """The sl2-triple of a selected simple root in the defining representation."""
    if theta_index not in spec.theta:
        raise DomainError(f"root index {theta_index} not in theta {spec.theta}")
    n, i = spec.size, theta_index
    if spec.family == "SL":
        xp = _unit(n, i - 1, i, exact)
        xm = _unit(n, i, i - 1, exact)
    elif spec.family == "Sp":
        half = n // 2
        xp = _unit(n, half - 1, n - 1, exact)
        xm = _unit(n, n - 1, half - 1, exact)
    else:
        s = spec.mirror
        xp = _unit(n, i - 1, i, exact) - _unit(n, s(i + 1) - 1, s(i) - 1, exact)
        xm = _unit(n, i, i - 1, exact) - _unit(n, s(i) - 1, s(i + 1) - 1, exact)
    h = xp @ xm - xm @ xp
    triple = Sl2Triple(xp, xm, h)
    assert triple.verify(), "sl2 bracket relations failed"
    return triple


def weyl_rotation(triple):
    """exp(pi/2 (x_+ - x_-)) for triples whose K = x_+ - x_- satisfies K^3 = -K.

    All triples produced by :func:`sl2_triple` (and their conjugates) do, so
    the representative is I + K + K^2, exact-backend friendly.
    """
    k = triple.x_plus - triple.x_minus
    k3 = k @ k @ k
    resid = k3 + k
    if mx.is_exact(k):
        if any(x != 0 for x in resid.flat):
            raise DomainError("Weyl rotation needs K^3 = -K")
    elif float(np.abs(resid).max()) > 1e-9 * max(1.0, float(np.abs(mx.to_float(k)).max()) ** 3):
        raise DomainError("Weyl rotation needs K^3 = -K")
    return mx.identity(k.shape[0], exact=mx.is_exact(k)) + k + k @ k


# ---------------------------------------------------------------------------
# Jordan projection, loxodromy, characters

def jordan_projection(spec, g, tol=mx.DEFAULT_TOL):
    """Descending log-moduli of the eigenvalues (length = matrix size).

    For Sp/SO the vector is symmetrized under negation, which the invariant
    form forces in exact arithmetic.
    """
    moduli = mx.eigen_moduli(mx.to_float(g), tol)
    if moduli[-1] <= 0:
        raise DomainError("group element must be invertible")
    if spec.family == "SL":
        logs = np.log(np.maximum(moduli, 1e-300))
        logs = logs - logs.mean()  # SL-normalization: project to traceless
    else:
        logs = np.log(np.maximum(moduli, 1e-300))
        logs = (logs - logs[::-1]) / 2.0
    return np.sort(logs)[::-1]


def eps_coordinates_of_jordan(spec, logs):
    if spec.family == "SL":
        return list(logs)
    return list(logs[: spec.eps_count])


def loxodromy_gaps(spec, g, tol=mx.DEFAULT_TOL):
    """Multiplicative gaps mu_i/mu_{i+1} at the theta positions."""
    moduli = mx.eigen_moduli(mx.to_float(g), tol)
    gaps = {}
    for i in spec.theta:
        pos = spec.gap_position(i)
        gaps[i] = float(moduli[pos - 1] / max(moduli[pos], 1e-300))
    return gaps


def is_loxodromic(spec, g, tol=mx.DEFAULT_TOL):
    return all(v > 1 + 10 * tol for v in loxodromy_gaps(spec, g, tol).values())


def require_loxodromic(spec, g, tol=mx.DEFAULT_TOL):
    for i, v in loxodromy_gaps(spec, g, tol).items():
        if not v > 1 + 10 * tol:
            raise DomainError(
                f"element is not loxodromic: gap at root alpha_{i} is {v:.6g}")


def character(spec, eta, g, tol=mx.DEFAULT_TOL):
    """chi_eta(g) = exp <a | eta> on the Jordan projection a."""
    require_loxodromic(spec, g, tol)
    t = eps_coordinates_of_jordan(spec, jordan_projection(spec, g, tol))
    return float(np.exp(eta.value_on(t)))


def root_character(spec, theta_index, g, tol=mx.DEFAULT_TOL):
    """chi_{alpha_theta}(g); equals the moduli ratio at the gap position."""
    require_loxodromic(spec, g, tol)
    t = eps_coordinates_of_jordan(spec, jordan_projection(spec, g, tol))
    return float(np.exp(simple_root_value(spec, theta_index, t)))


# ---------------------------------------------------------------------------
# projection onto b_theta

def project_b_theta(spec, x):
    """Orthogonal projection of a Cartan element onto the common kernel of
    the unselected simple roots, with respect to the trace form."""
    exact = mx.is_exact(x)
    t = cartan_coordinates(spec, x)
    t_proj = project_b_theta_eps(spec, t, exact=exact)
    return cartan_element(spec, t_proj, exact=exact)


def project_b_theta_eps(spec, t, exact=False):
    """Same projection in epsilon-coordinates."""
    unselected = [i for i in range(1, spec.rank + 1) if i not in spec.theta]
    if not unselected:
        return list(t)
    basis = [h_coroot_eps(spec, i) for i in unselected]
    gram_rows = []
    rhs = []
    for a in basis:
        gram_rows.append([_dot_eps(spec, a, b, exact) for b in basis])
        rhs.append(_dot_eps(spec, a, t, exact))
    gram = mx.mat(gram_rows, exact=exact)
    coeff = mx.solve(gram, mx.mat([[v] for v in rhs], exact=exact))[:, 0]
    out = list(t)
    for c, b in zip(coeff, basis):
        out = [v - c * w for v, w in zip(out, b)]
    return out


def _dot_eps(spec, a, b, exact):
    scale = 1 if spec.family == "SL" else 2
    s = sum(x * y for x, y in zip(a, b)) * scale
    return Fraction(s) if exact and not isinstance(s, Fraction) else s


def cartan_component(spec, x):
    """Trace-form-orthogonal projection of an algebra element onto the Cartan,
    returned in epsilon-coordinates.

    The Cartan is trace-orthogonal to every root space and to the compact
    centralizer in these models, so reading the relevant diagonal entries
    suffices.
    """
    exact = mx.is_exact(x)
    n = spec.size
    if spec.family == "SL":
        d = [x[i, i] for i in range(n)]
        mean = sum(d) / (Fraction(n) if exact else float(n))
        return [v - mean for v in d]
    if spec.family == "Sp":
        half = n // 2
        two = Fraction(2) if exact else 2.0
        return [(x[i, i] - x[half + i, half + i]) / two for i in range(half)]
    two = Fraction(2) if exact else 2.0
    return [(x[i, i] - x[spec.mirror(i + 1) - 1, spec.mirror(i + 1) - 1]) / two
            for i in range(spec.p + 1)]


def eval_form_on_cartan(spec, eta, t):
    """<h | eta> for a Cartan element given in epsilon-coordinates."""
    return eta.value_on(t)


# ---------------------------------------------------------------------------
# principal embedding SL(2) -> SL(n)

def principal_embedding(n):
    """The (n-1)-st symmetric power on the binomial-scaled monomial basis.

    Returns a callable sending 2x2 matrices to n x n matrices; exact input
    yields exact output.  diag(t, 1/t) maps to diag(t^{n-1}, ..., t^{1-n}).
    """
    if n < 2:
        raise DomainError("principal embedding needs n >= 2")
    m = n - 1

    def embed(a2):
        a, b = a2[0, 0], a2[0, 1]
        c, d = a2[1, 0], a2[1, 1]
        exact = mx.is_exact(a2)
        out = mx.zeros(n, exact=exact)
        for j in range(n):
            for i in range(n):
                acc = Fraction(0) if exact else 0.0
                for r in range(max(0, i - j), min(m - j, i) + 1):
                    t = i - r
                    term = comb(m - j, r) * comb(j, t)
                    acc = acc + term * a ** (m - j - r) * c ** r * b ** (j - t) * d ** t
                if exact:
                    out[i, j] = acc * Fraction(comb(m, j), comb(m, i))
                else:
                    out[i, j] = acc * comb(m, j) / comb(m, i)
        return out

    return embed


def _sl2_generator_images(n):
    """Images of (e, f, h) under the principal embedding differential."""
    m = n - 1
    e = mx.zeros(n, exact=True)
    f = mx.zeros(n, exact=True)
    h = mx.zeros(n, exact=True)
    for i in range(n):
        h[i, i] = Fraction(m - 2 * i)
        if i >= 1:
            e[i - 1, i] = Fraction(m - i + 1)
        if i + 1 <= m:
            f[i + 1, i] = Fraction(i + 1)
    return e, f, h


def symmetric_power_form(n):
    """Invariant bilinear form of the symmetric power on the scaled basis.

    Antisymmetric for even n (odd power), symmetric for odd n.  Normalized
    so that the middle entry is positive in the symmetric case.
    """
    m = n - 1
    b = mx.zeros(n, exact=True)
    flip = (-1) ** (m // 2) if m % 2 == 0 else 1
    for i in range(n):
        b[i, m - i] = Fraction(flip * (-1) ** i * comb(m, i))
    e, f, h = _sl2_generator_images(n)
    for gen in (e, f, h):
        resid = gen.T @ b + b @ gen
        assert all(x == 0 for x in resid.flat), "invariant form check failed"
    return b


def darboux_change(b):
    """Rational W with W^T b W equal to the standard symplectic form.

    b must be invertible antisymmetric of even size; no square roots are
    needed, so the exact backend passes through.
    """
    n = b.shape[0]
    exact = mx.is_exact(b)
    basis = [mx.identity(n, exact=exact)[:, i] for i in range(n)]
    us, vs = [], []

    def pair(x, y):
        return (x @ b @ y)

    while basis:
        u = basis.pop(0)
        j = next((idx for idx, w in enumerate(basis) if pair(u, w) != 0), None)
        if j is None:
            raise DomainError("degenerate antisymmetric form")
        v = basis.pop(j)
        v = v / pair(u, v)
        rest = []
        for w in basis:
            w2 = w - pair(u, w) * v + pair(v, w) * u
            rest.append(w2)
        # drop dependent vectors that collapsed to zero
        basis = [w for w in rest if (any(x != 0 for x in w) if exact
                                     else float(np.abs(w).max()) > 1e-12)]
        us.append(u)
        vs.append(v)
    w = np.column_stack(us + vs)
    return w


def principal_symplectic(spec):
    """SL(2) -> Sp(2n) via the (2n-1)-st symmetric power, rotated into the
    standard symplectic coordinates.  Exact-backend friendly."""
    if spec.family != "Sp":
        raise DomainError("principal_symplectic needs an Sp spec")
    n = spec.size
    sym = principal_embedding(n)
    b = symmetric_power_form(n)
    w = darboux_change(b)
    w_inv = mx.inverse(w)
    j = spec.form(exact=True)
    resid = w.T @ b @ w - j
    assert all(x == 0 for x in resid.flat)

    def embed(a2):
        exact = mx.is_exact(a2)
        img = sym(a2)
        if exact:
            return w_inv @ img @ w
        return mx.to_float(w_inv) @ img @ mx.to_float(w)

    return embed


def so_circle_embedding(spec):
    """SL(2) -> SO(p+1,p+k) via Sym^{2p} + trivial summands (float backend).

    Returns (embed, basis_change) where columns of subspace data in the
    symmetric-power block must be mapped through ``basis_change``.
    """
    if spec.family != "SO":
        raise DomainError("so_circle_embedding needs an SO spec")
    nsym = 2 * spec.p + 1
    sym = principal_embedding(nsym)
    bsym = mx.to_float(symmetric_power_form(nsym))
    btot = np.zeros((spec.size, spec.size))
    btot[:nsym, :nsym] = bsym
    btot[nsym:, nsym:] = -np.eye(spec.k)
    g = spec.form()

    def signed_sqrt_change(form):
        vals, vecs = np.linalg.eigh(form)
        order = np.argsort(vals)[::-1]
        vals, vecs = vals[order], vecs[:, order]
        return vecs @ np.diag(1.0 / np.sqrt(np.abs(vals))), np.sign(vals)

    sg, sig_g = signed_sqrt_change(g)
    sb, sig_b = signed_sqrt_change(btot)
    assert np.array_equal(sig_g, sig_b), "signature mismatch in SO congruence"
    w = sb @ np.linalg.inv(sg)     # W^T btot W = g
    resid = w.T @ btot @ w - g
    assert np.abs(resid).max() < 1e-8

    w_inv = np.linalg.inv(w)

    def embed(a2):
        block = np.zeros((spec.size, spec.size))
        block[:nsym, :nsym] = mx.to_float(sym(a2))
        block[nsym:, nsym:] = np.eye(spec.k)
        return w_inv @ block @ w

    return embed, w_inv[:, :nsym]


def diagonal_symplectic(spec):
    """SL(2) -> Sp(2n) acting the same way on every (e_i, f_i)-plane."""
    if spec.family != "Sp":
        raise DomainError("diagonal_symplectic needs an Sp spec")
    half = spec.size // 2

    def embed(a2):
        exact = mx.is_exact(a2)
        eye = mx.identity(half, exact=exact)
        top = np.hstack([a2[0, 0] * eye, a2[0, 1] * eye])
        bot = np.hstack([a2[1, 0] * eye, a2[1, 1] * eye])
        return np.vstack([top, bot])

    return embed


# ---------------------------------------------------------------------------
# sampling

def random_group_element(spec, rng, scale=0.6):
    """Random element of the group (float backend)."""
    n = spec.size
    if spec.family == "SL":
        g = rng.standard_normal((n, n))
        d = np.linalg.det(g)
        if abs(d) < 1e-6:
            return random_group_element(spec, rng, scale)
        if d < 0:
            g[0, :] = -g[0, :]
            d = -d
        return g / d ** (1.0 / n)
    if spec.family == "Sp":
        half = n // 2
        a = rng.standard_normal((half, half)) * scale
        b = rng.standard_normal((half, half)) * scale
        c = rng.standard_normal((half, half)) * scale
        b = (b + b.T) / 2
        c = (c + c.T) / 2
        alg = np.block([[a, b], [c, -a.T]])
        return scipy.linalg.expm(alg)
    g = spec.form()
    s = rng.standard_normal((n, n)) * scale
    s = (s - s.T) / 2
    alg = np.linalg.solve(g, s)
    return scipy.linalg.expm(alg)


@lru_cache(maxsize=None)
def _compact_algebra_basis(spec):
    """Basis of the antisymmetric part of the Lie algebra (a maximal compact
    subalgebra in these models); exponentials are orthogonal group elements."""
    n = spec.size
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    form = spec.form()
    mats = []
    if form is None:
        for i, j in pairs:
            m = np.zeros((n, n))
            m[i, j], m[j, i] = 1.0, -1.0
            mats.append(m)
        return tuple(mats)
    rows = []
    for a in range(n):
        for b in range(n):
            row = []
            for i, j in pairs:
                e = np.zeros((n, n))
                e[i, j], e[j, i] = 1.0, -1.0
                row.append((e.T @ form + form @ e)[a, b])
            rows.append(row)
    null = mx.nullspace(np.array(rows))
    for col in range(null.shape[1]):
        m = np.zeros((n, n))
        for idx, (i, j) in enumerate(pairs):
            m[i, j] = null[idx, col]
            m[j, i] = -null[idx, col]
        mats.append(m)
    return tuple(mats)


def random_compact_element(spec, rng, scale=0.5):
    """Random orthogonal element of the group (perfectly conditioned)."""
    alg = np.zeros((spec.size, spec.size))
    for b in _compact_algebra_basis(spec):
        alg = alg + rng.uniform(-scale, scale) * b
    return scipy.linalg.expm(alg)


def random_loxodromic(spec, rng, spread=(0.3, 1.2), conjugate=True,
                      return_conjugator=False):
    """Random loxodromic element with a constructor-known spectrum.

    Returns (g, t) where t are the epsilon-coordinates of the intended
    Jordan projection, plus the conjugator when requested.
    """
    m = spec.eps_count
    gaps = rng.uniform(spread[0], spread[1], size=m)
    if spec.family == "SL":
        t = np.cumsum(gaps)[::-1]
        t = t - t.mean()
    else:
        t = np.sort(np.cumsum(gaps))[::-1]
    d = mx.to_float(cartan_element(spec, t))
    d = scipy.linalg.expm(d)
    if not conjugate:
        k = mx.identity(spec.size)
        g = d
    elif conjugate == "compact":
        k = random_compact_element(spec, rng)
        g = k @ d @ k.T
    else:
        k = random_group_element(spec, rng)
        g = k @ d @ np.linalg.inv(k)
    if return_conjugator:
        return g, list(t), k
    return g, list(t)
