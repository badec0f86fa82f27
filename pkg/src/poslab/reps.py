"""Sampling of Fuchsian generator pairs, their Hitchin and maximal lifts,
sextuple configurations and collar-inequality residuals."""

from dataclasses import dataclass, field
from math import acosh, sinh, sqrt

import numpy as np

from . import crossratio as cr
from . import flags as fl
from . import groups as gr
from . import matrices as mx
from . import positivity as po
from .errors import DomainError, NumericError

TRACE_FLOOR = 2.0


@dataclass(frozen=True)
class Rep:
    """A two-generator representation given by concrete matrices."""

    spec: gr.GroupSpec
    generators: dict
    provenance: dict = field(default_factory=dict)

    def evaluate(self, word):
        """Product over a word: lowercase = generator, uppercase = inverse."""
        out = mx.identity(self.spec.size)
        for ch in word:
            name = ch.lower()
            if name not in self.generators:
                raise DomainError(f"unknown generator {ch!r}")
            g = mx.to_float(self.generators[name])
            out = out @ (np.linalg.inv(g) if ch.isupper() else g)
        return out

    def to_json(self):
        return {"spec": self.spec.to_json(),
                "generators": {k: mx.matrix_to_json(v)
                               for k, v in self.generators.items()},
                "provenance": dict(self.provenance)}

    @staticmethod
    def from_json(data):
        return Rep(gr.GroupSpec.from_json(data["spec"]),
                   {k: mx.matrix_from_json(v) for k, v in data["generators"].items()},
                   dict(data.get("provenance", {})))


# ---------------------------------------------------------------------------
# hyperbolic 2x2 sampling with linked axes

def fixed_points_p1(a2):
    """(attracting, repelling) fixed points of a hyperbolic 2x2 matrix."""
    vals, vecs = np.linalg.eig(np.asarray(a2, dtype=float))
    if abs(vals[0].imag) > 1e-12 * max(1.0, abs(vals[0])):
        raise DomainError("matrix is not hyperbolic")
    vals = vals.real
    order = np.argsort(-np.abs(vals))
    return vecs[:, order[0]].real, vecs[:, order[1]].real


def _p1_det(p, q):
    return p[0] * q[1] - p[1] * q[0]


def linked(a2, b2):
    """Whether the axes of two hyperbolic elements cross: the fixed-point
    pairs separate each other on the projective line."""
    ap, am = fixed_points_p1(a2)
    bp, bm = fixed_points_p1(b2)
    num = _p1_det(ap, bp) * _p1_det(am, bm)
    den = _p1_det(ap, bm) * _p1_det(am, bp)
    if den == 0 or num == 0:
        return False
    return num / den < 0


def cyclically_ordered_p1(points):
    """Cyclic order of projective-line points given as 2-vectors."""
    phis = [np.arctan2(p[1], p[0]) % np.pi for p in points]
    rel = [(phi - phis[0]) % np.pi for phi in phis[1:]]
    return all(rel[i] < rel[i + 1] for i in range(len(rel) - 1))


# Generators of a discrete free group uniformizing the once-punctured torus
# (commutator trace -2).  Words in it are closed geodesics on an actual
# hyperbolic surface, so geometrically intersecting pairs obey both the
# classical collar bound and the sextuple condition.
_TORUS_A = np.array([[1.0, 1.0], [1.0, 2.0]])
_TORUS_B = np.array([[1.0, -1.0], [-1.0, 2.0]])


def _random_word_matrix(rng, trace_range, max_len=4):
    gens = {"a": _TORUS_A, "A": np.linalg.inv(_TORUS_A),
            "b": _TORUS_B, "B": np.linalg.inv(_TORUS_B)}
    inverse = {"a": "A", "A": "a", "b": "B", "B": "b"}
    length = int(rng.integers(1, max_len + 1))
    word = []
    for _ in range(length):
        choices = [c for c in "aAbB" if not word or c != inverse[word[-1]]]
        word.append(choices[int(rng.integers(len(choices)))])
    out = np.eye(2)
    for ch in word:
        out = out @ gens[ch]
    tr = abs(float(np.trace(out)))
    if not (trace_range[0] < tr < trace_range[1]):
        return None
    return out


def sample_hyperbolic_pair(seed, trace_range=(2.5, 24.0), max_tries=400):
    """A geometrically intersecting hyperbolic pair (A, B) of surface-group
    words, conjugated at random, with B inverted if needed so that
    (a+, b-, a-, b+, B a+, A b+) is a cyclically ordered sextuple."""
    if not (trace_range[0] > TRACE_FLOOR and trace_range[1] > trace_range[0]):
        raise DomainError("trace range must sit inside (2, inf)")
    rng = np.random.default_rng(seed) if isinstance(seed, (int, np.integer)) else seed
    for _ in range(max_tries):
        a2 = _random_word_matrix(rng, trace_range)
        b2 = _random_word_matrix(rng, trace_range)
        if a2 is None or b2 is None or not linked(a2, b2):
            continue
        # well-conditioned conjugation: rotation times a mild diagonal shear
        ang = rng.uniform(0.0, np.pi)
        rot = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
        shear = rng.uniform(0.8, 1.25)
        k = rot @ np.diag([shear, 1.0 / shear])
        k_inv = np.linalg.inv(k)
        a2, b2 = k @ a2 @ k_inv, k @ b2 @ k_inv
        for cand in (b2, np.linalg.inv(b2)):
            ap, am = fixed_points_p1(a2)
            bp, bm = fixed_points_p1(cand)
            if cyclically_ordered_p1([ap, bm, am, bp, cand @ ap, a2 @ bp]):
                return a2, cand
    raise NumericError("rejection sampling for a linked pair exhausted")


# ---------------------------------------------------------------------------
# lifts

def hitchin_rep(pair, n):
    """Principal lift of a linked pair into SL(n)."""
    a2, b2 = pair
    emb = gr.principal_embedding(n)
    spec = gr.GroupSpec.sl(n)
    gens = {"a": emb(np.asarray(a2, dtype=float)),
            "b": emb(np.asarray(b2, dtype=float))}
    return Rep(spec, gens, {"traces": (float(np.trace(a2)), float(np.trace(b2))),
                            "embedding": "principal"})


def maximal_rep(pair, size):
    """Diagonal lift of a linked pair into Sp(size), acting the same way on
    every symplectic coordinate plane."""
    a2, b2 = pair
    spec = gr.GroupSpec.sp(size)
    emb = gr.diagonal_symplectic(spec)
    gens = {"a": emb(np.asarray(a2, dtype=float)),
            "b": emb(np.asarray(b2, dtype=float))}
    return Rep(spec, gens, {"traces": (float(np.trace(a2)), float(np.trace(b2))),
                            "embedding": "diagonal"})


# ---------------------------------------------------------------------------
# sextuples and the collar inequality

def sextuple(rep, a_word="a", b_word="b", check_positivity=True, tol=1e-9):
    """The six flags (a+, b-, a-, b+, B a+, A b+) of a word pair, with a
    positivity verdict (None means asserted by construction on SO)."""
    amat = rep.evaluate(a_word)
    bmat = rep.evaluate(b_word)
    spec = rep.spec
    gr.require_loxodromic(spec, amat, tol)
    gr.require_loxodromic(spec, bmat, tol)
    a_plus, a_minus = fl.eigenflag(spec, amat, tol)
    b_plus, b_minus = fl.eigenflag(spec, bmat, tol)
    flags = (a_plus, b_minus, a_minus, b_plus,
             fl.act(bmat, a_plus, check_form=False),
             fl.act(amat, b_plus, check_form=False))
    verdict = None
    if check_positivity and spec.family != "SO":
        verdict = po.tuple_positive(flags, tol)
    return flags, verdict


def collar_residual(rep, a_word, b_word, theta_index, eta, tol=1e-9,
                    verify_sextuple=False):
    """(1 / period_eta(B))^(1/<h_theta|eta>) + 1 / chi_theta(A).

    The collar inequality asserts this is < 1 whenever the sextuple of fixed
    flags is positive; sextuple verification is optional because it
    dominates the runtime at scale.
    """
    coeff = gr.pairing_h(eta, theta_index)
    if not coeff > 0:
        raise DomainError("collar residual needs <h_theta | eta> > 0")
    if verify_sextuple:
        _, verdict = sextuple(rep, a_word, b_word, check_positivity=True, tol=tol)
        if verdict is False:
            raise DomainError("sextuple configuration is not positive")
    amat = rep.evaluate(a_word)
    bmat = rep.evaluate(b_word)
    p_b = cr.period(rep.spec, eta, bmat, tol=tol)
    chi_a = gr.root_character(rep.spec, theta_index, amat, tol)
    return (1.0 / p_b) ** (1.0 / float(coeff)) + 1.0 / chi_a


def translation_length(a2):
    """Hyperbolic translation length 2 arccosh(|tr|/2)."""
    tr = abs(float(np.trace(a2)))
    if tr <= 2.0:
        raise DomainError("element is not hyperbolic")
    return 2.0 * acosh(tr / 2.0)


def hyperbolic_baseline(pair):
    """sinh(l(A)/2) sinh(l(B)/2); the classical collar bound asserts > 1."""
    a2, b2 = pair
    if not linked(a2, b2):
        raise DomainError("baseline needs a linked pair")
    return sinh(translation_length(a2) / 2.0) * sinh(translation_length(b2) / 2.0)
