"""Suite orchestration: deterministic trial batches for every verified
inequality and identity, with machine-readable reports."""

import hashlib
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import crossratio as cr
from . import flags as fl
from . import groups as gr
from . import matrices as mx
from . import photons as ph
from . import positivity as po
from . import reps as rp
from .errors import CapabilityError, DomainError, PoslabError

SUITE_NAMES = (
    "cocycle", "tensor", "period-character", "theoremA", "photon-power",
    "photon-fiber", "bracket", "supmin", "collar", "baseline-hyperbolic",
    "checker-vs-sampler", "exact-parity",
)


@dataclass(frozen=True)
class SuiteConfig:
    suite: str
    group: gr.GroupSpec
    samples: int = 100
    seed: int = 0
    tol: float = 1e-10
    backend: str = "float"

    def __post_init__(self):
        if self.suite not in SUITE_NAMES:
            raise DomainError(f"unknown suite {self.suite!r}; choose from "
                              f"{', '.join(SUITE_NAMES)}")
        if self.samples < 1:
            raise DomainError("sample count must be >= 1")
        if not self.tol > 0:
            raise DomainError("tolerance must be > 0")
        if self.backend not in ("float", "exact"):
            raise DomainError("backend must be 'float' or 'exact'")


@dataclass
class TrialReport:
    suite: str
    group: str
    samples: int
    seed: int
    tol: float
    backend: str
    trials: int = 0
    passes: int = 0
    failures: list = field(default_factory=list)
    min_margin: float = float("inf")
    max_margin: float = float("-inf")
    wall_time_s: float = 0.0

    def record(self, index, ok, margin, detail=None):
        self.trials += 1
        if ok:
            self.passes += 1
        else:
            self.failures.append({"trial": index,
                                  "seed": trial_seed(self.seed, index),
                                  "margin": float(margin),
                                  "detail": detail or {}})
        self.min_margin = min(self.min_margin, float(margin))
        self.max_margin = max(self.max_margin, float(margin))


def trial_seed(master_seed, index):
    """Stable per-trial seed so concurrent scheduling cannot reorder
    randomness."""
    digest = hashlib.sha256(f"{master_seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


# ---------------------------------------------------------------------------
# helpers shared by suites

def standard_eta_list(spec):
    """Fundamental weights plus one mixed form (doubled, for rank one)."""
    etas = [gr.WeightForm.fundamental(spec, i) for i in spec.theta]
    if len(spec.theta) >= 2:
        etas.append(gr.WeightForm.make(
            spec, {spec.theta[0]: 1, spec.theta[1]: 2}))
    else:
        etas.append(gr.WeightForm.make(spec, {spec.theta[0]: 2}))
    return etas


def _random_flag(spec, rng):
    return fl.act(gr.random_group_element(spec, rng),
                  fl.standard_pair(spec)[0], check_form=False)


def _admissible_flags(spec, rng, count, tries=60):
    for _ in range(tries):
        out = [_random_flag(spec, rng) for _ in range(count)]
        if all(fl.transverse(a, b) for i, a in enumerate(out)
               for b in out[i + 1:]):
            return out
    raise DomainError("could not sample an admissible configuration")


def _rel(a, b):
    return abs(a / b - 1.0) if b != 0 else float("inf")


# ---------------------------------------------------------------------------
# suite bodies: fn(config, rng) -> (ok, margin, detail-on-failure)

def _suite_cocycle(config, rng):
    spec = config.group
    x, w, y, xx, ww, yy = _admissible_flags(spec, rng, 6)
    worst = 0.0
    for eta in standard_eta_list(spec):
        full = cr.form_cr(spec, eta, cr.Quadruple(x, y, xx, yy))
        left1 = cr.form_cr(spec, eta, cr.Quadruple(x, w, xx, yy)) * \
            cr.form_cr(spec, eta, cr.Quadruple(w, y, xx, yy))
        left2 = cr.form_cr(spec, eta, cr.Quadruple(x, y, xx, ww)) * \
            cr.form_cr(spec, eta, cr.Quadruple(x, y, ww, yy))
        worst = max(worst, _rel(left1, full), _rel(left2, full))
    ok = worst < config.tol
    detail = None if ok else {"flags": [f.to_json() for f in (x, w, y, xx, ww, yy)]}
    return ok, config.tol - worst, detail


def _suite_tensor(config, rng):
    d1, d2 = rng.integers(2, 5), rng.integers(2, 5)
    s1 = [rng.standard_normal(d1) for _ in range(4)]
    s2 = [rng.standard_normal(d2) for _ in range(4)]
    resid = cr.tensor_cr_check(s1, s2)
    ok = resid < config.tol
    detail = None if ok else {"sample1": [v.tolist() for v in s1],
                              "sample2": [v.tolist() for v in s2]}
    return ok, config.tol - resid, detail


def _suite_period_character(config, rng):
    spec = config.group
    known = rng.uniform() < 0.5
    g, t = gr.random_loxodromic(
        spec, rng, conjugate="compact" if known else True)
    aux = None
    if not known:
        # exercise the eigenvector route with an explicit auxiliary flag
        plus = fl.standard_pair(spec)[0]
        for _ in range(16):
            cand = fl.act(gr.random_compact_element(spec, rng), plus,
                          check_form=False)
            try:
                cr.period(spec, gr.WeightForm.fundamental(spec, spec.theta[0]),
                          g, aux=cand)
            except PoslabError:
                continue
            aux = cand
            break
    worst = 0.0
    for eta in standard_eta_list(spec):
        p = cr.period(spec, eta, g, aux=aux)
        if known:
            chi2 = float(np.exp(eta.value_on(t)) *
                         np.exp(eta.value_on([-v for v in t[::-1]]
                                             if spec.family == "SL" else t)))
        else:
            chi2 = gr.character(spec, eta, g) * \
                gr.character(spec, eta, np.linalg.inv(g))
        worst = max(worst, _rel(p, chi2))
    bound = 1e-12 if known else config.tol
    ok = worst < bound
    detail = None if ok else {"matrix": mx.matrix_to_json(g), "known": known}
    return ok, bound - worst, detail


def _suite_theoremA(config, rng):
    spec = config.group
    quad = po.sample_positive_tuple(spec, 4, rng)
    q = cr.Quadruple(*quad)
    margin = float("inf")
    for i in spec.theta:
        base = cr.weight_cr(spec, i, q)
        margin = min(margin, base - 1.0)
        for eta in _corollary_etas(spec, i):
            power = float(base) ** float(gr.pairing_h(eta, i))
            val = cr.form_cr(spec, eta, q)
            margin = min(margin, val - power * (1.0 - 1e-9))
    ok = margin > 0
    detail = None if ok else {"flags": [f.to_json() for f in quad]}
    return ok, margin, detail


def _corollary_etas(spec, i):
    out = [gr.WeightForm.make(spec, {i: 2})]
    others = [j for j in spec.theta if j != i]
    if others:
        out.append(gr.WeightForm.make(spec, {i: 1, others[0]: 1}))
    return out


def _suite_photon_power(config, rng):
    spec = config.group
    theta = spec.theta[int(rng.integers(len(spec.theta)))]
    phi = ph.photon_through(spec, theta, gr.random_group_element(spec, rng))
    params = rng.uniform(-3, 3, size=4)
    while min(abs(params[0] - params[3]), abs(params[1] - params[2])) < 1e-2:
        params = rng.uniform(-3, 3, size=4)
    a, b, c, d = (float(v) for v in params)
    base = ph.parameter_cross_ratio(a, b, c, d)
    worst = 0.0
    for eta in standard_eta_list(spec):
        val = ph.photon_cr(phi, eta, a, b, c, d)
        expected = cr._power(base, gr.pairing_h(eta, theta))
        worst = max(worst, _rel(val, expected))
    ok = worst < config.tol
    detail = None if ok else {"theta": theta, "params": [a, b, c, d]}
    return ok, config.tol - worst, detail


def _suite_photon_fiber(config, rng):
    spec = config.group
    theta = spec.theta[int(rng.integers(len(spec.theta)))]
    phi = ph.photon_through(spec, theta, gr.random_group_element(spec, rng))
    c = float(rng.uniform(-2, 2))
    pa, pb = float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2))
    while min(abs(pa - c), abs(pb - c), abs(pa - pb)) < 1e-2:
        pa, pb = float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2))
    lift0 = phi.lift(c)
    lift1 = ph.fiber_partner(phi, c, rng)
    worst = 0.0
    for eta in standard_eta_list(spec):
        val = cr.form_cr(spec, eta, cr.Quadruple(phi.point(pa), phi.point(pb),
                                                 lift0, lift1))
        worst = max(worst, abs(val - 1.0))
    ok = worst < config.tol
    detail = None if ok else {"theta": theta, "fiber_at": c}
    return ok, config.tol - worst, detail


def _suite_bracket(config, rng):
    spec = config.group
    if spec.family == "SL":
        from fractions import Fraction
        t = Fraction(int(rng.integers(1, 50)), int(rng.integers(1, 50)))
        s = Fraction(int(rng.integers(1, 50)), int(rng.integers(1, 50)))
        theta = spec.theta[int(rng.integers(len(spec.theta)))]
        eta = gr.WeightForm.make(spec, {i: Fraction(int(rng.integers(0, 4)))
                                        for i in spec.theta})
        u = po.ConeVector(spec, theta, (t,), side=1)
        v = po.ConeVector(spec, theta, (s,), side=-1)
        val = po.bracket_pairing(u, v, eta)
        expected = t * s * gr.pairing_h(eta, theta)
        ok = val == expected
        return ok, 0.0 if ok else -1.0, None if ok else {"t": str(t), "s": str(s)}
    theta = spec.p
    eta = gr.WeightForm.fundamental(spec, theta)

    def draw(side):
        while True:
            coords = (float(rng.uniform(0.05, 2.0)),
                      *(float(rng.uniform(-2, 2)) for _ in range(spec.k - 1)),
                      float(rng.uniform(0.05, 2.0)))
            cand = po.ConeVector(spec, theta, coords, side=side)
            if po.cone_contains(spec, theta, cand):
                return cand

    u, v = draw(1), draw(-1)
    val = float(po.bracket_pairing(u, v, eta))
    ok = val > 0
    detail = None if ok else {"u": list(u.coords), "v": list(v.coords)}
    return ok, val, detail


def _suite_supmin(config, rng):
    spec = config.group
    if spec.family != "SL":
        raise CapabilityError("the sup-min suite runs on the split SL family")
    pair = rp.sample_hyperbolic_pair(rng, trace_range=(2.5, 8.0))
    g = gr.principal_embedding(spec.size)(np.asarray(pair[0], dtype=float))
    ap, am = rp.fixed_points_p1(pair[0])
    pt = rng.standard_normal(2)
    while min(abs(rp._p1_det(pt, ap)), abs(rp._p1_det(pt, am))) < 1e-2:
        pt = rng.standard_normal(2)
    x = fl.veronese_flag(spec.size, pt)
    # the configuration is positive by construction; its projective shadow
    # (a+, a-, pt, A pt) must be cyclically ordered in one orientation
    shadow = [ap, am, pt, np.asarray(pair[0], dtype=float) @ pt]
    shadow_ok = rp.cyclically_ordered_p1(shadow) or \
        rp.cyclically_ordered_p1(shadow[::-1])
    eta = standard_eta_list(spec)[int(rng.integers(len(spec.theta) + 1))]
    report = ph.supmin_check(spec, eta, g, x, tol=1e-8)
    margins = [row["margin"] + 1e-8 for row in report["theta"].values()]
    eq = max(row["equality_gap"] for row in report["theta"].values())
    above = all(row["bound_above_one"] for row in report["theta"].values())
    ok = all(row["holds"] for row in report["theta"].values()) and \
        eq < 1e-8 and above and shadow_ok and \
        report["positive_input"] is not False
    detail = None if ok else {"report": report,
                              "trace": float(np.trace(pair[0]))}
    return ok, min(min(margins), 1e-8 - eq), detail


def _suite_collar(config, rng):
    spec = config.group
    pair = rp.sample_hyperbolic_pair(rng)
    if spec.family == "SL":
        rep = rp.hitchin_rep(pair, spec.size)
    elif spec.family == "Sp":
        rep = rp.maximal_rep(pair, spec.size)
    else:
        raise CapabilityError("collar suite runs on SL and Sp lifts")
    margin = float("inf")
    for i in spec.theta:
        for eta in (gr.WeightForm.fundamental(spec, i),
                    gr.WeightForm.make(spec, {i: 2})):
            resid = rp.collar_residual(rep, "a", "b", i, eta)
            margin = min(margin, 1.0 - resid)
    ok = margin > 0
    detail = None if ok else {"rep": rep.to_json()}
    return ok, margin, detail


def _suite_baseline(config, rng):
    pair = rp.sample_hyperbolic_pair(rng)
    val = rp.hyperbolic_baseline(pair)
    ok = val > 1.0
    detail = None if ok else {"traces": [float(np.trace(m)) for m in pair]}
    return ok, val - 1.0, detail


def _suite_checker_vs_sampler(config, rng):
    spec = config.group
    tup = po.sample_positive_tuple(spec, 4, rng)
    accepted = po.tuple_positive(tup)
    swapped = not po.quadruple_positive(tup[0], tup[2], tup[1], tup[3])
    g = gr.random_group_element(spec, rng)
    moved = [fl.act(g, f, check_form=False) for f in tup]
    invariant = po.tuple_positive(moved)
    ok = accepted and swapped and invariant
    detail = None if ok else {"accepted": accepted, "swap_rejected": swapped,
                              "invariant": invariant,
                              "flags": [f.to_json() for f in tup]}
    return ok, 1.0 if ok else -1.0, detail


def _suite_exact_parity(config, rng):
    from fractions import Fraction
    spec = config.group
    if spec.family != "SL":
        raise CapabilityError("exact parity runs on the SL family")
    params = sorted(Fraction(int(rng.integers(-40, 40)), int(rng.integers(1, 12)))
                    for _ in range(4))
    if len(set(params)) < 4:
        return True, 1.0, None
    shift = int(rng.integers(0, 4))
    params = params[shift:] + params[:shift]
    exact_flags = [fl.veronese_flag(spec.size, (p.numerator, p.denominator),
                                    exact=True) for p in params]
    u = po.sample_tp_unipotent(spec, rng, exact=True)
    exact_flags = [fl.act(u, f, check_form=False) for f in exact_flags]
    float_flags = [f.to_float() for f in exact_flags]
    verdict_exact = po.quadruple_positive(*exact_flags)
    verdict_float = po.quadruple_positive(*float_flags)
    swap_exact = po.quadruple_positive(exact_flags[0], exact_flags[2],
                                       exact_flags[1], exact_flags[3])
    swap_float = po.quadruple_positive(float_flags[0], float_flags[2],
                                       float_flags[1], float_flags[3])
    ok = (verdict_exact == verdict_float) and (swap_exact == swap_float) \
        and verdict_exact and not swap_exact
    detail = None if ok else {"params": [str(p) for p in params],
                              "exact": verdict_exact, "float": verdict_float}
    return ok, 1.0 if ok else -1.0, detail


_SUITE_BODIES = {
    "cocycle": _suite_cocycle,
    "tensor": _suite_tensor,
    "period-character": _suite_period_character,
    "theoremA": _suite_theoremA,
    "photon-power": _suite_photon_power,
    "photon-fiber": _suite_photon_fiber,
    "bracket": _suite_bracket,
    "supmin": _suite_supmin,
    "collar": _suite_collar,
    "baseline-hyperbolic": _suite_baseline,
    "checker-vs-sampler": _suite_checker_vs_sampler,
    "exact-parity": _suite_exact_parity,
}


def run_suite(config):
    """Run every trial of a suite; deterministic for a fixed config."""
    body = _SUITE_BODIES[config.suite]
    report = TrialReport(suite=config.suite, group=_group_token(config.group),
                         samples=config.samples, seed=config.seed,
                         tol=config.tol, backend=config.backend)
    start = time.perf_counter()

    def one(index):
        rng = np.random.default_rng(trial_seed(config.seed, index))
        try:
            return body(config, rng)
        except CapabilityError:
            raise
        except PoslabError as exc:
            return False, float("-inf"), {"error": str(exc)}

    workers = int(os.environ.get("POSLAB_THREADS", "1") or "1")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(config.samples)))
    else:
        results = [one(i) for i in range(config.samples)]
    for index, (ok, margin, detail) in enumerate(results):
        report.record(index, ok, margin, detail)
    report.wall_time_s = time.perf_counter() - start
    return report


def _group_token(spec):
    if spec.family == "SO":
        return f"SO{spec.p + 1}{spec.p + spec.k}"
    return f"{spec.family}{spec.size}"


# ---------------------------------------------------------------------------
# canonical serialization (byte-stable for a fixed report)

def _canon(obj):
    if isinstance(obj, dict):
        items = ",".join(f"{_canon(str(k))}:{_canon(v)}"
                         for k, v in sorted(obj.items(), key=lambda kv: str(kv[0])))
        return "{" + items + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_canon(v) for v in obj) + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if obj != obj or obj in (float("inf"), float("-inf")):
            return f'"{obj}"'
        return format(float(obj), ".17g")
    if obj is None:
        return "null"
    return '"' + str(obj).replace("\\", "\\\\").replace('"', '\\"') + '"'


def report_payload(report, include_timing=False):
    payload = {
        "suite": report.suite, "group": report.group,
        "samples": report.samples, "seed": report.seed, "tol": report.tol,
        "backend": report.backend, "trials": report.trials,
        "passes": report.passes, "failures": report.failures,
        "min_margin": report.min_margin, "max_margin": report.max_margin,
    }
    if include_timing:
        payload["wall_time_s"] = report.wall_time_s
    return payload


def emit_report(report, fmt="json", path=None, include_timing=False):
    """Serialize a report; canonical key order and 17-significant-digit
    floats keep the bytes stable for a fixed configuration.  Timing is
    excluded by default for the same reason."""
    if fmt == "json":
        text = _canon(report_payload(report, include_timing)) + "\n"
    elif fmt == "csv":
        failed = {f["trial"]: f for f in report.failures}
        lines = ["trial,seed,passed,margin"]
        for i in range(report.trials):
            f = failed.get(i)
            margin = f["margin"] if f else ""
            lines.append(f"{i},{trial_seed(report.seed, i)},"
                         f"{'false' if f else 'true'},"
                         f"{format(margin, '.17g') if margin != '' else ''}")
        text = "\n".join(lines) + "\n"
    else:
        raise DomainError("format must be json or csv")
    if path is not None:
        with open(path, "w") as handle:
            handle.write(text)
    return text
