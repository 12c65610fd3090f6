"""Property suites run by ``besovfill verify``.

Each check records the measured value, the threshold it is compared with and
the property it certifies, so a failing report says which identity or bound
broke.  Checks are deterministic given the seed.
"""

import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import testfuncs
from .calculus import (discrete_convolution, edge_derivative, integrate_edges,
                       level_integral, poisson_extend, t_operator, trace,
                       vertex_derivative)
from .filling import build_filling, check_filling, partition_of_unity
from .interp import calderon_factorize, factorization_error, interp_params
from .io import read_json
from .norms import (NormParams, besov_norm, dilated_measure,
                    hajlasz_explicit_gradient, hajlasz_norm, hajlasz_validate,
                    quasi_triangle_constant, seq_norm_E, seq_norm_X,
                    tail_norm)
from .space import estimate_doubling

__all__ = ["Check", "SUITES", "run_suite", "run_verification", "CERT_GLOB"]

SUITES = ("structure", "calculus", "norms", "hajlasz", "interp")
CERT_GLOB = "*cert*.json"

MAX_DEGREE = 32
MAX_OVERLAP = 8
POU_TOL = 1e-10
POU_LIP = 6.0
TELESCOPE_TOL = 1e-10
ROUNDTRIP_REL = 0.05
ROUNDTRIP_OSC = 4.0
DECAY_MIN = 0.15
HAJLASZ_CSTAR = 16.0
HAJLASZ_BRACKET = 32.0
CONV_BOUND = 64.0
STABILITY = 2.0
EXTENSION_STABILITY = 1.5
TAIL_BOUND = 64.0
DECAY_SLACK = 1.1
FACTOR_TOL = 1e-12
BOUND_RATIO = 10.0


@dataclass
class Check:
    name: str
    suite: str
    property: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""

    def to_dict(self):
        return {"name": self.name, "suite": self.suite, "property": self.property,
                "status": "pass" if self.passed else "fail",
                "measured": self.measured, "threshold": self.threshold,
                "detail": self.detail}

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        msg = f"[{status}] {self.name}: measured {self.measured:.6g} vs {self.threshold:.6g}"
        if not self.passed:
            msg += f" (violates: {self.property})"
        return msg


def _le(name, suite, prop, measured, threshold, detail=""):
    measured = float(measured)
    return Check(name, suite, prop, bool(measured <= threshold), measured,
                 float(threshold), detail)


def _ge(name, suite, prop, measured, threshold, detail=""):
    measured = float(measured)
    return Check(name, suite, prop, bool(measured >= threshold), measured,
                 float(threshold), detail)


def sample_functions(space, names=("identity", "sin2pi", "holder07")):
    """Named test functions, or distance-based stand-ins for matrix spaces."""
    if space.metric != "matrix":
        return {name: testfuncs.evaluate(name, space) for name in names}
    r = space.distances[0] / max(space.diameter, 1e-300)
    stand_in = {"identity": r, "sin2pi": np.sin(2 * np.pi * r),
                "holder07": np.abs(r - 0.5) ** 0.7,
                "weierstrass3": testfuncs._weierstrass3(r)}
    return {name: stand_in[name] for name in names}


def companion(space, filling):
    """Same space with the finest level dropped (for resolution comparisons)."""
    if filling.n_max - filling.n_min < 2:
        return None
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_filling(space, filling.n_min, filling.n_max - 1)


# -- suites -----------------------------------------------------------------

def structure_suite(space, filling, rng, **_):
    rep = check_filling(filling)
    suite = "structure"
    out = [
        _ge("structure.separation", suite, "nets are 2^(-n-1)-separated",
            min(rep.separation_margin), 0.0),
        _le("structure.covering", suite, "half-radius balls cover the space",
            sum(rep.covering_deficiency), 0),
        _le("structure.quarter_disjoint", suite, "quarter-radius balls are disjoint",
            sum(rep.disjointness_violations), 0),
        _le("structure.max_degree", suite, "bounded valency of the filling graph",
            rep.max_degree, MAX_DEGREE),
        _le("structure.max_overlap", suite, "bounded overlap of same-level balls",
            max(rep.max_overlap), MAX_OVERLAP),
    ]
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        again = build_filling(space, filling.n_min, filling.n_max)
    same = (np.array_equal(again.center, filling.center)
            and np.array_equal(again.level, filling.level)
            and np.array_equal(again.tail, filling.tail)
            and np.array_equal(again.head, filling.head))
    out.append(_le("structure.rebuild_identical", suite,
                   "construction is deterministic", 0 if same else 1, 0))

    sum_err, support_bad, lip = 0.0, 0, 0.0
    for n in filling.levels:
        pou = partition_of_unity(filling, space, n)
        total = np.asarray(pou.values.sum(axis=0)).reshape(-1)
        sum_err = max(sum_err, float(np.abs(total - 1).max()))
        inside = pou.values.multiply(filling.membership[pou.vertices])
        support_bad += int((pou.values - inside).count_nonzero())
        lip = max(lip, pou.lipschitz_bound / 2.0 ** n)
    out += [
        _le("pou.sum_to_one", suite, "partition of unity on every level", sum_err, POU_TOL),
        _le("pou.support", suite, "bumps supported in their balls", support_bad, 0),
        _le("pou.lipschitz", suite, "bump Lipschitz constant of order 2^n", lip, POU_LIP),
    ]
    return out


def calculus_suite(space, filling, rng, n_random=20, **_):
    suite = "calculus"
    out = []
    worst = 0.0
    for _ in range(n_random):
        v = rng.normal(size=filling.n_vertices)
        dv = edge_derivative(filling, v)
        prev = discrete_convolution(filling, space, v, filling.n_min)
        for n in range(filling.n_min, filling.n_max):
            nxt = discrete_convolution(filling, space, v, n + 1)
            worst = max(worst, float(np.abs(level_integral(filling, space, dv, n) - (nxt - prev)).max()))
            prev = nxt
    out.append(_le("calculus.telescoping", suite,
                   "edge integration of dv telescopes to T_(n+1)v - T_n v",
                   worst, TELESCOPE_TOL))

    u, v = rng.normal(size=(2, filling.n_vertices))
    a, b = rng.normal(size=2)
    lin = 0.0
    for op in (lambda w: edge_derivative(filling, w),
               lambda w: t_operator(filling, w),
               lambda w: trace(filling, space, w)[0]):
        lhs = op(a * u + b * v)
        rhs = a * op(u) + b * op(v)
        lin = max(lin, float(np.max(np.abs(lhs - rhs)) / (1 + np.max(np.abs(rhs)))))
    out.append(_le("calculus.linearity", suite, "operators are linear", lin, 1e-10))

    const = vertex_derivative(filling, poisson_extend(space, filling, np.full(space.n_points, 3.7)))
    out.append(_le("calculus.constants", suite, "d(P const) vanishes",
                   float(np.abs(const).max()), 1e-12))

    fine = 2.0 ** -filling.n_max
    for name, f in sample_functions(space).items():
        pf = poisson_extend(space, filling, f)
        rec = integrate_edges(filling, space, edge_derivative(filling, pf))
        res = rec - f
        res = res - space.weights @ res
        centered = f - space.weights @ f
        rel = float(space.weights @ np.abs(res)) / float(space.weights @ np.abs(centered))
        out.append(_le(f"calculus.retraction.{name}.l1", suite,
                       "edge integration inverts d(P.) modulo constants", rel, ROUNDTRIP_REL))
        osc = testfuncs.oscillation(space, f, 2 * fine)
        out.append(_le(f"calculus.retraction.{name}.sup", suite,
                       "edge integration inverts d(P.) modulo constants",
                       float(np.abs(res).max()), ROUNDTRIP_OSC * osc))

    for name, f in sample_functions(space, ("identity", "sin2pi")).items():
        tr, _ = trace(filling, space, poisson_extend(space, filling, f))
        lip = testfuncs.lipschitz_constant(space, f)
        out.append(_le(f"calculus.trace_extension.{name}", suite,
                       "trace of the Poisson extension returns the function",
                       float(np.abs(tr - f).max()), 2 * lip * fine))

    ratio = extension_residual(space, filling, seed=int(rng.integers(2**31)))
    comp = companion(space, filling)
    if comp is not None:
        ratio2 = extension_residual(space, comp, seed=0)
        spread = max(ratio / ratio2, ratio2 / ratio)
        out.append(_le("calculus.extension_of_trace", suite,
                       "u - P(TR u) is controlled by du with a resolution-independent constant",
                       spread, EXTENSION_STABILITY, detail=f"constant {ratio:.6g}"))

    out.append(_ge("calculus.trace_decay", suite,
                   "trace of a decaying sequence vanishes",
                   decay_exponent(space, filling, rng), DECAY_MIN))
    return out


def decay_exponent(space, filling, rng, rate=0.3):
    """Fitted ``eps'`` in ``sup |T_n u| ~ 2**(-n eps')`` for ``u = 2**(-rate |x|) noise``."""
    u = 2.0 ** (-rate * filling.level) * rng.uniform(-1, 1, size=filling.n_vertices)
    levels = np.array(list(filling.levels), dtype=np.float64)
    sups = np.array([np.abs(discrete_convolution(filling, space, u, int(n))).max()
                     for n in levels])
    slope = np.polyfit(levels, np.log2(sups), 1)[0]
    return float(-slope)


def extension_residual(space, filling, seed=0, rate=0.7):
    """``||u - P(TR u)|| / ||du||`` for ``u = 2**(-rate |x|) noise``, with ``s = 0.5``, ``p = q = 2``."""
    rng = np.random.default_rng(seed)
    u = 2.0 ** (-rate * filling.level) * rng.uniform(-1, 1, size=filling.n_vertices)
    tr, _ = trace(filling, space, u)
    params = NormParams(0.5, 2, 2)
    residual = u - poisson_extend(space, filling, tr)
    return seq_norm_X(filling, residual, params) / seq_norm_X(filling, vertex_derivative(filling, u), params)


def norm_param_grid(Q):
    grid = []
    for s in (0.3, 0.5, 0.8):
        for p in (1.0, 2.0, math.inf):
            for q in (1.0, 2.0, math.inf):
                params = NormParams(s, p, q, Q)
                if params.admissible:
                    grid.append(params)
    return grid


def norms_suite(space, filling, rng, n_random=50, doubling=None, **_):
    suite = "norms"
    out = []
    doubling = doubling or estimate_doubling(space, seed=int(rng.integers(2**31)))
    overlap = max(check_filling(filling).max_overlap)
    worst = 0.0
    for params in norm_param_grid(doubling.Q):
        bound = overlap ** (1.0 / min(params.p, 1.0))
        for _ in range(n_random):
            u = rng.exponential(size=filling.n_vertices)
            w = seq_norm_X(filling, u, params, "weighted")
            o = seq_norm_X(filling, u, params, "overlap")
            worst = max(worst, max(w / o, o / w) / bound)
    out.append(_le("norms.form_equivalence", suite,
                   "overlap and weighted forms are equivalent", worst, 1.0 + 1e-12))

    params_list = [NormParams(0.5, 2, 2), NormParams(0.3, 1, math.inf),
                   NormParams(0.8, math.inf, 1), NormParams(0.5, 0.8, 0.5)]
    hom, tri = 0.0, 0.0
    for params in params_list:
        K = quasi_triangle_constant(params.p, params.q)
        for _ in range(100):
            u, v = rng.normal(size=(2, filling.n_vertices))
            lam = rng.uniform(-5, 5)
            for form in ("weighted", "overlap"):
                nu = seq_norm_X(filling, u, params, form)
                hom = max(hom, abs(seq_norm_X(filling, lam * u, params, form) - abs(lam) * nu) / (abs(lam) * nu))
                ratio = seq_norm_X(filling, u + v, params, form) / (K * (nu + seq_norm_X(filling, v, params, form)))
                tri = max(tri, ratio)
    out.append(_le("norms.homogeneity", suite, "quasi-norms are homogeneous", hom, 1e-12))
    out.append(_le("norms.quasi_triangle", suite, "quasi-triangle inequality", tri, 1.0))

    worst = 0.0
    growth = doubling.C * 2.0 ** doubling.Q
    for params in (NormParams(0.5, 2, 2), NormParams(0.3, 1, 1), NormParams(0.8, 0.8, math.inf)):
        for _ in range(10):
            c = rng.uniform(0.5, 2.0, size=filling.n_vertices)
            mu_c = dilated_measure(filling, c)
            u = rng.exponential(size=filling.n_vertices)
            ratio = seq_norm_X(filling, u, params, measure=mu_c) / seq_norm_X(filling, u, params)
            allowed = growth ** (1.0 / params.p)
            worst = max(worst, max(ratio, 1 / ratio) / allowed)
    out.append(_le("norms.dilation", suite, "dilated ball masses give an equivalent quasi-norm",
                   worst, 1.0 + 1e-12))

    out += convolution_checks(space, filling, suite)
    return out


def convolution_constants(space, filling, funcs, params):
    """``max_n ||T_n Pf|| / ||f||`` per function and the ``||f - T_n Pf||`` profile."""
    consts, profiles, tails = {}, {}, {}
    for name, f in funcs.items():
        pf = poisson_extend(space, filling, f)
        du = vertex_derivative(filling, pf)
        base = besov_norm(space, filling, f, params)
        tn = [discrete_convolution(filling, space, pf, n) for n in filling.levels]
        consts[name] = max(besov_norm(space, filling, t, params) for t in tn) / base
        profiles[name] = [besov_norm(space, filling, f - t, params) for t in tn]
        tails[name] = [tail_norm(filling, du, params, n) for n in filling.levels]
    return consts, profiles, tails


def convolution_checks(space, filling, suite):
    params = NormParams(0.5, 2, 2)
    funcs = sample_functions(space, testfuncs.FAMILY)
    consts, profiles, tails = convolution_constants(space, filling, funcs, params)
    out = [_le("norms.convolution_bound", suite,
               "discrete convolutions are uniformly bounded", max(consts.values()), CONV_BOUND)]
    comp = companion(space, filling)
    if comp is not None:
        c2, _, _ = convolution_constants(space, comp, funcs, params)
        spread = max(max(consts[k] / c2[k], c2[k] / consts[k]) for k in consts)
        out.append(_le("norms.convolution_stability", suite,
                       "convolution bound independent of resolution", spread, STABILITY))
    top = len(filling.levels) // 2
    worst = max(_worst_step(prof[top:]) for prof in list(profiles.values()) + list(tails.values()))
    out.append(_le("norms.convolution_convergence", suite,
                   "discrete convolutions converge in the Besov norm", worst, DECAY_SLACK))
    dom = 0.0
    for name in profiles:
        for b, t in zip(profiles[name], tails[name]):
            if t > 0:
                dom = max(dom, b / t)
            elif b > 0:
                dom = math.inf
    out.append(_le("norms.convolution_tail", suite,
                   "convolution error dominated by the derivative tail", dom, TAIL_BOUND))
    return out


def _worst_step(profile):
    """Largest ratio of consecutive entries (zero after zero counts as no growth)."""
    worst = 0.0
    for a, b in zip(profile, profile[1:]):
        if a > 0:
            worst = max(worst, b / a)
        elif b > 0:
            worst = math.inf
    return worst


def hajlasz_ratios(space, filling, s=0.5, p=2.0, q=2.0):
    params = NormParams(s, p, q)
    cstar, ratio = {}, {}
    for name, f in sample_functions(space, testfuncs.FAMILY).items():
        g = hajlasz_explicit_gradient(filling, space, f, s)
        cstar[name] = hajlasz_validate(space, f, g, s).ratio
        ratio[name] = hajlasz_norm(space, g, p, q) / besov_norm(space, filling, f, params)
    return cstar, ratio


def hajlasz_suite(space, filling, rng, **_):
    suite = "hajlasz"
    cstar, ratio = hajlasz_ratios(space, filling)
    out = [_le("hajlasz.cstar", suite, "explicit gradient is a Hajlasz gradient up to a constant",
               max(cstar.values()), HAJLASZ_CSTAR)]
    bracket = max(max(r, 1 / r) for r in ratio.values())
    out.append(_le("hajlasz.bracket", suite, "Besov and Hajlasz norms are equivalent",
                   bracket, HAJLASZ_BRACKET))
    comp = companion(space, filling)
    if comp is not None:
        _, ratio2 = hajlasz_ratios(space, comp)
        spread = max(max(ratio[k] / ratio2[k], ratio2[k] / ratio[k]) for k in ratio)
        out.append(_le("hajlasz.stability", suite,
                       "equivalence constants independent of resolution", spread, STABILITY))
    return out


INTERP_COMBOS = (
    (NormParams(0.3, 1, 1), NormParams(0.7, 3, 2), 0.5),
    (NormParams(0.3, 1, math.inf), NormParams(0.7, 3, math.inf), 0.5),
    (NormParams(0.2, 2, 1), NormParams(0.9, math.inf, math.inf), 0.25),
)


def factorization_checks(filling, rng, on, n_random, suite):
    size = filling.n_vertices if on == "vertices" else filling.n_edges
    norm = seq_norm_X if on == "vertices" else seq_norm_E
    err, bound, holder = 0.0, 0.0, 0.0
    for p0, p1, theta in INTERP_COMBOS:
        params = interp_params(p0, p1, theta)
        for _ in range(n_random):
            u = rng.exponential(size=size)
            cert = calderon_factorize(filling, u, p0, p1, theta, on=on)
            err = max(err, cert.max_pointwise_error / (1 + u.max()))
            bound = max(bound, cert.bound_ratio)
            v0, v1 = rng.exponential(size=(2, size))
            v0 /= norm(filling, v0, p0)
            v1 /= norm(filling, v1, p1)
            holder = max(holder, norm(filling, v0 ** (1 - theta) * v1 ** theta, params))
    tag = "" if on == "vertices" else ".edges"
    return [
        _le(f"interp.identity{tag}", suite, "pointwise Calderon factorization",
            err, FACTOR_TOL),
        _le(f"interp.bound_ratio{tag}", suite, "factor norms controlled by the interpolated norm",
            bound, BOUND_RATIO),
        _le(f"interp.holder{tag}", suite, "Calderon product embeds into the interpolated space",
            holder, 1.0 + 1e-12),
    ]


def interp_suite(space, filling, rng, n_random=20, artifact_dir=None, **_):
    suite = "interp"
    out = factorization_checks(filling, rng, "vertices", n_random, suite)
    out += factorization_checks(filling, rng, "edges", n_random, suite)

    fixtures = [
        (NormParams(1, 1, 1), NormParams(1, math.inf, math.inf), 0.5, (1.0, 2.0, 2.0)),
        (NormParams(0.2, 3, 3), NormParams(0.8, 6, 6), 1 / 3, (0.4, 3.6, 3.6)),
        (NormParams(0.5, 2, 4), NormParams(0.5, 2, 4), 0.7, (0.5, 2.0, 4.0)),
    ]
    worst = 0.0
    for p0, p1, theta, (s, p, q) in fixtures:
        got = interp_params(p0, p1, theta)
        worst = max(worst, abs(got.s - s) / s, abs(got.p - p) / p, abs(got.q - q) / q)
    for theta in rng.uniform(0.01, 0.99, size=20):
        p0, p1 = NormParams(0.3, 1.5, 2), NormParams(0.9, 4, math.inf)
        got = interp_params(p0, p1, theta)
        back = (1 / got.p - 1 / p0.p) / (1 / p1.p - 1 / p0.p)
        worst = max(worst, abs(back - theta))
    out.append(_le("interp.arithmetic", suite, "interpolation parameter arithmetic",
                   worst, 1e-14))

    if artifact_dir is not None:
        for path in sorted(Path(artifact_dir).glob(CERT_GLOB)):
            data = read_json(path)
            if not isinstance(data, dict) or "u0" not in data or "u" not in data:
                continue
            u = np.asarray(data["u"], dtype=np.float64)
            e = factorization_error(u, np.asarray(data["u0"]), np.asarray(data["u1"]),
                                    float(data["theta"]))
            out.append(_le(f"interp.certificate.{path.name}", suite,
                           "pointwise Calderon factorization", e / (1 + np.abs(u).max()),
                           FACTOR_TOL))
    return out


_RUNNERS = {
    "structure": structure_suite,
    "calculus": calculus_suite,
    "norms": norms_suite,
    "hajlasz": hajlasz_suite,
    "interp": interp_suite,
}


def run_suite(name, space, filling, seed=0, artifact_dir=None):
    """Run one named suite with its own seeded generator."""
    if name not in _RUNNERS:
        raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}")
    offset = SUITES.index(name)
    rng = np.random.default_rng([seed, offset])
    return _RUNNERS[name](space, filling, rng, artifact_dir=artifact_dir)


def run_verification(space, filling, suites=SUITES, seed=0, artifact_dir=None):
    """Run `suites`; returns checks sorted by name and per-suite wall times."""
    checks, timings = [], {}
    for name in suites:
        start = time.perf_counter()
        checks.extend(run_suite(name, space, filling, seed, artifact_dir))
        timings[name] = time.perf_counter() - start
    checks.sort(key=lambda c: c.name)
    return checks, timings
