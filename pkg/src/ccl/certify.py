"""Empirical certification of combing inequalities on finite metric graphs.

Every check scans a family of configurations (vertex tuples plus rational
parameter grids), evaluates the relevant inequality in exact arithmetic, and
returns a CertReport.  Verdicts are always relative to the scanned truncation
and recorded core; no finite scan proves a statement about an infinite space.

Internally all distances are handled as integers scaled by the graph's common
denominator, so comparisons are exact and reports are bit-reproducible for a
fixed configuration and seed.
"""

from __future__ import annotations

from concurrent import futures
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

from . import jsonio
from .errors import (
    ConfigError,
    DisconnectedPair,
    NotGeodesic,
    NotQuasiGeodesic,
    PremiseNotCertified,
    SubspaceNotConvex,
    TriplesTooShort,
)
from .rational import frac, frac_str
from .seeds import derive_rng

# ---------------------------------------------------------------------------
# profiles and plans


class ThetaTable:
    """Monotone gauge for the parameter-regularity bound.

    The gauge is evaluated as slope*x + intercept plus a step function given
    by `samples`, a list of (x_i, y_i) pairs sorted and non-decreasing in both
    coordinates; the step part at x is the y of the largest x_i <= x.  Pure
    affine gauges leave `samples` empty, pure tables leave slope = 0.
    """

    def __init__(self, samples=(), slope=0, intercept=0):
        self.slope = frac(slope)
        self.intercept = frac(intercept)
        self.samples = [(frac(x), frac(y)) for (x, y) in samples]
        if self.slope < 0 or self.intercept < 0:
            raise ConfigError("theta gauge must be nonnegative")
        prev = None
        for (x, y) in self.samples:
            if prev is not None and (x <= prev[0] or y < prev[1]):
                raise ConfigError("theta samples must be strictly increasing in x and monotone in y")
            prev = (x, y)

    @classmethod
    def identity(cls) -> "ThetaTable":
        return cls(slope=1)

    @classmethod
    def zero(cls) -> "ThetaTable":
        return cls()

    def __call__(self, x: Fraction) -> Fraction:
        val = self.slope * x + self.intercept
        step = Fraction(0)
        for (xi, yi) in self.samples:
            if xi <= x:
                step = yi
            else:
                break
        return val + step

    def to_json_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "samples": [[x, y] for (x, y) in self.samples],
        }


@dataclass(frozen=True)
class ConstantProfile:
    """A named bundle of certification constants.

    Unset fields mean "not asserted".  Profiles are partially ordered
    componentwise on their shared set fields.
    """

    lam: Fraction | None = None
    k: Fraction | None = None
    c1: Fraction | None = None
    c2: Fraction | None = None
    E: Fraction | None = None
    C: Fraction | None = None
    K: Fraction | None = None
    D: Fraction | None = None
    theta: ThetaTable | None = None

    def __post_init__(self):
        coerced = {}
        for name in ("lam", "k", "c1", "c2", "E", "C", "K", "D"):
            v = getattr(self, name)
            if v is not None:
                coerced[name] = frac(v)
        for name, v in coerced.items():
            object.__setattr__(self, name, v)
        if self.lam is not None and self.lam < 1:
            raise ConfigError("lambda must be >= 1")
        if self.E is not None and self.E < 1:
            raise ConfigError("E must be >= 1")
        for name in ("k", "c1", "c2", "C", "K", "D"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ConfigError("%s must be >= 0" % name)

    def dominates(self, other: "ConstantProfile") -> bool:
        """True when self is componentwise >= other on fields both set."""
        for name in ("lam", "k", "c1", "c2", "E", "C", "K", "D"):
            a = getattr(self, name)
            b = getattr(other, name)
            if a is not None and b is not None and a < b:
                return False
        return True

    def to_json_dict(self):
        out = {}
        for name in ("lam", "k", "c1", "c2", "E", "C", "K", "D"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v
        if self.theta is not None:
            out["theta"] = self.theta.to_json_dict()
        return out


@dataclass(frozen=True)
class SamplePlan:
    """How a check walks its configuration space.

    auto mode is exhaustive when the core has at most `exhaustive_limit`
    vertices and seeded-random otherwise.  In sampled mode every sample draws
    a full configuration (vertices and grid parameters); grids consist of the
    multiples of 1/grid_denominator together with path breakpoints.
    """

    mode: str = "auto"
    exhaustive_limit: int = 60
    n_samples: int = 100000
    grid_denominator: int = 8
    include_breakpoints: bool = True
    seed: object = None
    max_violations: int | None = None

    def __post_init__(self):
        if self.mode not in ("auto", "exhaustive", "sampled"):
            raise ConfigError("unknown sample mode %r" % self.mode)
        if self.grid_denominator < 1:
            raise ConfigError("grid denominator must be positive")

    def resolved_mode(self, core_size: int) -> str:
        if self.mode == "auto":
            return "exhaustive" if core_size <= self.exhaustive_limit else "sampled"
        return self.mode

    def require_seed(self):
        if self.seed is None:
            raise ConfigError("sampled certification requires an explicit seed")


@dataclass
class CertReport:
    """Outcome of one certification run, JSON-serializable and replayable."""

    property: str
    profile: dict
    verdict: str
    samples: dict
    seed: object
    core_radius: object
    witness: dict | None = None
    extra: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"

    def to_json_dict(self):
        out = {
            "property": self.property,
            "profile": self.profile,
            "verdict": self.verdict,
            "samples": self.samples,
            "seed": self.seed,
            "core_radius": self.core_radius,
            "extra": self.extra,
        }
        if self.witness is not None:
            out["witness"] = self.witness
        return out

    def to_json(self) -> str:
        return jsonio.dumps(self)


# ---------------------------------------------------------------------------
# evaluation kernel

_NO_EDGE = -1


class _Max:
    """Running maximum of nonnegative rationals held as raw (num, den) pairs."""

    __slots__ = ("num", "den", "arg")

    def __init__(self):
        self.num = 0
        self.den = 1
        self.arg = None

    def offer(self, num, den, arg):
        if num * self.den > self.num * den:
            self.num = num
            self.den = den
            self.arg = arg

    def offer_frac(self, value: Fraction, arg):
        self.offer(value.numerator, value.denominator, arg)

    def value(self, extra_den=1) -> Fraction:
        return Fraction(self.num, self.den * extra_den)

    def exceeds(self, bound: Fraction, extra_den=1) -> bool:
        return self.num * bound.denominator > bound.numerator * self.den * extra_den


def _merge_max(target: _Max, parts):
    """Deterministic merge of (num, den, arg) triples into target."""
    for (num, den, arg) in parts:
        cross_a = num * target.den
        cross_b = target.num * den
        if cross_a > cross_b:
            target.num, target.den, target.arg = num, den, arg
        elif cross_a == cross_b and arg is not None:
            if target.arg is None or arg < target.arg:
                target.arg = arg
    return target


class _Kernel:
    """Exact evaluator for points on combing paths and distances between them.

    Points are tuples (vA, a, vB, b, den, eid, oU): the point lies on edge
    `eid` with scaled distance a/den to anchor vertex vA and b/den to vB,
    and scaled offset oU/den from the edge's stored first endpoint.  Vertex
    points use eid = -1 and zero offsets.  All distances carry the graph's
    integer scale.
    """

    def __init__(self, combing):
        self.combing = combing
        self.graph = combing.graph
        if self.graph.n and self.graph.n_components != 1:
            raise DisconnectedPair("certification requires a connected graph")
        self.S = self.graph.scale
        self.row = self.graph.int_row
        self._paths = {}
        self._pts = {}
        self._grids = {}
        self._geo_ok = set()

    def path_entry(self, u, v):
        key = (u, v)
        got = self._paths.get(key)
        if got is None:
            p = self.combing.path(u, v)
            cum_s = []
            for c in p.cum:
                cs = c * self.S
                cum_s.append(cs.numerator)  # integral by scale construction
            got = (p, cum_s[-1], cum_s)
            self._paths[key] = got
            self._pts[key] = {}
        return got

    def ensure_geodesic(self, u, v):
        key = (u, v)
        if key in self._geo_ok:
            return
        _, total, _ = self.path_entry(u, v)
        d = self.row(u)[v]
        if total != d:
            raise NotGeodesic(
                "combing path %d -> %d has length %s but distance is %s"
                % (u, v, Fraction(total, self.S), Fraction(d, self.S))
            )
        self._geo_ok.add(key)

    def vertex_point(self, v):
        return (v, 0, v, 0, 1, _NO_EDGE, 0)

    def point(self, key, f: Fraction):
        entry = self.path_entry(*key)
        cache = self._pts[key]
        got = cache.get(f)
        if got is None:
            got = self._make_point(entry, f)
            cache[f] = got
        return got

    def _make_point(self, entry, f):
        path, total, cum_s = entry
        if total == 0:
            return self.vertex_point(path.vertices[0])
        num = f.numerator * total
        den = f.denominator
        lo, hi = 0, len(cum_s) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if cum_s[mid] * den <= num:
                lo = mid
            else:
                hi = mid - 1
        if cum_s[lo] * den == num:
            return self.vertex_point(path.vertices[lo])
        onum = num - cum_s[lo] * den
        eid = path.edge_ids[lo]
        eu, _, _ = self.graph.edges[eid]
        w = self.graph.int_weights[eid]
        b = w * den - onum
        g = gcd(gcd(onum, b), den)
        if g > 1:
            onum //= g
            b //= g
            den //= g
        vi = path.vertices[lo]
        vj = path.vertices[lo + 1]
        ou = onum if vi == eu else b
        return (vi, onum, vj, b, den, eid, ou)

    def pdist(self, P, Q):
        """Scaled distance between two points as an integer pair (num, den)."""
        vA1, a1, vB1, b1, d1, e1, o1 = P
        vA2, a2, vB2, b2, d2, e2, o2 = Q
        row = self.row
        if e1 == _NO_EDGE and e2 == _NO_EDGE:
            return (row(vA1)[vA2], 1)
        dd = d1 * d2
        rA = row(vA1)
        best = a1 * d2 + dd * rA[vA2] + a2 * d1
        t = a1 * d2 + dd * rA[vB2] + b2 * d1
        if t < best:
            best = t
        rB = row(vB1)
        t = b1 * d2 + dd * rB[vA2] + a2 * d1
        if t < best:
            best = t
        t = b1 * d2 + dd * rB[vB2] + b2 * d1
        if t < best:
            best = t
        if e1 == e2 and e1 != _NO_EDGE:
            t = abs(o1 * d2 - o2 * d1)
            if t < best:
                best = t
        return (best, dd)

    def dist_f(self, P, Q) -> Fraction:
        num, den = self.pdist(P, Q)
        return Fraction(num, den * self.S)

    def vdist_f(self, u, v) -> Fraction:
        return Fraction(self.row(u)[v], self.S)

    def pair_grid(self, key, plan, base):
        gkey = (key, plan.grid_denominator, plan.include_breakpoints)
        got = self._grids.get(gkey)
        if got is None:
            _, total, cum_s = self.path_entry(*key)
            vals = set(base)
            if plan.include_breakpoints and total:
                vals.update(Fraction(c, total) for c in cum_s)
            got = sorted(vals)
            self._grids[gkey] = got
        return got

    def bp_grid(self, key):
        _, total, cum_s = self.path_entry(*key)
        if total == 0:
            return [Fraction(0), Fraction(1)]
        seen = sorted(set(Fraction(c, total) for c in cum_s))
        return seen

    def path_vertex_at(self, key, f: Fraction):
        """The path vertex sitting at breakpoint parameter f, or None."""
        path, total, cum_s = self.path_entry(*key)
        if total == 0:
            return path.vertices[0]
        num = f.numerator * total
        if num % f.denominator:
            return None
        pos = num // f.denominator
        lo, hi = 0, len(cum_s) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if cum_s[mid] <= pos:
                lo = mid
            else:
                hi = mid - 1
        return path.vertices[lo] if cum_s[lo] == pos else None


def _base_grid(plan: SamplePlan):
    g = plan.grid_denominator
    return [Fraction(i, g) for i in range(g + 1)]


def _resolve_core(combing, core):
    if core is None:
        return list(range(combing.graph.n))
    return list(core)


def _endpoint_filter(kernel, dmax):
    if dmax is None:
        return lambda *vs: True
    lim = frac(dmax) * kernel.S  # S-scaled bound

    def ok(*vs):
        row = kernel.row
        for i, u in enumerate(vs):
            ru = row(u)
            for v in vs[i + 1:]:
                if ru[v] > lim:
                    return False
        return True

    return ok


def _core_radius_json(core_radius):
    if core_radius is None:
        return None
    if isinstance(core_radius, str):
        return core_radius
    return frac_str(frac(core_radius))


def _stripes(n, parts):
    parts = max(1, min(parts, n)) if n else 1
    out = [[] for _ in range(parts)]
    for i in range(n):
        out[i % parts].append(i)
    return [s for s in out if s]


def _ranges(n, parts):
    parts = max(1, min(parts, n)) if n else 1
    step = (n + parts - 1) // parts
    return [(lo, min(lo + step, n)) for lo in range(0, n, step)]


def _task_runner(task):
    fn, args = task
    return fn(*args)


def _run_chunks(fn, arglists, jobs):
    """Run fn over argument tuples, in-process or across workers; order kept."""
    if jobs <= 1 or len(arglists) <= 1:
        return [fn(*a) for a in arglists]
    tasks = [(fn, a) for a in arglists]
    with futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_task_runner, tasks))


# ---------------------------------------------------------------------------
# quasi-geodesic check


def check_quasigeodesic(
    combing,
    lam=1,
    k=0,
    plan: SamplePlan | None = None,
    core=None,
    dmax=None,
    core_radius=None,
    sweep_lambdas=None,
) -> CertReport:
    """Certify the two-sided quasi-geodesic displays for all combed pairs.

    For parameters t, s in the grid the graph distance between path points
    must sit between |t-s| d(x,y) / lam - k and lam |t-s| d(x,y) + k.
    """
    plan = plan or SamplePlan()
    lam = frac(lam)
    k = frac(k)
    if lam < 1:
        raise ConfigError("lambda must be >= 1")
    kernel = _Kernel(combing)
    core = _resolve_core(combing, core)
    mode = plan.resolved_mode(len(core))
    base = _base_grid(plan)
    okfilter = _endpoint_filter(kernel, dmax)
    lams = [lam] + [frac(l) for l in (sweep_lambdas or []) if frac(l) != lam]
    accs = {l: _Max() for l in lams}  # minimal k needed at each lambda
    S = kernel.S
    nviol = 0
    witness = None
    checks = 0
    skipped = 0
    n_pairs = 0

    def scan_pair(x, y, picked=None):
        nonlocal nviol, witness, checks, skipped, n_pairs
        if not okfilter(x, y):
            skipped += 1
            return
        n_pairs += 1
        key = (x, y)
        d = Fraction(kernel.row(x)[y], S)
        grid = kernel.pair_grid(key, plan, base)
        tsvals = picked or [(t, s) for i, t in enumerate(grid) for s in grid[i + 1:]]
        for (t, s) in tsvals:
            P = kernel.point(key, t)
            Q = kernel.point(key, s)
            lhs = kernel.dist_f(P, Q)
            delta = (s - t) * d
            checks += 1
            for l in lams:
                up = lhs - l * delta
                low = delta / l - lhs
                need = up if up >= low else low
                if need > 0:
                    accs[l].offer_frac(need, (x, y, t, s))
            need0 = max(lhs - lam * delta, delta / lam - lhs)
            if need0 > k:
                nviol += 1
                if witness is None:
                    side = "upper" if lhs - lam * delta >= delta / lam - lhs else "lower"
                    witness = {
                        "property": "quasigeodesic",
                        "args": {"x": x, "y": y, "t": frac_str(t), "s": frac_str(s)},
                        "side": side,
                        "lhs": frac_str(lhs),
                        "bound": frac_str(lam * delta + k if side == "upper" else delta / lam - k),
                    }

    if mode == "exhaustive":
        for x in core:
            for y in core:
                scan_pair(x, y)
    else:
        plan.require_seed()
        for i in range(plan.n_samples):
            rng = derive_rng(plan.seed, "qg/%d" % i)
            x = rng.choice(core)
            y = rng.choice(core)
            if not okfilter(x, y):
                skipped += 1
                continue
            grid = kernel.pair_grid((x, y), plan, base)
            t = rng.choice(grid)
            s = rng.choice(grid)
            if t > s:
                t, s = s, t
            scan_pair(x, y, picked=[(t, s)])

    min_k = {frac_str(l): accs[l].value() for l in lams}
    verdict = "certified" if not accs[lam].exceeds(k) else "violated"
    return CertReport(
        property="quasigeodesic",
        profile={"lam": lam, "k": k},
        verdict=verdict,
        samples={"mode": mode, "n_pairs": n_pairs, "n_checks": checks, "n_skipped": skipped},
        seed=plan.seed,
        core_radius=_core_radius_json(core_radius),
        witness=witness,
        extra={"min_k_at_lambda": min_k, "n_violations": nviol},
    )


# ---------------------------------------------------------------------------
# geodesic coarse convexity


def _gcc_scan(combing, params, work):
    kernel = _Kernel(combing)
    plan = params["plan"]
    core = params["core"]
    Es = params["Es"]
    C = params["C"]
    S = kernel.S
    base = _base_grid(plan)
    okfilter = _endpoint_filter(kernel, params["dmax"])
    assume = params["assume_geodesic"]
    CSn = C.numerator * S
    CSd = C.denominator
    accs = [_Max() for _ in Es]
    E0n, E0d = Es[0].numerator, Es[0].denominator
    nviol = 0
    witness = None
    checks = 0
    tuples = 0
    skipped = 0
    cap = plan.max_violations
    prod = {}

    def mul(u, v):
        key = (u, v)
        r = prod.get(key)
        if r is None:
            r = u * v
            prod[key] = r
        return r

    dirpairs = [(x, y) for x in core for y in core]
    pdist = kernel.pdist
    point = kernel.point

    def run_tuple(x1, y1, x2, y2, picked=None):
        nonlocal nviol, witness, checks, tuples, skipped
        if not okfilter(x1, y1, x2, y2):
            skipped += 1
            return
        k1 = (x1, y1)
        k2 = (x2, y2)
        if not assume:
            kernel.ensure_geodesic(*k1)
            kernel.ensure_geodesic(*k2)
        g1 = kernel.pair_grid(k1, plan, base)
        g2 = kernel.pair_grid(k2, plan, base)
        Xn = kernel.row(x1)[x2]
        tuples += 1
        if picked is None:
            avals, bvals = g1, g2
            cvals = sorted(set(g1) | set(g2))
        else:
            avals, bvals, cvals = [picked[0]], [picked[1]], [picked[2]]
        for a in avals:
            P1a = point(k1, a)
            for b in bvals:
                P2b = point(k2, b)
                Yn, Yd = pdist(P1a, P2b)
                XY = Xn * Yd
                for c in cvals:
                    Ln, Ld = pdist(point(k1, mul(c, a)), point(k2, mul(c, b)))
                    cn = c.numerator
                    cd = c.denominator
                    inner = (cd - cn) * XY + cn * Yn
                    lsc = Ln * cd * Yd
                    rsc = Ld * inner
                    base_den = Ld * cd * Yd
                    checks += 1
                    for idx, e in enumerate(Es):
                        sn = lsc * e.denominator - e.numerator * rsc
                        sd = base_den * e.denominator
                        acc = accs[idx]
                        if sn * acc.den > acc.num * sd:
                            acc.num = sn
                            acc.den = sd
                            acc.arg = (x1, y1, x2, y2, a, b, c)
                    sn0 = lsc * E0d - E0n * rsc
                    if sn0 * CSd > CSn * base_den * E0d:
                        nviol += 1
                        arg = (x1, y1, x2, y2, a, b, c)
                        if witness is None or arg < witness:
                            witness = arg
                        if cap is not None and nviol >= cap:
                            raise _ScanCapped()

    kind, spec = work
    try:
        if kind == "exhaustive":
            n = len(dirpairs)
            for i1 in spec:
                x1, y1 = dirpairs[i1]
                for i2 in range(i1, n):
                    x2, y2 = dirpairs[i2]
                    run_tuple(x1, y1, x2, y2)
        else:
            lo, hi = spec
            for i in range(lo, hi):
                rng = derive_rng(plan.seed, "gcc/%d" % i)
                x1 = rng.choice(core)
                y1 = rng.choice(core)
                x2 = rng.choice(core)
                y2 = rng.choice(core)
                if not okfilter(x1, y1, x2, y2):
                    skipped += 1
                    continue
                k1 = (x1, y1)
                k2 = (x2, y2)
                g1 = kernel.pair_grid(k1, plan, base)
                g2 = kernel.pair_grid(k2, plan, base)
                gc = sorted(set(g1) | set(g2))
                a = rng.choice(g1)
                b = rng.choice(g2)
                c = rng.choice(gc)
                run_tuple(x1, y1, x2, y2, picked=(a, b, c))
    except _ScanCapped:
        pass

    return {
        "minC": [(acc.num, acc.den, acc.arg) for acc in accs],
        "n_violations": nviol,
        "witness": witness,
        "n_checks": checks,
        "n_tuples": tuples,
        "n_skipped": skipped,
    }


class _ScanCapped(Exception):
    pass


def check_gcc(
    combing,
    E=1,
    C=0,
    plan: SamplePlan | None = None,
    core=None,
    dmax=None,
    core_radius=None,
    sweep_E=None,
    jobs=1,
    assume_geodesic=False,
) -> CertReport:
    """Certify the geodesic coarse-convexity display.

    For combed pairs (x1,y1), (x2,y2) and parameters a, b, c the distance
    between the c-points toward y1' = path1(a) and y2' = path2(b) must be at
    most (1-c) E d(x1,x2) + c E d(y1',y2') + C.  Sweep mode records the
    minimal feasible C for each requested E in the same pass.
    """
    plan = plan or SamplePlan()
    E = frac(E)
    C = frac(C)
    if E < 1:
        raise ConfigError("E must be >= 1")
    kernel = _Kernel(combing)
    core = _resolve_core(combing, core)
    mode = plan.resolved_mode(len(core))
    Es = [E] + sorted(set(frac(e) for e in (sweep_E or [])) - {E})
    params = {
        "core": core,
        "Es": Es,
        "C": C,
        "dmax": dmax,
        "plan": plan,
        "assume_geodesic": assume_geodesic,
    }
    if mode == "exhaustive":
        n = len(core) ** 2
        works = [("exhaustive", s) for s in _stripes(n, jobs if jobs > 1 else 1)]
    else:
        plan.require_seed()
        works = [("sampled", r) for r in _ranges(plan.n_samples, jobs if jobs > 1 else 1)]
    chunks = _run_chunks(_gcc_scan, [(combing, params, w) for w in works], jobs)

    accs = [_Max() for _ in Es]
    nviol = 0
    witness_key = None
    checks = tuples = skipped = 0
    for ch in chunks:
        for idx, part in enumerate(ch["minC"]):
            _merge_max(accs[idx], [part])
        nviol += ch["n_violations"]
        if ch["witness"] is not None and (witness_key is None or ch["witness"] < witness_key):
            witness_key = ch["witness"]
        checks += ch["n_checks"]
        tuples += ch["n_tuples"]
        skipped += ch["n_skipped"]

    min_c = {frac_str(e): accs[idx].value(kernel.S) for idx, e in enumerate(Es)}
    verdict = "certified" if not accs[0].exceeds(C, kernel.S) else "violated"
    witness = None
    if witness_key is not None:
        x1, y1, x2, y2, a, b, c = witness_key
        lhs, rhs = _eval_gcc(kernel, x1, y1, x2, y2, a, b, c, E, C)
        witness = {
            "property": "gcc",
            "args": {
                "x1": x1, "y1": y1, "x2": x2, "y2": y2,
                "a": frac_str(a), "b": frac_str(b), "c": frac_str(c),
            },
            "lhs": frac_str(lhs),
            "bound": frac_str(rhs),
        }
    return CertReport(
        property="geodesic-coarsely-convex",
        profile={"E": E, "C": C},
        verdict=verdict,
        samples={
            "mode": mode,
            "n_tuples": tuples,
            "n_checks": checks,
            "n_skipped": skipped,
            "jobs": jobs,
        },
        seed=plan.seed,
        core_radius=_core_radius_json(core_radius),
        witness=witness,
        extra={"min_C_at_E": min_c, "n_violations": nviol},
    )


def _eval_gcc(kernel, x1, y1, x2, y2, a, b, c, E, C):
    k1 = (x1, y1)
    k2 = (x2, y2)
    y1p = kernel.point(k1, a)
    y2p = kernel.point(k2, b)
    dY = kernel.dist_f(y1p, y2p)
    dX = kernel.vdist_f(x1, x2)
    lhs = kernel.dist_f(kernel.point(k1, c * a), kernel.point(k2, c * b))
    rhs = (1 - c) * E * dX + c * E * dY + C
    return lhs, rhs


# ---------------------------------------------------------------------------
# full coarse-convexity definition: endpoints, quasi-geodesicity, and the
# parameter-regularity gauge


def check_cc_full(
    combing,
    lam=1,
    k=0,
    E=None,
    C=None,
    theta: ThetaTable | None = None,
    plan: SamplePlan | None = None,
    core=None,
    dmax=None,
    core_radius=None,
    jobs=1,
) -> CertReport:
    """Certify the full coarse-convexity package at (lam, k, E, C, theta).

    Asserts endpoint identities, the (lam, k) quasi-geodesic displays, and
    parameter regularity |t d(x1,y1) - s d(x2,y2)| <= theta(d(x1,x2) + lhs).
    For geodesic combings the identity gauge is evaluated alongside theta.
    When E and C are given the convexity display is certified as well.
    """
    plan = plan or SamplePlan()
    theta = theta or ThetaTable.identity()
    kernel = _Kernel(combing)
    core = _resolve_core(combing, core)
    mode = plan.resolved_mode(len(core))
    base = _base_grid(plan)
    okfilter = _endpoint_filter(kernel, dmax)
    S = kernel.S
    lam = frac(lam)
    kq = frac(k)

    qg = check_quasigeodesic(
        combing, lam, kq, plan=plan, core=core, dmax=dmax, core_radius=core_radius
    )

    geodesic = True
    for x in core[: min(len(core), 8)]:
        for y in core[: min(len(core), 8)]:
            _, total, _ = kernel.path_entry(x, y)
            if total != kernel.row(x)[y]:
                geodesic = False
                break
        if not geodesic:
            break

    excess = _Max()       # against theta
    excess_id = _Max()    # against the identity gauge
    nviol = 0
    witness = None
    checks = 0
    skipped = 0
    n_tuples = 0

    def scan(x1, y1, x2, y2, picked=None):
        nonlocal nviol, witness, checks, skipped, n_tuples
        if not okfilter(x1, y1, x2, y2):
            skipped += 1
            return
        k1 = (x1, y1)
        k2 = (x2, y2)
        d1 = Fraction(kernel.row(x1)[y1], S)
        d2 = Fraction(kernel.row(x2)[y2], S)
        dx = Fraction(kernel.row(x1)[x2], S)
        g1 = kernel.pair_grid(k1, plan, base)
        g2 = kernel.pair_grid(k2, plan, base)
        n_tuples += 1
        tsvals = picked or [(t, s) for t in g1 for s in g2]
        for (t, s) in tsvals:
            lhs = abs(t * d1 - s * d2)
            gap = kernel.dist_f(kernel.point(k1, t), kernel.point(k2, s))
            arg = dx + gap
            bound = theta(arg)
            checks += 1
            if lhs > bound:
                nviol += 1
                excess.offer_frac(lhs - bound, (x1, y1, x2, y2, t, s))
                if witness is None:
                    witness = {
                        "property": "param-regularity",
                        "args": {
                            "x1": x1, "y1": y1, "x2": x2, "y2": y2,
                            "t": frac_str(t), "s": frac_str(s),
                        },
                        "lhs": frac_str(lhs),
                        "bound": frac_str(bound),
                    }
            if geodesic and lhs > arg:
                excess_id.offer_frac(lhs - arg, (x1, y1, x2, y2, t, s))

    if mode == "exhaustive":
        for x1 in core:
            for y1 in core:
                for x2 in core:
                    for y2 in core:
                        scan(x1, y1, x2, y2)
    else:
        plan.require_seed()
        for i in range(plan.n_samples):
            rng = derive_rng(plan.seed, "ccfull/%d" % i)
            x1, y1, x2, y2 = (rng.choice(core) for _ in range(4))
            if not okfilter(x1, y1, x2, y2):
                skipped += 1
                continue
            g1 = kernel.pair_grid((x1, y1), plan, base)
            g2 = kernel.pair_grid((x2, y2), plan, base)
            scan(x1, y1, x2, y2, picked=[(rng.choice(g1), rng.choice(g2))])

    convexity = None
    if E is not None and C is not None:
        convexity = check_gcc(
            combing, E, C, plan=plan, core=core, dmax=dmax,
            core_radius=core_radius, jobs=jobs, assume_geodesic=not geodesic,
        )

    verdict = "certified"
    if nviol or not qg.certified or (convexity is not None and not convexity.certified):
        verdict = "violated"
    profile = {"lam": lam, "k": kq, "theta": theta.to_json_dict()}
    if E is not None:
        profile["E"] = frac(E)
    if C is not None:
        profile["C"] = frac(C)
    extra = {
        "quasigeodesic": qg.to_json_dict(),
        "n_violations": nviol,
        "theta_excess_max": excess.value(),
        "geodesic_input": geodesic,
        "identity_gauge_holds": geodesic and excess_id.num == 0,
    }
    if convexity is not None:
        extra["convexity"] = convexity.to_json_dict()
    return CertReport(
        property="coarsely-convex-full",
        profile=profile,
        verdict=verdict,
        samples={"mode": mode, "n_tuples": n_tuples, "n_checks": checks, "n_skipped": skipped},
        seed=plan.seed,
        core_radius=_core_radius_json(core_radius),
        witness=witness,
        extra=extra,
    )


# ---------------------------------------------------------------------------
# coarse consistency


def check_consistency(
    combing,
    K=0,
    plan: SamplePlan | None = None,
    core=None,
    dmax=None,
    core_radius=None,
) -> CertReport:
    """Certify K-coarse consistency.

    For z a path vertex of the combing line from x to y at breakpoint a, the
    line from x to z must stay within K of the reparametrized initial segment.
    K = 0 asserts the exact prefix property path(x,z) = path(x,y)[:z] and
    falls back to distance measurements only to diagnose violations.
    """
    plan = plan or SamplePlan()
    K = frac(K)
    kernel = _Kernel(combing)
    core = _resolve_core(combing, core)
    mode = plan.resolved_mode(len(core))
    base = _base_grid(plan)
    okfilter = _endpoint_filter(kernel, dmax)
    acc = _Max()
    nviol = 0
    witness = None
    checks = 0
    skipped = 0
    n_pairs = 0

    def scan(x, y, picked_i=None):
        nonlocal nviol, witness, checks, skipped, n_pairs
        if not okfilter(x, y):
            skipped += 1
            return
        n_pairs += 1
        key = (x, y)
        path, total, cum_s = kernel.path_entry(*key)
        idxs = range(len(path.vertices)) if picked_i is None else [picked_i]
        for i in idxs:
            z = path.vertices[i]
            a = Fraction(cum_s[i], total) if total else Fraction(0)
            zkey = (x, z)
            zpath, ztotal, zcum = kernel.path_entry(*zkey)
            prefix_ok = (
                zpath.vertices == path.vertices[: i + 1]
                and zpath.edge_ids == path.edge_ids[:i]
            )
            checks += 1
            if prefix_ok:
                continue
            cvals = sorted(set(base) | set(kernel.bp_grid(zkey)) | {
                Fraction(c, cum_s[i]) for c in cum_s[: i + 1] if cum_s[i]
            })
            worst = Fraction(0)
            worst_c = Fraction(0)
            for c in cvals:
                d = kernel.dist_f(kernel.point(zkey, c), kernel.point(key, c * a))
                if d > worst:
                    worst = d
                    worst_c = c
            acc.offer_frac(worst, (x, y, frac_str(a)))
            if worst > K:
                nviol += 1
                if witness is None:
                    witness = {
                        "property": "consistency",
                        "args": {"x": x, "y": y, "a": frac_str(a), "c": frac_str(worst_c)},
                        "lhs": frac_str(worst),
                        "bound": frac_str(K),
                    }

    if mode == "exhaustive":
        for x in core:
            for y in core:
                scan(x, y)
    else:
        plan.require_seed()
        for i in range(plan.n_samples):
            rng = derive_rng(plan.seed, "cons/%d" % i)
            x = rng.choice(core)
            y = rng.choice(core)
            if not okfilter(x, y):
                skipped += 1
                continue
            path, _, _ = kernel.path_entry(x, y)
            scan(x, y, picked_i=rng.randrange(len(path.vertices)))

    verdict = "certified" if not acc.exceeds(K) else "violated"
    return CertReport(
        property="coarse-consistency",
        profile={"K": K},
        verdict=verdict,
        samples={"mode": mode, "n_pairs": n_pairs, "n_checks": checks, "n_skipped": skipped},
        seed=plan.seed,
        core_radius=_core_radius_json(core_radius),
        witness=witness,
        extra={"min_K": acc.value(), "n_violations": nviol},
    )


# ---------------------------------------------------------------------------
# forward / backward convexity


def check_forward_backward(
    combing,
    E=1,
    C=0,
    plan: SamplePlan | None = None,
    core=None,
    dmax=None,
    core_radius=None,
    direction="both",
    sweep_E=None,
) -> CertReport:
    """Certify forward and/or backward convexity of combing lines.

    Forward: lines from a shared source v to targets w1, w2 satisfy
    d(line1(c), line2(c)) <= c E d(w1,w2) + C.  Backward: lines from v1, v2
    to a shared target satisfy the mirrored (1-c) display.
    """
    plan = plan or SamplePlan()
    E = frac(E)
    C = frac(C)
    if direction not in ("forward", "backward", "both"):
        raise ConfigError("direction must be forward, backward, or both")
    kernel = _Kernel(combing)
    core = _resolve_core(combing, core)
    mode = plan.resolved_mode(len(core))
    base = _base_grid(plan)
    okfilter = _endpoint_filter(kernel, dmax)
    Es = [E] + sorted(set(frac(e) for e in (sweep_E or [])) - {E})
    accs = {("forward", e): _Max() for e in Es}
    accs.update({("backward", e): _Max() for e in Es})
    nviol = 0
    witness = None
    checks = 0
    skipped = 0
    n_triples = 0
    directions = ("forward", "backward") if direction == "both" else (direction,)

    def scan(dirn, u1, u2, shared, picked_c=None):
        nonlocal nviol, witness, checks, skipped, n_triples
        if not okfilter(u1, u2, shared):
            skipped += 1
            return
        if dirn == "forward":
            k1, k2 = (shared, u1), (shared, u2)
        else:
            k1, k2 = (u1, shared), (u2, shared)
        kernel.ensure_geodesic(*k1)
        kernel.ensure_geodesic(*k2)
        dU = kernel.vdist_f(u1, u2)
        g = sorted(set(kernel.pair_grid(k1, plan, base)) | set(kernel.pair_grid(k2, plan, base)))
        n_triples += 1
        for c in ([picked_c] if picked_c is not None else g):
            lhs = kernel.dist_f(kernel.point(k1, c), kernel.point(k2, c))
            coef = c if dirn == "forward" else 1 - c
            checks += 1
            for e in Es:
                slack = lhs - coef * e * dU
                if slack > 0:
                    accs[(dirn, e)].offer_frac(slack, (u1, u2, shared, c))
            if lhs - coef * E * dU > C:
                nviol += 1
                if witness is None:
                    witness = {
                        "property": dirn + "-convexity",
                        "args": (
                            {"v": shared, "w1": u1, "w2": u2, "c": frac_str(c)}
                            if dirn == "forward"
                            else {"v1": u1, "v2": u2, "w": shared, "c": frac_str(c)}
                        ),
                        "lhs": frac_str(lhs),
                        "bound": frac_str(coef * E * dU + C),
                    }

    if mode == "exhaustive":
        for shared in core:
            for i, u1 in enumerate(core):
                for u2 in core[i:]:
                    for dirn in directions:
                        scan(dirn, u1, u2, shared)
    else:
        plan.require_seed()
        for i in range(plan.n_samples):
            rng = derive_rng(plan.seed, "fb/%d" % i)
            dirn = directions[0] if len(directions) == 1 else rng.choice(directions)
            u1, u2, shared = (rng.choice(core) for _ in range(3))
            if not okfilter(u1, u2, shared):
                skipped += 1
                continue
            if dirn == "forward":
                k1, k2 = (shared, u1), (shared, u2)
            else:
                k1, k2 = (u1, shared), (u2, shared)
            g = sorted(
                set(kernel.pair_grid(k1, plan, base)) | set(kernel.pair_grid(k2, plan, base))
            )
            scan(dirn, u1, u2, shared, picked_c=rng.choice(g))

    min_c = {
        dirn: {frac_str(e): accs[(dirn, e)].value() for e in Es} for dirn in directions
    }
    violated = any(accs[(dirn, E)].exceeds(C) for dirn in directions)
    return CertReport(
        property="forward-backward-convexity",
        profile={"E": E, "C": C, "direction": direction},
        verdict="violated" if violated else "certified",
        samples={"mode": mode, "n_triples": n_triples, "n_checks": checks, "n_skipped": skipped},
        seed=plan.seed,
        core_radius=_core_radius_json(core_radius),
        witness=witness,
        extra={"min_C_at_E": min_c, "n_violations": nviol},
    )


# ---------------------------------------------------------------------------
# bounded bicombing


def check_bounded(
    combing,
    lam=1,
    k=0,
    c1=1,
    c2=0,
    plan: SamplePlan | None = None,
    core=None,
    dmax=None,
    core_radius=None,
    sweep_c1=None,
    verify_quasigeodesic=True,
) -> CertReport:
    """Certify the bounded-bicombing display.

    For combed pairs (x1,y1), (x2,y2) and grid t, the distance between the
    t-points is at most c1 max{d(x1,x2), d(y1,y2)} + c2.  The combing must be
    (lam,k)-quasi-geodesic; that premise is spot-verified unless disabled.
    """
    plan = plan or SamplePlan()
    c1 = frac(c1)
    c2 = frac(c2)
    if verify_quasigeodesic:
        qg = check_quasigeodesic(combing, lam, k, plan=plan, core=core, dmax=dmax)
        if not qg.certified:
            raise NotQuasiGeodesic(
                "combing violates the (%s, %s) quasi-geodesic premise" % (frac(lam), frac(k))
            )
    kernel = _Kernel(combing)
    core = _resolve_core(combing, core)
    mode = plan.resolved_mode(len(core))
    base = _base_grid(plan)
    okfilter = _endpoint_filter(kernel, dmax)
    c1s = [c1] + sorted(set(frac(v) for v in (sweep_c1 or [])) - {c1})
    accs = {v: _Max() for v in c1s}
    nviol = 0
    witness = None
    checks = 0
    skipped = 0
    tuples = 0

    def scan(x1, y1, x2, y2, picked_t=None):
        nonlocal nviol, witness, checks, skipped, tuples
        if not okfilter(x1, y1, x2, y2):
            skipped += 1
            return
        k1 = (x1, y1)
        k2 = (x2, y2)
        m = max(kernel.vdist_f(x1, x2), kernel.vdist_f(y1, y2))
        g = sorted(set(kernel.pair_grid(k1, plan, base)) | set(kernel.pair_grid(k2, plan, base)))
        tuples += 1
        for t in ([picked_t] if picked_t is not None else g):
            lhs = kernel.dist_f(kernel.point(k1, t), kernel.point(k2, t))
            checks += 1
            for v in c1s:
                slack = lhs - v * m
                if slack > 0:
                    accs[v].offer_frac(slack, (x1, y1, x2, y2, t))
            if lhs - c1 * m > c2:
                nviol += 1
                if witness is None:
                    witness = {
                        "property": "bounded",
                        "args": {"x1": x1, "y1": y1, "x2": x2, "y2": y2, "t": frac_str(t)},
                        "lhs": frac_str(lhs),
                        "bound": frac_str(c1 * m + c2),
                    }

    dirpairs = [(x, y) for x in core for y in core]
    if mode == "exhaustive":
        n = len(dirpairs)
        for i1 in range(n):
            x1, y1 = dirpairs[i1]
            for i2 in range(i1, n):
                x2, y2 = dirpairs[i2]
                scan(x1, y1, x2, y2)
    else:
        plan.require_seed()
        for i in range(plan.n_samples):
            rng = derive_rng(plan.seed, "bnd/%d" % i)
            x1, y1, x2, y2 = (rng.choice(core) for _ in range(4))
            if not okfilter(x1, y1, x2, y2):
                skipped += 1
                continue
            g = sorted(
                set(kernel.pair_grid((x1, y1), plan, base))
                | set(kernel.pair_grid((x2, y2), plan, base))
            )
            scan(x1, y1, x2, y2, picked_t=rng.choice(g))

    min_c2 = {frac_str(v): accs[v].value() for v in c1s}
    verdict = "certified" if not accs[c1].exceeds(c2) else "violated"
    return CertReport(
        property="bounded",
        profile={"lam": frac(lam), "k": frac(k), "c1": c1, "c2": c2},
        verdict=verdict,
        samples={"mode": mode, "n_tuples": tuples, "n_checks": checks, "n_skipped": skipped},
        seed=plan.seed,
        core_radius=_core_radius_json(core_radius),
        witness=witness,
        extra={"min_c2_at_c1": min_c2, "n_violations": nviol},
    )


# ---------------------------------------------------------------------------
# thinness


def _x_span(kernel, key, xset):
    """Indices and parameters of the first and last path vertices inside X."""
    path, total, cum_s = kernel.path_entry(*key)
    idx = [i for i, v in enumerate(path.vertices) if v in xset]
    if not idx:
        return None
    i0, i1 = idx[0], idx[-1]
    if total == 0:
        return (i0, i1, Fraction(0), Fraction(1))
    return (i0, i1, Fraction(cum_s[i0], total), Fraction(cum_s[i1], total))


def _segment_hausdorff(kernel, key1, c_lo1, c_hi1, verts2, base):
    """Max over sampled seg1 points of the exact distance to seg2's vertex set.

    seg1 is the part of path1 with parameters in [c_lo1, c_hi1]; sample
    parameters are its own breakpoints plus the base grid mapped affinely.
    The inner minimum over a path is attained at path vertices, so measuring
    against verts2 (the vertices of seg2) is exact for each sampled point.
    """
    path1, total1, cum1 = kernel.path_entry(*key1)
    params = set()
    span = c_hi1 - c_lo1
    for t in base:
        params.add(c_lo1 + t * span)
    if total1:
        for c in cum1:
            f = Fraction(c, total1)
            if c_lo1 <= f <= c_hi1:
                params.add(f)
    vpts = [kernel.vertex_point(v) for v in verts2]
    worst = _Max()
    for f in sorted(params):
        P = kernel.point(key1, f)
        best = None
        for Q in vpts:
            num, den = kernel.pdist(P, Q)
            if best is None or num * best[1] < best[0] * den:
                best = (num, den)
        worst.offer(best[0], best[1], f)
    return worst


def check_thinness(
    combing,
    subspace,
    C=0,
    D=0,
    E=1,
    direction="forward",
    plan: SamplePlan | None = None,
    core=None,
    dmax=None,
    core_radius=None,
) -> CertReport:
    """Certify the forward or backward thinness package over a convex subspace.

    For qualifying triples (shared endpoint, two far endpoints at distance
    more than 2D) whose combing lines meet the subspace X, extract entry and
    exit data and assert: the off-X initial (forward) or final (backward)
    segments D-fellow-travel after reparametrization; the exit points a, b
    satisfy d(a,b) <= max{c1,c1'} d(far ends) + 4D; the in-X subpaths agree
    with the combing lines between their own endpoints; and near-additivity
    d(end1,a) + d(a,b) + d(b,end2) <= d(end1,end2) + 4D.  The E and C
    arguments record the convexity profile certified on X beforehand.
    """
    plan = plan or SamplePlan()
    C = frac(C)
    D = frac(D)
    E = frac(E)
    if direction not in ("forward", "backward"):
        raise ConfigError("direction must be forward or backward")
    kernel = _Kernel(combing)
    core = _resolve_core(combing, core)
    mode = plan.resolved_mode(len(core))
    base = _base_grid(plan)
    okfilter = _endpoint_filter(kernel, dmax)
    xset = frozenset(subspace)
    S = kernel.S

    xcore = [v for v in core if v in xset]
    for u in xcore:
        for v in xcore:
            path = combing.path(u, v)
            bad = [w for w in path.vertices if w not in xset]
            if bad:
                raise SubspaceNotConvex(
                    "combing path %d -> %d leaves the subspace at vertex %d"
                    % (u, v, bad[0])
                )

    lim2D = 2 * D * S  # S-scaled qualification threshold
    endpoint_gap = _Max()   # d(p1, p2) (forward) or d(a, b)-side analogue
    hausdorff = _Max()
    item2 = _Max()
    item4 = _Max()
    item3_ok = True
    item3_witness = None
    nqual = 0
    nshort = 0
    nmiss = 0
    skipped = 0
    witness = None

    def scan(shared, u1, u2):
        nonlocal nqual, nshort, nmiss, skipped, item3_ok, item3_witness
        if not okfilter(shared, u1, u2):
            skipped += 1
            return
        if direction == "forward":
            k1, k2 = (shared, u1), (shared, u2)
        else:
            k1, k2 = (u1, shared), (u2, shared)
        d1 = kernel.row(k1[0])[k1[1]]
        d2 = kernel.row(k2[0])[k2[1]]
        if Fraction(min(d1, d2)) <= lim2D:
            nshort += 1
            return
        path1, total1, cum1 = kernel.path_entry(*k1)
        path2, total2, cum2 = kernel.path_entry(*k2)
        span1 = _x_span(kernel, k1, xset)
        span2 = _x_span(kernel, k2, xset)
        if span1 is None or span2 is None:
            nmiss += 1
            return
        nqual += 1
        i0_1, i1_1, c0_1, c1_1 = span1
        i0_2, i1_2, c0_2, c1_2 = span2
        p1, a = path1.vertices[i0_1], path1.vertices[i1_1]
        p2, b = path2.vertices[i0_2], path2.vertices[i1_2]
        arg = (shared, u1, u2)

        if direction == "forward":
            # item 1: initial segments [0, c0] fellow travel; endpoints p1, p2
            endpoint_gap.offer_frac(kernel.vdist_f(p1, p2), arg)
            v2init = path2.vertices[: i0_2 + 1]
            v1init = path1.vertices[: i0_1 + 1]
            h12 = _segment_hausdorff(kernel, k1, Fraction(0), c0_1, v2init, base)
            h21 = _segment_hausdorff(kernel, k2, Fraction(0), c0_2, v1init, base)
            hausdorff.offer(h12.num, h12.den, arg)
            hausdorff.offer(h21.num, h21.den, arg)
            # item 2: exit points against the far ends
            d_ends = kernel.vdist_f(path1.vertices[-1], path2.vertices[-1])
            slack2 = kernel.vdist_f(a, b) - max(c1_1, c1_2) * d_ends
            # item 4: near-additivity through a and b
            slack4 = (
                kernel.vdist_f(path1.vertices[-1], a)
                + kernel.vdist_f(a, b)
                + kernel.vdist_f(b, path2.vertices[-1])
                - d_ends
            )
        else:
            # item 1: final segments [c1, 1] fellow travel; endpoints a, b
            endpoint_gap.offer_frac(kernel.vdist_f(a, b), arg)
            v2tail = path2.vertices[i1_2:]
            v1tail = path1.vertices[i1_1:]
            h12 = _segment_hausdorff(kernel, k1, c1_1, Fraction(1), v2tail, base)
            h21 = _segment_hausdorff(kernel, k2, c1_2, Fraction(1), v1tail, base)
            hausdorff.offer(h12.num, h12.den, arg)
            hausdorff.offer(h21.num, h21.den, arg)
            d_starts = kernel.vdist_f(path1.vertices[0], path2.vertices[0])
            slack2 = kernel.vdist_f(p1, p2) - max(1 - c0_1, 1 - c0_2) * d_starts
            slack4 = (
                kernel.vdist_f(path1.vertices[0], p1)
                + kernel.vdist_f(p1, p2)
                + kernel.vdist_f(p2, path2.vertices[0])
                - d_starts
            )
        if slack2 > 0:
            item2.offer_frac(slack2, arg)
        if slack4 > 0:
            item4.offer_frac(slack4, arg)

        # item 3: in-X subpaths agree with the combing between their endpoints
        sub1_v = path1.vertices[i0_1: i1_1 + 1]
        sub1_e = path1.edge_ids[i0_1:i1_1]
        sub2_v = path2.vertices[i0_2: i1_2 + 1]
        sub2_e = path2.edge_ids[i0_2:i1_2]
        cp1 = combing.path(p1, a)
        cp2 = combing.path(p2, b)
        if (cp1.vertices, cp1.edge_ids) != (sub1_v, sub1_e) or (
            cp2.vertices,
            cp2.edge_ids,
        ) != (sub2_v, sub2_e):
            item3_ok = False
            if item3_witness is None:
                item3_witness = arg

    n_scanned = 0
    if mode == "exhaustive":
        for shared in core:
            for i, u1 in enumerate(core):
                for u2 in core[i + 1:]:
                    scan(shared, u1, u2)
                    n_scanned += 1
    else:
        plan.require_seed()
        for i in range(plan.n_samples):
            rng = derive_rng(plan.seed, "thin/%d" % i)
            shared, u1, u2 = (rng.choice(core) for _ in range(3))
            if u1 == u2:
                continue
            scan(shared, u1, u2)
            n_scanned += 1

    if nqual == 0:
        raise TriplesTooShort(
            "no triple exceeded the 2D threshold with both lines meeting the subspace"
        )

    failures = []
    if endpoint_gap.exceeds(D):
        failures.append(("entry-gap", endpoint_gap.arg))
    if hausdorff.exceeds(D, kernel.S):
        failures.append(("fellow-travel", hausdorff.arg))
    if item2.exceeds(4 * D):
        failures.append(("exit-bound", item2.arg))
    if not item3_ok:
        failures.append(("restriction", item3_witness))
    if item4.exceeds(4 * D):
        failures.append(("near-additivity", item4.arg))
    ok = not failures
    if failures:
        name, arg = failures[0]
        witness = {
            "property": "thinness-" + direction,
            "item": name,
            "args": {"shared": arg[0], "u1": arg[1], "u2": arg[2]},
        }
    ft_max = max(endpoint_gap.value(), hausdorff.value(kernel.S))
    extra = {
        "n_qualifying": nqual,
        "n_short_skipped": nshort,
        "n_missing_subspace": nmiss,
        "fellow_travel_max": ft_max,
        "fellow_travel_within_D": ft_max <= D,
        "fellow_travel_within_2D": ft_max <= 2 * D,
        "item2_slack_max": item2.value(),
        "item2_within_4D": not item2.exceeds(4 * D),
        "item2_within_8D": not item2.exceeds(8 * D),
        "item3_restriction_identities": item3_ok,
        "item4_slack_max": item4.value(),
        "item4_within_4D": not item4.exceeds(4 * D),
        "item4_within_8D": not item4.exceeds(8 * D),
    }
    if item3_witness is not None:
        extra["item3_witness"] = list(item3_witness)
    return CertReport(
        property="thinness-" + direction,
        profile={"C": C, "D": D, "E": E},
        verdict="certified" if ok else "violated",
        samples={"mode": mode, "n_triples": n_scanned, "n_skipped": skipped},
        seed=plan.seed,
        core_radius=_core_radius_json(core_radius),
        witness=witness,
        extra=extra,
    )


# ---------------------------------------------------------------------------
# sufficiency cross-checks


def cross_check_sufficiency(
    combing,
    plan: SamplePlan | None = None,
    core=None,
    dmax=None,
    core_radius=None,
    E=1,
    jobs=1,
    subspace=None,
    D=None,
    subspace_profile=None,
    premise_reports=None,
) -> CertReport:
    """Verify the sufficiency transfers on one combing.

    Measures, over a shared configuration family, the minimal constants of
    the two anchored premise displays, of coarse consistency, and of forward
    and backward convexity, together with the minimal conclusion constant.
    Asserts the published transfers: conclusion within (E, 2 max premise C)
    and within (E, 2 max directional C + 4K).  When a convex subspace with a
    fellow-travel constant D and an in-subspace profile (E_X, C_X) is given,
    additionally certifies the conclusion at (E_X + 2, 6 E_X D + 12 D + C_X).

    Intermediate points used as combing endpoints must be vertices, so the
    anchor parameters a and b range over path breakpoints only.
    """
    plan = plan or SamplePlan()
    E = frac(E)
    if premise_reports:
        for name, rep in sorted(premise_reports.items()):
            if rep is not None and not rep.certified:
                raise PremiseNotCertified("premise %r was not certified" % name)
    kernel = _Kernel(combing)
    core = _resolve_core(combing, core)
    mode = plan.resolved_mode(len(core))
    base = _base_grid(plan)
    okfilter = _endpoint_filter(kernel, dmax)
    S = kernel.S

    conc = _Max()
    prem1 = _Max()
    prem2 = _Max()
    cons = _Max()
    fwd = _Max()
    bwd = _Max()
    checks = 0
    tuples = 0
    skipped = 0
    En, Ed = E.numerator, E.denominator

    def scan(x1, y1, x2, y2, picked=None):
        nonlocal checks, tuples, skipped
        if not okfilter(x1, y1, x2, y2):
            skipped += 1
            return
        k1 = (x1, y1)
        k2 = (x2, y2)
        kernel.ensure_geodesic(*k1)
        kernel.ensure_geodesic(*k2)
        tuples += 1
        bp1 = kernel.bp_grid(k1)
        bp2 = kernel.bp_grid(k2)
        Xn = kernel.row(x1)[x2]
        if picked is None:
            abvals = [(a, b) for a in bp1 for b in bp2]
        else:
            abvals = [picked[:2]]
        for (a, b) in abvals:
            y1v = kernel.path_vertex_at(k1, a)
            y2v = kernel.path_vertex_at(k2, b)
            q11 = (x1, y1v)
            q12 = (x1, y2v)
            q22 = (x2, y2v)
            kernel.ensure_geodesic(*q11)
            kernel.ensure_geodesic(*q12)
            kernel.ensure_geodesic(*q22)
            Yn = kernel.row(y1v)[y2v]
            if picked is None:
                cvals = sorted(
                    set(base)
                    | set(bp1)
                    | set(bp2)
                    | set(kernel.bp_grid(q11))
                    | set(kernel.bp_grid(q12))
                    | set(kernel.bp_grid(q22))
                )
            else:
                cvals = [picked[2]]
            for c in cvals:
                cn, cd = c.numerator, c.denominator
                A1 = kernel.point(k1, c * a)
                A2 = kernel.point(k2, c * b)
                B11 = kernel.point(q11, c)
                B12 = kernel.point(q12, c)
                B22 = kernel.point(q22, c)
                arg = (x1, y1, x2, y2, a, b, c)
                checks += 1
                # conclusion display
                Ln, Ld = kernel.pdist(A1, A2)
                inner = (cd - cn) * Xn + cn * Yn   # cd * [(1-c)dX + c dY], S-scaled
                conc.offer(Ln * cd * Ed - En * Ld * inner, Ld * cd * Ed, arg)
                # anchored premise 1: toward y2v from the shared source x1
                Ln1, Ld1 = kernel.pdist(A1, B12)
                prem1.offer(Ln1 * cd * Ed - En * Ld1 * cn * Yn, Ld1 * cd * Ed, arg)
                # anchored premise 2: from x2 toward the intermediate target y2v
                Ln2, Ld2 = kernel.pdist(A2, B12)
                prem2.offer(Ln2 * cd * Ed - En * Ld2 * (cd - cn) * Xn, Ld2 * cd * Ed, arg)
                # consistency instances
                Kn1, Kd1 = kernel.pdist(A1, B11)
                cons.offer(Kn1, Kd1, arg)
                Kn2, Kd2 = kernel.pdist(A2, B22)
                cons.offer(Kn2, Kd2, arg)
                # forward instance at source x1, targets y1v, y2v
                Fn, Fd = kernel.pdist(B11, B12)
                fwd.offer(Fn * cd * Ed - En * Fd * cn * Yn, Fd * cd * Ed, arg)
                # backward instance at sources x1, x2, target y2v
                Bn, Bd = kernel.pdist(B12, B22)
                bwd.offer(Bn * cd * Ed - En * Bd * (cd - cn) * Xn, Bd * cd * Ed, arg)

    if mode == "exhaustive":
        dirpairs = [(x, y) for x in core for y in core]
        n = len(dirpairs)
        for i1 in range(n):
            x1, y1 = dirpairs[i1]
            for i2 in range(i1, n):
                x2, y2 = dirpairs[i2]
                scan(x1, y1, x2, y2)
    else:
        plan.require_seed()
        for i in range(plan.n_samples):
            rng = derive_rng(plan.seed, "suff/%d" % i)
            x1, y1, x2, y2 = (rng.choice(core) for _ in range(4))
            if not okfilter(x1, y1, x2, y2):
                skipped += 1
                continue
            bp1 = kernel.bp_grid((x1, y1))
            bp2 = kernel.bp_grid((x2, y2))
            a = rng.choice(bp1)
            b = rng.choice(bp2)
            g = sorted(set(base) | set(bp1) | set(bp2))
            c = rng.choice(g)
            scan(x1, y1, x2, y2, picked=(a, b, c))

    conc_c = conc.value(S)
    p1_c = prem1.value(S)
    p2_c = prem2.value(S)
    k_c = cons.value(S)
    f_c = fwd.value(S)
    b_c = bwd.value(S)
    anchored_budget = 2 * max(p1_c, p2_c)
    directional_budget = 2 * max(f_c, b_c) + 4 * k_c
    ok_anchored = conc_c <= anchored_budget
    ok_directional = conc_c <= directional_budget
    extra = {
        "E": E,
        "conclusion_min_C": conc_c,
        "anchored_premises_min_C": {"toward": p1_c, "from": p2_c},
        "anchored_budget": anchored_budget,
        "anchored_holds": ok_anchored,
        "consistency_min_K": k_c,
        "directional_min_C": {"forward": f_c, "backward": b_c},
        "directional_budget": directional_budget,
        "directional_holds": ok_directional,
    }
    ok_thin = True
    if subspace is not None:
        if D is None or subspace_profile is None:
            raise ConfigError("thinness route requires D and the in-subspace profile")
        ex, cx = (frac(subspace_profile[0]), frac(subspace_profile[1]))
        dd = frac(D)
        budget_c = 6 * ex * dd + 12 * dd + cx
        thin_f = check_thinness(
            combing, subspace, C=cx, D=dd, E=ex, direction="forward",
            plan=plan, core=core, dmax=dmax, core_radius=core_radius,
        )
        thin_b = check_thinness(
            combing, subspace, C=cx, D=dd, E=ex, direction="backward",
            plan=plan, core=core, dmax=dmax, core_radius=core_radius,
        )
        thin_conc = check_gcc(
            combing, E=ex + 2, C=budget_c, plan=plan, core=core, dmax=dmax,
            core_radius=core_radius, jobs=jobs,
        )
        ok_thin = thin_conc.certified
        extra["thinness"] = {
            "forward": thin_f.to_json_dict(),
            "backward": thin_b.to_json_dict(),
            "budget": {"E": ex + 2, "C": budget_c},
            "conclusion": thin_conc.to_json_dict(),
            "holds": ok_thin and thin_f.certified and thin_b.certified,
        }
        ok_thin = ok_thin and thin_f.certified and thin_b.certified

    verdict = "certified" if (ok_anchored and ok_directional and ok_thin) else "violated"
    return CertReport(
        property="sufficiency-cross-check",
        profile={"E": E},
        verdict=verdict,
        samples={"mode": mode, "n_tuples": tuples, "n_checks": checks, "n_skipped": skipped},
        seed=plan.seed,
        core_radius=_core_radius_json(core_radius),
        witness=None,
        extra=extra,
    )


# ---------------------------------------------------------------------------
# witness replay


def replay_witness(combing, witness, theta: ThetaTable | None = None):
    """Re-evaluate a violation witness against a combing.

    Returns a dict with the recomputed lhs (and bound when recomputable) plus
    `matches`, true when the stored values reproduce bit-exactly.
    """
    kernel = _Kernel(combing)
    prop = witness["property"]
    args = witness["args"]
    out = {"property": prop}
    if prop == "quasigeodesic":
        key = (args["x"], args["y"])
        t, s = frac(args["t"]), frac(args["s"])
        lhs = kernel.dist_f(kernel.point(key, t), kernel.point(key, s))
    elif prop == "gcc":
        lhs, _ = _eval_gcc(
            kernel, args["x1"], args["y1"], args["x2"], args["y2"],
            frac(args["a"]), frac(args["b"]), frac(args["c"]), Fraction(1), Fraction(0),
        )
    elif prop == "param-regularity":
        k1 = (args["x1"], args["y1"])
        k2 = (args["x2"], args["y2"])
        t, s = frac(args["t"]), frac(args["s"])
        d1 = kernel.vdist_f(*k1)
        d2 = kernel.vdist_f(*k2)
        lhs = abs(t * d1 - s * d2)
        if theta is not None:
            gap = kernel.dist_f(kernel.point(k1, t), kernel.point(k2, s))
            out["bound"] = theta(kernel.vdist_f(args["x1"], args["x2"]) + gap)
    elif prop == "consistency":
        key = (args["x"], args["y"])
        a, c = frac(args["a"]), frac(args["c"])
        z = kernel.path_vertex_at(key, a)
        lhs = kernel.dist_f(kernel.point((args["x"], z), c), kernel.point(key, c * a))
    elif prop == "forward-convexity":
        c = frac(args["c"])
        lhs = kernel.dist_f(
            kernel.point((args["v"], args["w1"]), c),
            kernel.point((args["v"], args["w2"]), c),
        )
    elif prop == "backward-convexity":
        c = frac(args["c"])
        lhs = kernel.dist_f(
            kernel.point((args["v1"], args["w"]), c),
            kernel.point((args["v2"], args["w"]), c),
        )
    elif prop == "bounded":
        t = frac(args["t"])
        lhs = kernel.dist_f(
            kernel.point((args["x1"], args["y1"]), t),
            kernel.point((args["x2"], args["y2"]), t),
        )
    else:
        raise ConfigError("cannot replay witness for property %r" % prop)
    out["lhs"] = lhs
    out["matches"] = frac_str(lhs) == witness.get("lhs")
    if "bound" in witness and "bound" not in out:
        out["violated"] = lhs > frac(witness["bound"])
    elif "bound" in out:
        out["violated"] = lhs > out["bound"]
    return out
