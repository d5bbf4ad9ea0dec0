"""Closed-form holomorphic functions on a neighbourhood of a polygon.

A :class:`HoloFn` is an immutable expression DAG.  The leaves are
:class:`Rational` (a polynomial plus principal parts at exterior poles) and
:class:`ArnoldiPoly` (a polynomial stored through its Arnoldi recurrence,
which stays well conditioned at high degree).  Inner nodes are ``Exp``,
linear combinations, products and quotients by zero-free functions.
Shared sub-expressions are evaluated once per call through a memo table,
which keeps long deformation chains linear in their length.
"""

from __future__ import annotations

import json
from functools import reduce

import numpy as np

from .errors import DivisorMayVanish, OutsideDomain, QuadratureNonConvergent

GL_ORDER = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


class HoloFn:
    """Base class; subclasses implement ``_ev`` and ``_deriv``."""

    __slots__ = ()

    # -- evaluation -------------------------------------------------------
    def __call__(self, z):
        return evaluate([self], z)[0]

    def eval(self, z, domain=None, tol=1e-12):
        z = np.asarray(z, dtype=complex)
        if domain is not None and not np.all(domain.contains(z, closed=True, tol=tol)):
            raise OutsideDomain("evaluation point outside the working domain")
        return self(z)

    # -- algebra ----------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return lincomb([-1.0], [self])

    def __sub__(self, other):
        return add(self, -as_holo(other))

    def __rsub__(self, other):
        return add(as_holo(other), -self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def derivative(self):
        return derivative(self)

    # -- structure --------------------------------------------------------
    def children(self):
        return ()

    @property
    def is_zero(self):
        return False

    @property
    def zero_free(self):
        """True when zero-freeness holds by construction."""
        return False

    def exterior_poles(self):
        """All pole locations appearing anywhere in the expression."""
        out = []
        for node in _walk(self):
            if isinstance(node, Rational):
                out.extend(a for a, _ in node.poles)
        return np.asarray(out, dtype=complex)

    def to_json(self):
        return json.dumps(to_dict(self))


def _walk(root):
    seen = set()
    stack = [root]
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        yield n
        stack.extend(n.children())


# ---------------------------------------------------------------------------
# leaves
# ---------------------------------------------------------------------------

class Rational(HoloFn):
    """``sum_k poly[k] z^k + sum_j sum_m c_jm (z - a_j)^-(m+1)``."""

    __slots__ = ("poly", "poles")

    def __init__(self, poly=(0.0,), poles=()):
        p = np.atleast_1d(np.asarray(poly, dtype=complex))
        nz = np.nonzero(p)[0]
        p = p[: nz[-1] + 1] if nz.size else np.zeros(1, dtype=complex)
        self.poly = p
        self.poles = tuple((complex(a), np.atleast_1d(np.asarray(c, dtype=complex))) for a, c in poles)

    @property
    def is_zero(self):
        return not np.any(self.poly) and all(not np.any(c) for _, c in self.poles)

    @property
    def is_constant(self):
        return len(self.poly) == 1 and not self.poles

    @property
    def is_polynomial(self):
        return not self.poles

    def _ev(self, z, memo):
        out = np.zeros(z.shape, dtype=complex)
        for c in self.poly[::-1]:
            out = out * z + c
        for a, cs in self.poles:
            u = 1.0 / (z - a)
            acc = np.zeros(z.shape, dtype=complex)
            for c in cs[::-1]:
                acc = (acc + c) * u
            out = out + acc
        return out

    def _deriv(self, dmemo):
        dp = self.poly[1:] * np.arange(1, len(self.poly)) if len(self.poly) > 1 else [0.0]
        poles = []
        for a, cs in self.poles:
            m = np.arange(1, len(cs) + 1)
            poles.append((a, np.concatenate([[0.0], -m * cs])))
        return Rational(dp, poles)


def const(c):
    return Rational([c])


ZERO = Rational([0.0])
ONE = Rational([1.0])
Z = Rational([0.0, 1.0])


def poly(coeffs):
    return Rational(coeffs)


def pole(a, coeffs=(1.0,)):
    return Rational([0.0], [(a, coeffs)])


class ArnoldiPoly(HoloFn):
    """Polynomial in ``u = (z - center) / scale`` defined by an Arnoldi recurrence.

    ``q_0 = 1`` and ``H[k+1, k] q_{k+1} = u q_k - sum_{j<=k} H[j, k] q_j``;
    the value is ``sum_k coef[k] q_k``.  ``order`` selects a derivative in ``z``.
    """

    __slots__ = ("H", "coef", "center", "scale", "order")

    def __init__(self, H, coef, center=0.0, scale=1.0, order=0):
        self.H = np.asarray(H, dtype=complex)
        self.coef = np.asarray(coef, dtype=complex)
        self.center = complex(center)
        self.scale = float(scale)
        self.order = int(order)

    @property
    def degree(self):
        return len(self.coef) - 1

    @classmethod
    def fit_basis(cls, sample, degree, center, scale):
        """Run Arnoldi on the sample points; return (H, Q) with Q[:, k] = q_k(sample)."""
        u = (np.asarray(sample, dtype=complex) - center) / scale
        m = len(u)
        Q = np.zeros((m, degree + 1), dtype=complex)
        H = np.zeros((degree + 1, degree), dtype=complex)
        Q[:, 0] = 1.0
        for k in range(degree):
            q = u * Q[:, k]
            for _ in range(2):  # re-orthogonalise once
                c = Q[:, : k + 1].conj().T @ q / m
                q = q - Q[:, : k + 1] @ c
                H[: k + 1, k] += c
            H[k + 1, k] = np.linalg.norm(q) / np.sqrt(m)
            Q[:, k + 1] = q / H[k + 1, k]
        return H, Q

    def basis_values(self, z, order=None):
        order = self.order if order is None else order
        u = (np.asarray(z, dtype=complex) - self.center) / self.scale
        n = len(self.coef)
        # D[r][k] = r-th u-derivative of q_k
        prev = None
        levels = []
        for r in range(order + 1):
            D = np.zeros((n,) + u.shape, dtype=complex)
            D[0] = 1.0 if r == 0 else 0.0
            for k in range(n - 1):
                acc = u * D[k]
                if r > 0:
                    acc = acc + r * prev[k]
                acc = acc - np.tensordot(self.H[: k + 1, k], D[: k + 1], axes=1)
                D[k + 1] = acc / self.H[k + 1, k]
            levels.append(D)
            prev = D
        return levels[order] / self.scale ** order

    def _ev(self, z, memo):
        return np.tensordot(self.coef, self.basis_values(z), axes=1)

    def _deriv(self, dmemo):
        return ArnoldiPoly(self.H, self.coef, self.center, self.scale, self.order + 1)


# ---------------------------------------------------------------------------
# inner nodes
# ---------------------------------------------------------------------------

class Exp(HoloFn):
    __slots__ = ("arg",)

    def __init__(self, arg):
        self.arg = arg

    def children(self):
        return (self.arg,)

    @property
    def zero_free(self):
        return True

    def _ev(self, z, memo):
        return np.exp(_ev(self.arg, z, memo))

    def _deriv(self, dmemo):
        return mul(_d(self.arg, dmemo), self)


class LinComb(HoloFn):
    __slots__ = ("coeffs", "terms")

    def __init__(self, coeffs, terms):
        self.coeffs = tuple(complex(c) for c in coeffs)
        self.terms = tuple(terms)

    def children(self):
        return self.terms

    def _ev(self, z, memo):
        out = np.zeros(z.shape, dtype=complex)
        for c, t in zip(self.coeffs, self.terms):
            out = out + c * _ev(t, z, memo)
        return out

    def _deriv(self, dmemo):
        return lincomb(self.coeffs, [_d(t, dmemo) for t in self.terms])


class Prod(HoloFn):
    __slots__ = ("factors",)

    def __init__(self, factors):
        self.factors = tuple(factors)

    def children(self):
        return self.factors

    @property
    def zero_free(self):
        return all(f.zero_free for f in self.factors)

    def _ev(self, z, memo):
        out = np.ones(z.shape, dtype=complex)
        for f in self.factors:
            out = out * _ev(f, z, memo)
        return out

    def _deriv(self, dmemo):
        terms = []
        for i, f in enumerate(self.factors):
            df = _d(f, dmemo)
            if df.is_zero:
                continue
            terms.append(mul(*(self.factors[:i] + (df,) + self.factors[i + 1:])))
        return lincomb([1.0] * len(terms), terms)


class Quot(HoloFn):
    """``num / den`` where ``den`` is zero-free on the working domain."""

    __slots__ = ("num", "den")

    def __init__(self, num, den):
        self.num = num
        self.den = den

    def children(self):
        return (self.num, self.den)

    @property
    def zero_free(self):
        return self.num.zero_free

    def _ev(self, z, memo):
        return _ev(self.num, z, memo) / _ev(self.den, z, memo)

    def _deriv(self, dmemo):
        dn = _d(self.num, dmemo)
        dd = _d(self.den, dmemo)
        top = lincomb([1.0, -1.0], [mul(dn, self.den), mul(self.num, dd)])
        return Quot(top, mul(self.den, self.den))


# ---------------------------------------------------------------------------
# smart constructors
# ---------------------------------------------------------------------------

def as_holo(x):
    if isinstance(x, HoloFn):
        return x
    return const(x)


def lincomb(coeffs, terms):
    cs, ts = [], []
    rat_poly = np.zeros(1, dtype=complex)
    rat_poles = []
    for c, t in zip(coeffs, terms):
        t = as_holo(t)
        if c == 0 or t.is_zero:
            continue
        if isinstance(t, LinComb):
            for c2, t2 in zip(t.coeffs, t.terms):
                cs.append(c * c2)
                ts.append(t2)
            continue
        if isinstance(t, Rational):
            p = c * t.poly
            if len(p) > len(rat_poly):
                rat_poly = np.concatenate([rat_poly, np.zeros(len(p) - len(rat_poly), complex)])
            rat_poly[: len(p)] += p
            rat_poles.extend((a, c * k) for a, k in t.poles)
            continue
        cs.append(c)
        ts.append(t)
    rat = Rational(rat_poly, rat_poles)
    if not rat.is_zero:
        cs.append(1.0)
        ts.append(rat)
    if not ts:
        return ZERO
    if len(ts) == 1 and cs[0] == 1.0:
        return ts[0]
    return LinComb(cs, ts)


def add(*fns):
    return lincomb([1.0] * len(fns), [as_holo(f) for f in fns])


def mul(*fns):
    fns = [as_holo(f) for f in fns]
    factors = []
    scalar = 1.0 + 0j
    polyacc = None
    exps = []
    for f in fns:
        if f.is_zero:
            return ZERO
        if isinstance(f, Prod):
            fns_inner = f.factors
        else:
            fns_inner = (f,)
        for g in fns_inner:
            if isinstance(g, Rational) and g.is_constant:
                scalar *= g.poly[0]
            elif isinstance(g, Rational) and g.is_polynomial:
                polyacc = g.poly if polyacc is None else np.polynomial.polynomial.polymul(polyacc, g.poly)
            elif isinstance(g, Exp):
                exps.append(g.arg)
            else:
                factors.append(g)
    if exps:
        arg = add(*exps)
        if not arg.is_zero:
            factors.append(Exp(arg))
    if polyacc is not None:
        factors.insert(0, Rational(polyacc))
    if not factors:
        return const(scalar)
    if len(factors) == 1:
        return lincomb([scalar], factors) if scalar != 1 else factors[0]
    p = Prod(factors)
    return p if scalar == 1 else LinComb([scalar], [p])


def exp(f):
    f = as_holo(f)
    if f.is_zero:
        return ONE
    if isinstance(f, Rational) and f.is_constant:
        return const(np.exp(f.poly[0]))
    return Exp(f)


def div_zero_free(f, g, domain=None, resolution=256, threshold=1e-8):
    """``f / g`` for a divisor certified zero-free on ``domain``.

    Exp-wrapped divisors are zero-free by construction.  Anything else must
    pass :func:`certify_zero_free` on ``domain``.
    """
    f, g = as_holo(f), as_holo(g)
    if isinstance(g, Exp):
        return mul(f, exp(-g.arg))
    if isinstance(g, Rational) and g.is_constant:
        if g.poly[0] == 0:
            raise DivisorMayVanish("division by the zero constant")
        return mul(f, const(1.0 / g.poly[0]))
    if not g.zero_free:
        if domain is None:
            raise DivisorMayVanish("divisor is not zero-free by construction and no domain was given")
        ok, info = certify_zero_free(g, domain, resolution, threshold)
        if not ok:
            raise DivisorMayVanish(f"divisor may vanish on the domain: {info}")
    return Quot(f, g)


def algebra(f, g, op, domain=None):
    if op == "add":
        return add(f, g)
    if op == "mul":
        return mul(f, g)
    if op == "div_zero_free":
        return div_zero_free(f, g, domain)
    if op == "exp":
        return exp(f)
    raise ValueError(f"unknown op {op!r}")


# ---------------------------------------------------------------------------
# evaluation / differentiation drivers
# ---------------------------------------------------------------------------

def _ev(node, z, memo):
    key = id(node)
    v = memo.get(key)
    if v is None:
        v = node._ev(z, memo)
        memo[key] = v
    return v


def evaluate(fns, z):
    """Evaluate several functions at ``z`` sharing common sub-expressions."""
    z = np.asarray(z, dtype=complex)
    memo = {}
    return [_ev(f, z, memo) for f in fns]


def _d(node, dmemo):
    key = id(node)
    out = dmemo.get(key)
    if out is None:
        out = node._deriv(dmemo)
        dmemo[key] = (out, node)  # keep node alive so ids stay unique
        return out
    return out[0]


def derivative(f, dmemo=None):
    return _d(as_holo(f), {} if dmemo is None else dmemo)


def derivatives(fns):
    dmemo = {}
    return [derivative(f, dmemo) for f in fns]


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def _gl_segment(fns, a, b):
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    zs = mid + half * _GL_X
    vals = np.array(evaluate(fns, zs))
    return vals @ _GL_W * half, np.max(np.abs(vals))


class Polyline:
    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=complex).ravel()
        if len(v) < 2:
            raise ValueError("a polyline needs at least 2 vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("polyline vertices must be finite")
        self.vertices = v

    @property
    def length(self):
        return float(np.sum(np.abs(np.diff(self.vertices))))

    def segments(self):
        return zip(self.vertices[:-1], self.vertices[1:])


def path_integral(fns, path, tol=1e-12, max_depth=20):
    """Integrate ``F(z) dz`` along a polyline with adaptive Gauss-Legendre.

    ``fns`` may be a single function or a sequence (integrated jointly).
    Each segment is bisected until the integral over it and over its two
    halves agree to ``tol`` relative.
    """
    single = isinstance(fns, HoloFn)
    fns = [fns] if single else list(fns)
    path = path if isinstance(path, Polyline) else Polyline(path)
    total = np.zeros(len(fns), dtype=complex)
    for a, b in path.segments():
        if a == b:
            continue
        whole, _ = _gl_segment(fns, a, b)
        stack = [(a, b, 0, whole)]
        while stack:
            lo, hi, depth, est = stack.pop()
            mid = 0.5 * (lo + hi)
            left, ml = _gl_segment(fns, lo, mid)
            right, mr = _gl_segment(fns, mid, hi)
            refined = left + right
            err = np.max(np.abs(refined - est))
            scale = max(np.max(np.abs(refined)), 1e-3 * abs(hi - lo) * max(ml, mr))
            if err <= tol * scale or err <= 1e-300:
                total += refined
            elif depth >= max_depth:
                raise QuadratureNonConvergent(f"no convergence after {max_depth} bisections")
            else:
                stack.append((mid, hi, depth + 1, right))
                stack.append((lo, mid, depth + 1, left))
    return total[0] if single else total


def ray_integrals(fns, zs, base=0.0, panels=4, order=GL_ORDER, chunk=2048):
    """``int_base^z F(u) du`` along straight rays for many endpoints at once.

    Composite Gauss-Legendre with ``panels`` equal panels of ``order`` nodes;
    meant for bulk sampling inside convex domains.
    """
    single = isinstance(fns, HoloFn)
    fns = [fns] if single else list(fns)
    zs = np.asarray(zs, dtype=complex)
    flat = zs.ravel()
    x, w = np.polynomial.legendre.leggauss(order)
    t = ((np.arange(panels)[:, None] + 0.5 * (x[None, :] + 1)) / panels).ravel()
    wt = np.tile(0.5 * w / panels, panels)
    out = np.zeros((len(fns), flat.size), dtype=complex)
    for s in range(0, flat.size, chunk):
        zc = flat[s:s + chunk]
        d = zc - base
        pts = base + d[:, None] * t[None, :]
        vals = evaluate(fns, pts)
        for k, v in enumerate(vals):
            out[k, s:s + chunk] = (v @ wt) * d
    out = out.reshape((len(fns),) + zs.shape)
    return out[0] if single else out


# ---------------------------------------------------------------------------
# zero-freeness and zeros
# ---------------------------------------------------------------------------

def grid_points(domain, resolution):
    """Closed-domain sample: a ``resolution``^2 lattice over the bbox plus the boundary."""
    x0, x1, y0, y1 = domain.bbox()
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    zz = (xs[None, :] + 1j * ys[:, None]).ravel()
    zz = zz[domain.contains(zz, closed=True)]
    edge = domain.sample_boundary(max(x1 - x0, y1 - y0) / resolution)
    return np.concatenate([zz, edge])


def winding_along_boundary(f, domain, base_samples=4096, max_refine=12):
    """Winding number of ``f`` along the boundary of ``domain`` (argument principle)."""
    ring = domain.sample_boundary(domain.perimeter / base_samples)
    ring = np.append(ring, ring[0])
    vals = f(ring)
    for _ in range(max_refine):
        steps = np.angle(vals[1:] / vals[:-1])
        bad = np.abs(steps) > np.pi / 8
        if not np.any(bad):
            break
        mids = 0.5 * (ring[:-1][bad] + ring[1:][bad])
        idx = np.nonzero(bad)[0] + 1
        ring = np.insert(ring, idx, mids)
        vals = np.insert(vals, idx, f(mids))
    steps = np.angle(vals[1:] / vals[:-1])
    return int(np.rint(np.sum(steps) / (2 * np.pi)))


def certify_zero_free(g, domain, resolution=256, threshold=1e-8):
    """Sampled minimum modulus plus argument-principle zero count on ``domain``."""
    g = as_holo(g)
    if g.zero_free:
        return True, {"structural": True}
    pts = grid_points(domain, resolution)
    vals = g(pts)
    min_mod = float(np.min(np.abs(vals)))
    info = {"min_modulus": min_mod}
    if not np.isfinite(min_mod) or min_mod <= threshold:
        return False, info
    poles_inside = [a for a in g.exterior_poles() if domain.contains(a, closed=True)]
    if poles_inside:
        info["poles_inside"] = len(poles_inside)
        return False, info
    wn = winding_along_boundary(g, domain)
    info["zero_count"] = wn
    return wn == 0, info


def check_pole_margin(f, domain, margin=None):
    """All poles at distance > margin from the closed domain (default 5% of its diameter)."""
    margin = 0.05 * domain.diameter if margin is None else margin
    poles = as_holo(f).exterior_poles()
    if poles.size == 0:
        return True
    outside = ~domain.contains(poles, closed=True)
    return bool(np.all(outside & (domain.boundary_distance(poles) > margin)))


class MeroFn:
    """Quotient of two holomorphic closed forms; poles are zeros of the denominator."""

    def __init__(self, numerator, denominator=ONE):
        self.numerator = as_holo(numerator)
        self.denominator = as_holo(denominator)
        if self.denominator.is_zero:
            raise ValueError("denominator is identically zero")

    @classmethod
    def lift(cls, g):
        return g if isinstance(g, MeroFn) else cls(as_holo(g), ONE)

    def __call__(self, z):
        n, d = evaluate([self.numerator, self.denominator], z)
        with np.errstate(divide="ignore", invalid="ignore"):
            return n / d

    @property
    def is_holomorphic(self):
        den = self.denominator
        return den.zero_free or (isinstance(den, Rational) and den.is_constant)

    def poles(self, domain, resolution=128, newton_steps=30):
        """Zeros of the denominator inside ``domain`` (count from the argument principle)."""
        den = self.denominator
        if self.is_holomorphic:
            return np.zeros(0, dtype=complex)
        count = winding_along_boundary(den, domain)
        if count <= 0:
            return np.zeros(0, dtype=complex)
        dd = derivative(den)
        pts = grid_points(domain, resolution)
        order = np.argsort(np.abs(den(pts)))
        found = []
        for z in pts[order]:
            if len(found) >= count:
                break
            for _ in range(newton_steps):
                step = den(z) / dd(z)
                z = z - step
                if abs(step) < 1e-15:
                    break
            if domain.contains(z) and all(abs(z - f) > 1e-8 for f in found):
                found.append(complex(z))
        return np.asarray(found, dtype=complex)

    def to_dict(self):
        return {"numerator": to_dict(self.numerator), "denominator": to_dict(self.denominator)}


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------

def _cplx(c):
    return [float(np.real(c)), float(np.imag(c))]


def _uncplx(x):
    return complex(x[0], x[1])


def to_dict(f):
    """JSON-ready node table; shared sub-expressions are stored once."""
    index = {}
    nodes = []

    def visit(n):
        key = id(n)
        if key in index:
            return index[key]
        if isinstance(n, Rational):
            rec = {"type": "rational", "poly": [_cplx(c) for c in n.poly],
                   "poles": [{"at": _cplx(a), "coeffs": [_cplx(c) for c in cs]} for a, cs in n.poles]}
        elif isinstance(n, ArnoldiPoly):
            rec = {"type": "arnoldi", "H": [[_cplx(c) for c in row] for row in n.H],
                   "coef": [_cplx(c) for c in n.coef], "center": _cplx(n.center),
                   "scale": n.scale, "order": n.order}
        elif isinstance(n, Exp):
            rec = {"type": "exp", "arg": visit(n.arg)}
        elif isinstance(n, LinComb):
            rec = {"type": "lincomb", "coeffs": [_cplx(c) for c in n.coeffs],
                   "terms": [visit(t) for t in n.terms]}
        elif isinstance(n, Prod):
            rec = {"type": "prod", "factors": [visit(t) for t in n.factors]}
        elif isinstance(n, Quot):
            rec = {"type": "quot", "num": visit(n.num), "den": visit(n.den)}
        else:
            raise TypeError(type(n))
        index[key] = len(nodes)
        nodes.append(rec)
        return index[key]

    root = visit(f)
    return {"format": "maxdisk.holo/1", "root": root, "nodes": nodes}


def from_dict(d):
    built = []
    for rec in d["nodes"]:
        t = rec["type"]
        if t == "rational":
            n = Rational([_uncplx(c) for c in rec["poly"]],
                         [(_uncplx(p["at"]), [_uncplx(c) for c in p["coeffs"]]) for p in rec["poles"]])
        elif t == "arnoldi":
            n = ArnoldiPoly([[_uncplx(c) for c in row] for row in rec["H"]],
                            [_uncplx(c) for c in rec["coef"]], _uncplx(rec["center"]),
                            rec["scale"], rec["order"])
        elif t == "exp":
            n = Exp(built[rec["arg"]])
        elif t == "lincomb":
            n = LinComb([_uncplx(c) for c in rec["coeffs"]], [built[k] for k in rec["terms"]])
        elif t == "prod":
            n = Prod([built[k] for k in rec["factors"]])
        elif t == "quot":
            n = Quot(built[rec["num"]], built[rec["den"]])
        else:
            raise ValueError(f"unknown node type {t!r}")
        built.append(n)
    return built[d["root"]]


def from_json(s):
    return from_dict(json.loads(s))


def node_count(f):
    return sum(1 for _ in _walk(f))


def product(fns):
    return reduce(mul, fns, ONE)
