"""Nonlinearities F(x, s), their limits F_inf at spatial infinity, and
sampled checks of the growth/scaling/domination hypotheses A0-A6.

Arrays follow a component-first convention: ``s`` has shape ``(m, ...)``
and ``x`` has shape ``(N, ...)``. Every family here is radial in ``x``, so
the evaluation kernels take the radius ``r = |x|`` directly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

__all__ = [
    "NonlinearitySpec",
    "PaperExample",
    "CoupledPower",
    "PurePower",
    "spec_from_dict",
    "eval_F",
    "eval_dF",
    "eval_Finf",
    "eval_dFinf",
    "AssumptionConstants",
    "SamplingPlan",
    "AssumptionResult",
    "AssumptionReport",
    "default_constants",
    "check_assumptions",
]

KINDS = ("paper-example", "coupled-power", "power")


def _monomial(s: np.ndarray, exps) -> np.ndarray:
    """prod_i |s_i|^{e_i}."""
    out = np.ones(s.shape[1:])
    for si, e in zip(s, exps):
        out = out * np.abs(si) ** e
    return out


def _d_monomial(s: np.ndarray, exps) -> np.ndarray:
    """Gradient of prod_i |s_i|^{e_i}, odd in each s_i (needs every e_i >= 1)."""
    a = np.abs(s)
    grads = []
    for i, e in enumerate(exps):
        g = e * np.sign(s[i]) * a[i] ** (e - 1.0)
        for j, ej in enumerate(exps):
            if j != i:
                g = g * a[j] ** ej
        grads.append(g)
    return np.stack(grads)


class NonlinearitySpec:
    """Common interface. Subclasses implement the radial kernels."""

    kind: str
    m: int

    def F(self, r, s):
        raise NotImplementedError

    def dF(self, r, s):
        raise NotImplementedError

    def Finf(self, r, s):
        raise NotImplementedError

    def dFinf(self, r, s):
        raise NotImplementedError

    @property
    def degrees(self) -> list[float]:
        """Homogeneity degrees of the superquadratic monomials."""
        raise NotImplementedError

    @property
    def ell(self) -> float:
        """Growth exponent: F = O(|s|^{ell+2}) at large |s|."""
        d = self.degrees
        return max(d) - 2.0 if d else 0.0

    def is_subcritical(self, dim: int) -> bool:
        return self.ell < 4.0 / dim

    def is_critical(self, dim: int) -> bool:
        return math.isclose(self.ell, 4.0 / dim, rel_tol=1e-12)

    @property
    def has_strict_domination(self) -> bool:
        """True when F > F_inf on a set of positive measure."""
        return False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind
        return d


@dataclass(frozen=True)
class PaperExample(NonlinearitySpec):
    """F(r,s) = p(r)|s|^2 + q(r) sum_j prod_i |s_i|^{l_ij + 1}.

    ``profile="exp"``:   p = p0 e^{-r},        q = q_inf + q1 e^{-r}
    ``profile="power"``: p = p0 (1+r)^{-t},    q = q_inf + q1 (1+r)^{-t}
    """

    m: int = 2
    p0: float = 1.0
    q_inf: float = 1.0
    q1: float = 1.0
    terms: tuple = ((1.0, 1.0),)
    profile: str = "exp"
    decay: float = 1.0

    kind = "paper-example"

    def __post_init__(self):
        terms = tuple(tuple(float(x) for x in t) for t in self.terms)
        object.__setattr__(self, "terms", terms)
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.p0 < 0 or self.q1 < 0 or self.q_inf < 0:
            raise ValueError("profile coefficients p0, q_inf, q1 must be nonnegative")
        if self.profile not in ("exp", "power"):
            raise ValueError(f"unknown profile {self.profile!r}")
        if self.decay <= 0:
            raise ValueError("profile decay rate must be positive")
        for t in terms:
            if len(t) != self.m:
                raise ValueError(f"coupling term {t} needs {self.m} exponents")
            if any(x <= 0 for x in t):
                raise ValueError(f"coupling exponents must be positive, got {t}")

    def _decay(self, r):
        r = np.asarray(r, dtype=float)
        if self.profile == "exp":
            return np.exp(-self.decay * r)
        return (1.0 + r) ** (-self.decay)

    def p(self, r):
        return self.p0 * self._decay(r)

    def q(self, r):
        return self.q_inf + self.q1 * self._decay(r)

    @property
    def degrees(self):
        return [sum(e + 1.0 for e in t) for t in self.terms]

    def _coupling(self, s):
        out = np.zeros(s.shape[1:])
        for t in self.terms:
            out = out + _monomial(s, [e + 1.0 for e in t])
        return out

    def _d_coupling(self, s):
        out = np.zeros(s.shape)
        for t in self.terms:
            out = out + _d_monomial(s, [e + 1.0 for e in t])
        return out

    def F(self, r, s):
        s = np.asarray(s, dtype=float)
        return self.p(r) * np.sum(s**2, axis=0) + self.q(r) * self._coupling(s)

    def dF(self, r, s):
        s = np.asarray(s, dtype=float)
        return 2.0 * self.p(r) * s + self.q(r) * self._d_coupling(s)

    def Finf(self, r, s):
        s = np.asarray(s, dtype=float)
        return self.q_inf * self._coupling(s) + 0.0 * np.asarray(r, dtype=float)

    def dFinf(self, r, s):
        s = np.asarray(s, dtype=float)
        return self.q_inf * self._d_coupling(s) + 0.0 * np.asarray(r, dtype=float)

    @property
    def has_strict_domination(self):
        return self.p0 > 0 or (self.q1 > 0 and bool(self.terms))

    def to_dict(self):
        d = super().to_dict()
        d["terms"] = [list(t) for t in self.terms]
        return d


@dataclass(frozen=True)
class CoupledPower(NonlinearitySpec):
    """F(s) = (|s1|^{2p} + |s2|^{2p}) / (2p) + (beta/p) |s1|^p |s2|^p; F_inf = F."""

    p: float = 2.0
    beta: float = 0.0
    m: int = 2

    kind = "coupled-power"

    def __post_init__(self):
        if self.m != 2:
            raise ValueError("coupled-power is a two-component family")
        if self.p < 1:
            raise ValueError("coupled-power needs p >= 1")

    @property
    def degrees(self):
        return [2.0 * self.p]

    def F(self, r, s):
        s = np.asarray(s, dtype=float)
        a = np.abs(s)
        p = self.p
        return (a[0] ** (2 * p) + a[1] ** (2 * p)) / (2 * p) + (self.beta / p) * a[0] ** p * a[1] ** p

    def dF(self, r, s):
        s = np.asarray(s, dtype=float)
        p = self.p
        own = np.sign(s) * np.abs(s) ** (2 * p - 1)
        cross = self.beta * _d_monomial(s, [p, p]) / p
        return own + cross

    Finf = F
    dFinf = dF


@dataclass(frozen=True)
class PurePower(NonlinearitySpec):
    """F(s) = coef |s|^degree (x-independent); F_inf = F."""

    coef: float = 0.5
    degree: float = 4.0
    m: int = 1

    kind = "power"

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.degree < 2:
            raise ValueError("power degree must be >= 2")

    @property
    def degrees(self):
        return [float(self.degree)] if self.coef != 0 else []

    def F(self, r, s):
        s = np.asarray(s, dtype=float)
        rho = np.sqrt(np.sum(s**2, axis=0))
        return self.coef * rho**self.degree

    def dF(self, r, s):
        s = np.asarray(s, dtype=float)
        rho2 = np.sum(s**2, axis=0)
        return self.coef * self.degree * rho2 ** ((self.degree - 2.0) / 2.0) * s

    Finf = F
    dFinf = dF


def spec_from_dict(d: dict) -> NonlinearitySpec:
    d = dict(d)
    kind = d.pop("kind", None)
    classes = {"paper-example": PaperExample, "coupled-power": CoupledPower, "power": PurePower}
    if kind not in classes:
        raise ValueError(f"unknown nonlinearity kind {kind!r}; expected one of {KINDS}")
    cls = classes[kind]
    allowed = set(cls.__dataclass_fields__)
    unknown = set(d) - allowed
    if unknown:
        raise ValueError(f"unknown keys for {kind}: {sorted(unknown)}")
    if "terms" in d:
        d["terms"] = tuple(tuple(t) for t in d["terms"])
    return cls(**d)


# -- pointwise evaluation at x ------------------------------------------------


def _radius(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.sum(x**2, axis=0))


def eval_F(spec: NonlinearitySpec, x, s):
    return spec.F(_radius(x), s)


def eval_dF(spec: NonlinearitySpec, x, s):
    return spec.dF(_radius(x), s)


def eval_Finf(spec: NonlinearitySpec, x, s):
    return spec.Finf(_radius(x), s)


def eval_dFinf(spec: NonlinearitySpec, x, s):
    return spec.dFinf(_radius(x), s)


# -- assumption checking ------------------------------------------------------


@dataclass(frozen=True)
class AssumptionConstants:
    A: float
    B: float
    Delta: float
    S: float
    R: float
    t: float
    alphas: tuple
    A_prime: float
    B_prime: float
    beta: float
    ell: float
    sigma: float
    alpha: float  # A3 quotient exponent

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))

    def slacks(self, dim: int) -> dict[str, float]:
        """Side conditions on the constants; each must be > 0 (>= 0 where closed)."""
        alpha_sum = sum(self.alphas)
        return {
            "ell>0": self.ell,
            "4/N-ell": 4.0 / dim - self.ell,
            "beta>0": self.beta,
            "ell-beta": self.ell - self.beta,
            "t>=0": self.t,
            "2-t": 2.0 - self.t,
            "A1 exponent": dim * (1.0 - alpha_sum / 2.0) + 2.0 - self.t,
            "sigma>=0": self.sigma,
            "4/N-sigma": 4.0 / dim - self.sigma,
            "alpha>0": self.alpha,
            "4/N-alpha": 4.0 / dim - self.alpha,
        }

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alphas"] = list(self.alphas)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> AssumptionConstants:
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown constants: {sorted(unknown)}")
        missing = set(cls.__dataclass_fields__) - set(d)
        if missing:
            raise ValueError(f"missing constants: {sorted(missing)}")
        return cls(**d)


@dataclass(frozen=True)
class SamplingPlan:
    dim: int = 1
    samples: int = 100_000
    r_max: float = 32.0
    s_max: float = 8.0
    thetas: tuple = (1.0, 2.0, 4.0, 8.0)
    a3_tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError("plan dim must be 1, 2 or 3")
        if self.samples < 1:
            raise ValueError("plan needs at least one sample")
        if not (self.r_max > 0 and self.s_max > 0):
            raise ValueError("plan ranges r_max and s_max must be positive")
        if any(th < 1 for th in self.thetas):
            raise ValueError("scaling factors theta must be >= 1")


@dataclass
class AssumptionResult:
    name: str
    margin: float
    holds: bool
    witness: dict | None = None
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AssumptionReport:
    results: dict[str, AssumptionResult]

    @property
    def all_hold(self) -> bool:
        return all(r.holds for r in self.results.values())

    def __getitem__(self, name: str) -> AssumptionResult:
        return self.results[name]

    def to_dict(self) -> dict:
        return {
            "all_hold": self.all_hold,
            "assumptions": {k: v.to_dict() for k, v in self.results.items()},
        }


def default_constants(spec: NonlinearitySpec, dim: int = 1) -> AssumptionConstants:
    """Candidate constants for the built-in families (to be verified by sampling)."""
    ell = spec.ell
    degs = spec.degrees or [2.0 + min(1.0, 2.0 / dim)]
    dmin = min(degs)
    beta = 0.5 * (dmin - 2.0) if dmin > 2 else 0.5 * ell
    if isinstance(spec, PaperExample):
        k = max(len(spec.terms), 1)
        qmax = spec.q_inf + spec.q1
        if spec.terms:
            t_min = min(spec.terms, key=lambda t: sum(t))
            alphas = tuple(e + 1.0 for e in t_min)
        else:
            alphas = (2.0 / spec.m,) * spec.m
        return AssumptionConstants(
            A=spec.p0 + spec.q_inf + spec.q1 + 1.0,
            B=2.0 * spec.p0 + max(degs) * k * qmax + 1.0,
            Delta=0.5 * spec.q_inf,
            S=1.0,
            R=1.0,
            t=0.0,
            alphas=alphas,
            A_prime=spec.q_inf * k + 1.0,
            B_prime=max(degs) * spec.q_inf * k + 1.0,
            beta=beta,
            ell=ell,
            sigma=dmin - 2.0,
            alpha=ell,
        )
    if isinstance(spec, CoupledPower):
        p = spec.p
        big = (1.0 + abs(spec.beta)) / p
        return AssumptionConstants(
            A=big + 1.0,
            B=2.0 * p * big + 1.0,
            Delta=max((1.0 + spec.beta) / (2.0 * p), 1e-3),
            S=1.0,
            R=1.0,
            t=0.0,
            alphas=(p, p),
            A_prime=big + 1.0,
            B_prime=2.0 * p * big + 1.0,
            beta=beta,
            ell=ell,
            sigma=2.0 * p - 2.0,
            alpha=ell,
        )
    if isinstance(spec, PurePower):
        d = spec.degree
        return AssumptionConstants(
            A=spec.coef,
            B=spec.coef * d,
            Delta=0.5 * spec.coef,
            S=1.0,
            R=1.0,
            t=0.0,
            alphas=(d / spec.m,) * spec.m,
            A_prime=spec.coef,
            B_prime=spec.coef * d,
            beta=beta,
            ell=ell,
            sigma=ell,
            alpha=ell,
        )
    raise TypeError(f"no default constants for {type(spec).__name__}")


def _snap(slack: np.ndarray, scale: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Round slacks within floating-point noise of zero to exactly zero."""
    return np.where(np.abs(slack) <= rtol * (1.0 + np.abs(scale)), 0.0, slack)


def _witness(idx, r, s, **extra) -> dict:
    w = {"r": float(r[idx]), "s": [float(v) for v in s[:, idx]]}
    w.update({k: float(v) for k, v in extra.items()})
    return w


def _min_result(name, slack, r, s, extra=None, **detail) -> AssumptionResult:
    i = int(np.argmin(slack))
    margin = float(slack[i])
    return AssumptionResult(
        name=name,
        margin=margin,
        holds=margin >= 0,
        witness=_witness(i, r, s, **(extra or {})),
        detail=detail,
    )


def _sample(spec: NonlinearitySpec, plan: SamplingPlan, rng, r_lo=0.0, r_hi=None, s_hi=None):
    n = plan.samples
    r_hi = plan.r_max if r_hi is None else r_hi
    s_hi = plan.s_max if s_hi is None else s_hi
    r = rng.uniform(r_lo, r_hi, n)
    direction = rng.standard_normal((spec.m, n))
    direction /= np.linalg.norm(direction, axis=0)
    mag = np.empty(n)
    half = n // 2
    mag[:half] = rng.uniform(0.0, s_hi, half)
    mag[half:] = s_hi * 10.0 ** rng.uniform(-4.0, 0.0, n - half)
    return r, direction * mag


def check_assumptions(
    spec: NonlinearitySpec, constants: AssumptionConstants, plan: SamplingPlan | None = None
) -> AssumptionReport:
    """Worst sampled slack for each hypothesis. Negative margin = violated at the witness."""
    plan = plan or SamplingPlan()
    rng = np.random.default_rng(plan.seed)
    k = constants
    res: dict[str, AssumptionResult] = {}

    slacks = k.slacks(plan.dim)
    worst = min(slacks, key=slacks.get)
    res["constants"] = AssumptionResult(
        name="constants",
        margin=float(slacks[worst]),
        holds=all(v > 0 for n, v in slacks.items() if n not in ("t>=0", "sigma>=0"))
        and slacks["t>=0"] >= 0
        and slacks["sigma>=0"] >= 0,
        witness={"condition": worst},
        detail={n: float(v) for n, v in slacks.items()},
    )

    r, s = _sample(spec, plan, rng)
    rho = np.sqrt(np.sum(s**2, axis=0))
    F = spec.F(r, s)
    dF = np.abs(spec.dF(r, s))
    Fi = spec.Finf(r, s)
    dFi = np.abs(spec.dFinf(r, s))

    # A0
    upper = k.A * (rho**2 + rho ** (k.ell + 2.0))
    dbound = k.B * (rho + rho ** (k.ell + 1.0))
    a0 = np.minimum.reduce([_snap(F, F), _snap(upper - F, F), _snap(dbound - dF.max(axis=0), dF.max(axis=0))])
    res["A0"] = _min_result(
        "A0", a0, r, s, lower=float(F.min()), upper=float((upper - F).min()), derivative=float((dbound - dF.max(axis=0)).min())
    )

    # A1 on |x| >= R, |s| < S, for F and for F_inf
    r1, s1 = _sample(spec, plan, rng, r_lo=k.R, r_hi=max(plan.r_max, k.R + 1.0), s_hi=k.S)
    mono = k.Delta * r1 ** (-k.t) * _monomial(s1, k.alphas)
    F1 = spec.F(r1, s1)
    Fi1 = spec.Finf(r1, s1)
    res["A1"] = _min_result("A1", F1 - mono, r1, s1)
    res["A1_inf"] = _min_result("A1_inf", Fi1 - mono, r1, s1)

    # A2 / A5 scaling
    a2 = []
    a5 = []
    for th in plan.thetas:
        Fth = spec.F(r, th * s)
        Fith = spec.Finf(r, th * s)
        a2.append(_snap(Fth - th**2 * F, Fth))
        a5.append(_snap(Fith - th ** (k.sigma + 2.0) * Fi, Fith))
    a2 = np.stack(a2)
    a5 = np.stack(a5)
    for name, arr in (("A2", a2), ("A5", a5)):
        j, i = np.unravel_index(int(np.argmin(arr)), arr.shape)
        margin = float(arr[j, i])
        res[name] = AssumptionResult(
            name=name, margin=margin, holds=margin >= 0, witness=_witness(i, r, s, theta=plan.thetas[j])
        )

    # A3 quotient at the far radius
    r_far = np.full_like(r, plan.r_max)
    quotient = np.abs(spec.F(r_far, s) - spec.Finf(r_far, s)) / np.maximum(
        rho**2 + rho ** (k.alpha + 2.0), np.finfo(float).tiny
    )
    i = int(np.argmax(quotient))
    res["A3"] = AssumptionResult(
        name="A3",
        margin=float(plan.a3_tol - quotient[i]),
        holds=bool(quotient[i] <= plan.a3_tol),
        witness=_witness(i, r_far, s),
        detail={"max_quotient": float(quotient[i]), "r": plan.r_max, "tolerance": plan.a3_tol},
    )

    # A4
    upper_i = k.A_prime * (rho ** (k.beta + 2.0) + rho ** (k.ell + 2.0))
    dbound_i = k.B_prime * (rho ** (k.beta + 1.0) + rho ** (k.ell + 1.0))
    a4 = np.minimum.reduce([_snap(Fi, Fi), _snap(upper_i - Fi, Fi), _snap(dbound_i - dFi.max(axis=0), dFi.max(axis=0))])
    res["A4"] = _min_result("A4", a4, r, s)

    # A6 domination with a strict region
    diff = _snap(F - Fi, F)
    strict = float(np.mean(diff > 0))
    i = int(np.argmin(diff))
    margin = float(diff[i])
    res["A6"] = AssumptionResult(
        name="A6",
        margin=margin,
        holds=margin >= 0 and strict > 0,
        witness=_witness(i, r, s),
        detail={"strict_fraction": strict},
    )
    return AssumptionReport(res)
