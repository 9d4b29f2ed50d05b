"""Symbol models: quasi-radial factors a(r_1..r_m) and generalized
pseudo-homogeneous factors c_j(s_(j), t_(j)).

A pseudo-homogeneous symbol is a bounded function of the group sphere
coordinate s in S_+^{k-1} and the torus coordinate t in T^k, invariant
under the diagonal torus action t -> (g t_1, ..., g t_k).  Its Fourier
modes in t are therefore supported on |p| = 0, and a symbol may declare
that support analytically, which unlocks closed-form operator entries.

User-defined profiles come in through a deliberately tiny expression
grammar (constants, + - * / ^, exp, conj, variables r1.., s1.., t1..);
no control flow, no user functions.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import SymbolError, SymbolParseError
from .quad import fourier_on_points

Index = tuple[int, ...]


# ---------------------------------------------------------------------------
# Expression grammar
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[()+\-*/^,]))"
)

_FUNCTIONS = {"exp": np.exp, "conj": np.conj}
_CONSTANTS = {"pi": np.pi, "i": 1j}
_VAR_RE = re.compile(r"^[rst][1-9][0-9]*$")


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[tuple[str, str, int]] = []
        while self.pos < len(text):
            m = _TOKEN_RE.match(text, self.pos)
            if m is None or m.end() == self.pos:
                stripped = text[self.pos :].lstrip()
                if not stripped:
                    break
                at = len(text) - len(stripped)
                raise SymbolParseError(f"unexpected character {text[at]!r}", at)
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            self.pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.idx = 0

    def peek(self):
        return self.tokens[self.idx]

    def next(self):
        tok = self.tokens[self.idx]
        self.idx += 1
        return tok


# AST nodes are plain tuples: ("num", v) | ("var", name) | ("neg", node)
# | ("call", fname, node) | (op, left, right) with op in "+-*/^".


class _Parser:
    """Recursive descent over: expr -> term (+/- term)*, term -> factor
    (*// factor)*, factor -> unary (^ factor)?, unary -> [+-] unary | atom."""

    def __init__(self, text: str):
        self.toks = _Tokenizer(text)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.toks.peek()
        if kind != "end":
            raise SymbolParseError(f"unexpected trailing input {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, val, _ = self.toks.peek()
            if kind == "op" and val in "+-":
                self.toks.next()
                node = (val, node, self.term())
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, val, _ = self.toks.peek()
            if kind == "op" and val in "*/":
                self.toks.next()
                node = (val, node, self.factor())
            else:
                return node

    def factor(self):
        node = self.unary()
        kind, val, _ = self.toks.peek()
        if kind == "op" and val in ("^", "**"):
            self.toks.next()
            node = ("^", node, self.factor())
        return node

    def unary(self):
        kind, val, pos = self.toks.peek()
        if kind == "op" and val in "+-":
            self.toks.next()
            inner = self.unary()
            return inner if val == "+" else ("neg", inner)
        return self.atom()

    def atom(self):
        kind, val, pos = self.toks.next()
        if kind == "num":
            return ("num", float(val))
        if kind == "name":
            nxt_kind, nxt_val, _ = self.toks.peek()
            if nxt_kind == "op" and nxt_val == "(":
                if val not in _FUNCTIONS:
                    raise SymbolParseError(f"unknown function {val!r}", pos)
                self.toks.next()
                arg = self.expr()
                self._expect(")")
                return ("call", val, arg)
            if val in _CONSTANTS:
                return ("num", complex(_CONSTANTS[val]))
            if not _VAR_RE.match(val):
                raise SymbolParseError(f"unknown identifier {val!r}", pos)
            return ("var", val)
        if kind == "op" and val == "(":
            node = self.expr()
            self._expect(")")
            return node
        raise SymbolParseError(f"expected a value, got {val!r}", pos)

    def _expect(self, op: str):
        kind, val, pos = self.toks.next()
        if kind != "op" or val != op:
            raise SymbolParseError(f"expected {op!r}, got {val!r}", pos)


def _free_vars(node, out: set):
    tag = node[0]
    if tag == "var":
        out.add(node[1])
    elif tag == "neg":
        _free_vars(node[1], out)
    elif tag == "call":
        _free_vars(node[2], out)
    elif tag in "+-*/^":
        _free_vars(node[1], out)
        _free_vars(node[2], out)
    return out


def _eval_node(node, env: dict):
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "var":
        try:
            return env[node[1]]
        except KeyError:
            raise SymbolError(f"unbound variable {node[1]!r} at evaluation")
    if tag == "neg":
        return -_eval_node(node[1], env)
    if tag == "call":
        return _FUNCTIONS[node[1]](_eval_node(node[2], env))
    left = _eval_node(node[1], env)
    right = _eval_node(node[2], env)
    if tag == "+":
        return left + right
    if tag == "-":
        return left - right
    if tag == "*":
        return left * right
    if tag == "/":
        return left / right
    if tag == "^":
        return np.power(np.asarray(left, dtype=complex), right)
    raise SymbolError(f"corrupt expression node {tag!r}")


@dataclass(frozen=True, eq=False)
class SymbolExpression:
    """Parsed symbol expression with its free variables."""

    text: str
    root: tuple
    variables: frozenset[str]

    def __call__(self, **env):
        return _eval_node(self.root, env)

    def evaluate(self, env: dict):
        return _eval_node(self.root, env)

    def depth(self) -> int:
        def _d(node):
            tag = node[0]
            if tag in ("num", "var"):
                return 0
            if tag in ("neg",):
                return 1 + _d(node[1])
            if tag == "call":
                return 1 + _d(node[2])
            return 1 + max(_d(node[1]), _d(node[2]))

        return _d(self.root)


def parse_symbol_expression(text: str) -> SymbolExpression:
    """Parse a profile expression; raises SymbolParseError with a byte offset."""
    if not text or not text.strip():
        raise SymbolParseError("empty expression", 0)
    root = _Parser(text).parse()
    return SymbolExpression(text=text, root=root, variables=frozenset(_free_vars(root, set())))


# ---------------------------------------------------------------------------
# Fourier profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MonomialProfile:
    """c_hat(s, p) = coeff * prod_l s_l^{powers_l}; entries become Gamma ratios."""

    powers: Index
    coeff: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "powers", tuple(int(v) for v in self.powers))
        if any(v < 0 for v in self.powers):
            raise SymbolError(f"profile powers must be nonnegative: {self.powers}")

    def __call__(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.full(s.shape[:-1], complex(self.coeff))
        for axis, power in enumerate(self.powers):
            if power:
                out = out * s[..., axis] ** power
        return out

    @property
    def label(self) -> str:
        return f"mono{self.powers}*{complex(self.coeff)!r}"


@dataclass(frozen=True, eq=False)
class CallableProfile:
    """Generic analytic profile c_hat(s, p) sampled by quadrature."""

    fn: Callable
    label: str

    def __call__(self, s: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(s), dtype=complex)


@dataclass(frozen=True)
class FourierMode:
    p: Index
    profile: MonomialProfile | CallableProfile

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(int(v) for v in self.p))
        if sum(self.p) != 0:
            raise SymbolError(f"Fourier mode {self.p} violates |p| = 0")


# ---------------------------------------------------------------------------
# Symbol classes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuasiRadialSymbol:
    """Bounded symbol depending only on the group radii r_1..r_m.

    The evaluation handle receives an (N, m) array of radii with
    sum(r_j^2) <= 1 and must return an (N,) array.
    """

    m: int
    fn: Callable
    label: str
    bounded: bool = True

    def __call__(self, r: np.ndarray) -> np.ndarray:
        r = np.atleast_2d(np.asarray(r, dtype=float))
        vals = np.asarray(self.fn(r), dtype=complex)
        if vals.shape != (r.shape[0],):
            vals = np.array([complex(self.fn(row[None, :])[0]) for row in r])
        if not np.all(np.isfinite(vals.real) & np.isfinite(vals.imag)):
            raise SymbolError(f"quasi-radial symbol {self.label!r} evaluated non-finite")
        return vals

    @classmethod
    def one(cls, m: int) -> "QuasiRadialSymbol":
        return cls(m=m, fn=lambda r: np.ones(r.shape[0], dtype=complex), label="1")

    @classmethod
    def from_expression(cls, m: int, text: str) -> "QuasiRadialSymbol":
        expr = parse_symbol_expression(text)
        allowed = {f"r{j}" for j in range(1, m + 1)}
        extra = expr.variables - allowed
        if extra:
            raise SymbolError(
                f"quasi-radial expression uses {sorted(extra)}; only {sorted(allowed)} allowed"
            )

        def fn(r, _expr=expr):
            env = {f"r{j + 1}": r[:, j] for j in range(m)}
            vals = _expr.evaluate(env)
            return np.broadcast_to(np.asarray(vals, dtype=complex), (r.shape[0],))

        return cls(m=m, fn=fn, label=f"expr:{text}")

    @classmethod
    def power(cls, exponents) -> "QuasiRadialSymbol":
        """a(r) = prod_j r_j^{q_j}."""
        q = tuple(int(v) for v in exponents)
        if any(v < 0 for v in q):
            raise SymbolError(f"radial powers must be nonnegative: {q}")

        def fn(r, _q=q):
            out = np.ones(r.shape[0], dtype=complex)
            for axis, power in enumerate(_q):
                if power:
                    out = out * r[:, axis] ** power
            return out

        return cls(m=len(q), fn=fn, label=f"rpow{q}")


@dataclass(frozen=True, eq=False)
class PseudoHomogeneousSymbol:
    """Generalized pseudo-homogeneous symbol for one group.

    fn(s, t) takes broadcast-compatible arrays (..., k) of sphere and torus
    coordinates.  When ``modes`` is present it fully describes the Fourier
    support {p : |p| = 0} with analytic profiles; otherwise coefficients are
    probed numerically on demand.
    """

    group: int
    dim: int
    fn: Callable
    label: str
    modes: tuple[FourierMode, ...] | None = None
    boundary_continuous: bool = False

    def __call__(self, s, t) -> np.ndarray:
        vals = np.asarray(self.fn(np.asarray(s, float), np.asarray(t, complex)))
        return vals.astype(complex)

    @property
    def content_key(self) -> str:
        blob = f"phs|g={self.group}|k={self.dim}|{self.label}"
        return hashlib.sha256(blob.encode()).hexdigest()

    def declared_mode_dict(self) -> dict[Index, MonomialProfile | CallableProfile] | None:
        if self.modes is None:
            return None
        return {mode.p: mode.profile for mode in self.modes}


def _fn_from_modes(modes: tuple[FourierMode, ...]) -> Callable:
    def fn(s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=complex)
        out = np.zeros(np.broadcast(s, t).shape[:-1], dtype=complex)
        for mode in modes:
            term = np.asarray(mode.profile(s), dtype=complex)
            term = np.broadcast_to(term, out.shape).copy()
            for axis, power in enumerate(mode.p):
                if power:
                    term = term * t[..., axis] ** power
            out = out + term
        return out

    return fn


def builtin_quasi_homogeneous(group: int, p) -> PseudoHomogeneousSymbol:
    """The quasi-homogeneous symbol c(s,t) = prod s_l^{|p_l|} t^p, |p| = 0."""
    p = tuple(int(v) for v in p)
    if sum(p) != 0:
        raise SymbolError(f"quasi-homogeneous mode must satisfy |p| = 0, got {p}")
    mode = FourierMode(p=p, profile=MonomialProfile(tuple(abs(v) for v in p)))
    modes = (mode,)
    return PseudoHomogeneousSymbol(
        group=group,
        dim=len(p),
        fn=_fn_from_modes(modes),
        label=f"qh{p}",
        modes=modes,
        boundary_continuous=True,
    )


def constant_symbol(group: int, dim: int, value: complex = 1.0) -> PseudoHomogeneousSymbol:
    mode = FourierMode(p=(0,) * dim, profile=MonomialProfile((0,) * dim, complex(value)))
    return PseudoHomogeneousSymbol(
        group=group,
        dim=dim,
        fn=_fn_from_modes((mode,)),
        label=f"const:{complex(value)!r}",
        modes=(mode,),
        boundary_continuous=True,
    )


def profile_symbol(
    group: int,
    dim: int,
    profile,
    *,
    boundary_continuous: bool = True,
) -> PseudoHomogeneousSymbol:
    """Symbol c(s,t) = b(s) with no torus dependence (single p = 0 mode).

    ``profile`` may be a MonomialProfile, a callable b(s), or an expression
    string over s1..sk.
    """
    if isinstance(profile, str):
        expr = parse_symbol_expression(profile)
        allowed = {f"s{l}" for l in range(1, dim + 1)}
        extra = expr.variables - allowed
        if extra:
            raise SymbolError(
                f"profile expression uses {sorted(extra)}; only {sorted(allowed)} allowed"
            )

        def bfn(s, _expr=expr):
            env = {f"s{l + 1}": s[..., l] for l in range(dim)}
            vals = _expr.evaluate(env)
            return np.broadcast_to(np.asarray(vals, dtype=complex), s.shape[:-1])

        prof = CallableProfile(fn=bfn, label=f"expr:{profile}")
    elif isinstance(profile, MonomialProfile):
        prof = profile
    elif callable(profile):
        prof = CallableProfile(fn=profile, label=getattr(profile, "__name__", "callable"))
    else:
        raise SymbolError(f"cannot build a profile from {type(profile).__name__}")
    mode = FourierMode(p=(0,) * dim, profile=prof)
    return PseudoHomogeneousSymbol(
        group=group,
        dim=dim,
        fn=_fn_from_modes((mode,)),
        label=f"profile[{prof.label}]",
        modes=(mode,),
        boundary_continuous=boundary_continuous,
    )


def modes_symbol(
    group: int, dim: int, modes, *, boundary_continuous: bool = True, label: str | None = None
) -> PseudoHomogeneousSymbol:
    """Symbol with an explicit finite Fourier support."""
    modes = tuple(
        m if isinstance(m, FourierMode) else FourierMode(p=m[0], profile=m[1]) for m in modes
    )
    if label is None:
        label = "modes[" + ",".join(f"{m.p}:{getattr(m.profile, 'label', '?')}" for m in modes) + "]"
    return PseudoHomogeneousSymbol(
        group=group,
        dim=dim,
        fn=_fn_from_modes(modes),
        label=label,
        modes=modes,
        boundary_continuous=boundary_continuous,
    )


def expression_symbol(
    group: int,
    dim: int,
    text: str,
    *,
    boundary_continuous: bool = False,
    validate: bool = True,
    samples: int = 64,
    tol: float = 1e-10,
) -> PseudoHomogeneousSymbol:
    """Generic symbol c(s, t) from an expression over s1..sk, t1..tk.

    Torus invariance is checked on a randomized sample at load time; symbols
    failing the check are rejected here rather than at assembly time.
    """
    expr = parse_symbol_expression(text)
    allowed = {f"s{l}" for l in range(1, dim + 1)} | {f"t{l}" for l in range(1, dim + 1)}
    extra = expr.variables - allowed
    if extra:
        raise SymbolError(f"symbol expression uses {sorted(extra)}; allowed: {sorted(allowed)}")

    def fn(s, t, _expr=expr):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=complex)
        env = {}
        for l in range(dim):
            env[f"s{l + 1}"] = s[..., l]
            env[f"t{l + 1}"] = t[..., l]
        vals = _expr.evaluate(env)
        return np.broadcast_to(np.asarray(vals, dtype=complex), np.broadcast(s, t).shape[:-1])

    sym = PseudoHomogeneousSymbol(
        group=group,
        dim=dim,
        fn=fn,
        label=f"expr:{text}",
        modes=None,
        boundary_continuous=boundary_continuous,
    )
    if validate:
        report = check_invariance(sym, samples=samples, tol=tol)
        if not report.ok:
            if not np.isfinite(report.worst):
                raise SymbolError(f"symbol {text!r} evaluated non-finite during validation")
            raise SymbolError(
                f"symbol {text!r} is not invariant under the diagonal torus action; "
                f"worst violation {report.worst:.3e}"
            )
        if boundary_continuous:
            # The flag is user-asserted; the sample just rules out blow-ups.
            boundary_sanity_sample(sym)
    return sym


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InvarianceReport:
    ok: bool
    worst: float
    samples: int


def _sample_sphere_plus(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    v = np.abs(rng.standard_normal((n, k)))
    v = np.maximum(v, 1e-12)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def check_invariance(
    c: PseudoHomogeneousSymbol, samples: int = 64, tol: float = 1e-12, seed: int = 0
) -> InvarianceReport:
    """Probe |c(s, g.t) - c(s, t)| over random (s, t, g); report the worst case."""
    if samples < 1:
        raise SymbolError("need at least one sample")
    rng = np.random.default_rng(seed)
    k = c.dim
    s = _sample_sphere_plus(rng, samples, k)
    t = np.exp(2j * np.pi * rng.random((samples, k)))
    g = np.exp(2j * np.pi * rng.random((samples, 1)))
    with np.errstate(all="ignore"):
        base = c(s, t)
        moved = c(s, g * t)
        deviation = np.abs(moved - base)
    if not np.all(np.isfinite(deviation)):
        return InvarianceReport(ok=False, worst=float("inf"), samples=samples)
    worst = float(np.max(deviation)) if samples else 0.0
    return InvarianceReport(ok=worst <= tol, worst=worst, samples=samples)


def boundary_sanity_sample(c: PseudoHomogeneousSymbol, samples: int = 32, seed: int = 1) -> float:
    """Max |c| over a sphere sample; finiteness stands in for the continuity flag."""
    rng = np.random.default_rng(seed)
    s = _sample_sphere_plus(rng, samples, c.dim)
    t = np.exp(2j * np.pi * rng.random((samples, c.dim)))
    with np.errstate(all="ignore"):
        vals = c(s, t)
    if not np.all(np.isfinite(vals.real) & np.isfinite(vals.imag)):
        raise SymbolError(f"symbol {c.label!r} evaluated non-finite near the boundary")
    return float(np.max(np.abs(vals)))


def numeric_mode_profile(c: PseudoHomogeneousSymbol, p, grid: int = 64) -> Callable:
    """Numeric c_hat(., p) handle for symbols without declared support."""
    p = tuple(int(v) for v in p)

    def handle(s_points: np.ndarray, _p=p, _grid=grid):
        return fourier_on_points(c.fn, np.atleast_2d(s_points), _p, grid=_grid)

    return handle
