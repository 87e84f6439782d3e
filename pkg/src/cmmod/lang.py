"""Formula language, parser, constructible sets, quantifier elimination,
and the decision procedure.

Formulas are built from modular atoms Phi[l](s, t) = 0, equalities, and
named constants, under the Boolean connectives and quantifiers.  Terms are
variables x1, x2, ... or constant literals.  Quantifier elimination rewrites
innermost existentials into component atoms by converting the matrix to a
finite union of cells (component minus proper subcomponents) and projecting
cell by cell; universal quantifiers are expanded as negated existentials.

Three structures share the engine: the full complex interpretation, its
CM-point substructure (same answers on every sentence; orbit constants are
rejected), and the isogeny orbit of one fixed transcendental base point
(components naming CM constants are discarded, because those points lie
outside the universe).
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

from .config import DEFAULT_CONFIG, Config
from .errors import ParseError, ResourceLimitError, StructureDomainError
from .gl2q import PrimIntMat2, hecke_representatives, mul_prim
from .qimath import CMPointId, ConstantValue, cm_id_of, ground_phi_holds
from .special import (
    Block,
    ConstEq,
    EquationSystem,
    PhiEq,
    PreSpecialDatum,
    SpecialVariety,
    canonicalize,
    components_of,
    contains,
    datum_to_json,
    equal,
    equations_of,
    intersect,
    project,
)
from .gl2q import SL2Z_IDENTITY


class StructureKind(enum.Enum):
    CMOD = "cmod"
    CMMOD = "cmmod"
    ISOG_A = "isog-a"

    @classmethod
    def from_text(cls, text: str) -> "StructureKind":
        for k in cls:
            if k.value == text:
                return k
        raise ValueError(f"unknown structure {text!r}; expected cmod, cmmod, or isog-a")


# --- syntax trees ---------------------------------------------------------

Term = "int | ConstantValue"  # variables are their positive index


@dataclass(frozen=True)
class PhiAtom:
    level: int
    a: object
    b: object


@dataclass(frozen=True)
class EqAtom:
    a: object
    b: object


@dataclass(frozen=True)
class ConstAtom:
    a: object
    value: ConstantValue


@dataclass(frozen=True)
class ComponentAtom:
    variety: SpecialVariety
    terms: tuple[int, ...]


@dataclass(frozen=True)
class Not:
    f: object


@dataclass(frozen=True)
class And:
    f: object
    g: object


@dataclass(frozen=True)
class Or:
    f: object
    g: object


@dataclass(frozen=True)
class Exists:
    var: int
    f: object


@dataclass(frozen=True)
class Forall:
    var: int
    f: object


@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class FalseF:
    pass


TRUE = TrueF()
FALSE = FalseF()


def is_var(t) -> bool:
    return isinstance(t, int)


# --- parser ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<name>exists|forall|true|false|Phi|CM|Orb)(?![A-Za-z0-9_])"
    r"|(?P<var>x[0-9]+)"
    r"|(?P<int>-?[0-9]+)"
    r"|(?P<punct>[()\[\]{},;.&|!=]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    line, col = 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            rest = text[pos:]
            if rest.strip() == "":
                break
            # locate the offending character for the diagnostic
            for ch in text[pos:]:
                if not ch.isspace():
                    break
            raise ParseError(f"unexpected character {ch!r}", line, col + len(text[pos:]) - len(text[pos:].lstrip()))
        skipped = text[pos : m.start(1) if m.lastgroup else m.end()]
        ws = text[pos : m.end()]
        tok_text = m.group(m.lastgroup)
        ws_prefix = ws[: len(ws) - len(ws.lstrip())] if False else text[pos : m.end() - len(tok_text)]
        for ch in ws_prefix:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        tokens.append((m.lastgroup, tok_text, line, col))
        col += len(tok_text)
        pos = m.end()
    tokens.append(("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str):
        _, text, line, col = self.peek()
        raise ParseError(message + (f" (found {text!r})" if text else " (at end of input)"), line, col)

    def expect(self, text: str):
        kind, tok, line, col = self.next()
        if tok != text:
            raise ParseError(f"expected {text!r}, found {tok!r}", line, col)

    def parse_formula(self):
        kind, tok, _, _ = self.peek()
        if tok in ("exists", "forall"):
            self.next()
            var = self.parse_var()
            self.expect(".")
            body = self.parse_formula()
            return Exists(var, body) if tok == "exists" else Forall(var, body)
        return self.parse_or()

    def parse_or(self):
        f = self.parse_and()
        while self.peek()[1] == "|":
            self.next()
            f = Or(f, self.parse_and())
        return f

    def parse_and(self):
        f = self.parse_unary()
        while self.peek()[1] == "&":
            self.next()
            f = And(f, self.parse_unary())
        return f

    def parse_unary(self):
        kind, tok, _, _ = self.peek()
        if tok == "!":
            self.next()
            return Not(self.parse_unary())
        if tok == "(":
            self.next()
            f = self.parse_formula()
            self.expect(")")
            return f
        if tok == "true":
            self.next()
            return TRUE
        if tok == "false":
            self.next()
            return FALSE
        return self.parse_atom()

    def parse_var(self) -> int:
        kind, tok, line, col = self.next()
        if kind != "var":
            raise ParseError(f"expected a variable like x1, found {tok!r}", line, col)
        idx = int(tok[1:])
        if idx < 1:
            raise ParseError("variable indices start at 1", line, col)
        return idx

    def parse_int(self) -> int:
        kind, tok, line, col = self.next()
        if kind != "int":
            raise ParseError(f"expected an integer, found {tok!r}", line, col)
        return int(tok)

    def parse_constant(self) -> ConstantValue:
        kind, tok, line, col = self.next()
        if tok == "CM":
            self.expect("(")
            d = self.parse_int()
            self.expect(";")
            a = self.parse_int()
            self.expect(",")
            b = self.parse_int()
            self.expect(",")
            c = self.parse_int()
            self.expect(")")
            try:
                return ConstantValue.of_cm(CMPointId(d, (a, b, c)))
            except ValueError as exc:
                raise ParseError(str(exc), line, col)
        if tok == "Orb":
            self.expect("(")
            self.expect("[")
            self.expect("[")
            a = self.parse_int()
            self.expect(",")
            b = self.parse_int()
            self.expect("]")
            self.expect(",")
            self.expect("[")
            c = self.parse_int()
            self.expect(",")
            d = self.parse_int()
            self.expect("]")
            self.expect("]")
            self.expect(")")
            try:
                return ConstantValue.of_orbit(PrimIntMat2.from_entries(a, b, c, d))
            except ValueError as exc:
                raise ParseError(str(exc), line, col)
        raise ParseError(f"expected CM(...) or Orb(...), found {tok!r}", line, col)

    def parse_term(self):
        kind, tok, _, _ = self.peek()
        if kind == "var":
            return self.parse_var()
        return self.parse_constant()

    def parse_atom(self):
        kind, tok, line, col = self.peek()
        if tok == "Phi":
            self.next()
            self.expect("[")
            level_tok = self.parse_int()
            if level_tok < 1:
                raise ParseError("modular level must be positive", line, col)
            self.expect("]")
            self.expect("(")
            a = self.parse_term()
            self.expect(",")
            b = self.parse_term()
            self.expect(")")
            self.expect("=")
            zero = self.parse_int()
            if zero != 0:
                self.error("modular atoms end in =0")
            return PhiAtom(level_tok, a, b)
        if kind in ("var",) or tok in ("CM", "Orb"):
            a = self.parse_term()
            self.expect("=")
            b = self.parse_term()
            if isinstance(b, ConstantValue) and is_var(a):
                return ConstAtom(a, b)
            return EqAtom(a, b)
        self.error("expected an atom")


def parse(text: str):
    """Parse a formula; raises ParseError with line/column on bad input."""
    p = _Parser(text)
    f = p.parse_formula()
    kind, tok, line, col = p.peek()
    if kind != "eof":
        raise ParseError(f"unexpected trailing input {tok!r}", line, col)
    return f


def render_constant(c: ConstantValue) -> str:
    if c.is_cm:
        a, b, cc = c.cm.form
        return f"CM({c.cm.d};{a},{b},{cc})"
    m = c.orb
    return f"Orb([[{m.a},{m.b}],[{m.c},{m.d}]])"


def _render_term(t) -> str:
    return f"x{t}" if is_var(t) else render_constant(t)


def render(f) -> str:
    """Canonical text of a formula; parse(render(f)) renders identically."""
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, (Exists, Forall)):
        q = "exists" if isinstance(f, Exists) else "forall"
        return f"{q} x{f.var}. {render(f.f)}"
    if isinstance(f, Not):
        return "!" + _render_tight(f.f)
    if isinstance(f, And):
        return f"{_render_level(f.f, 2)} & {_render_level(f.g, 2)}"
    if isinstance(f, Or):
        return f"{_render_level(f.f, 1)} | {_render_level(f.g, 1)}"
    if isinstance(f, PhiAtom):
        return f"Phi[{f.level}]({_render_term(f.a)},{_render_term(f.b)})=0"
    if isinstance(f, EqAtom):
        return f"{_render_term(f.a)} = {_render_term(f.b)}"
    if isinstance(f, ConstAtom):
        return f"{_render_term(f.a)} = {render_constant(f.value)}"
    if isinstance(f, ComponentAtom):
        return _render_component(f)
    raise TypeError(f"not a formula: {f!r}")


def _precedence(f) -> int:
    if isinstance(f, (Exists, Forall)):
        return 0
    if isinstance(f, Or):
        return 1
    if isinstance(f, And):
        return 2
    return 3


def _render_level(f, minimum: int) -> str:
    text = render(f)
    return f"({text})" if _precedence(f) < minimum else text


def _render_tight(f) -> str:
    text = render(f)
    return f"({text})" if _precedence(f) < 3 else text


def _render_component(f: ComponentAtom) -> str:
    """A component atom prints as the conjunction of its defining equations.

    This is exact for components that are alone over their equation system
    (every output of the curated pipeline); the canonical datum itself is
    available in JSON traces.
    """
    d = f.variety.datum
    sysm = equations_of(d)
    parts = []
    for c in sysm.consts:
        parts.append(f"x{f.terms[c.i - 1]} = {render_constant(c.value)}")
    for a in sysm.phis:
        vi, vj = f.terms[a.i - 1], f.terms[a.j - 1]
        if a.level == 1:
            parts.append(f"x{vi} = x{vj}")
        else:
            parts.append(f"Phi[{a.level}](x{vi},x{vj})=0")
    if not parts:
        return "true"
    if len(parts) == 1:
        return parts[0]
    return "(" + " & ".join(parts) + ")"


# --- formula utilities ----------------------------------------------------

def free_vars(f) -> set[int]:
    if isinstance(f, (TrueF, FalseF)):
        return set()
    if isinstance(f, PhiAtom):
        return {t for t in (f.a, f.b) if is_var(t)}
    if isinstance(f, EqAtom):
        return {t for t in (f.a, f.b) if is_var(t)}
    if isinstance(f, ConstAtom):
        return {f.a} if is_var(f.a) else set()
    if isinstance(f, ComponentAtom):
        return set(f.terms)
    if isinstance(f, Not):
        return free_vars(f.f)
    if isinstance(f, (And, Or)):
        return free_vars(f.f) | free_vars(f.g)
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.f) - {f.var}
    raise TypeError(f"not a formula: {f!r}")


def _max_index(f) -> int:
    if isinstance(f, (TrueF, FalseF)):
        return 0
    if isinstance(f, (PhiAtom, EqAtom)):
        return max([t for t in (f.a, f.b) if is_var(t)], default=0)
    if isinstance(f, ConstAtom):
        return f.a if is_var(f.a) else 0
    if isinstance(f, ComponentAtom):
        return max(f.terms, default=0)
    if isinstance(f, Not):
        return _max_index(f.f)
    if isinstance(f, (And, Or)):
        return max(_max_index(f.f), _max_index(f.g))
    if isinstance(f, (Exists, Forall)):
        return max(f.var, _max_index(f.f))
    raise TypeError(f"not a formula: {f!r}")


def _rename_term(t, mapping):
    return mapping.get(t, t) if is_var(t) else t


def _rename(f, mapping: dict[int, int]):
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, PhiAtom):
        return PhiAtom(f.level, _rename_term(f.a, mapping), _rename_term(f.b, mapping))
    if isinstance(f, EqAtom):
        return EqAtom(_rename_term(f.a, mapping), _rename_term(f.b, mapping))
    if isinstance(f, ConstAtom):
        return ConstAtom(_rename_term(f.a, mapping), f.value)
    if isinstance(f, ComponentAtom):
        return ComponentAtom(f.variety, tuple(mapping.get(t, t) for t in f.terms))
    if isinstance(f, Not):
        return Not(_rename(f.f, mapping))
    if isinstance(f, And):
        return And(_rename(f.f, mapping), _rename(f.g, mapping))
    if isinstance(f, Or):
        return Or(_rename(f.f, mapping), _rename(f.g, mapping))
    if isinstance(f, (Exists, Forall)):
        inner = {k: v for k, v in mapping.items() if k != f.var}
        cls = type(f)
        return cls(f.var, _rename(f.f, inner))
    raise TypeError(f"not a formula: {f!r}")


def normalize_bound_vars(f):
    """Alpha-rename bound variables above every free index, left to right."""
    counter = [_max_index(f)]

    def walk(g, env):
        if isinstance(g, (TrueF, FalseF, PhiAtom, EqAtom, ConstAtom, ComponentAtom)):
            return _rename(g, env)
        if isinstance(g, Not):
            return Not(walk(g.f, env))
        if isinstance(g, And):
            return And(walk(g.f, env), walk(g.g, env))
        if isinstance(g, Or):
            return Or(walk(g.f, env), walk(g.g, env))
        if isinstance(g, (Exists, Forall)):
            counter[0] += 1
            fresh = counter[0]
            env2 = dict(env)
            env2[g.var] = fresh
            return type(g)(fresh, walk(g.f, env2))
        raise TypeError(f"not a formula: {g!r}")

    return walk(f, {})


def substitute(f, assignment: dict[int, ConstantValue]):
    """Replace free variables by constants."""

    def sub_term(t):
        return assignment.get(t, t) if is_var(t) else t

    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, PhiAtom):
        return PhiAtom(f.level, sub_term(f.a), sub_term(f.b))
    if isinstance(f, EqAtom):
        return EqAtom(sub_term(f.a), sub_term(f.b))
    if isinstance(f, ConstAtom):
        return EqAtom(sub_term(f.a), f.value) if is_var(f.a) and f.a in assignment else f
    if isinstance(f, ComponentAtom):
        if any(t in assignment for t in f.terms):
            return _component_membership(f, assignment)
        return f
    if isinstance(f, Not):
        return Not(substitute(f.f, assignment))
    if isinstance(f, And):
        return And(substitute(f.f, assignment), substitute(f.g, assignment))
    if isinstance(f, Or):
        return Or(substitute(f.f, assignment), substitute(f.g, assignment))
    if isinstance(f, (Exists, Forall)):
        inner = {k: v for k, v in assignment.items() if k != f.var}
        return type(f)(f.var, substitute(f.f, inner))
    raise TypeError(f"not a formula: {f!r}")


def _component_membership(f: ComponentAtom, assignment):
    if not all(t in assignment for t in f.terms):
        raise ValueError("partial substitution into a component atom is not supported")
    values = {k + 1: assignment[t] for k, t in enumerate(f.terms)}
    pt = canonicalize(PreSpecialDatum.point(values, f.variety.n))
    return TRUE if contains(f.variety, pt) else FALSE


def scan_constants(f):
    if isinstance(f, (PhiAtom, EqAtom)):
        return [t for t in (f.a, f.b) if not is_var(t)]
    if isinstance(f, ConstAtom):
        return [f.value] + ([] if is_var(f.a) else [f.a])
    if isinstance(f, ComponentAtom):
        return [v for _, v in f.variety.datum.pi0]
    if isinstance(f, Not):
        return scan_constants(f.f)
    if isinstance(f, (And, Or)):
        return scan_constants(f.f) + scan_constants(f.g)
    if isinstance(f, (Exists, Forall)):
        return scan_constants(f.f)
    return []


def max_atom_level(f) -> int:
    if isinstance(f, PhiAtom):
        return f.level
    if isinstance(f, ComponentAtom):
        return max([a.level for a in equations_of(f.variety.datum).phis], default=1)
    if isinstance(f, Not):
        return max_atom_level(f.f)
    if isinstance(f, (And, Or)):
        return max(max_atom_level(f.f), max_atom_level(f.g))
    if isinstance(f, (Exists, Forall)):
        return max_atom_level(f.f)
    return 1


# --- constructible sets ---------------------------------------------------

@dataclass(frozen=True)
class Cell:
    x: SpecialVariety
    excluded: tuple[SpecialVariety, ...]


@dataclass(frozen=True)
class ConstructibleSet:
    arity: int
    cells: tuple[Cell, ...]

    def to_json(self) -> dict:
        return {
            "arity": self.arity,
            "cells": [
                {"component": datum_to_json(c.x.datum),
                 "excluded": [datum_to_json(y.datum) for y in c.excluded]}
                for c in self.cells
            ],
        }


def _full_variety(n: int) -> SpecialVariety:
    return canonicalize(PreSpecialDatum.full_space(n))


def _in_universe(v: SpecialVariety, kind: StructureKind) -> bool:
    """Whether the component meets the structure's universe at all."""
    if kind is StructureKind.ISOG_A:
        return all(not val.is_cm for _, val in v.datum.pi0)
    return True


def _check_kind_constant(c: ConstantValue, kind: StructureKind) -> None:
    if kind is StructureKind.CMMOD and not c.is_cm:
        raise StructureDomainError("orbit constants are not interpretable over the CM universe")


def cs_normalize(arity: int, raw_cells, kind: StructureKind, cfg: Config) -> ConstructibleSet:
    """Canonical irredundant form of a finite union of cells.

    Components outside the universe are dropped (together with exclusions
    that exclude nothing), equal components are merged by intersecting
    their exclusion loci, and cells covered by another cell are removed.
    """
    by_x: dict = {}
    order: list = []
    for x, excluded in raw_cells:
        if not _in_universe(x, kind):
            continue
        exs = [y for y in excluded if _in_universe(y, kind) and contains(x, y) and not equal(x, y)]
        key = x.sort_key()
        if key not in by_x:
            by_x[key] = (x, _prune_exclusions(exs))
            order.append(key)
        else:
            cur_x, cur_e = by_x[key]
            merged = []
            for e1 in cur_e:
                for e2 in _prune_exclusions(exs):
                    for w in intersect(e1, e2, lmax=cfg.lmax, nmax=cfg.nmax, dmax=cfg.dmax):
                        merged.append(w)
            by_x[key] = (x, _prune_exclusions(merged))
    cells = []
    for key in order:
        x, exs = by_x[key]
        cells.append(Cell(x, tuple(sorted(exs, key=lambda v: v.sort_key()))))
    # absorption: drop a cell whose component lies inside another cell entirely
    kept = []
    for i, c in enumerate(cells):
        absorbed = False
        for j, other in enumerate(cells):
            if i == j or not contains(other.x, c.x) or equal(other.x, c.x):
                continue
            if all(
                not contains(e, c.x)
                and not intersect(c.x, e, lmax=cfg.lmax, nmax=cfg.nmax, dmax=cfg.dmax)
                for e in other.excluded
            ):
                absorbed = True
                break
        if not absorbed:
            kept.append(c)
    kept.sort(key=lambda c: (c.x.sort_key(), tuple(y.sort_key() for y in c.excluded)))
    return ConstructibleSet(arity, tuple(kept))


def _prune_exclusions(exs):
    out = []
    for y in exs:
        if any(equal(y, z) for z in out):
            continue
        out.append(y)
    # keep only maximal exclusions
    return [y for y in out if not any(contains(z, y) and not equal(z, y) for z in out)]


def cs_empty(n: int) -> ConstructibleSet:
    return ConstructibleSet(n, ())


def cs_full(n: int, kind: StructureKind, cfg: Config) -> ConstructibleSet:
    return cs_normalize(n, [(_full_variety(n), ())], kind, cfg)


def cs_union(a: ConstructibleSet, b: ConstructibleSet, kind, cfg) -> ConstructibleSet:
    assert a.arity == b.arity
    return cs_normalize(a.arity, [(c.x, c.excluded) for c in a.cells + b.cells], kind, cfg)


def cs_intersect(a: ConstructibleSet, b: ConstructibleSet, kind, cfg) -> ConstructibleSet:
    assert a.arity == b.arity
    cells = []
    for ca in a.cells:
        for cb in b.cells:
            for z in intersect(ca.x, cb.x, lmax=cfg.lmax, nmax=cfg.nmax, dmax=cfg.dmax):
                excl = ca.excluded + cb.excluded
                if any(contains(e, z) for e in excl):
                    continue
                ez = []
                for e in excl:
                    for w in intersect(z, e, lmax=cfg.lmax, nmax=cfg.nmax, dmax=cfg.dmax):
                        if not equal(w, z):
                            ez.append(w)
                cells.append((z, tuple(ez)))
    return cs_normalize(a.arity, cells, kind, cfg)


def cs_complement(a: ConstructibleSet, kind, cfg) -> ConstructibleSet:
    out = cs_full(a.arity, kind, cfg)
    full = _full_variety(a.arity)
    for c in a.cells:
        parts = []
        if not equal(c.x, full):
            parts.append((full, (c.x,)))
        for y in c.excluded:
            parts.append((y, ()))
        out = cs_intersect(out, cs_normalize(a.arity, parts, kind, cfg), kind, cfg)
        if not out.cells:
            break
    return out


# --- atoms to constructible sets ------------------------------------------

def _partner_values(l: int, c: ConstantValue) -> list[ConstantValue]:
    """All named values modularly related to c at level l."""
    out = []
    seen = set()
    for h in hecke_representatives(l):
        if c.is_cm:
            v = ConstantValue.of_cm(cm_id_of(c.cm.tau().transform(h.a, h.b, 0, h.d)))
        else:
            v = ConstantValue.of_orbit(mul_prim(h.to_prim(), c.orb))
        if v.sort_key() not in seen:
            seen.add(v.sort_key())
            out.append(v)
    return out


def _point_cells(n: int, assignments: list[dict[int, ConstantValue]]):
    cells = []
    for values in assignments:
        blocks = [Block.build((i,), i, {i: SL2Z_IDENTITY}) for i in range(1, n + 1) if i not in values]
        cells.append((canonicalize(PreSpecialDatum.build(n, values, blocks)), ()))
    return cells


def _atom_constructible(atom, n: int, kind: StructureKind, cfg: Config) -> ConstructibleSet:
    if isinstance(atom, EqAtom):
        a, b = atom.a, atom.b
        if is_var(a) and is_var(b):
            atom = PhiAtom(1, a, b)
        elif is_var(a):
            atom = ConstAtom(a, b)
        elif is_var(b):
            atom = ConstAtom(b, a)
        else:
            _check_kind_constant(a, kind)
            _check_kind_constant(b, kind)
            return cs_full(n, kind, cfg) if a == b else cs_empty(n)
    if isinstance(atom, ConstAtom):
        if not is_var(atom.a):
            _check_kind_constant(atom.a, kind)
            _check_kind_constant(atom.value, kind)
            return cs_full(n, kind, cfg) if atom.a == atom.value else cs_empty(n)
        _check_kind_constant(atom.value, kind)
        return cs_normalize(n, _point_cells(n, [{atom.a: atom.value}]), kind, cfg)
    if isinstance(atom, PhiAtom):
        if atom.level > cfg.lmax:
            raise ResourceLimitError(f"atom level {atom.level} exceeds the configured bound lmax={cfg.lmax}")
        a, b = atom.a, atom.b
        for t in (a, b):
            if not is_var(t):
                _check_kind_constant(t, kind)
        if is_var(a) and is_var(b):
            sysm = EquationSystem.build(n, [PhiEq.make(atom.level, a, b)], [])
            comps = components_of(sysm, lmax=cfg.lmax, nmax=cfg.nmax, dmax=cfg.dmax)
            return cs_normalize(n, [(v, ()) for v in comps], kind, cfg)
        if is_var(a) or is_var(b):
            var = a if is_var(a) else b
            const = b if is_var(a) else a
            values = _partner_values(atom.level, const)
            return cs_normalize(n, _point_cells(n, [{var: v} for v in values]), kind, cfg)
        return cs_full(n, kind, cfg) if ground_phi_holds(atom.level, a, b) else cs_empty(n)
    if isinstance(atom, ComponentAtom):
        if len(set(atom.terms)) != len(atom.terms):
            raise ValueError("component atoms with repeated arguments are not supported")
        for _, v in atom.variety.datum.pi0:
            _check_kind_constant(v, kind)
        src = atom.variety.datum
        mapping = {k + 1: t for k, t in enumerate(atom.terms)}
        pi0 = {mapping[i]: v for i, v in src.pi0}
        blocks = [
            Block.build([mapping[i] for i in b.indices], mapping[b.base],
                        {mapping[i]: m for i, m in b.gamma})
            for b in src.blocks
        ]
        for i in range(1, n + 1):
            if i not in mapping.values():
                blocks.append(Block.build((i,), i, {i: SL2Z_IDENTITY}))
        return cs_normalize(n, [(canonicalize(PreSpecialDatum.build(n, pi0, blocks)), ())], kind, cfg)
    raise TypeError(f"not an atom: {atom!r}")


def to_constructible(f, kind: StructureKind, arity: int, cfg: Config = DEFAULT_CONFIG) -> ConstructibleSet:
    """Constructible normal form of a quantifier-free formula.

    Variables x1..x_arity are the coordinates.  The result is pointwise
    equal to the formula over the chosen structure's universe.
    """
    if isinstance(f, (Exists, Forall)):
        raise ValueError("to_constructible expects a quantifier-free formula")
    if isinstance(f, TrueF):
        return cs_full(arity, kind, cfg)
    if isinstance(f, FalseF):
        return cs_empty(arity)
    if isinstance(f, Not):
        return cs_complement(to_constructible(f.f, kind, arity, cfg), kind, cfg)
    if isinstance(f, And):
        return cs_intersect(to_constructible(f.f, kind, arity, cfg),
                            to_constructible(f.g, kind, arity, cfg), kind, cfg)
    if isinstance(f, Or):
        return cs_union(to_constructible(f.f, kind, arity, cfg),
                        to_constructible(f.g, kind, arity, cfg), kind, cfg)
    return _atom_constructible(f, arity, kind, cfg)


# --- projection -----------------------------------------------------------

def _coordinate_is_free(v: SpecialVariety, coord: int) -> bool:
    b = v.datum.block_of(coord)
    return b is not None and len(b.indices) == 1


def _cylinder(base: SpecialVariety, coord: int, n: int) -> SpecialVariety:
    """Embed an arity n-1 variety as a cylinder with a free coordinate."""
    d = base.datum

    def ren(i: int) -> int:
        return i if i < coord else i + 1

    pi0 = {ren(i): v for i, v in d.pi0}
    blocks = [
        Block.build([ren(i) for i in b.indices], ren(b.base), {ren(i): m for i, m in b.gamma})
        for b in d.blocks
    ]
    blocks.append(Block.build((coord,), coord, {coord: SL2Z_IDENTITY}))
    return canonicalize(PreSpecialDatum.build(n, pi0, blocks))


def _project_cell(x: SpecialVariety, excluded, coord: int, kind, cfg, depth: int = 0):
    """Exact image of one cell under dropping the given coordinate.

    Free coordinate: fibers are whole lines, so only exclusions with the
    coordinate free survive (as their projections).  Constant coordinate:
    the projection is a bijection.  Linked coordinate: fibers are finite
    and nonempty, so the image is the projected component minus the loci
    where the (finitely many) fiber values are all excluded; those loci
    sit over projections of the exclusions and are handled by recursion
    in strictly smaller dimension.
    """
    if depth > 16:
        raise ResourceLimitError("projection recursion depth exceeded")
    d = x.datum
    if _coordinate_is_free(x, coord):
        exs = [canonicalize(project(y.datum, coord)) for y in excluded if _coordinate_is_free(y, coord)]
        return [(canonicalize(project(d, coord)), tuple(exs))]
    new_x = canonicalize(project(d, coord))
    if coord in d.pi0_map():
        return [(new_x, tuple(canonicalize(project(y.datum, coord)) for y in excluded))]
    if not excluded:
        return [(new_x, ())]
    loci = []
    seen = set()
    for y in excluded:
        ly = canonicalize(project(y.datum, coord))
        if ly.sort_key() not in seen:
            seen.add(ly.sort_key())
            loci.append(ly)
    cells = [(new_x, tuple(loci))]
    for ly in loci:
        cyl = _cylinder(ly, coord, d.n)
        for z in intersect(x, cyl, lmax=cfg.lmax, nmax=cfg.nmax, dmax=cfg.dmax):
            if equal(z, x) or any(contains(y, z) for y in excluded):
                continue
            ez = []
            for y in excluded:
                for w in intersect(z, y, lmax=cfg.lmax, nmax=cfg.nmax, dmax=cfg.dmax):
                    if not equal(w, z):
                        ez.append(w)
            cells.extend(_project_cell(z, tuple(ez), coord, kind, cfg, depth + 1))
    return cells


def project_constructible(s: ConstructibleSet, coord: int, kind: StructureKind,
                          cfg: Config = DEFAULT_CONFIG) -> ConstructibleSet:
    """Pointwise-exact image of a constructible set under dropping coord."""
    if not (1 <= coord <= s.arity):
        raise ValueError(f"coordinate {coord} out of range")
    if s.arity == 1:
        raise ValueError("projecting the last coordinate is truth evaluation; use qe/decide")
    cells = []
    for c in s.cells:
        cells.extend(_project_cell(c.x, c.excluded, coord, kind, cfg))
    return cs_normalize(s.arity - 1, cells, kind, cfg)


# --- quantifier elimination ------------------------------------------------

def _rewrite_foralls(f):
    if isinstance(f, Forall):
        return Not(Exists(f.var, Not(_rewrite_foralls(f.f))))
    if isinstance(f, Not):
        return Not(_rewrite_foralls(f.f))
    if isinstance(f, And):
        return And(_rewrite_foralls(f.f), _rewrite_foralls(f.g))
    if isinstance(f, Or):
        return Or(_rewrite_foralls(f.f), _rewrite_foralls(f.g))
    if isinstance(f, Exists):
        return Exists(f.var, _rewrite_foralls(f.f))
    return f


def _formula_from_cs(s: ConstructibleSet, varlist: list[int]):
    if not s.cells:
        return FALSE
    disjuncts = []
    for c in s.cells:
        atom = ComponentAtom(c.x, tuple(varlist))
        if equal(c.x, _full_variety(s.arity)) and not c.excluded:
            disjuncts.append(TRUE)
            continue
        g = atom
        if c.excluded:
            neg = None
            for y in c.excluded:
                ya = ComponentAtom(y, tuple(varlist))
                neg = ya if neg is None else Or(neg, ya)
            g = And(atom, Not(neg))
        disjuncts.append(g)
    out = None
    for g in disjuncts:
        if isinstance(g, TrueF):
            return TRUE
        out = g if out is None else Or(out, g)
    return out


def _eliminate(f, kind: StructureKind, cfg: Config, trace: list | None, step: list):
    if isinstance(f, Not):
        return Not(_eliminate(f.f, kind, cfg, trace, step))
    if isinstance(f, And):
        return And(_eliminate(f.f, kind, cfg, trace, step),
                   _eliminate(f.g, kind, cfg, trace, step))
    if isinstance(f, Or):
        return Or(_eliminate(f.f, kind, cfg, trace, step),
                  _eliminate(f.g, kind, cfg, trace, step))
    if isinstance(f, Exists):
        body = _eliminate(f.f, kind, cfg, trace, step)
        fv = sorted(free_vars(body))
        if f.var not in fv:
            return body  # the universe is nonempty, so the quantifier is idle
        if len(fv) > cfg.nmax:
            raise ResourceLimitError(f"elimination arity {len(fv)} exceeds the configured bound nmax={cfg.nmax}")
        positions = {v: i + 1 for i, v in enumerate(fv)}
        cs = to_constructible(_rename(body, positions), kind, len(fv), cfg)
        if len(fv) == 1:
            result = TRUE if cs.cells else FALSE
            after = None
        else:
            projected = project_constructible(cs, positions[f.var], kind, cfg)
            rest = [v for v in fv if v != f.var]
            result = _formula_from_cs(projected, rest)
            after = projected
        if trace is not None:
            step[0] += 1
            trace.append({
                "step": step[0],
                "eliminatedVar": f"x{f.var}",
                "before": cs.to_json(),
                "after": after.to_json() if after is not None else {"arity": 0, "truth": isinstance(result, TrueF)},
            })
        return result
    return f


def qe(f, kind: StructureKind = StructureKind.CMOD, cfg: Config = DEFAULT_CONFIG,
       trace: list | None = None):
    """Equivalent quantifier-free formula over component atoms.

    The output is pointwise equivalent to the input over the full complex
    structure and over its CM substructure; under the isogeny-orbit
    structure the universe filter is applied during elimination.
    """
    if max_atom_level(f) > cfg.lmax:
        raise ResourceLimitError(f"formula uses a level above the configured bound lmax={cfg.lmax}")
    if kind is StructureKind.CMMOD:
        for c in scan_constants(f):
            _check_kind_constant(c, kind)
    g = _rewrite_foralls(normalize_bound_vars(f))
    return _eliminate(g, kind, cfg, trace, [0])


def evaluate_qf_sentence(f, kind: StructureKind = StructureKind.CMOD,
                         cfg: Config = DEFAULT_CONFIG) -> bool:
    """Truth of a ground quantifier-free sentence."""
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Not):
        return not evaluate_qf_sentence(f.f, kind, cfg)
    if isinstance(f, And):
        return evaluate_qf_sentence(f.f, kind, cfg) and evaluate_qf_sentence(f.g, kind, cfg)
    if isinstance(f, Or):
        return evaluate_qf_sentence(f.f, kind, cfg) or evaluate_qf_sentence(f.g, kind, cfg)
    if isinstance(f, PhiAtom):
        if is_var(f.a) or is_var(f.b):
            raise ValueError("sentence evaluation requires ground atoms")
        _check_kind_constant(f.a, kind)
        _check_kind_constant(f.b, kind)
        if f.level > cfg.lmax:
            raise ResourceLimitError(f"atom level {f.level} exceeds the configured bound lmax={cfg.lmax}")
        return ground_phi_holds(f.level, f.a, f.b)
    if isinstance(f, (EqAtom, ConstAtom)):
        a = f.a
        b = f.b if isinstance(f, EqAtom) else f.value
        if is_var(a) or is_var(b):
            raise ValueError("sentence evaluation requires ground atoms")
        _check_kind_constant(a, kind)
        _check_kind_constant(b, kind)
        return a == b
    if isinstance(f, ComponentAtom):
        raise ValueError("sentence evaluation requires ground atoms")
    if isinstance(f, (Exists, Forall)):
        raise ValueError("sentence evaluation requires a quantifier-free formula")
    raise TypeError(f"not a formula: {f!r}")


def evaluate_on_tuple(f, assignment: dict[int, ConstantValue],
                      kind: StructureKind = StructureKind.CMOD,
                      cfg: Config = DEFAULT_CONFIG) -> bool:
    """Ground evaluation of a quantifier-free formula at named constants."""
    g = substitute(f, assignment)
    if free_vars(g):
        raise ValueError(f"unassigned free variables {sorted(free_vars(g))}")
    return evaluate_qf_sentence(g, kind, cfg)


def decide(f, kind: StructureKind = StructureKind.CMOD, cfg: Config = DEFAULT_CONFIG,
           trace: bool = False):
    """Decide a sentence: eliminate quantifiers, then evaluate.

    With trace=True, returns (truth, steps) where each step records the
    eliminated variable and the constructible sets before and after.
    """
    if free_vars(f):
        raise ValueError(f"not a sentence: free variables {sorted(free_vars(f))}")
    steps: list | None = [] if trace else None
    reduced = qe(f, kind, cfg, trace=steps)
    value = evaluate_qf_sentence(reduced, kind, cfg)
    if trace:
        return value, steps
    return value
