"""Pre-special data and the geometry of special varieties.

A component of a variety cut out by modular-polynomial equations (plus named
constant coordinates) is presented combinatorially: constant coordinates, a
partition of the rest into linked blocks, and one connecting matrix per block
coordinate rooted at a base coordinate.  Storing only base-rooted matrices
makes the cocycle identity true by construction.

Everything is decided exactly: canonical forms quotient out the left
SL2(Z)-twists and the simultaneous right twist of a block, containment is
checked equation by equation, and degenerate (zero-dimensional) loci are
found by a finite CM search whose discriminant bound comes from the trace of
an elliptic fixed-point matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import lcm

import mpmath

from .errors import ResourceLimitError
from .gl2q import (
    PrimIntMat2,
    RatMat2,
    SL2Z_IDENTITY,
    coset_normal_form,
    hecke_representatives,
    level,
    matrix_from_json,
    matrix_to_json,
    mul_prim,
    primitive_integral_form,
    sl2_group_order,
    sl2z_lifts,
)
from .qimath import (
    CMPointId,
    ConstantValue,
    UHPQuadPoint,
    cm_id_of,
    enumerate_cm_points,
    ground_phi_holds,
)

TWIST_ITERATION_LIMIT = 500_000


@dataclass(frozen=True)
class Block:
    """One linked block: coordinates, a base, and base-rooted matrices."""

    indices: tuple[int, ...]
    base: int
    gamma: tuple[tuple[int, PrimIntMat2], ...]

    @classmethod
    def build(cls, indices, base: int, gamma: dict[int, PrimIntMat2]) -> "Block":
        return cls(tuple(sorted(indices)), base, tuple(sorted(gamma.items())))

    def gamma_of(self, idx: int) -> PrimIntMat2:
        for i, m in self.gamma:
            if i == idx:
                return m
        raise KeyError(idx)

    def gamma_map(self) -> dict[int, PrimIntMat2]:
        return dict(self.gamma)


@dataclass(frozen=True)
class PreSpecialDatum:
    """Combinatorial presentation (constants, blocks, linking matrices)."""

    n: int
    pi0: tuple[tuple[int, ConstantValue], ...]
    blocks: tuple[Block, ...]

    @classmethod
    def build(cls, n: int, pi0: dict[int, ConstantValue] | None = None, blocks=()) -> "PreSpecialDatum":
        return cls(n, tuple(sorted((pi0 or {}).items())), tuple(sorted(blocks, key=lambda b: min(b.indices))))

    @classmethod
    def full_space(cls, n: int) -> "PreSpecialDatum":
        return cls.build(n, {}, [Block.build((i,), i, {i: SL2Z_IDENTITY}) for i in range(1, n + 1)])

    @classmethod
    def point(cls, values: dict[int, ConstantValue], n: int | None = None) -> "PreSpecialDatum":
        return cls.build(n if n is not None else max(values), dict(values), [])

    def pi0_map(self) -> dict[int, ConstantValue]:
        return dict(self.pi0)

    @property
    def dimension(self) -> int:
        return len(self.blocks)

    def block_of(self, idx: int) -> Block | None:
        for b in self.blocks:
            if idx in b.indices:
                return b
        return None

    def gamma_between(self, i: int, j: int) -> RatMat2:
        """gamma(i, j) with gamma(i,j).tau_i = tau_j, for i, j in one block."""
        b = self.block_of(i)
        return b.gamma_of(j).to_rat() * b.gamma_of(i).to_rat().inverse()


def validate(d: PreSpecialDatum) -> list[str]:
    """Structural diagnostics; an empty list means the datum is valid."""
    issues = []
    if d.n < 1:
        issues.append(f"arity {d.n} is not positive")
    seen: dict[int, str] = {}

    def claim(idx: int, what: str):
        if not (1 <= idx <= d.n):
            issues.append(f"index {idx} out of range 1..{d.n}")
        elif idx in seen:
            issues.append(f"index {idx} assigned twice ({seen[idx]} and {what})")
        else:
            seen[idx] = what

    for idx, _ in d.pi0:
        claim(idx, "constant")
    for b in d.blocks:
        if not b.indices:
            issues.append("empty block")
            continue
        for idx in b.indices:
            claim(idx, "block")
        if b.base not in b.indices:
            issues.append(f"base {b.base} is not a member of its block {b.indices}")
        gm = b.gamma_map()
        if set(gm) != set(b.indices):
            issues.append(f"gamma domain {sorted(gm)} does not match block {b.indices}")
        elif b.base in gm and gm[b.base] != SL2Z_IDENTITY:
            issues.append(f"gamma at base {b.base} must be the identity")
    missing = [i for i in range(1, d.n + 1) if i not in seen]
    if missing and not issues:
        issues.append(f"indices {missing} belong to neither a constant nor a block")
    elif missing:
        issues.append(f"indices {missing} belong to neither a constant nor a block")
    return issues


def _require_valid(d: PreSpecialDatum) -> None:
    issues = validate(d)
    if issues:
        raise ValueError("invalid datum: " + "; ".join(issues))


@dataclass(frozen=True)
class PhiEq:
    """Phi_level(x_i, x_j) = 0, stored with i <= j."""

    level: int
    i: int
    j: int

    @classmethod
    def make(cls, l: int, i: int, j: int) -> "PhiEq":
        return cls(l, min(i, j), max(i, j))


@dataclass(frozen=True)
class ConstEq:
    i: int
    value: ConstantValue


@dataclass(frozen=True)
class EquationSystem:
    """Atomic system: modular relations between coordinates plus constants."""

    n: int
    phis: tuple[PhiEq, ...]
    consts: tuple[ConstEq, ...]

    @classmethod
    def build(cls, n: int, phis=(), consts=()) -> "EquationSystem":
        for a in phis:
            if not (1 <= a.i <= n and 1 <= a.j <= n):
                raise ValueError(f"atom index out of range in {a}")
            if a.level < 1:
                raise ValueError("atom level must be positive")
        for c in consts:
            if not (1 <= c.i <= n):
                raise ValueError(f"constant index {c.i} out of range")
        return cls(n, tuple(sorted(set(phis), key=lambda a: (a.i, a.j, a.level))),
                   tuple(sorted(set(consts), key=lambda c: (c.i, c.value.sort_key()))))


def equations_of(d: PreSpecialDatum) -> EquationSystem:
    """Full defining system: one constant atom per pi0 entry, one modular
    atom per in-block pair (the complete pairwise set, not just a tree)."""
    _require_valid(d)
    consts = [ConstEq(i, v) for i, v in d.pi0]
    phis = []
    for b in d.blocks:
        idx = sorted(b.indices)
        for s in range(len(idx)):
            for t in range(s + 1, len(idx)):
                phis.append(PhiEq.make(level(d.gamma_between(idx[s], idx[t])), idx[s], idx[t]))
    return EquationSystem.build(d.n, phis, consts)


@dataclass(frozen=True)
class SpecialVariety:
    """A canonical-form datum with its kind flag."""

    datum: PreSpecialDatum
    kind: str  # "special" | "weakly-special"

    @property
    def n(self) -> int:
        return self.datum.n

    def sort_key(self):
        return _datum_key(self.datum)


def _datum_key(d: PreSpecialDatum):
    return (
        d.n,
        tuple((i, v.sort_key()) for i, v in d.pi0),
        tuple((b.indices, b.base, tuple((i, m.entries()) for i, m in b.gamma)) for b in d.blocks),
    )


ComponentSet = tuple  # of SpecialVariety, sorted and pairwise distinct


_CANON_CACHE: dict[tuple, tuple] = {}


def _canonical_block(b: Block) -> Block:
    """Re-root at the least index and lex-minimize the coset tuple over the
    simultaneous right SL2(Z/L) twist, L = lcm of the member levels."""
    base = min(b.indices)
    root_inv = b.gamma_of(base).to_rat().inverse()
    rooted: dict[int, PrimIntMat2] = {}
    for i in b.indices:
        rooted[i] = primitive_integral_form(b.gamma_of(i).to_rat() * root_inv)[0]
    others = [i for i in sorted(b.indices) if i != base]
    if not others:
        return Block.build(b.indices, base, {base: SL2Z_IDENTITY})
    sig = tuple(coset_normal_form(rooted[i])[0].key() for i in others)
    cached = _CANON_CACHE.get(sig)
    if cached is None:
        lmod = lcm(*[rooted[i].det for i in others])
        if sl2_group_order(lmod) > TWIST_ITERATION_LIMIT:
            raise ResourceLimitError(
                f"right-twist canonicalization over SL2(Z/{lmod}) exceeds the iteration limit")
        # Per-coordinate lookup: the coset of rooted[i] * eps only depends on
        # eps mod level(rooted[i]).
        tables = []
        for i in others:
            li = rooted[i].det
            tbl = {}
            for key, eps in sl2z_lifts(li).items():
                tbl[key] = coset_normal_form(mul_prim(rooted[i], eps))[0].key()
            tables.append((li, tbl))
        best = None
        for key, eps in sl2z_lifts(lmod).items():
            cand = tuple(
                tbl[tuple(v % li for v in eps.entries())] if li > 1 else tbl[(0, 0, 0, 0)]
                for li, tbl in tables
            )
            if best is None or cand < best:
                best = cand
        cached = best
        _CANON_CACHE[sig] = cached
    gamma = {base: SL2Z_IDENTITY}
    for i, key in zip(others, cached):
        a, bb, dd = key
        gamma[i] = PrimIntMat2(a, bb, 0, dd)
    return Block.build(b.indices, base, gamma)


def canonicalize(d: PreSpecialDatum) -> SpecialVariety:
    """Canonical form: reduced constants, least-index bases, Hecke-normal
    and right-minimized block matrices.  Idempotent by construction."""
    _require_valid(d)
    blocks = tuple(sorted((_canonical_block(b) for b in d.blocks), key=lambda b: min(b.indices)))
    datum = PreSpecialDatum(d.n, d.pi0, blocks)
    kind = "special" if all(v.is_cm for _, v in d.pi0) else "weakly-special"
    return SpecialVariety(datum, kind)


def equal(x: SpecialVariety, y: SpecialVariety) -> bool:
    if x.n != y.n:
        raise ValueError("arity mismatch")
    return x.datum == y.datum


def contains(x: SpecialVariety, y: SpecialVariety) -> bool:
    """Whether y is a subset of x, decided equation by equation.

    Every constant of x must literally hold on y, and every modular atom of
    x must hold identically on y's parameterization: on constants as an
    exact ground check, inside a block as equality of linking levels, and
    never across independent blocks.
    """
    if x.n != y.n:
        raise ValueError("arity mismatch")
    ysys = y.datum
    pi0 = ysys.pi0_map()
    for i, v in x.datum.pi0:
        if pi0.get(i) != v:
            return False
    xeq = equations_of(x.datum)
    for atom in xeq.phis:
        i, j, l = atom.i, atom.j, atom.level
        if i in pi0 and j in pi0:
            if not ground_phi_holds(l, pi0[i], pi0[j]):
                return False
        elif i in pi0 or j in pi0:
            return False  # a constant cannot be linked to a free coordinate identically
        else:
            bi, bj = ysys.block_of(i), ysys.block_of(j)
            if bi is None or bi is not bj:
                return False
            if level(ysys.gamma_between(i, j)) != l:
                return False
    return True


def project(d: PreSpecialDatum, drop: int) -> PreSpecialDatum:
    """Image datum after deleting one coordinate; exact on point sets.

    Output coordinate k names input coordinate k for k < drop and k+1
    otherwise.  Constant coordinates are deleted, singleton blocks removed,
    and larger blocks restricted (re-rooting if the base was dropped).
    """
    _require_valid(d)
    if d.n == 1:
        raise ValueError("cannot project an arity-1 datum; emptiness is a sentence-level question")
    if not (1 <= drop <= d.n):
        raise ValueError(f"coordinate {drop} out of range")

    def ren(i: int) -> int:
        return i if i < drop else i - 1

    pi0 = {ren(i): v for i, v in d.pi0 if i != drop}
    blocks = []
    for b in d.blocks:
        if drop not in b.indices:
            blocks.append(Block.build([ren(i) for i in b.indices], ren(b.base),
                                      {ren(i): m for i, m in b.gamma}))
            continue
        rest = [i for i in b.indices if i != drop]
        if not rest:
            continue  # singleton block vanishes
        if b.base != drop:
            blocks.append(Block.build([ren(i) for i in rest], ren(b.base),
                                      {ren(i): b.gamma_of(i) for i in rest}))
        else:
            nb = min(rest)
            inv = b.gamma_of(nb).to_rat().inverse()
            gamma = {ren(i): primitive_integral_form(b.gamma_of(i).to_rat() * inv)[0] for i in rest}
            blocks.append(Block.build([ren(i) for i in rest], ren(nb), gamma))
    return PreSpecialDatum.build(d.n - 1, pi0, blocks)


DEFAULT_ORBIT_BASE = ("0.31830988618379067", "1.3678794411714423")  # (1/pi, 1 + 1/e)


def _orbit_base_mpc():
    return mpmath.mpc(mpmath.mpf(DEFAULT_ORBIT_BASE[0]), mpmath.mpf(DEFAULT_ORBIT_BASE[1]))


def parameterize_numeric(d: PreSpecialDatum, sample: dict[int, UHPQuadPoint],
                         precision_bits: int = 512, orbit_base=None):
    """Numeric coordinates of the point determined by one sample per block.

    Blocks are keyed by their least index.  Constant coordinates evaluate
    their name; block coordinates push the block sample through the rooted
    matrix exactly and evaluate j afterwards.  Orbit names are anchored at a
    fixed (documented) transcendental-looking base point.
    """
    from .modpoly import BigComplex, j_numeric

    _require_valid(d)
    values: dict[int, BigComplex] = {}
    with mpmath.workprec(precision_bits + 64):
        base_z = orbit_base.mpc if orbit_base is not None else _orbit_base_mpc()
        for i, v in d.pi0:
            if v.is_cm:
                values[i] = j_numeric(v.cm.tau(), precision_bits)
            else:
                m = v.orb
                z = (m.a * base_z + m.b) / (m.c * base_z + m.d)
                values[i] = j_numeric(BigComplex.from_mpc(z, precision_bits), precision_bits)
        for b in d.blocks:
            key = min(b.indices)
            if key not in sample:
                raise ValueError(f"missing sample for block rooted at coordinate {key}")
            tau = sample[key]
            for i in b.indices:
                g = b.gamma_of(i).to_rat() * b.gamma_of(key).to_rat().inverse()
                m = primitive_integral_form(g)[0]
                values[i] = j_numeric(tau.transform(*m.entries()), precision_bits)
    return tuple(values[i] for i in range(1, d.n + 1))


def equation_residuals(d: PreSpecialDatum, values, precision_bits: int = 512,
                       lmax: int = 10) -> list:
    """Normalized residual of every defining equation at the given values."""
    from .modpoly import modular_polynomial

    sysm = equations_of(d)
    out = []
    with mpmath.workprec(precision_bits + 64):
        for atom in sysm.phis:
            phi = modular_polynomial(atom.level, lmax=lmax)
            vi, vj = values[atom.i - 1].mpc, values[atom.j - 1].mpc
            res = abs(phi.evaluate(vi, vj)) / (1 + abs(vi)) ** phi.psi
            out.append(res)
        for c in sysm.consts:
            out.append(abs(values[c.i - 1].mpc - _constant_numeric(c.value, precision_bits)) /
                       (1 + abs(values[c.i - 1].mpc)))
    return out


def _constant_numeric(v: ConstantValue, precision_bits: int):
    from .modpoly import BigComplex, j_numeric

    if v.is_cm:
        return j_numeric(v.cm.tau(), precision_bits).mpc
    base_z = _orbit_base_mpc()
    m = v.orb
    z = (m.a * base_z + m.b) / (m.c * base_z + m.d)
    return j_numeric(BigComplex.from_mpc(z, precision_bits), precision_bits).mpc


def _check_atoms_on_values(values: dict[int, ConstantValue], phis, consts) -> bool:
    for atom in phis:
        if atom.i in values and atom.j in values:
            if not ground_phi_holds(atom.level, values[atom.i], values[atom.j]):
                return False
    for c in consts:
        if c.i in values and values[c.i] != c.value:
            return False
    return True


def _twist_guard(modulus: int, extra: int = 1) -> None:
    if sl2_group_order(modulus) * extra > TWIST_ITERATION_LIMIT:
        raise ResourceLimitError(
            f"twist enumeration over SL2(Z/{modulus}) ({sl2_group_order(modulus)} classes"
            f" x {extra} candidates) exceeds the iteration limit")


def _anchored_specializations(group, gamma, anchor_idx, anchor_value, phis, consts):
    """Zero-dimensional solutions of a block whose anchor coordinate is pinned.

    Every solution lifts to tau = h_w^-1 eps tau_anchor, and the coordinate
    names only depend on eps modulo the lcm of the rooted levels, so the
    finite twist enumeration is exhaustive.
    """
    winv = gamma[anchor_idx].to_rat().inverse()
    rooted = {i: primitive_integral_form(gamma[i].to_rat() * winv)[0] for i in group}
    lmod = lcm(*[m.det for m in rooted.values()])
    _twist_guard(lmod)
    seen = set()
    out = []
    for eps in sl2z_lifts(lmod).values():
        values: dict[int, ConstantValue] = {}
        for i in group:
            m = mul_prim(rooted[i], eps)
            if anchor_value.is_cm:
                tau = anchor_value.cm.tau()
                values[i] = ConstantValue.of_cm(cm_id_of(tau.transform(*m.entries())))
            else:
                values[i] = ConstantValue.of_orbit(m.to_rat() * anchor_value.orb.to_rat())
        key = tuple(sorted((i, v.sort_key()) for i, v in values.items()))
        if key in seen:
            continue
        seen.add(key)
        if _check_atoms_on_values(values, phis, consts):
            out.append(values)
    return out


def _conflict_specializations(group, gamma, conflicts, phis, consts, dmax):
    """Zero-dimensional solutions forced by two distinct levels on one pair.

    At a solution some matrix delta = adj(gamma_v) N gamma_u (N primitive of
    the conflicting level m) fixes the block parameter, so the parameter is
    quadratic imaginary with |trace^2 - 4 det| <= 4 m level(gamma_u)
    level(gamma_v).  Enumerating CM points under that bound together with
    the residue twists is therefore exhaustive.
    """
    bound = min(4 * m * gamma[u].det * gamma[v].det for u, v, m in conflicts)
    if bound > dmax:
        raise ResourceLimitError(
            f"degenerate-locus search needs discriminants up to {bound}, above the configured dmax={dmax}")
    lmod = lcm(*[m.det for m in gamma.values()])
    points = enumerate_cm_points(max(bound, 3))
    _twist_guard(lmod, max(len(points), 1))
    lifts = list(sl2z_lifts(lmod).values())
    seen = set()
    out = []
    for p in points:
        tau = p.tau()
        for eps in lifts:
            values = {
                i: ConstantValue.of_cm(cm_id_of(tau.transform(*mul_prim(gamma[i], eps).entries())))
                for i in group
            }
            key = tuple(sorted((i, v.sort_key()) for i, v in values.items()))
            if key in seen:
                continue
            seen.add(key)
            if _check_atoms_on_values(values, phis, consts):
                out.append(values)
    return out


def _group_pieces(group, phis, consts_map, dmax):
    """All solution pieces for one connected constraint group.

    A piece is either ("block", Block) for a one-dimensional family or
    ("pi0", {idx: value}) for an isolated all-constant solution.
    """
    r = group[0]
    group_consts = [ConstEq(i, consts_map[i]) for i in group if i in consts_map]
    loops = [a for a in phis if a.i == a.j and a.level > 1]
    edges = [a for a in phis if a.i != a.j]
    if len(group) == 1 and not loops and not group_consts:
        return [("block", Block.build(group, r, {r: SL2Z_IDENTITY}))]

    # BFS spanning tree over the modular edges.
    adj: dict[int, list[PhiEq]] = {i: [] for i in group}
    for e in edges:
        adj[e.i].append(e)
        adj[e.j].append(e)
    tree: list[tuple[int, int, int]] = []  # (parent, child, level)
    visited = {r}
    frontier = [r]
    used = set()
    while frontier:
        nxt = []
        for u in sorted(frontier):
            for e in adj[u]:
                w = e.j if e.i == u else e.i
                if w not in visited:
                    visited.add(w)
                    tree.append((u, w, e.level))
                    used.add(id(e))
                    nxt.append(w)
        frontier = nxt
    assert visited == set(group)
    extra = [e for e in edges if id(e) not in used] + loops

    pieces = []
    seen_keys = set()
    for assignment in product(*[hecke_representatives(l) for _, _, l in tree]):
        gamma: dict[int, PrimIntMat2] = {r: SL2Z_IDENTITY}
        for (parent, child, _), rep in zip(tree, assignment):
            gamma[child] = mul_prim(rep.to_prim(), gamma[parent])
        conflicts = []
        for e in extra:
            got = 1 if e.i == e.j else level(gamma[e.j].to_rat() * gamma[e.i].to_rat().inverse())
            if got != e.level:
                conflicts.append((e.i, e.j, e.level))
        if group_consts:
            anchor = group_consts[0]
            sols = _anchored_specializations(group, gamma, anchor.i, anchor.value, phis, group_consts)
            for values in sols:
                key = ("pi0", tuple(sorted((i, v.sort_key()) for i, v in values.items())))
                if key not in seen_keys:
                    seen_keys.add(key)
                    pieces.append(("pi0", values))
        elif conflicts:
            for values in _conflict_specializations(group, gamma, conflicts, phis, group_consts, dmax):
                key = ("pi0", tuple(sorted((i, v.sort_key()) for i, v in values.items())))
                if key not in seen_keys:
                    seen_keys.add(key)
                    pieces.append(("pi0", values))
        else:
            block = _canonical_block(Block.build(group, r, gamma))
            key = ("block", _datum_key(PreSpecialDatum.build(max(group), {}, [block])))
            if key not in seen_keys:
                seen_keys.add(key)
                pieces.append(("block", block))
    return pieces


def components_of(s: EquationSystem, lmax: int = 7, nmax: int = 4, dmax: int = 20000) -> ComponentSet:
    """Decompose an atomic system into its canonical components.

    The union of the returned components' points equals the solution set of
    the system.  Resource bounds are enforced up front; degenerate loci may
    additionally require discriminant searches within dmax.
    """
    if s.n > nmax:
        raise ResourceLimitError(f"arity {s.n} exceeds the configured bound nmax={nmax}")
    for a in s.phis:
        if a.level > lmax:
            raise ResourceLimitError(f"atom level {a.level} exceeds the configured bound lmax={lmax}")

    consts_map: dict[int, ConstantValue] = {}
    for c in s.consts:
        if c.i in consts_map and consts_map[c.i] != c.value:
            return ()
        consts_map[c.i] = c.value
    # A level-1 self-relation is trivially true; drop it.
    phis = [a for a in s.phis if not (a.i == a.j and a.level == 1)]

    parent = {i: i for i in range(1, s.n + 1)}

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a in phis:
        ri, rj = find(a.i), find(a.j)
        if ri != rj:
            parent[ri] = rj
    groups: dict[int, list[int]] = {}
    for i in range(1, s.n + 1):
        groups.setdefault(find(i), []).append(i)

    per_group = []
    for g in sorted(groups.values()):
        g = tuple(sorted(g))
        gphis = [a for a in phis if a.i in g]
        per_group.append(_group_pieces(g, gphis, consts_map, dmax))
        if not per_group[-1]:
            return ()

    out = {}
    for combo in product(*per_group):
        pi0: dict[int, ConstantValue] = {}
        blocks: list[Block] = []
        for kind, payload in combo:
            if kind == "pi0":
                pi0.update(payload)
            else:
                blocks.append(payload)
        variety = canonicalize(PreSpecialDatum.build(s.n, pi0, blocks))
        out[variety.sort_key()] = variety
    return tuple(out[k] for k in sorted(out))


def intersect(x: SpecialVariety, y: SpecialVariety, lmax: int = 7, nmax: int = 4,
              dmax: int = 20000) -> ComponentSet:
    """Components of the intersection: decompose the union of the defining
    systems, then keep the components contained in both inputs."""
    if x.n != y.n:
        raise ValueError("arity mismatch")
    ex, ey = equations_of(x.datum), equations_of(y.datum)
    merged = EquationSystem.build(x.n, ex.phis + ey.phis, ex.consts + ey.consts)
    comps = components_of(merged, lmax=lmax, nmax=nmax, dmax=dmax)
    return tuple(z for z in comps if contains(x, z) and contains(y, z))


def datum_to_json(d: PreSpecialDatum) -> dict:
    return {
        "n": d.n,
        "pi0": {str(i): v.to_json() for i, v in d.pi0},
        "blocks": [
            {
                "indices": list(b.indices),
                "base": b.base,
                "gamma": {str(i): matrix_to_json(m) for i, m in b.gamma},
            }
            for b in d.blocks
        ],
    }


def datum_from_json(obj) -> PreSpecialDatum:
    pi0 = {int(k): ConstantValue.from_json(v) for k, v in obj.get("pi0", {}).items()}
    blocks = []
    for bo in obj.get("blocks", []):
        gamma = {}
        for k, rows in bo["gamma"].items():
            m, scale = primitive_integral_form(matrix_from_json(rows))
            gamma[int(k)] = m
        blocks.append(Block.build(bo["indices"], bo["base"], gamma))
    return PreSpecialDatum.build(obj["n"], pi0, blocks)


def component_set_to_json(comps: ComponentSet) -> list:
    return [datum_to_json(v.datum) for v in comps]
