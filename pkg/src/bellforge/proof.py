"""Proof certificates for algebraic Bell-CH inequalities.

A certificate is a binary tree.  A split node picks one variable ``v``;
the expression is affine in ``v``, so on the box it never exceeds the
larger of its two restrictions ``v = bound`` and ``v = 0``, and it is
enough to prove both.  A leaf shows that the expression *is* a
non-negative combination of terms that are non-positive on the box:

==========  ===================  ================
kind        term                 sign on the box
==========  ===================  ================
NEG_XY      ``-x_i y_j``         <= 0
X_YMB       ``x_i (y_j - B)``    <= 0
XMA_Y       ``(x_i - A) y_j``    <= 0
NEG_AB      ``-A B``             <= 0
==========  ===================  ================

Every check is exact rational arithmetic; nothing here has a tolerance.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .expr import BellExpression, ExpressionError, Form, Party, split_branches, to_fraction
from .lhv import is_valid_bellch
from .simplex import nonneg_solution


class TermKind(str, enum.Enum):
    NEG_XY = "NEG_XY"
    X_YMB = "X_YMB"
    XMA_Y = "XMA_Y"
    NEG_AB = "NEG_AB"


@dataclass(frozen=True)
class PositivityTerm:
    kind: TermKind
    i: int = 0
    j: int = 0
    coeff: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "kind", TermKind(self.kind))
        object.__setattr__(self, "coeff", to_fraction(self.coeff))

    def expression(self, m: int, n: int) -> BellExpression:
        """``coeff`` times the generator, as an ``m x n`` algebraic expression."""
        joint = [[Fraction(0)] * n for _ in range(m)]
        mx, my = [Fraction(0)] * m, [Fraction(0)] * n
        const = Fraction(0)
        c = self.coeff
        if self.kind is TermKind.NEG_AB:
            const = -c
        else:
            if not (0 <= self.i < m and 0 <= self.j < n):
                raise ExpressionError(f"term indices ({self.i}, {self.j}) out of range for {m}x{n}")
            if self.kind is TermKind.NEG_XY:
                joint[self.i][self.j] = -c
            elif self.kind is TermKind.X_YMB:
                joint[self.i][self.j] = c
                mx[self.i] = -c
            else:
                joint[self.i][self.j] = c
                my[self.j] = -c
        return BellExpression.from_coeffs(joint, mx, my, const)

    def __str__(self):
        i, j, c = self.i + 1, self.j + 1, self.coeff
        body = {
            TermKind.NEG_XY: f"-x{i}*y{j}",
            TermKind.X_YMB: f"x{i}*(y{j}-B)",
            TermKind.XMA_Y: f"(x{i}-A)*y{j}",
            TermKind.NEG_AB: "-A*B",
        }[self.kind]
        return body if c == 1 else f"{c}*[{body}]"


@dataclass(frozen=True)
class Leaf:
    terms: tuple[PositivityTerm, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))


@dataclass(frozen=True)
class Split:
    party: Party
    index: int
    pivot: tuple[tuple[int, Fraction], ...]
    hi: "Certificate"
    lo: "Certificate"

    def __post_init__(self):
        object.__setattr__(self, "party", Party(self.party))
        object.__setattr__(self, "pivot", tuple((int(k), to_fraction(c)) for k, c in self.pivot))


Certificate = Union[Leaf, Split]


def depth(cert: Certificate) -> int:
    if isinstance(cert, Leaf):
        return 0
    return 1 + max(depth(cert.hi), depth(cert.lo))


def leaves(cert: Certificate) -> list[Leaf]:
    if isinstance(cert, Leaf):
        return [cert]
    return leaves(cert.hi) + leaves(cert.lo)


def pivot_of(expr: BellExpression, party: Party, index: int) -> tuple[tuple[int, Fraction], ...]:
    """Non-zero joint coefficients of a variable, over the other party's indices."""
    return tuple((k, c) for k, c in enumerate(expr.column(party, index)) if c)


@dataclass(frozen=True)
class Verdict:
    ok: bool
    path: str = ""
    reason: str = ""

    def __bool__(self):
        return self.ok


def verify(expr: BellExpression, cert: Certificate) -> Verdict:
    """Check that ``cert`` proves ``expr <= 0`` on the box.

    Returns a truthy :class:`Verdict` on success; on rejection the verdict
    is falsy and names the offending node (``root``, ``root.hi.lo``, ...).
    """
    if expr.form_tag is not Form.ALGEBRAIC:
        return Verdict(False, "root", "certificates prove algebraic-form expressions only")
    return _verify(expr, cert, "root", expr.m + expr.n)


def _verify(expr, cert, path, budget) -> Verdict:
    if isinstance(cert, Leaf):
        total = BellExpression.zeros(expr.m, expr.n)
        for t in cert.terms:
            if t.coeff < 0:
                return Verdict(False, path, f"negative coefficient {t.coeff} on {t.kind.value}")
            try:
                total = total + t.expression(expr.m, expr.n)
            except ExpressionError as exc:
                return Verdict(False, path, str(exc))
        if not (expr - total).is_zero():
            return Verdict(False, path, "expression differs from the stated combination of terms")
        return Verdict(True)
    if not isinstance(cert, Split):
        return Verdict(False, path, f"unknown node type {type(cert).__name__}")
    if budget <= 0:
        return Verdict(False, path, "certificate deeper than m + n")
    size = expr.m if cert.party is Party.X else expr.n
    if not 0 <= cert.index < size:
        return Verdict(False, path, f"split index {cert.index} out of range")
    expected = pivot_of(expr, cert.party, cert.index)
    if tuple(cert.pivot) != expected:
        return Verdict(False, path, f"pivot {format_pivot(cert.pivot)} does not match column {format_pivot(expected)}")
    hi, lo = split_branches(expr, cert.party, cert.index)
    v = _verify(hi, cert.hi, path + ".hi", budget - 1)
    if not v:
        return v
    return _verify(lo, cert.lo, path + ".lo", budget - 1)


def format_pivot(pivot) -> str:
    return "[" + ", ".join(f"{k}:{c}" for k, c in pivot) + "]"


def _generator_columns(m: int, n: int):
    kinds = []
    for i in range(m):
        for j in range(n):
            for kind in (TermKind.NEG_XY, TermKind.X_YMB, TermKind.XMA_Y):
                kinds.append((kind, i, j))
    kinds.append((TermKind.NEG_AB, 0, 0))
    return kinds


def cone_member(expr: BellExpression, method: str = "flow") -> list[PositivityTerm] | None:
    """Write ``expr`` as a non-negative combination of positivity terms.

    Returns the terms with non-zero weight, or ``None`` when no such
    combination exists.  Two exact routes are available:

    ``"simplex"``
        phase-one simplex on the full coefficient-matching system (one
        equation per joint, marginal and constant slot).
    ``"flow"``
        the same system is a covering problem: each positive joint
        coefficient must be paid for by its row budget ``-marg_x[i]``
        (``X_YMB`` terms) or its column budget ``-marg_y[j]`` (``XMA_Y``
        terms); overshoot is absorbed by ``NEG_XY`` and a negative constant
        by ``NEG_AB``.  Solved by augmenting paths.
    """
    if expr.form_tag is not Form.ALGEBRAIC:
        raise ExpressionError("cone_member needs algebraic form")
    if method == "flow":
        return _cone_flow(expr)
    if method == "simplex":
        return _cone_simplex(expr)
    raise ValueError(f"unknown method {method!r}")


def _cone_simplex(expr):
    m, n = expr.shape
    gens = _generator_columns(m, n)
    n_slots = m * n + m + n + 1
    M = [[0] * len(gens) for _ in range(n_slots)]
    for col, (kind, i, j) in enumerate(gens):
        if kind is TermKind.NEG_AB:
            M[n_slots - 1][col] = -1
            continue
        M[i * n + j][col] = -1 if kind is TermKind.NEG_XY else 1
        if kind is TermKind.X_YMB:
            M[m * n + i][col] = -1
        elif kind is TermKind.XMA_Y:
            M[m * n + m + j][col] = -1
    rhs = [c for row in expr.joint for c in row] + list(expr.marg_x) + list(expr.marg_y) + [expr.const_term]
    sol = nonneg_solution(M, rhs)
    if sol is None:
        return None
    return [PositivityTerm(kind, i, j, c) for (kind, i, j), c in zip(gens, sol) if c]


def _cone_flow(expr):
    m, n = expr.shape
    if expr.const_term > 0 or any(c > 0 for c in expr.marg_x) or any(c > 0 for c in expr.marg_y):
        return None
    row_cap = [-c for c in expr.marg_x]
    col_cap = [-c for c in expr.marg_y]
    demand = {(i, j): expr.joint[i][j] for i in range(m) for j in range(n) if expr.joint[i][j] > 0}
    if sum(demand.values()) > sum(row_cap) + sum(col_cap):
        return None
    # flows into each demand cell from its row and from its column
    from_row = {cell: Fraction(0) for cell in demand}
    from_col = {cell: Fraction(0) for cell in demand}
    row_left, col_left = list(row_cap), list(col_cap)
    for cell in demand:
        need = demand[cell]
        while need > 0:
            path = _augmenting_path(cell, demand, from_row, from_col, row_left, col_left)
            if path is None:
                return None
            amount = min(need, path[0])
            _push(path[1], amount, from_row, from_col, row_left, col_left)
            need -= amount
    P = [[Fraction(0)] * n for _ in range(m)]
    Q = [[Fraction(0)] * n for _ in range(m)]
    for (i, j), f in from_row.items():
        P[i][j] += f
    for (i, j), f in from_col.items():
        Q[i][j] += f
    # unused budget still has to appear; park it on the first column / row
    for i in range(m):
        P[i][0] += row_left[i]
    for j in range(n):
        Q[0][j] += col_left[j]
    terms = []
    for i in range(m):
        for j in range(n):
            neg = P[i][j] + Q[i][j] - expr.joint[i][j]
            for kind, c in ((TermKind.NEG_XY, neg), (TermKind.X_YMB, P[i][j]), (TermKind.XMA_Y, Q[i][j])):
                if c:
                    terms.append(PositivityTerm(kind, i, j, c))
    if expr.const_term:
        terms.append(PositivityTerm(TermKind.NEG_AB, 0, 0, -expr.const_term))
    return terms


def _augmenting_path(target, demand, from_row, from_col, row_left, col_left):
    """BFS from a demand cell back to a row or column with spare budget.

    Nodes are ``("r", i)`` and ``("c", j)``.  A cell can be fed by its row
    or column; a row already feeding another cell can hand that cell over
    to the cell's column (and vice versa), freeing budget.  Returns
    ``(bottleneck, edges)`` or ``None``.
    """
    i0, j0 = target
    start = [("r", i0), ("c", j0)]
    parent = {node: None for node in start}
    queue = list(start)
    k = 0
    while k < len(queue):
        node = queue[k]
        k += 1
        kind, idx = node
        left = row_left[idx] if kind == "r" else col_left[idx]
        if left > 0:
            # walk back: each hop hands a cell from ``prev`` over to ``cur``
            edges = []
            cap = left
            cur = node
            while parent[cur] is not None:
                prev, cell = parent[cur]
                cap = min(cap, _feed(prev, cell, from_row, from_col))
                edges.append((cur, prev, cell))
                cur = prev
            edges.append((cur, None, target))
            return cap, edges
        # this row/column could release flow it sends to some cell, if that
        # cell's other side takes it over
        for cell in demand:
            if kind == "r" and cell[0] == idx and from_row[cell] > 0:
                nxt = ("c", cell[1])
            elif kind == "c" and cell[1] == idx and from_col[cell] > 0:
                nxt = ("r", cell[0])
            else:
                continue
            if nxt not in parent:
                parent[nxt] = (node, cell)
                queue.append(nxt)
    return None


def _feed(node, cell, from_row, from_col):
    return from_row[cell] if node[0] == "r" else from_col[cell]


def _push(edges, amount, from_row, from_col, row_left, col_left):
    for cur, prev, cell in edges:
        side = from_row if cur[0] == "r" else from_col
        side[cell] += amount
        if prev is not None:
            other = from_row if prev[0] == "r" else from_col
            other[cell] -= amount
    holder = edges[0][0]
    if holder[0] == "r":
        row_left[holder[1]] -= amount
    else:
        col_left[holder[1]] -= amount


def split_candidates(expr: BellExpression) -> list[tuple[Party, int]]:
    """Variables worth splitting on, most promising first.

    Order: mixed-sign joint coefficients first, then fewer non-zero
    coefficients, then y before x (column splits before row splits), then
    index.  Variables with no coefficient at all are skipped.
    """
    scored = []
    for party, idx in expr.variables():
        col = expr.column(party, idx)
        marg = expr.marg_x[idx] if party is Party.X else expr.marg_y[idx]
        nnz = sum(1 for c in col if c)
        if nnz == 0 and not marg:
            continue
        mixed = any(c > 0 for c in col) and any(c < 0 for c in col)
        scored.append(((0 if mixed else 1, nnz, 0 if party is Party.Y else 1, idx), (party, idx)))
    scored.sort(key=lambda s: s[0])
    return [v for _, v in scored]


def search(expr: BellExpression, max_depth: int | None = None, prune_invalid: bool = True) -> Certificate | None:
    """Look for a certificate of ``expr <= 0``; ``None`` means not found.

    At every node the leaf test (cone membership) comes first.  Otherwise
    the split candidates are tried in :func:`split_candidates` order with
    backtracking, and the first one whose two branches can both be proved
    wins.  Each branch gets its shallowest proof (iterative deepening), so
    the pivot choice is the deterministic lowest-ordered one while the
    subtrees stay compact.  ``prune_invalid`` abandons sub-expressions
    with a positive vertex maximum, which cannot be certified anyway.
    """
    if expr.form_tag is not Form.ALGEBRAIC:
        raise ExpressionError("search needs algebraic form")
    if max_depth is None:
        max_depth = expr.m + expr.n
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    return _Searcher(prune_invalid).dfs(expr, min(max_depth, expr.m + expr.n))


class _Searcher:
    def __init__(self, prune: bool):
        self.prune = prune
        self.memo: dict = {}
        self.leaf_memo: dict = {}
        self.valid_memo: dict = {}

    def leaf(self, expr):
        key = expr.key()
        if key not in self.leaf_memo:
            terms = cone_member(expr)
            self.leaf_memo[key] = None if terms is None else Leaf(tuple(terms))
        return self.leaf_memo[key]

    def hopeless(self, expr):
        if not self.prune:
            return False
        key = expr.key()
        if key not in self.valid_memo:
            self.valid_memo[key] = is_valid_bellch(expr)
        return not self.valid_memo[key]

    def shallowest(self, expr, budget):
        for d in range(budget + 1):
            cert = self.dfs(expr, d)
            if cert is not None:
                return cert
        return None

    def dfs(self, expr, budget):
        key = (expr.key(), budget)
        if key in self.memo:
            return self.memo[key]
        result = self.leaf(expr)
        if result is None and budget > 0 and not self.hopeless(expr):
            for party, idx in split_candidates(expr):
                hi, lo = split_branches(expr, party, idx)
                hi_cert = self.shallowest(hi, budget - 1)
                if hi_cert is None:
                    continue
                lo_cert = self.shallowest(lo, budget - 1)
                if lo_cert is None:
                    continue
                result = Split(party, idx, pivot_of(expr, party, idx), hi_cert, lo_cert)
                break
        self.memo[key] = result
        return result


# --- serialization -----------------------------------------------------------

def cert_to_dict(cert: Certificate) -> dict:
    if isinstance(cert, Leaf):
        return {"type": "leaf",
                "terms": [{"kind": t.kind.value, "i": t.i, "j": t.j, "coeff": str(t.coeff)} for t in cert.terms]}
    return {"type": "split", "party": cert.party.value, "index": cert.index,
            "pivot": [[k, str(c)] for k, c in cert.pivot],
            "hi": cert_to_dict(cert.hi), "lo": cert_to_dict(cert.lo)}


def cert_from_dict(d: dict) -> Certificate:
    try:
        if d["type"] == "leaf":
            return Leaf(tuple(PositivityTerm(t["kind"], int(t.get("i", 0)), int(t.get("j", 0)), to_fraction(t["coeff"]))
                              for t in d["terms"]))
        if d["type"] == "split":
            return Split(Party(d["party"]), int(d["index"]),
                         tuple((int(k), to_fraction(c)) for k, c in d["pivot"]),
                         cert_from_dict(d["hi"]), cert_from_dict(d["lo"]))
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed certificate node: {exc}") from exc
    raise ValueError(f"unknown certificate node type {d.get('type')!r}")


def dumps(cert: Certificate) -> str:
    return json.dumps(cert_to_dict(cert), indent=2) + "\n"


def loads(text: str) -> Certificate:
    return cert_from_dict(json.loads(text))


def render(cert: Certificate, indent: str = "") -> str:
    """Indented text view of a certificate."""
    if isinstance(cert, Leaf):
        body = " + ".join(str(t) for t in cert.terms) or "0"
        return f"{indent}leaf: {body}\n"
    var = f"{'x' if cert.party is Party.X else 'y'}{cert.index + 1}"
    out = f"{indent}split {var} on pivot {format_pivot(cert.pivot)}\n"
    out += f"{indent}  {var} -> bound:\n" + render(cert.hi, indent + "    ")
    out += f"{indent}  {var} -> 0:\n" + render(cert.lo, indent + "    ")
    return out
