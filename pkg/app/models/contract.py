# app/models/contract.py
"""
Contract AST.

Nodes are frozen dataclasses so a parsed contract can be shared freely between
services. Source positions never take part in equality, which keeps
pretty-print round trips structurally comparable.
"""
from dataclasses import dataclass, field
from typing import Iterator, Optional, Tuple, Union


# ============= EXPRESSIONS =============

@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class Name:
    """Numeric variable, id variable, or (in objectives) a party literal"""
    name: str


@dataclass(frozen=True)
class Caller:
    pass


@dataclass(frozen=True)
class Null:
    pass


@dataclass(frozen=True)
class MapAccess:
    map: str
    index: Union[Name, Caller]


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Compare:
    op: str  # < > <= >= == !=
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class BoolOp:
    op: str  # and / or
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class Payoff:
    """The (p+ - p-) term of an objective"""


Expr = Union[IntLit, Name, Caller, Null, MapAccess, BinOp, Compare, BoolOp, Not, Payoff]
PartyExpr = Union[Name, Caller, Null]
Target = Union[Name, MapAccess]


# ============= STATEMENTS =============

@dataclass(frozen=True)
class Assign:
    target: Target
    value: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Payout:
    party: PartyExpr
    amount: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Return:
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class If:
    cond: Expr
    then_body: Tuple["Stmt", ...]
    else_body: Optional[Tuple["Stmt", ...]] = None
    line: int = field(default=0, compare=False)


Stmt = Union[Assign, Payout, Return, If]


# ============= DECLARATIONS =============

@dataclass(frozen=True)
class NumericDecl:
    name: str
    lo: int
    hi: int
    init: int
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class MapDecl:
    name: str
    lo: int
    hi: int
    init: int
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class IdDecl:
    name: str
    init: Optional[str]  # party literal, None for null
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Param:
    target: Target
    designator: Union[Name, Caller]
    payable: bool = False
    default: Optional[int] = None


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    tlo: int
    thi: int
    params: Tuple[Param, ...]
    body: Tuple[Stmt, ...]
    line: int = field(default=0, compare=False)

    @property
    def is_multi_party(self) -> bool:
        return any(not isinstance(p.designator, Caller) for p in self.params)


@dataclass(frozen=True)
class ContractAst:
    name: str
    numerics: Tuple[NumericDecl, ...]
    ids: Tuple[IdDecl, ...]
    maps: Tuple[MapDecl, ...]
    functions: Tuple[FunctionDecl, ...]

    @property
    def t_max(self) -> int:
        return max(f.thi for f in self.functions)

    def numeric(self, name: str) -> Optional[NumericDecl]:
        return next((d for d in self.numerics if d.name == name), None)

    def id_var(self, name: str) -> Optional[IdDecl]:
        return next((d for d in self.ids if d.name == name), None)

    def map_var(self, name: str) -> Optional[MapDecl]:
        return next((d for d in self.maps if d.name == name), None)

    def function(self, name: str) -> Optional[FunctionDecl]:
        return next((f for f in self.functions if f.name == name), None)

    def party_literals(self) -> Tuple[str, ...]:
        seen = []
        for decl in self.ids:
            if decl.init is not None and decl.init not in seen:
                seen.append(decl.init)
        return tuple(seen)


@dataclass(frozen=True)
class Objective:
    monetary: bool
    expr: Expr
    text: str = field(default="", compare=False)


# ============= WALKERS =============

def walk_expr(expr: Expr) -> Iterator[Expr]:
    """Pre-order traversal of an expression"""
    yield expr
    if isinstance(expr, (BinOp, Compare, BoolOp)):
        yield from walk_expr(expr.left)
        yield from walk_expr(expr.right)
    elif isinstance(expr, Not):
        yield from walk_expr(expr.operand)
    elif isinstance(expr, MapAccess):
        yield from walk_expr(expr.index)


def walk_stmts(body: Tuple[Stmt, ...]) -> Iterator[Stmt]:
    for stmt in body:
        yield stmt
        if isinstance(stmt, If):
            yield from walk_stmts(stmt.then_body)
            if stmt.else_body is not None:
                yield from walk_stmts(stmt.else_body)
