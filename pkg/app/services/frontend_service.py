# app/services/frontend_service.py
import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple, Union

from lark import Lark, Transformer, Token, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, VisitError

from app.models.contract import (
    Assign, BinOp, BoolOp, Caller, Compare, ContractAst, Expr, FunctionDecl, IdDecl, If,
    IntLit, MapAccess, MapDecl, Name, Not, Null, NumericDecl, Objective, Param, Payoff,
    Payout, Return, Stmt, walk_expr,
)
from app.models.diagnostic import Diagnostic, Severity
from app.utils.errors import ConfigError, ContractSyntaxError, DuplicateDeclarationError, ObjectiveError

logger = logging.getLogger(__name__)

# ============= GRAMMAR =============

CONTRACT_GRAMMAR = r"""
start: contract
contract: "contract" NAME "{" decl+ function+ "}"

?decl: numeric_decl | map_decl | id_decl
numeric_decl: "numeric" NAME range "=" signed_int ";"
map_decl: "map" NAME range "=" signed_int ";"
id_decl: "id" NAME "=" id_init ";"
id_init: NAME | "null" -> null_init
range: "[" signed_int "," signed_int "]"
signed_int: INT | "-" INT -> negative_int

function: "function" NAME "[" INT "," INT "]" "(" params ")" "{" stmt* "}"
params: [param (","? param)*]
param: PAYABLE? target ":" designator default?
designator: NAME | "caller" -> caller_designator
default: "=" signed_int

target: NAME -> name_target
      | NAME "[" index "]" -> map_target
index: NAME -> name_index
     | "caller" -> caller_index

?stmt: if_stmt | assign | payout | return_stmt
if_stmt: "if" "(" expr ")" branch ("else" branch)?
branch: "{" stmt* "}" | stmt
assign: target "=" expr ";" -> assign
      | target "+=" expr ";" -> add_assign
      | target "-=" expr ";" -> sub_assign
payout: "payout" "(" expr "," expr ")" ";"
return_stmt: "return" ";"

objective: expr

?expr: or_expr
?or_expr: and_expr
        | or_expr "or" and_expr -> or_op
?and_expr: not_expr
         | and_expr "and" not_expr -> and_op
?not_expr: cmp_expr
         | "not" not_expr -> not_op
?cmp_expr: sum
         | sum CMP_OP sum -> compare
?sum: product
    | sum "+" product -> add
    | sum "-" product -> sub
?product: atom
        | product "*" atom -> mul
        | product "/" atom -> div
?atom: INT -> int_lit
     | "-" atom -> neg
     | NAME -> name
     | NAME "[" index "]" -> map_access
     | "caller" -> caller
     | "null" -> null
     | "payoff" -> payoff
     | "(" expr ")"

PAYABLE: "payable"
CMP_OP: "<=" | ">=" | "==" | "!=" | "<" | ">"
COMMENT: /\/\/[^\n]*/

%import common.CNAME -> NAME
%import common.INT
%import common.WS
%ignore WS
%ignore COMMENT
"""

_ARITH_OPS = {"+", "-", "*", "/"}
_PARTY_CMP_OPS = {"==", "!="}


class _AstBuilder(Transformer):
    """Turns the lark parse tree into contract AST nodes"""

    # ----- literals / expressions -----
    def int_lit(self, children):
        return IntLit(int(children[0]))

    def neg(self, children):
        operand = children[0]
        if isinstance(operand, IntLit):
            return IntLit(-operand.value)
        return BinOp("-", IntLit(0), operand)

    def name(self, children):
        return Name(str(children[0]))

    def name_index(self, children):
        return Name(str(children[0]))

    def caller_index(self, _children):
        return Caller()

    def map_access(self, children):
        return MapAccess(str(children[0]), children[1])

    def caller(self, _children):
        return Caller()

    def null(self, _children):
        return Null()

    def payoff(self, _children):
        return Payoff()

    def add(self, children):
        return BinOp("+", children[0], children[1])

    def sub(self, children):
        return BinOp("-", children[0], children[1])

    def mul(self, children):
        return BinOp("*", children[0], children[1])

    def div(self, children):
        return BinOp("/", children[0], children[1])

    def compare(self, children):
        return Compare(str(children[1]), children[0], children[2])

    def and_op(self, children):
        return BoolOp("and", children[0], children[1])

    def or_op(self, children):
        return BoolOp("or", children[0], children[1])

    def not_op(self, children):
        return Not(children[0])

    def objective(self, children):
        return children[0]

    # ----- statements -----
    def name_target(self, children):
        return Name(str(children[0]))

    def map_target(self, children):
        return MapAccess(str(children[0]), children[1])

    def branch(self, children):
        return tuple(children)

    @v_args(meta=True)
    def if_stmt(self, meta, children):
        cond, then_body = children[0], children[1]
        else_body = children[2] if len(children) > 2 else None
        return If(cond, then_body, else_body, line=meta.line)

    @v_args(meta=True)
    def assign(self, meta, children):
        return Assign(children[0], children[1], line=meta.line)

    @v_args(meta=True)
    def add_assign(self, meta, children):
        target, value = children
        return Assign(target, BinOp("+", target, value), line=meta.line)

    @v_args(meta=True)
    def sub_assign(self, meta, children):
        target, value = children
        return Assign(target, BinOp("-", target, value), line=meta.line)

    @v_args(meta=True)
    def payout(self, meta, children):
        return Payout(children[0], children[1], line=meta.line)

    @v_args(meta=True)
    def return_stmt(self, meta, _children):
        return Return(line=meta.line)

    # ----- declarations -----
    def signed_int(self, children):
        return int(children[0])

    def negative_int(self, children):
        return -int(children[0])

    def range(self, children):
        return (children[0], children[1])

    def id_init(self, children):
        return str(children[0])

    def null_init(self, _children):
        return None

    @v_args(meta=True)
    def numeric_decl(self, meta, children):
        (lo, hi) = children[1]
        return NumericDecl(str(children[0]), lo, hi, children[2], line=meta.line)

    @v_args(meta=True)
    def map_decl(self, meta, children):
        (lo, hi) = children[1]
        return MapDecl(str(children[0]), lo, hi, children[2], line=meta.line)

    @v_args(meta=True)
    def id_decl(self, meta, children):
        return IdDecl(str(children[0]), children[1], line=meta.line)

    def designator(self, children):
        return Name(str(children[0]))

    def caller_designator(self, _children):
        return Caller()

    def default(self, children):
        return children[0]

    def param(self, children):
        payable = bool(children) and isinstance(children[0], Token) and children[0].type == "PAYABLE"
        rest = children[1:] if payable else children
        default = rest[2] if len(rest) > 2 else None
        return Param(rest[0], rest[1], payable, default)

    def params(self, children):
        return tuple(c for c in children if c is not None)

    @v_args(meta=True)
    def function(self, meta, children):
        name, tlo, thi, params = str(children[0]), int(children[1]), int(children[2]), children[3]
        return FunctionDecl(name, tlo, thi, params, tuple(children[4:]), line=meta.line)

    @v_args(meta=True)
    def contract(self, meta, children):
        name = str(children[0])
        decls = [c for c in children[1:] if not isinstance(c, FunctionDecl)]
        functions = [c for c in children[1:] if isinstance(c, FunctionDecl)]

        seen: Dict[str, int] = {}
        for decl in decls:
            if decl.name in seen:
                raise DuplicateDeclarationError(
                    f"duplicate declaration of variable '{decl.name}' (first declared on line {seen[decl.name]})",
                    decl.line, 1,
                )
            seen[decl.name] = decl.line
        fn_seen: Dict[str, int] = {}
        for fn in functions:
            if fn.name in fn_seen:
                raise DuplicateDeclarationError(
                    f"duplicate declaration of function '{fn.name}'", fn.line, 1
                )
            fn_seen[fn.name] = fn.line

        return ContractAst(
            name=name,
            numerics=tuple(d for d in decls if isinstance(d, NumericDecl)),
            ids=tuple(d for d in decls if isinstance(d, IdDecl)),
            maps=tuple(d for d in decls if isinstance(d, MapDecl)),
            functions=tuple(functions),
        )

    def start(self, children):
        return children[0]


@dataclass(frozen=True)
class ValidatedContract:
    """A contract that passed validation, with any warnings it produced"""
    ast: ContractAst
    warnings: Tuple[Diagnostic, ...] = ()


# ============= TYPE CHECKING =============

class _Checker:
    """Kind checker for expressions: 'int', 'bool' or 'party'"""

    def __init__(self, ast: ContractAst, in_objective: bool = False, allow_caller: bool = True):
        self.ast = ast
        self.in_objective = in_objective
        self.allow_caller = allow_caller
        self.errors: List[str] = []

    def party_index_ok(self, index) -> bool:
        if isinstance(index, Caller):
            if not self.allow_caller:
                self.errors.append("'caller' cannot be used in a multi-party function")
            return True
        if self.ast.id_var(index.name) is not None:
            return True
        if self.in_objective and self.ast.numeric(index.name) is None and self.ast.map_var(index.name) is None:
            return True  # party literal
        self.errors.append(f"map indexed by non-id '{index.name}'")
        return False

    def kind(self, expr: Expr) -> str:
        if isinstance(expr, IntLit):
            return "int"
        if isinstance(expr, Payoff):
            if not self.in_objective:
                self.errors.append("'payoff' is only allowed in objectives")
            return "int"
        if isinstance(expr, Null):
            return "party"
        if isinstance(expr, Caller):
            if self.in_objective:
                self.errors.append("'caller' is not defined in objectives")
            elif not self.allow_caller:
                self.errors.append("'caller' cannot be used in a multi-party function")
            return "party"
        if isinstance(expr, Name):
            if self.ast.numeric(expr.name) is not None:
                return "int"
            if self.ast.id_var(expr.name) is not None:
                return "party"
            if self.ast.map_var(expr.name) is not None:
                self.errors.append(f"map '{expr.name}' used without an index")
                return "int"
            if self.in_objective:
                return "party"
            self.errors.append(f"undeclared variable '{expr.name}'")
            return "int"
        if isinstance(expr, MapAccess):
            if self.ast.map_var(expr.map) is None:
                self.errors.append(f"undeclared map '{expr.map}'")
            self.party_index_ok(expr.index)
            return "int"
        if isinstance(expr, BinOp):
            for side in (expr.left, expr.right):
                k = self.kind(side)
                if k == "party":
                    self.errors.append(f"arithmetic on a party value in '{expr.op}'")
                elif k == "bool" and not self.in_objective:
                    self.errors.append(f"boolean used as a number in '{expr.op}'")
            return "int"
        if isinstance(expr, Compare):
            left, right = self.kind(expr.left), self.kind(expr.right)
            if "party" in (left, right):
                if left != right:
                    self.errors.append("comparison between a party and a number")
                elif expr.op not in _PARTY_CMP_OPS:
                    self.errors.append(f"parties can only be compared with == or != (got '{expr.op}')")
            elif "bool" in (left, right) and not self.in_objective:
                self.errors.append("comparison of boolean values")
            return "bool"
        if isinstance(expr, BoolOp):
            for side in (expr.left, expr.right):
                if self.kind(side) != "bool" and not self.in_objective:
                    self.errors.append(f"operand of '{expr.op}' is not a condition")
            return "bool"
        if isinstance(expr, Not):
            if self.kind(expr.operand) != "bool" and not self.in_objective:
                self.errors.append("operand of 'not' is not a condition")
            return "bool"
        self.errors.append(f"unsupported expression {expr!r}")
        return "int"


def _always_returns(body: Tuple[Stmt, ...]) -> bool:
    for stmt in body:
        if isinstance(stmt, Return):
            return True
        if isinstance(stmt, If) and stmt.else_body is not None:
            if _always_returns(stmt.then_body) and _always_returns(stmt.else_body):
                return True
    return False


# ============= FRONTEND SERVICE =============

class ContractFrontend:
    """Parses, validates and pretty-prints contracts of the analyzer's DSL"""

    def __init__(self):
        self.parser = Lark(
            CONTRACT_GRAMMAR,
            start=["start", "objective"],
            parser="lalr",
            propagate_positions=True,
            maybe_placeholders=False,
        )
        self.builder = _AstBuilder()

    def _run(self, text: str, start: str):
        try:
            tree = self.parser.parse(text, start=start)
            return self.builder.transform(tree)
        except VisitError as e:
            if isinstance(e.orig_exc, ContractSyntaxError):
                raise e.orig_exc
            raise
        except UnexpectedCharacters as e:
            raise ContractSyntaxError(f"unexpected character {text[e.pos_in_stream]!r}", e.line, e.column)
        except UnexpectedEOF as e:
            lines = text.splitlines() or [""]
            raise ContractSyntaxError("unexpected end of input", len(lines), len(lines[-1]) + 1)
        except UnexpectedInput as e:
            token = getattr(e, "token", None)
            shown = f" {str(token)!r}" if token is not None else ""
            raise ContractSyntaxError(f"syntax error at{shown}", e.line, e.column)

    # ===== PARSING =====

    def parse(self, source: str) -> ContractAst:
        """Parse contract source text into an AST"""
        ast = self._run(source, "start")
        logger.debug(f"✅ Parsed contract {ast.name}: {len(ast.functions)} functions")
        return ast

    def parse_objective(self, text: str, ast: ContractAst) -> Objective:
        """Parse an objective: an optional 'payoff' term plus an expression"""
        try:
            expr = self._run(text, "objective")
        except ContractSyntaxError as e:
            raise ObjectiveError(f"objective syntax error: {e}") from e

        terms = _split_sum(expr)
        payoff_terms = [t for t in terms if isinstance(t, Payoff)]
        rest = [t for t in terms if not isinstance(t, Payoff)]
        if len(payoff_terms) > 1:
            raise ObjectiveError("'payoff' may appear only once")
        for term in rest:
            if any(isinstance(node, Payoff) for node in walk_expr(term)):
                raise ObjectiveError("'payoff' must be a top-level added term")

        remainder: Expr = IntLit(0)
        for term in rest:
            remainder = term if remainder == IntLit(0) else BinOp("+", remainder, term)

        checker = _Checker(ast, in_objective=True)
        if checker.kind(remainder) == "party":
            checker.errors.append("objective evaluates to a party, not a number")
        for node in walk_expr(remainder):
            if isinstance(node, MapAccess) and isinstance(node.index, Name) and ast.numeric(node.index.name):
                checker.errors.append(f"map indexed by non-id '{node.index.name}'")
        if checker.errors:
            raise ObjectiveError(checker.errors[0])
        return Objective(monetary=bool(payoff_terms), expr=remainder, text=text)

    # ===== VALIDATION =====

    def validate(self, ast: ContractAst) -> Union[ValidatedContract, List[Diagnostic]]:
        """Check the validity requirements; never raises"""
        diags: List[Diagnostic] = []

        def error(message, rule, decl, line):
            diags.append(Diagnostic(message=message, rule=rule, declaration=decl, line=line, column=1))

        def warn(message, rule, decl, line):
            diags.append(Diagnostic(message=message, rule=rule, declaration=decl, line=line,
                                    column=1, severity=Severity.WARNING))

        try:
            for decl in (*ast.numerics, *ast.maps):
                if decl.lo > decl.hi:
                    error(f"empty range [{decl.lo},{decl.hi}] for '{decl.name}'", "range", decl.name, decl.line)
                elif not decl.lo <= decl.init <= decl.hi:
                    error(f"initial value out of range for '{decl.name}'", "initial-value", decl.name, decl.line)

            for fn in ast.functions:
                if not fn.tlo < fn.thi:
                    error(f"time interval [{fn.tlo},{fn.thi}] of '{fn.name}' must satisfy lower < upper",
                          "time-interval", fn.name, fn.line)

            for fn in ast.functions:
                if not fn.is_multi_party:
                    continue
                for other in ast.functions:
                    if other is fn:
                        continue
                    if fn.tlo <= other.thi and other.tlo <= fn.thi:
                        error(f"multi-party interval overlap between '{fn.name}' and '{other.name}'",
                              "multi-party-overlap", fn.name, fn.line)

            for fn in ast.functions:
                self._check_function(ast, fn, error, warn)
        except Exception as e:  # validate is total
            logger.error(f"❌ Validation crashed: {e}", exc_info=True)
            error(f"internal validation error: {e}", "internal", None, 0)

        if any(d.is_error for d in diags):
            logger.info(f"⚠️ Contract {ast.name} failed validation with {len(diags)} diagnostic(s)")
            return diags
        return ValidatedContract(ast, tuple(diags))

    def _check_function(self, ast: ContractAst, fn: FunctionDecl, error, warn) -> None:
        multi = fn.is_multi_party
        if multi and any(isinstance(p.designator, Caller) for p in fn.params):
            error(f"multi-party function '{fn.name}' cannot use the caller keyword",
                  "multi-party-caller", fn.name, fn.line)

        if not fn.body:
            error(f"function '{fn.name}' has an empty body", "empty-body", fn.name, fn.line)
        designator_ids = {p.designator.name for p in fn.params if isinstance(p.designator, Name)}
        targets_seen = set()
        for param in fn.params:
            target = param.target
            label = _target_text(target)
            if label in targets_seen:
                error(f"parameter '{label}' of '{fn.name}' is set twice", "param-target", fn.name, fn.line)
            targets_seen.add(label)

            if isinstance(param.designator, Name) and ast.id_var(param.designator.name) is None:
                error(f"designator '{param.designator.name}' of '{fn.name}' is not an id variable",
                      "param-designator", fn.name, fn.line)

            kind = None
            if isinstance(target, Name):
                if ast.numeric(target.name) is not None:
                    kind = "numeric"
                elif ast.id_var(target.name) is not None:
                    kind = "id"
                else:
                    error(f"parameter target '{target.name}' is not declared", "param-target", fn.name, fn.line)
            else:
                if ast.map_var(target.map) is None:
                    error(f"parameter target map '{target.map}' is not declared", "param-target", fn.name, fn.line)
                else:
                    kind = "map"
                index = target.index
                if isinstance(index, Caller):
                    if multi:
                        error(f"multi-party function '{fn.name}' cannot use the caller keyword",
                              "multi-party-caller", fn.name, fn.line)
                elif ast.id_var(index.name) is None:
                    error(f"map '{target.map}' indexed by non-id '{index.name}'", "kind", fn.name, fn.line)

            if kind == "id" and param.payable:
                error(f"id variable '{label}' cannot be payable", "param-target", fn.name, fn.line)
            if kind == "id" and multi:
                error(f"multi-party function '{fn.name}' cannot decide id variable '{label}'",
                      "param-target", fn.name, fn.line)
            if kind == "id" and target.name in designator_ids | _map_index_ids(fn):
                error(f"'{label}' designates a party in '{fn.name}' and cannot itself be decided",
                      "param-target", fn.name, fn.line)

            if multi and not param.payable and param.default is None:
                error(f"multi-party decision '{label}' of '{fn.name}' needs a default value",
                      "param-default", fn.name, fn.line)
            if not multi and param.default is not None:
                error(f"one-party parameter '{label}' of '{fn.name}' cannot have a default",
                      "param-default", fn.name, fn.line)
            if param.default is not None and kind in ("numeric", "map"):
                decl = ast.numeric(target.name) if kind == "numeric" else ast.map_var(target.map)
                if not decl.lo <= param.default <= decl.hi:
                    error(f"default of '{label}' is out of range", "param-default", fn.name, fn.line)

        checker = _Checker(ast, allow_caller=not multi)
        self._check_body(ast, fn, fn.body, checker, warn)
        for message in dict.fromkeys(checker.errors):
            error(f"{message} (in '{fn.name}')", "kind", fn.name, fn.line)

    def _check_body(self, ast, fn, body, checker: _Checker, warn) -> None:
        for position, stmt in enumerate(body):
            if position > 0 and _always_returns(body[:position]):
                warn(f"unreachable statement in '{fn.name}'", "dead-code", fn.name, stmt.line)
                break
        for stmt in body:
            if isinstance(stmt, If):
                if checker.kind(stmt.cond) != "bool":
                    checker.errors.append("if condition is not a boolean expression")
                self._check_body(ast, fn, stmt.then_body, checker, warn)
                if stmt.else_body is not None:
                    self._check_body(ast, fn, stmt.else_body, checker, warn)
            elif isinstance(stmt, Assign):
                target_kind = checker.kind(stmt.target)
                value_kind = checker.kind(stmt.value)
                if target_kind == "party":
                    if not isinstance(stmt.value, (Name, Caller, Null)) or value_kind != "party":
                        checker.errors.append(f"id variable '{_target_text(stmt.target)}' needs a party value")
                elif value_kind != "int":
                    checker.errors.append(f"'{_target_text(stmt.target)}' needs a numeric value")
            elif isinstance(stmt, Payout):
                if checker.kind(stmt.party) != "party" or not isinstance(stmt.party, (Name, Caller, Null)):
                    checker.errors.append("payout recipient must be caller, null or an id variable")
                if isinstance(stmt.party, Null):
                    warn(f"payout to null in '{fn.name}' has no effect", "payout-null", fn.name, stmt.line)
                if checker.kind(stmt.amount) != "int":
                    checker.errors.append("payout amount must be numeric")

    # ===== PRETTY PRINTING =====

    def pretty_print(self, ast: ContractAst) -> str:
        lines = [f"contract {ast.name} {{"]
        for decl in ast.numerics:
            lines.append(f"  numeric {decl.name}[{decl.lo},{decl.hi}] = {decl.init};")
        for decl in ast.maps:
            lines.append(f"  map {decl.name}[{decl.lo},{decl.hi}] = {decl.init};")
        for decl in ast.ids:
            lines.append(f"  id {decl.name} = {decl.init if decl.init is not None else 'null'};")
        for fn in ast.functions:
            params = ", ".join(_param_text(p) for p in fn.params)
            lines.append("")
            lines.append(f"  function {fn.name}[{fn.tlo},{fn.thi}]({params}) {{")
            lines.extend(_stmts_text(fn.body, 2))
            lines.append("  }")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _map_index_ids(fn: FunctionDecl) -> set:
    return {
        p.target.index.name for p in fn.params
        if isinstance(p.target, MapAccess) and isinstance(p.target.index, Name)
    }


def apply_overrides(ast: ContractAst, overrides: Dict[str, Tuple[int, int]]) -> ContractAst:
    """Narrow numeric/map ranges; initial values are clamped into the new range"""
    if not overrides:
        return ast
    unknown = [name for name in overrides if ast.numeric(name) is None and ast.map_var(name) is None]
    if unknown:
        raise ConfigError(f"override names unknown variable(s): {', '.join(sorted(unknown))}")

    def narrow(decl):
        if decl.name not in overrides:
            return decl
        lo, hi = overrides[decl.name]
        if lo > hi or lo < decl.lo or hi > decl.hi:
            raise ConfigError(
                f"override {decl.name}={lo}..{hi} must narrow the declared range [{decl.lo},{decl.hi}]"
            )
        return replace(decl, lo=lo, hi=hi, init=max(lo, min(hi, decl.init)))

    return replace(
        ast,
        numerics=tuple(narrow(d) for d in ast.numerics),
        maps=tuple(narrow(d) for d in ast.maps),
    )


def _split_sum(expr: Expr) -> List[Expr]:
    if isinstance(expr, BinOp) and expr.op == "+":
        return _split_sum(expr.left) + _split_sum(expr.right)
    return [expr]


def expr_text(expr: Expr) -> str:
    """Source text for an expression (fully parenthesized binary operators)"""
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, Name):
        return expr.name
    if isinstance(expr, Caller):
        return "caller"
    if isinstance(expr, Null):
        return "null"
    if isinstance(expr, Payoff):
        return "payoff"
    if isinstance(expr, MapAccess):
        return f"{expr.map}[{expr_text(expr.index)}]"
    if isinstance(expr, (BinOp, Compare, BoolOp)):
        return f"({expr_text(expr.left)} {expr.op} {expr_text(expr.right)})"
    if isinstance(expr, Not):
        return f"not {expr_text(expr.operand)}" if not isinstance(expr.operand, Not) \
            else f"not ({expr_text(expr.operand)})"
    raise TypeError(f"not an expression: {expr!r}")


def _target_text(target) -> str:
    return expr_text(target)


def _param_text(param: Param) -> str:
    text = f"{'payable ' if param.payable else ''}{_target_text(param.target)} : {expr_text(param.designator)}"
    if param.default is not None:
        text += f" = {param.default}"
    return text


def stmt_text(stmt: Stmt) -> str:
    """One-line rendering of a statement header, used for CFG vertices"""
    if isinstance(stmt, Assign):
        return f"{_target_text(stmt.target)} = {expr_text(stmt.value)};"
    if isinstance(stmt, Payout):
        return f"payout({expr_text(stmt.party)}, {expr_text(stmt.amount)});"
    if isinstance(stmt, Return):
        return "return;"
    return f"if {expr_text(stmt.cond)}"


def _stmts_text(body, depth: int) -> List[str]:
    pad = "  " * depth
    out: List[str] = []
    for stmt in body:
        if isinstance(stmt, If):
            out.append(f"{pad}if ({expr_text(stmt.cond)}) {{")
            out.extend(_stmts_text(stmt.then_body, depth + 1))
            if stmt.else_body is not None:
                out.append(f"{pad}}} else {{")
                out.extend(_stmts_text(stmt.else_body, depth + 1))
            out.append(f"{pad}}}")
        else:
            out.append(pad + stmt_text(stmt))
    return out


# Singleton instance
contract_frontend = ContractFrontend()
