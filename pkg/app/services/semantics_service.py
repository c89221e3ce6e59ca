# app/services/semantics_service.py
"""
Bounded operational semantics of contracts.

States are plain tuples so they can be hashed, stored and compared cheaply
while exploring games. Object index 0 is always the contract balance; the
remaining objects are numeric variables followed by one entry per
(map, party) pair.
"""
import itertools
import json
import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple

from pydantic import BaseModel

from app.models.contract import (
    Assign, BinOp, BoolOp, Caller, Compare, ContractAst, Expr, FunctionDecl, IntLit, MapAccess,
    Name, Not, Null, Objective, Param, Payoff, Payout, walk_expr,
)
from app.services.cfg_service import Instruction, LabeledContract, cfg_builder
from app.utils.errors import ConfigError, ObjectiveError, SemanticsError

logger = logging.getLogger(__name__)

MULTI = -1  # caller while a multi-party function runs
BALANCE = 0  # object index of the contract balance


# ============= PARTIES =============

@dataclass(frozen=True)
class PartySet:
    """The k parties of a bounded contract; the analyzed party comes last"""
    names: Tuple[str, ...]
    analyzed: str

    @property
    def k(self) -> int:
        return len(self.names)

    @property
    def analyzed_index(self) -> int:
        return self.names.index(self.analyzed)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def name_of(self, party: Optional[int]) -> str:
        if party is None:
            return "null"
        if party == MULTI:
            return "*"
        return self.names[party]

    @classmethod
    def build(cls, ast: ContractAst, analyzed: str, k: int, extra_literals: Iterable[str] = ()) -> "PartySet":
        literals = [name for name in (*ast.party_literals(), *extra_literals) if name != analyzed]
        literals = list(dict.fromkeys(literals))
        required = len(literals) + 1
        if k < required:
            raise ConfigError(f"k={k} is smaller than the {required} parties named by the contract")
        others = list(literals)
        counter = 1
        while len(others) < k - 1:
            fresh = f"p{counter}"
            counter += 1
            if fresh not in others and fresh != analyzed:
                others.append(fresh)
        return cls(tuple(others) + (analyzed,), analyzed)


# ============= OBJECT LAYOUT =============

@dataclass(frozen=True)
class ObjectSpec:
    name: str
    lo: int
    hi: int
    init: int
    kind: str  # balance / numeric / map

    @property
    def width(self) -> int:
        return self.hi - self.lo + 1


class ObjectLayout:
    """Indexing of balance, numerics and per-party map entries"""

    def __init__(self, ast: ContractAst, parties: PartySet):
        self.parties = parties
        self.balance_cap = _balance_cap(ast, parties.k)
        objects = [ObjectSpec("balance", 0, self.balance_cap, 0, "balance")]
        self.numeric_index: Dict[str, int] = {}
        self.map_index: Dict[Tuple[str, int], int] = {}
        self.map_init: Dict[str, int] = {}
        for decl in ast.numerics:
            self.numeric_index[decl.name] = len(objects)
            objects.append(ObjectSpec(decl.name, decl.lo, decl.hi, decl.init, "numeric"))
        for decl in ast.maps:
            self.map_init[decl.name] = decl.init
            for party in range(parties.k):
                self.map_index[(decl.name, party)] = len(objects)
                objects.append(ObjectSpec(f"{decl.name}[{parties.names[party]}]", decl.lo, decl.hi, decl.init, "map"))
        self.objects: Tuple[ObjectSpec, ...] = tuple(objects)
        self.id_names: Tuple[str, ...] = tuple(d.name for d in ast.ids)
        self.id_index: Dict[str, int] = {name: i for i, name in enumerate(self.id_names)}

    def __len__(self) -> int:
        return len(self.objects)

    def index_of(self, name: str) -> int:
        for i, spec in enumerate(self.objects):
            if spec.name == name:
                return i
        raise KeyError(name)


def _balance_cap(ast: ContractAst, k: int) -> int:
    """Largest balance any bounded run can reach"""
    def payable_cap(fn: FunctionDecl) -> int:
        total = 0
        for param in fn.params:
            if not param.payable:
                continue
            decl = ast.numeric(param.target.name) if isinstance(param.target, Name) else ast.map_var(param.target.map)
            if decl is not None:
                total += max(0, decl.hi)
        return total

    cap = 0
    for fn in ast.functions:
        if fn.is_multi_party:
            cap += payable_cap(fn)
        else:
            cap += (fn.thi - fn.tlo + 1) * k * payable_cap(fn)
    return cap


# ============= STATES AND MOVES =============

class ContractState(NamedTuple):
    t: int
    l: int
    c: Optional[int]
    ids: Tuple[Optional[int], ...]
    objs: Tuple[int, ...]

    @property
    def b(self) -> int:
        return self.objs[BALANCE]

    @property
    def key(self) -> Tuple:
        return (self.t, self.l, self.c, self.ids)


class Move(NamedTuple):
    kind: str  # noop / call / pay / decide
    target: Optional[int] = None  # function index for call, parameter index for pay/decide
    value: Optional[int] = None


NOOP = Move("noop")
NOOP_ACTION: Tuple[Move, ...] = (NOOP,)
Action = Tuple[Move, ...]


class TraceRecord(BaseModel):
    t: int
    b: int
    l: int
    caller: Optional[str] = None
    changed: Dict[str, Any] = {}


@dataclass
class RunAccount:
    """Money flow of one party along a run"""
    received: int = 0
    paid: int = 0

    @property
    def payoff(self) -> int:
        return self.received - self.paid


@dataclass
class Run:
    states: List[ContractState]
    account: RunAccount
    trace: List[TraceRecord]


@dataclass(frozen=True)
class FunctionInfo:
    index: int
    decl: FunctionDecl
    entry: int
    exit: int
    first: int
    multi: bool


def trunc_div(a: int, b: int) -> int:
    if b == 0:
        raise SemanticsError("division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b > 0) else -q


# ============= SEMANTICS ENGINE =============

class ContractSemantics:
    """Transition system of a validated contract restricted to k parties"""

    def __init__(self, ast: ContractAst, parties: PartySet, labeled: Optional[LabeledContract] = None):
        self.ast = ast
        self.parties = parties
        self.labeled = labeled or cfg_builder.assign_labels(ast)
        self.instructions: Dict[int, Instruction] = cfg_builder.compile_instructions(self.labeled)
        self.layout = ObjectLayout(ast, parties)
        self.t_max = ast.t_max
        self.functions: Tuple[FunctionInfo, ...] = tuple(
            FunctionInfo(f.index, f.decl, f.entry, f.exit, f.first_body_label, f.decl.is_multi_party)
            for f in self.labeled.functions
        )
        self.exit_function: Dict[int, int] = {f.exit: f.index for f in self.functions}
        self.entry_function: Dict[int, int] = {f.entry: f.index for f in self.functions}
        self.first_function: Dict[int, int] = {f.first: f.index for f in self.functions}
        self._compiled: Dict[int, Tuple[Expr, Callable]] = {}
        self._literal_parties: Dict[str, int] = {}

    # ===== BASICS =====

    def initial_state(self) -> ContractState:
        ids = tuple(
            None if d.init is None else self.parties.index(d.init) for d in self.ast.ids
        )
        objs = tuple(spec.init for spec in self.layout.objects)
        return ContractState(0, 0, None, ids, objs)

    def is_terminal(self, state: ContractState) -> bool:
        return state.t > self.t_max

    def is_scheduling(self, state: ContractState) -> bool:
        return state.l == 0 or state.l in self.exit_function

    def label_kind(self, label: int) -> str:
        if label == 0:
            return "schedule"
        kind = self.instructions[label].kind
        return "schedule" if kind == "exit" else kind

    def multi_start(self, state: ContractState) -> Optional[FunctionInfo]:
        if state.l != 0:
            return None
        return next((f for f in self.functions if f.multi and f.decl.tlo == state.t), None)

    def callable_functions(self, state: ContractState, party: int) -> List[FunctionInfo]:
        if self.is_terminal(state) or not self.is_scheduling(state) or self.multi_start(state):
            return []
        last = None if state.l == 0 else (self.exit_function[state.l], state.c)
        out = []
        for fn in self.functions:
            if fn.multi or not fn.decl.tlo <= state.t <= fn.decl.thi:
                continue
            if last is not None and (fn.index, party) <= last:
                continue
            out.append(fn)
        return out

    # ===== PARAMETERS =====

    def designated_party(self, fn: FunctionInfo, param: Param, state: ContractState) -> Optional[int]:
        if isinstance(param.designator, Caller):
            return state.c
        return state.ids[self.layout.id_index[param.designator.name]]

    def param_values(self, param: Param, state: ContractState) -> List[Optional[int]]:
        target = param.target
        if isinstance(target, Name) and target.name in self.layout.id_index:
            return [None] + list(range(self.parties.k))
        if isinstance(target, MapAccess) and self._party_of(target.index, state) is None:
            return [0 if param.payable else (param.default if param.default is not None else self.layout.map_init[target.map])]
        decl = self.ast.numeric(target.name) if isinstance(target, Name) else self.ast.map_var(target.map)
        lo = max(0, decl.lo) if param.payable else decl.lo
        return list(range(lo, decl.hi + 1))

    def default_fill(self, fn: FunctionInfo, absent: Iterable[Optional[int]], state: ContractState) -> Dict[int, Optional[int]]:
        """Values for parameters whose designated party is absent or Null"""
        absent = set(absent) | {None}
        return {
            i: self._default_value(param, state)
            for i, param in enumerate(fn.decl.params)
            if self.designated_party(fn, param, state) in absent
        }

    def _default_value(self, param: Param, state: ContractState) -> Optional[int]:
        # an absent payer pays the least the target accepts, usually 0
        if param.default is not None and not param.payable:
            return param.default
        return self.param_values(param, state)[0]

    # ===== MOVES =====

    def permitted_actions(self, state: ContractState, party: int) -> List[Action]:
        """Bundles of moves the party may submit together at this state"""
        if self.is_terminal(state):
            return []
        if self.is_scheduling(state):
            return [NOOP_ACTION] + [(Move("call", fn.index),) for fn in self.callable_functions(state, party)]
        entry = self.entry_function.get(state.l)
        if entry is None:
            return [NOOP_ACTION]
        fn = self.functions[entry]
        mine = [
            (i, param) for i, param in enumerate(fn.decl.params)
            if self.designated_party(fn, param, state) == party
        ]
        if not mine:
            return [NOOP_ACTION]
        choices = [
            [Move("pay" if param.payable else "decide", i, value) for value in self.param_values(param, state)]
            for i, param in mine
        ]
        return [NOOP_ACTION] + [tuple(combo) for combo in itertools.product(*choices)]

    def permitted_moves(self, state: ContractState, party: int) -> Set[Move]:
        moves = {NOOP}
        for action in self.permitted_actions(state, party):
            moves.update(action)
        return moves

    # ===== TRANSITIONS =====

    def step(self, state: ContractState, joint: Sequence[Action]) -> ContractState:
        """Successor state for one action bundle per party (indexed by party)"""
        if self.is_terminal(state):
            raise SemanticsError("terminal states have no successors")
        if self.is_scheduling(state):
            multi = self.multi_start(state)
            if multi is not None:
                return ContractState(multi.decl.thi, multi.entry, MULTI, state.ids, state.objs)
            calls = [
                (action[0].target, party) for party, action in enumerate(joint)
                if action and action[0].kind == "call"
            ]
            if not calls:
                return ContractState(state.t + 1, 0, None, state.ids, state.objs)
            fn_index, party = min(calls)
            return ContractState(state.t, self.functions[fn_index].entry, party, state.ids, state.objs)

        ins = self.instructions[state.l]
        if ins.kind == "entry":
            return self._enter(state, self.functions[ins.function], joint)
        return self.execute(state)

    def execute(self, state: ContractState) -> ContractState:
        """Run the single command at state.l; no party choices are involved"""
        ins = self.instructions[state.l]
        if ins.kind == "assign":
            return self._assign(state, ins.stmt, ins.next)
        if ins.kind == "if":
            taken = self.eval(ins.stmt.cond, state)
            return state._replace(l=ins.true_next if taken else ins.false_next)
        if ins.kind == "payout":
            recipient, omega = self.payout_of(state)
            if recipient is None or omega == 0:
                return state._replace(l=ins.next)
            objs = list(state.objs)
            objs[BALANCE] -= omega
            return state._replace(l=ins.next, objs=tuple(objs))
        if ins.kind == "return":
            return state._replace(l=ins.next)
        raise SemanticsError(f"label {state.l} is not a command")

    def _enter(self, state: ContractState, fn: FunctionInfo, joint: Sequence[Action]) -> ContractState:
        chosen: Dict[int, Optional[int]] = {}
        for party, action in enumerate(joint):
            for move in action:
                if move.kind in ("pay", "decide"):
                    param = fn.decl.params[move.target]
                    if self.designated_party(fn, param, state) == party:
                        chosen[move.target] = move.value
        present = {party for party, action in enumerate(joint) if any(m.kind != "noop" for m in action)}
        absent = [party for party in range(self.parties.k) if party not in present]
        values = self.default_fill(fn, absent, state)
        values.update(chosen)

        objs = list(state.objs)
        ids = list(state.ids)
        paid = 0
        for i, param in enumerate(fn.decl.params):
            value = values[i] if i in values else self._default_value(param, state)
            stored = self._write(param.target, value, state, objs, ids)
            if param.payable and stored is not None:
                paid += stored
        objs[BALANCE] += paid
        return ContractState(state.t, fn.first, state.c, tuple(ids), tuple(objs))

    def _assign(self, state: ContractState, stmt: Assign, next_label: int) -> ContractState:
        value = self.eval(stmt.value, state)
        objs = list(state.objs)
        ids = list(state.ids)
        self._write(stmt.target, value, state, objs, ids)
        return ContractState(state.t, next_label, state.c, tuple(ids), tuple(objs))

    def _write(self, target, value, state: ContractState, objs: List[int], ids: List[Optional[int]]) -> Optional[int]:
        """Store value at target; returns the clamped number written to an object, if any"""
        kind, index = self.resolve_target(target, state)
        if kind == "id":
            ids[index] = value
        elif kind == "obj":
            spec = self.layout.objects[index]
            objs[index] = max(spec.lo, min(spec.hi, value))
            return objs[index]
        return None

    def resolve_target(self, target, state: ContractState) -> Tuple[str, Optional[int]]:
        """('obj', index), ('id', position) or ('none', None) for writes through a Null index"""
        if isinstance(target, Name):
            if target.name in self.layout.id_index:
                return "id", self.layout.id_index[target.name]
            return "obj", self.layout.numeric_index[target.name]
        party = self._party_of(target.index, state)
        if party is None:
            return "none", None
        return "obj", self.layout.map_index[(target.map, party)]

    def payout_of(self, state: ContractState) -> Tuple[Optional[int], int]:
        """Recipient and amount actually paid by the payout at state.l"""
        stmt: Payout = self.instructions[state.l].stmt
        recipient = self.eval(stmt.party, state)
        amount = self.eval(stmt.amount, state)
        omega = min(state.b, max(0, amount))
        return recipient, (omega if recipient is not None else 0)

    def entry_payments(self, state: ContractState, party: int) -> int:
        """Amount paid by party in the function entry that produced state"""
        fn_index = self.first_function.get(state.l)
        if fn_index is None or state.c is None:
            return 0
        fn = self.functions[fn_index]
        total = 0
        for param in fn.decl.params:
            if not param.payable or self.designated_party(fn, param, state) != party:
                continue
            kind, index = self.resolve_target(param.target, state)
            if kind == "obj":
                total += state.objs[index]
        return total

    # ===== EXPRESSIONS =====

    def _party_of(self, expr, state: ContractState) -> Optional[int]:
        if isinstance(expr, Caller):
            return state.c
        if isinstance(expr, Null):
            return None
        if expr.name in self.layout.id_index:
            return state.ids[self.layout.id_index[expr.name]]
        return self.literal_party(expr.name)

    def literal_party(self, name: str) -> int:
        if name not in self._literal_parties:
            if name not in self.parties.names:
                raise ObjectiveError(f"objective references undeclared party '{name}'")
            self._literal_parties[name] = self.parties.index(name)
        return self._literal_parties[name]

    def eval(self, expr: Expr, state: ContractState):
        # keyed by identity: hashing deep frozen trees on every call is slow
        entry = self._compiled.get(id(expr))
        if entry is None:
            entry = (expr, self._compile(expr))
            self._compiled[id(expr)] = entry
        return entry[1](state)

    def _compile(self, expr: Expr) -> Callable[[ContractState], object]:
        if isinstance(expr, IntLit):
            value = expr.value
            return lambda s: value
        if isinstance(expr, Payoff):
            return lambda s: 0
        if isinstance(expr, Caller):
            return lambda s: s.c
        if isinstance(expr, Null):
            return lambda s: None
        if isinstance(expr, Name):
            if expr.name in self.layout.numeric_index:
                idx = self.layout.numeric_index[expr.name]
                return lambda s: s.objs[idx]
            if expr.name in self.layout.id_index:
                pos = self.layout.id_index[expr.name]
                return lambda s: s.ids[pos]
            party = self.literal_party(expr.name)
            return lambda s: party
        if isinstance(expr, MapAccess):
            init = self.layout.map_init[expr.map]
            table = {p: self.layout.map_index[(expr.map, p)] for p in range(self.parties.k)}
            index_expr = self._compile(expr.index)

            def read(s):
                party = index_expr(s)
                return init if party is None else s.objs[table[party]]
            return read
        if isinstance(expr, BinOp):
            left, right = self._compile(expr.left), self._compile(expr.right)
            if expr.op == "+":
                return lambda s: left(s) + right(s)
            if expr.op == "-":
                return lambda s: left(s) - right(s)
            if expr.op == "*":
                return lambda s: left(s) * right(s)
            return lambda s: trunc_div(int(left(s)), int(right(s)))
        if isinstance(expr, Compare):
            left, right = self._compile(expr.left), self._compile(expr.right)
            op = {
                "<": lambda a, b: a < b, ">": lambda a, b: a > b,
                "<=": lambda a, b: a <= b, ">=": lambda a, b: a >= b,
                "==": lambda a, b: a == b, "!=": lambda a, b: a != b,
            }[expr.op]
            return lambda s: op(left(s), right(s))
        if isinstance(expr, BoolOp):
            left, right = self._compile(expr.left), self._compile(expr.right)
            if expr.op == "and":
                return lambda s: bool(left(s)) and bool(right(s))
            return lambda s: bool(left(s)) or bool(right(s))
        if isinstance(expr, Not):
            operand = self._compile(expr.operand)
            return lambda s: not operand(s)
        raise SemanticsError(f"cannot evaluate {expr!r}")

    def reads(self, expr: Expr, state: ContractState) -> Set[int]:
        """Object indices an expression reads in this state"""
        out: Set[int] = set()
        for node in walk_expr(expr):
            if isinstance(node, Name) and node.name in self.layout.numeric_index:
                out.add(self.layout.numeric_index[node.name])
            elif isinstance(node, MapAccess):
                party = self._party_of(node.index, state)
                if party is not None:
                    out.add(self.layout.map_index[(node.map, party)])
        return out

    # ===== OBJECTIVES AND RUNS =====

    def eval_objective(self, account: RunAccount, objective: Objective, state: ContractState) -> Fraction:
        value = Fraction(int(self.eval(objective.expr, state)))
        if objective.monetary:
            value += account.payoff
        return value

    def sample_run(self, seed: int = 0, party: Optional[int] = None) -> Run:
        """Play one run with uniformly random choices for every party"""
        rng = random.Random(seed)
        party = self.parties.analyzed_index if party is None else party
        state = self.initial_state()
        states = [state]
        account = RunAccount()
        trace = [self._trace_record(None, state)]
        while not self.is_terminal(state):
            joint = [rng.choice(self.permitted_actions(state, q)) for q in range(self.parties.k)]
            if self.label_kind(state.l) == "payout":
                recipient, omega = self.payout_of(state)
                if recipient == party:
                    account.received += omega
            nxt = self.step(state, joint)
            account.paid += self.entry_payments(nxt, party) if state.l in self.entry_function else 0
            trace.append(self._trace_record(state, nxt))
            states.append(nxt)
            state = nxt
        return Run(states, account, trace)

    def _trace_record(self, before: Optional[ContractState], after: ContractState) -> TraceRecord:
        changed: Dict[str, Any] = {}
        for i, spec in enumerate(self.layout.objects[1:], start=1):
            if before is None or before.objs[i] != after.objs[i]:
                changed[spec.name] = after.objs[i]
        for pos, name in enumerate(self.layout.id_names):
            if before is None or before.ids[pos] != after.ids[pos]:
                changed[name] = self.parties.name_of(after.ids[pos])
        caller = None if after.c is None else self.parties.name_of(after.c)
        return TraceRecord(t=after.t, b=after.b, l=after.l, caller=caller, changed=changed)

    @staticmethod
    def export_trace(run: Run) -> str:
        """Line-delimited JSON, one record per state"""
        return "\n".join(record.model_dump_json() for record in run.trace) + "\n"

    @staticmethod
    def load_trace(text: str) -> List[TraceRecord]:
        return [TraceRecord(**json.loads(line)) for line in text.splitlines() if line.strip()]

    def horizon_bound(self) -> int:
        """Upper bound on the number of steps of any run"""
        return self.parties.k * (self.t_max + 2) * (self.labeled.max_label + 1)
