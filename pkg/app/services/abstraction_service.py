# app/services/abstraction_service.py
"""
Interval abstraction of bounded contract games.

An abstract state keeps time, label, caller and the id valuation exactly and
replaces every numeric object (balance, numerics, map entries) by a cell of a
per-label interval grid. Two abstract games are solved over the reachable
abstract states: in the lower game the adversary picks which abstract
successor is taken and utilities take their minimum over the box, in the
upper game the maximizer picks and utilities take their maximum. Their values
bracket the value of the contract; cutting the objects read at the most skewed
labels, and at every label they flow in from, tightens the bracket.
"""
import bisect
import itertools
import logging
import math
import time
from collections import defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import (
    Dict, FrozenSet, Hashable, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Set, Tuple,
)

import networkx as nx

from app.config import settings
from app.models.analysis import ValueBounds, Verdict
from app.models.contract import (
    BinOp, BoolOp, Caller, Compare, Expr, IntLit, MapAccess, Name, Not, Null, Objective, Payoff, walk_expr,
)
from app.models.game import ConcurrentGame, Number
from app.services.contract_game_service import ContractGame
from app.services.game_solver_service import game_solver
from app.services.semantics_service import BALANCE, ContractSemantics, ContractState, trunc_div
from app.utils.errors import GameStructureError, PartitionError, ResourceLimitError, SemanticsError

logger = logging.getLogger(__name__)

Interval = Tuple[int, int]
Box = Tuple[Interval, ...]

_FLIP = {"<": ">", ">": "<", "<=": ">=", ">=": "<=", "==": "==", "!=": "!="}
_NEGATE = {"<": ">=", ">=": "<", "<=": ">", ">": "<=", "==": "!=", "!=": "=="}


# ============= PARTITIONS =============

@dataclass
class IntervalPartition:
    """Per-label grids: for every object a sorted tuple of interval start points"""
    ranges: Tuple[Interval, ...]
    grids: Dict[int, Tuple[Tuple[int, ...], ...]]

    @classmethod
    def initial(cls, ranges: Sequence[Interval], labels: Sequence[int], granularity: int) -> "IntervalPartition":
        if granularity < 1:
            raise PartitionError("granularity must be at least 1")
        grid = tuple(_split(lo, hi, granularity) for lo, hi in ranges)
        return cls(tuple(ranges), {label: grid for label in labels})

    @classmethod
    def unit(cls, ranges: Sequence[Interval], labels: Sequence[int]) -> "IntervalPartition":
        grid = tuple(tuple(range(lo, hi + 1)) for lo, hi in ranges)
        return cls(tuple(ranges), {label: grid for label in labels})

    def intervals(self, label: int, obj: int) -> List[Interval]:
        starts = self.grids[label][obj]
        return [self.interval(label, obj, cell) for cell in range(len(starts))]

    def interval(self, label: int, obj: int, cell: int) -> Interval:
        starts = self.grids[label][obj]
        hi = starts[cell + 1] - 1 if cell + 1 < len(starts) else self.ranges[obj][1]
        return starts[cell], hi

    def cell_of(self, label: int, obj: int, value: int) -> int:
        return bisect.bisect_right(self.grids[label][obj], value) - 1

    def cells_overlapping(self, label: int, obj: int, interval: Interval) -> range:
        return range(self.cell_of(label, obj, interval[0]), self.cell_of(label, obj, interval[1]) + 1)

    def is_unit_at(self, label: int, obj: int) -> bool:
        lo, hi = self.ranges[obj]
        return len(self.grids[label][obj]) == hi - lo + 1

    def is_unit(self, label: int) -> bool:
        return all(self.is_unit_at(label, obj) for obj in range(len(self.ranges)))

    def refine(self, cuts: Mapping[int, Iterable[int]], parts: int = 2) -> "IntervalPartition":
        """Cut every non-unit interval of the given objects at the given labels into `parts` pieces"""
        if parts < 2:
            raise PartitionError("refinement needs at least 2 parts")
        grids = dict(self.grids)
        for label, objs in cuts.items():
            grid = list(grids[label])
            for obj in set(objs):
                starts = set(grid[obj])
                for cell in range(len(grid[obj])):
                    lo, hi = self.interval(label, obj, cell)
                    if hi > lo:
                        starts.update(_split(lo, hi, parts))
                grid[obj] = tuple(sorted(starts))
            grids[label] = tuple(grid)
        return IntervalPartition(self.ranges, grids)

    def refines(self, other: "IntervalPartition") -> bool:
        """True when every cell of self lies inside a cell of other"""
        return all(
            set(theirs) <= set(mine)
            for label in self.grids
            for mine, theirs in zip(self.grids[label], other.grids[label])
        )


def _split(lo: int, hi: int, parts: int) -> Tuple[int, ...]:
    width = hi - lo + 1
    parts = min(parts, width)
    size = width // parts
    return tuple(lo + i * size for i in range(parts))


class AbstractState(NamedTuple):
    t: int
    l: int
    c: Optional[int]
    ids: Tuple[Optional[int], ...]
    cells: Tuple[int, ...]


@dataclass
class SkewTally:
    """Running sum of the skewness seen at one label"""
    total: Number = 0
    points: int = 0

    def add(self, skew: Number) -> None:
        self.total += skew
        self.points += 1

    @property
    def average(self) -> Fraction:
        return Fraction(self.total) / self.points


@dataclass
class _Node:
    u_lo: Number
    u_hi: Number
    rows: int
    cols: int
    succ: Dict[Tuple[int, int], FrozenSet[AbstractState]]


@dataclass
class AbstractResult:
    bounds: ValueBounds
    start: AbstractState
    lower: Dict[AbstractState, Number]
    upper: Dict[AbstractState, Number]
    skew: Dict[int, SkewTally] = field(default_factory=dict)

    def label_skewness(self) -> Dict[int, Fraction]:
        """Average over every transition point and utility gap recorded at a label"""
        return {label: tally.average for label, tally in self.skew.items() if tally.points}


@dataclass
class AnalysisOutcome:
    iterations: List[ValueBounds]
    verdict: Verdict
    partition: IntervalPartition
    warnings: List[str] = field(default_factory=list)


# ============= OBJECT FLOW =============

class ObjectFlow:
    """
    Static view of which objects every label reads and overwrites.

    A cut is carried backwards over the labels an object reaches unchanged,
    so a predecessor is always split at least as finely as its successor.
    """

    def __init__(self, sem: ContractSemantics):
        self.sem = sem
        entries = {fn.entry for fn in sem.functions}
        self.preds: Dict[int, Set[int]] = defaultdict(set)
        for label in sem.labeled.labels:
            for nxt in self._successors(label, entries):
                self.preds[nxt].add(label)

    def _successors(self, label: int, entries: Set[int]) -> Set[int]:
        if label == 0:
            return {0} | entries
        ins = self.sem.instructions.get(label)
        if ins is None:
            return set()
        if ins.kind == "exit":
            return {0} | entries
        if ins.kind == "if":
            return {ins.true_next, ins.false_next}
        return {ins.next}

    def entries(self, access: MapAccess) -> Set[int]:
        """Map entries an access may touch; a literal party pins a single one"""
        layout = self.sem.layout
        index = access.index
        if isinstance(index, Null):
            return set()
        if isinstance(index, Name) and index.name not in layout.id_index:
            return {layout.map_index[(access.map, self.sem.literal_party(index.name))]}
        return {layout.map_index[(access.map, party)] for party in range(self.sem.parties.k)}

    def reads(self, expr: Expr) -> Set[int]:
        out: Set[int] = set()
        for node in walk_expr(expr):
            if isinstance(node, Name) and node.name in self.sem.layout.numeric_index:
                out.add(self.sem.layout.numeric_index[node.name])
            elif isinstance(node, MapAccess):
                out |= self.entries(node)
        return out

    def writes(self, target) -> Tuple[Set[int], bool]:
        """Objects a write may change, and whether the write always overwrites them"""
        if isinstance(target, Name):
            index = self.sem.layout.numeric_index.get(target.name)
            return ({index}, True) if index is not None else (set(), False)
        written = self.entries(target)
        exact = isinstance(target.index, Name) and target.index.name not in self.sem.layout.id_index
        return written, exact

    def before(self, label: int, needed: Set[int]) -> Set[int]:
        """Objects needed in front of label so that `needed` is known after it"""
        ins = self.sem.instructions.get(label)
        if label == 0 or ins is None:
            return set(needed)
        if ins.kind == "assign":
            written, exact = self.writes(ins.stmt.target)
            if not written & needed:
                return set(needed)
            kept = needed - written if exact else set(needed)
            return kept | self.reads(ins.stmt.value)
        if ins.kind == "if":
            return needed | self.reads(ins.stmt.cond)
        if ins.kind == "payout":
            if BALANCE in needed:
                return needed | self.reads(ins.stmt.amount)
            return set(needed)
        if ins.kind == "entry":
            killed: Set[int] = set()
            for param in self.sem.functions[ins.function].decl.params:
                written, exact = self.writes(param.target)
                if exact:
                    killed |= written
            return needed - killed
        return set(needed)

    def seeds(self, label: int, objective: Objective) -> Set[int]:
        """Objects whose imprecision at label shows up directly in the bounds"""
        if label == 0:
            return self.reads(objective.expr)
        ins = self.sem.instructions.get(label)
        out: Set[int] = set()
        if ins is None:
            return out
        if ins.kind == "if":
            out |= self.reads(ins.stmt.cond)
        elif ins.kind == "payout" and objective.monetary:
            out |= {BALANCE} | self.reads(ins.stmt.amount)
        fn_index = self.sem.first_function.get(label)
        if objective.monetary and fn_index is not None:
            for param in self.sem.functions[fn_index].decl.params:
                if param.payable:
                    out |= self.writes(param.target)[0]
        return out

    def closure(self, seeds: Mapping[int, Set[int]]) -> Dict[int, Set[int]]:
        """Close the seeds backwards over the label predecessors"""
        need = {label: set(objs) for label, objs in seeds.items() if objs}
        work = deque(need)
        while work:
            label = work.popleft()
            for pred in self.preds.get(label, ()):
                extra = self.before(pred, need[label]) - need.get(pred, set())
                if extra:
                    need.setdefault(pred, set()).update(extra)
                    work.append(pred)
        return need


# ============= ABSTRACTION ENGINE =============

class AbstractionEngine:
    """Lower/upper interval abstractions with skewness-guided refinement"""

    def __init__(self, enumeration_limit: Optional[int] = None, max_states: Optional[int] = None):
        self.enumeration_limit = enumeration_limit or settings.ENUMERATION_LIMIT
        self.max_states = max_states or settings.MAX_ABSTRACT_STATES

    # ===== PARTITIONS =====

    @staticmethod
    def _ranges(sem: ContractSemantics) -> List[Interval]:
        return [(spec.lo, spec.hi) for spec in sem.layout.objects]

    def initial_partition(self, game: ContractGame, granularity: int) -> IntervalPartition:
        sem = game.semantics
        return IntervalPartition.initial(self._ranges(sem), sorted(sem.labeled.labels), granularity)

    def unit_partition(self, game: ContractGame) -> IntervalPartition:
        sem = game.semantics
        return IntervalPartition.unit(self._ranges(sem), sorted(sem.labeled.labels))

    # ===== BOXES =====

    def abstract_of(self, partition: IntervalPartition, state: ContractState) -> AbstractState:
        cells = tuple(partition.cell_of(state.l, i, v) for i, v in enumerate(state.objs))
        return AbstractState(state.t, state.l, state.c, state.ids, cells)

    def box(self, partition: IntervalPartition, astate: AbstractState) -> Box:
        return tuple(partition.interval(astate.l, i, cell) for i, cell in enumerate(astate.cells))

    @staticmethod
    def representative(astate: AbstractState, box: Box) -> ContractState:
        return ContractState(astate.t, astate.l, astate.c, astate.ids, tuple(lo for lo, _ in box))

    def _projection_size(self, box: Box, reads: Set[int]) -> int:
        return math.prod(box[i][1] - box[i][0] + 1 for i in reads)

    @staticmethod
    def _points(rep: ContractState, box: Box, reads: Sequence[int]) -> Iterator[ContractState]:
        base = list(rep.objs)
        for point in itertools.product(*(range(box[i][0], box[i][1] + 1) for i in reads)):
            objs = base[:]
            for i, v in zip(reads, point):
                objs[i] = v
            yield rep._replace(objs=tuple(objs))

    def _spread(self, partition: IntervalPartition, key: ContractState, box: Box,
                fixed: Optional[Mapping[int, int]] = None) -> Set[AbstractState]:
        """Abstract states at key's label whose cells meet the box"""
        choices = [
            (fixed[i],) if fixed and i in fixed else partition.cells_overlapping(key.l, i, box[i])
            for i in range(len(box))
        ]
        return {AbstractState(key.t, key.l, key.c, key.ids, cells) for cells in itertools.product(*choices)}

    # ===== SUCCESSORS =====

    def successor_boxes(self, game: ContractGame, partition: IntervalPartition, astate: AbstractState,
                        a1, a2, box: Optional[Box] = None) -> FrozenSet[AbstractState]:
        """Every abstract state containing a successor of a member of astate under (a1, a2)"""
        sem = game.semantics
        box = box or self.box(partition, astate)
        rep = self.representative(astate, box)
        kind = sem.label_kind(astate.l)

        if kind in ("schedule", "return"):
            return frozenset(self._spread(partition, game.successor(rep, a1, a2), box))

        if kind == "entry":
            nxt = game.successor(rep, a1, a2)
            fn = sem.functions[sem.entry_function[astate.l]]
            new_box = list(box)
            for param in fn.decl.params:
                target_kind, index = sem.resolve_target(param.target, rep)
                if target_kind == "obj":
                    new_box[index] = (nxt.objs[index], nxt.objs[index])
            paid = nxt.b - rep.b
            cap = sem.layout.balance_cap
            lo, hi = box[BALANCE]
            new_box[BALANCE] = (min(cap, lo + paid), min(cap, hi + paid))
            return frozenset(self._spread(partition, nxt, tuple(new_box)))

        return frozenset(self._execute_box(sem, partition, astate, box, rep))

    def _command_reads(self, sem: ContractSemantics, ins, rep: ContractState) -> Set[int]:
        if ins.kind == "assign":
            return sem.reads(ins.stmt.value, rep)
        if ins.kind == "if":
            return sem.reads(ins.stmt.cond, rep)
        if ins.kind == "payout":
            return sem.reads(ins.stmt.amount, rep) | {BALANCE}
        return set()

    def _command_writes(self, sem: ContractSemantics, ins, rep: ContractState) -> Set[int]:
        if ins.kind == "assign":
            target_kind, index = sem.resolve_target(ins.stmt.target, rep)
            return {index} if target_kind == "obj" else set()
        if ins.kind == "payout":
            return {BALANCE}
        return set()

    def _execute_box(self, sem: ContractSemantics, partition: IntervalPartition, astate: AbstractState,
                     box: Box, rep: ContractState) -> Set[AbstractState]:
        ins = sem.instructions[astate.l]
        reads = self._command_reads(sem, ins, rep)
        if self._projection_size(box, reads) <= self.enumeration_limit:
            keys = sorted(reads | self._command_writes(sem, ins, rep))
            outcomes = set()
            for state in self._points(rep, box, sorted(reads)):
                nxt = sem.execute(state)
                cells = tuple(partition.cell_of(nxt.l, i, nxt.objs[i]) for i in keys)
                outcomes.add((nxt._replace(objs=rep.objs), cells))
            out: Set[AbstractState] = set()
            for key, cells in outcomes:
                out |= self._spread(partition, key, box, dict(zip(keys, cells)))
            return out
        return self._propagate(sem, partition, ins, box, rep)

    def _propagate(self, sem: ContractSemantics, partition: IntervalPartition, ins,
                   box: Box, rep: ContractState) -> Set[AbstractState]:
        """Interval transfer functions for boxes too large to enumerate"""
        if ins.kind == "assign":
            lo, hi = self._ieval(sem, ins.stmt.value, rep, box)
            target_kind, index = sem.resolve_target(ins.stmt.target, rep)
            new_box = list(box)
            if target_kind == "obj":
                spec = sem.layout.objects[index]
                new_box[index] = (max(spec.lo, min(spec.hi, lo)), max(spec.lo, min(spec.hi, hi)))
            return self._spread(partition, rep._replace(l=ins.next), tuple(new_box))

        if ins.kind == "if":
            out: Set[AbstractState] = set()
            cond = ins.stmt.cond
            for branch, target in ((cond, ins.true_next), (Not(cond), ins.false_next)):
                narrowed = self._narrow(sem, branch, rep, box)
                if narrowed is None or self._ieval(sem, branch, rep, narrowed) == (0, 0):
                    continue
                out |= self._spread(partition, rep._replace(l=target), narrowed)
            return out

        if ins.kind == "payout":
            new_box = list(box)
            if sem.eval(ins.stmt.party, rep) is not None:
                e_lo, e_hi = self._ieval(sem, ins.stmt.amount, rep, box)
                b_lo, b_hi = box[BALANCE]
                new_box[BALANCE] = (max(0, b_lo - max(0, e_hi)), max(0, b_hi - max(0, e_lo)))
            return self._spread(partition, rep._replace(l=ins.next), tuple(new_box))

        raise SemanticsError(f"label {rep.l} is not a command")

    # ===== INTERVAL EVALUATION =====

    @staticmethod
    def _is_party(sem: ContractSemantics, expr: Expr) -> bool:
        if isinstance(expr, (Caller, Null)):
            return True
        return isinstance(expr, Name) and expr.name not in sem.layout.numeric_index

    def _ieval(self, sem: ContractSemantics, expr: Expr, rep: ContractState, box: Box) -> Interval:
        """Sound integer interval of expr over the box; conditions evaluate inside [0, 1]"""
        if isinstance(expr, IntLit):
            return expr.value, expr.value
        if isinstance(expr, Payoff):
            return 0, 0
        if isinstance(expr, Name):
            return box[sem.layout.numeric_index[expr.name]]
        if isinstance(expr, MapAccess):
            party = sem._party_of(expr.index, rep)
            if party is None:
                init = sem.layout.map_init[expr.map]
                return init, init
            return box[sem.layout.map_index[(expr.map, party)]]
        if isinstance(expr, BinOp):
            (a, b), (c, d) = self._ieval(sem, expr.left, rep, box), self._ieval(sem, expr.right, rep, box)
            if expr.op == "+":
                return a + c, b + d
            if expr.op == "-":
                return a - d, b - c
            if expr.op == "*":
                corners = (a * c, a * d, b * c, b * d)
            else:
                if c <= 0 <= d:
                    raise SemanticsError(f"possible division by zero at label {rep.l}")
                corners = tuple(trunc_div(x, y) for x in (a, b) for y in (c, d))
            return min(corners), max(corners)
        if isinstance(expr, Compare):
            if self._is_party(sem, expr.left) or self._is_party(sem, expr.right):
                v = int(bool(sem.eval(expr, rep)))
                return v, v
            return _compare(expr.op, self._ieval(sem, expr.left, rep, box), self._ieval(sem, expr.right, rep, box))
        if isinstance(expr, BoolOp):
            (a, b), (c, d) = self._ieval(sem, expr.left, rep, box), self._ieval(sem, expr.right, rep, box)
            a, b, c, d = (min(1, max(0, v)) for v in (a, b, c, d))
            if expr.op == "and":
                return min(a, c), min(b, d)
            return max(a, c), max(b, d)
        if isinstance(expr, Not):
            lo, hi = self._ieval(sem, expr.operand, rep, box)
            lo, hi = min(1, max(0, lo)), min(1, max(0, hi))
            return 1 - hi, 1 - lo
        raise SemanticsError(f"cannot evaluate {expr!r} over intervals")

    def _object_of(self, sem: ContractSemantics, expr: Expr, rep: ContractState) -> Optional[int]:
        if isinstance(expr, Name) and expr.name in sem.layout.numeric_index:
            return sem.layout.numeric_index[expr.name]
        if isinstance(expr, MapAccess):
            party = sem._party_of(expr.index, rep)
            if party is not None:
                return sem.layout.map_index[(expr.map, party)]
        return None

    def _narrow(self, sem: ContractSemantics, cond: Expr, rep: ContractState, box: Box) -> Optional[Box]:
        """Box restricted to where a simple condition can hold; None when empty"""
        if isinstance(cond, Not):
            inner = cond.operand
            if isinstance(inner, Not):
                return self._narrow(sem, inner.operand, rep, box)
            if isinstance(inner, Compare):
                return self._narrow(sem, Compare(_NEGATE[inner.op], inner.left, inner.right), rep, box)
            if isinstance(inner, BoolOp) and inner.op == "or":
                return self._narrow(sem, BoolOp("and", Not(inner.left), Not(inner.right)), rep, box)
            return box
        if isinstance(cond, BoolOp) and cond.op == "and":
            left = self._narrow(sem, cond.left, rep, box)
            return None if left is None else self._narrow(sem, cond.right, rep, left)
        if not isinstance(cond, Compare):
            return box

        op, obj, const = cond.op, self._object_of(sem, cond.left, rep), cond.right
        if obj is None or not isinstance(const, IntLit):
            op, obj, const = _FLIP[cond.op], self._object_of(sem, cond.right, rep), cond.left
            if obj is None or not isinstance(const, IntLit):
                return box
        c = const.value
        lo, hi = box[obj]
        if op == "<":
            hi = min(hi, c - 1)
        elif op == "<=":
            hi = min(hi, c)
        elif op == ">":
            lo = max(lo, c + 1)
        elif op == ">=":
            lo = max(lo, c)
        elif op == "==":
            lo, hi = max(lo, c), min(hi, c)
        else:
            if lo == hi == c:
                return None
            lo, hi = (lo + 1 if lo == c else lo), (hi - 1 if hi == c else hi)
        if lo > hi:
            return None
        narrowed = list(box)
        narrowed[obj] = (lo, hi)
        return tuple(narrowed)

    def _expr_range(self, sem: ContractSemantics, expr: Expr, rep: ContractState, box: Box) -> Interval:
        reads = sem.reads(expr, rep)
        if self._projection_size(box, reads) <= self.enumeration_limit:
            values = [int(sem.eval(expr, s)) for s in self._points(rep, box, sorted(reads))]
            return min(values), max(values)
        return self._ieval(sem, expr, rep, box)

    # ===== UTILITIES =====

    def utility_bounds(self, game: ContractGame, astate: AbstractState, box: Box) -> Tuple[Fraction, Fraction]:
        """Minimal and maximal utility over the members of astate"""
        sem = game.semantics
        rep = self.representative(astate, box)
        if sem.is_terminal(rep):
            lo, hi = self._expr_range(sem, game.objective.expr, rep, box)
            return Fraction(lo), Fraction(hi)
        if not game.objective.monetary:
            return Fraction(0), Fraction(0)
        lo = hi = 0
        if sem.label_kind(rep.l) == "payout":
            stmt = sem.instructions[rep.l].stmt
            if sem.eval(stmt.party, rep) == game.party:
                e_lo, e_hi = self._expr_range(sem, stmt.amount, rep, box)
                b_lo, b_hi = box[BALANCE]
                lo += min(b_lo, max(0, e_lo))
                hi += min(b_hi, max(0, e_hi))
        fn_index = sem.first_function.get(rep.l)
        if fn_index is not None and rep.c is not None:
            fn = sem.functions[fn_index]
            for param in fn.decl.params:
                if not param.payable or sem.designated_party(fn, param, rep) != game.party:
                    continue
                target_kind, index = sem.resolve_target(param.target, rep)
                if target_kind == "obj":
                    lo -= box[index][1]
                    hi -= box[index][0]
        return Fraction(lo), Fraction(hi)

    # ===== ABSTRACT GAMES =====

    def build_bounds(self, game: ContractGame, partition: IntervalPartition, iteration: int = 0) -> AbstractResult:
        """Explore reachable abstract states and solve the lower and upper games"""
        started = time.perf_counter()
        start = self.abstract_of(partition, game.start)
        nodes: Dict[AbstractState, _Node] = {}
        graph = nx.DiGraph()
        graph.add_node(start)
        queue = deque([start])
        seen = {start}
        while queue:
            astate = queue.popleft()
            box = self.box(partition, astate)
            rep = self.representative(astate, box)
            acts1 = game.actions1(rep)
            acts2 = game.actions2(rep) if acts1 else []
            u_lo, u_hi = self.utility_bounds(game, astate, box)
            succ: Dict[Tuple[int, int], FrozenSet[AbstractState]] = {}
            for i, a1 in enumerate(acts1):
                for j, a2 in enumerate(acts2):
                    targets = self.successor_boxes(game, partition, astate, a1, a2, box)
                    succ[(i, j)] = targets
                    for target in targets:
                        graph.add_edge(astate, target)
                        if target not in seen:
                            seen.add(target)
                            if len(seen) > self.max_states:
                                raise ResourceLimitError(f"more than {self.max_states} abstract states",
                                                         self.max_states)
                            queue.append(target)
            nodes[astate] = _Node(u_lo, u_hi, len(acts1), len(acts2), succ)
        logger.debug(f"🔍 Explored {len(nodes)} abstract states")

        try:
            order = list(nx.topological_sort(graph))
        except nx.NetworkXUnfeasible:
            raise GameStructureError("abstract game has a cycle")

        lower: Dict[AbstractState, Number] = {}
        upper: Dict[AbstractState, Number] = {}
        skew: Dict[int, SkewTally] = defaultdict(SkewTally)
        for astate in reversed(order):
            node = nodes[astate]
            if node.u_hi > node.u_lo:
                skew[astate.l].add(node.u_hi - node.u_lo)
            if node.rows == 0 or node.cols == 0:
                lower[astate], upper[astate] = node.u_lo, node.u_hi
                continue
            low_matrix = [[min(lower[x] for x in node.succ[(i, j)]) for j in range(node.cols)]
                          for i in range(node.rows)]
            high_matrix = [[max(upper[x] for x in node.succ[(i, j)]) for j in range(node.cols)]
                           for i in range(node.rows)]
            lower[astate] = node.u_lo + game_solver.matrix_value(low_matrix).value
            upper[astate] = node.u_hi + game_solver.matrix_value(high_matrix).value
            for i, j in node.succ:
                skew[astate.l].add(high_matrix[i][j] - low_matrix[i][j])

        bounds = ValueBounds(
            iteration=iteration,
            states=len(nodes),
            lower=lower[start],
            upper=upper[start],
            elapsed=time.perf_counter() - started,
        )
        logger.info(f"📊 Iteration {iteration}: {bounds.states} abstract states, "
                    f"bounds [{bounds.lower}, {bounds.upper}] in {bounds.elapsed:.2f}s")
        return AbstractResult(bounds, start, lower, upper, dict(skew))

    # ===== REFINEMENT =====

    def skewness_refine(self, game: ContractGame, partition: IntervalPartition, result: AbstractResult,
                        parts: int = 2) -> Optional[Tuple[IntervalPartition, int]]:
        """
        Cut the objects that skewed labels read, and every label they flow in from.

        Labels are taken by decreasing average skewness (ties on the smaller
        label); the first one that contributes a cut is reported. Returns None
        when every skewed label is already unit.
        """
        flow = ObjectFlow(game.semantics)
        averages = result.label_skewness()
        ranked = [label for label in sorted(averages, key=lambda l: (-averages[l], l)) if averages[label] > 0]
        seeds: Dict[int, Set[int]] = {}
        top: Optional[int] = None
        for label in ranked:
            objs = {obj for obj in flow.seeds(label, game.objective) if not partition.is_unit_at(label, obj)}
            if objs:
                seeds[label] = objs
                top = label if top is None else top
        if seeds:
            refined = partition.refine(flow.closure(seeds), parts)
            if refined.grids != partition.grids:
                logger.debug(f"🔍 Refining {len(seeds)} skewed labels, led by {top} "
                             f"(average skewness {averages[top]})")
                return refined, top

        # nothing the skewed labels read is left to cut: split everything at the worst one
        for label in ranked:
            if not partition.is_unit(label):
                logger.debug(f"🔍 Refining every object at label {label}")
                return partition.refine({label: range(len(partition.ranges))}, parts), label
        return None

    def analyze(self, game: ContractGame, granularity: int = 1, max_iters: int = 8,
                target_gap: Number = 0, partition: Optional[IntervalPartition] = None,
                parts: Optional[int] = None) -> AnalysisOutcome:
        """Refine until the bounds meet, the gap target is reached or the iteration cap hits"""
        parts = settings.REFINE_PARTS if parts is None else parts
        if parts < 2:
            raise PartitionError("refinement needs at least 2 parts")
        partition = partition or self.initial_partition(game, granularity)
        iterations: List[ValueBounds] = []
        warnings: List[str] = []
        best_lo: Optional[Number] = None
        best_hi: Optional[Number] = None
        verdict = Verdict.CAPPED
        try:
            for iteration in range(max_iters):
                result = self.build_bounds(game, partition, iteration)
                raw = result.bounds
                if best_lo is not None and (raw.lower < best_lo or raw.upper > best_hi):
                    message = (f"iteration {iteration}: raw bounds [{raw.lower}, {raw.upper}] "
                               f"looser than [{best_lo}, {best_hi}]")
                    logger.warning(f"⚠️ {message}")
                    warnings.append(message)
                best_lo = raw.lower if best_lo is None else max(best_lo, raw.lower)
                best_hi = raw.upper if best_hi is None else min(best_hi, raw.upper)
                bounds = raw.model_copy(update={"lower": best_lo, "upper": best_hi})

                if best_lo == best_hi:
                    iterations.append(bounds)
                    verdict = Verdict.CONVERGED
                    break
                if best_hi - best_lo <= target_gap:
                    iterations.append(bounds)
                    verdict = Verdict.GAP_REACHED
                    break
                refinement = self.skewness_refine(game, partition, result, parts)
                if refinement is None:
                    iterations.append(bounds)
                    verdict = Verdict.CONVERGED
                    break
                partition, label = refinement
                iterations.append(bounds.model_copy(update={"refined_label": label}))
        except ResourceLimitError as e:
            logger.warning(f"⚠️ Stopping refinement: {e}")
            warnings.append(str(e))
            verdict = Verdict.CAPPED
        return AnalysisOutcome(iterations, verdict, partition, warnings)

    # ===== EXPLICIT GAMES =====

    def explicit_bounds(self, game: ConcurrentGame, blocks: Mapping[Hashable, Hashable],
                        horizon: int) -> Tuple[Number, Number]:
        """Lower and upper abstraction values of an explicit game under a block partition"""
        members: Dict[Hashable, List[Hashable]] = defaultdict(list)
        for state in game.utility:
            members[blocks[state]].append(state)
        for block, states in members.items():
            first = states[0]
            for other in states[1:]:
                if (game.actions1.get(other, ()), game.actions2.get(other, ())) != \
                        (game.actions1.get(first, ()), game.actions2.get(first, ())):
                    raise PartitionError(f"block {block!r} mixes states with different action sets")

        u_lo = {b: min(Fraction(game.utility[s]) for s in states) for b, states in members.items()}
        u_hi = {b: max(Fraction(game.utility[s]) for s in states) for b, states in members.items()}
        targets = {
            b: {
                (a1, a2): {blocks[game.delta[(s, a1, a2)]] for s in states}
                for a1 in game.actions1[states[0]] for a2 in game.actions2[states[0]]
            }
            for b, states in members.items() if not game.is_dead_end(states[0])
        }

        lower: Dict[Hashable, Number] = {b: Fraction(0) for b in members}
        upper: Dict[Hashable, Number] = {b: Fraction(0) for b in members}
        for _ in range(horizon):
            new_lower, new_upper = {}, {}
            for b, states in members.items():
                if b not in targets:
                    new_lower[b], new_upper[b] = u_lo[b], u_hi[b]
                    continue
                rows, cols = game.actions1[states[0]], game.actions2[states[0]]
                low = [[min(lower[x] for x in targets[b][(a1, a2)]) for a2 in cols] for a1 in rows]
                high = [[max(upper[x] for x in targets[b][(a1, a2)]) for a2 in cols] for a1 in rows]
                new_lower[b] = u_lo[b] + game_solver.matrix_value(low).value
                new_upper[b] = u_hi[b] + game_solver.matrix_value(high).value
            lower, upper = new_lower, new_upper
        start = blocks[game.start]
        return lower[start], upper[start]


# Singleton instance
abstraction_engine = AbstractionEngine()


def _compare(op: str, left: Interval, right: Interval) -> Interval:
    (a, b), (c, d) = left, right
    if op == "<":
        return (1, 1) if b < c else (0, 0) if a >= d else (0, 1)
    if op == "<=":
        return (1, 1) if b <= c else (0, 0) if a > d else (0, 1)
    if op == ">":
        return _compare("<", right, left)
    if op == ">=":
        return _compare("<=", right, left)
    equal = (1, 1) if a == b == c == d else (0, 0) if b < c or d < a else (0, 1)
    if op == "==":
        return equal
    return 1 - equal[1], 1 - equal[0]
