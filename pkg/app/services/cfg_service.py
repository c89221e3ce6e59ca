# app/services/cfg_service.py
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Set, Tuple, Union

import networkx as nx

from app.models.contract import ContractAst, Expr, FunctionDecl, If, Not, Return, Stmt
from app.services.frontend_service import expr_text, stmt_text

logger = logging.getLogger(__name__)


# ============= LABELED CONTRACT =============

@dataclass(frozen=True)
class LabeledCommand:
    label: int
    stmt: Stmt
    then_branch: Tuple["LabeledCommand", ...] = ()
    else_branch: Optional[Tuple["LabeledCommand", ...]] = None

    @property
    def is_if(self) -> bool:
        return isinstance(self.stmt, If)

    @property
    def end_label(self) -> int:
        """Largest label inside this command"""
        last = self.label
        for branch in (self.then_branch, self.else_branch or ()):
            if branch:
                last = max(last, branch[-1].end_label)
        return last


@dataclass(frozen=True)
class LabeledFunction:
    index: int
    decl: FunctionDecl
    entry: int
    exit: int
    body: Tuple[LabeledCommand, ...]

    @property
    def first_body_label(self) -> int:
        return self.body[0].label if self.body else self.exit


@dataclass(frozen=True)
class LabelInfo:
    kind: str  # header / entry / exit / command
    function: Optional[int] = None
    command: Optional[LabeledCommand] = None


@dataclass
class LabeledContract:
    ast: ContractAst
    functions: Tuple[LabeledFunction, ...]
    labels: Dict[int, LabelInfo]

    @property
    def max_label(self) -> int:
        return max(self.labels)

    def function_of(self, label: int) -> Optional[LabeledFunction]:
        info = self.labels[label]
        return None if info.function is None else self.functions[info.function]


# ============= CFG =============

@dataclass(frozen=True)
class CfgEdge:
    src: int
    dst: int
    cond: Optional[Expr] = None  # None means True

    @property
    def cond_text(self) -> str:
        return "True" if self.cond is None else expr_text(self.cond)


@dataclass
class Cfg:
    function: LabeledFunction
    vertices: FrozenSet[int]
    edges: Tuple[CfgEdge, ...]
    _out: Dict[int, List[CfgEdge]] = field(default_factory=dict, repr=False)

    def out_edges(self, label: int) -> List[CfgEdge]:
        if not self._out:
            for edge in self.edges:
                self._out.setdefault(edge.src, []).append(edge)
        return self._out.get(label, [])

    def edge_set(self) -> Set[Tuple[int, int]]:
        return {(e.src, e.dst) for e in self.edges}


@dataclass(frozen=True)
class Instruction:
    """Executable view of one label, derived from the CFG"""
    label: int
    kind: str  # entry / exit / assign / payout / return / if
    function: int
    stmt: Optional[Stmt] = None
    next: Optional[int] = None
    true_next: Optional[int] = None
    false_next: Optional[int] = None


class CfgBuilder:
    """Labels contracts and builds per-function control flow graphs"""

    # ===== LABELS =====

    def assign_labels(self, ast: ContractAst) -> LabeledContract:
        counter = iter(range(1, 10 ** 9))
        labels: Dict[int, LabelInfo] = {0: LabelInfo("header")}
        functions = []

        def label_body(body, fn_index) -> Tuple[LabeledCommand, ...]:
            out = []
            for stmt in body:
                label = next(counter)
                if isinstance(stmt, If):
                    then_branch = label_body(stmt.then_body, fn_index)
                    else_branch = label_body(stmt.else_body, fn_index) if stmt.else_body is not None else None
                    cmd = LabeledCommand(label, stmt, then_branch, else_branch)
                else:
                    cmd = LabeledCommand(label, stmt)
                labels[label] = LabelInfo("command", fn_index, cmd)
                out.append(cmd)
            return tuple(out)

        for index, decl in enumerate(ast.functions):
            entry = next(counter)
            body = label_body(decl.body, index)
            exit_label = next(counter)
            labels[entry] = LabelInfo("entry", index)
            labels[exit_label] = LabelInfo("exit", index)
            functions.append(LabeledFunction(index, decl, entry, exit_label, body))

        return LabeledContract(ast, tuple(functions), dict(sorted(labels.items())))

    # ===== LAST SETS =====

    def last_set(self, entity: Union[LabeledFunction, LabeledCommand, Tuple[LabeledCommand, ...]]) -> FrozenSet[int]:
        """Labels that can end the execution of a function, command list or command"""
        if isinstance(entity, LabeledFunction):
            return self.last_set(entity.body)
        if isinstance(entity, tuple):
            return self.last_set(entity[-1]) if entity else frozenset()
        if entity.is_if:
            if entity.else_branch is not None:
                return self.last_set(entity.then_branch) | self.last_set(entity.else_branch)
            return self.last_set(entity.then_branch) | {entity.label}
        return frozenset({entity.label})

    # ===== CFG =====

    def build_cfg(self, labeled: LabeledContract, fn: Union[int, str, LabeledFunction]) -> Cfg:
        function = self._resolve(labeled, fn)
        edges: List[CfgEdge] = []

        def emit(commands: Tuple[LabeledCommand, ...], continuation: int) -> None:
            for position, cmd in enumerate(commands):
                after = commands[position + 1].label if position + 1 < len(commands) else continuation
                if isinstance(cmd.stmt, Return):
                    edges.append(CfgEdge(cmd.label, function.exit))
                elif cmd.is_if:
                    cond = cmd.stmt.cond
                    then_first = cmd.then_branch[0].label if cmd.then_branch else after
                    edges.append(CfgEdge(cmd.label, then_first, cond))
                    if cmd.else_branch is not None:
                        else_first = cmd.else_branch[0].label if cmd.else_branch else after
                        edges.append(CfgEdge(cmd.label, else_first, Not(cond)))
                        emit(cmd.else_branch, after)
                    else:
                        edges.append(CfgEdge(cmd.label, after, Not(cond)))
                    emit(cmd.then_branch, after)
                else:
                    edges.append(CfgEdge(cmd.label, after))

        edges.append(CfgEdge(function.entry, function.first_body_label))
        emit(function.body, function.exit)

        vertices = frozenset(
            label for label, info in labeled.labels.items() if info.function == function.index
        )
        return Cfg(function, vertices, tuple(sorted(edges, key=lambda e: (e.src, e.dst))))

    def build_all(self, labeled: LabeledContract) -> List[Cfg]:
        return [self.build_cfg(labeled, f) for f in labeled.functions]

    def compile_instructions(self, labeled: LabeledContract) -> Dict[int, Instruction]:
        """Per-label instruction table used by the semantics engine"""
        table: Dict[int, Instruction] = {}
        for cfg in self.build_all(labeled):
            fn = cfg.function
            table[fn.entry] = Instruction(fn.entry, "entry", fn.index, next=fn.first_body_label)
            table[fn.exit] = Instruction(fn.exit, "exit", fn.index)
            for label in sorted(cfg.vertices - {fn.entry, fn.exit}):
                cmd = labeled.labels[label].command
                out = cfg.out_edges(label)
                if cmd.is_if:
                    true_edge = next(e for e in out if e.cond == cmd.stmt.cond)
                    false_edge = next(e for e in out if e.cond == Not(cmd.stmt.cond))
                    table[label] = Instruction(label, "if", fn.index, cmd.stmt,
                                               true_next=true_edge.dst, false_next=false_edge.dst)
                else:
                    kind = {"Assign": "assign", "Payout": "payout", "Return": "return"}[type(cmd.stmt).__name__]
                    table[label] = Instruction(label, kind, fn.index, cmd.stmt, next=out[0].dst)
        return table

    # ===== ANALYSIS / EXPORT =====

    def to_networkx(self, labeled: LabeledContract, cfg: Cfg) -> nx.DiGraph:
        graph = nx.DiGraph(function=cfg.function.decl.name)
        for label in sorted(cfg.vertices):
            info = labeled.labels[label]
            if info.kind == "entry":
                text = f"entry {cfg.function.decl.name}"
            elif info.kind == "exit":
                text = f"exit {cfg.function.decl.name}"
            else:
                text = stmt_text(info.command.stmt)
            graph.add_node(label, text=text)
        for edge in cfg.edges:
            graph.add_edge(edge.src, edge.dst, condition=edge.cond_text)
        return graph

    def unreachable_labels(self, labeled: LabeledContract, cfg: Cfg) -> Set[int]:
        graph = self.to_networkx(labeled, cfg)
        reachable = nx.descendants(graph, cfg.function.entry) | {cfg.function.entry}
        unreachable = set(cfg.vertices) - reachable
        if unreachable:
            logger.warning(f"⚠️ Unreachable labels in {cfg.function.decl.name}: {sorted(unreachable)}")
        return unreachable

    def export(self, labeled: LabeledContract, cfg: Cfg, fmt: str = "graphml") -> str:
        graph = self.to_networkx(labeled, cfg)
        if fmt == "graphml":
            return "\n".join(nx.generate_graphml(graph))
        if fmt == "edgelist":
            return "\n".join(nx.generate_edgelist(graph, data=["condition"]))
        raise ValueError(f"unknown CFG export format '{fmt}'")

    @staticmethod
    def _resolve(labeled: LabeledContract, fn) -> LabeledFunction:
        if isinstance(fn, LabeledFunction):
            return fn
        if isinstance(fn, int):
            return labeled.functions[fn]
        for candidate in labeled.functions:
            if candidate.decl.name == fn:
                return candidate
        raise KeyError(f"unknown function '{fn}'")


# Singleton instance
cfg_builder = CfgBuilder()
