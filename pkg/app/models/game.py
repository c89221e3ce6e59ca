# app/models/game.py
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Hashable, List, Sequence, Set, Tuple, Union

Number = Union[int, Fraction, float]


@dataclass
class ConcurrentGame:
    """Explicit two-player zero-sum concurrent game with state utilities"""
    start: Hashable
    utility: Dict[Hashable, Number] = field(default_factory=dict)
    actions1: Dict[Hashable, Tuple[Hashable, ...]] = field(default_factory=dict)
    actions2: Dict[Hashable, Tuple[Hashable, ...]] = field(default_factory=dict)
    delta: Dict[Tuple[Hashable, Hashable, Hashable], Hashable] = field(default_factory=dict)

    @property
    def states(self) -> List[Hashable]:
        return list(self.utility)

    def add_state(self, state: Hashable, utility: Number,
                  actions1: Sequence[Hashable] = (), actions2: Sequence[Hashable] = ()) -> None:
        self.utility[state] = utility
        self.actions1[state] = tuple(actions1)
        self.actions2[state] = tuple(actions2)

    def is_dead_end(self, state: Hashable) -> bool:
        return not self.actions1.get(state) or not self.actions2.get(state)

    def successors(self, state: Hashable) -> Set[Hashable]:
        if self.is_dead_end(state):
            return set()
        return {self.delta[(state, a1, a2)] for a1 in self.actions1[state] for a2 in self.actions2[state]}

    def validate(self) -> List[str]:
        """Problems with the structure; empty when the game is well formed"""
        problems = []
        if self.start not in self.utility:
            problems.append(f"start state {self.start!r} is not declared")
        for state in self.utility:
            if self.is_dead_end(state):
                continue
            for a1 in self.actions1[state]:
                for a2 in self.actions2[state]:
                    target = self.delta.get((state, a1, a2))
                    if target is None:
                        problems.append(f"missing transition {state!r} {a1!r} {a2!r}")
                    elif target not in self.utility:
                        problems.append(f"transition to undeclared state {target!r}")
        declared = {(s, a1, a2) for s in self.utility if not self.is_dead_end(s)
                    for a1 in self.actions1[s] for a2 in self.actions2[s]}
        for key in self.delta:
            if key not in declared:
                problems.append(f"transition {key!r} outside the action sets")
        return problems


@dataclass(frozen=True)
class MatrixGame:
    rows: Tuple[Hashable, ...]
    cols: Tuple[Hashable, ...]
    payoff: Tuple[Tuple[Number, ...], ...]


@dataclass(frozen=True)
class GameValue:
    value: Number
    row_strategy: Tuple[Number, ...]
    col_strategy: Tuple[Number, ...]
