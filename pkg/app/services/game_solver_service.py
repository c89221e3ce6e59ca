# app/services/game_solver_service.py
"""
Zero-sum game solving.

Matrix games are solved exactly over Fractions with a dictionary simplex
(Bland's rule) after saddle-point detection and weak-dominance elimination;
matrices above the exact size limit go to scipy's HiGHS solver. Concurrent
games are solved by finite-horizon value iteration or, when acyclic, by
backward induction in reverse topological order.
"""
import logging
from fractions import Fraction
from typing import Dict, Hashable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from lark import Lark, Transformer
from lark.exceptions import UnexpectedInput, VisitError
from scipy.optimize import linprog

from app.config import settings
from app.models.game import ConcurrentGame, GameValue, MatrixGame, Number
from app.utils.errors import GameStructureError

logger = logging.getLogger(__name__)

Matrix = Sequence[Sequence[Number]]


# ============= EXACT SIMPLEX =============

class _Tableau:
    """Dictionary form of max c.x s.t. Ax <= b, x >= 0 with b >= 0"""

    def __init__(self, A: List[List[Fraction]], b: List[Fraction], c: List[Fraction]):
        self.m, self.n = len(A), len(c)
        self.A = [row[:] for row in A]
        self.b = b[:]
        self.c = c[:]
        self.nb_vars = list(range(self.n))
        self.b_vars = list(range(self.n, self.n + self.m))

    def pivot(self, i: int, j: int) -> None:
        piv = self.A[i][j]
        delta = self.c[j] / piv
        for col in range(self.n):
            self.c[col] -= delta * self.A[i][col]
        self.c[j] = -delta
        for col in range(self.n):
            self.A[i][col] = 1 / piv if col == j else self.A[i][col] / piv
        self.b[i] /= piv
        for k in range(self.m):
            if k == i:
                continue
            f = self.A[k][j]
            if f == 0:
                continue
            for col in range(self.n):
                self.A[k][col] = -f / piv if col == j else self.A[k][col] - f * self.A[i][col]
            self.b[k] -= f * self.b[i]
        self.nb_vars[j], self.b_vars[i] = self.b_vars[i], self.nb_vars[j]

    def solve(self) -> None:
        while True:
            entering = [(self.nb_vars[j], j) for j in range(self.n) if self.c[j] > 0]
            if not entering:
                return
            _, j = min(entering)
            leaving = [(self.b[i] / self.A[i][j], self.b_vars[i], i) for i in range(self.m) if self.A[i][j] > 0]
            if not leaving:
                raise GameStructureError("unbounded linear program")
            _, _, i = min(leaving)
            self.pivot(i, j)

    def primal(self) -> List[Fraction]:
        x = [Fraction(0)] * self.n
        for i, var in enumerate(self.b_vars):
            if var < self.n:
                x[var] = self.b[i]
        return x

    def dual(self) -> List[Fraction]:
        y = [Fraction(0)] * self.m
        for j, var in enumerate(self.nb_vars):
            if var >= self.n:
                y[var - self.n] = -self.c[j]
        return y


class GameSolver:
    """Values of matrix games and concurrent games"""

    def __init__(self, exact_max_dim: Optional[int] = None, tolerance: Optional[float] = None):
        self.exact_max_dim = exact_max_dim if exact_max_dim is not None else settings.EXACT_LP_MAX_DIM
        self.tolerance = tolerance if tolerance is not None else settings.LP_TOLERANCE

    # ===== MATRIX GAMES =====

    def matrix_value(self, game: Union[MatrixGame, Matrix]) -> GameValue:
        """Value and optimal mixed strategies; rows maximize, columns minimize"""
        payoff = game.payoff if isinstance(game, MatrixGame) else game
        if not payoff or not payoff[0]:
            raise GameStructureError("matrix game needs at least one row and one column")
        A = [[_exact(v) for v in row] for row in payoff]
        m, n = len(A), len(A[0])
        if any(len(row) != n for row in A):
            raise GameStructureError("matrix game rows have different lengths")

        if m == 1:
            j = min(range(n), key=lambda c: A[0][c])
            return GameValue(A[0][j], (Fraction(1),), _pure(n, j))
        if n == 1:
            i = max(range(m), key=lambda r: A[r][0])
            return GameValue(A[i][0], _pure(m, i), (Fraction(1),))

        saddle = _saddle_point(A)
        if saddle is not None:
            i, j = saddle
            return GameValue(A[i][j], _pure(m, i), _pure(n, j))

        rows, cols = _eliminate_dominated(A)
        reduced = [[A[i][j] for j in cols] for i in rows]
        if len(rows) == 1 or len(cols) == 1:
            sub = self.matrix_value(reduced)
        elif max(len(rows), len(cols)) <= self.exact_max_dim:
            sub = self._exact_lp(reduced)
        else:
            sub = self._float_lp(reduced)
        return GameValue(
            sub.value,
            _expand(sub.row_strategy, rows, m),
            _expand(sub.col_strategy, cols, n),
        )

    def _exact_lp(self, A: List[List[Fraction]]) -> GameValue:
        # shift to a positive matrix B; max sum(y) s.t. B y <= 1 has value 1/v(B)
        shift = 1 - min(min(row) for row in A)
        B = [[v + shift for v in row] for row in A]
        m, n = len(B), len(B[0])
        tableau = _Tableau(B, [Fraction(1)] * m, [Fraction(1)] * n)
        tableau.solve()
        y, x = tableau.primal(), tableau.dual()
        z = sum(y)
        return GameValue(
            1 / z - shift,
            tuple(v / z for v in x),
            tuple(v / z for v in y),
        )

    def _float_lp(self, A: List[List[Fraction]]) -> GameValue:
        M = np.array([[float(v) for v in row] for row in A])
        m, n = M.shape
        # variables: row strategy x (m) and value v; maximize v
        c = np.zeros(m + 1)
        c[-1] = -1.0
        A_ub = np.hstack([-M.T, np.ones((n, 1))])
        b_ub = np.zeros(n)
        A_eq = np.hstack([np.ones((1, m)), np.zeros((1, 1))])
        res = linprog(
            c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
            bounds=[(0, None)] * m + [(None, None)], method="highs",
        )
        if not res.success:
            raise GameStructureError(f"LP solver failed: {res.message}")
        x = np.clip(res.x[:m], 0, None)
        y = np.clip(-res.ineqlin.marginals, 0, None)
        x = x / x.sum()
        y = y / y.sum() if y.sum() > self.tolerance else np.full(n, 1.0 / n)
        logger.debug(f"🔍 Solved {m}x{n} matrix game in floating point")
        return GameValue(float(res.x[-1]), tuple(float(v) for v in x), tuple(float(v) for v in y))

    # ===== CONCURRENT GAMES =====

    def local_game(self, game: ConcurrentGame, state: Hashable, values: Dict[Hashable, Number]) -> MatrixGame:
        rows, cols = game.actions1[state], game.actions2[state]
        u = game.utility[state]
        payoff = tuple(
            tuple(u + values[game.delta[(state, a1, a2)]] for a2 in cols)
            for a1 in rows
        )
        return MatrixGame(rows, cols, payoff)

    def value_iteration(self, game: ConcurrentGame, horizon: int) -> Number:
        """Value of the game with `horizon` steps remaining; zero at horizon 0"""
        if horizon < 0:
            raise ValueError("horizon must be non-negative")
        values: Dict[Hashable, Number] = {s: Fraction(0) for s in game.utility}
        for _ in range(horizon):
            values = {
                s: (_exact(game.utility[s]) if game.is_dead_end(s)
                    else self.matrix_value(self.local_game(game, s, values)).value)
                for s in game.utility
            }
        return values[game.start]

    def backward_values(self, game: ConcurrentGame) -> Dict[Hashable, Number]:
        graph = nx.DiGraph()
        graph.add_nodes_from(game.utility)
        for (s, _a1, _a2), target in game.delta.items():
            graph.add_edge(s, target)
        try:
            order = list(nx.topological_sort(graph))
        except nx.NetworkXUnfeasible:
            raise GameStructureError("backward induction requires an acyclic game")

        values: Dict[Hashable, Number] = {}
        for s in reversed(order):
            if game.is_dead_end(s):
                values[s] = _exact(game.utility[s])
            else:
                values[s] = self.matrix_value(self.local_game(game, s, values)).value
        return values

    def backward_induction(self, game: ConcurrentGame) -> Number:
        """Exact value of an acyclic game"""
        value = self.backward_values(game)[game.start]
        logger.debug(f"📊 Backward induction over {len(game.utility)} states: {value}")
        return value

    # ===== INTERCHANGE FORMAT =====

    def load_game(self, text: str) -> ConcurrentGame:
        try:
            tree = _GAME_PARSER.parse(text)
            start, states, moves = _GameBuilder().transform(tree)
        except VisitError as e:
            raise GameStructureError(f"bad game file: {e.orig_exc}")
        except UnexpectedInput as e:
            raise GameStructureError(f"game file syntax error at {e.line}:{e.column}")
        if start is None:
            raise GameStructureError("game file has no 'start' line")

        game = ConcurrentGame(start=start)
        for name, utility in states:
            if name in game.utility:
                raise GameStructureError(f"state {name!r} declared twice")
            game.add_state(name, utility)
        actions1: Dict[str, List[str]] = {}
        actions2: Dict[str, List[str]] = {}
        for s, a1, a2, target in moves:
            if (s, a1, a2) in game.delta:
                raise GameStructureError(f"duplicate move {s} {a1} {a2}")
            game.delta[(s, a1, a2)] = target
            actions1.setdefault(s, [])
            actions2.setdefault(s, [])
            if a1 not in actions1[s]:
                actions1[s].append(a1)
            if a2 not in actions2[s]:
                actions2[s].append(a2)
        for s in actions1:
            game.actions1[s] = tuple(actions1[s])
            game.actions2[s] = tuple(actions2[s])

        problems = game.validate()
        if problems:
            raise GameStructureError(problems[0])
        return game

    def dump_game(self, game: ConcurrentGame) -> str:
        lines = [f"start {game.start}"]
        for s, u in game.utility.items():
            lines.append(f"state {s} {_exact(u)}")
        for (s, a1, a2), target in game.delta.items():
            lines.append(f"move {s} {a1} {a2} -> {target}")
        return "\n".join(lines) + "\n"


# ============= HELPERS =============

def _exact(value: Number) -> Fraction:
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10 ** 12)
    return Fraction(value)


def _pure(size: int, index: int) -> Tuple[Fraction, ...]:
    return tuple(Fraction(1 if k == index else 0) for k in range(size))


def _expand(strategy: Sequence[Number], kept: Sequence[int], size: int) -> Tuple[Number, ...]:
    out: List[Number] = [Fraction(0)] * size
    for value, index in zip(strategy, kept):
        out[index] = value
    return tuple(out)


def _saddle_point(A: List[List[Fraction]]) -> Optional[Tuple[int, int]]:
    row_mins = [min(row) for row in A]
    col_maxs = [max(A[i][j] for i in range(len(A))) for j in range(len(A[0]))]
    lower, upper = max(row_mins), min(col_maxs)
    if lower != upper:
        return None
    i = row_mins.index(lower)
    j = col_maxs.index(upper)
    return i, j


def _eliminate_dominated(A: List[List[Fraction]]) -> Tuple[List[int], List[int]]:
    """Iterated weak dominance; returns the surviving row and column indices"""
    rows, cols = list(range(len(A))), list(range(len(A[0])))
    changed = True
    while changed:
        changed = False
        for i in list(rows):
            if len(rows) == 1:
                break
            if any(
                k != i and all(A[k][j] >= A[i][j] for j in cols)
                and (any(A[k][j] > A[i][j] for j in cols) or k < i)
                for k in rows
            ):
                rows.remove(i)
                changed = True
        for j in list(cols):
            if len(cols) == 1:
                break
            if any(
                l != j and all(A[i][l] <= A[i][j] for i in rows)
                and (any(A[i][l] < A[i][j] for i in rows) or l < j)
                for l in cols
            ):
                cols.remove(j)
                changed = True
    return rows, cols


# ============= GAME FILE GRAMMAR =============

GAME_GRAMMAR = r"""
start: line*
?line: "start" NAME -> start_decl
     | "state" NAME UTILITY -> state_decl
     | "move" NAME NAME NAME "->" NAME -> move_decl

UTILITY: /-?\d+(\/\d+)?/
NAME: /[A-Za-z0-9_.']+/
COMMENT: /#[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""


class _GameBuilder(Transformer):
    def start(self, items):
        start = None
        states, moves = [], []
        for kind, payload in items:
            if kind == "start":
                if start is not None:
                    raise GameStructureError("more than one 'start' line")
                start = payload
            elif kind == "state":
                states.append(payload)
            else:
                moves.append(payload)
        return start, states, moves

    def start_decl(self, items):
        return "start", str(items[0])

    def state_decl(self, items):
        return "state", (str(items[0]), Fraction(str(items[1])))

    def move_decl(self, items):
        return "move", tuple(str(t) for t in items)


_GAME_PARSER = Lark(GAME_GRAMMAR, parser="lalr")


# Singleton instance
game_solver = GameSolver()
