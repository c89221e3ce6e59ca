# app/services/contract_game_service.py
import itertools
import logging
from collections import deque
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from app.config import settings
from app.models.contract import ContractAst, MapAccess, Name, Objective, walk_expr
from app.models.game import ConcurrentGame
from app.services.frontend_service import contract_frontend
from app.services.game_solver_service import game_solver
from app.services.semantics_service import Action, ContractSemantics, ContractState, PartySet
from app.utils.errors import ResourceLimitError

logger = logging.getLogger(__name__)

JointAction = Tuple[Action, ...]


class ContractGame:
    """
    The bounded contract as a two-player concurrent game, generated lazily.

    Player 1 is the analyzed party; player 2 is the coalition of every other
    party and plays one action bundle per member. Utilities follow the
    monetary accounting of the objective: terminal states carry the objective
    expression, payouts to the analyzed party add the amount paid, and the
    first body label after a function entry subtracts what the party paid.
    """

    def __init__(self, semantics: ContractSemantics, objective: Objective):
        self.semantics = semantics
        self.objective = objective
        self.party = semantics.parties.analyzed_index
        self.others = tuple(q for q in range(semantics.parties.k) if q != self.party)
        self._check_objective()

    def _check_objective(self) -> None:
        layout = self.semantics.layout
        for node in walk_expr(self.objective.expr):
            if isinstance(node, Name) and node.name not in layout.numeric_index and node.name not in layout.id_index:
                self.semantics.literal_party(node.name)
            elif isinstance(node, MapAccess) and isinstance(node.index, Name) and node.index.name not in layout.id_index:
                self.semantics.literal_party(node.index.name)

    # ===== GAME INTERFACE =====

    @property
    def start(self) -> ContractState:
        return self.semantics.initial_state()

    def actions1(self, state: ContractState) -> List[Action]:
        return self.semantics.permitted_actions(state, self.party)

    def actions2(self, state: ContractState) -> List[JointAction]:
        if self.semantics.is_terminal(state):
            return []
        per_party = [self.semantics.permitted_actions(state, q) for q in self.others]
        return [tuple(combo) for combo in itertools.product(*per_party)]

    def joint(self, a1: Action, a2: JointAction) -> List[Action]:
        joint: List[Action] = [()] * self.semantics.parties.k
        joint[self.party] = a1
        for q, action in zip(self.others, a2):
            joint[q] = action
        return joint

    def successor(self, state: ContractState, a1: Action, a2: JointAction) -> ContractState:
        return self.semantics.step(state, self.joint(a1, a2))

    def utility(self, state: ContractState) -> Fraction:
        sem = self.semantics
        if sem.is_terminal(state):
            return Fraction(int(sem.eval(self.objective.expr, state)))
        if not self.objective.monetary:
            return Fraction(0)
        value = 0
        if sem.label_kind(state.l) == "payout":
            recipient, omega = sem.payout_of(state)
            if recipient == self.party:
                value += omega
        if state.l in sem.first_function:
            value -= sem.entry_payments(state, self.party)
        return Fraction(value)

    # ===== EXPLICIT GAME =====

    def materialize(self, limit: Optional[int] = None) -> ConcurrentGame:
        """Explore every reachable state into an explicit game"""
        limit = limit or settings.MAX_CONCRETE_STATES
        start = self.start
        game = ConcurrentGame(start=start)
        queue = deque([start])
        seen = {start}
        while queue:
            state = queue.popleft()
            acts1 = self.actions1(state)
            acts2 = self.actions2(state) if acts1 else []
            game.add_state(state, self.utility(state), acts1, acts2)
            for a1 in acts1:
                for a2 in acts2:
                    nxt = self.successor(state, a1, a2)
                    game.delta[(state, a1, a2)] = nxt
                    if nxt not in seen:
                        seen.add(nxt)
                        if len(seen) > limit:
                            raise ResourceLimitError(f"more than {limit} concrete states", limit)
                        queue.append(nxt)
        logger.info(f"✅ Materialized {len(game.utility)} concrete states")
        return game

    def value(self, limit: Optional[int] = None) -> Fraction:
        """Exact value of the bounded contract by backward induction"""
        return game_solver.backward_induction(self.materialize(limit))


def translate_game_interface(
    ast: ContractAst,
    party: str,
    objective: Union[str, Objective],
    k: int,
) -> ContractGame:
    """Build the lazily generated game of `ast` from the point of view of `party`"""
    if isinstance(objective, str):
        objective = contract_frontend.parse_objective(objective, ast)
    parties = PartySet.build(ast, party, k)
    semantics = ContractSemantics(ast, parties)
    logger.info(f"🔍 Game for {ast.name}: parties {', '.join(parties.names)}, analyzing {party}")
    return ContractGame(semantics, objective)
