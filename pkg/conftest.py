# conftest.py
from pathlib import Path
from typing import Dict, Optional, Tuple

import pytest

from app.services.contract_game_service import ContractGame, translate_game_interface
from app.services.corpus_service import corpus_service
from app.services.frontend_service import apply_overrides, contract_frontend
from app.services.semantics_service import ContractSemantics, PartySet

CORPUS_DIR = Path(__file__).parent / "app" / "corpus"

# One function, one assignment: labels 0 header, 1 entry, 2 assignment, 3 exit
TINY = """
contract Tiny {
  numeric x[0,100] = 0;
  function set[1,2](x : caller) {
    x = x + 5;
  }
}
"""

# Pays whatever it holds to the caller in a second window
PIGGY = """
contract Piggy {
  numeric deposit[0,3] = 0;
  function put[1,2](payable deposit : caller) {
    if (deposit > 2) payout(caller, 1);
  }
  function take[3,4]() {
    payout(caller, 2);
  }
}
"""


def load_source(name: str) -> str:
    return corpus_service.source(name)


def build_game(source: str, party: str, objective: str, k: int,
               overrides: Optional[Dict[str, Tuple[int, int]]] = None) -> ContractGame:
    ast = apply_overrides(contract_frontend.parse(source), overrides or {})
    return translate_game_interface(ast, party, objective, k)


def build_semantics(source: str, party: str, k: int,
                    overrides: Optional[Dict[str, Tuple[int, int]]] = None) -> ContractSemantics:
    ast = apply_overrides(contract_frontend.parse(source), overrides or {})
    return ContractSemantics(ast, PartySet.build(ast, party, k))


@pytest.fixture
def rps_source():
    return load_source("rps")


@pytest.fixture
def rps_ast(rps_source):
    return contract_frontend.parse(rps_source)


@pytest.fixture
def rps_semantics(rps_source):
    return build_semantics(rps_source, "issuer", 2, {"Bids": (0, 2), "bid": (0, 2)})


@pytest.fixture
def tiny_ast():
    return contract_frontend.parse(TINY)


@pytest.fixture
def piggy_game():
    return build_game(PIGGY, "p", "payoff", 1)


@pytest.fixture
def corpus_game():
    """Factory: corpus contract as a game, with overrides replacing the bundled ones"""
    def make(name: str, overrides: Optional[Dict[str, Tuple[int, int]]] = None) -> ContractGame:
        entry = corpus_service.get(name)
        merged = dict(entry.overrides)
        merged.update(overrides or {})
        return build_game(load_source(name), entry.party, entry.objective, entry.parties, merged)
    return make
