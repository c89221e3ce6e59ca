# test_frontend.py
import pytest

from app.models.contract import BinOp, Caller, IntLit, MapAccess, Name
from app.services.frontend_service import apply_overrides, contract_frontend
from app.services.frontend_service import ValidatedContract
from app.utils.errors import ConfigError, ContractSyntaxError, DuplicateDeclarationError, ObjectiveError
from conftest import TINY, load_source


def _diagnostics(source):
    result = contract_frontend.validate(contract_frontend.parse(source))
    assert isinstance(result, list), "contract was expected to fail validation"
    return result


# ===== PARSING =====

def test_parse_rps(rps_ast):
    assert rps_ast.name == "RPS"
    assert [f.name for f in rps_ast.functions] == ["registerBob", "play", "getReward"]
    assert [d.name for d in rps_ast.ids] == ["Alice", "Bob"]
    assert rps_ast.id_var("Alice").init == "issuer"
    assert rps_ast.id_var("Bob").init is None
    assert rps_ast.map_var("Bids").hi == 100
    assert rps_ast.t_max == 20


def test_parse_rps_parameters(rps_ast):
    register, play, _ = rps_ast.functions
    assert not register.is_multi_party
    assert play.is_multi_party
    (bid,) = register.params
    assert bid.payable and bid.target == Name("bid") and bid.designator == Caller()
    moves = play.params
    assert moves[0].default == 0
    assert moves[2].payable and moves[2].target == MapAccess("Bids", Name("Alice"))


def test_parse_lottery():
    ast = contract_frontend.parse(load_source("lottery"))
    assert len(ast.ids) == 4
    assert len(ast.functions) == 3
    assert ast.party_literals() == ("p",)


def test_compound_assignment_desugars(tiny_ast):
    stmt = tiny_ast.functions[0].body[0]
    assert stmt.value == BinOp("+", Name("x"), IntLit(5))
    sale = contract_frontend.parse(load_source("sale"))
    remaining = sale.functions[0].body[-1]
    assert remaining.value == BinOp("-", Name("remaining"), Name("payment"))


def test_contract_without_declarations_is_a_syntax_error():
    with pytest.raises(ContractSyntaxError) as exc:
        contract_frontend.parse("contract E { }")
    assert exc.value.line == 1


def test_syntax_error_position():
    source = "contract A {\n  numeric x[0,1] = 0;\n  function f[1,2]() { x = ; }\n}\n"
    with pytest.raises(ContractSyntaxError) as exc:
        contract_frontend.parse(source)
    assert exc.value.line == 3


def test_duplicate_declaration():
    source = "contract A {\n  numeric x[0,1] = 0;\n  numeric x[0,2] = 0;\n  function f[1,2](x : caller) { x = 1; }\n}\n"
    with pytest.raises(DuplicateDeclarationError) as exc:
        contract_frontend.parse(source)
    assert "'x'" in exc.value.message
    assert exc.value.line == 3


# ===== VALIDATION =====

def test_corpus_contracts_validate():
    for name in ("rps", "buggy_rps", "auction", "lottery", "sale", "transfer", "buggy_transfer"):
        result = contract_frontend.validate(contract_frontend.parse(load_source(name)))
        assert isinstance(result, ValidatedContract), name


def test_initial_value_out_of_range():
    diags = _diagnostics("contract A { numeric x[0,5] = 7; function f[1,2](x : caller) { x = 1; } }")
    assert any(d.rule == "initial-value" and "initial value out of range" in d.message for d in diags)


def test_empty_time_interval():
    diags = _diagnostics("contract A { numeric x[0,5] = 0; function f[3,3](x : caller) { x = 1; } }")
    assert [d.rule for d in diags] == ["time-interval"]


def test_multi_party_overlap():
    source = """
    contract A {
      id owner = o;
      numeric x[0,5] = 0;
      numeric y[0,5] = 0;
      function f[1,5](x : caller) { x = 1; }
      function g[4,8](y : owner = 0) { y = x; }
    }
    """
    diags = _diagnostics(source)
    assert any(d.rule == "multi-party-overlap" and d.declaration == "g" for d in diags)


def test_multi_party_caller_and_default():
    source = """
    contract A {
      id owner = o;
      numeric x[0,5] = 0;
      numeric y[0,5] = 0;
      function g[1,2](x : owner, y : caller = 0) { payout(caller, 1); }
    }
    """
    diags = _diagnostics(source)
    rules = {d.rule for d in diags}
    assert {"multi-party-caller", "param-default", "kind"} <= rules
    assert any("cannot use the caller keyword" in d.message for d in diags)


def test_kind_errors():
    source = """
    contract A {
      id owner = o;
      numeric x[0,5] = 0;
      function f[1,2](x : caller) {
        if (x) x = owner;
        owner = x;
      }
    }
    """
    messages = [d.message for d in _diagnostics(source)]
    assert any("not a boolean" in m for m in messages)
    assert any("needs a numeric value" in m for m in messages)
    assert any("needs a party value" in m for m in messages)


def test_payout_to_null_is_a_warning():
    source = "contract A { numeric x[0,5] = 0; function f[1,2](x : caller) { payout(null, x); } }"
    result = contract_frontend.validate(contract_frontend.parse(source))
    assert isinstance(result, ValidatedContract)
    (warning,) = result.warnings
    assert warning.rule == "payout-null"
    assert warning.render("a.qsc").startswith("a.qsc:1:1: warning: ")


def test_dead_code_warning():
    source = "contract A { numeric x[0,5] = 0; function f[1,2](x : caller) { return; x = 1; } }"
    result = contract_frontend.validate(contract_frontend.parse(source))
    assert [d.rule for d in result.warnings] == ["dead-code"]


# ===== OBJECTIVES =====

def test_parse_monetary_objective(rps_ast):
    objective = contract_frontend.parse_objective("payoff + 10 * AliceWon", rps_ast)
    assert objective.monetary
    assert objective.expr == BinOp("*", IntLit(10), Name("AliceWon"))


def test_parse_plain_objective(rps_ast):
    objective = contract_frontend.parse_objective("Bids[Alice]", rps_ast)
    assert not objective.monetary
    assert objective.expr == MapAccess("Bids", Name("Alice"))


def test_objective_party_literal():
    ast = contract_frontend.parse(load_source("sale"))
    objective = contract_frontend.parse_objective("balance[p]", ast)
    assert objective.expr == MapAccess("balance", Name("p"))


@pytest.mark.parametrize("text", ["2 * payoff", "payoff + payoff", "(payoff + 1) * 3", "Alice", "payoff +"])
def test_bad_objectives(rps_ast, text):
    with pytest.raises(ObjectiveError):
        contract_frontend.parse_objective(text, rps_ast)


def test_payoff_outside_objective_is_rejected():
    source = "contract A { numeric x[0,5] = 0; function f[1,2](x : caller) { x = payoff; } }"
    assert any("only allowed in objectives" in d.message for d in _diagnostics(source))


# ===== OVERRIDES / PRINTING =====

def test_apply_overrides_narrows_and_clamps():
    ast = contract_frontend.parse(load_source("sale"))
    narrowed = apply_overrides(ast, {"remaining": (0, 3), "balance": (0, 6)})
    remaining = narrowed.numeric("remaining")
    assert (remaining.lo, remaining.hi, remaining.init) == (0, 3, 3)
    assert narrowed.map_var("balance").hi == 6
    assert narrowed.numeric("payment") == ast.numeric("payment")
    assert apply_overrides(ast, {}) is ast


@pytest.mark.parametrize("overrides", [{"missing": (0, 1)}, {"remaining": (0, 5000)}, {"remaining": (3, 1)}])
def test_bad_overrides(overrides):
    ast = contract_frontend.parse(load_source("sale"))
    with pytest.raises(ConfigError):
        apply_overrides(ast, overrides)


@pytest.mark.parametrize("name", ["rps", "buggy_rps", "auction", "lottery", "buggy_sale", "buggy_transfer"])
def test_pretty_print_is_idempotent(name):
    ast = contract_frontend.parse(load_source(name))
    printed = contract_frontend.pretty_print(ast)
    reparsed = contract_frontend.parse(printed)
    assert reparsed == ast
    assert contract_frontend.pretty_print(reparsed) == printed


def test_pretty_print_tiny(tiny_ast):
    assert contract_frontend.pretty_print(tiny_ast) == (
        "contract Tiny {\n"
        "  numeric x[0,100] = 0;\n"
        "\n"
        "  function set[1,2](x : caller) {\n"
        "    x = (x + 5);\n"
        "  }\n"
        "}\n"
    )
