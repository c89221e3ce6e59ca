# test_cfg.py
import networkx as nx
import pytest

from app.models.contract import Not
from app.services.cfg_service import cfg_builder
from app.services.frontend_service import contract_frontend
from conftest import load_source


@pytest.fixture
def labeled(rps_ast):
    return cfg_builder.assign_labels(rps_ast)


def test_rps_labels(labeled):
    register, play, reward = labeled.functions
    assert (register.entry, register.first_body_label, register.exit) == (1, 2, 6)
    assert (play.entry, play.first_body_label, play.exit) == (7, 8, 21)
    assert (reward.entry, reward.first_body_label, reward.exit) == (22, 23, 27)
    assert labeled.labels[0].kind == "header"
    assert labeled.max_label == 27
    assert set(labeled.labels) == set(range(28))


def test_labels_follow_pre_order(labeled):
    play = labeled.functions[1]
    first_if = play.body[0]
    assert [c.label for c in first_if.then_branch] == [9]
    assert [c.label for c in first_if.else_branch] == [10]
    second_if = play.body[1]
    assert second_if.label == 11
    assert second_if.end_label == 20
    assert labeled.function_of(15).decl.name == "play"


def test_last_sets(labeled):
    register, play, reward = labeled.functions
    assert cfg_builder.last_set(register) == {4, 5}
    assert cfg_builder.last_set(play) == {12, 14, 17, 19, 20}
    # an if without else can end the function itself
    assert cfg_builder.last_set(reward) == {23, 26}


def test_play_edges(labeled):
    cfg = cfg_builder.build_cfg(labeled, "play")
    assert cfg.vertices == frozenset(range(7, 22))
    assert cfg.edge_set() == {
        (7, 8), (8, 9), (8, 10), (9, 21), (10, 11),
        (11, 12), (11, 13), (12, 21), (13, 14), (13, 15), (14, 21),
        (15, 16), (15, 18), (16, 17), (17, 21), (18, 19), (18, 20), (19, 21), (20, 21),
    }
    cond = labeled.labels[8].command.stmt.cond
    by_target = {e.dst: e for e in cfg.out_edges(8)}
    assert by_target[9].cond == cond
    assert by_target[10].cond == Not(cond)
    assert by_target[9].cond_text == "(played == 1)"
    assert cfg.out_edges(10)[0].cond is None


def test_return_jumps_to_exit(labeled):
    cfg = cfg_builder.build_cfg(labeled, 1)
    assert [e.dst for e in cfg.out_edges(9)] == [21]


def test_last_labels_reach_exit(labeled):
    for cfg in cfg_builder.build_all(labeled):
        fn = cfg.function
        into_exit = {e.src for e in cfg.edges if e.dst == fn.exit}
        returns = {e.src for e in cfg.edges if e.dst == fn.exit and
                   type(labeled.labels[e.src].command.stmt).__name__ == "Return"}
        assert into_exit - returns == cfg_builder.last_set(fn)


def test_unknown_function(labeled):
    with pytest.raises(KeyError):
        cfg_builder.build_cfg(labeled, "missing")


def test_instruction_table(labeled):
    table = cfg_builder.compile_instructions(labeled)
    assert table[7].kind == "entry" and table[7].next == 8
    assert table[8].kind == "if"
    assert (table[8].true_next, table[8].false_next) == (9, 10)
    assert table[9].kind == "return" and table[9].next == 21
    assert table[24].kind == "payout" and table[24].next == 25
    assert table[21].kind == "exit"
    assert 0 not in table


def test_networkx_export(labeled):
    cfg = cfg_builder.build_cfg(labeled, "getReward")
    graph = cfg_builder.to_networkx(labeled, cfg)
    assert nx.is_directed_acyclic_graph(graph)
    assert graph.nodes[22]["text"] == "entry getReward"
    assert graph.nodes[24]["text"].startswith("payout(caller,")
    edgelist = cfg_builder.export(labeled, cfg, "edgelist")
    assert "22 23 True" in edgelist.splitlines()
    graphml = cfg_builder.export(labeled, cfg, "graphml")
    assert "<graphml" in graphml
    with pytest.raises(ValueError):
        cfg_builder.export(labeled, cfg, "dot")


def test_unreachable_labels():
    ast = contract_frontend.parse(
        "contract A { numeric x[0,5] = 0; function f[1,2](x : caller) { return; x = 1; } }"
    )
    labeled = cfg_builder.assign_labels(ast)
    cfg = cfg_builder.build_cfg(labeled, "f")
    assert cfg_builder.unreachable_labels(labeled, cfg) == {3}
    rps = cfg_builder.assign_labels(contract_frontend.parse(load_source("rps")))
    assert all(not cfg_builder.unreachable_labels(rps, c) for c in cfg_builder.build_all(rps))
