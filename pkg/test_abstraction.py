# test_abstraction.py
from fractions import Fraction

import numpy as np
import pytest

from app.models.analysis import Verdict
from app.models.game import ConcurrentGame
from app.services.abstraction_service import (
    AbstractionEngine, AbstractResult, IntervalPartition, ObjectFlow, SkewTally, abstraction_engine,
)
from app.services.analysis_service import analysis_service
from app.services.corpus_service import corpus_service
from app.services.game_solver_service import game_solver
from app.services.semantics_service import NOOP_ACTION
from app.utils.errors import PartitionError
from conftest import TINY, build_game, load_source

SMALL_SALE = {"remaining": (0, 2), "payment": (0, 2), "balance": (0, 4)}


@pytest.fixture(scope="module")
def sale_games():
    """(game, exact value) for the correct and the buggy sale at a tiny scale"""
    out = {}
    for name in ("sale", "buggy_sale"):
        game = build_game(load_source(name), "p", "balance[p]", 1, SMALL_SALE)
        out[name] = (game, game.value())
    return out


# ===== PARTITIONS =====

def test_initial_partition_cells():
    partition = IntervalPartition.initial([(0, 100)], [0], 4)
    assert partition.intervals(0, 0) == [(0, 24), (25, 49), (50, 74), (75, 100)]
    assert partition.cell_of(0, 0, 49) == 1
    assert partition.cell_of(0, 0, 100) == 3
    assert list(partition.cells_overlapping(0, 0, (20, 60))) == [0, 1, 2]


def test_small_ranges_become_units():
    partition = IntervalPartition.initial([(0, 3)], [0, 1], 10)
    assert partition.intervals(1, 0) == [(0, 0), (1, 1), (2, 2), (3, 3)]
    assert partition.is_unit(0) and partition.is_unit(1)


def test_refine_cuts_only_the_named_objects():
    partition = IntervalPartition.initial([(0, 7), (5, 5), (0, 10)], [0, 1], 1)
    split = partition.refine({1: {0, 1}})
    assert split.intervals(1, 0) == [(0, 3), (4, 7)]
    assert split.intervals(1, 1) == [(5, 5)]
    assert split.intervals(1, 2) == [(0, 10)]
    assert split.intervals(0, 0) == [(0, 7)]  # other labels untouched
    assert split.refines(partition)
    assert not partition.refines(split)
    assert partition.refine({1: {2}}, parts=3).intervals(1, 2) == [(0, 2), (3, 5), (6, 10)]


def test_refine_needs_two_parts():
    partition = IntervalPartition.initial([(0, 7)], [0], 1)
    with pytest.raises(PartitionError):
        partition.refine({0: {0}}, parts=1)


def test_refining_a_finer_label_keeps_it_finer():
    partition = IntervalPartition.initial([(0, 20)], [0, 1], 1)
    finer = partition.refine({0: {0}}).refine({0: {0}})
    both = finer.refine({0: {0}, 1: {0}})
    assert set(both.grids[1][0]) <= set(both.grids[0][0])
    assert both.intervals(1, 0) == [(0, 9), (10, 20)]


def test_granularity_must_be_positive():
    with pytest.raises(PartitionError):
        IntervalPartition.initial([(0, 7)], [0], 0)


# ===== SUCCESSORS =====

@pytest.mark.parametrize("limit", [4096, 1])
def test_successor_boxes_of_assignment(limit):
    engine = AbstractionEngine(enumeration_limit=limit)
    game = build_game(TINY, "p", "x", 1)
    partition = engine.initial_partition(game, 4)
    at_assign = game.semantics.initial_state()._replace(t=1, l=2, c=0)

    low = engine.abstract_of(partition, at_assign)
    succ = engine.successor_boxes(game, partition, low, NOOP_ACTION, ())
    assert {(a.t, a.l, a.c) for a in succ} == {(1, 3, 0)}
    assert {a.cells for a in succ} == {(0, 0), (0, 1)}

    high = engine.abstract_of(partition, at_assign._replace(objs=(0, 90)))
    (only,) = engine.successor_boxes(game, partition, high, NOOP_ACTION, ())
    assert only.cells == (0, 3)


# ===== SOUNDNESS AND COMPLETENESS =====

@pytest.mark.parametrize("name", ["sale", "buggy_sale"])
@pytest.mark.parametrize("granularity", [1, 2, 3])
def test_bounds_bracket_the_value(sale_games, name, granularity):
    game, value = sale_games[name]
    partition = abstraction_engine.initial_partition(game, granularity)
    bounds = abstraction_engine.build_bounds(game, partition).bounds
    assert bounds.lower <= value <= bounds.upper


def test_sale_values(sale_games):
    # the correct sale never hands out more than the supply
    assert sale_games["sale"][1] == 2
    assert sale_games["buggy_sale"][1] == 3


@pytest.mark.parametrize("name", ["sale", "buggy_sale"])
def test_unit_partition_is_exact(sale_games, name):
    game, value = sale_games[name]
    result = abstraction_engine.build_bounds(game, abstraction_engine.unit_partition(game))
    assert result.bounds.lower == result.bounds.upper == value


def test_interval_propagation_stays_sound(sale_games):
    game, value = sale_games["buggy_sale"]
    engine = AbstractionEngine(enumeration_limit=1)
    for granularity in (1, 2):
        bounds = engine.build_bounds(game, engine.initial_partition(game, granularity)).bounds
        assert bounds.lower <= value <= bounds.upper


def test_refinement_never_loosens(sale_games):
    game, value = sale_games["buggy_sale"]
    outcome = abstraction_engine.analyze(game, granularity=1, max_iters=12)
    lowers = [b.lower for b in outcome.iterations]
    uppers = [b.upper for b in outcome.iterations]
    assert lowers == sorted(lowers)
    assert uppers == sorted(uppers, reverse=True)
    assert lowers[-1] <= value <= uppers[-1]
    assert outcome.verdict in (Verdict.CONVERGED, Verdict.CAPPED)
    if outcome.verdict == Verdict.CAPPED:
        assert len(outcome.iterations) == 12
    assert all(b.refined_label is not None for b in outcome.iterations[:-1])


def test_gap_target_stops_early():
    game = build_game(TINY, "p", "x", 1)
    outcome = abstraction_engine.analyze(game, granularity=1, max_iters=5, target_gap=Fraction(1000))
    assert outcome.verdict == Verdict.GAP_REACHED
    assert len(outcome.iterations) == 1


def test_iteration_cap():
    game = build_game(TINY, "p", "x", 1)
    outcome = abstraction_engine.analyze(game, granularity=1, max_iters=1)
    assert outcome.verdict == Verdict.CAPPED
    (bounds,) = outcome.iterations
    assert bounds.lower <= 100 <= bounds.upper
    assert bounds.refined_label is not None


def test_state_limit_caps_the_analysis():
    game = build_game(TINY, "p", "x", 1)
    outcome = AbstractionEngine(max_states=3).analyze(game, granularity=1, max_iters=3)
    assert outcome.verdict == Verdict.CAPPED
    assert outcome.iterations == []
    assert "abstract states" in outcome.warnings[0]


def test_skewness_is_averaged_per_label(sale_games):
    game, _ = sale_games["buggy_sale"]
    partition = abstraction_engine.initial_partition(game, 1)
    result = abstraction_engine.build_bounds(game, partition)
    skew = result.label_skewness()
    assert skew and all(v >= 0 for v in skew.values())
    refined, label = abstraction_engine.skewness_refine(game, partition, result)
    assert skew[label] > 0
    assert refined.refines(partition)
    assert refined.grids != partition.grids


def test_skewness_counts_every_transition_point():
    game = build_game(TINY, "p", "x", 1)
    partition = abstraction_engine.initial_partition(game, 4)
    result = abstraction_engine.build_bounds(game, partition)
    # one (noop, -) point per abstract state at the assignment, skewed or not
    at_assign = [a for a in result.lower if a.l == 2]
    assert result.skew[2].points == len(at_assign)
    gaps = [result.upper[a] - result.lower[a] for a in at_assign]
    assert result.label_skewness()[2] <= max(gaps)


def test_label_average_includes_zero_skew_points():
    tally = SkewTally()
    for skew in (0, 0, 3, 1):
        tally.add(skew)
    result = AbstractResult(None, None, {}, {}, {5: tally, 6: SkewTally()})
    assert result.label_skewness() == {5: 1}


def test_unit_partition_leaves_nothing_to_refine(sale_games):
    game, _ = sale_games["sale"]
    partition = abstraction_engine.unit_partition(game)
    result = abstraction_engine.build_bounds(game, partition)
    assert all(v == 0 for v in result.label_skewness().values())
    assert abstraction_engine.skewness_refine(game, partition, result) is None


def test_object_flow_carries_reads_backwards():
    game = build_game(load_source("sale"), "p", "balance[p]", 1, SMALL_SALE)
    sem = game.semantics
    flow = ObjectFlow(sem)
    buy = sem.functions[0]
    remaining, payment = sem.layout.numeric_index["remaining"], sem.layout.numeric_index["payment"]
    assert flow.seeds(buy.first, game.objective) == {remaining, payment}
    assert flow.seeds(0, game.objective) == {sem.layout.index_of("balance[p]")}

    need = flow.closure({buy.first: {remaining, payment}})
    # buy overwrites payment on entry, so the old value is never needed
    assert need[buy.entry] == {remaining}
    assert need[0] == need[buy.exit] == {remaining}
    assert payment in need[buy.exit - 1]


def test_refined_analysis_stays_sound_with_wider_cuts(sale_games):
    game, value = sale_games["buggy_sale"]
    outcome = abstraction_engine.analyze(game, granularity=1, max_iters=6, parts=3)
    assert all(b.lower <= value <= b.upper for b in outcome.iterations)
    assert outcome.iterations[-1].gap < outcome.iterations[0].gap


def test_analysis_rejects_a_single_part():
    with pytest.raises(PartitionError):
        abstraction_engine.analyze(build_game(TINY, "p", "x", 1), parts=1)


# ===== EXPLICIT GAMES =====

def layered_game(seed):
    """Random acyclic game of up to 8 layers of up to 5 states; states in one layer share their action sets"""
    rng = np.random.default_rng(seed)
    layers = int(rng.integers(1, 9))
    sizes = [int(v) for v in rng.integers(1, 6, size=layers)]
    game = ConcurrentGame(start=(0, 0))
    for layer, size in enumerate(sizes):
        last = layer == layers - 1
        acts1 = () if last else tuple(f"a{i}" for i in range(int(rng.integers(1, 3))))
        acts2 = () if last else tuple(f"b{i}" for i in range(int(rng.integers(1, 3))))
        for index in range(size):
            state = (layer, index)
            game.add_state(state, int(rng.integers(-3, 4)), acts1, acts2)
            for a1 in acts1:
                for a2 in acts2:
                    game.delta[(state, a1, a2)] = (layer + 1, int(rng.integers(0, sizes[layer + 1])))
    blocks = {s: (s[0], int(rng.integers(0, 2))) for s in game.utility}
    return game, blocks, layers


@pytest.mark.parametrize("seed", range(200))
def test_explicit_bounds_are_sound(seed):
    game, blocks, horizon = layered_game(seed)
    value = game_solver.value_iteration(game, horizon)
    assert value == game_solver.backward_induction(game)

    exact = abstraction_engine.explicit_bounds(game, {s: s for s in game.utility}, horizon)
    assert exact == (value, value)

    lower, upper = abstraction_engine.explicit_bounds(game, blocks, horizon)
    assert lower <= value <= upper

    coarse_lower, coarse_upper = abstraction_engine.explicit_bounds(game, {s: s[0] for s in game.utility}, horizon)
    assert coarse_lower <= lower and upper <= coarse_upper


def test_blocks_must_share_action_sets():
    game = game_solver.load_game("start a\nstate a 0\nstate b 1\nstate c 2\nmove a x y -> b\nmove b x y -> c\n")
    with pytest.raises(PartitionError):
        abstraction_engine.explicit_bounds(game, {"a": 0, "b": 1, "c": 1}, 2)


# ===== CORPUS =====

# desk scale of every bundled contract at which the concrete game is small enough to solve
UNIT_SCALE = {
    "rps": (1, {"Bids": (0, 1), "bid": (0, 1)}),
    "buggy_rps": (1, {"Bids": (0, 1), "bid": (0, 1)}),
    "auction": (1, {"Bids": (0, 2), "HighestBid": (0, 2), "bid": (0, 2)}),
    "buggy_auction": (1, {"Bids": (0, 2), "HighestBid": (0, 2), "bid": (0, 2)}),
    "lottery": (1, {"AlicesChoice": (0, 1), "BobsChoice": (0, 1), "IssuersChoice": (0, 1), "sum": (0, 3)}),
    "buggy_lottery": (1, {"AlicesChoice": (0, 1), "BobsChoice": (0, 1), "IssuersChoice": (0, 1), "sum": (0, 3)}),
    "sale": (1, SMALL_SALE),
    "buggy_sale": (1, SMALL_SALE),
    "transfer": (1, {"remaining": (0, 2), "payment": (0, 2), "balance": (0, 4), "amount": (0, 2)}),
    "buggy_transfer": (1, {"remaining": (0, 2), "payment": (0, 2), "balance": (0, 4), "amount": (0, 2),
                           "fromBalance": (0, 4), "toBalance": (0, 4)}),
}


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(UNIT_SCALE))
def test_unit_partition_is_exact_on_the_corpus(name):
    entry = corpus_service.get(name)
    k, overrides = UNIT_SCALE[name]
    merged = {**entry.overrides, **overrides}
    game = build_game(load_source(name), entry.party, entry.objective, k, merged)
    result = abstraction_engine.build_bounds(game, abstraction_engine.unit_partition(game))
    assert result.bounds.lower == result.bounds.upper == game.value()


@pytest.mark.slow
@pytest.mark.parametrize("name", ["auction", "buggy_auction", "sale", "buggy_sale", "transfer", "buggy_transfer"])
def test_corpus_bounds_contain_the_expected_value(name):
    report = analysis_service.corpus_run(name, max_iters=3)
    expected = corpus_service.get(name).expected
    assert all(b.lower <= expected <= b.upper for b in report.iterations)


@pytest.mark.slow
def test_buggy_sale_lower_bound_passes_the_cap():
    entry = corpus_service.get("buggy_sale")
    report = analysis_service.corpus_run("buggy_sale", max_iters=4)
    gaps = [b.gap for b in report.iterations]
    assert len(gaps) == 4
    assert all(later < earlier for earlier, later in zip(gaps, gaps[1:]))
    assert report.lower > entry.cap
    assert report.upper == entry.expected


@pytest.mark.slow
def test_buggy_transfer_upper_bound_passes_the_cap():
    entry = corpus_service.get("buggy_transfer")
    report = analysis_service.corpus_run("buggy_transfer", max_iters=2)
    assert report.upper >= entry.expected > entry.cap


@pytest.mark.slow
def test_sale_pair_separates():
    overrides = {"remaining": (0, 3), "payment": (0, 6), "balance": (0, 6)}
    correct = analysis_service.corpus_run("sale", overrides, max_iters=8)
    buggy = analysis_service.corpus_run("buggy_sale", overrides, max_iters=8)
    assert correct.upper < buggy.lower
    assert correct.upper <= 3 < buggy.lower


@pytest.mark.slow
@pytest.mark.parametrize("name", ["lottery", "buggy_lottery"])
def test_lottery_values_are_exact(name):
    entry = corpus_service.get(name)
    report = analysis_service.corpus_run(name, max_iters=4)
    assert report.verdict == Verdict.CONVERGED
    assert report.lower == report.upper == entry.expected


@pytest.mark.slow
def test_lottery_pair_separates():
    correct = analysis_service.corpus_run("lottery", max_iters=4)
    buggy = analysis_service.corpus_run("buggy_lottery", max_iters=4)
    assert buggy.upper < correct.lower


@pytest.mark.slow
def test_rps_with_wider_bids_stays_bracketed(corpus_game):
    assert corpus_game("rps").value() == Fraction(10, 3)
    game = corpus_game("rps", {"Bids": (0, 10), "bid": (0, 10)})
    outcome = abstraction_engine.analyze(game, granularity=1, max_iters=3)
    assert outcome.iterations
    assert all(b.lower <= Fraction(10, 3) <= b.upper for b in outcome.iterations)


@pytest.mark.slow
def test_buggy_rps_bounds_contain_the_expected_value():
    report = analysis_service.corpus_run("buggy_rps", max_iters=3)
    expected = corpus_service.get("buggy_rps").expected
    assert all(b.lower <= expected <= b.upper for b in report.iterations)
