import numpy as np
import pytest

from beamthin.array_model import ArrayGeometry
from beamthin.errors import InfeasibleConstraintsError
from beamthin.evaluation import ChromosomeEvaluator, ChromosomeScore, Sampling
from beamthin.ga import (GAConfig, GAState, crossover_mutate, evaluate, init_population,
                         repair_activation, run, select_and_cull)
from beamthin.objective import BeamSpec, ConstraintSet, CostBreakdown, check_constraints

G4 = ArrayGeometry(rows=4, cols=4)
SPEC4 = BeamSpec(0.0, 0.0, 21.0, 10.0)
FAST4 = Sampling(uv_step=0.02)


def feasible_brute_force(masks, limit, budget):
    """Element-by-element loop check of both constraints."""
    B, M, N = masks.shape
    total = 0
    for m in range(M):
        for n in range(N):
            a = sum(int(masks[b, m, n]) for b in range(B))
            if a > limit[m, n]:
                return False
            total += a
    return total <= budget and all(masks[b].sum() > 0 for b in range(B))


def excess(masks, limit):
    return int(np.maximum(masks.sum(axis=0) - limit, 0).sum())


def fake_state(costs, activations, shape=(1, 2, 2)):
    pop = np.stack([np.full(shape, i % 2, dtype=np.int8) for i in range(len(costs))])
    scores = [ChromosomeScore(CostBreakdown(c, c, 0.0), np.zeros((1, 4)), np.zeros(1), a)
              for c, a in zip(costs, activations)]
    return GAState(generation=0, population=pop, scores=scores,
                   rng=np.random.default_rng(0))


class TestConfig:
    @pytest.mark.parametrize("kwargs", [dict(population=3), dict(population=2),
                                        dict(population=7), dict(crossover_rate=1.5),
                                        dict(mutation_rate=-0.1), dict(elitism=0),
                                        dict(elitism=40), dict(workers=0),
                                        dict(max_generations=-1), dict(seed=-1)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            GAConfig(**kwargs)

    def test_default_mutation_rate(self):
        assert GAConfig().mutation_for((16, 16)) == 1 / 256
        assert GAConfig(mutation_rate=0.2).mutation_for((16, 16)) == 0.2


class TestRepair:
    def test_moves_to_nearest_free_neighbour(self):
        masks = np.zeros((6, 16, 16), dtype=np.int8)
        masks[:, 8, 8] = 1
        masks[0, 7, 8] = masks[0, 8, 7] = 1   # beam 0 is the largest user
        cons = ConstraintSet.uniform((16, 16), 5, 10.0, 10 / (256 * 7))
        out = repair_activation(masks, cons)
        assert out[:, 8, 8].sum() == 5
        assert out[0, 8, 8] == 0 and out[0, 8, 9] == 1
        assert out[0].sum() == masks[0].sum()

    def test_tie_break_prefers_smaller_row(self):
        masks = np.zeros((3, 5, 5), dtype=np.int8)
        masks[:, 2, 2] = 1
        cons = ConstraintSet.uniform((5, 5), 2, 10.0, 0.01)
        out = repair_activation(masks, cons)
        # all three beams tie in size; the first (beam 0) gives up (2, 2) for (1, 2)
        assert out[0, 2, 2] == 0 and out[0, 1, 2] == 1

    def test_feasible_input_unchanged(self):
        rng = np.random.default_rng(1)
        cons = ConstraintSet.uniform((16, 16), 7, 10.0, 10 / (256 * 7))
        masks = (rng.random((7, 16, 16)) < 0.5).astype(np.int8)
        np.testing.assert_array_equal(repair_activation(masks, cons), masks)

    @pytest.mark.parametrize("limit", [1, 2, 5])
    def test_random_infeasible_become_feasible(self, limit):
        rng = np.random.default_rng(limit)
        shape = (8, 8)
        cons = ConstraintSet.uniform(shape, limit, 10.0, 10 / (64 * 7))
        lim = cons.activation_limit
        for _ in range(60):
            masks = (rng.random((7,) + shape) < rng.uniform(0.3, 0.9)).astype(np.int8)
            out = repair_activation(masks, cons)
            assert feasible_brute_force(out, lim, cons.max_activations)
            allowed = excess(masks, lim)
            assert np.all(np.abs(out.sum(axis=(1, 2)) - masks.sum(axis=(1, 2))) <= allowed)

    def test_power_repair_drops_farthest_from_largest_beam(self):
        masks = np.zeros((2, 4, 4), dtype=np.int8)
        masks[0, 1:3, 1:3] = 1
        masks[0, 3, 3] = 1                     # far corner of the bigger beam
        masks[1, 0, 0] = 1
        cons = ConstraintSet.uniform((4, 4), 2, 5.0, 1.0)
        out = repair_activation(masks, cons)
        assert out.sum() == 5
        assert out[0, 3, 3] == 0 and out[1, 0, 0] == 1

    def test_empty_beam_gets_central_element(self):
        masks = np.zeros((2, 4, 4), dtype=np.int8)
        masks[0, 0, 0] = 1
        cons = ConstraintSet.uniform((4, 4), 2, 5.0, 0.1)
        out = repair_activation(masks, cons)
        assert out[1].sum() == 1 and out[1, 1, 1] == 1

    def test_unsatisfiable(self):
        masks = np.ones((2, 2, 2), dtype=np.int8)
        with pytest.raises(InfeasibleConstraintsError, match="constraints unsatisfiable"):
            repair_activation(masks, ConstraintSet.uniform((2, 2), 0, 1.0, 0.1))
        with pytest.raises(InfeasibleConstraintsError, match="constraints unsatisfiable"):
            repair_activation(masks, ConstraintSet.uniform((2, 2), 2, 1.0, 1.0))


class TestPopulation:
    def test_small_init(self):
        cons = ConstraintSet.uniform((2, 2), 1, 1.0, 0.1)
        st = init_population([BeamSpec(0, 0, 30.0)], cons, GAConfig(population=4, seed=3))
        assert st.population.shape == (4, 1, 2, 2)
        assert all(check_constraints(c, cons).feasible for c in st.population)

    def test_init_deterministic(self):
        cons = ConstraintSet.uniform((16, 16), 5, 10.0, 10 / (256 * 7))
        specs = [BeamSpec(0, 0, 5.0)] * 7
        a = init_population(specs, cons, GAConfig(seed=9))
        b = init_population(specs, cons, GAConfig(seed=9))
        assert a.population.tobytes() == b.population.tobytes()

    def test_seven_beams_limit_five(self):
        cons = ConstraintSet.uniform((16, 16), 5, 10.0, 10 / (256 * 7))
        specs = [BeamSpec(0, 0, 5.0)] * 7
        for seed in range(100):
            st = init_population(specs, cons, GAConfig(population=4, seed=seed))
            assert st.population.sum(axis=1).max() <= 5


class TestSelection:
    def test_sort_and_cull(self):
        st = select_and_cull(fake_state([3.0, 1.0, 2.0, 4.0], [10, 10, 10, 10]))
        assert [s.cost.total for s in st.scores] == [1.0, 2.0]
        assert st.size == 2

    def test_tie_prefers_fewer_activations(self):
        st = select_and_cull(fake_state([1.0, 1.0, 5.0, 6.0], [50, 40, 1, 1]))
        assert [s.activations for s in st.scores] == [40, 50]

    def test_unevaluated_population(self):
        st = fake_state([1.0, 2.0, 3.0, 4.0], [1, 1, 1, 1])
        st.scores[2] = None
        with pytest.raises(ValueError):
            select_and_cull(st)


class TestCrossoverMutate:
    def test_degenerate_rates_copy_survivors(self):
        cons = ConstraintSet.uniform((4, 4), 1, 10.0, 0.1)
        rng = np.random.default_rng(0)
        survivors = (rng.random((4, 1, 4, 4)) < 0.5).astype(np.int8)
        survivors[:, 0, 0, 0] = 1
        st = GAState(0, survivors, [None] * 4, np.random.default_rng(1))
        cfg = GAConfig(population=8, crossover_rate=0.0, mutation_rate=0.0, elitism=4)
        out = crossover_mutate(st, cfg, cons)
        assert out.population.shape[0] == 8
        np.testing.assert_array_equal(out.population[:4], survivors)
        pool = {c.tobytes() for c in survivors}
        assert all(c.tobytes() in pool for c in out.population)

    def test_forced_flip(self):
        cons = ConstraintSet.uniform((1, 2), 1, 10.0, 0.1)
        survivors = np.array([[[[1, 0]]], [[[1, 0]]]], dtype=np.int8)
        st = GAState(0, survivors, [None] * 2, np.random.default_rng(1))
        cfg = GAConfig(population=4, crossover_rate=0.0, mutation_rate=1.0, elitism=1)
        out = crossover_mutate(st, cfg, cons)
        np.testing.assert_array_equal(out.population[0], survivors[0])
        for child in out.population[1:]:
            np.testing.assert_array_equal(child, [[[0, 1]]])

    def test_forced_flip_to_empty_is_repaired(self):
        cons = ConstraintSet.uniform((1, 1), 1, 10.0, 0.1)
        survivors = np.ones((2, 1, 1, 1), dtype=np.int8)
        st = GAState(0, survivors, [None] * 2, np.random.default_rng(1))
        cfg = GAConfig(population=4, crossover_rate=0.0, mutation_rate=1.0, elitism=1)
        out = crossover_mutate(st, cfg, cons)
        assert np.all(out.population == 1)

    def test_offspring_always_feasible(self):
        cons = ConstraintSet.uniform((8, 8), 2, 10.0, 10 / (64 * 4))
        specs = [BeamSpec(0, 0, 10.0)] * 4
        cfg = GAConfig(population=16, mutation_rate=0.2, seed=5)
        st = init_population(specs, cons, cfg)
        for g in range(10):
            st.scores = [ChromosomeScore(CostBreakdown(float(i), float(i), 0.0), None, None, 1)
                         for i in st.rng.permutation(16)]
            select_and_cull(st)
            assert st.size == 8
            crossover_mutate(st, cfg, cons)
            assert st.size == 16
            assert all(check_constraints(c, cons).feasible for c in st.population)


class TestEvaluate:
    def test_identical_chromosomes_identical_scores(self):
        ev = ChromosomeEvaluator(G4, [SPEC4], sampling=FAST4)
        mask = np.ones((1, 4, 4), dtype=np.int8)
        st = GAState(0, np.stack([mask, mask, mask, 1 - mask + np.eye(4, dtype=np.int8)]),
                     [None] * 4, np.random.default_rng(0))
        evaluate(st, ev)
        assert st.scores[0].cost == st.scores[1].cost == st.scores[2].cost
        before = st.best_score.cost.total
        st.scores[3] = None
        evaluate(st, ev)
        assert st.best_score.cost.total <= before

    def test_empty_beam_rejected(self):
        ev = ChromosomeEvaluator(G4, [SPEC4], sampling=FAST4)
        with pytest.raises(ValueError, match="no active elements"):
            ev.score(np.zeros((1, 4, 4), dtype=np.int8))
        with pytest.raises(ValueError):
            ev.score(np.ones((2, 4, 4), dtype=np.int8))


class TestRun:
    CONS = ConstraintSet.uniform((4, 4), 1, 10.0, 10 / 16)

    def test_huge_f_min_stops_after_first_evaluation(self):
        res = run([SPEC4], G4, self.CONS, GAConfig(f_min=1e9, population=8), sampling=FAST4)
        assert res.generations == 0 and len(res.history) == 1
        assert res.stop_reason == "target cost reached"

    def test_same_seed_same_result(self):
        cfg = GAConfig(population=16, max_generations=8, seed=42)
        a = run([SPEC4], G4, self.CONS, cfg, sampling=FAST4)
        b = run([SPEC4], G4, self.CONS, cfg, sampling=FAST4)
        assert a.history == b.history
        assert a.masks.tobytes() == b.masks.tobytes()

    def test_parallel_evaluation_is_bit_identical(self):
        specs = [BeamSpec(0, 0, 20.0, 10.0), BeamSpec(15, 90, 24.0, 10.0)]
        cons = ConstraintSet.uniform((4, 4), 1, 10.0, 10 / 32)
        cfg = GAConfig(population=16, max_generations=6, seed=7)
        a = run(specs, G4, cons, cfg, sampling=FAST4)
        b = run(specs, G4, cons, GAConfig(population=16, max_generations=6, seed=7, workers=3),
                sampling=FAST4)
        assert a.history == b.history
        assert a.masks.tobytes() == b.masks.tobytes()

    def test_best_cost_non_increasing(self):
        res = run([SPEC4], G4, self.CONS, GAConfig(population=16, max_generations=30,
                                                   f_min=0.0, seed=1), sampling=FAST4)
        costs = [h["best_cost"] for h in res.history]
        assert all(b <= a for a, b in zip(costs, costs[1:]))
        assert all(h["feasible_count"] == 16 for h in res.history)

    def test_stagnation_stop(self):
        cfg = GAConfig(population=8, max_generations=50, f_min=0.0, seed=2,
                       stagnation_generations=3, stagnation_tol=1e9)
        res = run([SPEC4], G4, self.CONS, cfg, sampling=FAST4)
        assert res.stop_reason == "stagnation" and res.generations == 3

    def test_result_weights_carry_steering(self):
        spec = BeamSpec(20.0, 45.0, 22.0, 10.0)
        res = run([spec], G4, self.CONS, GAConfig(population=8, max_generations=2),
                  sampling=FAST4)
        np.testing.assert_array_equal(res.weights.masks, res.masks)
        assert res.score.cost.total == pytest.approx(res.history[-1]["best_cost"])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            run([SPEC4], G4, ConstraintSet.uniform((3, 3), 1, 1.0, 0.1), GAConfig())
