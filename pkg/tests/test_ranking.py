import random

import pytest
from hypothesis import given, settings, strategies as st

from safestreets.errors import InvalidInputError
from safestreets.ranking import (
    Comparison,
    Rating,
    RatingConfig,
    rate_votes,
    rescale_scores,
    score_images,
    update_ratings,
)

from oracles import trueskill_update_oracle

FRESH = Rating(25.0, 25.0 / 3.0)
NO_DRAW = RatingConfig(draw_probability=0.0)
DEFAULT = RatingConfig()


class TestUpdateRatings:
    def test_fresh_pair_win_split(self):
        # Frozen from the quadrature oracle (zero draw margin):
        # winner 29.205221, loser 20.794779, sigma 7.194481 for both.
        winner, loser = update_ratings(FRESH, FRESH, "win", NO_DRAW)
        assert winner.mu == pytest.approx(29.205220870033603, abs=1e-9)
        assert loser.mu == pytest.approx(20.7947791299664, abs=1e-9)
        assert winner.sigma == pytest.approx(7.194481348831069, abs=1e-9)
        # Symmetric about the prior mean.
        assert winner.mu + loser.mu == pytest.approx(50.0, abs=1e-12)

    def test_win_moves_means_and_shrinks_sigmas(self):
        winner, loser = update_ratings(FRESH, FRESH, "win", DEFAULT)
        assert winner.mu > FRESH.mu
        assert loser.mu < FRESH.mu
        assert winner.sigma < FRESH.sigma
        assert loser.sigma < FRESH.sigma

    def test_identical_draw_keeps_means(self):
        a, b = update_ratings(FRESH, FRESH, "draw", DEFAULT)
        assert a.mu == pytest.approx(25.0)
        assert b.mu == pytest.approx(25.0)
        assert a.sigma < FRESH.sigma and b.sigma < FRESH.sigma

    def test_swap_symmetry(self):
        r1, r2 = Rating(28.0, 6.0), Rating(22.0, 5.0)
        # Draw: swapping the arguments swaps the outputs exactly.
        a, b = update_ratings(r1, r2, "draw", DEFAULT)
        b2, a2 = update_ratings(r2, r1, "draw", DEFAULT)
        assert (a2.mu, a2.sigma) == (a.mu, a.sigma)
        assert (b2.mu, b2.sigma) == (b.mu, b.sigma)
        # Win: describing the same vote from the other side swaps the outputs.
        left = score_images([Comparison("p", "q", "left_wins")], DEFAULT)
        right = score_images([Comparison("q", "p", "right_wins")], DEFAULT)
        assert left == right

    def test_nonfinite_rejected(self):
        with pytest.raises(InvalidInputError):
            update_ratings(Rating(float("nan"), 5.0), FRESH, "win", DEFAULT)
        with pytest.raises(InvalidInputError):
            update_ratings(Rating(25.0, float("inf")), FRESH, "win", DEFAULT)

    def test_draw_without_margin_rejected(self):
        with pytest.raises(InvalidInputError):
            update_ratings(FRESH, FRESH, "draw", NO_DRAW)

    def test_matches_quadrature_oracle_on_random_pairs(self):
        rng = random.Random(20260823)
        for _ in range(100):
            mu_w, mu_l = rng.uniform(10, 40), rng.uniform(10, 40)
            s_w, s_l = rng.uniform(2, 12), rng.uniform(2, 12)
            outcome = rng.choice(["win", "draw"])
            got_w, got_l = update_ratings(
                Rating(mu_w, s_w), Rating(mu_l, s_l), outcome, DEFAULT
            )
            exp_w, exp_l = trueskill_update_oracle(
                mu_w, s_w, mu_l, s_l, DEFAULT.beta, outcome, DEFAULT.draw_margin()
            )
            assert got_w.mu == pytest.approx(exp_w[0], abs=1e-6)
            assert got_w.sigma == pytest.approx(exp_w[1], abs=1e-6)
            assert got_l.mu == pytest.approx(exp_l[0], abs=1e-6)
            assert got_l.sigma == pytest.approx(exp_l[1], abs=1e-6)


class TestScoreImages:
    def test_empty_votes(self):
        assert score_images([], DEFAULT) == {}

    def test_dominance_pins_endpoints(self):
        votes = [Comparison("A", "B", "left_wins")] * 10
        scores = score_images(votes, DEFAULT)
        assert scores == {"A": 10.0, "B": 0.0}
        ratings = rate_votes(votes, DEFAULT)
        assert ratings["A"].mu > ratings["B"].mu

    def test_cycle_shrinks_spread(self):
        cycle = [
            Comparison("A", "B", "left_wins"),
            Comparison("B", "C", "left_wins"),
            Comparison("C", "A", "left_wins"),
        ]
        scores = score_images(cycle, DEFAULT)
        assert set(scores) == {"A", "B", "C"}
        assert all(0.0 <= s <= 10.0 for s in scores.values())
        # Frozen from the sequential oracle: the raw conservative spread of the
        # cycle is strictly below the 10-vote dominance spread.
        ratings_cycle = rate_votes(cycle, DEFAULT)
        ratings_dom = rate_votes([Comparison("A", "B", "left_wins")] * 10, DEFAULT)
        spread = lambda rr: max(r.conservative() for r in rr.values()) - min(
            r.conservative() for r in rr.values()
        )
        assert spread(ratings_cycle) < spread(ratings_dom)

    def test_self_vote_rejected(self):
        with pytest.raises(InvalidInputError):
            Comparison("A", "A", "left_wins")

    def test_all_equal_scores_collapse_to_five(self):
        assert rescale_scores({"A": 3.3, "B": 3.3}) == {"A": 5.0, "B": 5.0}

    def test_relabeling_equivariance(self):
        votes = [
            Comparison("A", "B", "left_wins"),
            Comparison("B", "C", "right_wins"),
            Comparison("A", "C", "draw"),
        ]
        mapping = {"A": "x", "B": "y", "C": "z"}
        renamed = [
            Comparison(mapping[v.left_id], mapping[v.right_id], v.outcome) for v in votes
        ]
        base = score_images(votes, DEFAULT)
        perm = score_images(renamed, DEFAULT)
        assert perm == {mapping[k]: v for k, v in base.items()}

    def test_star_tournament_winner_is_max(self):
        votes = [Comparison("X", f"opp{i}", "left_wins") for i in range(6)]
        scores = score_images(votes, DEFAULT)
        assert scores["X"] == max(scores.values())
        assert sum(1 for s in scores.values() if s == scores["X"]) == 1

    def test_mu_basis_config(self):
        votes = [Comparison("A", "B", "left_wins")]
        scores = score_images(votes, RatingConfig(score_basis="mu"))
        assert scores == {"A": 10.0, "B": 0.0}

    @given(
        st.lists(
            st.tuples(st.sampled_from("ABCD"), st.sampled_from("ABCD"),
                      st.sampled_from(["left_wins", "right_wins", "draw"])),
            max_size=25,
        )
    )
    @settings(max_examples=50, deadline=None)
    def test_scores_always_in_range(self, raw):
        votes = [Comparison(a, b, o) for a, b, o in raw if a != b]
        scores = score_images(votes, DEFAULT)
        assert all(0.0 <= s <= 10.0 for s in scores.values())

    def test_rescaling_idempotent(self):
        scored = {"A": 0.0, "B": 4.2, "C": 10.0}
        assert rescale_scores(scored) == scored

    def test_sigma_never_increases_over_vote_stream(self):
        # tau = 0, so uncertainty must shrink monotonically with evidence.
        rng = random.Random(7)
        votes = []
        for _ in range(40):
            a, b = rng.sample("ABCDE", 2)
            votes.append(Comparison(a, b, rng.choice(["left_wins", "right_wins", "draw"])))
        previous = {}
        for i in range(1, len(votes) + 1):
            ratings = rate_votes(votes[:i], DEFAULT)
            for k, r in ratings.items():
                assert r.sigma <= previous.get(k, DEFAULT.sigma0) + 1e-12
            previous = {k: r.sigma for k, r in ratings.items()}
