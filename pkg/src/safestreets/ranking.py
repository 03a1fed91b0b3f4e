"""Pairwise comparison ranking via two-player TrueSkill.

Converts "which place looks safer?" votes into per-image scores on [0, 10].
The update is the analytic one-vs-one moment-matched posterior; draws are
modelled with the usual draw-margin construction.
"""

import csv
import math
import random
from dataclasses import dataclass

from .errors import InvalidInputError

SQRT2 = math.sqrt(2.0)


def _phi(x):
    """Standard normal pdf."""
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _Phi(x):
    """Standard normal cdf."""
    return 0.5 * math.erfc(-x / SQRT2)


def _Phi_inv(p):
    # Newton refinement over a rational initial guess is overkill here;
    # bisection on erfc is plenty for a one-off margin computation.
    lo, hi = -10.0, 10.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _Phi(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class Rating:
    """Gaussian skill belief for one image."""

    mu: float = 25.0
    sigma: float = 25.0 / 3.0

    def conservative(self):
        return self.mu - 3.0 * self.sigma


@dataclass(frozen=True)
class Comparison:
    left_id: str
    right_id: str
    outcome: str  # "left_wins" | "right_wins" | "draw"

    OUTCOMES = ("left_wins", "right_wins", "draw")

    def __post_init__(self):
        if self.left_id == self.right_id:
            raise InvalidInputError(
                f"comparison pits image {self.left_id!r} against itself"
            )
        if self.outcome not in self.OUTCOMES:
            raise InvalidInputError(f"unknown outcome {self.outcome!r}")


@dataclass(frozen=True)
class RatingConfig:
    mu0: float = 25.0
    sigma0: float = 25.0 / 3.0
    beta: float = 25.0 / 6.0
    tau: float = 0.0
    draw_probability: float = 0.10
    # "conservative" scores with mu - 3*sigma, "mu" with the raw mean.
    score_basis: str = "conservative"
    n_sweeps: int = 1
    sweep_seed: int = 0

    def __post_init__(self):
        if self.sigma0 <= 0 or self.beta <= 0:
            raise InvalidInputError("sigma0 and beta must be positive")
        if self.tau < 0:
            raise InvalidInputError("tau must be nonnegative")
        if not 0.0 <= self.draw_probability < 1.0:
            raise InvalidInputError("draw_probability must lie in [0, 1)")

    def draw_margin(self):
        """Performance-difference margin epsilon for the configured draw rate."""
        if self.draw_probability == 0.0:
            return 0.0
        return _Phi_inv((self.draw_probability + 1.0) / 2.0) * SQRT2 * self.beta


def _v_win(t, eps):
    denom = _Phi(t - eps)
    if denom < 1e-300:
        # Deep in the tail the ratio tends to the asymptote eps - t.
        return eps - t
    return _phi(t - eps) / denom


def _w_win(t, eps):
    v = _v_win(t, eps)
    return v * (v + t - eps)


def _v_draw(t, eps):
    denom = _Phi(eps - t) - _Phi(-eps - t)
    if denom < 1e-300:
        return -t
    return (_phi(-eps - t) - _phi(eps - t)) / denom


def _w_draw(t, eps):
    denom = _Phi(eps - t) - _Phi(-eps - t)
    if denom < 1e-300:
        return 1.0
    v = _v_draw(t, eps)
    return v * v + ((eps - t) * _phi(eps - t) + (eps + t) * _phi(eps + t)) / denom


def update_ratings(winner, loser, outcome, config):
    """One TrueSkill update. `outcome` is "win" (first argument won) or "draw".

    Returns the posterior (winner, loser) pair.
    """
    for r in (winner, loser):
        if not (math.isfinite(r.mu) and math.isfinite(r.sigma)):
            raise InvalidInputError("non-finite rating")
        if r.sigma <= 0:
            raise InvalidInputError("rating sigma must be positive")
    if outcome not in ("win", "draw"):
        raise InvalidInputError(f"unknown outcome {outcome!r}")

    sw2 = winner.sigma ** 2 + config.tau ** 2
    sl2 = loser.sigma ** 2 + config.tau ** 2
    c2 = sw2 + sl2 + 2.0 * config.beta ** 2
    c = math.sqrt(c2)
    t = (winner.mu - loser.mu) / c
    eps = config.draw_margin() / c

    if outcome == "win":
        v, w = _v_win(t, eps), _w_win(t, eps)
        mu_w = winner.mu + sw2 / c * v
        mu_l = loser.mu - sl2 / c * v
        w_w = w_l = w
    else:
        if config.draw_probability == 0.0:
            raise InvalidInputError("draw outcome with draw_probability = 0")
        mu_w = winner.mu + sw2 / c * _v_draw(t, eps)
        mu_l = loser.mu + sl2 / c * _v_draw(-t, eps)
        # abs(t) keeps the evaluation bit-identical under argument swap.
        w_w = w_l = _w_draw(abs(t), eps)

    sig_w = math.sqrt(sw2 * max(1e-12, 1.0 - sw2 / c2 * w_w))
    sig_l = math.sqrt(sl2 * max(1e-12, 1.0 - sl2 / c2 * w_l))
    return Rating(mu_w, sig_w), Rating(mu_l, sig_l)


def _apply_vote(ratings, vote, config):
    left = ratings.setdefault(vote.left_id, Rating(config.mu0, config.sigma0))
    right = ratings.setdefault(vote.right_id, Rating(config.mu0, config.sigma0))
    if vote.outcome == "left_wins":
        left, right = update_ratings(left, right, "win", config)
    elif vote.outcome == "right_wins":
        right, left = update_ratings(right, left, "win", config)
    else:
        left, right = update_ratings(left, right, "draw", config)
    ratings[vote.left_id] = left
    ratings[vote.right_id] = right


def rate_votes(votes, config=RatingConfig()):
    """Sequentially apply all votes; returns image id -> Rating."""
    ratings = {}
    order = list(votes)
    _sweep(ratings, order, config)
    if config.n_sweeps > 1:
        rng = random.Random(config.sweep_seed)
        for _ in range(config.n_sweeps - 1):
            rng.shuffle(order)
            _sweep(ratings, order, config)
    return ratings


def _sweep(ratings, votes, config):
    for vote in votes:
        _apply_vote(ratings, vote, config)


def rescale_scores(raw):
    """Affinely map raw scores so min -> 0 and max -> 10.

    All-equal inputs collapse to 5.0 for every key.
    """
    if not raw:
        return {}
    lo, hi = min(raw.values()), max(raw.values())
    if hi == lo:
        return {k: 5.0 for k in raw}
    span = hi - lo
    return {k: min(10.0, max(0.0, 10.0 * (v - lo) / span)) for k, v in raw.items()}


def score_images(votes, config=RatingConfig()):
    """Votes -> image id -> score in [0, 10]."""
    ratings = rate_votes(votes, config)
    if config.score_basis == "mu":
        raw = {k: r.mu for k, r in ratings.items()}
    else:
        raw = {k: r.conservative() for k, r in ratings.items()}
    return rescale_scores(raw)


_OUTCOME_FROM_CSV = {"left": "left_wins", "right": "right_wins", "equal": "draw"}


def read_votes_csv(path):
    """Read votes from CSV with header left_id,right_id,outcome."""
    votes = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"left_id", "right_id", "outcome"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise InvalidInputError(
                f"{path}: expected CSV header left_id,right_id,outcome"
            )
        for lineno, row in enumerate(reader, start=2):
            outcome = _OUTCOME_FROM_CSV.get(row["outcome"].strip())
            if outcome is None:
                raise InvalidInputError(
                    f"{path}:{lineno}: outcome must be left, right or equal"
                )
            try:
                votes.append(Comparison(row["left_id"], row["right_id"], outcome))
            except InvalidInputError as exc:
                raise InvalidInputError(f"{path}:{lineno}: {exc}") from exc
    return votes


def write_scores_csv(path, ratings, scores):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "mu", "sigma", "score"])
        for image_id in sorted(scores):
            r = ratings[image_id]
            writer.writerow([image_id, repr(r.mu), repr(r.sigma), repr(scores[image_id])])
