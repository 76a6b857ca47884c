"""Bargained airtime allocation for GO-coordinated content sharing.

A group of wireless nodes sharing one channel during a limited contact
window has to split the airtime budget T.  Getting one second of node i's
content on the air costs (1 + beta_i) channel seconds: beta_i accounts for
the upload leg from a client to the group owner (GO), which relays all
client traffic, and is zero for the GO itself.  Each node draws a concave
utility from its broadcast time and carries a bargaining weight; the target
allocation maximizes the weighted product of utility gains over the
disagreement outcome (the generalized Nash bargaining solution, GNBS)
subject to the airtime budget and per-node caps.

The solver is a water-filling scheme.  Every player has a strictly
increasing "level" curve mapping broadcast time to an equalized marginal
quantity; at an unsaturated optimum all uncapped players sit at one common
level while capped players transmit everything they queued.  Players are
visited in ascending order of the level reached at their cap, which makes a
single forward sweep sufficient.  Each solution ships with a KKT residual
report so callers can certify optimality numerically.

Two reference baselines (equal slots and load-weighted slots), a brute-force
grid-search oracle, and the fairness metrics used to compare policies live
here as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "ROLE_GO",
    "ROLE_CLIENT",
    "DomainError",
    "InfeasibleProblemError",
    "Utility",
    "Player",
    "BargainingProblem",
    "Allocation",
    "KktReport",
    "level",
    "time_at_level",
    "level_order",
    "tail_airtime",
    "level_for_airtime",
    "gnbs_allocate",
    "eql_allocate",
    "wtd_allocate",
    "oracle_allocate",
    "nash_product",
    "log_nash_welfare",
    "wpf_aggregate",
    "kkt_residuals",
    "dissemination_rate",
    "weighted_airtime",
    "sample_feasible",
]

ROLE_GO = "go"
ROLE_CLIENT = "client"

_UTILITY_KINDS = ("normalized-linear", "log-shifted", "power")

#: relative tolerance and iteration cap for every bisection in this module
BISECT_REL_TOL = 1e-9
BISECT_MAX_ITER = 200

_REL_SLACK = 1e-12


class DomainError(ValueError):
    """An argument fell outside an operation's mathematical domain."""


class InfeasibleProblemError(ValueError):
    """No allocation strictly improves every player's disagreement outcome."""


@dataclass(frozen=True)
class Utility:
    """Concave, strictly increasing satisfaction from broadcast time.

    Three built-in families, selected by ``kind``:

    * ``normalized-linear``: value(x) = x / coeff where coeff is the cap on
      broadcast time, so value(cap) = 1 (fraction of own data delivered).
    * ``log-shifted``: value(x) = log(1 + coeff * x) with gain coeff > 0.
    * ``power``: value(x) = x ** coeff with exponent 0 < coeff <= 1.

    ``value`` and ``derivative`` accept scalars or numpy arrays.
    """

    kind: str
    coeff: float

    def __post_init__(self):
        if self.kind not in _UTILITY_KINDS:
            raise ValueError(f"unknown utility kind {self.kind!r}")
        if not (self.coeff > 0):
            raise ValueError("utility coefficient must be positive")
        if self.kind == "power" and self.coeff > 1:
            raise ValueError("power exponent must lie in (0, 1]")

    @classmethod
    def normalized_linear(cls, cap: float) -> "Utility":
        return cls("normalized-linear", float(cap))

    @classmethod
    def log_shifted(cls, gain: float) -> "Utility":
        return cls("log-shifted", float(gain))

    @classmethod
    def power(cls, exponent: float) -> "Utility":
        return cls("power", float(exponent))

    def value(self, x):
        if self.kind == "normalized-linear":
            return x / self.coeff
        if self.kind == "log-shifted":
            return np.log1p(self.coeff * x)
        return np.power(x, self.coeff)

    def derivative(self, x):
        if self.kind == "normalized-linear":
            return np.full_like(np.asarray(x, dtype=float), 1.0 / self.coeff) if np.ndim(x) else 1.0 / self.coeff
        if self.kind == "log-shifted":
            return self.coeff / (1.0 + self.coeff * x)
        return self.coeff * np.power(x, self.coeff - 1.0)


@dataclass(frozen=True)
class Player:
    """One group member's stake in the bargaining problem.

    ``data_size`` is megabits queued for the group, ``upload_rate`` the
    megabits/s this node can push to the GO (ignored for the GO itself),
    ``alpha`` a raw bargaining weight (normalized at problem level), and
    ``disagreement`` the broadcast seconds the node is guaranteed without an
    agreement.  ``utility`` defaults to normalized-linear over the node's
    cap, bound when the problem is built.
    """

    id: str
    data_size: float
    upload_rate: float = math.inf
    alpha: float = 1.0
    disagreement: float = 0.0
    utility: Utility | None = None
    role: str = ROLE_CLIENT

    def __post_init__(self):
        if self.role not in (ROLE_GO, ROLE_CLIENT):
            raise ValueError(f"unknown role {self.role!r}")
        if self.data_size < 0:
            raise ValueError("data_size must be >= 0")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.disagreement < 0:
            raise ValueError("disagreement must be >= 0")
        if self.role == ROLE_CLIENT and not (self.upload_rate > 0):
            raise ValueError("clients need upload_rate > 0")


@dataclass
class BargainingProblem:
    """Immutable-by-convention container tying players to a shared budget.

    Derived arrays (one entry per player, aligned with ``players``):

    * ``alphas``: bargaining weights normalized to sum to 1,
    * ``betas``: relay overhead, broadcast_rate / upload_rate for clients
      and 0 for the GO,
    * ``caps``: broadcast seconds needed to drain each queue,
    * ``disagreements``: disagreement broadcast times.

    Zero-load players are kept in the arrays but excluded from bargaining
    (``active`` lists the indices that take part).  Construction rejects
    problems where no allocation strictly beats every active player's
    disagreement outcome.
    """

    players: tuple[Player, ...]
    airtime: float
    broadcast_rate: float
    alphas: np.ndarray = field(init=False, repr=False)
    betas: np.ndarray = field(init=False, repr=False)
    caps: np.ndarray = field(init=False, repr=False)
    disagreements: np.ndarray = field(init=False, repr=False)
    utilities: tuple[Utility | None, ...] = field(init=False, repr=False)

    def __post_init__(self):
        self.players = tuple(self.players)
        if not self.players:
            raise ValueError("need at least one player")
        if not (self.airtime > 0):
            raise ValueError("airtime must be > 0")
        if not (self.broadcast_rate > 0):
            raise ValueError("broadcast_rate must be > 0")
        go_count = sum(1 for p in self.players if p.role == ROLE_GO)
        if go_count != 1:
            raise ValueError(f"expected exactly one GO, found {go_count}")
        if len({p.id for p in self.players}) != len(self.players):
            raise ValueError("duplicate player ids")

        raw = np.array([p.alpha for p in self.players], dtype=float)
        self.alphas = raw / raw.sum()
        self.betas = np.array(
            [0.0 if p.role == ROLE_GO else self.broadcast_rate / p.upload_rate for p in self.players],
            dtype=float,
        )
        self.caps = np.array([p.data_size / self.broadcast_rate for p in self.players], dtype=float)
        self.disagreements = np.array([p.disagreement for p in self.players], dtype=float)

        utilities = []
        for i, p in enumerate(self.players):
            if p.utility is not None:
                utilities.append(p.utility)
            elif self.caps[i] > 0:
                utilities.append(Utility.normalized_linear(self.caps[i]))
            else:
                utilities.append(None)
        self.utilities = tuple(utilities)

        self._validate_feasibility()

    def _validate_feasibility(self):
        spent = 0.0
        for i in self.active:
            if not (self.disagreements[i] < self.caps[i]):
                raise InfeasibleProblemError(
                    f"player {self.players[i].id}: disagreement point leaves no room below the cap"
                )
            spent += (1.0 + self.betas[i]) * self.disagreements[i]
        for i in range(len(self.players)):
            if self.caps[i] == 0 and self.disagreements[i] > 0:
                raise InfeasibleProblemError(
                    f"player {self.players[i].id}: positive disagreement with no data"
                )
        if self.active and spent >= self.airtime:
            raise InfeasibleProblemError(
                "disagreement outcomes already consume the whole airtime budget"
            )

    @property
    def active(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(self.players)) if self.caps[i] > 0)

    @property
    def go_index(self) -> int:
        return next(i for i, p in enumerate(self.players) if p.role == ROLE_GO)

    @property
    def demand(self) -> float:
        """Channel seconds needed to drain every active queue."""
        return float(sum((1.0 + self.betas[i]) * self.caps[i] for i in self.active))


@dataclass(frozen=True, eq=False)
class Allocation:
    """Per-player broadcast and upload seconds; ``saturated`` marks the case
    where every queue fits in the window and the budget is not binding."""

    broadcast_time: np.ndarray
    upload_time: np.ndarray
    saturated: bool = False


@dataclass(frozen=True, eq=False)
class KktReport:
    """Numerical certificate for a candidate optimizer.

    ``stationarity`` holds per-player deviations of the inverse level from
    the multiplier ``lam`` for uncapped players; ``slackness`` combines dual
    feasibility and complementary slackness for capped players.  ``budget``
    is the budget equation residual and ``max_residual`` the worst of all.
    """

    lam: float
    stationarity: np.ndarray
    slackness: np.ndarray
    budget: float
    max_residual: float


# ---------------------------------------------------------------------------
# level curves (the water-filling machinery)


def _bisect_increasing(f: Callable[[float], float], lo: float, hi: float, target: float,
                       rel_tol: float = BISECT_REL_TOL, max_iter: int = BISECT_MAX_ITER) -> float:
    """Solve f(x) = target for increasing f on (lo, hi], assuming a bracket."""
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            break
        val = f(mid)
        if abs(val - target) <= rel_tol * max(1.0, abs(target)):
            return mid
        if val < target:
            lo = mid
        else:
            hi = mid
    return hi


def level(problem: BargainingProblem, i: int, x: float) -> float:
    """Equalized bargaining level of player i at broadcast time x.

    Ratio of i's weighted utility gain over its disagreement point to its
    marginal utility, scaled by the channel cost (1 + beta_i).  Strictly
    increasing in x on (disagreement, cap]; at an unsaturated optimum all
    uncapped players share one level.
    """
    u = problem.utilities[i]
    if u is None:
        raise DomainError(f"player index {i} has no data and does not bargain")
    d = problem.disagreements[i]
    cap = problem.caps[i]
    if not (d < x <= cap * (1.0 + _REL_SLACK)):
        raise DomainError(f"x={x} outside ({d}, {cap}] for player index {i}")
    x = min(float(x), float(cap))
    gain = u.value(x) - u.value(d)
    return float((1.0 + problem.betas[i]) / problem.alphas[i] * gain / u.derivative(x))


def time_at_level(problem: BargainingProblem, i: int, lvl: float, method: str = "auto") -> float:
    """Invert :func:`level`: broadcast time at which player i reaches ``lvl``.

    Uses the closed form for normalized-linear utilities unless
    ``method="bisect"`` forces the generic bisection (handy for cross checks).
    """
    u = problem.utilities[i]
    if u is None:
        raise DomainError(f"player index {i} has no data and does not bargain")
    d = problem.disagreements[i]
    cap = problem.caps[i]
    top = level(problem, i, cap)
    if not (0.0 < lvl <= top * (1.0 + _REL_SLACK)):
        raise DomainError(f"level {lvl} outside (0, {top}] for player index {i}")
    if method == "auto" and u.kind == "normalized-linear":
        x = d + problem.alphas[i] * lvl / (1.0 + problem.betas[i])
    else:
        x = _bisect_increasing(lambda t: level(problem, i, t), d, cap, lvl)
    return float(min(x, cap))


def level_order(problem: BargainingProblem) -> tuple[int, ...]:
    """Active player indices sorted by the level reached at their cap
    (ascending); ties fall back to the original index."""
    return tuple(sorted(problem.active, key=lambda i: (level(problem, i, problem.caps[i]), i)))


def _tail_airtime(problem: BargainingProblem, order: Sequence[int], start: int, lvl: float) -> float:
    return sum(
        (1.0 + problem.betas[n]) * time_at_level(problem, n, lvl)
        for n in order[start:]
    )


def tail_airtime(problem: BargainingProblem, start: int, lvl: float) -> float:
    """Channel seconds consumed when every player from sorted position
    ``start`` onward is brought to the common ``lvl``.

    ``start`` indexes into :func:`level_order`.  ``lvl`` must not exceed the
    cap level of the player at ``start`` (the smallest in the tail).
    """
    order = level_order(problem)
    if not (0 <= start < len(order)):
        raise DomainError(f"start={start} outside the sorted order")
    head = order[start]
    top = level(problem, head, problem.caps[head])
    if not (0.0 < lvl <= top * (1.0 + _REL_SLACK)):
        raise DomainError(f"level {lvl} beyond the tail's smallest cap level {top}")
    return float(_tail_airtime(problem, order, start, min(lvl, top)))


def _polish_linear_level(
    problem: BargainingProblem, order: Sequence[int], start: int, v: float, lvl: float, top: float
) -> float:
    """Sharpen a bisected common level to machine precision when every tail
    utility is normalized-linear.

    The tail airtime is then piecewise linear in the level, so the segment the
    bisection landed on can be solved exactly.  Membership (interior vs. at
    cap) is re-checked after each solve; the loop settles in at most one pass
    per tail player.
    """
    tail = order[start:]

    def interior_at(s: float) -> list[int]:
        return [
            n for n in tail
            if problem.disagreements[n] + problem.alphas[n] * s / (1.0 + problem.betas[n])
            < problem.caps[n]
        ]

    members = interior_at(lvl)
    for _ in range(len(tail) + 1):
        slope = sum(problem.alphas[n] for n in members)
        if slope <= 0.0:
            return lvl
        fixed = sum(
            (1.0 + problem.betas[n])
            * (problem.disagreements[n] if n in members else problem.caps[n])
            for n in tail
        )
        solved = (v - fixed) / slope
        if not (0.0 < solved <= top * (1.0 + _REL_SLACK)):
            return lvl
        lvl = min(solved, top)
        refreshed = interior_at(lvl)
        if refreshed == members:
            return lvl
        members = refreshed
    return lvl


def _level_for_airtime(problem: BargainingProblem, order: Sequence[int], start: int, v: float) -> float:
    head = order[start]
    top = level(problem, head, problem.caps[head])
    vmax = _tail_airtime(problem, order, start, top)
    if not (0.0 < v <= vmax * (1.0 + _REL_SLACK)):
        raise DomainError(f"airtime {v} outside (0, {vmax}] for tail at {start}")
    if v >= vmax:
        return top
    lvl = _bisect_increasing(lambda s: _tail_airtime(problem, order, start, s), 0.0, top, v)
    if all(problem.utilities[n].kind == "normalized-linear" for n in order[start:]):
        lvl = _polish_linear_level(problem, order, start, v, lvl, top)
    return lvl


def level_for_airtime(problem: BargainingProblem, start: int, v: float) -> float:
    """Invert :func:`tail_airtime` in its level argument by bisection."""
    order = level_order(problem)
    if not (0 <= start < len(order)):
        raise DomainError(f"start={start} outside the sorted order")
    return float(_level_for_airtime(problem, order, start, v))


# ---------------------------------------------------------------------------
# allocators


def weighted_airtime(problem: BargainingProblem, broadcast_time: np.ndarray) -> float:
    """Channel seconds consumed by an allocation: sum of (1+beta_i) x_i."""
    return float(np.sum((1.0 + problem.betas) * np.asarray(broadcast_time, dtype=float)))


def _saturated_allocation(problem: BargainingProblem) -> tuple[Allocation, float]:
    x = np.zeros(len(problem.players))
    for i in problem.active:
        x[i] = problem.caps[i]
    if problem.active:
        lam = 1.0 / max(level(problem, i, problem.caps[i]) for i in problem.active)
    else:
        lam = 0.0
    return Allocation(x, problem.betas * x, saturated=True), lam


def _repair_budget(problem: BargainingProblem, order: Sequence[int], x: np.ndarray) -> None:
    """Push the budget residual (a few ulps of bisection slack) into interior
    players so the budget equation holds to machine precision."""
    diff = problem.airtime - weighted_airtime(problem, x)
    for i in reversed(order):
        if abs(diff) <= 1e-12 * max(1.0, problem.airtime):
            break
        lo = problem.disagreements[i]
        hi = problem.caps[i]
        if not (lo < x[i] < hi):
            continue
        new = min(max(x[i] + diff / (1.0 + problem.betas[i]), lo), hi)
        diff -= (new - x[i]) * (1.0 + problem.betas[i])
        x[i] = new


def gnbs_allocate(problem: BargainingProblem) -> tuple[Allocation, KktReport]:
    """Generalized Nash bargaining allocation of the airtime budget.

    If every queue fits in the window the allocation saturates at the caps.
    Otherwise players are swept in ascending cap-level order: at each step
    the remaining budget either exceeds what the whole tail absorbs at this
    player's cap level (then the player is capped), or the common level for
    the tail is found by bisection and this player stops there.  The returned
    report certifies the KKT system of the log-product program.
    """
    n = len(problem.players)
    x = np.zeros(n)
    if not problem.active:
        alloc = Allocation(x, np.zeros(n), saturated=True)
        return alloc, kkt_residuals(problem, alloc, 0.0)

    if problem.demand <= problem.airtime * (1.0 + _REL_SLACK):
        alloc, lam = _saturated_allocation(problem)
        return alloc, kkt_residuals(problem, alloc, lam)

    order = level_order(problem)
    spent = 0.0
    s_star = None
    for pos, i in enumerate(order):
        top = level(problem, i, problem.caps[i])
        vmax = _tail_airtime(problem, order, pos, top)
        rem = problem.airtime - spent
        if rem >= vmax * (1.0 - _REL_SLACK):
            xi = problem.caps[i]
        else:
            s = _level_for_airtime(problem, order, pos, rem)
            xi = min(time_at_level(problem, i, s), problem.caps[i])
            s_star = s
        x[i] = xi
        spent += (1.0 + problem.betas[i]) * xi

    _repair_budget(problem, order, x)
    if s_star is None:
        s_star = max(level(problem, i, problem.caps[i]) for i in problem.active)
    lam = 1.0 / s_star
    alloc = Allocation(x, problem.betas * x, saturated=False)
    return alloc, kkt_residuals(problem, alloc, lam)


def eql_allocate(problem: BargainingProblem) -> Allocation:
    """Equal-slot baseline: one common broadcast time for everyone, with the
    overflow from capped players redistributed equally among the rest."""
    n = len(problem.players)
    x = np.zeros(n)
    act = set(problem.active)
    if not act:
        return Allocation(x, np.zeros(n), saturated=True)

    capped: set[int] = set()
    while True:
        free = act - capped
        if not free:
            break
        used = sum((1.0 + problem.betas[i]) * problem.caps[i] for i in capped)
        denom = sum(1.0 + problem.betas[i] for i in free)
        common = (problem.airtime - used) / denom
        newly = {i for i in free if problem.caps[i] <= common * (1.0 + _REL_SLACK)}
        if not newly:
            for i in free:
                x[i] = common
            break
        capped |= newly

    for i in capped:
        x[i] = problem.caps[i]
    saturated = capped == act
    if not saturated:
        _repair_budget(problem, sorted(act - capped), x)
    return Allocation(x, problem.betas * x, saturated=saturated)


def wtd_allocate(problem: BargainingProblem) -> Allocation:
    """Load-weighted baseline: broadcast time proportional to queued data,
    clipped at the caps; the proportionality constant solves the budget
    equation by bisection."""
    n = len(problem.players)
    x = np.zeros(n)
    act = problem.active
    if not act:
        return Allocation(x, np.zeros(n), saturated=True)

    loads = np.array([p.data_size for p in problem.players], dtype=float)

    def consumed(c: float) -> float:
        return sum(
            (1.0 + problem.betas[i]) * min(problem.caps[i], c * loads[i])
            for i in act
        )

    c_hi = max(problem.caps[i] / loads[i] for i in act)
    if consumed(c_hi) <= problem.airtime * (1.0 + _REL_SLACK):
        alloc, _ = _saturated_allocation(problem)
        return alloc
    c = _bisect_increasing(consumed, 0.0, c_hi, problem.airtime)
    for i in act:
        x[i] = min(problem.caps[i], c * loads[i])
    uncapped = [i for i in act if x[i] < problem.caps[i]]
    _repair_budget(problem, uncapped, x)
    return Allocation(x, problem.betas * x, saturated=False)


def oracle_allocate(problem: BargainingProblem, resolution: int = 200,
                    refine_decades: int = 2) -> Allocation:
    """Brute-force reference maximizer of the bargaining objective.

    Exhaustive search on a grid over all but one active player's broadcast
    time (the remaining one is pinned by the budget equation), followed by
    ``refine_decades`` rounds of local grid refinement, each shrinking the
    step tenfold.  Every active player takes a turn as the pinned coordinate
    and the best run wins: pinning a player whose optimum sits exactly on its
    cap makes the feasible band around that boundary invisible to the grid,
    but a contended optimum always leaves at least one player strictly
    interior, so one of the runs has clean geometry.  Entirely independent of
    the water-filling solver; meant for cross-checking with at most 4 active
    players.
    """
    n = len(problem.players)
    x = np.zeros(n)
    act = list(problem.active)
    if not act:
        return Allocation(x, np.zeros(n), saturated=True)
    if problem.demand <= problem.airtime * (1.0 + _REL_SLACK):
        alloc, _ = _saturated_allocation(problem)
        return alloc

    T = problem.airtime

    def run(last: int) -> tuple[float, list[int], np.ndarray, float]:
        free = [j for j in act if j != last]
        ub = {j: min(problem.caps[j], T / (1.0 + problem.betas[j])) for j in free}
        ub_last = min(problem.caps[last], T / (1.0 + problem.betas[last]))

        def evaluate(cols: list[np.ndarray]) -> tuple[float, np.ndarray, float]:
            """Welfare over stacked candidate columns; returns (best value,
            best free point, best pinned coordinate)."""
            x_last = T
            for j, col in zip(free, cols):
                x_last = x_last - (1.0 + problem.betas[j]) * col
            x_last = x_last / (1.0 + problem.betas[last])
            ok = (x_last >= -1e-9) & (x_last <= ub_last * (1.0 + 1e-9) + 1e-15)
            x_last = np.clip(x_last, 0.0, ub_last)
            welfare = np.zeros_like(x_last)
            with np.errstate(divide="ignore", invalid="ignore"):
                for j, col in zip(free + [last], cols + [x_last]):
                    u = problem.utilities[j]
                    gain = u.value(col) - u.value(problem.disagreements[j])
                    term = np.where(gain > 0, np.log(np.maximum(gain, 1e-300)), -np.inf)
                    welfare = welfare + problem.alphas[j] * term
            welfare = np.where(ok, welfare, -np.inf)
            k = int(np.argmax(welfare))
            point = np.array([col[k] for col in cols])
            return float(welfare[k]), point, float(x_last[k])

        def search(axes: list[np.ndarray]) -> tuple[float, np.ndarray, float]:
            if not axes:
                xl = min(ub_last, T / (1.0 + problem.betas[last]))
                return 0.0, np.array([]), xl
            if len(axes) <= 2:
                mesh = np.meshgrid(*axes, indexing="ij")
                return evaluate([m.ravel() for m in mesh])
            best = (-np.inf, None, 0.0)
            inner = np.meshgrid(*axes[1:], indexing="ij")
            inner = [m.ravel() for m in inner]
            for a0 in axes[0]:
                cand = evaluate([np.full_like(inner[0], a0)] + inner)
                if cand[0] > best[0]:
                    best = cand
            return best

        h = T / resolution
        axes = [
            np.unique(np.concatenate([np.arange(0.0, ub[j] + 0.5 * h, h), [ub[j]]]))
            for j in free
        ]
        welfare, point, x_last = search(axes)

        step = h
        for _ in range(refine_decades):
            step /= 10.0
            offsets = np.arange(-15, 16) * step
            axes = [
                np.unique(np.clip(point[k] + offsets, 0.0, ub[j]))
                for k, j in enumerate(free)
            ]
            welfare, point, x_last = search(axes)
        return welfare, last, free, point, x_last

    _, last, free, point, x_last = max((run(j) for j in act), key=lambda r: r[0])
    for k, j in enumerate(free):
        x[j] = point[k]
    x[last] = x_last
    return Allocation(x, problem.betas * x, saturated=False)


# ---------------------------------------------------------------------------
# metrics


def nash_product(problem: BargainingProblem, allocation: Allocation) -> float:
    """Weighted product of utility gains; 0 when any active gain is <= 0."""
    prod = 1.0
    x = allocation.broadcast_time
    for i in problem.active:
        u = problem.utilities[i]
        gain = float(u.value(x[i]) - u.value(problem.disagreements[i]))
        if gain <= 0:
            return 0.0
        prod *= gain ** problem.alphas[i]
    return float(prod)


def log_nash_welfare(problem: BargainingProblem, allocation: Allocation) -> float:
    """Log of :func:`nash_product`; -inf at or below the disagreement point."""
    total = 0.0
    x = allocation.broadcast_time
    for i in problem.active:
        u = problem.utilities[i]
        gain = float(u.value(x[i]) - u.value(problem.disagreements[i]))
        if gain <= 0:
            return -math.inf
        total += problem.alphas[i] * math.log(gain)
    return float(total)


def wpf_aggregate(problem: BargainingProblem, gnbs_alloc: Allocation,
                  other_alloc: Allocation) -> float:
    """Weighted proportional-fairness aggregate of ``other_alloc`` relative
    to the bargaining optimum: sum of alpha_i (u_other - u_gnbs) / u_gnbs.

    Non-positive for every feasible alternative, a direct consequence of
    first-order optimality of the bargaining point.  Requires zero
    disagreement points so utilities equal gains.
    """
    total = 0.0
    for i in problem.active:
        if problem.disagreements[i] != 0:
            raise DomainError("wpf_aggregate assumes zero disagreement points")
        u = problem.utilities[i]
        ug = float(u.value(gnbs_alloc.broadcast_time[i]))
        if ug <= 0:
            raise DomainError("bargaining allocation must give positive utility")
        uo = float(u.value(other_alloc.broadcast_time[i]))
        total += problem.alphas[i] * (uo - ug) / ug
    return float(total)


def kkt_residuals(problem: BargainingProblem, allocation: Allocation, lam: float) -> KktReport:
    """Residuals of the reduced KKT system at a candidate allocation.

    Uncapped players contribute |1/level - lam| (stationarity); capped ones
    contribute max(0, lam - 1/level) (dual feasibility) together with the
    complementary-slackness product.  The budget residual is measured against
    the total demand when the allocation is saturated, the airtime budget
    otherwise.
    """
    n = len(problem.players)
    stationarity = np.zeros(n)
    slackness = np.zeros(n)
    x = allocation.broadcast_time
    for i in problem.active:
        cap = problem.caps[i]
        if x[i] <= problem.disagreements[i]:
            stationarity[i] = math.inf
            continue
        inv_level = 1.0 / level(problem, i, min(x[i], cap))
        at_cap = cap - x[i] <= 1e-9 * max(1.0, cap)
        if at_cap:
            dual = max(0.0, lam - inv_level)
            comp = abs((inv_level - lam) * (x[i] - cap))
            slackness[i] = max(dual, comp)
        else:
            stationarity[i] = abs(inv_level - lam)
    target = problem.demand if allocation.saturated else problem.airtime
    budget = abs(weighted_airtime(problem, x) - target)
    worst = max(
        float(stationarity.max(initial=0.0)),
        float(slackness.max(initial=0.0)),
        budget,
    )
    return KktReport(float(lam), stationarity, slackness, float(budget), float(worst))


def dissemination_rate(problem: BargainingProblem, allocation: Allocation, k: int) -> float:
    """Average megabits/s of player k's content reaching the group over the
    window: broadcast_rate * x_k / airtime."""
    return float(problem.broadcast_rate * allocation.broadcast_time[k] / problem.airtime)


def sample_feasible(problem: BargainingProblem, count: int, rng: np.random.Generator) -> np.ndarray:
    """Random feasible allocations (rows) of an unsaturated problem: budget
    met exactly, caps respected.  Used by the fairness property tests."""
    act = list(problem.active)
    if problem.demand <= problem.airtime:
        raise ValueError("sampling needs an unsaturated problem")
    out = np.zeros((count, len(problem.players)))
    betas = problem.betas
    caps = problem.caps
    for r in range(count):
        weights = rng.dirichlet(np.ones(len(act)))
        x = np.zeros(len(problem.players))
        remaining = problem.airtime
        pool = {act[k]: weights[k] for k in range(len(act))}
        while remaining > 1e-15 and pool:
            wsum = sum(pool.values())
            spill = {}
            for i, w in pool.items():
                xi = x[i] + remaining * (w / wsum) / (1.0 + betas[i])
                if xi >= caps[i]:
                    spill[i] = True
                    xi = caps[i]
                x[i] = xi
            used = weighted_airtime(problem, x)
            remaining = problem.airtime - used
            for i in spill:
                pool.pop(i)
        out[r] = x
    return out
