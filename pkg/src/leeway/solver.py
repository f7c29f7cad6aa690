"""Backward-induction solver for the two-round redistricting game.

Each state's process instantiates the same prototypical tree: a drawer
proposes a plan bias in [-4, 4] (or stalemates), up to two veto players
react, a veto triggers one redraw round, a second veto (or a drawer
stalemate) hands the map to the stalemate chain, and every enacted plan
passes through the post-enactment court machinery. Republicans maximize
the expected bias, Democrats minimize it; everything else is a move by
nature parametrized by :class:`~leeway.nature.GameParameters`.

Continuous proposal choices are optimized on a uniform grid over the bias
scale with one symmetric local refinement pass around the best grid point.
The refinement grid and all tie-breaking rules are mirror-symmetric, so
relabeling the parties and negating biases negates the equilibrium value
exactly (in floating point) for states without VRA exposure.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import stats

from . import nature
from .codebook import (Codebook, Drawer, FinalDrawer, PartyControl,
                       StateProcess, Stalemate1, Stalemate2, Veto1, Veto2)
from .errors import DomainError, NotApplicable
from .nature import BIAS_MAX, BIAS_MIN, CourtContext, GameParameters, PriorSpec

STALEMATE = "stalemate"

_PARTISAN = (PartyControl.DEMOCRATS, PartyControl.REPUBLICANS)


def _sign(party: PartyControl) -> float:
    return 1.0 if party is PartyControl.REPUBLICANS else -1.0


@dataclass(frozen=True)
class ControlAssignment:
    """Party control of each decision node in the game tree."""

    drawer: PartyControl
    veto1: PartyControl
    veto2: PartyControl
    stalemate1: PartyControl
    stalemate2: PartyControl
    court: PartyControl

    @classmethod
    def realized(cls, process: StateProcess) -> "ControlAssignment":
        return cls(
            drawer=process.drawer_control,
            veto1=process.veto1_control,
            veto2=process.veto2_control,
            stalemate1=process.stalemate1_control,
            stalemate2=process.stalemate2_control,
            court=process.court_control,
        )

    @classmethod
    def uniform(cls, process: StateProcess, party: PartyControl) -> "ControlAssignment":
        """Hand every partisan node to one party.

        Only nodes already controlled by Democrats or Republicans are
        reassigned; nonpartisan, split, and uncontrolled nodes keep their
        coding, and court control is never touched.
        """
        if party not in _PARTISAN:
            raise DomainError("uniform assignment requires a major party")

        def override(control: PartyControl) -> PartyControl:
            return party if control in _PARTISAN else control

        base = cls.realized(process)
        return cls(
            drawer=override(base.drawer),
            veto1=override(base.veto1),
            veto2=override(base.veto2),
            stalemate1=override(base.stalemate1),
            stalemate2=override(base.stalemate2),
            court=base.court,
        )


@dataclass(frozen=True)
class OptimizationGrid:
    """Uniform bias grid plus an optional local refinement pass."""

    step: float = 0.05
    refine: bool = True
    refine_factor: int = 20

    def __post_init__(self):
        if self.step <= 0 or self.step > (BIAS_MAX - BIAS_MIN) / 2:
            raise DomainError(f"grid step {self.step} out of range")
        if self.refine_factor < 2:
            raise DomainError("refine_factor must be at least 2")

    def points(self) -> np.ndarray:
        # Built symmetrically around zero so that mirrored problems are
        # evaluated at exactly negated abscissae.
        n_half = round(BIAS_MAX / self.step)
        pos = np.arange(1, n_half + 1) * (BIAS_MAX / n_half)
        return np.concatenate([-pos[::-1], [0.0], pos])

    def refine_points(self, center: float) -> np.ndarray:
        offsets = np.arange(-self.refine_factor, self.refine_factor + 1) * (
            self.step / self.refine_factor)
        return np.clip(center + offsets, BIAS_MIN, BIAS_MAX)


@dataclass(frozen=True)
class EquilibriumResult:
    """Subgame-perfect value and equilibrium-path diagnostics."""

    value: float
    path_probs: dict
    round2_proposal: Union[float, str, None]
    veto_thresholds: dict


@dataclass(frozen=True)
class LeewayScores:
    """Prior-averaged equilibrium values for one process."""

    realized: float
    maximum: float
    n_draws: int


def _argopt(xs: np.ndarray, values: np.ndarray, party: PartyControl) -> int:
    """Index of the player's best value; ties go to the most favorable bias.

    Republicans take the largest bias among exact ties, Democrats the
    smallest, which keeps tie-breaking mirror-symmetric.
    """
    signed = _sign(party) * values
    best = signed.max()
    idx = np.nonzero(signed == best)[0]
    return int(idx[-1] if party is PartyControl.REPUBLICANS else idx[0])


class _TreeEvaluator:
    """Vectorized continuation values for one (process, assignment, draw)."""

    def __init__(self, process: StateProcess, assignment: ControlAssignment,
                 theta: GameParameters, grid: OptimizationGrid):
        if process.drawer is Drawer.NA:
            raise NotApplicable(f"{process.key}: single-district state has no game")
        if not isinstance(assignment, ControlAssignment):
            raise DomainError("assignment must be a ControlAssignment")
        if process.drawer is not Drawer.NA and assignment.drawer is PartyControl.NA:
            raise DomainError("drawer node has no controlling coding")

        self.process = process
        self.assignment = assignment
        self.theta = theta
        self.grid = grid
        self.base = grid.points()
        self.ctx = CourtContext(
            court_review=process.court_review,
            court_control=assignment.court,
            preclearance=process.preclearance,
            initial_drawer_party=assignment.drawer,
        )
        self.drawer_bucket = ("legislature" if process.drawer is Drawer.LEGISLATURE
                              else "commission")

        # Veto nodes in play order. mode: absent | partisan | split | prob.
        self.vetoes = [
            self._veto_node(process.veto1, Veto1.NA, assignment.veto1,
                            voters=process.veto1 is Veto1.VOTERS),
            self._veto_node(process.veto2, Veto2.NA, assignment.veto2, voters=False),
        ]

        # Stalemate chain links with a body; court/unclear links resolve
        # terminally, so anything after them is unreachable.
        self.chain = []
        if process.stalemate1 is not Stalemate1.NA:
            self.chain.append((self._link_kind(process.stalemate1), assignment.stalemate1))
        if process.stalemate2 is not Stalemate2.NA:
            self.chain.append((self._link_kind(process.stalemate2), assignment.stalemate2))

        self._resolver_opt: dict[int, tuple[float, float]] = {}
        self._round2_propose: Union[tuple[float, float], None] = None
        self.decisions: dict[str, Union[np.ndarray, None]] = {}

    @staticmethod
    def _veto_node(body, na, control, voters):
        if body is na:
            return ("absent", control)
        if voters or control in (PartyControl.NONPARTISANS, PartyControl.NA):
            return ("prob", control)
        if control is PartyControl.SPLIT:
            return ("split", control)
        return ("partisan", control)

    @staticmethod
    def _link_kind(body) -> str:
        return {
            Stalemate1.COURT: "court", Stalemate2.COURT: "court",
            Stalemate1.UNCLEAR: "unclear", Stalemate2.UNCLEAR: "unclear",
            Stalemate1.COMMISSION: "commission",
            Stalemate1.COMMISSION_STAFF: "commission",
            Stalemate2.LEGISLATURE: "legislature",
        }[body]

    # -- continuation values -------------------------------------------------

    def exp_court(self, x):
        return nature.exp_court(x, self.ctx, self.theta)

    def _default_stalemate(self, anchor):
        return nature.stalemate_default(anchor, self.assignment.court,
                                        self.assignment.drawer, self.theta)

    def _resolver_optimum(self, k: int, party: PartyControl) -> tuple[float, float]:
        if k not in self._resolver_opt:
            x, value = self._optimize(lambda y: self.exp_court(y).value, party)
            self._resolver_opt[k] = (x, value)
        return self._resolver_opt[k]

    def stalemate_value(self, anchor, k: int = 0):
        """Expected value of entering the stalemate chain at link k."""
        anchor = np.asarray(anchor, dtype=float)
        if k >= len(self.chain):
            return self._default_stalemate(anchor)
        kind, control = self.chain[k]
        if kind in ("court", "unclear"):
            return self._default_stalemate(anchor)
        if control in _PARTISAN:
            _, value = self._resolver_optimum(k, control)
            return np.broadcast_to(np.float64(value), anchor.shape).copy() \
                if anchor.ndim else np.float64(value)
        nonpartisan = self.exp_court(
            nature.stalemate_default(anchor, control, self.assignment.drawer, self.theta)
        ).value
        if control is PartyControl.SPLIT:
            p = self.theta.stale_split_prob
            return p * self.stalemate_value(anchor, k + 1) + (1.0 - p) * nonpartisan
        return nonpartisan

    def _veto_cascade(self, x, enact_value, veto_value, record_round=None):
        """Value after the veto players react to a proposal x.

        ``veto_value`` is what a veto leads to (the round-2 subgame in
        round 1; the stalemate chain in round 2). Partisan players veto
        only when that strictly improves their side; ties pass.
        """
        x = np.asarray(x, dtype=float)
        stage = enact_value
        labels = ("veto1", "veto2")
        q_mem = None
        for index in (1, 0):
            mode, control = self.vetoes[index]
            if mode == "absent" or mode == "split":
                decision = None
            elif mode == "partisan":
                decision = _sign(control) * (veto_value - stage) > 0.0
                stage = np.where(decision, veto_value, stage)
            else:
                if q_mem is None:
                    q_mem = nature.pr_veto_nonpartisan(x, self.theta)
                decision = None
                stage = q_mem * veto_value + (1.0 - q_mem) * stage
            if record_round is not None and mode == "partisan":
                self.decisions[f"{record_round}_{labels[index]}"] = np.asarray(decision)
        return stage

    def round2_plan_value(self, y, record=False):
        """Value of a round-2 proposal y before the drawer's choice."""
        y = np.asarray(y, dtype=float)
        enact = self.exp_court(y).value
        stale = self.stalemate_value(y)
        return self._veto_cascade(y, enact, stale,
                                  record_round="round2" if record else None)

    def _round2_propose_optimum(self, party: PartyControl) -> tuple[float, float]:
        if self._round2_propose is None:
            self._round2_propose = self._optimize(self.round2_plan_value, party)
        return self._round2_propose

    def round2_value(self, x_prev):
        """Value of the round-2 subgame given the vetoed proposal x_prev."""
        x_prev = np.asarray(x_prev, dtype=float)
        mode = self.assignment.drawer
        if mode in _PARTISAN:
            _, opt = self._round2_propose_optimum(mode)
            stale = self.stalemate_value(x_prev)
            if mode is PartyControl.REPUBLICANS:
                return np.maximum(opt, stale)
            return np.minimum(opt, stale)
        proposal = nature.round2_nonpartisan_proposal(x_prev, self._veto_parties(),
                                                      self.theta)
        plan = self.round2_plan_value(proposal)
        if mode is PartyControl.SPLIT:
            p = self.theta.stale_split_prob
            return p * self.stalemate_value(x_prev) + (1.0 - p) * plan
        return plan

    def _veto_parties(self):
        first = self.assignment.veto1 if self.vetoes[0][0] != "absent" else None
        second = self.assignment.veto2 if self.vetoes[1][0] != "absent" else None
        return (first, second)

    def round1_plan_value(self, x, record=False):
        """Value of a round-1 proposal x before the drawer's choice."""
        x = np.asarray(x, dtype=float)
        enact = self.exp_court(x).value
        return self._veto_cascade(x, enact, self.round2_value(x),
                                  record_round="round1" if record else None)

    def _optimize(self, fn, party: PartyControl) -> tuple[float, float]:
        """Grid optimum of fn for the given party, with local refinement."""
        values = np.asarray(fn(self.base))
        i = _argopt(self.base, values, party)
        best_x, best_v = float(self.base[i]), float(values[i])
        if self.grid.refine:
            fine = self.grid.refine_points(best_x)
            fine_values = np.asarray(fn(fine))
            j = _argopt(fine, fine_values, party)
            best_x, best_v = float(fine[j]), float(fine_values[j])
        return best_x, best_v

    # -- top level ------------------------------------------------------------

    def solve(self) -> EquilibriumResult:
        mode = self.assignment.drawer

        # Record partisan veto decision rules on the base grid for the
        # threshold diagnostics before optimizing.
        if any(m == "partisan" for m, _ in self.vetoes):
            self.round2_plan_value(self.base, record=True)
            self.round1_plan_value(self.base, record=True)

        if mode in _PARTISAN:
            x1, propose_value = self._optimize(self.round1_plan_value, mode)
            stale_value = float(self.stalemate_value(0.0))
            if _sign(mode) * (stale_value - propose_value) > 0.0:
                action, value = STALEMATE, stale_value
            else:
                action, value = x1, propose_value
        elif mode is PartyControl.SPLIT:
            p = self.theta.stale_split_prob
            value = float(p * self.stalemate_value(0.0)
                          + (1.0 - p) * self.round1_plan_value(0.0))
            action = 0.0
        else:
            action, value = 0.0, float(self.round1_plan_value(0.0))

        return EquilibriumResult(
            value=value,
            path_probs=self._path_probs(action),
            round2_proposal=self._round2_proposal(action),
            veto_thresholds=self._thresholds(),
        )

    def _round2_proposal(self, round1_action):
        if all(m == "absent" for m, _ in self.vetoes):
            return None
        x_prev = 0.0 if round1_action == STALEMATE else float(round1_action)
        mode = self.assignment.drawer
        if mode in _PARTISAN:
            x2, opt = self._round2_propose_optimum(mode)
            stale = float(self.stalemate_value(x_prev))
            if _sign(mode) * (stale - opt) > 0.0:
                return STALEMATE
            return x2
        return float(nature.round2_nonpartisan_proposal(x_prev, self._veto_parties(),
                                                        self.theta))

    def _thresholds(self) -> dict:
        out = {}
        for key in ("round1_veto1", "round1_veto2", "round2_veto1", "round2_veto2"):
            decisions = self.decisions.get(key)
            if decisions is None:
                out[key] = None
                continue
            flips = np.nonzero(decisions[:-1] != decisions[1:])[0]
            if len(flips) == 0:
                out[key] = None
            else:
                i = int(flips[0])
                out[key] = float((self.base[i] + self.base[i + 1]) / 2.0)
        return out

    # -- equilibrium path accounting -------------------------------------------

    def _path_probs(self, round1_action) -> dict:
        acc = {"legislature": 0.0, "commission": 0.0, "court": 0.0}

        def enact(x: float, mass: float, bucket: str):
            r = self.exp_court(x)
            acc[bucket] += mass * r.pr_survive
            acc["court"] += mass * r.pr_redraw

        def stalemate_walk(anchor: float, mass: float, k: int = 0):
            if k >= len(self.chain):
                acc["court"] += mass
                return
            kind, control = self.chain[k]
            if kind in ("court", "unclear"):
                acc["court"] += mass
                return
            bucket = "commission" if kind == "commission" else "legislature"
            if control in _PARTISAN:
                x_opt, _ = self._resolver_optimum(k, control)
                enact(x_opt, mass, bucket)
                return
            proposal = float(nature.stalemate_default(
                anchor, control, self.assignment.drawer, self.theta))
            if control is PartyControl.SPLIT:
                p = self.theta.stale_split_prob
                stalemate_walk(anchor, mass * p, k + 1)
                enact(proposal, mass * (1.0 - p), bucket)
            else:
                enact(proposal, mass, bucket)

        def plan_walk(x: float, mass: float, veto_value: float, on_veto):
            """Pass proposal x through both veto nodes."""
            enact_value = float(self.exp_court(x).value)
            # veto2's accept-continuation is enactment; veto1's is the
            # veto2 stage value.
            mode2, control2 = self.vetoes[1]
            after_veto2 = self._stage_value(mode2, control2, x, enact_value, veto_value)
            remaining = mass
            for index, after in ((0, after_veto2), (1, enact_value)):
                mode, control = self.vetoes[index]
                if mode == "partisan":
                    if _sign(control) * (veto_value - after) > 0.0:
                        on_veto(x, remaining)
                        return
                elif mode == "prob":
                    q = float(nature.pr_veto_nonpartisan(x, self.theta))
                    on_veto(x, remaining * q)
                    remaining *= (1.0 - q)
            enact(x, remaining, self.drawer_bucket)

        def round2_walk(x_prev: float, mass: float):
            mode = self.assignment.drawer
            if mode in _PARTISAN:
                x2, opt = self._round2_propose_optimum(mode)
                stale = float(self.stalemate_value(x_prev))
                if _sign(mode) * (stale - opt) > 0.0:
                    stalemate_walk(x_prev, mass)
                else:
                    plan_walk(x2, mass, float(self.stalemate_value(x2)),
                              lambda y, m: stalemate_walk(y, m))
                return
            proposal = float(nature.round2_nonpartisan_proposal(
                x_prev, self._veto_parties(), self.theta))
            if mode is PartyControl.SPLIT:
                p = self.theta.stale_split_prob
                stalemate_walk(x_prev, mass * p)
                mass *= (1.0 - p)
            plan_walk(proposal, mass, float(self.stalemate_value(proposal)),
                      lambda y, m: stalemate_walk(y, m))

        def round1_plan(x: float, mass: float):
            plan_walk(x, mass, float(self.round2_value(x)),
                      lambda y, m: round2_walk(y, m))

        mode = self.assignment.drawer
        if round1_action == STALEMATE:
            stalemate_walk(0.0, 1.0)
        elif mode is PartyControl.SPLIT:
            p = self.theta.stale_split_prob
            stalemate_walk(0.0, p)
            round1_plan(0.0, 1.0 - p)
        else:
            round1_plan(float(round1_action), 1.0)
        return acc

    def _stage_value(self, mode, control, x, accept, veto):
        if mode in ("absent", "split"):
            return accept
        if mode == "partisan":
            return veto if _sign(control) * (veto - accept) > 0.0 else accept
        q = float(nature.pr_veto_nonpartisan(x, self.theta))
        return q * veto + (1.0 - q) * accept


def solve(process: StateProcess, assignment: ControlAssignment,
          theta: GameParameters, grid: OptimizationGrid | None = None) -> EquilibriumResult:
    """Solve one state's game by backward induction.

    Raises NotApplicable for single-district (drawer=NA) processes and
    DomainError for malformed assignments. A production grid has at least
    81 points (default 161); coarser grids are accepted for verification
    against the brute-force oracle.
    """
    grid = grid or OptimizationGrid()
    return _TreeEvaluator(process, assignment, theta, grid).solve()


def brute_force_solve(process: StateProcess, assignment: ControlAssignment,
                      theta: GameParameters, coarse_grid: OptimizationGrid) -> float:
    """Minimax value by exhaustive enumeration on a coarse grid.

    An independent scalar re-implementation of the game: every drawer
    action and veto decision is enumerated with plain loops and the
    expectations are summed directly, with no grid refinement and no shared
    traversal code with :func:`solve`. Used as a verification oracle.
    """
    points = [float(p) for p in coarse_grid.points()]
    if len(points) > 9:
        raise DomainError("brute force is restricted to grids of at most 9 points")
    if process.drawer is Drawer.NA:
        raise NotApplicable(f"{process.key}: single-district state has no game")

    ctx = CourtContext(process.court_review, assignment.court,
                       process.preclearance, assignment.drawer)
    theta_ = theta

    def enacted(x: float) -> float:
        return float(nature.exp_court(x, ctx, theta_).value)

    chain = []
    if process.stalemate1 is not Stalemate1.NA:
        chain.append((_TreeEvaluator._link_kind(process.stalemate1), assignment.stalemate1))
    if process.stalemate2 is not Stalemate2.NA:
        chain.append((_TreeEvaluator._link_kind(process.stalemate2), assignment.stalemate2))

    def stalemate(anchor: float, k: int = 0) -> float:
        if k >= len(chain):
            return float(nature.stalemate_default(anchor, assignment.court,
                                                  assignment.drawer, theta_))
        kind, control = chain[k]
        if kind in ("court", "unclear"):
            return float(nature.stalemate_default(anchor, assignment.court,
                                                  assignment.drawer, theta_))
        if control in _PARTISAN:
            candidates = [enacted(y) for y in points]
            return max(candidates) if control is PartyControl.REPUBLICANS else min(candidates)
        settled = enacted(float(nature.stalemate_default(anchor, control,
                                                         assignment.drawer, theta_)))
        if control is PartyControl.SPLIT:
            p = theta_.stale_split_prob
            return p * stalemate(anchor, k + 1) + (1.0 - p) * settled
        return settled

    nodes = [
        _TreeEvaluator._veto_node(process.veto1, Veto1.NA, assignment.veto1,
                                  voters=process.veto1 is Veto1.VOTERS),
        _TreeEvaluator._veto_node(process.veto2, Veto2.NA, assignment.veto2, voters=False),
    ]

    def vetoed_value(x: float, accept: float, veto: float, index: int) -> float:
        mode, control = nodes[index]
        if mode in ("absent", "split"):
            return accept
        if mode == "partisan":
            # Both options enumerated; the player keeps the better one,
            # accepting on ties.
            options = [accept, veto]
            signed = [_sign(control) * v for v in options]
            return options[1] if signed[1] > signed[0] else options[0]
        q = float(nature.pr_veto_nonpartisan(x, theta_))
        return q * veto + (1.0 - q) * accept

    def through_vetoes(x: float, veto_cont: float) -> float:
        stage = vetoed_value(x, enacted(x), veto_cont, 1)
        return vetoed_value(x, stage, veto_cont, 0)

    def round2(x_prev: float) -> float:
        mode = assignment.drawer
        if mode in _PARTISAN:
            candidates = [through_vetoes(y, stalemate(y)) for y in points]
            candidates.append(stalemate(x_prev))
            return max(candidates) if mode is PartyControl.REPUBLICANS else min(candidates)
        first = assignment.veto1 if nodes[0][0] != "absent" else None
        second = assignment.veto2 if nodes[1][0] != "absent" else None
        y = float(nature.round2_nonpartisan_proposal(x_prev, (first, second), theta_))
        settled = through_vetoes(y, stalemate(y))
        if mode is PartyControl.SPLIT:
            p = theta_.stale_split_prob
            return p * stalemate(x_prev) + (1.0 - p) * settled
        return settled

    def round1(x: float) -> float:
        return through_vetoes(x, round2(x))

    mode = assignment.drawer
    if mode in _PARTISAN:
        candidates = [round1(x) for x in points]
        candidates.append(stalemate(0.0))
        return max(candidates) if mode is PartyControl.REPUBLICANS else min(candidates)
    if mode is PartyControl.SPLIT:
        p = theta_.stale_split_prob
        return p * stalemate(0.0) + (1.0 - p) * round1(0.0)
    return round1(0.0)


def leeway(process: StateProcess, prior: PriorSpec, n_draws: int = 100,
           seed: int = 0, grid: OptimizationGrid | None = None) -> LeewayScores:
    """Prior-averaged equilibrium scores for one process.

    ``realized`` averages the equilibrium under the coded party control;
    ``maximum`` is the magnitude of the average equilibrium after handing
    every partisan node to the Democrats (reported unsigned). Single
    district processes raise NotApplicable.
    """
    if n_draws < 1:
        raise DomainError("n_draws must be at least 1")
    if process.drawer is Drawer.NA:
        raise NotApplicable(f"{process.key}: single-district state has no leeway score")
    grid = grid or OptimizationGrid()
    realized = ControlAssignment.realized(process)
    uniform = ControlAssignment.uniform(process, PartyControl.DEMOCRATS)
    realized_values = np.empty(n_draws)
    uniform_values = np.empty(n_draws)
    for i in range(n_draws):
        theta = nature.sample_parameters(prior, seed, i)
        realized_values[i] = solve(process, realized, theta, grid).value
        uniform_values[i] = solve(process, uniform, theta, grid).value
    return LeewayScores(
        realized=float(realized_values.mean()),
        maximum=float(abs(uniform_values.mean())),
        n_draws=n_draws,
    )


def leeway_table(codebook: Codebook, prior: PriorSpec, n_draws: int = 100,
                 seed: int = 0, grid: OptimizationGrid | None = None,
                 threads: int = 1) -> list[tuple[StateProcess, LeewayScores]]:
    """Leeway scores for every solvable row, in codebook order."""
    rows = [r for r in codebook if r.drawer is not Drawer.NA]

    def work(row):
        return row, leeway(row, prior, n_draws, seed, grid)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(work, rows))
    return [work(r) for r in rows]


_ACTUAL_BUCKET = {
    FinalDrawer.LEGISLATURE: "legislature",
    FinalDrawer.COMMISSION: "commission",
    FinalDrawer.GOVERNOR: "legislature",  # unattested; treated as an elected-branch enactment
    FinalDrawer.COURT_MASTER: "court",
    FinalDrawer.COURT_D_REMEDY: "court",
    FinalDrawer.COURT_R_REMEDY: "court",
}

_BUCKETS = ("legislature", "commission", "court")


@dataclass(frozen=True)
class PathTable:
    """Equilibrium-path probabilities pooled over prior draws."""

    state_probs: dict      # (state, cycle) -> {bucket: probability}
    actual: dict           # (state, cycle) -> bucket from the final_drawer coding

    def modal(self, key) -> str:
        probs = self.state_probs[key]
        return max(_BUCKETS, key=lambda b: probs[b])

    def cross_tab(self) -> dict:
        """Actual final drawer (rows) vs pooled equilibrium mass (columns)."""
        table = {row: {col: 0.0 for col in _BUCKETS} for row in _BUCKETS}
        for key, probs in self.state_probs.items():
            row = self.actual[key]
            for col in _BUCKETS:
                table[row][col] += probs[col]
        return table


def path_table(codebook: Codebook, prior: PriorSpec, n_draws: int = 100,
               seed: int = 0, grid: OptimizationGrid | None = None,
               threads: int = 1) -> PathTable:
    """Pooled final-drawer path probabilities for every codebook row.

    A surviving enacted plan counts toward its proposing institution;
    court redraws, VRA remedies, and court or unclear stalemate
    resolutions count toward the court; commission and legislative
    stalemate resolvers count toward their institution.
    """
    grid = grid or OptimizationGrid()
    rows = list(codebook)

    def work(row):
        if row.drawer is Drawer.NA:
            raise NotApplicable(f"{row.key}: cannot build path table over single-district rows")
        assignment = ControlAssignment.realized(row)
        pooled = {b: 0.0 for b in _BUCKETS}
        for i in range(n_draws):
            theta = nature.sample_parameters(prior, seed, i)
            probs = solve(row, assignment, theta, grid).path_probs
            for b in _BUCKETS:
                pooled[b] += probs[b]
        return row.key, {b: pooled[b] / n_draws for b in _BUCKETS}

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, rows))
    else:
        results = [work(r) for r in rows]

    return PathTable(
        state_probs=dict(results),
        actual={r.key: _ACTUAL_BUCKET[r.final_drawer] for r in rows},
    )


def equilibrium_matrix(codebook: Codebook, prior: PriorSpec, n_draws: int,
                       seed: int = 0, grid: OptimizationGrid | None = None,
                       threads: int = 1) -> np.ndarray:
    """Realized equilibrium values, shape (n_draws, n_states)."""
    grid = grid or OptimizationGrid()
    rows = [r for r in codebook if r.drawer is not Drawer.NA]

    def work(row):
        assignment = ControlAssignment.realized(row)
        return [solve(row, assignment, nature.sample_parameters(prior, seed, i), grid).value
                for i in range(n_draws)]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            columns = list(pool.map(work, rows))
    else:
        columns = [work(r) for r in rows]
    return np.array(columns).T


def pairwise_spearman_mean(matrix: np.ndarray) -> float:
    """Average Spearman correlation over all pairs of rows.

    Ties are handled by average ranks. Rows with no variation carry no
    ranking information; pairs involving them are skipped.
    """
    n = matrix.shape[0]
    if n < 2:
        raise DomainError("need at least 2 draws")
    rho = stats.spearmanr(matrix, axis=1).statistic
    if np.ndim(rho) == 0:  # spearmanr collapses the 2-row case to a scalar
        rho = np.array([[1.0, rho], [rho, 1.0]])
    upper = rho[np.triu_indices(n, k=1)]
    valid = upper[~np.isnan(upper)]
    if valid.size == 0:
        raise DomainError("no draw pair had rankable variation")
    return float(valid.mean())


def spearman_stability(codebook: Codebook, prior: PriorSpec, n_draws: int = 100,
                       seed: int = 0, grid: OptimizationGrid | None = None,
                       threads: int = 1) -> float:
    """Average pairwise rank correlation of state equilibria across draws."""
    if n_draws < 2:
        raise DomainError("stability requires at least 2 draws")
    matrix = equilibrium_matrix(codebook, prior, n_draws, seed, grid, threads)
    if matrix.shape[1] < 5:
        raise DomainError("stability requires at least 5 states")
    return pairwise_spearman_mean(matrix)
