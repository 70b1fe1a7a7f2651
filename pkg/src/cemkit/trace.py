"""Run traces: per-step bookkeeping shared by all optimizer variants.

A TraceRecorder accumulates events as an engine runs and is frozen into
a RunTrace at the end. Engines report three kinds of events: a parameter
update was applied, a sample was evaluated (candidate for best-so-far),
and a step boundary was reached (candidate for a snapshot).

Step counts are always in units of objective evaluations, so traces from
batch and online runs with equal budgets line up point for point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .model import BernoulliParams, EvaluatedSample

__all__ = ["TraceSnapshot", "RunTrace", "TraceRecorder"]

# A sample counts as hitting the optimum when its value is within this
# tolerance of the known optimal value.
HIT_TOL = 1e-9


@dataclass(frozen=True)
class TraceSnapshot:
    """State of a run after `step` objective evaluations."""

    step: int
    params: np.ndarray
    gamma: Optional[float]
    delta: Optional[float]
    best_value: Optional[float]
    update_count: int
    sign_changes: np.ndarray
    elite_decisions: int


@dataclass
class RunTrace:
    """Complete record of one optimizer run."""

    variant: str
    n: int
    p0: BernoulliParams
    rho: float
    alpha: float
    alpha1: float
    steps: int
    update_count: int
    elite_decisions: int
    sign_changes: np.ndarray
    best: Optional[EvaluatedSample]
    first_hit_step: Optional[int]
    gamma_final: Optional[float]
    snapshots: List[TraceSnapshot] = field(default_factory=list)

    @property
    def final_params(self) -> BernoulliParams:
        # finish() always appends a closing snapshot, so this is total.
        return BernoulliParams(self.snapshots[-1].params)


class TraceRecorder:
    """Mutable accumulator an engine drives while it runs.

    Sign-change counting follows the convention that a zero step is not
    an event and does not reset direction: component i logs a change
    when the sign of its nonzero increment differs from the sign of its
    previous nonzero increment.
    """

    def __init__(
        self,
        variant: str,
        params0: BernoulliParams,
        rho: float,
        alpha: float,
        alpha1: float,
        snapshot_stride: int,
        optimal_value: Optional[float] = None,
    ):
        if snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")
        self.variant = variant
        self.p0 = params0
        self.rho = rho
        self.alpha = alpha
        self.alpha1 = alpha1
        self.stride = snapshot_stride
        self.optimal_value = optimal_value

        self._params = params0.probs.copy()
        self._last_sign = np.zeros(params0.n, dtype=np.int8)
        self.sign_changes = np.zeros(params0.n, dtype=np.int64)
        self.update_count = 0
        self.elite_decisions = 0
        self.best: Optional[EvaluatedSample] = None
        self.first_hit_step: Optional[int] = None
        self._snapshots: List[TraceSnapshot] = []
        self._snapshot(step=0, gamma=None, delta=None)

    def update_applied(self, new_params: np.ndarray, elites: int = 1) -> None:
        """Record one parameter update covering `elites` elite samples."""
        diff = new_params - self._params
        sign = np.sign(diff).astype(np.int8)
        moved = sign != 0
        changed = moved & (self._last_sign != 0) & (sign != self._last_sign)
        self.sign_changes[changed] += 1
        self._last_sign[moved] = sign[moved]
        self._params[:] = new_params
        self.update_count += 1
        self.elite_decisions += elites

    def offer_best(self, bits: np.ndarray, value: float, draw_index: int) -> None:
        """Candidate best-so-far; earliest draw wins ties."""
        if self.best is None or value > self.best.value:
            self.best = EvaluatedSample(bits=bits.copy(), value=value, draw_index=draw_index)
        if (
            self.first_hit_step is None
            and self.optimal_value is not None
            and value >= self.optimal_value - HIT_TOL
        ):
            self.first_hit_step = draw_index

    def maybe_snapshot(self, step: int, gamma: Optional[float], delta: Optional[float]) -> None:
        if step % self.stride == 0:
            self._snapshot(step, gamma, delta)

    def _snapshot(self, step: int, gamma: Optional[float], delta: Optional[float]) -> None:
        self._snapshots.append(
            TraceSnapshot(
                step=step,
                params=self._params.copy(),
                gamma=gamma,
                delta=delta,
                best_value=None if self.best is None else self.best.value,
                update_count=self.update_count,
                sign_changes=self.sign_changes.copy(),
                elite_decisions=self.elite_decisions,
            )
        )

    def finish(self, steps: int, gamma: Optional[float], delta: Optional[float]) -> RunTrace:
        """Seal the recorder into an immutable-by-convention RunTrace."""
        if self._snapshots[-1].step != steps:
            self._snapshot(steps, gamma, delta)
        return RunTrace(
            variant=self.variant,
            n=self.p0.n,
            p0=self.p0,
            rho=self.rho,
            alpha=self.alpha,
            alpha1=self.alpha1,
            steps=steps,
            update_count=self.update_count,
            elite_decisions=self.elite_decisions,
            sign_changes=self.sign_changes.copy(),
            best=self.best,
            first_hit_step=self.first_hit_step,
            gamma_final=gamma,
            snapshots=self._snapshots,
        )
