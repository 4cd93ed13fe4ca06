"""Central finite-difference check of reverse-mode parameter gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .autodiff import Tensor
from .params import ParamSet


@dataclass
class GradCheckReport:
    max_rel_error: float
    per_param_errors: list[tuple[str, float]] = field(default_factory=list)
    # coordinates whose finite-difference stencil straddles a kink (not scored)
    skipped_kinks: list[tuple[str, int]] = field(default_factory=list)

    def passed(self, tol: float) -> bool:
        return self.max_rel_error <= tol


def relative_error(a: np.ndarray, b: np.ndarray, floor: float) -> np.ndarray:
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def gradcheck(
    loss_fn: Callable[[], Tensor],
    params: ParamSet,
    names: list[str] | None = None,
    step: float = 1e-5,
    floor: float = 1e-5,
    max_entries: int | None = None,
    rng: np.random.Generator | None = None,
    kink_tol: float = 1e-2,
) -> GradCheckReport:
    """Compare ``loss_fn().backward()`` gradients with central differences.

    ``loss_fn`` must be deterministic (draw any randomness outside it).
    ``max_entries`` subsamples coordinates per tensor for large nets.
    Relative errors divide by ``max(|analytic|, |numeric|, floor)``: with
    step 1e-5 the central difference carries roughly 1e-10 of roundoff, so
    entries far below ``floor`` are effectively compared in absolute terms.

    Piecewise-linear activations make the loss non-differentiable on a null
    set; when the two one-sided differences of a coordinate disagree by more
    than ``kink_tol`` (relative), the stencil crossed such a kink and the
    central difference is no oracle there. Those coordinates are listed in
    ``skipped_kinks`` instead of being scored.
    """
    params.zero_grad()
    loss_fn().backward()
    analytic = params.grads()
    report = GradCheckReport(0.0)
    for name in names or params.names():
        data = params[name].data
        flat = data.reshape(-1)
        coords = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            coords = (rng or np.random.default_rng(0)).choice(flat.size, max_entries, replace=False)
        numeric = np.empty(coords.size)
        smooth = np.ones(coords.size, dtype=bool)
        center = loss_fn().item()
        for j, c in enumerate(coords):
            orig = flat[c]
            flat[c] = orig + step
            up = loss_fn().item()
            flat[c] = orig - step
            down = loss_fn().item()
            flat[c] = orig
            numeric[j] = (up - down) / (2 * step)
            right, left = (up - center) / step, (center - down) / step
            if abs(right - left) > kink_tol * max(abs(right), abs(left), floor):
                smooth[j] = False
                report.skipped_kinks.append((name, int(c)))
        rel = relative_error(analytic[name].reshape(-1)[coords], numeric, floor)
        err = float(np.max(rel[smooth], initial=0.0))
        report.per_param_errors.append((name, err))
        report.max_rel_error = max(report.max_rel_error, err)
    params.zero_grad()
    return report
