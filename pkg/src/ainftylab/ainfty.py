"""A-infinity characteristics, level-set inequalities, and the sweep harness.

The characteristic is the exp-of-log-mean form: sup over balls of
(arithmetic mean of w) / exp(mean of log w).  It equals 1 exactly for
constants, is at least 1 by Jensen on every ball, and is invariant under
rescaling the weight and (for power weights) under dilation.

``sweep`` runs a parametrized family of weights through the Carleson norm,
the characteristic, and the flux/centered error terms on one shared ball
family and emits rows suitable for CSV; the inequality
log [w] <= ||mu_w||_C + E is checked row-wise.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ainftylab import fkp
from ainftylab.carleson import CarlesonBox, carleson_norm
from ainftylab.errors import PositivityError
from ainftylab.weights import (BallQuery, GAMMA_N, WeightSpec, ball_measure_many,
                               log_ball_mean_many, segment_measure)

SWEEP_HEADER = ("t", "carleson_norm", "ainfty_minus_1", "error_term", "quad_error")


@dataclass
class AInftyEstimate:
    value: float
    witness: BallQuery | None
    family_size: int
    quad_error: float

    def __post_init__(self):
        if self.value < 1.0 - 1e-9:
            raise PositivityError("A-infinity estimate fell below the Jensen floor")


@dataclass
class KoreyReport:
    alpha: float
    lebesgue_fraction: float
    weight_fraction: float
    upper_bound: float      # (1+a) (|E|/|D|)^{1-a}
    lower_bound: float      # 1 - (1+a) (1-|E|/|D|)^{1-a}
    upper_ok: bool
    lower_ok: bool

    @property
    def passed(self):
        return self.upper_ok and self.lower_ok


def ball_ratio(spec: WeightSpec, q: BallQuery) -> float:
    """(mean of w over the ball) / exp(mean of log w); >= 1 by Jensen."""
    n = spec.n
    mass = float(ball_measure_many(spec, [q.center], [q.radius])[0])
    mean = mass / (GAMMA_N[n] * q.radius ** n)
    logmean = float(log_ball_mean_many(spec, [q.center], [q.radius])[0])
    return mean / np.exp(logmean)


def ball_ratios(spec: WeightSpec, centers, radii):
    n = spec.n
    radii = np.atleast_1d(np.asarray(radii, dtype=np.float64))
    means = ball_measure_many(spec, centers, radii) / (GAMMA_N[n] * radii ** n)
    logmeans = log_ball_mean_many(spec, centers, radii)
    return means / np.exp(logmeans)


def ainfty_constant(spec: WeightSpec, family) -> AInftyEstimate:
    """Sup of ball_ratio over an explicit ball family (a certified lower bound)."""
    balls = [b if isinstance(b, BallQuery) else BallQuery(b[0], b[1]) for b in family]
    if not balls:
        raise ValueError("ainfty_constant needs a non-empty family")
    centers = [b.center for b in balls]
    radii = [b.radius for b in balls]
    if spec.n == 1:
        vals = ball_ratios(spec, np.asarray(centers, dtype=np.float64), radii)
    else:
        vals = ball_ratios(spec, np.asarray(centers, dtype=np.float64), radii)
    k = int(np.argmax(vals))
    return AInftyEstimate(float(vals[k]), balls[k], len(balls), 0.0)


def korey_check(spec: WeightSpec, alpha, ball: BallQuery, subset) -> KoreyReport:
    """Level-set inequalities for a subset E of the ball (n=1 interval unions).

    Checks w(E)/w(D) <= (1+a)(|E|/|D|)^{1-a} and the complementary lower
    bound 1 - (1+a)(1-|E|/|D|)^{1-a} <= w(E)/w(D).
    """
    if spec.n != 1:
        raise NotImplementedError("korey_check is n=1 only")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    segs = [(float(a), float(b)) for a, b in subset]
    lo_d, hi_d = ball.center - ball.radius, ball.center + ball.radius
    for a, b in segs:
        if not (lo_d - 1e-12 <= a < b <= hi_d + 1e-12):
            raise ValueError("subset must consist of intervals inside the ball")
    lebesgue = sum(b - a for a, b in segs) / (hi_d - lo_d)
    wd = float(ball_measure_many(spec, [ball.center], [ball.radius])[0])
    we = float(np.sum(segment_measure(spec, [a for a, _ in segs], [b for _, b in segs])))
    frac = we / wd
    upper = (1.0 + alpha) * lebesgue ** (1.0 - alpha)
    lower = 1.0 - (1.0 + alpha) * (1.0 - lebesgue) ** (1.0 - alpha)
    return KoreyReport(alpha, lebesgue, frac, upper, lower,
                       frac <= upper + 1e-12, frac >= lower - 1e-12)


# ---------------------------------------------------------------------------
# sweep harness
# ---------------------------------------------------------------------------

@dataclass
class SweepRow:
    t: float
    carleson_norm: float
    ainfty_minus_1: float
    error_term: float
    quad_error: float

    @property
    def lwmuc_ok(self):
        """log [w] <= ||mu||_C + E within the recorded quadrature error."""
        return (np.log1p(self.ainfty_minus_1)
                <= self.carleson_norm + self.error_term + self.quad_error + 1e-9)

    def as_tuple(self):
        return (self.t, self.carleson_norm, self.ainfty_minus_1,
                self.error_term, self.quad_error)


def shared_ball_family(region=(-2.0, 2.0), scale_range=(1 / 8, 2.0),
                       centers=9, radii=7):
    """One deterministic ball family reused by all three sweep columns."""
    xs = np.linspace(region[0], region[1], centers)
    rs = np.geomspace(scale_range[0], scale_range[1], radii)
    return [BallQuery(float(x), float(r)) for r in rs for x in xs]


def sweep(labeled_specs, family=None, kernel="gauss", s_levels=64, x_nodes=64,
          threads=1):
    """Rows (t, ||mu||_C, [w]-1, E, quad) for a labeled family of weights.

    All three columns are estimated on the same ball family so the
    log [w] <= ||mu||_C + E comparison is internally consistent.
    """
    if family is None:
        family = shared_ball_family()
    rows = []
    for t, spec in labeled_specs:
        if spec.is_constant():
            rows.append(SweepRow(float(t), 0.0, 0.0, 0.0, 0.0))
            continue
        boxes = [CarlesonBox(b.center, b.radius) for b in family]
        est = carleson_norm(spec, boxes, kernel=kernel, s_levels=s_levels,
                            x_nodes=x_nodes, threads=threads)
        ainf = ainfty_constant(spec, family)
        err = fkp.error_term(spec, family)
        rows.append(SweepRow(float(t), est.value, ainf.value - 1.0, err,
                             est.quad_error + 1e-8))
    return rows


def write_sweep_csv(rows, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(SWEEP_HEADER)
        for row in rows:
            wr.writerow([f"{v:.12g}" for v in row.as_tuple()])
