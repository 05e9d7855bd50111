"""Explicit comparison bounds in the exponential moving frame.

The frame travels at instantaneous speed (mu^2 + a(t))/mu.  In it,
min(1, e^{-mu xi}) is a supersolution for any 0 < mu, and

    phi(t, xi) = e^{-mu xi} - d e^{(r-1)A(t)} e^{-mu_tilde xi},   r = mu_tilde/mu,

is a lower solution on its positivity region xi >= rho(t), where A is the
negated bounded block primitive of (1-delta) a - (block mean), provided the
parameters satisfy the admissibility inequalities enforced by WaveParams.
The capped variant freezes phi at its interior maximum, giving a bounded
nonnegative initial datum that still sits below the solution.

certify_ordering checks either bound against a stored trajectory frame by
frame, with an explicit discretization slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import coeff
from .equilibria import scheme_slack

__all__ = [
    "WaveParams", "BoundCurve", "CertifyReport", "InitialOrderingError",
    "choose_delta", "lower_threshold", "default_amplitude",
    "make_wave_params", "frame_position", "supersolution",
    "lower_solution", "capped_lower", "certify_ordering",
]


class InitialOrderingError(ValueError):
    """The claimed ordering already fails at the first stored frame.

    That is a configuration bug (wrong initial data or wrong bound), not a
    property of the dynamics, so it is an error rather than a failed report.
    """


def lower_threshold(mu, mu_tilde, delta, B_norm):
    """Smallest admissible amplitude d for the lower solution.

    With a flat primitive (B_norm = 0) this is
    max(1/(delta (r-1)), 1); the second branch also guarantees the capped
    profile peaks strictly below 1.
    """
    r = mu_tilde / mu
    return max(math.exp(-(r - 1.0) * B_norm) / (delta * (r - 1.0)),
               math.exp((r - 1.0) * B_norm))


def default_amplitude(mu, mu_tilde, delta, B_norm):
    """Amplitude that satisfies the positivity condition pointwise.

    Flipping the sign in the first exponent of lower_threshold makes the
    bound hold at the worst value of the primitive instead of the best;
    the two coincide exactly when B_norm = 0.
    """
    r = mu_tilde / mu
    return max(math.exp((r - 1.0) * B_norm) / (delta * (r - 1.0)),
               math.exp((r - 1.0) * B_norm))


def choose_delta(a_lower_est, mu, mu_tilde, margin=0.05):
    """Largest delta satisfying (1-delta) a_lower > mu_tilde mu, with margin."""
    ratio = mu_tilde * mu / a_lower_est
    delta = 1.0 - (1.0 + margin) * ratio
    if delta <= 0:
        raise ValueError("no admissible delta: mu_tilde*mu = %g is too close "
                         "to a_lower_est = %g" % (mu_tilde * mu, a_lower_est))
    return delta


@dataclass
class WaveParams:
    """Admissible decay rates and amplitude for the comparison pair."""

    mu: float
    mu_tilde: float
    delta: float
    d: float
    B: coeff.PiecewiseB
    a_lower_est: float

    def __post_init__(self):
        if not 0 < self.mu < self.mu_tilde:
            raise ValueError("need 0 < mu < mu_tilde")
        if not self.mu_tilde < 2.0 * self.mu:
            raise ValueError("need mu_tilde < 2 mu (got ratio %g)"
                             % (self.mu_tilde / self.mu))
        if self.mu_tilde > math.sqrt(self.a_lower_est) + 1e-12:
            raise ValueError("need mu_tilde <= sqrt(a_lower_est) = %g"
                             % math.sqrt(self.a_lower_est))
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if (1.0 - self.delta) * self.a_lower_est <= self.mu_tilde * self.mu:
            raise ValueError("need (1-delta) a_lower_est > mu_tilde*mu")
        floor = lower_threshold(self.mu, self.mu_tilde, self.delta,
                                self.B.B_norm)
        if self.d < floor - 1e-12:
            raise ValueError("amplitude d = %g below threshold %g"
                             % (self.d, floor))

    @property
    def r(self):
        return self.mu_tilde / self.mu


def make_wave_params(path, mu, mu_tilde, span, delta=None, d=None, r_min=1.0):
    """Estimate path means over span, pick delta, build the primitive.

    delta defaults to the largest admissible value with a 5% margin; d
    defaults to the pointwise-safe amplitude for the realized primitive
    norm.
    """
    est = coeff.estimate_means(path, r_min, span)
    if delta is None:
        delta = choose_delta(est.a_lower_est, mu, mu_tilde)
    B = coeff.build_B(path, gamma=mu * mu_tilde, delta=1.0 - delta,
                      span=span, r_min=r_min)
    if d is None:
        d = default_amplitude(mu, mu_tilde, delta, B.B_norm)
    return WaveParams(mu=mu, mu_tilde=mu_tilde, delta=delta, d=d, B=B,
                      a_lower_est=est.a_lower_est)


def frame_position(path, mu, t, t0=0.0):
    """Frame displacement C(t) = (mu^2 (t - t0) + int_{t0}^t a)/mu."""
    t = np.asarray(t, dtype=float)
    return (mu * mu * (t - t0) + path.integral(np.full_like(t, t0), t)) / mu


@dataclass
class BoundCurve:
    """A time-dependent comparison profile evaluated in absolute x."""

    kind: str
    fn: object                 # callable(t, x-array) -> array
    rho: object = None         # callable(t) -> float left edge of validity
    params: object = None

    def __call__(self, t, x):
        return self.fn(float(t), np.asarray(x, dtype=float))


def supersolution(path, mu, t0=0.0):
    """min(1, e^{-mu (x - C(t))}): valid above any solution starting below it."""
    def fn(t, x):
        c = float(frame_position(path, mu, t, t0))
        return np.minimum(1.0, np.exp(-mu * (x - c)))
    return BoundCurve(kind="super", fn=fn, params={"mu": mu, "t0": t0})


def lower_solution(path, params, t0=0.0):
    """Two-exponential lower solution, valid on x >= rho(t)."""
    mu, mu_tilde, d = params.mu, params.mu_tilde, params.d
    r = params.r

    def A(t):
        return -float(params.B.B(t))

    def fn(t, x):
        c = float(frame_position(path, mu, t, t0))
        xi = x - c
        return np.exp(-mu * xi) - d * math.exp((r - 1.0) * A(t)) \
            * np.exp(-mu_tilde * xi)

    def rho(t):
        c = float(frame_position(path, mu, t, t0))
        return c + math.log(d) / (mu_tilde - mu) + A(t) / mu

    return BoundCurve(kind="lower", fn=fn, rho=rho, params=params)


def capped_lower(path, params, t0_shift=0.0):
    """Lower solution frozen at its peak to the left of the peak position.

    With a nonzero t0_shift the path is shifted and the block primitive is
    rebuilt for it; the amplitude is raised if the rebuilt primitive norm
    demands it (a larger d only lowers the profile, which stays a valid
    lower bound).
    """
    if t0_shift != 0.0:
        p = coeff.shift(path, t0_shift)
        B = coeff.build_B(p, gamma=params.B.gamma, delta=params.B.scale,
                          span=(params.B.s0, params.B.s1),
                          r_min=params.B.r_min)
        d = max(params.d, default_amplitude(params.mu, params.mu_tilde,
                                            params.delta, B.B_norm))
        params = WaveParams(mu=params.mu, mu_tilde=params.mu_tilde,
                            delta=params.delta, d=d, B=B,
                            a_lower_est=params.a_lower_est)
        path = p
    mu, mu_tilde, d = params.mu, params.mu_tilde, params.d
    r = params.r
    base = lower_solution(path, params)

    def peak_xi(t):
        a = -float(params.B.B(t))
        return (math.log(d) + math.log(r)) / (mu_tilde - mu) + a / mu

    def fn(t, x):
        c = float(frame_position(path, mu, t))
        xs = peak_xi(t)
        peak = math.exp(-mu * xs) * (1.0 - mu / mu_tilde)
        vals = base.fn(t, x)
        return np.where(x - c <= xs, peak, vals)

    def peak_position(t):
        return float(frame_position(path, mu, t)) + peak_xi(t)

    curve = BoundCurve(kind="capped-lower", fn=fn, params=params)
    curve.peak_position = peak_position
    return curve


@dataclass
class CertifyReport:
    passed: bool
    relation: str
    max_violation: float
    worst_time: float
    slack: float
    rows: list                 # (t, violation, x at violation)

    def to_csv(self, file):
        own = isinstance(file, (str, bytes))
        fh = open(file, "w") if own else file
        try:
            fh.write("t,max_violation,location\n")
            for t, v, loc in self.rows:
                fh.write("%.12g,%.12g,%.12g\n" % (t, v, loc))
        finally:
            if own:
                fh.close()


def certify_ordering(trajectory, bound, relation, region=None, slack=None):
    """Frame-by-frame check that the trajectory stays on one side of a bound.

    relation "above" asserts u <= bound, "below" asserts bound <= u, both
    up to a discretization slack (defaulting to the scheme's error model at
    the trajectory's resolution).  The comparison is restricted to the
    bound's validity region when it has one, or to the interval returned by
    region(t).  A violation already present at the first frame raises
    InitialOrderingError since comparison arguments only propagate an
    ordering that holds initially.
    """
    if relation not in ("above", "below"):
        raise ValueError("relation must be 'above' or 'below'")
    if slack is None:
        slack = scheme_slack(trajectory.meta["dx"], trajectory.meta["dt"])
    x = trajectory.grid.x
    rows = []
    worst, worst_t = -math.inf, math.nan
    for k, t in enumerate(trajectory.times):
        u = trajectory.frames[k]
        b = bound(t, x)
        mask = np.ones(x.size, dtype=bool)
        if region is not None:
            lo, hi = region(float(t))
            mask &= (x >= lo) & (x <= hi)
        elif bound.rho is not None:
            mask &= x >= bound.rho(float(t))
        if not mask.any():
            raise ValueError("empty comparison region at t=%g" % t)
        diff = (u - b) if relation == "above" else (b - u)
        j = int(np.argmax(np.where(mask, diff, -math.inf)))
        viol = float(diff[j])
        rows.append((float(t), viol, float(x[j])))
        if viol > worst:
            worst, worst_t = viol, float(t)
        if k == 0 and viol > slack:
            raise InitialOrderingError(
                "ordering '%s' violated by %g at the initial frame; "
                "the initial data does not sit on the claimed side" %
                (relation, viol))
    return CertifyReport(passed=bool(worst <= slack), relation=relation,
                         max_violation=worst, worst_time=worst_t,
                         slack=float(slack), rows=rows)
