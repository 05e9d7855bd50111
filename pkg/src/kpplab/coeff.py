"""Time-dependent growth-rate paths a(t) for u_t = u_xx + a(t) u (1 - u).

Every path knows how to evaluate itself, integrate itself exactly (closed
form for the formula kinds, trapezoid-on-samples for tabulated kinds, which
is exact for their piecewise-linear interpretation), report running extrema,
and shift its time origin.  Exact integrals matter: windowed means, decay
envelopes and wave-frame positions all reduce to them, and quadrature noise
there would contaminate every certificate downstream.

Sliding-window statistics (`estimate_means`) return the finite-horizon
surrogates of the long-run lower/upper window means that control spreading
speeds; `build_B` constructs the bounded primitive with block-mean slack
used by the sub/supersolution machinery.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

__all__ = [
    "CoefficientPath", "ConstantPath", "PeriodicPath", "TwoLevelPath",
    "TabulatedPath", "NoisePath", "MeanEstimate", "PiecewiseB",
    "make_constant", "make_periodic", "make_two_level", "make_noise",
    "shift", "windowed_mean", "estimate_means", "build_B",
    "equilibrium_path",
]


def _fmt(x):
    """Locale-independent 12-significant-digit float formatting."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


class CoefficientPath:
    """Base class for positive growth-rate paths.

    Subclasses implement `_eval`, `_primitive`, `_extrema_on` in the
    unshifted clock; the public methods apply the time offset so that
    ``shift(p, s)(t) == p(t + s)`` holds exactly.
    """

    kind = "abstract"

    def __init__(self, offset=0.0):
        self.offset = float(offset)

    # subclass interface ------------------------------------------------
    def _eval(self, t):
        raise NotImplementedError

    def _primitive(self, t):
        """Integral of the unshifted path from clock 0 to t (vectorized)."""
        raise NotImplementedError

    def _extrema_on(self, a, b):
        """(min, max) of the unshifted path on [a, b]."""
        raise NotImplementedError

    # public ------------------------------------------------------------
    def __call__(self, t):
        return self._eval(np.asarray(t, dtype=float) + self.offset)

    def integral(self, s, t):
        """Exact integral of the (shifted) path over [s, t]."""
        s = np.asarray(s, dtype=float) + self.offset
        t = np.asarray(t, dtype=float) + self.offset
        return self._primitive(t) - self._primitive(s)

    def min_on(self, s, t):
        return self._extrema_on(s + self.offset, t + self.offset)[0]

    def max_on(self, s, t):
        return self._extrema_on(s + self.offset, t + self.offset)[1]

    def shift(self, s):
        """Path observed from time origin moved forward by s."""
        import copy

        other = copy.copy(self)
        other.offset = self.offset + float(s)
        return other

    # domain: formula kinds are unbounded, tabulated kinds override
    @property
    def t_lo(self):
        return -math.inf

    @property
    def t_hi(self):
        return math.inf

    def describe(self):
        """Flat parameter dict used in CSV headers and run artifacts."""
        return {"kind": self.kind, "offset": self.offset}

    def to_csv(self, file, t0=None, t1=None, dt=None):
        """Write (t, value) rows with a leading comment line of parameters.

        Formula kinds need an explicit sampling window; tabulated kinds
        default to their native grid.
        """
        if t0 is None or t1 is None or dt is None:
            raise ValueError("sampling window (t0, t1, dt) required for kind %r" % self.kind)
        ts = np.arange(t0, t1 + 0.5 * dt, dt)
        self._write_csv(file, ts, self(ts))

    def _write_csv(self, file, ts, vals):
        own = isinstance(file, (str, bytes))
        fh = open(file, "w") if own else file
        try:
            meta = " ".join("%s=%s" % (k, _fmt(v) if isinstance(v, (int, float, np.floating)) else v)
                            for k, v in self.describe().items())
            fh.write("# %s\n" % meta)
            fh.write("t,value\n")
            for t, v in zip(ts, vals):
                fh.write("%s,%s\n" % (_fmt(t), _fmt(v)))
        finally:
            if own:
                fh.close()


class ConstantPath(CoefficientPath):
    kind = "constant"

    def __init__(self, value, offset=0.0):
        if not value > 0:
            raise ValueError("constant growth rate must be positive, got %r" % value)
        super().__init__(offset)
        self.value = float(value)

    def _eval(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.value)

    def _primitive(self, t):
        return self.value * np.asarray(t, dtype=float)

    def _extrema_on(self, a, b):
        return self.value, self.value

    def describe(self):
        return {"kind": self.kind, "value": self.value, "offset": self.offset}


class PeriodicPath(CoefficientPath):
    """a(t) = mean + amplitude * sin(2 pi t / period), mean > amplitude >= 0."""

    kind = "periodic"

    def __init__(self, mean, amplitude, period, offset=0.0):
        if period <= 0:
            raise ValueError("period must be positive")
        if amplitude < 0:
            raise ValueError("amplitude must be nonnegative")
        if not mean > amplitude:
            raise ValueError(
                "mean must exceed amplitude to keep the path positive "
                "(got mean=%g, amplitude=%g)" % (mean, amplitude))
        super().__init__(offset)
        self.mean = float(mean)
        self.amplitude = float(amplitude)
        self.period = float(period)

    def _eval(self, t):
        w = 2.0 * math.pi / self.period
        return self.mean + self.amplitude * np.sin(w * np.asarray(t, dtype=float))

    def _primitive(self, t):
        w = 2.0 * math.pi / self.period
        t = np.asarray(t, dtype=float)
        return self.mean * t + (self.amplitude / w) * (1.0 - np.cos(w * t))

    def _extrema_on(self, a, b):
        if b < a:
            a, b = b, a
        w = 2.0 * math.pi / self.period
        lo, hi = min(self._eval(a), self._eval(b)), max(self._eval(a), self._eval(b))
        # interior extrema of sin at phase pi/2 + k*pi
        k0 = math.ceil((w * a - math.pi / 2) / math.pi)
        k1 = math.floor((w * b - math.pi / 2) / math.pi)
        for k in range(k0, k1 + 1):
            v = self.mean + self.amplitude * (1.0 if k % 2 == 0 else -1.0)
            lo, hi = min(lo, v), max(hi, v)
        return float(lo), float(hi)

    def describe(self):
        return {"kind": self.kind, "mean": self.mean, "amplitude": self.amplitude,
                "period": self.period, "offset": self.offset}


class TwoLevelPath(CoefficientPath):
    """Deterministic path alternating ever-longer plateaus at levels 1 and 2.

    Plateaus of length n+1 alternate between the two levels; between them
    sit piecewise-linear spikes of width 4^-(n+1) whose extrema grow like
    2^(n/2) (upward, on the level-2 side) or shrink like 2^-((n+1)/2)
    (downward dips).  The spikes have summable area, so every long-window
    mean lands in [1, 2] while the pointwise range of the path is (0, inf).
    The path is even in t.
    """

    kind = "two-level"

    def __init__(self, offset=0.0):
        super().__init__(offset)
        # breakpoint table for t >= 0, grown on demand
        self._bp = [0.0, 0.25]
        self._vals = [1.0, 1.0]
        self._n_next = 1          # next spike index to append
        self._L_last = 0.25       # right end of the last appended spike
        self._prim = None         # prefix integrals at breakpoints, rebuilt lazily

    def _grow(self, tmax):
        changed = False
        while self._L_last < tmax + 1.0:
            n = self._n_next
            left_val = 1.0 if (n - 1) % 2 == 0 else 2.0
            right_val = 1.0 if n % 2 == 0 else 2.0
            peak = float(2.0 ** (n // 2)) if n % 2 == 0 else float(2.0 ** (-((n + 1) // 2)))
            l_n = self._L_last + n            # plateau of length n ends here
            w = 0.25 ** (n + 1)
            self._bp.extend([l_n, l_n + 0.5 * w, l_n + w])
            self._vals.extend([left_val, peak, right_val])
            self._L_last = l_n + w
            self._n_next += 1
            changed = True
        if changed or self._prim is None:
            bp = np.asarray(self._bp)
            vals = np.asarray(self._vals)
            panels = 0.5 * (vals[1:] + vals[:-1]) * np.diff(bp)
            self._prim_vals = np.concatenate([[0.0], np.cumsum(panels)])
            self._bp_arr = bp
            self._vals_arr = vals
            self._prim = True

    def _eval(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        self._grow(float(np.max(t)) if t.size else 0.0)
        return np.interp(t, self._bp_arr, self._vals_arr)

    def _primitive(self, t):
        t = np.asarray(t, dtype=float)
        at = np.abs(t)
        self._grow(float(np.max(at)) if at.size else 0.0)
        idx = np.searchsorted(self._bp_arr, at, side="right") - 1
        idx = np.clip(idx, 0, len(self._bp_arr) - 2)
        t0 = self._bp_arr[idx]
        v0 = self._vals_arr[idx]
        v = np.interp(at, self._bp_arr, self._vals_arr)
        part = self._prim_vals[idx] + 0.5 * (v0 + v) * (at - t0)
        # even path: the primitive anchored at 0 is odd
        return np.sign(t) * part

    def _extrema_on(self, a, b):
        if b < a:
            a, b = b, a
        if a < 0 <= b:
            m0, M0 = self._extrema_on(0.0, -a)
            m1, M1 = self._extrema_on(0.0, b)
            return min(m0, m1), max(M0, M1)
        if b <= 0:
            a, b = -b, -a
        self._grow(b)
        lo = hi = float(np.interp(a, self._bp_arr, self._vals_arr))
        vb = float(np.interp(b, self._bp_arr, self._vals_arr))
        lo, hi = min(lo, vb), max(hi, vb)
        i0 = np.searchsorted(self._bp_arr, a, side="left")
        i1 = np.searchsorted(self._bp_arr, b, side="right")
        if i1 > i0:
            inner = self._vals_arr[i0:i1]
            lo = min(lo, float(inner.min()))
            hi = max(hi, float(inner.max()))
        return lo, hi


class _UniformSamples:
    """Shared machinery for paths stored as samples on a uniform grid.

    Evaluation is linear interpolation between samples; integrals are the
    exact integrals of that interpolant (cumulative trapezoid plus exact
    partial panels), so quadrature and evaluation never disagree.
    """

    def _init_samples(self, t0, dt, values):
        if dt <= 0:
            raise ValueError("sample spacing must be positive")
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("need a 1-d array of at least two samples")
        if not np.all(np.isfinite(values)):
            raise ValueError("samples must be finite")
        self._t0 = float(t0)
        self._dt = float(dt)
        self.values = values
        panels = 0.5 * (values[1:] + values[:-1]) * self._dt
        self._prefix = np.concatenate([[0.0], np.cumsum(panels)])

    @property
    def sample_times(self):
        return self._t0 + self._dt * np.arange(self.values.size)

    def _check_range(self, t):
        hi = self._t0 + self._dt * (self.values.size - 1)
        tol = 1e-9 * self._dt
        tmin, tmax = float(np.min(t)), float(np.max(t))
        if tmin < self._t0 - tol or tmax > hi + tol:
            raise ValueError(
                "query time range [%g, %g] outside the sampled range [%g, %g]"
                % (tmin, tmax, self._t0, hi))

    def _eval(self, t):
        t = np.asarray(t, dtype=float)
        self._check_range(t)
        pos = np.clip((t - self._t0) / self._dt, 0.0, self.values.size - 1.0)
        k = np.minimum(pos.astype(int), self.values.size - 2)
        frac = pos - k
        return self.values[k] * (1.0 - frac) + self.values[k + 1] * frac

    def _primitive(self, t):
        t = np.asarray(t, dtype=float)
        self._check_range(t)
        pos = np.clip((t - self._t0) / self._dt, 0.0, self.values.size - 1.0)
        k = np.minimum(pos.astype(int), self.values.size - 2)
        rem = (pos - k) * self._dt
        vk = self.values[k]
        vt = self._eval(t)
        return self._prefix[k] + 0.5 * (vk + vt) * rem

    def _extrema_on(self, a, b):
        if b < a:
            a, b = b, a
        va, vb = float(self._eval(a)), float(self._eval(b))
        lo, hi = min(va, vb), max(va, vb)
        i0 = int(np.ceil((a - self._t0) / self._dt - 1e-12))
        i1 = int(np.floor((b - self._t0) / self._dt + 1e-12))
        i0, i1 = max(i0, 0), min(i1, self.values.size - 1)
        if i1 >= i0:
            inner = self.values[i0:i1 + 1]
            lo = min(lo, float(inner.min()))
            hi = max(hi, float(inner.max()))
        return lo, hi


class TabulatedPath(_UniformSamples, CoefficientPath):
    """Positive coefficient path given by samples on a uniform time grid."""

    kind = "tabulated"

    def __init__(self, t0, dt, values, offset=0.0, kind=None, meta=None):
        CoefficientPath.__init__(self, offset)
        self._init_samples(t0, dt, values)
        if float(self.values.min()) <= 0.0:
            raise ValueError("coefficient samples must be positive (min=%g)"
                             % self.values.min())
        if kind is not None:
            self.kind = kind
        self.meta = dict(meta or {})

    @property
    def t_lo(self):
        return self._t0 - self.offset

    @property
    def t_hi(self):
        return self._t0 + self._dt * (self.values.size - 1) - self.offset

    def describe(self):
        d = {"kind": self.kind, "t0": self._t0, "dt": self._dt,
             "n": self.values.size, "offset": self.offset}
        d.update(self.meta)
        return d

    def to_csv(self, file, t0=None, t1=None, dt=None):
        if t0 is None and t1 is None and dt is None:
            ts = self.sample_times - self.offset
            self._write_csv(file, ts, self(ts))
        else:
            CoefficientPath.to_csv(self, file, t0, t1, dt)

    @classmethod
    def from_csv(cls, file):
        own = isinstance(file, (str, bytes))
        fh = open(file, "r") if own else file
        try:
            rows = [ln for ln in fh if ln.strip() and not ln.startswith("#")
                    and not ln.lower().startswith("t,")]
        finally:
            if own:
                fh.close()
        data = np.loadtxt(io.StringIO("".join(rows)), delimiter=",")
        ts, vals = data[:, 0], data[:, 1]
        dts = np.diff(ts)
        if ts.size < 2 or not np.allclose(dts, dts[0], rtol=1e-9, atol=1e-12):
            raise ValueError("tabulated CSV must give a uniform time grid")
        return cls(ts[0], float(dts[0]), vals)


class NoisePath(_UniformSamples):
    """Seeded, bounded stationary noise: a squashed Ornstein-Uhlenbeck path.

    The driving process x solves dx = -kappa x dt + sigma dW, discretized
    exactly on the sample grid and started from its stationary law, and the
    reported signal is xi = xi_max * tanh(x).  By symmetry xi has mean zero,
    it is bounded by xi_max < 1, and its linear interpolant is Lipschitz.
    Shifting the time origin reuses the same realization.
    """

    kind = "noise"

    def __init__(self, seed, kappa, sigma, xi_max, dt, t_lo, t_hi, offset=0.0):
        if kappa <= 0:
            raise ValueError("mean-reversion rate kappa must be positive")
        if sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not 0 < xi_max < 1:
            raise ValueError("xi_max must lie in (0, 1) so that 1 + xi stays positive")
        if not t_hi > t_lo:
            raise ValueError("empty time range")
        self.seed = int(seed)
        self.kappa = float(kappa)
        self.sigma = float(sigma)
        self.xi_max = float(xi_max)
        self.offset = float(offset)
        n = int(round((t_hi - t_lo) / dt)) + 1
        rng = np.random.default_rng(self.seed)
        rho = math.exp(-self.kappa * dt)
        stat_sd = self.sigma / math.sqrt(2.0 * self.kappa)
        step_sd = self.sigma * math.sqrt((1.0 - rho * rho) / (2.0 * self.kappa))
        x0 = stat_sd * rng.standard_normal()
        if n > 1:
            e = step_sd * rng.standard_normal(n - 1)
            xs, _ = lfilter([1.0], [1.0, -rho], e, zi=np.array([rho * x0]))
            x = np.concatenate([[x0], xs])
        else:
            x = np.array([x0])
        self._init_samples(t_lo, dt, self.xi_max * np.tanh(x))

    def __call__(self, t):
        return self._eval(np.asarray(t, dtype=float) + self.offset)

    def integral(self, s, t):
        s = np.asarray(s, dtype=float) + self.offset
        t = np.asarray(t, dtype=float) + self.offset
        return self._primitive(t) - self._primitive(s)

    def min_on(self, s, t):
        return self._extrema_on(s + self.offset, t + self.offset)[0]

    def max_on(self, s, t):
        return self._extrema_on(s + self.offset, t + self.offset)[1]

    def shift(self, s):
        import copy

        other = copy.copy(self)
        other.offset = self.offset + float(s)
        return other

    @property
    def t_lo(self):
        return self._t0 - self.offset

    @property
    def t_hi(self):
        return self._t0 + self._dt * (self.values.size - 1) - self.offset

    @property
    def dt(self):
        return self._dt

    def describe(self):
        return {"kind": self.kind, "seed": self.seed, "kappa": self.kappa,
                "sigma": self.sigma, "xi_max": self.xi_max, "dt": self._dt,
                "t0": self._t0, "n": self.values.size, "offset": self.offset}

    def to_csv(self, file):
        ts = self.sample_times - self.offset
        vals = self(ts)
        own = isinstance(file, (str, bytes))
        fh = open(file, "w") if own else file
        try:
            meta = " ".join("%s=%s" % (k, _fmt(v) if isinstance(v, (int, float, np.floating)) else v)
                            for k, v in self.describe().items())
            fh.write("# %s\n" % meta)
            fh.write("t,value\n")
            for t, v in zip(ts, vals):
                fh.write("%s,%s\n" % (_fmt(t), _fmt(v)))
        finally:
            if own:
                fh.close()


# constructors ----------------------------------------------------------

def make_constant(value):
    return ConstantPath(value)


def make_periodic(mean, amplitude, period):
    return PeriodicPath(mean, amplitude, period)


def make_two_level():
    return TwoLevelPath()


def make_noise(seed, kappa=1.0, sigma=0.5, xi_max=0.75, dt=1e-3, t_lo=0.0, t_hi=100.0):
    return NoisePath(seed, kappa, sigma, xi_max, dt, t_lo, t_hi)


def shift(path, s):
    """Time-shifted view: shift(p, s)(t) == p(t + s), exactly."""
    return path.shift(s)


def windowed_mean(path, s, t):
    """Mean of the path over [s, t] using its exact integral."""
    if not t > s:
        raise ValueError("need t > s")
    return float(path.integral(s, t)) / (t - s)


@dataclass
class MeanEstimate:
    """Finite-horizon window-mean statistics of a path.

    a_lower_est / a_upper_est are the extreme means over a ladder of window
    lengths (r_min, 2 r_min, ... and the full horizon); a_hat_est is the
    full-horizon average.  Including the full window in the ladder makes
    a_lower_est <= a_hat_est <= a_upper_est hold unconditionally, and
    halving r_min only widens the bracket.
    """

    a_lower_est: float
    a_hat_est: float
    a_upper_est: float
    r_min: float
    horizon: tuple
    stride: float
    n_windows: int
    lengths: tuple = field(default_factory=tuple)

    @property
    def speed_band(self):
        """Spreading-speed band (2 sqrt(a_lower_est), 2 sqrt(a_upper_est))."""
        return 2.0 * math.sqrt(self.a_lower_est), 2.0 * math.sqrt(self.a_upper_est)

    @property
    def takeover_speed(self):
        """Predicted take-over speed 2 sqrt(a_hat_est)."""
        return 2.0 * math.sqrt(self.a_hat_est)


def estimate_means(path, r_min, horizon, stride=None):
    s0, s1 = float(horizon[0]), float(horizon[1])
    span = s1 - s0
    if not r_min > 0:
        raise ValueError("r_min must be positive")
    if span < 2.0 * r_min:
        raise ValueError("horizon %g too short for window length %g (need >= 2 r_min)"
                         % (span, r_min))
    if stride is None:
        stride = r_min / 50.0

    lengths = []
    ell = float(r_min)
    while ell < span:
        lengths.append(ell)
        ell *= 2.0
    lengths.append(span)

    lo = math.inf
    hi = -math.inf
    n_windows = 0
    for ell in lengths:
        last = s1 - ell
        starts = s0 + stride * np.arange(int((last - s0) / stride) + 1)
        if starts.size == 0 or starts[-1] < last - 1e-12:
            starts = np.append(starts, last)
        ends = starts + ell
        # divide by the realized endpoint difference, not the nominal
        # length, so constant paths give exactly constant means
        means = path.integral(starts, ends) / (ends - starts)
        lo = min(lo, float(means.min()))
        hi = max(hi, float(means.max()))
        n_windows += starts.size
    full_mean = float(path.integral(s0, s1)) / span
    # the full window is in the ladder, so the ordering is structural
    return MeanEstimate(a_lower_est=lo, a_hat_est=full_mean, a_upper_est=hi,
                        r_min=float(r_min), horizon=(s0, s1), stride=float(stride),
                        n_windows=n_windows, lengths=tuple(lengths))


@dataclass
class PiecewiseB:
    """Bounded primitive B with block-mean slack.

    On each block [s0 + k T, s0 + (k+1) T], B(t) integrates
    scale * a(tau) - eps_k from the block start, where eps_k is the block
    mean of scale * a.  Then B vanishes at every block boundary (so it is
    continuous and bounded by 2 T * max block mean) and, away from the
    breakpoints, scale * a(t) - B'(t) = eps_k >= gamma.
    """

    path: object
    T: float
    s0: float
    s1: float
    scale: float
    gamma: float
    eps: np.ndarray
    B_norm: float
    r_min: float = 1.0

    def _block(self, t):
        k = np.floor((np.asarray(t, dtype=float) - self.s0) / self.T).astype(int)
        return np.clip(k, 0, self.eps.size - 1)

    def B(self, t):
        t = np.asarray(t, dtype=float)
        k = self._block(t)
        bk = self.s0 + self.T * k
        return self.scale * self.path.integral(bk, t) - self.eps[k] * (t - bk)

    def Bprime(self, t):
        """Derivative in block interiors (undefined at breakpoints)."""
        t = np.asarray(t, dtype=float)
        return self.scale * self.path(t) - self.eps[self._block(t)]

    def breakpoints(self):
        return self.s0 + self.T * np.arange(self.eps.size + 1)

    def slack(self):
        """min_k eps_k; inside block k the combination scale*a - B' equals eps_k."""
        return float(self.eps.min())


def build_B(path, gamma, delta, span, r_min=1.0):
    """Bounded primitive of `delta * path` with every block mean >= gamma.

    The block length T starts at r_min and doubles until every block mean
    of delta * a over [span[0], span[0] + n T] clears gamma, or T exceeds a
    quarter of the horizon, in which case the worst block is reported.
    Requires gamma < delta * a_lower_est, the necessary condition for an
    admissible T to exist in the long-window limit.
    """
    s0, s1 = float(span[0]), float(span[1])
    horizon = s1 - s0
    if horizon <= 0:
        raise ValueError("empty span")
    if not 0 < delta <= 1:
        raise ValueError("scale delta must lie in (0, 1]")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    # necessary condition at the longest certifiable scale (blocks of
    # length horizon/4); shorter windows would wrongly reject paths whose
    # long-window means are fine
    est = estimate_means(path, horizon / 4.0, span)
    if not gamma < delta * est.a_lower_est:
        raise ValueError(
            "gamma=%g is not below delta * a_lower_est = %g * %g; no block "
            "length can certify the slack" % (gamma, delta, est.a_lower_est))
    T = float(r_min)
    worst = None
    while T <= horizon / 4.0 + 1e-12:
        n = max(1, int(math.ceil(horizon / T - 1e-12)))
        edges = s0 + T * np.arange(n + 1)
        eps = delta * path.integral(edges[:-1], edges[1:]) / T
        k_bad = int(np.argmin(eps))
        if eps[k_bad] >= gamma:
            bp = PiecewiseB(path=path, T=T, s0=s0, s1=s1, scale=float(delta),
                            gamma=float(gamma), eps=np.asarray(eps, dtype=float),
                            B_norm=0.0, r_min=float(r_min))
            bp.B_norm = _piecewise_B_norm(bp)
            return bp
        worst = (T, edges[k_bad], edges[k_bad + 1], float(eps[k_bad]))
        T *= 2.0
    raise ValueError(
        "no block length up to horizon/4 gives block means >= %g; worst window "
        "[%g, %g] at T=%g has mean %g" % ((gamma,) + worst[1:] + (worst[0], worst[3]))
        if worst else
        "horizon %g shorter than 4 * r_min = %g" % (horizon, 4 * r_min))


def _piecewise_B_norm(bp, n_per_block=256):
    """Sup of |B| sampled densely inside each block (B is 0 at breakpoints)."""
    worst = 0.0
    for k in range(bp.eps.size):
        a = bp.s0 + bp.T * k
        ts = a + bp.T * np.arange(1, n_per_block) / n_per_block
        worst = max(worst, float(np.max(np.abs(bp.B(ts)))))
    return worst


def equilibrium_path(noise, t_lo, t_hi, dt=None, t_trunc=None, tail_tol=1e-8):
    """Coefficient path a(t) = Y(t): the pullback equilibrium of the
    random logistic equation driven by `noise`.

    Requires the noise realization to extend at least the truncation
    horizon below t_lo; the truncation horizon defaults to the smallest T
    with tail bound exp(-(1+xi_inf) T) / (1+xi_inf) < tail_tol, using the
    realized minimum of the noise.
    """
    from . import equilibria  # local import; equilibria imports coeff for types

    if dt is None:
        dt = noise.dt
    if t_trunc is None:
        t_trunc = equilibria.truncation_horizon(noise, tail_tol)
    if noise.t_lo > t_lo - t_trunc + 1e-9:
        raise ValueError(
            "noise history starts at %g but the equilibrium needs it from %g "
            "(t_lo - T_trunc)" % (noise.t_lo, t_lo - t_trunc))
    ts = np.arange(t_lo, t_hi + 0.5 * dt, dt)
    ys = equilibria.equilibrium_values(noise, ts, t_trunc)
    meta = {"seed": noise.seed, "kappa": noise.kappa, "sigma": noise.sigma,
            "xi_max": noise.xi_max, "noise_dt": noise.dt, "t_trunc": t_trunc}
    return TabulatedPath(float(ts[0]), float(dt), ys, kind="noise-equilibrium",
                         meta=meta)
