"""Monotone finite-difference solver for u_t = u_xx + a(t) u (1 - u).

The scheme is operator-split per step: explicit reaction evaluated at the
step midpoint, first-order upwind advection in the moving frame, and
backward-Euler diffusion through a prefactored tridiagonal solve.  Each
sub-step is a monotone map on fields, so the discrete comparison and
maximum principles hold to rounding -- the property every certificate in
this package leans on.  That rules out faster non-monotone schemes on
purpose.

Moving-frame solves use the time-dependent frame speed
c(t) = (mu^2 + a(t)) / mu, the speed at which the exponential ansatz
exp(-mu x) is stationary; the accumulated shift is tracked exactly through
the path's integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import splu

__all__ = [
    "Grid1D", "Field", "SolveConfig", "Trajectory",
    "StepSizeError", "FrontMarginError",
    "make_grid", "init", "step", "solve", "solve_moving_frame",
    "suggest_domain", "frame_speed",
]

# fields below this value count as "unoccupied" for boundary-safety checks
WATCH_LEVEL = 0.05


class StepSizeError(ValueError):
    """Time step violates the monotonicity or CFL constraint."""


class FrontMarginError(RuntimeError):
    """The front reached the safety margin of a watched boundary."""


@dataclass
class Grid1D:
    x_lo: float
    x_hi: float
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("need at least 3 nodes")
        if not self.x_hi > self.x_lo:
            raise ValueError("empty spatial interval")
        self._x = np.linspace(self.x_lo, self.x_hi, self.n)

    @property
    def dx(self):
        return (self.x_hi - self.x_lo) / (self.n - 1)

    @property
    def x(self):
        return self._x


def make_grid(x_lo, x_hi, dx):
    """Uniform grid with spacing dx (x_hi is kept, n is rounded)."""
    n = int(round((x_hi - x_lo) / dx)) + 1
    return Grid1D(float(x_lo), float(x_lo) + (n - 1) * float(dx), n)


@dataclass
class Field:
    grid: Grid1D
    values: np.ndarray
    t: float = 0.0

    def copy(self):
        return Field(self.grid, self.values.copy(), self.t)


@dataclass
class SolveConfig:
    dt: float
    frame: str = "fixed"
    mu: float = None
    store_stride: int = None      # steps between stored frames; default ~0.5 time units
    margin: float = 50.0          # front-safety margin in space units; 0 disables

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.frame not in ("fixed", "moving"):
            raise ValueError("frame must be 'fixed' or 'moving'")
        if self.frame == "moving" and not (self.mu and self.mu > 0):
            raise ValueError("moving frame needs a positive exponent mu")
        if self.margin < 0:
            raise ValueError("margin must be nonnegative")


def init(kind, grid, params=None):
    """Initial data factory.

    kinds: 'heaviside' (one-cell linear ramp at x0), 'front-like'
    (min(1, exp(-mu (x-x0)))), 'compact-bump' (cos^2 bump on [lo, hi] with
    given height), 'constant', 'custom-samples' (explicit node values).
    """
    params = dict(params or {})
    x = grid.x
    if kind == "heaviside":
        x0 = float(params.pop("x0", 0.0))
        vals = np.clip(0.5 - (x - x0) / grid.dx, 0.0, 1.0)
    elif kind == "front-like":
        mu = float(params.pop("mu", 1.0))
        x0 = float(params.pop("x0", 0.0))
        if mu <= 0:
            raise ValueError("front-like data needs mu > 0")
        vals = np.minimum(1.0, np.exp(-mu * (x - x0)))
    elif kind == "compact-bump":
        lo = float(params.pop("lo", -1.0))
        hi = float(params.pop("hi", 1.0))
        height = float(params.pop("height", 1.0))
        if height < 0:
            raise ValueError("bump height must be nonnegative")
        if not (grid.x_lo <= lo < hi <= grid.x_hi):
            raise ValueError("bump support [%g, %g] outside grid [%g, %g]"
                             % (lo, hi, grid.x_lo, grid.x_hi))
        vals = np.zeros_like(x)
        inside = (x > lo) & (x < hi)
        vals[inside] = height * np.cos(
            math.pi * (x[inside] - 0.5 * (lo + hi)) / (hi - lo)) ** 2
    elif kind == "constant":
        value = float(params.pop("value", 1.0))
        if value < 0:
            raise ValueError("constant level must be nonnegative")
        vals = np.full_like(x, value)
    elif kind == "custom-samples":
        vals = np.asarray(params.pop("values"), dtype=float)
        if vals.shape != x.shape:
            raise ValueError("custom samples must have one value per node")
        if vals.min() < 0:
            raise ValueError("initial data must be nonnegative")
    else:
        raise ValueError("unknown initial-data kind %r" % kind)
    if params:
        raise ValueError("unused parameters for kind %r: %s"
                         % (kind, sorted(params)))
    return Field(grid, vals, 0.0)


def frame_speed(path, mu, t):
    """Moving-frame speed c(t) = (mu^2 + a(t)) / mu."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    return (mu * mu + path(t)) / mu


def _diffusion_lu(grid, dt):
    """Prefactored backward-Euler operator I - dt * Laplacian (zero-flux).

    Zero-flux boundaries via mirror ghost nodes give row sums of exactly 1,
    so constants are preserved and the inverse is a monotone averaging.
    """
    lam = dt / grid.dx ** 2
    n = grid.n
    main = np.full(n, 1.0 + 2.0 * lam)
    off_up = np.full(n - 1, -lam)
    off_dn = np.full(n - 1, -lam)
    off_up[0] = -2.0 * lam
    off_dn[-1] = -2.0 * lam
    mat = diags([off_dn, main, off_up], [-1, 0, 1], format="csc")
    return splu(mat)


def _check_step_bounds(path, t, dt, u_max, grid, config):
    a_max = float(path.max_on(t, t + dt))
    gate = dt * a_max * max(1.0, 2.0 * u_max - 1.0)
    if gate > 0.5 + 1e-12:
        raise StepSizeError(
            "reaction step too large at t=%g: dt*a_max*max(1, 2 sup u - 1) = "
            "%g * %g * %g = %g > 0.5" % (t, dt, a_max, max(1.0, 2.0 * u_max - 1.0), gate))
    if config.frame == "moving":
        c_max = (config.mu ** 2 + a_max) / config.mu
        cfl = c_max * dt / grid.dx
        if cfl > 1.0 + 1e-12:
            raise StepSizeError(
                "upwind CFL violated at t=%g: c_max*dt/dx = %g*%g/%g = %g > 1"
                % (t, c_max, dt, grid.dx, cfl))


def _advance(values, dt, a_mid, lu, grid, config):
    """One split step: reaction, advection, diffusion.  Returns a new array."""
    u = values
    u = u + dt * a_mid * u * (1.0 - u)
    if config.frame == "moving":
        nu = ((config.mu ** 2 + a_mid) / config.mu) * dt / grid.dx
        u[:-1] += nu * (u[1:] - u[:-1])
        # last node keeps its value: zero-gradient inflow
    return lu.solve(u)


def step(field, path, dt, config=None):
    """Advance a single step.  Convenience wrapper; solve() amortizes the
    factorization over a whole run."""
    config = config or SolveConfig(dt=dt)
    _check_step_bounds(path, field.t, dt, float(field.values.max()), field.grid, config)
    lu = _diffusion_lu(field.grid, dt)
    a_mid = float(path(field.t + 0.5 * dt))
    new_vals = _advance(field.values, dt, a_mid, lu, field.grid, config)
    return Field(field.grid, new_vals, field.t + dt)


@dataclass
class Trajectory:
    """Stored frames of a solve, with exact frame-shift bookkeeping."""

    grid: Grid1D
    times: np.ndarray
    frames: np.ndarray
    frame: str = "fixed"
    mu: float = None
    frame_shift: np.ndarray = None    # integral of c(t) at stored times (moving frame)
    meta: dict = dc_field(default_factory=dict)

    def frame_at(self, t):
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)) + 1e-12:
            raise KeyError("no stored frame at t=%g (nearest %g)" % (t, self.times[k]))
        return Field(self.grid, self.frames[k].copy(), float(self.times[k]))

    def to_csv(self, file):
        own = isinstance(file, (str, bytes))
        fh = open(file, "w") if own else file
        try:
            meta = " ".join("%s=%s" % (k, v) for k, v in sorted(self.meta.items()))
            fh.write("# frame=%s %s\n" % (self.frame, meta))
            fh.write("t," + ",".join("%.12g" % xi for xi in self.grid.x) + "\n")
            for t, row in zip(self.times, self.frames):
                fh.write("%.12g," % t + ",".join("%.12g" % v for v in row) + "\n")
        finally:
            if own:
                fh.close()

    def to_binary(self, file):
        """Compact layout: magic 'KPP1', little-endian int64 counts, float64
        grid descriptor, then times, frame shifts, and frames row-major."""
        own = isinstance(file, (str, bytes))
        fh = open(file, "wb") if own else file
        try:
            fh.write(b"KPP1")
            np.asarray([self.times.size, self.grid.n], dtype="<i8").tofile(fh)
            mu = self.mu if self.mu is not None else math.nan
            moving = 1.0 if self.frame == "moving" else 0.0
            np.asarray([self.grid.x_lo, self.grid.dx, moving, mu],
                       dtype="<f8").tofile(fh)
            np.asarray(self.times, dtype="<f8").tofile(fh)
            shifts = self.frame_shift if self.frame_shift is not None \
                else np.zeros_like(self.times)
            np.asarray(shifts, dtype="<f8").tofile(fh)
            np.asarray(self.frames, dtype="<f8").tofile(fh)
        finally:
            if own:
                fh.close()

    @staticmethod
    def from_binary(file):
        own = isinstance(file, (str, bytes))
        fh = open(file, "rb") if own else file
        try:
            if fh.read(4) != b"KPP1":
                raise ValueError("not a KPP1 trajectory file")
            n_frames, n_nodes = (int(v) for v in np.fromfile(fh, dtype="<i8", count=2))
            x_lo, dx, moving, mu = np.fromfile(fh, dtype="<f8", count=4)
            times = np.fromfile(fh, dtype="<f8", count=n_frames)
            shifts = np.fromfile(fh, dtype="<f8", count=n_frames)
            frames = np.fromfile(fh, dtype="<f8",
                                 count=n_frames * n_nodes).reshape(n_frames, n_nodes)
        finally:
            if own:
                fh.close()
        grid = Grid1D(float(x_lo), float(x_lo + dx * (n_nodes - 1)), n_nodes)
        return Trajectory(grid=grid, times=times, frames=frames,
                          frame="moving" if moving else "fixed",
                          mu=None if math.isnan(mu) else float(mu),
                          frame_shift=shifts)


def _watched_sides(values):
    """Boundary sides that start unoccupied; fronts must not reach them."""
    sides = []
    if values[0] < WATCH_LEVEL:
        sides.append("left")
    if values[-1] < WATCH_LEVEL:
        sides.append("right")
    return sides


def solve(init_field, path, t_end, config):
    """Run from init_field.t to t_end, storing frames at the config stride.

    Aborts with FrontMarginError if the solution becomes occupied inside
    the safety margin of a boundary that started unoccupied (the front ran
    out of room; speed estimates past this point would be contaminated).
    The margin is capped at a quarter of the domain so small test domains
    stay usable; margin=0 disables the check.
    """
    grid = init_field.grid
    dt = config.dt
    t0 = float(init_field.t)
    span = t_end - t0
    n_steps = int(round(span / dt))
    if n_steps < 1 or abs(n_steps * dt - span) > 1e-9 * max(1.0, abs(t_end)):
        raise ValueError("t_end - t0 = %g is not a positive multiple of dt = %g"
                         % (span, dt))
    if path.t_lo > t0 + 1e-12 or path.t_hi < t_end - 1e-12:
        raise ValueError("path range [%g, %g] does not cover the solve span [%g, %g]"
                         % (path.t_lo, path.t_hi, t0, t_end))

    stride = config.store_stride or max(1, int(round(0.5 / dt)))
    margin = min(config.margin, 0.25 * (grid.x_hi - grid.x_lo))
    m_nodes = int(round(margin / grid.dx))
    watched = _watched_sides(init_field.values) if m_nodes > 0 else []

    lu = _diffusion_lu(grid, dt)
    mids = np.asarray(path(t0 + (np.arange(n_steps) + 0.5) * dt), dtype=float)

    u = init_field.values.astype(float).copy()
    times = [t0]
    frames = [u.copy()]

    def safety_check(vals, t):
        if not np.all(np.isfinite(vals)):
            raise RuntimeError("non-finite field values at t=%g" % t)
        for side in watched:
            band = vals[:m_nodes] if side == "left" else vals[-m_nodes:]
            if band.max() > WATCH_LEVEL:
                raise FrontMarginError(
                    "front entered the %s safety margin (%g space units) at t=%g; "
                    "enlarge the domain" % (side, margin, t))

    safety_check(u, t0)
    for k in range(n_steps):
        t = t0 + k * dt
        _check_step_bounds(path, t, dt, float(u.max()), grid, config)
        u = _advance(u, dt, mids[k], lu, grid, config)
        if (k + 1) % stride == 0 or k + 1 == n_steps:
            t_new = t0 + (k + 1) * dt
            safety_check(u, t_new)
            times.append(t_new)
            frames.append(u.copy())

    times = np.asarray(times)
    if config.frame == "moving":
        shift = (config.mu ** 2 * (times - t0)
                 + path.integral(np.full_like(times, t0), times)) / config.mu
    else:
        shift = np.zeros_like(times)
    meta = {"dt": dt, "dx": grid.dx, "stride": stride, "margin": config.margin,
            "t0": t0, "t_end": t_end}
    return Trajectory(grid=grid, times=times, frames=np.asarray(frames),
                      frame=config.frame, mu=config.mu, frame_shift=shift,
                      meta=meta)


def solve_moving_frame(init_field, path, mu, t_end, config):
    """solve() in the frame moving at c(t) = (mu^2 + a(t)) / mu."""
    moving = SolveConfig(dt=config.dt, frame="moving", mu=mu,
                         store_stride=config.store_stride, margin=config.margin)
    return solve(init_field, path, t_end, moving)


def suggest_domain(path, t_end, margin=50.0, r_min=5.0):
    """Recommended right boundary for spreading runs started near x = 0:
    the fastest plausible front (speed 2 sqrt(a_upper_est)) plus 10% and
    the safety margin."""
    from . import coeff

    r = min(r_min, t_end / 4.0)
    est = coeff.estimate_means(path, r, (0.0, t_end))
    return 2.0 * math.sqrt(est.a_upper_est) * t_end * 1.1 + margin
