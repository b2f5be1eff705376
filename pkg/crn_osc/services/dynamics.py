# crn_osc/services/dynamics.py

import logging
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.integrate import DOP853, OdeSolution, Radau
from scipy.optimize import brentq
from scipy.spatial.distance import directed_hausdorff

from crn_osc.config import config
from crn_osc.errors import IntegrationError, KineticsDomainError, NotPeriodicError
from crn_osc.models.orbit import (
    IntegratorConfig,
    OrbitRecord,
    Trajectory,
    TrajectoryClass,
    TrajectoryStatus,
)

logger = logging.getLogger(__name__)

SOLVERS = {"DOP853": DOP853, "Radau": Radau}


class CallableField:
    """
    A vector field given by plain callables, for systems that are not CRNs
    (test oscillators, augmented variational systems).
    """

    positive = False
    integer_exponents = True

    def __init__(self, fun: Callable[[np.ndarray], np.ndarray], dim: int,
                 jac: Optional[Callable[[np.ndarray], np.ndarray]] = None):
        self._fun = fun
        self._jac = jac
        self.dim = dim

    def field(self, x) -> np.ndarray:
        return np.asarray(self._fun(np.asarray(x, dtype=float)), dtype=float)

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self._jac is not None:
            return np.asarray(self._jac(x), dtype=float)
        return finite_difference_jacobian(self.field, x)

    def __call__(self, t: float, x) -> np.ndarray:
        return self.field(x)


def finite_difference_jacobian(fun: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
                               h: float = 1e-6) -> np.ndarray:
    """Central differences, step scaled by |x_i|."""
    n = len(x)
    J = np.zeros((len(fun(x)), n))
    for i in range(n):
        step = h * max(1.0, abs(x[i]))
        e = np.zeros(n)
        e[i] = step
        J[:, i] = (fun(x + e) - fun(x - e)) / (2 * step)
    return J


def _dim(vf) -> int:
    return vf.dim


def _floor(vf) -> Optional[float]:
    """Clip level for solver trial points of orthant-valued fields."""
    if not getattr(vf, "positive", False):
        return None
    return 0.0 if vf.integer_exponents else np.finfo(float).tiny


def _wrap(vf) -> Tuple[Callable, Callable]:
    floor = _floor(vf)
    if floor is None:
        return (lambda t, y: vf.field(y)), (lambda t, y: vf.jacobian(y))
    return (lambda t, y: vf.field(np.maximum(y, floor))), \
        (lambda t, y: vf.jacobian(np.maximum(y, floor)))


def _make_solver(method: str, fun, jac, t0: float, y0: np.ndarray, t_bound: float, cfg: IntegratorConfig):
    kwargs = dict(rtol=cfg.rtol, atol=cfg.atol)
    if method == "Radau":
        kwargs["jac"] = jac
    return SOLVERS[method](fun, t0, y0, t_bound, **kwargs)


def integrate(vf, x0, cfg: Optional[IntegratorConfig] = None, dense: bool = False,
              t0: float = 0.0, stop: Optional[Callable[[float, np.ndarray], bool]] = None) -> Trajectory:
    """
    Integrate x' = f(x) from x0 over [t0, t0 + cfg.max_time].

    DOP853 runs first unless cfg.stiff; Radau with the analytic Jacobian takes
    over after a failed explicit step or after cfg.stiff_switch_steps explicit
    steps. The run ends early when the state norm exceeds cfg.cap, when the
    step budget is spent, when `stop(t, y)` holds after an accepted step or
    (optionally) when the field vanishes.

    Raises:
        KineticsDomainError: x0 outside the domain of the field
        IntegrationError: the implicit solver fails
    """
    cfg = cfg or IntegratorConfig.screening()
    y = np.asarray(x0, dtype=float).copy()
    if len(y) != _dim(vf):
        raise KineticsDomainError(f"initial state has length {len(y)}, expected {_dim(vf)}")
    fun, jac = _wrap(vf)
    if getattr(vf, "positive", False):
        vf.field(y)

    t, t_end = t0, t0 + cfg.max_time
    times, states, interps = [t], [y.copy()], []
    method = "Radau" if cfg.stiff else "DOP853"
    switched, at_rest = False, False
    status = TrajectoryStatus.COMPLETED
    steps = phase_steps = 0

    solver = _make_solver(method, fun, jac, t, y, t_end, cfg)
    while solver.status == "running":
        message = solver.step()
        if solver.status == "failed":
            if method == "DOP853":
                logger.debug("Explicit step failed at t=%.6g (%s); switching to Radau", t, message)
                method, switched, phase_steps = "Radau", True, 0
                solver = _make_solver(method, fun, jac, t, y, t_end, cfg)
                continue
            raise IntegrationError(f"Radau failed at t={t:.6g}: {message}")

        steps += 1
        phase_steps += 1
        t, y = solver.t, solver.y.copy()
        times.append(t)
        states.append(y)
        if dense:
            interps.append(solver.dense_output())

        if not np.all(np.isfinite(y)) or np.linalg.norm(y, np.inf) > cfg.cap:
            status = TrajectoryStatus.UNBOUNDED
            break
        if steps >= cfg.max_steps:
            status = TrajectoryStatus.STEP_LIMIT
            break
        if stop is not None and stop(t, y):
            break
        if cfg.stop_at_equilibrium:
            if np.linalg.norm(fun(t, y), np.inf) <= cfg.rest_tol * (1.0 + np.linalg.norm(y, np.inf)):
                at_rest = True
                break
        if method == "DOP853" and cfg.stiff_switch_steps and phase_steps >= cfg.stiff_switch_steps \
                and solver.status == "running":
            logger.debug("Switching to Radau after %d explicit steps at t=%.6g", phase_steps, t)
            method, switched, phase_steps = "Radau", True, 0
            solver = _make_solver(method, fun, jac, t, y, t_end, cfg)

    times_arr = np.asarray(times)
    return Trajectory(
        times=times_arr,
        states=np.asarray(states),
        status=status,
        n_steps=steps,
        method=method,
        switched_to_stiff=switched,
        stopped_at_equilibrium=at_rest,
        dense=OdeSolution(times_arr, interps) if dense and interps else None,
    )


def classify(traj: Trajectory, tail_fraction: Optional[float] = None,
             conv_tol: Optional[float] = None, min_crossings: Optional[int] = None) -> TrajectoryClass:
    """
    Label a trajectory from the tail window of its time span.

    Converged: every coordinate's relative tail amplitude below conv_tol.
    OscillatoryCandidate: recurrent mean crossings of the most active coordinate
    without amplitude decay across the window.
    """
    tail_fraction = tail_fraction or config.TAIL_FRACTION
    conv_tol = conv_tol or config.CONV_TOL
    min_crossings = min_crossings or config.MIN_SECTION_CROSSINGS

    if traj.status == TrajectoryStatus.UNBOUNDED:
        return TrajectoryClass.UNBOUNDED
    if traj.stopped_at_equilibrium:
        return TrajectoryClass.CONVERGED
    if traj.status != TrajectoryStatus.COMPLETED or len(traj.times) < 3:
        return TrajectoryClass.UNDETERMINED

    t, x = traj.times, traj.states
    start = t[-1] - tail_fraction * (t[-1] - t[0])
    grid = np.linspace(start, t[-1], 2001)
    tail = np.column_stack([np.interp(grid, t, x[:, i]) for i in range(x.shape[1])])

    scale = np.abs(tail).mean(axis=0) + 1e-12
    amplitude = np.ptp(tail, axis=0) / scale
    if amplitude.max() < conv_tol:
        return TrajectoryClass.CONVERGED

    i = int(np.argmax(amplitude))
    signal = tail[:, i] - tail[:, i].mean()
    crossings = int(np.count_nonzero((signal[:-1] < 0) & (signal[1:] >= 0)))
    half = len(grid) // 2
    early, late = np.ptp(tail[:half, i]), np.ptp(tail[half:, i])
    if crossings >= min_crossings and late >= 0.5 * early:
        return TrajectoryClass.OSCILLATORY_CANDIDATE
    return TrajectoryClass.UNDETERMINED


# -- flow maps ----------------------------------------------------------------

def _horizon(cfg: IntegratorConfig, T: float) -> IntegratorConfig:
    return cfg.model_copy(update={"max_time": T, "stop_at_equilibrium": False})


def flow(vf, x, T: float, cfg: Optional[IntegratorConfig] = None) -> np.ndarray:
    """Phi_T(x)."""
    cfg = cfg or IntegratorConfig.certification()
    traj = integrate(vf, x, _horizon(cfg, T))
    if traj.status != TrajectoryStatus.COMPLETED:
        raise NotPeriodicError(f"flow over T={T:.6g} ended with status {traj.status.value}")
    return traj.final_state


def variational_field(vf, reduction: Optional[Tuple[np.ndarray, np.ndarray, Callable]] = None,
                      with_trace: bool = False) -> CallableField:
    """
    Augmented system (x, Z[, s]) with Z' = A(x) Z and s' = tr A(x).

    Without reduction A = Df. With reduction (B, Q, Dv), A = Q Dv(x) B and Z is r x r.
    """
    n = _dim(vf)
    floor = _floor(vf)
    if reduction is None:
        size = n
        def A(x):
            return vf.jacobian(x)
    else:
        B, Q, rate_jacobian = reduction
        size = B.shape[1]
        def A(x):
            return Q @ rate_jacobian(x) @ B

    def fun(y):
        x = y[:n] if floor is None else np.maximum(y[:n], floor)
        Z = y[n:n + size * size].reshape(size, size)
        Ax = A(x)
        parts = [vf.field(x), (Ax @ Z).ravel()]
        if with_trace:
            parts.append([np.trace(Ax)])
        return np.concatenate(parts)

    return CallableField(fun, n + size * size + (1 if with_trace else 0))


def flow_with_stm(vf, x, T: float, cfg: Optional[IntegratorConfig] = None,
                  reduction=None, with_trace: bool = False):
    """
    Phi_T(x), Z(T) and (optionally) the integral of tr A along the arc.

    Returns:
        tuple: (x_T, Z_T, trace_integral or None)
    """
    cfg = cfg or IntegratorConfig.certification()
    n = _dim(vf)
    size = n if reduction is None else reduction[0].shape[1]
    aug = variational_field(vf, reduction, with_trace)
    y0 = np.concatenate([np.asarray(x, dtype=float), np.eye(size).ravel()] +
                        ([np.zeros(1)] if with_trace else []))
    traj = integrate(aug, y0, _horizon(cfg, T).model_copy(update={"stiff_switch_steps": 0}))
    if traj.status != TrajectoryStatus.COMPLETED:
        raise IntegrationError(f"variational integration ended with status {traj.status.value}")
    yT = traj.final_state
    Z = yT[n:n + size * size].reshape(size, size)
    return yT[:n], Z, (float(yT[-1]) if with_trace else None)


# -- orbit location -----------------------------------------------------------

def _section_basis(vf) -> np.ndarray:
    """Columns spanning the directions the orbit may move in."""
    basis = getattr(vf, "basis", None)
    if basis is None:
        return np.eye(_dim(vf))
    return basis.gamma0_float


def _first_return(vf, p0: np.ndarray, normal: np.ndarray, cfg: IntegratorConfig) -> float:
    went_below = [False]

    def returned(t, y):
        g = (y - p0) @ normal
        if g < 0:
            went_below[0] = True
        return went_below[0] and g >= 0

    traj = integrate(vf, p0, cfg.model_copy(update={"stop_at_equilibrium": False}), dense=True,
                     stop=returned)
    if traj.dense is None:
        raise NotPeriodicError("no steps taken while searching for a return")
    g = (traj.states - p0) @ normal
    for i in range(1, len(g)):
        if g[i - 1] < 0 <= g[i]:
            a, b = traj.times[i - 1], traj.times[i]
            return brentq(lambda s: (traj.dense(s) - p0) @ normal, a, b, xtol=1e-14)
    raise NotPeriodicError("trajectory never returned to the section")


def sample_orbit(vf, point, period: float, n_points: int = 200,
                 cfg: Optional[IntegratorConfig] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Evenly spaced samples along one period."""
    cfg = cfg or IntegratorConfig.certification()
    traj = integrate(vf, point, _horizon(cfg, period), dense=True)
    times = np.linspace(0.0, period, n_points)
    states = np.asarray(traj.dense(times)).T
    return times, states


def hausdorff_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0]))


def locate_orbit(vf, seed_point, cfg: Optional[IntegratorConfig] = None,
                 period_guess: Optional[float] = None, max_iter: Optional[int] = None,
                 orbit_tol: Optional[float] = None) -> OrbitRecord:
    """
    Periodic orbit through a hyperplane section at the seed point.

    The section normal is the field direction at the seed. A first return gives
    the period estimate, then damped Newton shooting on (z, T) refines the
    point p = p0 + B z, B a basis of the stoichiometric subspace.

    Raises:
        NotPeriodicError: equilibrium seed, no return, Newton failure, a
            trivial orbit, or a period that is not the least one
    """
    cfg = cfg or IntegratorConfig.certification()
    max_iter = max_iter or config.NEWTON_MAX_ITER
    orbit_tol = orbit_tol or config.ORBIT_TOL
    p0 = np.asarray(seed_point, dtype=float)
    f0 = vf.field(p0)
    speed = np.linalg.norm(f0)
    if speed < config.MIN_ORBIT_AMPLITUDE * (1.0 + np.linalg.norm(p0)):
        raise NotPeriodicError("seed point is an equilibrium")
    normal = f0 / speed

    T = period_guess if period_guess else _first_return(vf, p0, normal, cfg)
    B = _section_basis(vf)
    Bp = np.linalg.pinv(B)
    I = np.eye(len(p0))
    p = p0.copy()

    def residual(point, period):
        return flow(vf, point, period, cfg) - point

    converged = False
    res = np.inf
    for it in range(max_iter):
        xT, Z, _ = flow_with_stm(vf, p, T, cfg)
        F = xT - p
        res = np.linalg.norm(F)
        logger.debug("Newton %d: T=%.10g residual=%.3e", it, T, res)
        if res < orbit_tol * (1.0 + np.linalg.norm(p)):
            converged = True
            break
        top = np.hstack([Bp @ (Z - I) @ B, (Bp @ vf.field(xT))[:, None]])
        bottom = np.append(normal @ B, 0.0)
        A = np.vstack([top, bottom])
        rhs = -np.append(Bp @ F, normal @ (p - p0))
        delta = np.linalg.lstsq(A, rhs, rcond=None)[0]
        dp, dT = B @ delta[:-1], delta[-1]

        lam = 1.0
        for _ in range(8):
            p_try, T_try = p + lam * dp, T + lam * dT
            if T_try > 0 and not (getattr(vf, "positive", False) and np.any(p_try <= 0)):
                try:
                    if np.linalg.norm(residual(p_try, T_try)) < res:
                        p, T = p_try, T_try
                        break
                except (NotPeriodicError, IntegrationError, KineticsDomainError):
                    pass
            lam *= 0.5
        else:
            if T + lam * dT <= 0:
                raise NotPeriodicError("Newton drove the period to zero")
            p, T = p + lam * dp, T + lam * dT

    if not converged:
        raise NotPeriodicError(f"shooting did not converge (residual {res:.3e})")

    _, samples = sample_orbit(vf, p, T, 200, cfg)
    amplitude = float(np.ptp(samples, axis=0).max())
    if amplitude < config.MIN_ORBIT_AMPLITUDE * (1.0 + np.linalg.norm(p)):
        raise NotPeriodicError("orbit amplitude below threshold")
    scale = orbit_tol * (1.0 + np.linalg.norm(p))
    for divisor in (2, 3):
        if np.linalg.norm(residual(p, T / divisor)) < 10 * scale:
            raise NotPeriodicError(f"T/{divisor} is also a period")

    logger.info("Located orbit: T=%.8g residual=%.3e amplitude=%.3g", T, res, amplitude)
    return OrbitRecord(
        point=tuple(float(v) for v in p),
        period=float(T),
        residuals={"return_map": float(res)},
        tolerances={"rtol": cfg.rtol, "atol": cfg.atol, "orbit_tol": orbit_tol},
    )
