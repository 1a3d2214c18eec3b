"""Maximize quantum violations over the state angle and the measurements.

Parameter vector layout: ``(theta, alpha_1..alpha_m, beta_1..beta_n)``
followed by ``(phi_x..., phi_y...)`` when phases are free.

Objectives are tuples of probability-form branches; the objective value
is the largest branch value.  A plain inequality has one branch.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .expr import BellExpression, ExpressionError, Form, Party, split_branches, to_probability_form, transpose
from .quantum import (NoViolationError, QuantumModel, max_form_branches, nch_branches, noise_resistance,
                      probabilities_fast)

GRID_GUARD = 10 ** 8


class ConfigError(ValueError):
    pass


class GridGuardError(ValueError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 64
    seed: int = 0
    free_phase: bool = False
    tolerance: float = 1e-10
    max_evals: int = 100_000
    gradient_polish: bool = False

    def __post_init__(self):
        if int(self.restarts) < 1:
            raise ConfigError("restarts must be at least 1")
        if not self.tolerance > 0:
            raise ConfigError("tolerance must be positive")
        if int(self.max_evals) < 1:
            raise ConfigError("max_evals must be at least 1")

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerConfig":
        if not isinstance(d, dict):
            raise ConfigError("optimizer config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "OptimizerConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read optimizer config {path}: {exc}") from exc
        return cls.from_dict(data)


@dataclass(frozen=True)
class Objective:
    name: str
    branches: tuple

    def __post_init__(self):
        if not self.branches:
            raise ExpressionError("objective needs at least one branch")
        shapes = {b.shape for b in self.branches}
        if len(shapes) != 1:
            raise ExpressionError("all branches must share one shape")
        if any(b.form_tag is not Form.PROBABILITY for b in self.branches):
            raise ExpressionError("objective branches must be in probability form")

    @property
    def m(self) -> int:
        return self.branches[0].m

    @property
    def n(self) -> int:
        return self.branches[0].n

    @classmethod
    def standard(cls, expr: BellExpression, name: str = "standard") -> "Objective":
        if expr.form_tag is Form.ALGEBRAIC:
            expr = to_probability_form(expr)
        return cls(name, (expr,))

    @classmethod
    def nch(cls) -> "Objective":
        return cls("nch", nch_branches())

    @classmethod
    def maxform(cls, k: int) -> "Objective":
        return cls(f"maxform{k}", max_form_branches(k))

    @classmethod
    def split(cls, expr: BellExpression, party: Party, index: int) -> "Objective":
        """Max of the two branches of ``expr`` with one variable fixed to its
        bound and to zero (a diagnostic generalisation of the max-form)."""
        if expr.form_tag is Form.PROBABILITY:
            from .expr import to_algebraic_form
            expr = to_algebraic_form(expr)
        hi, lo = split_branches(expr, party, index)
        tag = "x" if party is Party.X else "y"
        return cls(f"split_{tag}{index + 1}", (to_probability_form(hi), to_probability_form(lo)))

    def stacked(self):
        """Branch coefficients as arrays ``(J[b,i,j], CX[b,i], CY[b,j], C0[b])``."""
        arrs = [b.arrays for b in self.branches]
        return (np.stack([a[0] for a in arrs]), np.stack([a[1] for a in arrs]),
                np.stack([a[2] for a in arrs]), np.array([a[3] for a in arrs], float))


class _Evaluator:
    """Fast objective and gradient on the parameter vector."""

    def __init__(self, objective: Objective, free_phase: bool):
        self.m, self.n = objective.m, objective.n
        self.free_phase = free_phase
        self.J, self.CX, self.CY, self.C0 = objective.stacked()
        self.calls = 0

    def unpack(self, p):
        m, n = self.m, self.n
        theta, a, b = p[0], p[1:1 + m], p[1 + m:1 + m + n]
        if self.free_phase:
            return theta, a, b, p[1 + m + n:1 + 2 * m + n], p[1 + 2 * m + n:]
        return theta, a, b, None, None

    def branch_values(self, p):
        self.calls += 1
        px, py, pxy = probabilities_fast(*self.unpack(p))
        return self.CX @ px + self.CY @ py + np.einsum("bij,ij->b", self.J, pxy) + self.C0

    def __call__(self, p) -> float:
        return float(self.branch_values(p).max())

    def value_and_grad(self, p):
        vals = self.branch_values(p)
        k = int(np.argmax(vals))
        return float(vals[k]), self._grad(p, k)

    def _grad(self, p, k):
        theta, a, b, pha, phb = self.unpack(p)
        J, cx, cy = self.J[k], self.CX[k], self.CY[k]
        c2t, s2t = math.cos(2 * theta), math.sin(2 * theta)
        ct2, st2 = math.cos(theta) ** 2, math.sin(theta) ** 2
        u, v, w = np.cos(a) ** 2, np.sin(a) ** 2, np.sin(2 * a) / 2
        U, V, W = np.cos(b) ** 2, np.sin(b) ** 2, np.sin(2 * b) / 2
        if pha is None:
            K = np.ones((self.m, self.n))
            S = np.zeros((self.m, self.n))
        else:
            ang = pha[:, None] + phb[None, :]
            K, S = np.cos(ang), np.sin(ang)
        wW = np.outer(w, W)
        g_theta = (s2t * (cx @ (v - u) + cy @ (V - U))
                   + np.sum(J * (s2t * (np.outer(v, V) - np.outer(u, U)) + 2 * c2t * wW * K)))
        sa2, ca2 = np.sin(2 * a), np.cos(2 * a)
        sb2, cb2 = np.sin(2 * b), np.cos(2 * b)
        d_pxy_a = (-ct2 * np.outer(sa2, U) + st2 * np.outer(sa2, V) + s2t * np.outer(ca2, W) * K)
        d_pxy_b = (-ct2 * np.outer(u, sb2) + st2 * np.outer(v, sb2) + s2t * np.outer(w, cb2) * K)
        g_a = -c2t * sa2 * cx + np.sum(J * d_pxy_a, axis=1)
        g_b = -c2t * sb2 * cy + np.sum(J * d_pxy_b, axis=0)
        parts = [np.array([g_theta]), g_a, g_b]
        if pha is not None:
            d_ph = -s2t * wW * S
            parts += [np.sum(J * d_ph, axis=1), np.sum(J * d_ph, axis=0)]
        return np.concatenate(parts)


def hooke_jeeves(f, x0, step=0.25, min_step=1e-5, max_evals=100_000):
    """Derivative-free ascent: coordinate probes with an adaptive step plus
    pattern moves along the last successful displacement.

    Returns ``(x, fx, evals, converged)``; ``converged`` means the step
    shrank below ``min_step`` before the evaluation budget ran out.
    """
    x = np.array(x0, float)
    fx = f(x)
    evals = 1

    def explore(base, fbase, h):
        nonlocal evals
        y, fy = base.copy(), fbase
        for d in range(len(y)):
            for sign in (1.0, -1.0):
                y[d] += sign * h
                fn = f(y)
                evals += 1
                if fn > fy:
                    fy = fn
                    break
                y[d] -= sign * h
        return y, fy

    h = step
    while h >= min_step:
        if evals >= max_evals:
            return x, fx, evals, False
        y, fy = explore(x, fx, h)
        if fy > fx:
            # keep moving in the improving direction while it pays off
            while evals < max_evals:
                z = y + (y - x)
                x, fx = y, fy
                z, fz = explore(z, f(z), h)
                evals += 1
                if fz > fx:
                    y, fy = z, fz
                else:
                    break
        else:
            h /= 2
    return x, fx, evals, True


def canonical_params(p, m: int, n: int, free_phase: bool):
    """Map a parameter vector to an equivalent one with theta in [0, pi/4]
    and every polar angle in [0, pi).  The statistics are unchanged:

    * theta -> theta + pi flips the global sign of the state;
    * (theta, beta) -> (pi - theta, -beta) is the same model;
    * (theta, alpha, beta, phi) -> (pi/2 - theta, pi/2 - alpha, pi/2 - beta, -phi)
      swaps |0> and |1> on both qubits;
    * alpha -> alpha + pi only flips the sign of the measured vector.
    """
    p = np.array(p, float)
    a = slice(1, 1 + m)
    b = slice(1 + m, 1 + m + n)
    ph = slice(1 + m + n, len(p))
    theta = p[0] % np.pi
    if theta > np.pi / 2:
        theta = np.pi - theta
        p[b] = -p[b]
    if theta > np.pi / 4:
        theta = np.pi / 2 - theta
        p[a] = np.pi / 2 - p[a]
        p[b] = np.pi / 2 - p[b]
        if free_phase:
            p[ph] = -p[ph]
    p[0] = theta
    p[a] %= np.pi
    p[b] %= np.pi
    if free_phase:
        p[ph] %= 2 * np.pi
    return p


@dataclass
class ViolationResult:
    objective: str
    Q: float
    theta_max: float
    params: np.ndarray
    m: int
    n: int
    free_phase: bool
    lambda_max: float | None
    evaluations: int
    converged: bool
    trace: list = field(default_factory=list, repr=False)  # best-so-far Q per restart, to 1e-9

    @property
    def theta_over_pi(self) -> float:
        return self.theta_max / np.pi

    def model(self, noise_lambda: float = 1.0) -> QuantumModel:
        m, n = self.m, self.n
        p = self.params
        phx = p[1 + m + n:1 + 2 * m + n] if self.free_phase else None
        phy = p[1 + 2 * m + n:] if self.free_phase else None
        return QuantumModel.from_angles(p[0], p[1:1 + m], p[1 + m:1 + m + n], phx, phy, noise_lambda)


def _restart(args):
    objective, config, seed_seq = args
    ev = _Evaluator(objective, config.free_phase)
    rng = np.random.default_rng(seed_seq)
    m, n = objective.m, objective.n
    x0 = np.concatenate([[rng.uniform(0, np.pi / 2)], rng.uniform(0, np.pi, m + n)])
    if config.free_phase:
        x0 = np.concatenate([x0, rng.uniform(0, 2 * np.pi, m + n)])
    x, fx, evals, converged = hooke_jeeves(ev, x0, min_step=math.sqrt(config.tolerance),
                                           max_evals=config.max_evals)
    if config.gradient_polish:
        res = minimize(lambda q: tuple(-t for t in ev.value_and_grad(q)), x, jac=True, method="BFGS",
                       options={"gtol": config.tolerance, "maxiter": 1000})
        if -res.fun > fx:
            x, fx = res.x, -res.fun
    x = canonical_params(x, m, n, config.free_phase)
    return ev(x), x, ev.calls, converged


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("BELLFORGE_THREADS", "1")))
    except ValueError:
        return 1


def _better(a, b) -> bool:
    """Is restart ``a`` preferred over ``b``?  Higher Q (to 1e-9), then
    smaller theta, then lexicographically smaller angles."""
    qa, qb = round(a[0], 9), round(b[0], 9)
    if qa != qb:
        return qa > qb
    return tuple(np.round(a[1], 9)) < tuple(np.round(b[1], 9))


def maximize(objective: Objective, config: OptimizerConfig | None = None) -> ViolationResult:
    config = config or OptimizerConfig()
    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)
    jobs = [(objective, config, s) for s in seeds]
    workers = min(_workers(), config.restarts)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_restart, jobs))
    else:
        runs = [_restart(j) for j in jobs]

    best = None
    trace = []
    evaluations = 0
    for run in runs:
        evaluations += run[2]
        if best is None or _better(run, best):
            best = run
        trace.append(round(best[0], 9))
    Q, x, _, converged = best
    result = ViolationResult(objective.name, float(Q), float(x[0]), x, objective.m, objective.n,
                             config.free_phase, None, evaluations, converged, trace)
    if Q > 0:
        result.lambda_max = noise_resistance(objective.branches, result.model())
    return result


def reoptimized_noise_resistance(objective: Objective, config: OptimizerConfig | None = None) -> float:
    """Noise threshold when the measurements may be re-chosen at every noise
    weight.  At full noise every branch value is a constant, so each branch
    can be optimized once; the threshold is the smallest root over violated
    branches."""
    roots = []
    for k, branch in enumerate(objective.branches):
        res = maximize(Objective(f"{objective.name}[{k}]", (branch,)), config)
        if res.Q > 0:
            roots.append(res.lambda_max)
    if not roots:
        raise NoViolationError("no branch is violated")
    return min(roots)


# --- grid oracle -------------------------------------------------------------

def _grid(resolution: float, period: float) -> np.ndarray:
    count = int(math.ceil(period / resolution - 1e-9))
    return np.arange(count) * resolution


def _is_multiple(period: float, resolution: float) -> bool:
    r = period / resolution
    return abs(r - round(r)) < 1e-9


def _theta_grid(resolution: float) -> np.ndarray:
    full = _grid(resolution, np.pi)
    if _is_multiple(np.pi / 2, resolution):
        # the angle grids are closed under alpha -> pi/2 - alpha and -alpha
        return full[full <= np.pi / 4 + 1e-12]
    return full


def grid_cells(objective: Objective, resolution: float) -> int:
    """Number of (theta, enumerated-party angles) cells the oracle visits."""
    small = min(objective.m, objective.n)
    return len(_theta_grid(resolution)) * len(_grid(resolution, np.pi)) ** small


def grid_oracle(objective: Objective, resolution: float, return_params: bool = False, chunk: int = 200_000):
    """Best objective value over the uniform grid with phases at zero.

    Every polar angle runs over ``k * resolution`` in ``[0, pi)`` and the
    state angle over the same grid in ``[0, pi)`` (folded to ``[0, pi/4]``
    when the grid allows it).  The party with fewer settings is enumerated;
    for the other party each setting contributes
    ``M11 cos^2 b + M22 sin^2 b + 2 M12 cos b sin b`` independently, whose
    grid maximum sits at a grid neighbour of its continuous maximizer when
    the grid is periodic (otherwise every grid point is scanned).  The
    result is therefore the exact grid maximum.
    """
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    cells = grid_cells(objective, resolution)
    if cells > GRID_GUARD:
        raise GridGuardError(f"grid needs {cells} cells, above the guard of {GRID_GUARD}")
    swapped = objective.n < objective.m
    branches = [transpose(b) for b in objective.branches] if swapped else list(objective.branches)
    obj = Objective(objective.name, tuple(branches))
    J, CX, CY, C0 = obj.stacked()
    m, n = obj.m, obj.n
    angles = _grid(resolution, np.pi)
    periodic = _is_multiple(np.pi, resolution)

    best_val, best_params = -np.inf, None
    for theta in _theta_grid(resolution):
        ct2, st2 = math.cos(theta) ** 2, math.sin(theta) ** 2
        cst = math.cos(theta) * math.sin(theta)
        total = len(angles) ** m
        for start in range(0, total, chunk):
            idx = np.arange(start, min(total, start + chunk))
            digits = np.stack([(idx // len(angles) ** (m - 1 - i)) % len(angles) for i in range(m)], axis=1)
            a = angles[digits]
            ca2, sa2, csa = np.cos(a) ** 2, np.sin(a) ** 2, np.cos(a) * np.sin(a)
            px = ct2 * ca2 + st2 * sa2
            branch_best = np.full((len(idx), len(branches)), -np.inf)
            for k in range(len(branches)):
                val = px @ CX[k] + C0[k]
                M11 = ct2 * (CY[k][None, :] + ca2 @ J[k])
                M22 = st2 * (CY[k][None, :] + sa2 @ J[k])
                M12 = cst * (csa @ J[k])
                val = val + _bob_max(M11, M22, M12, angles, resolution, periodic).sum(axis=1)
                branch_best[:, k] = val
            vals = branch_best.max(axis=1)
            i = int(np.argmax(vals))
            if vals[i] > best_val + 1e-15:
                best_val = float(vals[i])
                best_params = (theta, a[i].copy())
    if not return_params:
        return best_val
    theta, a = best_params
    betas = _bob_argmax(obj, theta, a, angles)
    p = np.concatenate([[theta], betas, a] if swapped else [[theta], a, betas])
    return best_val, p


def _bob_max(M11, M22, M12, angles, resolution, periodic):
    """Grid maximum of each per-setting contribution, shape (cells, n)."""
    if not periodic:
        cb, sb = np.cos(angles), np.sin(angles)
        f = M11[..., None] * cb ** 2 + M22[..., None] * sb ** 2 + 2 * M12[..., None] * cb * sb
        return f.max(axis=-1)
    # f = mean + R cos(2b - psi); the best grid b is next to psi/2 (mod pi)
    psi = np.arctan2(M12, (M11 - M22) / 2)
    target = (psi / 2) % np.pi
    lo = np.floor(target / resolution)
    best = None
    for cand in (lo, lo + 1):
        b = (cand * resolution) % np.pi
        cb, sb = np.cos(b), np.sin(b)
        f = M11 * cb ** 2 + M22 * sb ** 2 + 2 * M12 * cb * sb
        best = f if best is None else np.maximum(best, f)
    return best


def _bob_argmax(obj: Objective, theta, a, angles):
    J, CX, CY, C0 = obj.stacked()
    best_val, best_b = -np.inf, None
    for k in range(len(obj.branches)):
        betas = []
        val = 0.0
        for j in range(obj.n):
            col = np.zeros(obj.n)
            vals = []
            for b in angles:
                col[:] = 0
                col[j] = b
                px, py, pxy = probabilities_fast(theta, a, col)
                vals.append(CY[k][j] * py[j] + J[k][:, j] @ pxy[:, j])
            jbest = int(np.argmax(vals))
            betas.append(angles[jbest])
            val += vals[jbest]
        if val > best_val:
            best_val, best_b = val, np.array(betas)
    return best_b


def grid_bruteforce(objective: Objective, resolution: float) -> float:
    """Plain enumeration of every grid point; only for tiny grids."""
    ev = _Evaluator(objective, False)
    angles = _grid(resolution, np.pi)
    best = -np.inf
    for theta in _grid(resolution, np.pi):
        for combo in itertools.product(angles, repeat=objective.m + objective.n):
            best = max(best, ev(np.concatenate([[theta], combo])))
    return best


# --- table rows --------------------------------------------------------------

def alternative_objective(expr: BellExpression) -> Objective | None:
    """The alternative inequality reported next to ``expr``: the two-setting
    form for 2x2 entries, the k-setting max-form for kxk entries with k >= 3,
    and nothing otherwise."""
    if expr.m != expr.n:
        return None
    if expr.m == 2:
        return Objective.nch()
    if expr.m >= 3:
        return Objective.maxform(expr.m)
    return None


@dataclass
class TableRow:
    name: str
    main: ViolationResult
    alt: ViolationResult | None = None

    def cells(self, with_alternatives: bool) -> list[str]:
        out = [self.name, *_fmt_result(self.main)]
        if with_alternatives:
            out += _fmt_result(self.alt) if self.alt is not None else ["-", "-", "-"]
        return out


def _fmt_result(r: ViolationResult) -> list[str]:
    lam = "-" if r.lambda_max is None else f"{r.lambda_max:.4f}"
    return [f"{r.Q:.4f}", f"{r.theta_over_pi:.4f}", lam]


TABLE_HEADER = ["Name", "Q", "theta_max/pi", "lambda_max"]
ALT_HEADER = ["Q_a", "theta_a/pi", "lambda_a"]


def table_row(expr: BellExpression, with_alternatives: bool = True, config: OptimizerConfig | None = None,
              name: str = "") -> TableRow:
    main = maximize(Objective.standard(expr, name or "standard"), config)
    alt = None
    if with_alternatives:
        obj = alternative_objective(expr)
        if obj is not None:
            alt = maximize(obj, config)
    return TableRow(name, main, alt)
