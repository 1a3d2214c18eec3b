"""Randomized property suites behind ``bellforge check``.

Each suite returns a :class:`SuiteReport`; a trial passes when every
property checked in it holds at the stated tolerance.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .expr import builtin, to_probability_form
from .lhv import ch_zero_lhv, jensen_bound, known_valid, lhv_value, sample_lhv
from .quantum import Projector, QuantumModel, probabilities, probabilities_fast, quantum_value, random_model

TOL = 1e-12
SUITES = ("REARRANGE", "LHV_CHAIN", "QUANTUM_SANITY")


@dataclass
class SuiteReport:
    suite: str
    trials: int
    failed: int = 0
    failures: Counter = field(default_factory=Counter)

    @property
    def passed(self) -> int:
        return self.trials - self.failed

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def summary(self) -> str:
        line = f"{self.suite}: {self.passed} passed, {self.failed} failed"
        if self.failures:
            line += " (" + ", ".join(f"{k}: {v}" for k, v in sorted(self.failures.items())) + ")"
        return line


def run_suite(name: str, trials: int, seed: int) -> SuiteReport:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    key = name.upper()
    if key == "REARRANGE":
        return rearrange_suite(trials, seed)
    if key == "LHV_CHAIN":
        return lhv_chain_suite(trials, seed)
    if key == "QUANTUM_SANITY":
        return quantum_sanity_suite(trials, seed)
    raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")


def _tally(report: SuiteReport, bad: dict[str, np.ndarray]) -> SuiteReport:
    any_bad = np.zeros(report.trials, bool)
    for prop, mask in bad.items():
        count = int(np.count_nonzero(mask))
        if count:
            report.failures[prop] += count
        any_bad |= mask
    report.failed = int(np.count_nonzero(any_bad))
    return report


# --- rearrangement chains ----------------------------------------------------

def _box_points(rng, trials, size):
    A = rng.uniform(0.1, 3.0, trials)
    B = rng.uniform(0.1, 3.0, trials)
    u = rng.uniform(0, 1, (trials, size))
    v = rng.uniform(0, 1, (trials, size))
    # a quarter of the points sit on a coarse lattice so that ties and box
    # faces are exercised
    lattice = rng.random(trials) < 0.25
    u[lattice] = np.round(u[lattice] * 2) / 2
    v[lattice] = np.round(v[lattice] * 2) / 2
    return u * A[:, None], v * B[:, None], A, B


def eval_batch(expr, xs, ys, A, B):
    """Algebraic form at many points at once."""
    joint, cx, cy, c0 = expr.arrays
    return B * (xs @ cx) + A * (ys @ cy) + np.einsum("ti,ij,tj->t", xs, joint, ys) + c0 * A * B


def i2_zero_batch(xs, ys):
    hi_x, lo_x = xs.max(axis=1), xs.min(axis=1)
    hi_y, lo_y = ys.max(axis=1), ys.min(axis=1)
    return hi_x * lo_y + lo_x * hi_y - np.sum(xs * ys, axis=1)


def i2_zero_closed_batch(xs, ys):
    d = (xs[:, 0] - xs[:, 1]) * (ys[:, 0] - ys[:, 1])
    return -0.5 * (d + np.abs(d))


def i3_zero_batch(xs, ys):
    sx, sy = np.sort(xs, axis=1), np.sort(ys, axis=1)
    return sx[:, 2] * sy[:, 0] + sx[:, 0] * sy[:, 2] + sx[:, 1] * sy[:, 1] - np.sum(xs * ys, axis=1)


def rearrange_suite(trials: int, seed: int) -> SuiteReport:
    rng = np.random.default_rng(seed)
    report = SuiteReport("REARRANGE", trials)
    xs, ys, A, B = _box_points(rng, trials, 2)
    i2 = eval_batch(builtin("I2222"), xs, ys, A, B)
    z2 = i2_zero_batch(xs, ys)
    bad = {
        "K2 I <= I0": i2 > z2 + TOL,
        "K2 I0 <= 0": z2 > TOL,
        "K2 closed form": np.abs(z2 - i2_zero_closed_batch(xs, ys)) > TOL,
    }
    xs, ys, A, B = _box_points(rng, trials, 3)
    i3 = eval_batch(builtin("I3322_SYM"), xs, ys, A, B)
    z3 = i3_zero_batch(xs, ys)
    bad["K3 I <= I0"] = i3 > z3 + TOL
    bad["K3 I0 <= 0"] = z3 > TOL
    return _tally(report, bad)


# --- LHV / Jensen chain ------------------------------------------------------

def lhv_chain_suite(trials: int, seed: int) -> SuiteReport:
    rng = np.random.default_rng(seed)
    report = SuiteReport("LHV_CHAIN", trials)
    ch = builtin("CH_PROB")
    valid = [to_probability_form(e) for e in known_valid().values()]
    bad = {k: np.zeros(trials, bool) for k in
           ("CH <= CH0", "CH0 <= Jensen", "Jensen <= 0", "valid <= 0")}
    for t in range(trials):
        L = int(rng.integers(1, 9))
        model = sample_lhv(2, 2, L, int(rng.integers(2 ** 63)))
        value = lhv_value(ch, model)
        zero = ch_zero_lhv(model)
        bound = jensen_bound(model.table()[2])
        bad["CH <= CH0"][t] = value > zero + TOL
        bad["CH0 <= Jensen"][t] = zero > bound + TOL
        bad["Jensen <= 0"][t] = bound > TOL
        expr = valid[t % len(valid)]
        other = sample_lhv(expr.m, expr.n, L, int(rng.integers(2 ** 63)))
        bad["valid <= 0"][t] = lhv_value(expr, other) > TOL
    return _tally(report, bad)


# --- quantum sanity ----------------------------------------------------------

def _projector_ok(p: Projector) -> bool:
    P = p.matrix
    return (np.allclose(P @ P, P, atol=TOL, rtol=0) and np.allclose(P, P.conj().T, atol=TOL, rtol=0)
            and abs(np.trace(P) - 1) < TOL)


def quantum_sanity_suite(trials: int, seed: int) -> SuiteReport:
    rng = np.random.default_rng(seed)
    report = SuiteReport("QUANTUM_SANITY", trials)
    valid = [to_probability_form(e) for e in known_valid().values()]
    names = ("projector algebra", "density matrix", "marginal consistency", "monotonicity",
             "noise affinity", "closed form", "separable <= 0")
    bad = {k: np.zeros(trials, bool) for k in names}
    for t in range(trials):
        expr = valid[t % len(valid)]
        model = random_model(expr.m, expr.n, rng)
        projs = model.proj_x + model.proj_y
        bad["projector algebra"][t] = not all(_projector_ok(p) for p in projs)

        rho = model.density_matrix()
        eig = np.linalg.eigvalsh(rho)
        bad["density matrix"][t] = eig.min() < -TOL or abs(np.trace(rho) - 1) > TOL

        table = probabilities(model)
        comp_y = QuantumModel(model.theta, model.proj_x, tuple(p.complement() for p in model.proj_y),
                              model.noise_lambda)
        comp_x = QuantumModel(model.theta, tuple(p.complement() for p in model.proj_x), model.proj_y,
                              model.noise_lambda)
        ty, tx = probabilities(comp_y), probabilities(comp_x)
        bad["marginal consistency"][t] = (
            np.abs(table.pxy + ty.pxy - table.px[:, None]).max() > TOL
            or np.abs(table.pxy + tx.pxy - table.py[None, :]).max() > TOL)
        try:
            table.check(TOL)
        except ValueError:
            bad["monotonicity"][t] = True

        v1 = quantum_value(expr, model.with_noise(1.0))
        v0 = quantum_value(expr, model.with_noise(0.0))
        for lam in rng.uniform(0, 1, 10):
            if abs(quantum_value(expr, model.with_noise(lam)) - (lam * v1 + (1 - lam) * v0)) > TOL:
                bad["noise affinity"][t] = True

        fast = probabilities_fast(model.theta, [p.alpha for p in model.proj_x], [p.alpha for p in model.proj_y],
                                  [p.phi for p in model.proj_x], [p.phi for p in model.proj_y],
                                  model.noise_lambda)
        bad["closed form"][t] = any(np.abs(f - d).max() > TOL
                                    for f, d in zip(fast, (table.px, table.py, table.pxy)))

        sep = QuantumModel(float(rng.choice([0.0, np.pi / 2])), model.proj_x, model.proj_y,
                           model.noise_lambda)
        bad["separable <= 0"][t] = quantum_value(expr, sep) > 1e-9
    return _tally(report, bad)
