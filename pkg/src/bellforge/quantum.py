"""Two-qubit quantum models: cos(t)|00> + sin(t)|11> mixed with white noise,
measured with rank-1 projectors on each side.

:func:`probabilities` takes traces against an explicit 4x4 density matrix.
:func:`probabilities_fast` is the expanded closed form used in the
optimizer's inner loop; the two are cross-checked in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expr import BellExpression, ExpressionError, Form, Party, builtin, gen_ikk, split_branches, to_probability_form


class NoViolationError(ValueError):
    """The model does not violate the inequality, so there is no noise threshold."""


@dataclass(frozen=True)
class Projector:
    """Projector onto cos(alpha)|0> + e^{i phi} sin(alpha)|1>."""

    alpha: float
    phi: float = 0.0

    @property
    def vector(self) -> np.ndarray:
        return np.array([np.cos(self.alpha), np.exp(1j * self.phi) * np.sin(self.alpha)])

    @property
    def matrix(self) -> np.ndarray:
        v = self.vector
        return np.outer(v, v.conj())

    def complement(self) -> "Projector":
        """The orthogonal projector (alpha + pi/2, same phase)."""
        return Projector(self.alpha + np.pi / 2, self.phi)


@dataclass(frozen=True)
class QuantumModel:
    theta: float
    proj_x: tuple
    proj_y: tuple
    noise_lambda: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "proj_x", tuple(self.proj_x))
        object.__setattr__(self, "proj_y", tuple(self.proj_y))
        if not self.proj_x or not self.proj_y:
            raise ExpressionError("each party needs at least one projector")
        if not 0.0 <= self.noise_lambda <= 1.0:
            raise ExpressionError(f"noise_lambda must lie in [0, 1], got {self.noise_lambda}")

    @classmethod
    def from_angles(cls, theta, alphas, betas, phis_x=None, phis_y=None, noise_lambda=1.0):
        phis_x = np.zeros(len(alphas)) if phis_x is None else phis_x
        phis_y = np.zeros(len(betas)) if phis_y is None else phis_y
        return cls(float(theta),
                   tuple(Projector(float(a), float(p)) for a, p in zip(alphas, phis_x)),
                   tuple(Projector(float(b), float(p)) for b, p in zip(betas, phis_y)),
                   float(noise_lambda))

    @property
    def m(self) -> int:
        return len(self.proj_x)

    @property
    def n(self) -> int:
        return len(self.proj_y)

    def with_noise(self, lam: float) -> "QuantumModel":
        return QuantumModel(self.theta, self.proj_x, self.proj_y, lam)

    def state_vector(self) -> np.ndarray:
        # basis order |00>, |01>, |10>, |11>
        return np.array([np.cos(self.theta), 0, 0, np.sin(self.theta)], dtype=complex)

    def density_matrix(self) -> np.ndarray:
        psi = self.state_vector()
        lam = self.noise_lambda
        return lam * np.outer(psi, psi.conj()) + (1 - lam) * np.eye(4) / 4


@dataclass(frozen=True)
class ProbabilityTable:
    px: np.ndarray
    py: np.ndarray
    pxy: np.ndarray = field(repr=False)

    def check(self, tol: float = 1e-12) -> None:
        """Raise if any entry leaves [0, 1] or a joint exceeds a marginal."""
        for name, arr in (("px", self.px), ("py", self.py), ("pxy", self.pxy)):
            if np.any(arr < -tol) or np.any(arr > 1 + tol):
                raise ValueError(f"{name} has entries outside [0, 1]")
        cap = np.minimum(self.px[:, None], self.py[None, :])
        if np.any(self.pxy > cap + tol):
            raise ValueError("a joint probability exceeds one of its marginals")


def probabilities(model: QuantumModel) -> ProbabilityTable:
    """Marginals and joints as traces against the density matrix."""
    # Tr(rho (X kron Y)) = sum rho[a,b,c,d] X[c,a] Y[d,b], batched over settings
    rho = model.density_matrix().reshape(2, 2, 2, 2)
    X = np.stack([p.matrix for p in model.proj_x])
    Y = np.stack([p.matrix for p in model.proj_y])
    eye = np.eye(2)
    px = np.einsum("abcd,ica,db->i", rho, X, eye).real
    py = np.einsum("abcd,ca,jdb->j", rho, eye, Y).real
    pxy = np.einsum("abcd,ica,jdb->ij", rho, X, Y).real
    return ProbabilityTable(px, py, pxy)


def probabilities_fast(theta, alphas, betas, phis_x=None, phis_y=None, lam=1.0):
    """Closed-form ``(px, py, pxy)`` for the model family.

    The overlap of |a>|b> with the state is
    ``c ca cb + s sa sb exp(-i(phi_a + phi_b))``.
    """
    alphas = np.asarray(alphas, float)
    betas = np.asarray(betas, float)
    ct2, st2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    cst = np.cos(theta) * np.sin(theta)
    ca, sa = np.cos(alphas), np.sin(alphas)
    cb, sb = np.cos(betas), np.sin(betas)
    px = ct2 * ca ** 2 + st2 * sa ** 2
    py = ct2 * cb ** 2 + st2 * sb ** 2
    cross = np.outer(ca * sa, cb * sb)
    if phis_x is not None or phis_y is not None:
        phx = np.zeros_like(alphas) if phis_x is None else np.asarray(phis_x, float)
        phy = np.zeros_like(betas) if phis_y is None else np.asarray(phis_y, float)
        cross = cross * np.cos(phx[:, None] + phy[None, :])
    pxy = ct2 * np.outer(ca ** 2, cb ** 2) + st2 * np.outer(sa ** 2, sb ** 2) + 2 * cst * cross
    if lam != 1.0:
        px = lam * px + (1 - lam) / 2
        py = lam * py + (1 - lam) / 2
        pxy = lam * pxy + (1 - lam) / 4
    return px, py, pxy


def table_value(expr: BellExpression, px, py, pxy) -> float:
    joint, cx, cy, c0 = expr.arrays
    return float(cx @ px + cy @ py + np.sum(joint * pxy) + c0)


def _check_shape(expr: BellExpression, model: QuantumModel):
    if expr.form_tag is not Form.PROBABILITY:
        raise ExpressionError("quantum evaluation needs probability form")
    if expr.shape != (model.m, model.n):
        raise ExpressionError(f"expression is {expr.m}x{expr.n} but the model has {model.m}x{model.n} settings")


def quantum_value(expr: BellExpression, model: QuantumModel) -> float:
    _check_shape(expr, model)
    t = probabilities(model)
    return table_value(expr, t.px, t.py, t.pxy)


def alt_value_nch(model: QuantumModel) -> float:
    """CH value plus (E + |E|)/2; non-positive for every local model."""
    if (model.m, model.n) != (2, 2):
        raise ExpressionError("the two-setting alternative needs a 2x2 model")
    t = probabilities(model)
    ch = table_value(builtin("CH_PROB"), t.px, t.py, t.pxy)
    e = t.pxy[0, 0] - t.pxy[0, 1] - t.pxy[1, 0] + t.pxy[1, 1]
    return ch + 0.5 * (e + abs(e))


def nch_branches() -> tuple[BellExpression, BellExpression]:
    """The two-setting alternative as a max of two linear forms:
    CH itself and CH + E = 2 P(x1,y1) - P(x1) - P(y1)."""
    ch = builtin("CH_PROB")
    plus_e = BellExpression.from_coeffs([[2, 0], [0, 0]], [-1, 0], [-1, 0], 0, Form.PROBABILITY)
    return ch, plus_e


def max_form_branches(k: int) -> tuple[BellExpression, BellExpression]:
    """Probability-form branches of the k-setting alternative.

    Branch one is the (k-1)-setting family member on rows
    ``x1, x3, ..., xk`` plus ``sum_i [P(x2, y_i) - P(x2)]``; branch two uses
    rows ``x2, ..., xk`` plus the same sum for ``x1``.  Both have k rows and
    k columns, with the last column unused.
    """
    if k < 2:
        raise ExpressionError("k must be at least 2")
    base = gen_ikk(k - 1) if k > 2 else None
    out = []
    for dropped in (1, 0):
        rows = [r for r in range(k) if r != dropped]
        joint = [[0] * k for _ in range(k)]
        marg_x = [0] * k
        marg_y = [0] * k
        if base is None:
            # I_11 is x1 y1 - A y1 (nothing on x)
            joint[rows[0]][0] = 1
            marg_y[0] = -1
        else:
            for a, r in enumerate(rows):
                marg_x[r] = base.marg_x[a]
                for j in range(k - 1):
                    joint[r][j] = base.joint[a][j]
            marg_y[: k - 1] = base.marg_y
        for j in range(k - 1):
            joint[dropped][j] += 1
        marg_x[dropped] -= k - 1
        out.append(BellExpression.from_coeffs(joint, marg_x, marg_y, 0, Form.PROBABILITY))
    return tuple(out)


def max_form_branches_by_split(k: int) -> tuple[BellExpression, BellExpression]:
    """Same branches obtained by fixing y_k to its bound and to zero in I_kk."""
    hi, lo = split_branches(gen_ikk(k), Party.Y, k - 1)
    return to_probability_form(hi), to_probability_form(lo)


def alt_value_max_form(k: int, model: QuantumModel) -> float:
    if model.m < k or model.n < k:
        raise ExpressionError(f"need at least {k} settings per party, model has {model.m}x{model.n}")
    t = probabilities(model)
    return max(table_value(b, t.px[:k], t.py[:k], t.pxy[:k, :k]) for b in max_form_branches(k))


def noise_resistance(branches, model: QuantumModel) -> float:
    """Critical white-noise weight for fixed measurements.

    ``branches`` is one probability-form expression or a sequence whose
    maximum is the objective.  Each branch is affine in the noise weight,
    so the threshold is the smallest root ``-v0 / (v1 - v0)`` among the
    branches violated by the pure state.
    """
    if isinstance(branches, BellExpression):
        branches = (branches,)
    if model.noise_lambda != 1.0:
        raise ValueError("noise_resistance expects the pure-state model (noise_lambda = 1)")
    pure = model
    mixed = model.with_noise(0.0)
    roots = []
    for b in branches:
        v1 = quantum_value(b, pure)
        v0 = quantum_value(b, mixed)
        if v1 <= 0:
            continue
        if v1 == v0:
            raise NoViolationError("value does not depend on the noise weight; no threshold exists")
        roots.append(-v0 / (v1 - v0))
    if not roots:
        raise NoViolationError("the model does not violate the inequality; optimize the measurements first")
    return min(max(r, 0.0) for r in roots)


def random_model(m: int, n: int, rng: np.random.Generator, free_phase: bool = True) -> QuantumModel:
    theta = rng.uniform(0, np.pi / 2)
    phx = rng.uniform(0, 2 * np.pi, m) if free_phase else None
    phy = rng.uniform(0, 2 * np.pi, n) if free_phase else None
    return QuantumModel.from_angles(theta, rng.uniform(0, np.pi, m), rng.uniform(0, np.pi, n),
                                    phx, phy, rng.uniform(0, 1))

