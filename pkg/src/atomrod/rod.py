"""Framed curves, their bending-torsion energy, and a clamped minimiser.

A framed curve is a uniformly sampled centreline with a proper rotation per
node whose first column is the unit tangent.  Per segment the skew parameters
come from the principal matrix logarithm of the relative rotation; the limit
energy integrates the relaxed stiffness form with the midpoint rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .discrete_ops import SkewParam
from .errors import NumericalError, ValidationError
from .relax_ultrathin import RelaxedForm

_E1 = np.array([1.0, 0.0, 0.0])

# (kappa2, kappa3, tau) = _PERM @ rotation-vector of log(R_i^T R_{i+1})
_PERM = np.array([[0.0, 0.0, 1.0], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0]])


def hat(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float).reshape(3)
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def vee(a: np.ndarray) -> np.ndarray:
    return np.array([a[2, 1], a[0, 2], a[1, 0]])


def _batched_hat(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    out = np.zeros(w.shape[:-1] + (3, 3))
    out[..., 0, 1] = -w[..., 2]
    out[..., 0, 2] = w[..., 1]
    out[..., 1, 0] = w[..., 2]
    out[..., 1, 2] = -w[..., 0]
    out[..., 2, 0] = -w[..., 1]
    out[..., 2, 1] = w[..., 0]
    return out


def so3_exp(w: np.ndarray) -> np.ndarray:
    """Rodrigues exponential, vectorised over leading axes."""
    w = np.asarray(w, dtype=float)
    single = w.ndim == 1
    w2 = np.atleast_2d(w)
    th = np.linalg.norm(w2, axis=-1)
    small = th < 1e-8
    a = np.where(small, 1.0 - th**2 / 6.0, np.sin(np.where(small, 1.0, th)) / np.where(small, 1.0, th))
    b = np.where(small, 0.5 - th**2 / 24.0, (1.0 - np.cos(np.where(small, 1.0, th))) / np.where(small, 1.0, th) ** 2)
    k = _batched_hat(w2)
    out = np.eye(3) + a[..., None, None] * k + b[..., None, None] * (k @ k)
    return out[0] if single else out.reshape(w.shape[:-1] + (3, 3))


def so3_log(r: np.ndarray) -> np.ndarray:
    """Principal logarithm as rotation vectors; rejects angles near pi."""
    r = np.asarray(r, dtype=float)
    single = r.ndim == 2
    rr = r.reshape(-1, 3, 3)
    tr = np.trace(rr, axis1=-2, axis2=-1)
    th = np.arccos(np.clip(0.5 * (tr - 1.0), -1.0, 1.0))
    if np.any(th > np.pi - 1e-6):
        raise NumericalError("rotation angle too close to pi for a stable logarithm")
    v = 0.5 * np.stack(
        [rr[:, 2, 1] - rr[:, 1, 2], rr[:, 0, 2] - rr[:, 2, 0], rr[:, 1, 0] - rr[:, 0, 1]],
        axis=-1,
    )
    small = th < 1e-8
    fac = np.where(small, 1.0 + th**2 / 6.0, th / np.sin(np.where(small, 1.0, th)))
    out = v * fac[:, None]
    return out[0] if single else out.reshape(r.shape[:-2] + (3,))


def right_jacobian_inverse(w: np.ndarray) -> np.ndarray:
    """Inverse right Jacobian of the exponential map on SO(3)."""
    w = np.asarray(w, dtype=float).reshape(3)
    th = float(np.linalg.norm(w))
    k = hat(w)
    if th < 1e-6:
        coef = 1.0 / 12.0 + th * th / 720.0
    else:
        coef = 1.0 / th**2 - (1.0 + np.cos(th)) / (2.0 * th * np.sin(th))
    return np.eye(3) + 0.5 * k + coef * k @ k


def _jri_t_apply(v: np.ndarray, x: np.ndarray, sign: float) -> np.ndarray:
    """Batched (Jr^-1(sign * v))^T @ x = x - sign/2 v x x + c(v) v x (v x x)."""
    th = np.linalg.norm(v, axis=-1)
    small = th < 1e-6
    safe = np.where(small, 1.0, th)
    coef = np.where(
        small,
        1.0 / 12.0 + th**2 / 720.0,
        1.0 / safe**2 - (1.0 + np.cos(safe)) / (2.0 * safe * np.sin(safe)),
    )
    vx = np.cross(v, x)
    return x - 0.5 * sign * vx + coef[..., None] * np.cross(v, vx)


def _jr_t_apply(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Batched Jr(w)^T @ x."""
    th = np.linalg.norm(w, axis=-1)
    small = th < 1e-6
    safe = np.where(small, 1.0, th)
    b = np.where(small, 0.5 - th**2 / 24.0, (1.0 - np.cos(safe)) / safe**2)
    c = np.where(small, 1.0 / 6.0 - th**2 / 120.0, (safe - np.sin(safe)) / safe**3)
    wx = np.cross(w, x)
    return x + b[..., None] * wx + c[..., None] * np.cross(w, wx)


@dataclass(frozen=True, eq=False)
class FramedCurve:
    """Uniform samples of (position, frame) on [0, L]."""

    x: np.ndarray  # (n+1,) grid
    y: np.ndarray  # (n+1, 3) positions
    frames: np.ndarray  # (n+1, 3, 3) rotations, first column = tangent

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        fr = np.asarray(self.frames, dtype=float)
        if len(x) < 2 or y.shape != (len(x), 3) or fr.shape != (len(x), 3, 3):
            raise ValidationError("inconsistent framed-curve arrays")
        steps = np.diff(x)
        if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps[0]:
            raise ValidationError("grid must be uniform and increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "frames", fr)

    @property
    def n_segments(self) -> int:
        return len(self.x) - 1

    @property
    def step(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def length(self) -> float:
        return float(self.x[-1] - self.x[0])

    def validate(self, ortho_tol: float = 1e-10, stretch_tol: float = 0.5) -> None:
        fr = self.frames
        gram = np.einsum("nij,nik->njk", fr, fr)
        if np.max(np.abs(gram - np.eye(3))) > ortho_tol:
            raise ValidationError("frames are not orthonormal")
        if np.any(np.linalg.det(fr) < 0):
            raise ValidationError("frames must be proper rotations")
        d = np.linalg.norm(np.diff(self.y, axis=0), axis=1)
        if np.max(np.abs(d / self.step - 1.0)) > stretch_tol:
            raise ValidationError("centreline violates inextensibility beyond tolerance")


def curvature_torsion(curve: FramedCurve, segment: int) -> SkewParam:
    """Curvatures and torsion of one segment from the frame logarithm."""
    if not 0 <= segment < curve.n_segments:
        raise ValidationError(f"segment {segment} out of range")
    rel = curve.frames[segment].T @ curve.frames[segment + 1]
    w = so3_log(rel) / curve.step
    return SkewParam.from_vector(_PERM @ w)


def segment_params(curve: FramedCurve) -> np.ndarray:
    """(n, 3) array of per-segment (kappa2, kappa3, tau)."""
    rel = np.einsum("nji,njk->nik", curve.frames[:-1], curve.frames[1:])
    w = so3_log(rel) / curve.step
    return w @ _PERM.T


def limit_energy(curve: FramedCurve, form: RelaxedForm, validate: bool = True) -> float:
    """Midpoint-rule energy (1/2) * sum_i a_i^T M a_i * step."""
    if validate:
        curve.validate()
    a = segment_params(curve)
    return 0.5 * curve.step * float(np.einsum("ni,ij,nj->", a, form.matrix, a))


@dataclass(frozen=True)
class RodBoundary:
    """Clamped positions and frames at both rod ends."""

    y0: np.ndarray
    frame0: np.ndarray
    y1: np.ndarray
    frame1: np.ndarray


def _positions_from_frames(y0: np.ndarray, frames: np.ndarray, step: float) -> np.ndarray:
    tang = frames[:, :, 0]
    y = np.empty((len(frames), 3))
    y[0] = y0
    y[1:] = y0 + np.cumsum(0.5 * step * (tang[:-1] + tang[1:]), axis=0)
    return y


def minimize_rod(
    form: RelaxedForm,
    length: float,
    boundary: RodBoundary,
    n: int,
    init: FramedCurve | None = None,
    grad_tol: float = 1e-7,
    max_iter: int = 5000,
    position_weight: float | None = None,
    outer_iter: int = 4,
    return_info: bool = False,
):
    """Clamped local minimiser of the limit energy.

    Interior frames are optimised on exponential charts (L-BFGS with the
    analytic Riemannian gradient, recentred between rounds); positions are
    reconstructed by integrating tangents from the left end, and the
    right-end position constraint enters through an augmented Lagrangian.
    Raises NumericalError when the gradient norm does not reach ``grad_tol``
    within the iteration budget.
    """
    if n < 2:
        raise ValidationError("need at least 2 segments")
    step = length / n
    r0 = np.asarray(boundary.frame0, dtype=float)
    r1 = np.asarray(boundary.frame1, dtype=float)
    y0 = np.asarray(boundary.y0, dtype=float)
    y1 = np.asarray(boundary.y1, dtype=float)

    if init is not None:
        if len(init.frames) != n + 1:
            raise ValidationError("init curve has the wrong number of nodes")
        frames = init.frames.copy()
    else:
        w = so3_log(r0.T @ r1)
        frames = np.einsum("ij,njk->nik", r0, so3_exp(np.linspace(0.0, 1.0, n + 1)[:, None] * w))
    frames[0], frames[n] = r0, r1

    m = _PERM @ form.matrix @ _PERM  # stiffness acting on raw rotation vectors
    scale = max(1.0, float(np.max(np.abs(m))))
    mu = position_weight if position_weight is not None else 10.0 * scale / length**3
    lam = np.zeros(3)
    trace: list[float] = []

    def objective_grad(frames):
        rel = np.einsum("nji,njk->nik", frames[:-1], frames[1:])
        v = so3_log(rel)  # (n, 3)
        energy = float(np.einsum("ni,ij,nj->", v, m, v)) / (2.0 * step)
        yend = y0 + 0.5 * step * np.sum(frames[:-1, :, 0] + frames[1:, :, 0], axis=0)
        c = yend - y1
        f = energy + float(lam @ c) + 0.5 * mu * float(c @ c)
        mv = v @ m / step  # (n, 3)
        grad = np.zeros((n + 1, 3))
        grad[1:] += _jri_t_apply(v, mv, +1.0)
        grad[:-1] -= _jri_t_apply(v, mv, -1.0)
        force = lam + mu * c
        grad[1:-1] += step * np.cross(_E1, np.einsum("nji,j->ni", frames[1:-1], force))
        grad[0] = grad[n] = 0.0
        return f, grad, c

    converged = False
    gnorm = np.inf
    for _outer in range(outer_iter):
        for _round in range(6):
            base = frames.copy()

            def fun(wflat):
                w = wflat.reshape(n - 1, 3)
                cur = base.copy()
                cur[1:n] = base[1:n] @ so3_exp(w)
                f, grad, _ = objective_grad(cur)
                gw = _jr_t_apply(w, grad[1:n])
                return f, gw.ravel()

            res = _scipy_minimize(
                fun,
                np.zeros(3 * (n - 1)),
                jac=True,
                method="L-BFGS-B",
                options={"maxiter": max_iter, "ftol": 1e-18, "gtol": 0.1 * grad_tol},
            )
            w = res.x.reshape(n - 1, 3)
            frames[1:n] = base[1:n] @ so3_exp(w)
            f, grad, c = objective_grad(frames)
            trace.append(f)
            gnorm = float(np.max(np.linalg.norm(grad, axis=1)))
            if gnorm < grad_tol:
                converged = True
                break
        if not converged:
            raise NumericalError(
                f"rod minimiser did not converge: gradient norm {gnorm:.3e}, "
                f"closure residual {np.linalg.norm(c):.3e}"
            )
        if np.linalg.norm(c) < 1e-10 * max(length, 1.0):
            break
        lam = lam + mu * c
        converged = False
    else:
        _, _, c = objective_grad(frames)
        if np.linalg.norm(c) > 1e-6 * max(length, 1.0):
            raise NumericalError(
                f"rod minimiser: closure residual {np.linalg.norm(c):.3e} after "
                f"{outer_iter} multiplier updates"
            )

    y = _positions_from_frames(y0, frames, step)
    curve = FramedCurve(x=np.linspace(0.0, length, n + 1), y=y, frames=frames)
    if return_info:
        info = {
            "trace": trace,
            "grad_norm": gnorm,
            "closure_residual": float(np.linalg.norm(c)),
        }
        return curve, info
    return curve
