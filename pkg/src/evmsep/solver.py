"""Feasibility decisions for small dense linear matrix inequalities.

The question "does some x make F(x) = F0 + sum_k x_k Fk positive
semidefinite" is answered by following the central path of the equivalent
concave program

    maximize t   subject to   F(x) - t*I >= 0,

with a log-det barrier on the slack S = F(x) - t*I and damped Newton steps in
the (x, t) variables.  Along the path the scaled barrier gradient
Z = mu * S^{-1} is a dual iterate: at a centered point it has unit trace and
(numerically) vanishing pairings <Z, Fk>, and <Z, F0> is an upper bound on
the optimal t.  That gives both exits for free:

* feasible side: the current x is a witness once min_eig(F(x)) clears the
  tolerance -- it is re-checked by an eigensolve before returning;
* infeasible side: Z is a Farkas-type certificate (Z >= 0, <Z, Fk> ~ 0,
  <Z, F0> < 0) proving no x can work.  The solver verifies the certificate
  itself before claiming infeasibility, so that verdict never rests on
  solver internals.

Near the decision threshold neither exit triggers and the verdict is
Inconclusive, which downstream consumers treat as "not proven entangled".
The whole solve is deterministic: no randomness, no wall-clock dependence.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from .evm import LmiSystem
from .linalg import jacobi_eigh, min_eig

__all__ = [
    "SolverOptions",
    "VerdictKind",
    "DualCertificate",
    "Verdict",
    "CertificateCheck",
    "solve_feasibility",
    "verify_certificate",
    "brute_force_probe",
]


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and budgets for :func:`solve_feasibility`.

    ``tol_feas``: slack on min_eig(F(x)) for accepting a feasible witness.
    ``tol_cert``: slack on the three certificate conditions.
    ``max_iters``: cap on total Newton steps; hitting it yields Inconclusive.
    ``margin_target``: half-width of the Inconclusive band around zero.
    """

    tol_feas: float = 1e-7
    tol_cert: float = 1e-7
    max_iters: int = 5000
    margin_target: float = 1e-6

    def __post_init__(self):
        for name in ("tol_feas", "tol_cert", "margin_target"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iters <= 0:
            raise ValueError("max_iters must be positive")


class VerdictKind(str, Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    INCONCLUSIVE = "inconclusive"


class CertificateCheck(NamedTuple):
    """The three numbers a certificate is judged by."""

    min_eig: float
    max_pairing: float
    objective: float


@dataclass(frozen=True, eq=False)
class DualCertificate:
    """Trace-one PSD matrix Z proving F(x) >= 0 has no solution.

    Soundness is weak duality: for any x,
    <Z, F(x)> = <Z, F0> + sum_k x_k <Z, Fk> ~ <Z, F0> < 0,
    while F(x) >= 0 would force <Z, F(x)> >= 0.
    """

    z: np.ndarray
    check: CertificateCheck


@dataclass(frozen=True, eq=False)
class Verdict:
    kind: VerdictKind
    x: Optional[np.ndarray] = None
    margin: Optional[float] = None
    certificate: Optional[DualCertificate] = None
    gap: Optional[float] = None
    iterations: int = 0


def verify_certificate(lmi: LmiSystem, z, tol: float = 1e-7):
    """Check a dual certificate against the three defining conditions.

    Returns ``(ok, CertificateCheck)`` where ok requires
    ``min_eig(z) >= -tol``, ``|<z, fk>| <= tol`` for every k, and
    ``<z, f0> < -tol``.  The arithmetic here is directly auditable; nothing
    from the solve is trusted.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != lmi.f0.shape:
        raise ValueError(f"certificate shape {z.shape!r} does not match LMI dim {lmi.dim}")
    scale = max(1.0, float(np.max(np.abs(z))))
    if not np.allclose(z, z.T, rtol=0.0, atol=1e-9 * scale):
        raise ValueError("certificate must be symmetric")
    zmin = min_eig(z)
    pairings = [abs(float(np.sum(z * fk))) for fk in lmi.fs]
    max_pairing = max(pairings) if pairings else 0.0
    objective = float(np.sum(z * lmi.f0))
    ok = (zmin >= -tol) and (max_pairing <= tol) and (objective < -tol)
    return ok, CertificateCheck(min_eig=zmin, max_pairing=max_pairing, objective=objective)


def _gershgorin_lower(a: np.ndarray) -> float:
    radii = np.sum(np.abs(a), axis=1) - np.abs(np.diag(a))
    return float(np.min(np.diag(a) - radii))


def _chol_logdet(s: np.ndarray):
    """Cholesky factor and log-determinant, or (None, None) if not PD."""
    try:
        L = np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        return None, None
    return L, 2.0 * float(np.sum(np.log(np.diag(L))))


def _certificate_from_eigvec(lmi: LmiSystem, opts: SolverOptions):
    """Rank-one certificate for the parameter-free pencil."""
    w, v = jacobi_eigh(lmi.f0)
    z = np.outer(v[:, 0], v[:, 0])
    ok, check = verify_certificate(lmi, z, opts.tol_cert)
    if ok and check.objective <= -opts.margin_target:
        return DualCertificate(z=z, check=check)
    return None


def _cluster_certificate(lmi: LmiSystem, x: np.ndarray, opts: SolverOptions):
    """Certificate from the bottom eigenvalue cluster of F(x).

    At an optimal x the supergradients of min_eig span a matrix with zero
    pairings; a small least-squares solve over the cluster recovers it.
    Used as a fallback when the central-path certificate fails to verify.
    """
    f = lmi.evaluate(x)
    w, v = jacobi_eigh(f)
    scale = max(1.0, float(np.linalg.norm(f)))
    cluster = np.nonzero(w <= w[0] + 1e-7 * scale)[0]
    q = v[:, cluster]
    r = q.shape[1]
    # Z = q M q^T with M symmetric PSD, trace 1; solve for M minimizing the
    # pairings, then project onto the PSD cone and renormalize.
    pair_maps = [q.T @ fk @ q for fk in lmi.fs]
    rows = [m.reshape(-1) for m in pair_maps]
    rows.append(np.eye(r).reshape(-1))
    a = np.stack(rows)
    b = np.zeros(len(rows))
    b[-1] = 1.0
    m_vec, *_ = np.linalg.lstsq(a, b, rcond=None)
    m = m_vec.reshape(r, r)
    m = (m + m.T) / 2.0
    wm, vm = jacobi_eigh(m)
    wm = np.clip(wm, 0.0, None)
    if wm.sum() <= 0:
        return None
    m = (vm * wm) @ vm.T
    m /= np.trace(m)
    z = q @ m @ q.T
    z = (z + z.T) / 2.0
    ok, check = verify_certificate(lmi, z, opts.tol_cert)
    if ok and check.objective <= -opts.margin_target:
        return DualCertificate(z=z, check=check)
    return None


def _polyak_polish(lmi: LmiSystem, x: np.ndarray, goal: float, max_steps: int = 60):
    """Subgradient ascent on min_eig(F(x)) with Polyak steps toward ``goal``.

    The central path approaches a degenerate optimum (feasible set with empty
    interior) only like sqrt(mu), which is too slow to clear the feasibility
    tolerance; from the near-optimal barrier iterate, Polyak steps aimed just
    below the optimum reach the superlevel set in finitely many steps
    whenever the true optimum lies above ``goal``.  Returns the best iterate
    seen (value never gets worse).
    """
    f_arr = np.stack(lmi.fs) if lmi.dim_x else None
    cur = np.array(x)
    w, v = jacobi_eigh(lmi.evaluate(cur))
    best_x, best_val = cur.copy(), float(w[0])
    since_improve = 0
    for _ in range(max_steps):
        if best_val >= goal or f_arr is None:
            break
        vec = v[:, 0]
        g = np.array([float(vec @ fk @ vec) for fk in lmi.fs])
        gn2 = float(g @ g)
        if gn2 < 1e-30:
            break
        cur = cur + ((goal - float(w[0])) / gn2) * g
        w, v = jacobi_eigh(lmi.evaluate(cur))
        if float(w[0]) > best_val:
            best_val = float(w[0])
            best_x = cur.copy()
            since_improve = 0
        else:
            since_improve += 1
            if since_improve >= 12:
                break
    return best_x, best_val


def solve_feasibility(lmi: LmiSystem, opts: Optional[SolverOptions] = None) -> Verdict:
    """Decide whether any x makes F(x) positive semidefinite.

    Feasible verdicts carry the witness x and its eigenvalue margin;
    infeasible verdicts carry a verified dual certificate; anything the
    tolerances cannot separate from the boundary is Inconclusive (including
    runs that exhaust ``max_iters``).  Identical inputs and options always
    produce identical verdicts.
    """
    if not isinstance(lmi, LmiSystem):
        raise ValueError("solve_feasibility expects an LmiSystem")
    opts = opts or SolverOptions()
    m = lmi.dim
    n = lmi.dim_x

    if n == 0:
        val = min_eig(lmi.f0)
        if val >= -opts.tol_feas:
            return Verdict(kind=VerdictKind.FEASIBLE, x=np.zeros(0), margin=val)
        if val <= -opts.margin_target:
            cert = _certificate_from_eigvec(lmi, opts)
            if cert is not None:
                return Verdict(kind=VerdictKind.INFEASIBLE, certificate=cert)
        return Verdict(kind=VerdictKind.INCONCLUSIVE, gap=abs(val))

    f_arr = np.stack(lmi.fs)
    eye = np.eye(m)
    gens = list(lmi.fs) + [-eye]

    def slack(x, t):
        return lmi.f0 + np.tensordot(x, f_arr, axes=1) - t * eye

    # Strictly feasible start: Gershgorin bounds min_eig(F0) from below.
    x = np.zeros(n)
    t = _gershgorin_lower(lmi.f0) - max(1.0, 0.1 * float(np.linalg.norm(lmi.f0)))
    s = slack(x, t)
    L, logdet = _chol_logdet(s)
    assert L is not None
    s_inv = np.linalg.inv(s)
    s_inv = (s_inv + s_inv.T) / 2.0
    mu = 1.0 / max(float(np.trace(s_inv)), 1e-300)

    mu_min = opts.margin_target * 1e-3 / m
    pairing_target = 0.1 * opts.tol_cert
    newton_steps = 0
    cert_failures = 0
    frozen = 0
    t_prev = None
    t_cap = 1e12 * max(1.0, float(np.linalg.norm(lmi.f0)))

    def gradient(s_inv, mu):
        g = np.empty(n + 1)
        for k in range(n):
            g[k] = mu * float(np.sum(s_inv * lmi.fs[k]))
        g[n] = 1.0 - mu * float(np.trace(s_inv))
        return g

    def center(x, t, s, s_inv, logdet, mu, dec_tol, grad_tol, step_cap, t_exit=None):
        """Damped Newton on t + mu*logdet(S); returns the centered iterate.

        Stops early once t clears ``t_exit`` (a feasibility exit is then due)
        or, in polish mode, once the gradient components that double as
        certificate pairings drop below ``grad_tol``.
        """
        nonlocal newton_steps
        stalled = False
        for _ in range(step_cap):
            if newton_steps >= opts.max_iters:
                stalled = True
                break
            if t_exit is not None and t >= t_exit:
                break
            g = gradient(s_inv, mu)
            if grad_tol is not None and float(np.max(np.abs(g[:n]))) <= grad_tol \
                    and abs(g[n]) <= max(grad_tol, 1e-10):
                break
            ws = [s_inv @ gk for gk in gens]
            h = np.empty((n + 1, n + 1))
            for i in range(n + 1):
                for j in range(i, n + 1):
                    h[i, j] = h[j, i] = -mu * float(np.sum(ws[i] * ws[j].T))
            try:
                d = np.linalg.solve(h, -g)
            except np.linalg.LinAlgError:
                d, *_ = np.linalg.lstsq(h, -g, rcond=None)
            slope = float(g @ d)
            if not np.isfinite(slope) or slope < 0:
                stalled = True
                break
            dec = np.sqrt(max(slope, 0.0))
            if dec <= max(dec_tol, 1e-14):
                break
            phi = t + mu * logdet
            alpha = 1.0
            accepted = False
            while alpha > 1e-14:
                xn = x + alpha * d[:n]
                tn = t + alpha * d[n]
                sn = slack(xn, tn)
                Ln, logdet_n = _chol_logdet(sn)
                if Ln is not None:
                    phi_n = tn + mu * logdet_n
                    if phi_n >= phi + 0.25 * alpha * slope:
                        x, t, s, logdet = xn, tn, sn, logdet_n
                        s_inv = np.linalg.inv(s)
                        s_inv = (s_inv + s_inv.T) / 2.0
                        accepted = True
                        break
                alpha *= 0.5
            newton_steps += 1
            if not accepted:
                stalled = True
                break
        return x, t, s, s_inv, logdet, stalled

    for _ in range(256):
        x, t, s, s_inv, logdet, stalled = center(
            x, t, s, s_inv, logdet, mu, dec_tol=0.25, grad_tol=None, step_cap=40,
            t_exit=opts.margin_target)

        if t >= opts.margin_target or t >= t_cap:
            margin = min_eig(lmi.evaluate(x))
            return Verdict(kind=VerdictKind.FEASIBLE, x=x, margin=margin,
                           iterations=newton_steps)
        if t >= -0.5 * opts.tol_feas:
            margin = min_eig(lmi.evaluate(x))
            if margin >= -opts.tol_feas:
                return Verdict(kind=VerdictKind.FEASIBLE, x=x, margin=margin,
                               iterations=newton_steps)

        if t + m * mu <= -opts.margin_target and cert_failures < 4:
            # Polish the centering so the certificate pairings, which equal
            # the gradient components, sit well under the verification slack.
            x, t, s, s_inv, logdet, _ = center(
                x, t, s, s_inv, logdet, mu, dec_tol=0.0,
                grad_tol=pairing_target, step_cap=30)
            z = mu * s_inv
            tr = float(np.trace(z))
            if tr > 0:
                z = z / tr
                ok, check = verify_certificate(lmi, z, opts.tol_cert)
                if ok and check.objective <= -opts.margin_target:
                    return Verdict(kind=VerdictKind.INFEASIBLE,
                                   certificate=DualCertificate(z=z, check=check),
                                   iterations=newton_steps)
            cert_failures += 1

        if stalled or mu <= mu_min or newton_steps >= opts.max_iters:
            break
        if t == t_prev:
            frozen += 1
            if frozen >= 2:
                break
        else:
            frozen = 0
        t_prev = t
        mu *= 0.2

    # Endgame: the path stopped moving.  Classify from the final iterate,
    # rescuing boundary-feasible problems with a direct eigenvalue climb.
    margin = min_eig(lmi.evaluate(x))
    if -100.0 * opts.margin_target <= margin < -opts.tol_feas:
        x, margin = _polyak_polish(lmi, x, goal=-0.25 * opts.tol_feas)
    if margin >= -opts.tol_feas:
        return Verdict(kind=VerdictKind.FEASIBLE, x=x, margin=margin,
                       iterations=newton_steps)
    if margin <= -opts.margin_target:
        cert = _cluster_certificate(lmi, x, opts)
        if cert is not None:
            return Verdict(kind=VerdictKind.INFEASIBLE, certificate=cert,
                           iterations=newton_steps)
    return Verdict(kind=VerdictKind.INCONCLUSIVE, gap=abs(margin),
                   iterations=newton_steps)


def brute_force_probe(lmi: LmiSystem, box_halfwidth: float,
                      grid_points_per_axis: int, seed: int = 0,
                      batch: int = 4096):
    """Grid (or seeded random) search for the best min_eig(F(x)) in a box.

    Exhaustive over ``[-h, h]^n`` when n <= 7; larger systems fall back to
    100k uniform samples from a fixed-seed generator.  Entirely independent
    of the path-following solver (it rests on numpy's eigensolver), so a
    nonnegative best value is a standalone feasibility proof while a
    negative one is merely evidence.  Returns ``(x_best, value_best)``.
    """
    n = lmi.dim_x
    if n == 0:
        return np.zeros(0), float(np.linalg.eigvalsh(lmi.f0)[0])
    if grid_points_per_axis < 1:
        raise ValueError("grid_points_per_axis must be >= 1")
    f_arr = np.stack(lmi.fs)
    best_val = -np.inf
    best_x = np.zeros(n)

    def consider(xs: np.ndarray):
        nonlocal best_val, best_x
        fvals = lmi.f0[None, :, :] + np.tensordot(xs, f_arr, axes=([1], [0]))
        vals = np.linalg.eigvalsh(fvals)[:, 0]
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val = float(vals[i])
            best_x = xs[i].copy()

    if n <= 7:
        axes = np.linspace(-box_halfwidth, box_halfwidth, grid_points_per_axis)
        total = grid_points_per_axis ** n
        shape = (grid_points_per_axis,) * n
        for start in range(0, total, batch):
            idx = np.arange(start, min(start + batch, total))
            coords = np.stack(np.unravel_index(idx, shape), axis=-1)
            consider(axes[coords])
    else:
        rng = np.random.default_rng(seed)
        remaining = 100_000
        while remaining > 0:
            take = min(batch, remaining)
            consider(rng.uniform(-box_halfwidth, box_halfwidth, size=(take, n)))
            remaining -= take
    return best_x, best_val
