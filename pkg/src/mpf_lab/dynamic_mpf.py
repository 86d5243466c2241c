"""Time-dependent mixture coefficients: exact Frobenius projection, the
noisy-overlap surrogate model, the robust (minimax) coefficient tracker, and
its worst-case error recursion.

All overlap data lives in r x r matrices of squared statevector overlaps;
nothing here touches 2^n x 2^n density matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalDegeneracyError, SolverError
from .formulas import ProductFormula, rho_k_state
from .statesim import SpectralOracle, mixture_frobenius_sq, overlap

RIDGE = 1e-12
PINV_RTOL = 1e-12
MINIMAX_TOL = 1e-9


# -- overlap data ------------------------------------------------------------

def trotter_states(pf: ProductFormula, psi_in: np.ndarray, t: float,
                   steps) -> list[np.ndarray]:
    """States S(t/k_i)^{k_i} |psi_in> for each step count."""
    return [rho_k_state(pf, psi_in, t, int(k)) for k in steps]


def gram_from_states(states: list[np.ndarray]) -> np.ndarray:
    r = len(states)
    m = np.empty((r, r))
    for i in range(r):
        m[i, i] = 1.0
        for j in range(i + 1, r):
            m[i, j] = m[j, i] = abs(overlap(states[i], states[j])) ** 2
    return m


def gram_matrix(pf: ProductFormula, psi_in: np.ndarray, t: float, steps) -> np.ndarray:
    """Squared-overlap Gram matrix of the circuit family at time t."""
    return gram_from_states(trotter_states(pf, psi_in, t, steps))


def q_from_states(pf: ProductFormula, states_prev: list[np.ndarray],
                  states_next: list[np.ndarray], dt: float, k0: int) -> np.ndarray:
    """Propagation overlaps: Q[i, s] = |<phi_s | psi_i(t+dt)>|^2 where phi_s
    is the previous-time state pushed forward by k0 steps over dt."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if k0 < 1:
        raise ValueError("k0 must be >= 1")
    pushed = [rho_k_state(pf, s, dt, k0) for s in states_prev]
    r = len(states_next)
    q = np.empty((r, len(pushed)))
    for s, phi in enumerate(pushed):
        for i, psi in enumerate(states_next):
            q[i, s] = abs(overlap(phi, psi)) ** 2
    return q


def q_matrix(pf: ProductFormula, psi_in: np.ndarray, t_j: float, dt: float,
             k0: int, steps) -> np.ndarray:
    """Propagation-overlap matrix between times t_j and t_j + dt."""
    prev = trotter_states(pf, psi_in, t_j, steps)
    nxt = trotter_states(pf, psi_in, t_j + dt, steps)
    return q_from_states(pf, prev, nxt, dt, k0)


def l_exact(pf: ProductFormula, oracle: SpectralOracle, psi_in: np.ndarray,
            t: float, steps) -> np.ndarray:
    """Overlaps of the exact state with each circuit state at time t."""
    exact = oracle.evolve(psi_in, t)
    return np.array([
        abs(overlap(exact, s)) ** 2 for s in trotter_states(pf, psi_in, t, steps)
    ])


def l_from_states(exact_state: np.ndarray, states: list[np.ndarray]) -> np.ndarray:
    return np.array([abs(overlap(exact_state, s)) ** 2 for s in states])


# -- exact Frobenius projection ----------------------------------------------

@dataclass(frozen=True)
class ProjectionResult:
    coefficients: np.ndarray
    error_sq: float
    ridged: bool

    @property
    def error(self) -> float:
        return math.sqrt(max(self.error_sq, 0.0))


def dynamic_project(m: np.ndarray, ell: np.ndarray) -> ProjectionResult:
    """Minimize ``c^T M c - 2 L^T c`` subject to ``sum c = 1``.

    Solves the bordered stationarity system directly; a singular system falls
    back to a ridge-regularized solve and is flagged.
    """
    m = np.asarray(m, dtype=float)
    ell = np.asarray(ell, dtype=float)
    r = ell.size
    if m.shape != (r, r):
        raise ValueError("shape mismatch")
    m = 0.5 * (m + m.T)
    eigs = np.linalg.eigvalsh(m)
    if eigs[0] < -1e-10 * max(1.0, eigs[-1]):
        raise NumericalDegeneracyError(f"Gram matrix eigenvalue {eigs[0]:.3e} < 0")
    kkt = np.zeros((r + 1, r + 1))
    kkt[:r, :r] = 2.0 * m
    kkt[:r, r] = 1.0
    kkt[r, :r] = 1.0
    rhs = np.concatenate([2.0 * ell, [1.0]])
    ridged = False
    try:
        sol = np.linalg.solve(kkt, rhs)
        bad = not np.all(np.isfinite(sol)) or (
            np.linalg.norm(kkt @ sol - rhs) > 1e-6 * max(1.0, np.linalg.norm(rhs))
        )
    except np.linalg.LinAlgError:
        bad = True
    if bad:
        kkt[:r, :r] = 2.0 * (m + RIDGE * np.eye(r))
        sol = np.linalg.solve(kkt, rhs)
        ridged = True
    c = sol[:r]
    return ProjectionResult(
        coefficients=c,
        error_sq=mixture_frobenius_sq(m, c, ell),
        ridged=ridged,
    )


# -- noisy surrogates ----------------------------------------------------------

@dataclass(frozen=True)
class NoisyOverlaps:
    m_bar: np.ndarray
    a_bar: np.ndarray
    m_deviation: float
    a_deviation: float


def inject_noise(m: np.ndarray, q: np.ndarray, eps: float, seed) -> NoisyOverlaps:
    """Gaussian surrogate data: perturbations rescaled to spectral norm <= eps,
    entries clamped nonnegative, the Gram surrogate re-symmetrized with unit
    diagonal.  Clamping can push the final deviation slightly above eps, so
    the realized spectral deviations are reported.
    """
    if eps < 0:
        raise ValueError("noise magnitude must be >= 0")
    m = np.asarray(m, dtype=float)
    q = np.asarray(q, dtype=float)
    if eps == 0.0:
        return NoisyOverlaps(m.copy(), q.copy(), 0.0, 0.0)
    rng = np.random.default_rng(seed)

    def draw(shape):
        e = rng.standard_normal(shape)
        norm = np.linalg.norm(e, 2)
        if norm > eps:
            e *= eps / norm
        return e

    m_bar = np.clip(m + draw(m.shape), 0.0, None)
    m_bar = 0.5 * (m_bar + m_bar.T)
    np.fill_diagonal(m_bar, 1.0)
    a_bar = np.clip(q + draw(q.shape), 0.0, None)
    return NoisyOverlaps(
        m_bar=m_bar,
        a_bar=a_bar,
        m_deviation=float(np.linalg.norm(m_bar - m, 2)),
        a_deviation=float(np.linalg.norm(a_bar - q, 2)),
    )


# -- robust coefficient step ---------------------------------------------------

def _ones_complement_basis(r: int) -> np.ndarray:
    """Orthonormal basis of the zero-sum subspace (columns)."""
    q, _ = np.linalg.qr(np.ones((r, 1)), mode="complete")
    return q[:, 1:]


def _smoothed_newton(a: np.ndarray, b: np.ndarray, eps: float,
                     z0: np.ndarray, basis: np.ndarray, x0: np.ndarray):
    """Minimize sqrt(|Ax-b|^2 + d^2) + eps sqrt(|x|^2 + d^2) over the affine
    slice x = x0 + N z by damped Newton with a shrinking smoothing d."""
    z = z0.copy()
    scale = max(1.0, float(np.linalg.norm(b)))
    deltas = [scale * 10.0**-k for k in range(1, 14)]
    an = a @ basis
    for delta in deltas:
        for _ in range(80):
            x = x0 + basis @ z
            res = a @ x - b
            s1 = math.sqrt(float(res @ res) + delta * delta)
            s2 = math.sqrt(float(x @ x) + delta * delta)
            gx = (a.T @ res) / s1 + eps * x / s2
            grad = basis.T @ gx
            h1 = (an.T @ an) / s1 - np.outer(an.T @ res, an.T @ res) / s1**3
            xb = basis.T @ x
            h2 = (basis.T @ basis) / s2 - np.outer(xb, xb) / s2**3
            hess = h1 + eps * h2
            gnorm = float(np.linalg.norm(grad))
            if gnorm <= 1e-14 * max(1.0, scale):
                break
            try:
                step = np.linalg.solve(hess + 1e-14 * np.eye(hess.shape[0]), -grad)
            except np.linalg.LinAlgError:
                step = -grad
            f0 = s1 + eps * s2

            def fval(zz):
                xx = x0 + basis @ zz
                rr = a @ xx - b
                return (math.sqrt(float(rr @ rr) + delta * delta)
                        + eps * math.sqrt(float(xx @ xx) + delta * delta))

            alpha = 1.0
            for _ in range(60):
                if fval(z + alpha * step) <= f0 - 1e-4 * alpha * gnorm * min(1.0, gnorm):
                    break
                alpha *= 0.5
            new = z + alpha * step
            if np.linalg.norm(new - z) <= 1e-16 * max(1.0, np.linalg.norm(z)):
                z = new
                break
            z = new
    return z


def _kkt_polish(a: np.ndarray, b: np.ndarray, eps: float, z: np.ndarray,
                basis: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """Drive the reduced first-order residual of the unsmoothed objective to
    machine precision.  The dual-gap certificate consumes exactly this
    residual, so shrinking it (rather than the objective) sharpens the
    certificate even in flat valleys."""
    def residual_and_jac(zz):
        x = x0 + basis @ zz
        res = a @ x - b
        rn = float(np.linalg.norm(res))
        xn = float(np.linalg.norm(x))
        if rn == 0.0 or xn == 0.0:
            return None, None
        gx = (a.T @ res) / rn + eps * x / xn
        rho = basis.T @ gx
        an = a @ basis
        h1 = (an.T @ an) / rn - np.outer(an.T @ res, an.T @ res) / rn**3
        xb = basis.T @ x
        h2 = (np.eye(zz.size)) / xn - np.outer(xb, xb) / xn**3
        return rho, h1 + eps * h2

    for _ in range(60):
        rho, jac = residual_and_jac(z)
        if rho is None:
            return z
        rn = float(np.linalg.norm(rho))
        if rn <= 1e-15 * max(1.0, float(np.linalg.norm(a))):
            return z
        lam = 1e-14
        step = None
        for _ in range(12):
            try:
                step = np.linalg.solve(jac + lam * np.eye(jac.shape[0]), -rho)
                break
            except np.linalg.LinAlgError:
                lam *= 100.0
        if step is None:
            return z
        best_z, best_rn = z, rn
        alpha = 1.0
        for _ in range(40):
            cand = z + alpha * step
            rho_c, _ = residual_and_jac(cand)
            if rho_c is not None and np.linalg.norm(rho_c) < best_rn:
                best_z, best_rn = cand, float(np.linalg.norm(rho_c))
                break
            alpha *= 0.5
        if best_rn >= rn * (1.0 - 1e-12):
            return best_z
        z = best_z
    return z


def _dual_gap(a: np.ndarray, b: np.ndarray, eps: float, x: np.ndarray) -> float:
    """Certified objective gap at x from a feasible point of the Fenchel dual
    ``max -u.b + nu  s.t.  A^T u + v = nu 1, |u| <= 1, |v| <= eps``.

    The dual point is built from the residual direction u = res/|res| scaled
    by theta in [0, 1]; for each theta the best offset nu solves a 1-D
    quadratic, and theta itself has a closed-form optimum.
    """
    res = a @ x - b
    rn = float(np.linalg.norm(res))
    xn = float(np.linalg.norm(x))
    primal = rn + eps * xn
    r = x.size
    u = res / rn if rn > 0 else np.zeros_like(res)
    w = a.T @ u
    m1 = float(w.mean())
    d2 = float(np.sum((w - m1) ** 2))
    a0 = m1 - float(u @ b)

    def dual_at(theta: float) -> float:
        room = eps * eps - theta * theta * d2
        if room < 0:
            return -math.inf
        return theta * a0 + math.sqrt(room / r)

    cands = [0.0]
    cap = 1.0 if d2 == 0.0 else min(1.0, eps / math.sqrt(d2))
    cands.append(cap)
    if d2 > 0.0 and a0 > 0.0:
        theta_star = a0 * eps * math.sqrt(r) / math.sqrt(d2 * (d2 + a0 * a0 * r))
        cands.append(min(theta_star, cap))
    dual = max(dual_at(th) for th in cands)
    return primal - dual


def minimax_step(m_bar: np.ndarray, a_bar: np.ndarray, c_prev: np.ndarray,
                 eps: float, tol: float = MINIMAX_TOL) -> np.ndarray:
    """One robust tracking step: minimize ``|M x - A c_prev| + eps |x|`` over
    the simplex-sum slice ``sum x = 1``.

    For eps = 0 this is the sum-constrained least-squares solution.  For
    eps > 0 a smoothed Newton continuation solves the problem and a dual
    feasible point certifies the objective gap; failure to certify ``tol``
    raises :class:`SolverError` carrying the best iterate.
    """
    m_bar = np.asarray(m_bar, dtype=float)
    a_bar = np.asarray(a_bar, dtype=float)
    c_prev = np.asarray(c_prev, dtype=float)
    r = c_prev.size
    if m_bar.shape != (r, r) or a_bar.shape != (r, r):
        raise ValueError("shape mismatch")
    b = a_bar @ c_prev
    if eps == 0.0:
        return dynamic_project(m_bar.T @ m_bar, m_bar.T @ b).coefficients
    # The objective is positively homogeneous in (M, b, eps), so normalize to
    # unit data scale; the certified gap transfers as tol * scale.
    scale = max(1.0, float(np.linalg.norm(b)))
    m_s, b_s, e_s = m_bar / scale, b / scale, eps / scale
    x0 = np.full(r, 1.0 / r)
    basis = _ones_complement_basis(r)
    z = np.zeros(r - 1)
    # Warm start from the least-squares solution when it is well behaved.
    try:
        ls = dynamic_project(m_s.T @ m_s + RIDGE * np.eye(r), m_s.T @ b_s)
        z = basis.T @ (ls.coefficients - x0)
    except (NumericalDegeneracyError, np.linalg.LinAlgError):
        pass
    z = _smoothed_newton(m_s, b_s, e_s, z, basis, x0)
    z = _kkt_polish(m_s, b_s, e_s, z, basis, x0)
    x = x0 + basis @ z
    gap = _dual_gap(m_s, b_s, e_s, x)
    if not math.isfinite(gap) or gap > tol:
        # Perturbation polish: deterministic coordinate refinement.
        for h in (1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10):
            improved = True
            while improved:
                improved = False
                for i in range(r - 1):
                    for sgn in (1.0, -1.0):
                        cand = z.copy()
                        cand[i] += sgn * h
                        xc = x0 + basis @ cand
                        if (np.linalg.norm(m_s @ xc - b_s) + e_s * np.linalg.norm(xc)
                                < np.linalg.norm(m_s @ x - b_s) + e_s * np.linalg.norm(x) - 1e-16):
                            z, x, improved = cand, xc, True
            gap = _dual_gap(m_s, b_s, e_s, x)
            if gap <= tol:
                break
    if not math.isfinite(gap) or gap > tol:
        raise SolverError(
            f"robust step failed to certify gap {tol:g} at unit data scale "
            f"(achieved {gap:.3e}, data scale {scale:.3e})",
            best=x, gap=gap,
        )
    return x


# -- full tracking run ---------------------------------------------------------

@dataclass
class MinimaxRun:
    """Trajectory record of a robust tracking run.

    Per grid point: coefficient estimate, Frobenius error against exact
    overlap data, the exact projection coefficients and error (diagnostics),
    coefficient 1-norms, solver objective values, and the surrogate matrices
    needed by the worst-case error recursion.
    """

    times: np.ndarray
    c_hat: np.ndarray
    c_star: np.ndarray
    error_hat: np.ndarray
    error_star: np.ndarray
    kappa_hat: np.ndarray
    objective: np.ndarray
    m_bars: list = field(default_factory=list)
    a_bars: list = field(default_factory=list)
    m_exact: list = field(default_factory=list)
    l_exact: list = field(default_factory=list)


def minimax_run(pf: ProductFormula, oracle: SpectralOracle, psi_in: np.ndarray,
                steps, t0: float, t_final: float, dt: float, eps: float,
                k0: int, c0, seed: int) -> MinimaxRun:
    """Track robust mixture coefficients on the uniform grid t_0 + j dt.

    Surrogate data are generated per step from the exact overlaps with
    seeded, spectral-norm-bounded Gaussian noise; the estimate is advanced by
    :func:`minimax_step`.  Exact-data projections are recorded alongside for
    diagnostics.
    """
    if not t0 < t_final:
        raise ValueError("need t0 < t_final")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    n_steps = round((t_final - t0) / dt)
    if abs(n_steps * dt - (t_final - t0)) > 1e-9 * max(1.0, abs(t_final)):
        raise ValueError("dt must divide t_final - t0 within rounding")
    steps = [int(k) for k in steps]
    c0 = np.asarray(c0, dtype=float)
    if abs(c0.sum() - 1.0) > 1e-9:
        raise ValueError("initial coefficients must sum to 1")
    times = t0 + dt * np.arange(n_steps + 1)
    r = len(steps)
    c_hat = np.empty((n_steps + 1, r))
    c_star = np.empty((n_steps + 1, r))
    err_hat = np.empty(n_steps + 1)
    err_star = np.empty(n_steps + 1)
    objective = np.zeros(n_steps + 1)
    run = MinimaxRun(
        times=times, c_hat=c_hat, c_star=c_star, error_hat=err_hat,
        error_star=err_star, kappa_hat=np.empty(n_steps + 1),
        objective=objective,
    )

    states = trotter_states(pf, psi_in, t0, steps)
    m_prev = gram_from_states(states)
    noisy = inject_noise(m_prev, np.zeros((r, r)), eps, np.random.SeedSequence(seed, spawn_key=(0,)))
    run.m_bars.append(noisy.m_bar)
    run.a_bars.append(None)
    ell = l_from_states(oracle.evolve(psi_in, t0), states)
    run.m_exact.append(m_prev)
    run.l_exact.append(ell)
    c_hat[0] = c0
    proj = dynamic_project(m_prev, ell)
    c_star[0] = proj.coefficients
    err_star[0] = proj.error
    err_hat[0] = math.sqrt(max(mixture_frobenius_sq(m_prev, c0, ell), 0.0))

    for j in range(1, n_steps + 1):
        t = times[j]
        states_next = trotter_states(pf, psi_in, t, steps)
        m_now = gram_from_states(states_next)
        q_now = q_from_states(pf, states, states_next, dt, k0)
        noisy = inject_noise(m_now, q_now, eps, np.random.SeedSequence(seed, spawn_key=(j,)))
        run.m_bars.append(noisy.m_bar)
        run.a_bars.append(noisy.a_bar)
        c_hat[j] = minimax_step(noisy.m_bar, noisy.a_bar, c_hat[j - 1], eps)
        objective[j] = float(
            np.linalg.norm(noisy.m_bar @ c_hat[j] - noisy.a_bar @ c_hat[j - 1])
            + eps * np.linalg.norm(c_hat[j])
        )
        ell = l_from_states(oracle.evolve(psi_in, t), states_next)
        run.m_exact.append(m_now)
        run.l_exact.append(ell)
        proj = dynamic_project(m_now, ell)
        c_star[j] = proj.coefficients
        err_star[j] = proj.error
        err_hat[j] = math.sqrt(max(mixture_frobenius_sq(m_now, c_hat[j], ell), 0.0))
        states = states_next
    run.kappa_hat[:] = np.abs(c_hat).sum(axis=1)
    return run


# -- worst-case error recursion -------------------------------------------------

def _pinv(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (mat + mat.T))
    cutoff = PINV_RTOL * max(abs(vals[0]), abs(vals[-1]), 1e-300)
    inv = np.where(np.abs(vals) > cutoff, 1.0 / np.where(vals == 0, 1.0, vals), 0.0)
    return (vecs * inv) @ vecs.T


@dataclass(frozen=True)
class TrackingBoundStep:
    """Worst-case coefficient-error data for one horizon step."""

    index: int
    radius_sq: float
    component_bounds: np.ndarray
    misfit_offset: float
    p_min_eig: float


def tracking_error_bound(m_bars: list, a_bars: list, eps: float,
                         c_hat: np.ndarray, c_star_norms, gamma_values,
                         c_star0) -> list[TrackingBoundStep]:
    """Per-step worst-case bounds on the tracked-coefficient error.

    For each horizon j the Schur-complement chain P_0..P_j is recomputed from
    scratch: the middle noise weights (2 eps^2) and the final weight (eps^2)
    depend on which step is last.  The transition matrix pairing step s-1 to
    s appears both inside the inverted block and in the sandwich, so all
    three recursions share one (P + T^T T)^+ kernel.

    ``c_star_norms`` are the 2-norms of the exact projection coefficients
    (desk runs compute them from exact data; deployments pass a ceiling);
    ``gamma_values[s]`` is the one-step drift budget at grid time s.
    """
    n_pts = len(m_bars)
    if len(a_bars) != n_pts or c_hat.shape[0] != n_pts:
        raise ValueError("sequence lengths disagree")
    r = m_bars[0].shape[0]
    ones = np.ones(r)
    c_star_norms = np.asarray(c_star_norms, dtype=float)
    gamma_values = np.asarray(gamma_values, dtype=float)
    c_star0 = np.asarray(c_star0, dtype=float)
    out: list[TrackingBoundStep] = []
    sqrt_r = math.sqrt(r)
    for horizon in range(n_pts):
        p_mat = m_bars[0].T @ m_bars[0] + np.outer(ones, ones) + eps * eps * np.eye(r)
        r_vec = ones + c_star0
        alpha = 1.0 + float(c_star0 @ c_star0)
        for s in range(1, horizon + 1):
            q_s = 2.0 if s < horizon else 1.0
            trans = a_bars[s]
            m_s = m_bars[s]
            core = _pinv(p_mat + trans.T @ trans)
            alpha = alpha + 1.0 - float(r_vec @ core @ r_vec)
            r_new = m_s.T @ trans @ core @ r_vec + ones
            p_mat = (
                np.outer(ones, ones) + q_s * eps * eps * np.eye(r)
                + m_s.T @ m_s - m_s.T @ trans @ core @ trans.T @ m_s
            )
            r_vec = r_new
        eigs = np.linalg.eigvalsh(0.5 * (p_mat + p_mat.T))
        if eigs[0] < -1e-10 * max(1.0, eigs[-1]):
            raise NumericalDegeneracyError(
                f"bound recursion lost positive definiteness at step {horizon}"
            )
        psi = 2.0 * eps * c_star_norms[horizon]
        if horizon >= 1:
            psi += 4.0 * eps * float(c_star_norms[1:horizon].sum())
        drift = sqrt_r * float(gamma_values[:horizon].sum())
        c_j = c_hat[horizon]
        radius_sq = (drift + psi) ** 2 - alpha + float(c_j @ p_mat @ c_j)
        radius_sq = max(radius_sq, 0.0)
        p_plus = _pinv(p_mat)
        comp = 2.0 * math.sqrt(radius_sq) * np.sqrt(np.clip(np.diag(p_plus), 0.0, None))
        out.append(TrackingBoundStep(
            index=horizon, radius_sq=radius_sq, component_bounds=comp,
            misfit_offset=alpha, p_min_eig=float(eigs[0]),
        ))
    return out
