"""Transmit beam optimization: minimize the position error bound over
per-subcarrier 2x2 beam covariances under a total power budget.

The feasible set is a product of PSD cones (one block per subcarrier)
intersected with a trace ball; the objective tr((K J_e K^T)^{-1}) is convex
in the blocks. A projected gradient method with Armijo backtracking drives
it: the Euclidean projection onto the feasible set is a per-block eigenvalue
clamp plus one joint water-filling shift across all eigenvalues.

The hot loop never rebuilds steering vectors or the 5x5 information matrix;
everything reduces to eight scalar aggregates of the block entries, in which
the effective 3x3 information is explicit and the position information is a
closed-form 2x2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleScenario, InvalidAlpha, SingularEFIM
from .fisher import (
    BeamCovariance,
    COND_LIMIT,
    Scenario,
    _manifolds,
    check_beam_covariance,
)
from .geometry import derive_geometry


@dataclass(frozen=True)
class OptOptions:
    """Projected-gradient settings.

    step_init = 0 means automatic: power_budget / ||G0||_F. Steps are capped
    at step_cap_factor times that natural scale; far beyond it the projected
    point saturates while the water-filling shift loses precision, which can
    leak power past the budget. Convergence is declared on either of two
    certificates: grad_tol bounds the relative stationarity residual
    ||B - proj(B - s G)|| / (s ||G||) at probe step s = budget / ||G||, and
    gap_tol bounds (f - f_min) / f through the linearized-objective gap
    <G, B> - budget * min(0, lambda_min(G)), valid because the objective is
    convex over the feasible set. psd_tol lifts the projection's eigenvalue
    floor; rank_tol is the relative eigenvalue cutoff for rank reporting.
    """

    max_iters: int = 5000
    step_init: float = 0.0
    step_cap_factor: float = 1e3
    armijo_shrink: float = 0.5
    armijo_decrease: float = 1e-4
    grad_tol: float = 1e-7
    gap_tol: float = 1e-8
    psd_tol: float = 0.0
    rank_tol: float = 1e-4


@dataclass(eq=False)
class OptResult:
    """Optimizer output.

    speb_trace holds the objective after the initial point and every accepted
    step; it is non-increasing by construction. kkt_residual is the final
    relative projected-gradient norm (see OptOptions.grad_tol) and
    optimality_gap_rel the final relative linearized-objective gap, an upper
    bound on (f - f_min) / f. power_share_toward_target is
    sum_p b_{p,11} / budget, the fraction of the budget spent on the steering
    (as opposed to derivative) direction.
    """

    beam: BeamCovariance
    speb: float
    peb: float
    speb_trace: np.ndarray
    iterations: int
    converged: bool
    kkt_residual: float
    optimality_gap_rel: float
    grad_norm: float
    rank_profile: tuple[int, ...]
    power_share_toward_target: float


# -----------------------------------------------------------------------------
# fast objective/gradient kernel


@dataclass(eq=False)
class _Kernel:
    """Scenario constants folded for repeated objective/gradient evaluation."""

    omegas: np.ndarray  # (P,)
    nda_t: np.ndarray  # (P,) transmit derivative norms
    nda_r: np.ndarray  # (P,) receive derivative norms
    c1: float  # kappa |g|^2 n_rx n_tx
    c2: float  # kappa |g|^2 n_rx sqrt(n_tx)
    c3: float  # kappa |g|^2 n_rx
    c4: float  # kappa |g|^2 n_tx
    jac: np.ndarray  # (2,3) position Jacobian
    budget: float
    block_dim: int

    @staticmethod
    def build(scenario: Scenario) -> "_Kernel":
        geom = derive_geometry(scenario.p_t, scenario.p_r, scenario.p_s)
        tx, rx = _manifolds(scenario, geom)
        kappa = 2.0 / scenario.noise_power
        mag2 = abs(scenario.gain) ** 2
        return _Kernel(
            omegas=np.array(scenario.subcarrier_offsets, dtype=float),
            nda_t=np.array([sp.norm_a_dot for sp in tx]),
            nda_r=np.array([sp.norm_a_dot for sp in rx]),
            c1=kappa * mag2 * scenario.n_rx * scenario.n_tx,
            c2=kappa * mag2 * scenario.n_rx * np.sqrt(scenario.n_tx),
            c3=kappa * mag2 * scenario.n_rx,
            c4=kappa * mag2 * scenario.n_tx,
            jac=geom.jacobian,
            budget=scenario.power_budget,
            block_dim=scenario.block_dim,
        )

    def _aggregates(self, blocks: np.ndarray):
        b11 = blocks[:, 0, 0].real
        if self.block_dim == 2:
            b22 = blocks[:, 1, 1].real
            b21 = blocks[:, 1, 0]
        else:
            b22 = np.zeros_like(b11)
            b21 = np.zeros_like(b11, dtype=complex)
        return (
            float(b11.sum()),  # s0
            float((self.omegas * b11).sum()),  # s1
            float((self.omegas**2 * b11).sum()),  # s2
            float((self.nda_r**2 * b11).sum()),  # s3
            float((self.nda_t**2 * b22).sum()),  # t0
            float((self.nda_t * b21.real).sum()),  # d_re
            float((self.nda_t * b21.imag).sum()),  # d_im
            float((self.omegas * self.nda_t * b21.imag).sum()),  # cw
        )

    def _efim(self, s0, s1, s2, s3, t0, d_re, d_im, cw) -> np.ndarray:
        E = np.zeros((3, 3))
        if s0 > 0.0:
            E[0, 0] = self.c1 * (s2 - s1 * s1 / s0)
            E[0, 1] = E[1, 0] = self.c2 * (s1 * d_im / s0 - cw)
            E[1, 1] = self.c3 * (t0 - (d_re * d_re + d_im * d_im) / s0)
        E[2, 2] = self.c4 * s3
        return E

    def position_fim(self, blocks: np.ndarray) -> np.ndarray:
        E = self._efim(*self._aggregates(blocks))
        return self.jac @ E @ self.jac.T

    def speb(self, blocks: np.ndarray) -> float:
        """Objective value; +inf when the position information fails the
        condition guard (treated as out of domain by the line search)."""
        A = self.position_fim(blocks)
        a, b, d = A[0, 0], A[0, 1], A[1, 1]
        mean = 0.5 * (a + d)
        half_gap = np.hypot(0.5 * (a - d), b)
        lam_min = mean - half_gap
        if not np.isfinite(lam_min) or lam_min <= 0.0 or mean + half_gap > COND_LIMIT * lam_min:
            return float("inf")
        return float((a + d) / (a * d - b * b))

    def gradient(self, blocks: np.ndarray) -> np.ndarray:
        """Hermitian per-block gradients G_p of the objective.

        Convention: d/dt speb(B + t Delta) at t=0 equals
        sum_p Re tr(G_p^H Delta_p).
        """
        s0, s1, s2, s3, t0, d_re, d_im, cw = self._aggregates(blocks)
        if s0 <= 0.0:
            raise SingularEFIM("gradient undefined without steering-direction power")
        A = self.jac @ self._efim(s0, s1, s2, s3, t0, d_re, d_im, cw) @ self.jac.T
        det = A[0, 0] * A[1, 1] - A[0, 1] ** 2
        if det <= 0.0 or not np.isfinite(det):
            raise SingularEFIM("gradient undefined at a singular point")
        inv = np.array([[A[1, 1], -A[0, 1]], [-A[0, 1], A[0, 0]]]) / det
        p3 = self.jac.T @ (inv @ inv) @ self.jac  # 3x3 sensitivity carrier

        g_e11 = -p3[0, 0]
        g_e12 = -2.0 * p3[0, 1]
        g_e22 = -p3[1, 1]
        g_e33 = -p3[2, 2]

        g_s0 = (
            g_e11 * self.c1 * s1 * s1 / s0**2
            - g_e12 * self.c2 * s1 * d_im / s0**2
            + g_e22 * self.c3 * (d_re * d_re + d_im * d_im) / s0**2
        )
        g_s1 = -2.0 * g_e11 * self.c1 * s1 / s0 + g_e12 * self.c2 * d_im / s0
        g_s2 = g_e11 * self.c1
        g_s3 = g_e33 * self.c4
        g_t0 = g_e22 * self.c3
        g_dre = -2.0 * g_e22 * self.c3 * d_re / s0
        g_dim = g_e12 * self.c2 * s1 / s0 - 2.0 * g_e22 * self.c3 * d_im / s0
        g_cw = -g_e12 * self.c2

        p_count = len(self.omegas)
        g_b11 = g_s0 + g_s1 * self.omegas + g_s2 * self.omegas**2 + g_s3 * self.nda_r**2
        grads = np.zeros((p_count, self.block_dim, self.block_dim), dtype=complex)
        grads[:, 0, 0] = g_b11
        if self.block_dim == 2:
            grads[:, 1, 1] = g_t0 * self.nda_t**2
            cross = 0.5 * (g_dre + 1j * (g_dim + g_cw * self.omegas)) * self.nda_t
            grads[:, 1, 0] = cross
            grads[:, 0, 1] = np.conj(cross)
        return grads


# -----------------------------------------------------------------------------
# projection onto {blocks PSD, total trace <= budget}


def _shift_to_budget(lam: np.ndarray, budget: float, floor: float) -> np.ndarray:
    """Project eigenvalues onto {x >= floor, sum x = budget} by uniform shift.

    Assumes sum(max(lam, floor)) > budget so the trace constraint is active.
    """
    flat = np.sort(lam.ravel())[::-1]
    n = flat.size
    ks = np.arange(1, n + 1)
    mus = (np.cumsum(flat) + (n - ks) * floor - budget) / ks
    above = np.flatnonzero(flat - mus > floor)
    if above.size == 0:
        # budget barely covers the floors: spread it evenly
        return np.full_like(lam, budget / n)
    mu = mus[above.max()]
    return np.maximum(lam - mu, floor)


def project_feasible(
    blocks, power_budget: float, eig_floor: float = 0.0
) -> BeamCovariance:
    """Nearest (Frobenius) feasible beam covariance to the given blocks.

    Eigendecomposes each block, clamps eigenvalues at eig_floor, and if the
    total trace still exceeds the budget applies one joint uniform-shift
    projection across all eigenvalues with re-clamping. Eigenvectors are
    untouched, which is what makes this the exact Euclidean projection.
    """
    raw = blocks.blocks if isinstance(blocks, BeamCovariance) else np.asarray(blocks, complex)
    if raw.ndim == 2:
        raw = raw[None, :, :]
    herm = 0.5 * (raw + raw.conj().transpose(0, 2, 1))
    lam, vecs = np.linalg.eigh(herm)
    clamped = np.maximum(lam, eig_floor)
    if clamped.sum() > power_budget:
        clamped = _shift_to_budget(lam, power_budget, eig_floor)
    rebuilt = (vecs * clamped[:, None, :]) @ vecs.conj().transpose(0, 2, 1)
    rebuilt = 0.5 * (rebuilt + rebuilt.conj().transpose(0, 2, 1))
    return BeamCovariance(blocks=rebuilt)


# -----------------------------------------------------------------------------
# public operations


def speb_gradient(scenario: Scenario, bc: BeamCovariance) -> np.ndarray:
    """Per-block Hermitian gradient of the SPEB at feasible blocks.

    Raises SingularEFIM where the objective itself is undefined.
    """
    check_beam_covariance(bc, scenario)
    kernel = _Kernel.build(scenario)
    if not np.isfinite(kernel.speb(bc.blocks)):
        raise SingularEFIM("SPEB is singular at the requested blocks")
    return kernel.gradient(bc.blocks)


def _outer_equal_split(scenario: Scenario) -> np.ndarray:
    """Default start: budget split evenly over the outermost subcarrier pair
    and both beam directions (full-rank blocks there, zero elsewhere)."""
    omegas = np.abs(np.asarray(scenario.subcarrier_offsets))
    outer = omegas >= omegas.max() - 1e-12 * max(omegas.max(), 1.0)
    m = scenario.block_dim
    blocks = np.zeros((scenario.n_subcarriers, m, m), dtype=complex)
    per_entry = scenario.power_budget / (outer.sum() * m)
    for p in np.flatnonzero(outer):
        blocks[p] = np.eye(m) * per_entry
    return blocks


def optimize(
    scenario: Scenario,
    options: OptOptions | None = None,
    initial: BeamCovariance | None = None,
) -> OptResult:
    """Minimize the SPEB over feasible beam covariances.

    Projected gradient descent with Armijo backtracking (monotone in the
    objective); stops when the relative projected-gradient norm drops below
    options.grad_tol or after options.max_iters accepted steps.

    Raises:
        InfeasibleScenario: every feasible choice of blocks is singular
            (checked at the full-rank uniform point, which dominates the
            feasible set up to scale).
    """
    opts = options or OptOptions()
    kernel = _Kernel.build(scenario)

    uniform = BeamCovariance.uniform(scenario).blocks
    if not np.isfinite(kernel.speb(uniform)):
        raise InfeasibleScenario(
            "position information is singular for every feasible beam choice"
        )

    if initial is not None:
        check_beam_covariance(initial, scenario)
        blocks = project_feasible(initial, scenario.power_budget, opts.psd_tol).blocks
    else:
        blocks = _outer_equal_split(scenario)
    if not np.isfinite(kernel.speb(blocks)):
        blocks = uniform.copy()

    f_cur = kernel.speb(blocks)
    trace = [f_cur]
    budget = scenario.power_budget

    def residuals(b, f, grads, grad_norm):
        """(stationarity residual, relative optimality gap) at b."""
        if grad_norm == 0.0:
            return 0.0, 0.0
        probe = budget / grad_norm
        moved = project_feasible(b - probe * grads, budget, opts.psd_tol).blocks
        kkt = float(np.linalg.norm(b - moved)) / (probe * grad_norm)
        descent_floor = budget * min(0.0, float(np.linalg.eigvalsh(grads).min()))
        gap = (float(np.vdot(grads, b).real) - descent_floor) / f
        return kkt, gap

    step = opts.step_init if opts.step_init > 0.0 else 0.0
    kkt_rel = float("inf")
    gap_rel = float("inf")
    grad_norm = float("nan")
    converged = False
    iters = 0

    for _ in range(opts.max_iters):
        grads = kernel.gradient(blocks)
        grad_norm = float(np.linalg.norm(grads))
        kkt_rel, gap_rel = residuals(blocks, f_cur, grads, grad_norm)
        if kkt_rel < opts.grad_tol or gap_rel <= opts.gap_tol:
            converged = True
            break

        probe = budget / grad_norm
        if step == 0.0:
            step = probe
        t = min(2.0 * step, opts.step_cap_factor * probe)
        accepted = False
        while t > 1e-20 * probe:
            cand = project_feasible(blocks - t * grads, budget, opts.psd_tol).blocks
            f_cand = kernel.speb(cand)
            decrease = float(np.vdot(grads, cand - blocks).real)
            if f_cand <= f_cur + opts.armijo_decrease * decrease:
                accepted = True
                break
            t *= opts.armijo_shrink
        if not accepted:
            break  # step collapsed: no further float-representable progress
        blocks = cand
        f_cur = f_cand
        trace.append(f_cur)
        step = t
        iters += 1

    if not converged:
        # the loop exited after moving: re-measure optimality where we stand
        grads = kernel.gradient(blocks)
        grad_norm = float(np.linalg.norm(grads))
        kkt_rel, gap_rel = residuals(blocks, f_cur, grads, grad_norm)
        converged = kkt_rel < opts.grad_tol or gap_rel <= opts.gap_tol

    bc = BeamCovariance(blocks=blocks)
    b11_share = float(np.clip(blocks[:, 0, 0].real.sum() / budget, 0.0, 1.0))
    return OptResult(
        beam=bc,
        speb=f_cur,
        peb=float(np.sqrt(f_cur)),
        speb_trace=np.array(trace),
        iterations=iters,
        converged=converged,
        kkt_residual=kkt_rel,
        optimality_gap_rel=gap_rel,
        grad_norm=grad_norm,
        rank_profile=rank_profile(bc, opts.rank_tol),
        power_share_toward_target=b11_share,
    )


def monopulse_candidate(scenario: Scenario, alpha: float) -> BeamCovariance:
    """Two-beam rank-one candidate on the outermost subcarrier pair.

    Each outer block is (budget/2) * [[a, +-j s], [-+j s, 1-a]] with
    s = sqrt(a(1-a)): a sum beam toward the target plus a quadrature
    difference beam, opposite rotation senses on the two band edges. Blocks
    are rank one for every alpha in (0, 1). Which band edge carries which
    sense is decided by the scene geometry (the coupling they exploit is
    signed), so the better of the two assignments is returned.

    Raises:
        InvalidAlpha: alpha outside (0, 1).
        InfeasibleScenario: fewer than two subcarriers or a single-element
            transmitter, where the construction has no room to live.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidAlpha(f"alpha must be in (0, 1), got {alpha}")
    if scenario.n_subcarriers < 2 or scenario.block_dim != 2:
        raise InfeasibleScenario(
            "two-beam candidate needs >= 2 subcarriers and >= 2 transmit elements"
        )
    if not scenario.symmetric_subcarriers:
        raise InfeasibleScenario("two-beam candidate assumes a symmetric subcarrier grid")
    omegas = np.asarray(scenario.subcarrier_offsets)
    blocks = np.zeros((scenario.n_subcarriers, 2, 2), dtype=complex)
    w_max = np.abs(omegas).max()
    s = np.sqrt(alpha * (1.0 - alpha))
    half = scenario.power_budget / 2.0
    for p, w in enumerate(omegas):
        if abs(abs(w) - w_max) <= 1e-12 * max(w_max, 1.0):
            sign = 1.0 if w > 0 else -1.0
            blocks[p] = half * np.array(
                [[alpha, sign * 1j * s], [-sign * 1j * s, 1.0 - alpha]]
            )
    kernel = _Kernel.build(scenario)
    if kernel.speb(blocks.conj()) < kernel.speb(blocks):
        blocks = blocks.conj()
    return BeamCovariance(blocks=blocks)


def rank_profile(bc: BeamCovariance, rank_tol: float = 1e-4) -> tuple[int, ...]:
    """Per-block numerical ranks, relative to the largest eigenvalue anywhere."""
    eigs = np.linalg.eigvalsh(bc.blocks)
    ref = float(eigs.max(initial=0.0))
    if ref <= 0.0:
        return tuple(0 for _ in range(bc.n_blocks))
    return tuple(int((e > rank_tol * ref).sum()) for e in eigs)
