"""Fisher information and position error bounds for a single bistatic path.

The unknown parameter vector has five entries, in this order:

    [gain_re, gain_im, delay, aod, aoa]

gain_re/gain_im are the real and imaginary parts of the complex path gain,
delay is the bistatic propagation delay, and aod/aoa are the local departure
and arrival bearings at the transmit and receive arrays. The noiseless
observation on subcarrier p with transmit vector s is

    m[p] = gain * a_r (a_t^T s) * exp(-1j * w_p * delay)

where w_p is the subcarrier's radian frequency offset from the carrier and
a_t, a_r are the steering vectors. Per-subcarrier transmit covariances are
constrained to the two-column subspace spanned by conj(a_t) and
conj(a_dot_t); the 2x2 coefficient matrices B_p are the beam covariances
the optimizer works on.

Three independent constructions of the same information matrix live here:
``fim_entrywise`` (closed-form entries from the signal covariances),
``fim_xform`` (quadratic form in per-subcarrier structure matrices), and
``fim_from_derivatives`` (raw derivative outer products over explicit pilot
vectors). Tests hold them to mutual agreement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .array_manifold import ArrayModel, SteeringPair, steering
from .errors import SingularEFIM
from .geometry import GeometryState, Position2D, derive_geometry

COND_LIMIT = 1e12  # position FIM condition number beyond which SPEB is refused

# -----------------------------------------------------------------------------
# scenario


def subcarrier_offsets_rad(count: int, spacing_hz: float) -> tuple[float, ...]:
    """Symmetric subcarrier offset grid in rad/s.

    Even counts use indices {+-1, ..., +-count/2} (no DC line); odd counts use
    {0, +-1, ..., +-(count-1)/2}. Offsets are index * 2*pi*spacing_hz, sorted
    ascending.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if count % 2 == 0:
        half = count // 2
        idx = [p for p in range(-half, half + 1) if p != 0]
    else:
        half = (count - 1) // 2
        idx = list(range(-half, half + 1))
    return tuple(2.0 * np.pi * spacing_hz * p for p in idx)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything that fixes the estimation problem except the beam blocks.

    Attributes:
        p_t, p_r, p_s: transmitter, receiver, scatterer positions, m.
        tx_array, rx_array: antenna arrays at the two terminals.
        omega_carrier: carrier radian frequency, rad/s.
        subcarrier_offsets: radian offsets of the active subcarriers, rad/s.
        noise_power: per-element complex noise variance, W.
        power_budget: total transmit power across all subcarriers, W.
        gain: complex path gain (carrier phase absorbed here).
        narrowband: evaluate steering at the carrier only (True) or per
            subcarrier (False).
        symmetric_subcarriers: declare that the offset grid is symmetric
            about zero; verified at construction when True.
    """

    p_t: Position2D
    p_r: Position2D
    p_s: Position2D
    tx_array: ArrayModel
    rx_array: ArrayModel
    omega_carrier: float
    subcarrier_offsets: tuple[float, ...]
    noise_power: float
    power_budget: float
    gain: complex
    narrowband: bool = True
    symmetric_subcarriers: bool = True

    def __post_init__(self):
        if not self.omega_carrier > 0:
            raise ValueError("omega_carrier must be positive")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be positive")
        if not self.power_budget > 0:
            raise ValueError("power_budget must be positive")
        if len(self.subcarrier_offsets) < 1:
            raise ValueError("need at least one subcarrier")
        offs = np.asarray(self.subcarrier_offsets, dtype=float)
        if not np.all(np.isfinite(offs)):
            raise ValueError("subcarrier offsets must be finite")
        if self.symmetric_subcarriers:
            mirrored = np.sort(-offs)
            scale = max(1.0, float(np.max(np.abs(offs))))
            if not np.allclose(np.sort(offs), mirrored, atol=1e-9 * scale, rtol=0):
                raise ValueError(
                    "subcarrier offsets declared symmetric but the grid is not"
                )

    @property
    def n_tx(self) -> int:
        return self.tx_array.n_elements

    @property
    def n_rx(self) -> int:
        return self.rx_array.n_elements

    @property
    def n_subcarriers(self) -> int:
        return len(self.subcarrier_offsets)

    @property
    def wavelength(self) -> float:
        from .geometry import SPEED_OF_LIGHT

        return 2.0 * np.pi * SPEED_OF_LIGHT / self.omega_carrier

    @property
    def block_dim(self) -> int:
        """Beam covariance block size: 1 for a single transmit element, else 2."""
        return 1 if self.n_tx == 1 else 2


# -----------------------------------------------------------------------------
# beam covariance blocks


@dataclass(frozen=True, eq=False)
class BeamCovariance:
    """Per-subcarrier beam covariance blocks, shape (P, m, m), m in {1, 2}.

    blocks[p] is the Hermitian PSD coefficient matrix of subcarrier p in the
    ordered basis (steering direction, steering-derivative direction). The sum
    of traces is bounded by the scenario power budget; validation happens at
    the information-matrix entry points, not on construction.
    """

    blocks: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.blocks, dtype=complex)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2] or arr.shape[1] not in (1, 2):
            raise ValueError(f"blocks must be (P, m, m) with m in {{1,2}}, got {arr.shape}")
        object.__setattr__(self, "blocks", arr)
        arr.flags.writeable = False

    @property
    def n_blocks(self) -> int:
        return self.blocks.shape[0]

    @property
    def block_dim(self) -> int:
        return self.blocks.shape[1]

    def total_power(self) -> float:
        return float(np.trace(self.blocks, axis1=1, axis2=2).real.sum())

    @staticmethod
    def uniform(scenario: Scenario) -> "BeamCovariance":
        """Full power spread evenly over all subcarriers and both directions."""
        p_count = scenario.n_subcarriers
        m = scenario.block_dim
        per_entry = scenario.power_budget / (p_count * m)
        blocks = np.stack([np.eye(m, dtype=complex) * per_entry] * p_count)
        return BeamCovariance(blocks=blocks)

    @staticmethod
    def zero(scenario: Scenario) -> "BeamCovariance":
        m = scenario.block_dim
        return BeamCovariance(blocks=np.zeros((scenario.n_subcarriers, m, m), complex))


def check_beam_covariance(bc: BeamCovariance, scenario: Scenario) -> None:
    """Raise ValueError unless bc is Hermitian, PSD, in-budget, and well-shaped."""
    blocks = bc.blocks
    if bc.n_blocks != scenario.n_subcarriers:
        raise ValueError(
            f"{bc.n_blocks} blocks for {scenario.n_subcarriers} subcarriers"
        )
    if bc.block_dim != scenario.block_dim:
        raise ValueError(
            f"block dim {bc.block_dim} does not match scenario dim {scenario.block_dim}"
        )
    scale = max(1.0, float(np.max(np.abs(blocks))) if blocks.size else 1.0)
    herm_gap = float(np.max(np.abs(blocks - blocks.conj().transpose(0, 2, 1))))
    if herm_gap > 1e-12 * scale:
        raise ValueError(f"blocks not Hermitian (max deviation {herm_gap:.3e})")
    eigs = np.linalg.eigvalsh(blocks)
    traces = np.trace(blocks, axis1=1, axis2=2).real
    floor = -1e-10 * np.maximum(traces, 1e-300)
    if np.any(eigs[:, 0] < floor):
        raise ValueError(f"block not PSD (min eigenvalue {eigs.min():.3e})")
    total = float(traces.sum())
    if total > scenario.power_budget + 1e-10:
        raise ValueError(
            f"total power {total:.6e} exceeds budget {scenario.power_budget:.6e}"
        )


# -----------------------------------------------------------------------------
# manifold evaluation and precoding


def _manifolds(
    scenario: Scenario, geom: GeometryState
) -> tuple[list[SteeringPair], list[SteeringPair]]:
    """Per-subcarrier steering pairs at the two terminals."""
    tx, rx = [], []
    for w in scenario.subcarrier_offsets:
        w_total = scenario.omega_carrier + (0.0 if scenario.narrowband else w)
        tx.append(steering(scenario.tx_array, geom.theta_t, w_total))
        rx.append(steering(scenario.rx_array, geom.theta_r, w_total))
    return tx, rx


def _precoder_from_pair(pair: SteeringPair, block_dim: int) -> np.ndarray:
    """Orthonormal beam basis [conj(a)/|a|, conj(a_dot)/|a_dot|].

    The derivative column is dropped for single-element transmitters and
    zeroed in the measure-zero case of a vanishing derivative norm, so that
    every information route sees the same effective covariance.
    """
    cols = [pair.a.conj() / pair.norm_a]
    if block_dim == 2:
        if pair.norm_a_dot > 0.0:
            cols.append(pair.a_dot.conj() / pair.norm_a_dot)
        else:
            cols.append(np.zeros_like(pair.a))
    return np.column_stack(cols)


def precoder(scenario: Scenario, subcarrier_index: int) -> np.ndarray:
    """Beam basis matrix F_p for one subcarrier; R_s[p] = F_p B_p F_p^H."""
    geom = derive_geometry(scenario.p_t, scenario.p_r, scenario.p_s)
    tx, _ = _manifolds(scenario, geom)
    return _precoder_from_pair(tx[subcarrier_index], scenario.block_dim)


# -----------------------------------------------------------------------------
# information matrices


@dataclass(frozen=True, eq=False)
class FisherBundle:
    """Information matrix, its partition, both effective forms, and bounds.

    Attributes:
        J: 5x5 information matrix over [gain_re, gain_im, delay, aod, aoa].
        J11, J12, J22: partition into gain block (2x2), cross block (2x3),
            and observable block (3x3).
        J_e: 3x3 effective information for (delay, aod, aoa) with the complex
            gain treated as unknown.
        J_eh: same with the gain magnitude known (only its phase-consistent
            direction removed).
        jacobian: 2x3 position Jacobian of (delay, aod, aoa).
        position_fim / position_fim_known_gain: 2x2 position information.
        speb / speb_known_gain: trace of the inverse position information,
            m^2; NaN when flagged singular.
        singular / singular_known_gain: condition-guard flags.
        gain: the complex gain the bundle was built with.
    """

    J: np.ndarray
    J11: np.ndarray
    J12: np.ndarray
    J22: np.ndarray
    J_e: np.ndarray
    J_eh: np.ndarray
    jacobian: np.ndarray
    position_fim: np.ndarray
    position_fim_known_gain: np.ndarray
    speb: float
    speb_known_gain: float
    singular: bool
    singular_known_gain: bool
    gain: complex

    def __post_init__(self):
        for name in (
            "J",
            "J11",
            "J12",
            "J22",
            "J_e",
            "J_eh",
            "jacobian",
            "position_fim",
            "position_fim_known_gain",
        ):
            getattr(self, name).flags.writeable = False


def _trace_inverse_2x2(a_mat: np.ndarray) -> tuple[float, bool]:
    """(trace of inverse, singular flag) for a symmetric 2x2 matrix.

    Flags singular when an eigenvalue is non-positive or the eigenvalue
    ratio exceeds COND_LIMIT.
    """
    a, b, d = a_mat[0, 0], a_mat[0, 1], a_mat[1, 1]
    mean = 0.5 * (a + d)
    half_gap = np.hypot(0.5 * (a - d), b)
    lam_min = mean - half_gap
    lam_max = mean + half_gap
    if not np.isfinite(lam_min) or lam_min <= 0.0 or lam_max > COND_LIMIT * lam_min:
        return float("nan"), True
    det = a * d - b * b
    return float((a + d) / det), False


def _schur_reduce(J11: np.ndarray, J12: np.ndarray, J22: np.ndarray) -> np.ndarray:
    """J22 minus the gain-uncertainty penalty J12^T J11^{-1} J12.

    J11 is a positive multiple of the identity by construction; a zero gain
    block means zero cross terms too, so the penalty is dropped.
    """
    j11 = J11[0, 0]
    if j11 <= 0.0:
        return J22.copy()
    return J22 - (J12.T @ J12) / j11


def _known_gain_reduce(
    J11: np.ndarray, J12: np.ndarray, J22: np.ndarray, gain: complex
) -> np.ndarray:
    """Remove only the gain-phase direction: penalty through u = [-Im, Re]/|g|."""
    mag = abs(gain)
    if mag == 0.0:
        raise ValueError("known-gain reduction needs a nonzero gain")
    j11 = J11[0, 0]
    if j11 <= 0.0:
        return J22.copy()
    u = np.array([-gain.imag, gain.real]) / mag
    v = J12.T @ u
    return J22 - np.outer(v, v) / float(u @ J11 @ u)


def fim_entrywise(scenario: Scenario, bc: BeamCovariance) -> FisherBundle:
    """Closed-form information matrix from per-subcarrier signal covariances.

    Builds R_s[p] = F_p B_p F_p^H explicitly and evaluates the nine nonzero
    entries through the quadratic forms a^T R a*, a_dot^T R a_dot*,
    a_dot^T R a*. Returns the full bundle including both effective forms and
    SPEB values (NaN + flag when the position information fails the
    condition guard).
    """
    check_beam_covariance(bc, scenario)
    geom = derive_geometry(scenario.p_t, scenario.p_r, scenario.p_s)
    tx, rx = _manifolds(scenario, geom)
    kappa = 2.0 / scenario.noise_power
    n_rx = scenario.n_rx
    g = complex(scenario.gain)
    mag2 = g.real**2 + g.imag**2

    j11 = j13 = j23 = j14 = j24 = j33 = j34 = j44 = j55 = 0.0
    for p, w in enumerate(scenario.subcarrier_offsets):
        f_mat = _precoder_from_pair(tx[p], scenario.block_dim)
        r_s = f_mat @ bc.blocks[p] @ f_mat.conj().T
        a = tx[p].a
        a_dot = tx[p].a_dot
        q_aa = float((a @ r_s @ a.conj()).real)
        q_dd = float((a_dot @ r_s @ a_dot.conj()).real)
        q_da = complex(a_dot @ r_s @ a.conj())
        j11 += kappa * n_rx * q_aa
        j13 += kappa * n_rx * g.imag * w * q_aa
        j23 += -kappa * n_rx * g.real * w * q_aa
        j14 += kappa * n_rx * (g * q_da).real
        j24 += kappa * n_rx * (g * q_da).imag
        j33 += kappa * n_rx * mag2 * w * w * q_aa
        j34 += -kappa * n_rx * mag2 * w * q_da.imag
        j44 += kappa * n_rx * mag2 * q_dd
        j55 += kappa * mag2 * rx[p].norm_a_dot**2 * q_aa

    J = np.array(
        [
            [j11, 0.0, j13, j14, 0.0],
            [0.0, j11, j23, j24, 0.0],
            [j13, j23, j33, j34, 0.0],
            [j14, j24, j34, j44, 0.0],
            [0.0, 0.0, 0.0, 0.0, j55],
        ]
    )
    return bundle_from_fim(J, geom.jacobian, g)


def bundle_from_fim(J: np.ndarray, jacobian: np.ndarray, gain: complex) -> FisherBundle:
    """Partition a 5x5 information matrix and derive bounds."""
    J = np.asarray(J, dtype=float)
    J11 = J[:2, :2].copy()
    J12 = J[:2, 2:].copy()
    J22 = J[2:, 2:].copy()
    J_e = _schur_reduce(J11, J12, J22)
    pos_fim = jacobian @ J_e @ jacobian.T
    speb, singular = _trace_inverse_2x2(pos_fim)

    if abs(gain) > 0.0:
        J_eh = _known_gain_reduce(J11, J12, J22, gain)
        pos_fim_kg = jacobian @ J_eh @ jacobian.T
        speb_kg, singular_kg = _trace_inverse_2x2(pos_fim_kg)
    else:
        J_eh = np.full((3, 3), np.nan)
        pos_fim_kg = np.full((2, 2), np.nan)
        speb_kg, singular_kg = float("nan"), True

    return FisherBundle(
        J=J,
        J11=J11,
        J12=J12,
        J22=J22,
        J_e=J_e,
        J_eh=J_eh,
        jacobian=np.asarray(jacobian, dtype=float).copy(),
        position_fim=pos_fim,
        position_fim_known_gain=pos_fim_kg,
        speb=speb,
        speb_known_gain=speb_kg,
        singular=singular,
        singular_known_gain=singular_kg,
        gain=complex(gain),
    )


def speb(bundle: FisherBundle) -> float:
    """Squared position error bound, m^2.

    Raises:
        SingularEFIM: position information failed the condition guard.
    """
    if bundle.singular:
        raise SingularEFIM(
            f"position information condition number exceeds {COND_LIMIT:.1e}"
        )
    return bundle.speb


def peb(bundle: FisherBundle) -> float:
    """Position error bound, m (square root of the SPEB)."""
    return float(np.sqrt(speb(bundle)))


def speb_known_gain(bundle: FisherBundle, gain: complex | None = None) -> float:
    """SPEB with the gain magnitude known (phase still unknown).

    With gain omitted, uses the value the bundle was built with. Never larger
    than speb(bundle); equal whenever the beam blocks put no real part into
    the cross-direction entries.
    """
    if gain is None or complex(gain) == bundle.gain:
        if bundle.singular_known_gain:
            raise SingularEFIM(
                f"known-gain position information condition number exceeds {COND_LIMIT:.1e}"
            )
        return bundle.speb_known_gain
    J_eh = _known_gain_reduce(bundle.J11, bundle.J12, bundle.J22, complex(gain))
    pos = bundle.jacobian @ J_eh @ bundle.jacobian.T
    value, singular = _trace_inverse_2x2(pos)
    if singular:
        raise SingularEFIM(
            f"known-gain position information condition number exceeds {COND_LIMIT:.1e}"
        )
    return value


def fim_xform(scenario: Scenario, bc: BeamCovariance) -> np.ndarray:
    """Information matrix as a quadratic form in per-subcarrier structure
    matrices; an independent route to the same 5x5 matrix as fim_entrywise.

        J = kappa * sum_p Re(|g|^2 X_r[p] B_p X_r[p]^H + X_t[p] B_p X_t[p]^H)
    """
    check_beam_covariance(bc, scenario)
    geom = derive_geometry(scenario.p_t, scenario.p_r, scenario.p_s)
    tx, rx = _manifolds(scenario, geom)
    kappa = 2.0 / scenario.noise_power
    g = complex(scenario.gain)
    mag2 = g.real**2 + g.imag**2
    sq_nt = np.sqrt(scenario.n_tx)
    sq_nr = np.sqrt(scenario.n_rx)
    m = scenario.block_dim

    J = np.zeros((5, 5))
    for p, w in enumerate(scenario.subcarrier_offsets):
        x_t = np.zeros((5, m), dtype=complex)
        x_t[0, 0] = sq_nt
        x_t[1, 0] = 1j * sq_nt
        x_t[2, 0] = -1j * g * w * sq_nt
        if m == 2:
            x_t[3, 1] = g * tx[p].norm_a_dot
        x_t *= sq_nr
        x_r = np.zeros((5, m), dtype=complex)
        x_r[4, 0] = sq_nt * rx[p].norm_a_dot
        b = bc.blocks[p]
        J += kappa * (mag2 * (x_r @ b @ x_r.conj().T) + x_t @ b @ x_t.conj().T).real
    return J


def fim_from_derivatives(
    scenario: Scenario, pilots: Sequence[np.ndarray]
) -> np.ndarray:
    """Information matrix summed from raw observation derivatives.

    pilots[p] is an (n_tx, k_p) array whose columns are deterministic
    transmit vectors for subcarrier p; their sample covariance
    sum_i s_i s_i^H stands in for R_s[p]. For each pilot the five derivative
    vectors of the observation are stacked and accumulated as
    kappa * Re(D^H D). This route never touches the closed-form entries and
    serves as the oracle for the other two.
    """
    if len(pilots) != scenario.n_subcarriers:
        raise ValueError(
            f"{len(pilots)} pilot sets for {scenario.n_subcarriers} subcarriers"
        )
    geom = derive_geometry(scenario.p_t, scenario.p_r, scenario.p_s)
    tx, rx = _manifolds(scenario, geom)
    kappa = 2.0 / scenario.noise_power
    g = complex(scenario.gain)

    J = np.zeros((5, 5))
    for p, w in enumerate(scenario.subcarrier_offsets):
        a_t, da_t = tx[p].a, tx[p].a_dot
        a_r, da_r = rx[p].a, rx[p].a_dot
        phase = np.exp(-1j * w * geom.tau)
        block = np.asarray(pilots[p], dtype=complex)
        if block.ndim != 2 or block.shape[0] != scenario.n_tx:
            raise ValueError(f"pilots[{p}] must be (n_tx, k), got {block.shape}")
        for i in range(block.shape[1]):
            s = block[:, i]
            through_a = complex(a_t @ s) * phase
            through_da = complex(da_t @ s) * phase
            d_gain_re = a_r * through_a
            derivs = np.column_stack(
                [
                    d_gain_re,
                    1j * d_gain_re,
                    -1j * w * g * d_gain_re,
                    g * a_r * through_da,
                    g * da_r * through_a,
                ]
            )
            J += kappa * (derivs.conj().T @ derivs).real
    return J


# -----------------------------------------------------------------------------
# whole-matrix cross-check forms (used by tests and the validate suite)


def _balanced_inverse(y: np.ndarray) -> np.ndarray:
    """Inverse via symmetric diagonal balancing; accurate for graded matrices."""
    d = np.sqrt(np.abs(np.diag(y)))
    d[d == 0.0] = 1.0
    scale = np.outer(1.0 / d, 1.0 / d)
    return np.linalg.inv(y * scale) * scale


def full_fim_speb(J: np.ndarray, jacobian: np.ndarray) -> float:
    """SPEB straight from the 5x5 matrix: lift the Jacobian around the gain
    block and read the position sub-block of the inverse. Agrees with the
    reduced route by the block-inverse identity."""
    k1 = np.zeros((4, 5))
    k1[0, 0] = 1.0
    k1[1, 1] = 1.0
    k1[2:, 2:] = jacobian
    y = k1 @ J @ k1.T
    return float(np.trace(_balanced_inverse(y)[2:, 2:]))


def full_fim_speb_known_gain(J: np.ndarray, jacobian: np.ndarray, gain: complex) -> float:
    """Known-gain SPEB from the 5x5 matrix, keeping only the gain-phase row."""
    mag = abs(gain)
    if mag == 0.0:
        raise ValueError("known-gain form needs a nonzero gain")
    k2 = np.zeros((3, 5))
    k2[0, 0] = -gain.imag / mag
    k2[0, 1] = gain.real / mag
    k2[1:, 2:] = jacobian
    y = k2 @ J @ k2.T
    return float(np.trace(_balanced_inverse(y)[1:, 1:]))
