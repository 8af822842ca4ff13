"""Shared builders for test scenarios and feasible beam blocks."""

import numpy as np
import pytest

from bisense.array_manifold import build_uca
from bisense.fisher import BeamCovariance, Scenario, subcarrier_offsets_rad
from bisense.geometry import SPEED_OF_LIGHT, Position2D

CARRIER_HZ = 3.8e9
OMEGA_C = 2 * np.pi * CARRIER_HZ
WAVELENGTH = SPEED_OF_LIGHT / CARRIER_HZ
NOISE_W = 2.4e-14
BUDGET_W = 0.01
SPACING_HZ = 2.4e6
RCS_COEFF_M = 0.1


def reference_gain(p_t, p_r, p_s, wavelength=WAVELENGTH, coeff=RCS_COEFF_M):
    d_ts = np.hypot(p_s.x - p_t.x, p_s.y - p_t.y)
    d_sr = np.hypot(p_s.x - p_r.x, p_s.y - p_r.y)
    return coeff * wavelength / (4 * np.pi * d_ts * d_sr)


def default_scenario(
    target=(0.0, 10.0),
    n_tx=15,
    n_rx=3,
    n_subcarriers=2,
    narrowband=True,
    gain=None,
    gain_phase=0.0,
    carrier_hz=CARRIER_HZ,
    spacing_hz=SPACING_HZ,
    budget=BUDGET_W,
    noise=NOISE_W,
    p_t=(-10.0, 0.0),
    p_r=(10.0, 0.0),
):
    """Two-terminal reference setup; defaults follow the standard benchmark
    point (3.8 GHz carrier, 2 subcarriers at 2.4 MHz, 15/3 circular arrays,
    10 mW budget, 2.4e-14 W noise)."""
    wavelength = SPEED_OF_LIGHT / carrier_hz
    pt, pr, ps = Position2D(*p_t), Position2D(*p_r), Position2D(*target)
    if gain is None:
        gain = reference_gain(pt, pr, ps, wavelength) * np.exp(1j * gain_phase)
    return Scenario(
        p_t=pt,
        p_r=pr,
        p_s=ps,
        tx_array=build_uca(n_tx, wavelength / 2),
        rx_array=build_uca(n_rx, wavelength / 2),
        omega_carrier=2 * np.pi * carrier_hz,
        subcarrier_offsets=subcarrier_offsets_rad(n_subcarriers, spacing_hz),
        noise_power=noise,
        power_budget=budget,
        gain=complex(gain),
        narrowband=narrowband,
    )


def random_scenario(rng, p_choices=(1, 2, 4, 5), nt_choices=(1, 2, 8, 15), nr_choices=(1, 3, 15)):
    """Randomized but non-degenerate scenario for cross-route checks."""
    carrier_hz = rng.uniform(1e9, 10e9)
    wavelength = SPEED_OF_LIGHT / carrier_hz
    while True:
        p_t = rng.uniform(-30, 30, 2)
        p_r = rng.uniform(-30, 30, 2)
        p_s = rng.uniform(-30, 30, 2)
        d_ts = np.hypot(*(p_s - p_t))
        d_sr = np.hypot(*(p_s - p_r))
        if d_ts > 1.0 and d_sr > 1.0:
            break
    mag = rng.uniform(1e-7, 1e-4)
    phase = rng.uniform(-np.pi, np.pi)
    return Scenario(
        p_t=Position2D(*p_t),
        p_r=Position2D(*p_r),
        p_s=Position2D(*p_s),
        tx_array=build_uca(int(rng.choice(nt_choices)), wavelength / 2),
        rx_array=build_uca(int(rng.choice(nr_choices)), wavelength / 2),
        omega_carrier=2 * np.pi * carrier_hz,
        subcarrier_offsets=subcarrier_offsets_rad(
            int(rng.choice(p_choices)), rng.uniform(1e5, 5e6)
        ),
        noise_power=rng.uniform(1e-15, 1e-12),
        power_budget=rng.uniform(1e-3, 1.0),
        gain=mag * np.exp(1j * phase),
        narrowband=bool(rng.integers(0, 2)),
    )


def random_feasible_blocks(rng, scenario, power_fraction=None, eig_floor=0.0):
    """Random Hermitian PSD blocks with total trace <= budget.

    eig_floor (as a fraction of the per-block mean power) keeps points in the
    strict interior for finite-difference probes.
    """
    m = scenario.block_dim
    p_count = scenario.n_subcarriers
    blocks = np.zeros((p_count, m, m), dtype=complex)
    for p in range(p_count):
        x = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        blocks[p] = x @ x.conj().T
        if eig_floor > 0.0:
            blocks[p] += eig_floor * np.eye(m)
    total = np.trace(blocks, axis1=1, axis2=2).real.sum()
    if power_fraction is None:
        power_fraction = rng.uniform(0.3, 1.0)
    blocks *= power_fraction * scenario.power_budget / total
    return BeamCovariance(blocks=blocks)


def pilots_from_blocks(scenario, bc):
    """Deterministic pilots whose per-subcarrier sample covariance equals the
    precoded signal covariance F B F^H."""
    from bisense.fisher import precoder

    out = []
    for p in range(scenario.n_subcarriers):
        f_mat = precoder(scenario, p)
        lam, vec = np.linalg.eigh(bc.blocks[p])
        lam = np.clip(lam, 0.0, None)
        out.append(f_mat @ (vec * np.sqrt(lam)))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
