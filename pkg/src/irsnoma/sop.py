"""Secrecy-outage probability analytics.

Four routes to the same quantity: the exact closed form for the
single-antenna case, the Bernstein-type deterministic bound for the
multi-antenna case, the eigenvalue-mixture tail of the eavesdropper's
quadratic form, and a plain Monte-Carlo estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, IrsLayout, ReflectionState, combined_channel, _crandn

_PROB_TOL = 1e-9


@dataclass(frozen=True)
class LargeScaleStats:
    """Distance-based amplitude gains of all eavesdropper-related links."""

    L_bs_eve: float
    L_irs_eve: tuple[float, ...]
    L_bs_irs: tuple[float, ...]

    @classmethod
    def from_channels(cls, channels: ChannelSet) -> "LargeScaleStats":
        return cls(channels.L_bs_eve, channels.L_irs_eve, channels.L_bs_irs)


@dataclass(frozen=True)
class SopTarget:
    p_max: np.ndarray          # per-user tolerable outage probability
    secrecy_rate: np.ndarray   # target secrecy rates, bits/s/Hz

    def __post_init__(self):
        p = np.asarray(self.p_max, float)
        if np.any(p <= 0) or np.any(p >= 1):
            raise ValueError("outage targets must lie in (0, 1)")


def xi_e_squared(layout: IrsLayout, large_scale: LargeScaleStats) -> float:
    """Aggregate cascaded-path power toward the eavesdropper.

    Sum over surfaces of |gain(BS-surface) * gain(surface-eve)|^2 * N_l.
    """
    return float(sum(
        (lb * le) ** 2 * nl
        for lb, le, nl in zip(large_scale.L_bs_irs, large_scale.L_irs_eve,
                              layout.element_counts)
    ))


def siso_sop_closed_form(powers, i: int, t: float, sigma_sq: float,
                         xi_sq: float, L_bs_eve: float) -> float:
    """Exact outage probability of the SINR-threshold event at the eavesdropper.

    The combined eavesdropper channel is complex Gaussian with variance
    xi_sq + L_bs_eve^2, so its squared magnitude is exponential and the
    tail evaluates in closed form.  Returns 0 when the threshold exceeds
    the eavesdropper's SINR upper bound P_i / sum_{j>i} P_j.
    """
    P = np.asarray(powers, float)
    if t < 0 or sigma_sq <= 0 or xi_sq < 0 or P[i] <= 0:
        raise ValueError("negative or degenerate inputs")
    if t == 0:
        return 1.0
    interf = float(np.sum(P[i + 1:]))
    margin = P[i] - t * interf
    if margin <= 0:
        return 0.0
    var = xi_sq + L_bs_eve ** 2
    return float(np.exp(-t * sigma_sq / (margin * var)))


def siso_min_t(powers, i: int, p_max: float, sigma_sq: float,
               xi_sq: float, L_bs_eve: float) -> float:
    """Smallest SINR threshold whose closed-form outage equals p_max."""
    if not 0 < p_max < 1:
        raise ValueError("p_max must lie in (0, 1)")
    P = np.asarray(powers, float)
    var = xi_sq + L_bs_eve ** 2
    lg = np.log(1.0 / p_max)
    return float(lg * var * P[i] / (lg * var * float(np.sum(P[i + 1:])) + sigma_sq))


def eve_projection_matrix(H_bs_irs_stacked: np.ndarray,
                          reflection_or_u_bar,
                          large_scale: LargeScaleStats,
                          layout: IrsLayout) -> np.ndarray:
    """Stacked map C from transmit signal space to the eavesdropper's
    normalized observation, shape (M + N, M): top block L_bs_eve * I, bottom
    block Lbar * Theta * H_bs_irs."""
    if isinstance(reflection_or_u_bar, ReflectionState):
        theta_diag = np.exp(1j * reflection_or_u_bar.phases)
    else:
        u_bar = np.asarray(reflection_or_u_bar)
        theta_diag = (u_bar[:-1] / u_bar[-1]).conj()
    lbar = np.repeat(np.asarray(large_scale.L_irs_eve, float), layout.element_counts)
    M = H_bs_irs_stacked.shape[1]
    top = large_scale.L_bs_eve * np.eye(M, dtype=complex)
    bottom = (lbar * theta_diag)[:, None] * H_bs_irs_stacked
    return np.vstack([top, bottom])


def build_phi(W_i: np.ndarray, reflection_or_u_bar, H_bs_irs_stacked: np.ndarray,
              large_scale: LargeScaleStats, layout: IrsLayout) -> np.ndarray:
    """Joint beamforming matrix of the eavesdropper's quadratic form.

    Phi = C W C^H where C maps the transmit vector to the concatenated
    (direct, cascaded) small-scale eavesdropper channel; Hermitian, and PSD
    whenever W is.
    """
    W = np.asarray(W_i)
    if not np.allclose(W, W.conj().T, atol=1e-8 * max(1.0, np.linalg.norm(W))):
        raise ValueError("beamforming matrix must be Hermitian")
    C = eve_projection_matrix(H_bs_irs_stacked, reflection_or_u_bar, large_scale, layout)
    phi = C @ W @ C.conj().T
    return 0.5 * (phi + phi.conj().T)


def bernstein_t_lower_bound(Phi: np.ndarray, p_max: float, sigma_sq: float) -> float:
    """Deterministic SINR threshold certified by the Bernstein-type inequality.

    (Tr Phi + sqrt(2 log(1/p)) ||Phi||_F + log(1/p) max(rho_max, 0)) / sigma^2.
    """
    if not 0 < p_max < 1:
        raise ValueError("p_max must lie in (0, 1)")
    Phi = np.asarray(Phi)
    lg = np.log(1.0 / p_max)
    tr = float(np.trace(Phi).real)
    fro = float(np.linalg.norm(Phi))
    rho = float(np.linalg.eigvalsh(Phi)[-1])
    return (tr + np.sqrt(2 * lg) * fro + lg * max(rho, 0.0)) / sigma_sq


def quadratic_form_tail(eigenvalues: np.ndarray, x: float) -> float:
    """P(z^H Phi z > x) for z ~ CN(0, I) via the eigenvalue mixture.

    Tied positive eigenvalues are perturbed multiplicatively (the product
    form is singular at ties); the result is clipped to [0, 1].
    """
    rho = np.asarray(eigenvalues, float)
    rho = rho[np.abs(rho) > 1e-14]
    pos = rho[rho > 0]
    if pos.size == 0:
        return 0.0
    if x <= 0:
        return 1.0
    # break ties among all retained eigenvalues
    rho = rho.copy()
    for _ in range(5):
        order = np.argsort(rho)
        gaps = np.diff(rho[order])
        close = np.abs(gaps) < 1e-9 * np.max(np.abs(rho))
        if not np.any(close):
            break
        for idx in np.flatnonzero(close):
            rho[order[idx + 1]] *= 1 + 1e-7
    total = 0.0
    for i, ri in enumerate(rho):
        if ri <= 0:
            continue
        prod = 1.0
        for j, rj in enumerate(rho):
            if j != i:
                prod /= (1.0 - rj / ri)
        total += np.exp(-x / ri) * prod
    return float(np.clip(total, -_PROB_TOL, 1 + _PROB_TOL).clip(0.0, 1.0))


def actual_sop_eigen(Phi: np.ndarray, threshold: float) -> float:
    """Exact outage of the eavesdropper's quadratic form at x = t * sigma^2."""
    Phi = np.asarray(Phi)
    rho = np.linalg.eigvalsh(Phi)
    return quadratic_form_tail(rho, threshold)


def _eve_small_scale(channels: ChannelSet, rng: np.random.Generator) -> tuple[np.ndarray, list[np.ndarray]]:
    M = channels.num_antennas
    h_be = channels.L_bs_eve * _crandn(rng, M)
    h_ie = [g * _crandn(rng, nl)
            for g, nl in zip(channels.L_irs_eve, channels.layout.element_counts)]
    return h_be, h_ie


def monte_carlo_sop(
    channels: ChannelSet,
    reflection: ReflectionState,
    beamformers: np.ndarray,
    secrecy_rates: np.ndarray,
    sigma_sq: float,
    trials: int,
    seed: int,
    worst_case: bool = False,
) -> np.ndarray:
    """Empirical per-user SOP with fresh eavesdropper channels each trial.

    beamformers: (K, M) transmit vectors (rows).  With worst_case the
    eavesdropper cancels all co-channel interference before decoding
    (multi-antenna analysis assumption); otherwise it performs plain SIC.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    K, M = beamformers.shape
    theta = np.exp(1j * reflection.phases)
    H = channels.H_stacked
    # legitimate rates are fixed by the given solution
    R_leg = np.zeros(K)
    for i in range(K):
        h = combined_channel(channels, reflection, i)
        sig = np.abs(h @ beamformers[i]) ** 2
        interf = sum(np.abs(h @ beamformers[j]) ** 2 for j in range(i + 1, K))
        R_leg[i] = np.log2(1 + sig / (interf + sigma_sq))
    redundant = R_leg - np.asarray(secrecy_rates, float)

    rng = np.random.default_rng([int(seed), 11])
    outages = np.zeros(K)
    for _ in range(trials):
        h_be, h_ie = _eve_small_scale(channels, rng)
        h_e = (np.concatenate(h_ie).conj() * theta) @ H + h_be.conj()
        sig = np.abs(h_e @ beamformers.T) ** 2
        for i in range(K):
            if worst_case:
                r_e = np.log2(1 + sig[i] / sigma_sq)
            else:
                r_e = np.log2(1 + sig[i] / (np.sum(sig[i + 1:]) + sigma_sq))
            if r_e > redundant[i]:
                outages[i] += 1
    return outages / trials


def monte_carlo_sop_gaussian_surrogate(
    powers: np.ndarray,
    secrecy_rates_redundancy: np.ndarray,
    sigma_sq: float,
    var_eve: float,
    trials: int,
    seed: int,
) -> np.ndarray:
    """Single-antenna SOP with the eavesdropper's combined channel drawn
    exactly complex Gaussian with variance var_eve = xi^2 + L_bs_eve^2.

    secrecy_rates_redundancy holds the per-user redundant rates
    R_{i,i} - R_{s,i} directly.
    """
    rng = np.random.default_rng([int(seed), 12])
    P = np.asarray(powers, float)
    K = P.size
    g = np.abs(_crandn(rng, trials)) ** 2 * var_eve
    out = np.zeros(K)
    for i in range(K):
        sinr = g * P[i] / (g * np.sum(P[i + 1:]) + sigma_sq)
        out[i] = np.mean(np.log2(1 + sinr) > secrecy_rates_redundancy[i])
    return out
