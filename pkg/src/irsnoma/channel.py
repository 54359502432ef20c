"""Network geometry, fading channel generation and combined-channel assembly.

The network consists of a BS with M antennas, K single-antenna users, one
single-antenna eavesdropper and L passive reflecting surfaces with N_l
elements each.  BS-surface links are Rician (deterministic steering-vector
LoS component plus Rayleigh NLoS), every other link is Rayleigh with
variance set by the distance-based amplitude gain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# stable per-link stream ids so adding links never perturbs other draws
_LINK_STREAMS = {
    "bs_irs": 1,
    "bs_user": 2,
    "bs_eve": 3,
    "irs_user": 4,
    "irs_eve": 5,
}


def _rng(seed: int, link: str, *extra: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), _LINK_STREAMS[link], *map(int, extra)])


def _crandn(rng: np.random.Generator, *shape: int) -> np.ndarray:
    """Standard circularly-symmetric complex Gaussian entries (unit variance)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


@dataclass(frozen=True)
class PathLossModel:
    L0: float                 # reference power gain at 1 m, linear
    alpha_direct: float       # BS-user and BS-eve exponent
    alpha_bs_irs: float
    alpha_irs_rx: float       # IRS-user and IRS-eve exponent
    kappa: float              # Rician factor of the BS-IRS links

    def __post_init__(self):
        if self.L0 <= 0:
            raise ValueError("L0 must be positive")
        if min(self.alpha_direct, self.alpha_bs_irs, self.alpha_irs_rx) < 0:
            raise ValueError("path-loss exponents must be nonnegative")
        if self.kappa < 0:
            raise ValueError("Rician factor must be nonnegative")


@dataclass(frozen=True)
class NetworkGeometry:
    bs_position: np.ndarray
    user_positions: np.ndarray    # (K, 3)
    eve_position: np.ndarray
    irs_positions: np.ndarray     # (L, 3)
    user_radius: float

    @property
    def num_users(self) -> int:
        return self.user_positions.shape[0]

    @property
    def num_irs(self) -> int:
        return self.irs_positions.shape[0]


@dataclass(frozen=True)
class IrsLayout:
    element_counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.element_counts) < 1 or min(self.element_counts) < 1:
            raise ValueError("each surface needs at least one element")

    @property
    def total(self) -> int:
        return int(sum(self.element_counts))

    @property
    def offsets(self) -> list[int]:
        """Start index of each surface's block inside the stacked element axis."""
        return [0] + list(np.cumsum(self.element_counts))[:-1]


def path_loss(d: float, alpha: float, L0: float) -> float:
    """Amplitude gain sqrt(L0 * d^-alpha) at distance d meters."""
    if d <= 0:
        raise ValueError("distance must be positive")
    return float(np.sqrt(L0 * d ** (-alpha)))


def ula_steering(azimuth: float, elevation: float, n: int) -> np.ndarray:
    """Half-wavelength uniform linear array response (unit-modulus entries)."""
    phase = np.pi * np.arange(n) * np.sin(azimuth) * np.cos(elevation)
    return np.exp(1j * phase)


def upa_steering(azimuth: float, elevation: float, rows: int, cols: int) -> np.ndarray:
    """Half-wavelength uniform planar array response, row-major flattening.

    Boresight (0, 0) gives the all-ones vector.
    """
    p = np.arange(rows)[:, None]
    q = np.arange(cols)[None, :]
    phase = np.pi * (p * np.sin(elevation) + q * np.sin(azimuth) * np.cos(elevation))
    return np.exp(1j * phase).reshape(rows * cols)


def square_factorization(n: int) -> tuple[int, int]:
    """Most square rows x cols factorization of n (rows <= cols)."""
    r = int(np.floor(np.sqrt(n)))
    while n % r:
        r -= 1
    return r, n // r


def _angles(src: np.ndarray, dst: np.ndarray) -> tuple[float, float]:
    d = np.asarray(dst, float) - np.asarray(src, float)
    azimuth = float(np.arctan2(d[1], d[0]))
    elevation = float(np.arctan2(d[2], np.hypot(d[0], d[1])))
    return azimuth, elevation


@dataclass(frozen=True)
class ReflectionState:
    """Phase configuration of all N elements, with the lifted quantities."""

    phases: np.ndarray    # radians, length N

    def __post_init__(self):
        object.__setattr__(self, "phases", np.mod(np.asarray(self.phases, float), 2 * np.pi))

    @property
    def n_elements(self) -> int:
        return self.phases.size

    @property
    def u(self) -> np.ndarray:
        # u_n = e^{-j alpha_n}: the lifted vector conjugates the phase shifts
        return np.exp(-1j * self.phases)

    @property
    def u_bar(self) -> np.ndarray:
        return np.concatenate([self.u, [1.0 + 0j]])

    @property
    def U(self) -> np.ndarray:
        ub = self.u_bar
        return np.outer(ub, ub.conj())

    @property
    def theta(self) -> np.ndarray:
        return np.diag(np.exp(1j * self.phases))

    def theta_blocks(self, layout: IrsLayout) -> list[np.ndarray]:
        out, k = [], 0
        for nl in layout.element_counts:
            out.append(np.diag(np.exp(1j * self.phases[k:k + nl])))
            k += nl
        return out

    def validate(self) -> None:
        assert np.allclose(np.abs(self.u), 1.0, atol=1e-12)
        U = self.U
        assert np.allclose(np.diag(U).real, 1.0, atol=1e-12)
        assert np.allclose(U, U.conj().T, atol=1e-12)
        # rank one by construction
        ev = np.linalg.eigvalsh(U)
        assert ev[-1] >= (self.n_elements + 1) - 1e-9 and ev[0] >= -1e-9

    @classmethod
    def from_u_bar(cls, u_bar: np.ndarray) -> "ReflectionState":
        ub = np.asarray(u_bar)
        ref = ub[-1]
        if abs(ref) < 1e-12:
            ref = 1.0
        return cls(phases=-np.angle(ub[:-1] / ref))

    @classmethod
    def zeros(cls, n: int) -> "ReflectionState":
        return cls(phases=np.zeros(n))


@dataclass
class ChannelSet:
    """One realization of every link in the network."""

    H_bs_irs: list[np.ndarray]       # per surface, (N_l, M)
    h_bs_user: list[np.ndarray]      # per user, (M,)
    h_bs_eve: np.ndarray             # (M,)
    h_irs_user: list[list[np.ndarray]]   # [surface][user] -> (N_l,)
    h_irs_eve: list[np.ndarray]      # per surface, (N_l,)
    layout: IrsLayout
    # distance-based amplitude gains, kept for the secrecy-outage statistics
    L_bs_eve: float = 0.0
    L_bs_irs: tuple[float, ...] = field(default_factory=tuple)
    L_irs_eve: tuple[float, ...] = field(default_factory=tuple)

    @property
    def num_users(self) -> int:
        return len(self.h_bs_user)

    @property
    def num_antennas(self) -> int:
        return self.h_bs_eve.size

    @property
    def H_stacked(self) -> np.ndarray:
        """BS-IRS channel with all surface blocks stacked vertically, (N, M)."""
        return np.vstack(self.H_bs_irs)

    def h_irs_stacked(self, target) -> np.ndarray:
        """Stacked IRS-receiver channel (N,) for a user index or 'eve'."""
        if target == "eve":
            return np.concatenate(self.h_irs_eve)
        return np.concatenate([blocks[target] for blocks in self.h_irs_user])

    def h_direct(self, target) -> np.ndarray:
        return self.h_bs_eve if target == "eve" else self.h_bs_user[target]

    def scaled(self, factor: float) -> "ChannelSet":
        """Every channel coefficient and amplitude gain multiplied by factor."""
        return ChannelSet(
            H_bs_irs=[factor * H for H in self.H_bs_irs],
            h_bs_user=[factor * h for h in self.h_bs_user],
            h_bs_eve=factor * self.h_bs_eve,
            h_irs_user=[[factor * h for h in per_user] for per_user in self.h_irs_user],
            h_irs_eve=[factor * h for h in self.h_irs_eve],
            layout=self.layout,
            L_bs_eve=factor * self.L_bs_eve,
            L_bs_irs=tuple(factor * g for g in self.L_bs_irs),
            L_irs_eve=tuple(factor * g for g in self.L_irs_eve),
        )

    def without_irs_links(self) -> "ChannelSet":
        """Copy with every cascaded link zeroed (direct transmission only)."""
        return ChannelSet(
            H_bs_irs=[np.zeros_like(H) for H in self.H_bs_irs],
            h_bs_user=[h.copy() for h in self.h_bs_user],
            h_bs_eve=self.h_bs_eve.copy(),
            h_irs_user=[[np.zeros_like(h) for h in per_user] for per_user in self.h_irs_user],
            h_irs_eve=[np.zeros_like(h) for h in self.h_irs_eve],
            layout=self.layout,
            L_bs_eve=self.L_bs_eve,
            L_bs_irs=tuple(0.0 for _ in self.L_bs_irs),
            L_irs_eve=tuple(0.0 for _ in self.L_irs_eve),
        )

    def reorder_users(self, order: np.ndarray) -> "ChannelSet":
        return ChannelSet(
            H_bs_irs=self.H_bs_irs,
            h_bs_user=[self.h_bs_user[i] for i in order],
            h_bs_eve=self.h_bs_eve,
            h_irs_user=[[per_user[i] for i in order] for per_user in self.h_irs_user],
            h_irs_eve=self.h_irs_eve,
            layout=self.layout,
            L_bs_eve=self.L_bs_eve,
            L_bs_irs=self.L_bs_irs,
            L_irs_eve=self.L_irs_eve,
        )


def draw_channels(
    geometry: NetworkGeometry,
    layout: IrsLayout,
    pathloss: PathLossModel,
    M: int,
    seed: int,
    los_only: bool = False,
) -> ChannelSet:
    """Draw one full channel realization, reproducible per seed.

    With los_only the BS-surface blocks collapse to their deterministic LoS
    component (the kappa -> infinity limit), used for testing.
    """
    K = geometry.num_users
    L = geometry.num_irs
    if len(layout.element_counts) != L:
        raise ValueError("layout does not match the number of surfaces")

    bs = geometry.bs_position
    kap = pathloss.kappa
    los_w, nlos_w = np.sqrt(kap / (1 + kap)), np.sqrt(1 / (1 + kap))
    if los_only:
        los_w, nlos_w = 1.0, 0.0

    H_bs_irs, L_bs_irs = [], []
    for l in range(L):
        nl = layout.element_counts[l]
        d = float(np.linalg.norm(geometry.irs_positions[l] - bs))
        gain = path_loss(d, pathloss.alpha_bs_irs, pathloss.L0)
        L_bs_irs.append(gain)
        rows, cols = square_factorization(nl)
        az_rx, el_rx = _angles(geometry.irs_positions[l], bs)
        az_tx, el_tx = _angles(bs, geometry.irs_positions[l])
        a_irs = upa_steering(az_rx, el_rx, rows, cols)
        a_bs = ula_steering(az_tx, el_tx, M)
        los = np.outer(a_irs, a_bs.conj())
        nlos = _crandn(_rng(seed, "bs_irs", l), nl, M)
        H_bs_irs.append(gain * (los_w * los + nlos_w * nlos))

    h_bs_user = []
    for i in range(K):
        d = float(np.linalg.norm(geometry.user_positions[i] - bs))
        gain = path_loss(d, pathloss.alpha_direct, pathloss.L0)
        h_bs_user.append(gain * _crandn(_rng(seed, "bs_user", i), M))

    d_be = float(np.linalg.norm(geometry.eve_position - bs))
    L_bs_eve = path_loss(d_be, pathloss.alpha_direct, pathloss.L0)
    h_bs_eve = L_bs_eve * _crandn(_rng(seed, "bs_eve"), M)

    h_irs_user, h_irs_eve, L_irs_eve = [], [], []
    for l in range(L):
        nl = layout.element_counts[l]
        per_user = []
        for i in range(K):
            d = float(np.linalg.norm(geometry.user_positions[i] - geometry.irs_positions[l]))
            gain = path_loss(d, pathloss.alpha_irs_rx, pathloss.L0)
            per_user.append(gain * _crandn(_rng(seed, "irs_user", l, i), nl))
        h_irs_user.append(per_user)
        d = float(np.linalg.norm(geometry.eve_position - geometry.irs_positions[l]))
        gain = path_loss(d, pathloss.alpha_irs_rx, pathloss.L0)
        L_irs_eve.append(gain)
        h_irs_eve.append(gain * _crandn(_rng(seed, "irs_eve", l), nl))

    return ChannelSet(
        H_bs_irs=H_bs_irs,
        h_bs_user=h_bs_user,
        h_bs_eve=h_bs_eve,
        h_irs_user=h_irs_user,
        h_irs_eve=h_irs_eve,
        layout=layout,
        L_bs_eve=L_bs_eve,
        L_bs_irs=tuple(L_bs_irs),
        L_irs_eve=tuple(L_irs_eve),
    )


def combined_channel(channels: ChannelSet, reflection: ReflectionState, target) -> np.ndarray:
    """Effective row channel h_I^H Theta H_BI + h_B^H, length M."""
    if reflection.n_elements != channels.layout.total:
        raise ValueError("reflection state does not match the element layout")
    h_irs = channels.h_irs_stacked(target)
    theta = np.exp(1j * reflection.phases)
    return (h_irs.conj() * theta) @ channels.H_stacked + channels.h_direct(target).conj()


def combined_gains(channels: ChannelSet, reflection: ReflectionState) -> np.ndarray:
    """Per-user squared norms of the combined channel."""
    return np.array(
        [np.linalg.norm(combined_channel(channels, reflection, i)) ** 2
         for i in range(channels.num_users)]
    )


def relabel_users(channels: ChannelSet, reflection: ReflectionState | None = None) -> ChannelSet:
    """Reindex users so combined gains are nondecreasing under the given state.

    The decoding-order constraints assume user 1 has the weakest combined
    channel; sorting once after each draw keeps the initial point feasible.
    """
    if reflection is None:
        reflection = ReflectionState.zeros(channels.layout.total)
    order = np.argsort(combined_gains(channels, reflection), kind="stable")
    return channels.reorder_users(order)


def default_geometry(
    K: int,
    L: int,
    user_radius: float = 10.0,
    seed: int = 0,
    bs_position=(20.0, 0.0, 0.0),
    cluster_center=(20.0, 50.0, 0.0),
) -> NetworkGeometry:
    """Random user/eve drop in the cluster disk; surfaces on its right half-circle.

    Users and the eavesdropper are uniform over the disk of radius
    user_radius around the cluster center; the L surfaces sit on the circle
    itself at equispaced angles facing the BS side x > center_x.
    """
    rng = np.random.default_rng([int(seed), 7])
    center = np.asarray(cluster_center, float)

    def drop(n):
        r = user_radius * np.sqrt(rng.random(n))
        phi = 2 * np.pi * rng.random(n)
        pts = np.zeros((n, 3))
        pts[:, 0] = center[0] + r * np.cos(phi)
        pts[:, 1] = center[1] + r * np.sin(phi)
        pts[:, 2] = center[2]
        return pts

    users = drop(K)
    eve = drop(1)[0]
    angles = -np.pi / 2 + np.pi * (2 * np.arange(L) + 1) / (2 * L)
    irs = np.zeros((L, 3))
    irs[:, 0] = center[0] + user_radius * np.cos(angles)
    irs[:, 1] = center[1] + user_radius * np.sin(angles)
    irs[:, 2] = center[2]
    return NetworkGeometry(
        bs_position=np.asarray(bs_position, float),
        user_positions=users,
        eve_position=eve,
        irs_positions=irs,
        user_radius=user_radius,
    )
