"""Few-electron clusters in an electrostatic trap and their coupled mode spectrum.

A cluster is N electrons on the helium surface sharing one trap.  The total
energy is the single-particle trap energy plus pairwise Coulomb repulsion;
equilibrium configurations come from a seeded multi-start quasi-Newton
descent, in-plane vibrational modes from the mass-scaled Hessian, and the
observable resonator pull from a classical coupled-oscillator eigenproblem
between the resonator mode and every cluster mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .analytic import zero_point_length
from .core import CONSTANTS, DomainError, PhysicalConstants, ResonatorParams, derived_resonator_quantities
from .potential import CouplingGradientMap, CouplingMapSet, PotentialField, compose

# Electrons closer than this are a modeling error, not a physical configuration.
MIN_SEPARATION = 1e-9  # m
GRAD_TOL = 1e-28  # J/m
ENERGY_RTOL = 1e-14


# ---------------------------------------------------------------------------
# energy, gradient, Hessian
# ---------------------------------------------------------------------------


def _pair_diffs(positions: np.ndarray):
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))
    return diff, dist


def _check_positions(positions) -> np.ndarray:
    pos = np.asarray(positions, dtype=float)
    if pos.ndim != 2 or pos.shape[1] != 2:
        raise DomainError("positions must have shape (N, 2)")
    return pos


def total_energy(
    field_: PotentialField,
    positions,
    constants: PhysicalConstants = CONSTANTS,
) -> float:
    """Trap plus Coulomb energy of a configuration [J].

    Raises DomainError when any electron leaves the field domain or any pair
    comes closer than MIN_SEPARATION.
    """
    pos = _check_positions(positions)
    n = pos.shape[0]
    if n == 0:
        return 0.0
    u = float(np.sum(field_.energy(pos[:, 0], pos[:, 1])))
    if n > 1:
        _, dist = _pair_diffs(pos)
        iu = np.triu_indices(n, k=1)
        if np.any(dist[iu] < MIN_SEPARATION):
            raise DomainError(f"electron pair closer than {MIN_SEPARATION} m")
        u += float(constants.coulomb * constants.e**2 * np.sum(1.0 / dist[iu]))
    return u


def _field_gradient_many(field_: PotentialField, pos: np.ndarray) -> np.ndarray:
    """dU/dr for each electron from the trap alone, shape (N, 2)."""
    if field_.kind == "analytic":
        c = field_.constants
        gx = field_._poly_dx(pos[:, 0]) - c.e * field_.e_x
        gy = field_._poly_dy(pos[:, 1]) - c.e * field_.e_y
        return np.column_stack([gx, gy])
    # gridded: vectorized central differences with the local cell size
    maps = field_.maps
    hx = np.empty(pos.shape[0])
    hy = np.empty(pos.shape[0])
    ix = np.clip(np.searchsorted(maps.x_axis, pos[:, 0], side="right") - 1, 0, maps.x_axis.size - 2)
    iy = np.clip(np.searchsorted(maps.y_axis, pos[:, 1], side="right") - 1, 0, maps.y_axis.size - 2)
    hx = maps.x_axis[ix + 1] - maps.x_axis[ix]
    hy = maps.y_axis[iy + 1] - maps.y_axis[iy]
    e = field_.constants.e
    gx = -(e / (2 * hx)) * (
        field_.evaluate(pos[:, 0] + hx, pos[:, 1]) - field_.evaluate(pos[:, 0] - hx, pos[:, 1])
    )
    gy = -(e / (2 * hy)) * (
        field_.evaluate(pos[:, 0], pos[:, 1] + hy) - field_.evaluate(pos[:, 0], pos[:, 1] - hy)
    )
    return np.column_stack([gx, gy])


def total_gradient(
    field_: PotentialField,
    positions,
    constants: PhysicalConstants = CONSTANTS,
) -> np.ndarray:
    """Gradient of the total energy, shape (N, 2) [J/m]."""
    pos = _check_positions(positions)
    n = pos.shape[0]
    if n == 0:
        return np.zeros((0, 2))
    grad = _field_gradient_many(field_, pos)
    if n > 1:
        diff, dist = _pair_diffs(pos)
        np.fill_diagonal(dist, np.inf)
        ke2 = constants.coulomb * constants.e**2
        grad = grad - ke2 * (diff / dist[:, :, None] ** 3).sum(axis=1)
    return grad


def total_hessian(
    field_: PotentialField,
    positions,
    constants: PhysicalConstants = CONSTANTS,
) -> np.ndarray:
    """Analytic 2N x 2N Hessian of the total energy [J/m^2], symmetric."""
    pos = _check_positions(positions)
    n = pos.shape[0]
    hess = np.zeros((2 * n, 2 * n))
    for i in range(n):
        hess[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] += field_.energy_hessian(pos[i])
    ke2 = constants.coulomb * constants.e**2
    for i in range(n):
        for j in range(i + 1, n):
            d = pos[i] - pos[j]
            r = float(np.hypot(d[0], d[1]))
            block = ke2 * (3.0 * np.outer(d, d) / r**5 - np.eye(2) / r**3)
            hess[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] += block
            hess[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] += block
            hess[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] -= block
            hess[2 * j : 2 * j + 2, 2 * i : 2 * i + 2] -= block
    return 0.5 * (hess + hess.T)


# ---------------------------------------------------------------------------
# minimization
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ElectronConfiguration:
    """Equilibrium candidate: positions (N, 2) [m], energy [J], the gradient
    norm at exit [J/m], and the monotone accepted-energy history of the
    winning descent run."""

    positions: np.ndarray
    energy: float
    gradient_norm: float
    converged: bool
    iterations: int
    restarts_used: int
    energy_history: tuple = ()


def _safe_value_grad(field_, constants):
    def value_grad(x: np.ndarray):
        pos = x.reshape(-1, 2)
        try:
            f = total_energy(field_, pos, constants)
            g = total_gradient(field_, pos, constants).ravel()
        except DomainError:
            return math.inf, None
        if not math.isfinite(f):
            return math.inf, None
        return f, g

    return value_grad


def _bfgs(value_grad, x0: np.ndarray, max_iter: int, step_cap: float):
    """Quasi-Newton descent with Armijo backtracking.

    Returns (x, f, gnorm, history, stalled) where history is the sequence of
    accepted energies (strictly non-increasing) and stalled marks exit via
    the relative-energy criterion rather than the gradient norm.
    """
    f, g = value_grad(x0)
    if g is None:
        return x0, math.inf, math.inf, (), False
    x = x0.copy()
    n = x.size
    hinv = None  # set after curvature information exists
    history = [f]
    stalled = False
    for _ in range(max_iter):
        gnorm = float(np.linalg.norm(g))
        if gnorm < GRAD_TOL:
            break
        p = -g if hinv is None else -(hinv @ g)
        descent = float(p @ g)
        if descent >= 0:
            hinv = None
            p = -g
            descent = -float(g @ g)
        plen = float(np.linalg.norm(p))
        if plen > step_cap:
            p = p * (step_cap / plen)
            descent = float(p @ g)
        t = 1.0
        accepted = False
        for _bt in range(60):
            fn, gn = value_grad(x + t * p)
            if gn is not None and fn <= f + 1e-4 * t * descent:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            stalled = True
            break
        s = t * p
        yv = gn - g
        drop = f - fn
        x = x + s
        f, g = fn, gn
        history.append(f)
        sy = float(s @ yv)
        if sy > 0:
            if hinv is None:
                hinv = np.eye(n) * (sy / float(yv @ yv))
            rho = 1.0 / sy
            left = np.eye(n) - rho * np.outer(s, yv)
            hinv = left @ hinv @ left.T + rho * np.outer(s, s)
        if drop <= ENERGY_RTOL * max(abs(f), 1e-300):
            stalled = True
            break
    gnorm = float(np.linalg.norm(g))
    return x, f, gnorm, tuple(history), stalled


def _newton_polish(field_, constants, x: np.ndarray, max_steps: int = 12):
    """Drive the gradient norm toward rounding floor with damped Newton steps."""
    value_grad = _safe_value_grad(field_, constants)
    f, g = value_grad(x)
    if g is None:
        return x, math.inf, math.inf
    gnorm = float(np.linalg.norm(g))
    for _ in range(max_steps):
        if gnorm < GRAD_TOL:
            break
        hess = total_hessian(field_, x.reshape(-1, 2), constants)
        lam = 0.0
        improved = False
        for _attempt in range(8):
            try:
                step = np.linalg.solve(hess + lam * np.eye(hess.shape[0]), -g)
            except np.linalg.LinAlgError:
                lam = max(lam * 10.0, 1e-12 * float(np.abs(hess).max()))
                continue
            fn, gn = value_grad(x + step)
            if gn is not None and float(np.linalg.norm(gn)) < gnorm:
                x = x + step
                f, g = fn, gn
                gnorm = float(np.linalg.norm(gn))
                improved = True
                break
            lam = max(lam * 10.0, 1e-12 * float(np.abs(hess).max()))
        if not improved:
            break
    return x, f, gnorm


def _triangular_lattice(center: np.ndarray, spacing: float, n: int) -> np.ndarray:
    """First n sites of a triangular lattice around center, nearest first."""
    sites = []
    reach = max(2, int(math.ceil(math.sqrt(n))) + 2)
    for row in range(-reach, reach + 1):
        for col in range(-reach, reach + 1):
            x = (col + 0.5 * (row % 2)) * spacing
            y = row * spacing * math.sqrt(3.0) / 2.0
            sites.append((x * x + y * y, x, y))
    sites.sort()
    picked = np.array([[x, y] for _, x, y in sites[:n]])
    return picked + center[None, :]


def _scan_minimum(field_: PotentialField, region: tuple, samples: int = 61) -> np.ndarray:
    x0, x1, y0, y1 = region
    xs = np.linspace(x0, x1, samples)
    ys = np.linspace(y0, y1, samples)
    xx, yy = np.meshgrid(xs, ys)
    u = np.asarray(field_.energy(xx, yy))
    iy, ix = np.unravel_index(int(np.argmin(u)), u.shape)
    return np.array([xs[ix], ys[iy]])


def _auto_region(field_: PotentialField, scan_halfwidth: float) -> tuple:
    if field_.kind == "gridded":
        x0, x1, y0, y1 = field_.maps.domain
        # stay one cell inside so derivative stencils remain valid
        dx = float(np.max(np.diff(field_.maps.x_axis)))
        dy = float(np.max(np.diff(field_.maps.y_axis)))
        return (x0 + dx, x1 - dx, y0 + dy, y1 - dy)
    w = scan_halfwidth
    return (-w, w, -w, w)


def minimize(
    field_: PotentialField,
    n_electrons: int,
    seed: int = 0,
    restarts: int = 8,
    init: np.ndarray | None = None,
    max_iter: int = 500,
    scan_halfwidth: float = 2e-6,
    constants: PhysicalConstants = CONSTANTS,
) -> ElectronConfiguration:
    """Find the minimum-energy configuration of n_electrons in the trap.

    Deterministic for a given (field, n_electrons, seed): the descent is
    seeded multi-start (``restarts`` runs) around a triangular-lattice guess
    centered on the scanned trap minimum, or around ``init`` when given.
    The best run wins by convergence then energy.
    """
    if n_electrons < 0:
        raise DomainError("n_electrons must be >= 0")
    if n_electrons == 0:
        return ElectronConfiguration(
            positions=np.zeros((0, 2)), energy=0.0, gradient_norm=0.0,
            converged=True, iterations=0, restarts_used=0,
        )
    region = _auto_region(field_, scan_halfwidth)
    span = min(region[1] - region[0], region[3] - region[2])
    if init is not None:
        base = _check_positions(init).copy()
    else:
        center = _scan_minimum(field_, region)
        hess = field_.energy_hessian(center)
        curv = float(np.trace(hess)) / 2.0
        if curv <= 0:
            curv = abs(float(np.trace(hess))) / 2.0 or 1e-12
        spacing = (constants.coulomb * constants.e**2 / curv) ** (1.0 / 3.0)
        spacing = float(np.clip(spacing, span / 50.0, span / 4.0))
        base = _triangular_lattice(center, spacing, n_electrons)
    base[:, 0] = np.clip(base[:, 0], region[0], region[1])
    base[:, 1] = np.clip(base[:, 1], region[2], region[3])

    value_grad = _safe_value_grad(field_, constants)
    rng = np.random.default_rng(seed)
    scale = 0.25 * (span / 10.0 if n_electrons == 1 else
                    float(np.ptp(base, axis=0).max()) or span / 10.0)
    best = None
    for r in range(max(1, restarts)):
        start = base.copy()
        if r > 0:
            start = start + rng.normal(0.0, scale, size=start.shape)
            start[:, 0] = np.clip(start[:, 0], region[0], region[1])
            start[:, 1] = np.clip(start[:, 1], region[2], region[3])
        x, f, gnorm, history, stalled = _bfgs(
            value_grad, start.ravel(), max_iter, step_cap=span / 2.0
        )
        if not math.isfinite(f):
            continue
        if gnorm >= GRAD_TOL:
            x, f, gnorm = _newton_polish(field_, constants, x)
        converged = gnorm < GRAD_TOL or stalled
        candidate = ElectronConfiguration(
            positions=x.reshape(-1, 2), energy=f, gradient_norm=gnorm,
            converged=converged, iterations=len(history) - 1,
            restarts_used=r + 1, energy_history=history,
        )
        if best is None or (candidate.converged, -candidate.energy) > (
            best.converged, -best.energy
        ):
            best = candidate
    if best is None:
        raise DomainError("no finite-energy configuration found; check the trap region")
    return best


# ---------------------------------------------------------------------------
# normal modes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NormalModes:
    """In-plane vibrational modes: angular frequencies ascending [rad/s],
    orthonormal eigenvectors as columns (2N x 2N), and saddle diagnostics."""

    frequencies: np.ndarray
    eigenvectors: np.ndarray
    is_saddle: bool
    metadata: dict = field(default_factory=dict)


def normal_modes(
    field_: PotentialField,
    config: ElectronConfiguration,
    constants: PhysicalConstants = CONSTANTS,
) -> NormalModes:
    """Diagonalize the Hessian at an equilibrium: omega_k = sqrt(lambda_k / m_e).

    A configuration with a negative Hessian eigenvalue is a saddle; its
    unstable frequencies are reported as imaginary magnitudes in metadata
    and excluded from ``frequencies``.
    """
    n = config.positions.shape[0]
    if n == 0:
        return NormalModes(np.zeros(0), np.zeros((0, 0)), False)
    hess = total_hessian(field_, config.positions, constants)
    evals, evecs = np.linalg.eigh(hess)
    tol = 1e-10 * max(float(np.abs(evals).max()), 1e-300)
    unstable = evals < -tol
    freqs = np.sqrt(np.clip(evals, 0.0, None) / constants.m_e)
    meta = {}
    if np.any(unstable):
        meta["unstable_frequencies"] = tuple(
            float(math.sqrt(-ev / constants.m_e)) for ev in evals[unstable]
        )
    return NormalModes(
        frequencies=freqs,
        eigenvectors=evecs,
        is_saddle=bool(np.any(unstable)),
        metadata=meta,
    )


# ---------------------------------------------------------------------------
# coupled resonator-cluster spectrum
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoupledModes:
    """Hybridized resonator + cluster spectrum.

    frequencies ascending [rad/s]; participations: squared resonator weight
    of each hybrid mode (sums to 1); shift: frequency of the most
    resonator-like mode minus the bare resonator [rad/s]; mode_couplings:
    per-cluster-mode coupling rates g_k [rad/s].
    """

    frequencies: np.ndarray
    participations: np.ndarray
    shift: float
    mode_couplings: np.ndarray


def electron_couplings(
    config: ElectronConfiguration,
    res: ResonatorParams,
    gradient_map: CouplingGradientMap,
    constants: PhysicalConstants = CONSTANTS,
) -> np.ndarray:
    """Per-electron coupling rates g_i [rad/s] at the equilibrium positions.

    g_i = (e / hbar) l_y(omega_r) V_zpf (d alpha-/dy)(r_i): the vertical
    zero-point dipole of electron i against the local differential lever arm.
    """
    omega_r, _z, v_zpf = derived_resonator_quantities(res, constants)
    l_y = zero_point_length(float(omega_r), constants)
    grads = np.atleast_1d(
        gradient_map.value_at(config.positions[:, 0], config.positions[:, 1])
    )
    return (constants.e / constants.hbar) * l_y * v_zpf * np.asarray(grads, dtype=float)


def coupled_spectrum(
    modes: NormalModes,
    config: ElectronConfiguration,
    res: ResonatorParams,
    gradient_map: CouplingGradientMap,
    constants: PhysicalConstants = CONSTANTS,
) -> CoupledModes:
    """Classical hybridization of the resonator with every cluster mode.

    Symmetric eigenproblem in squared-frequency space: diagonal
    (omega_r^2, omega_k^2), off-diagonal 2 g_k sqrt(omega_r omega_k) between
    the resonator and mode k, where g_k projects the per-electron couplings
    onto the y components of mode k's eigenvector.  With zero couplings the
    spectrum reduces exactly to (omega_r, omega_k).
    """
    if modes.is_saddle:
        raise DomainError("coupled spectrum undefined at a saddle configuration")
    omega_r = res.omega_r
    n_modes = modes.frequencies.size
    if n_modes == 0:
        return CoupledModes(
            frequencies=np.array([omega_r]), participations=np.array([1.0]),
            shift=0.0, mode_couplings=np.zeros(0),
        )
    g_i = electron_couplings(config, res, gradient_map, constants)
    y_components = modes.eigenvectors[1::2, :]  # rows: electron y coords
    g_k = y_components.T @ g_i
    size = n_modes + 1
    mat = np.zeros((size, size))
    mat[0, 0] = omega_r**2
    for k in range(n_modes):
        mat[k + 1, k + 1] = modes.frequencies[k] ** 2
        coupling = 2.0 * g_k[k] * math.sqrt(omega_r * modes.frequencies[k])
        mat[0, k + 1] = mat[k + 1, 0] = coupling
    evals, evecs = np.linalg.eigh(mat)
    if evals[0] <= 0:
        raise DomainError("coupled spectrum collapsed: non-positive squared frequency")
    freqs = np.sqrt(evals)
    participations = evecs[0, :] ** 2
    shift = float(freqs[int(np.argmax(participations))] - omega_r)
    return CoupledModes(
        frequencies=freqs, participations=participations,
        shift=shift, mode_couplings=g_k,
    )


# ---------------------------------------------------------------------------
# voltage sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ShiftSweepRow:
    electrode: str
    voltage: float
    shift: float  # rad/s
    mode_frequencies: tuple  # rad/s
    converged: bool


def shift_vs_voltage_sweep(
    maps: CouplingMapSet,
    base_voltages: dict,
    electrode: str,
    voltages: Sequence[float],
    n_electrons: int,
    res: ResonatorParams,
    gradient_map: CouplingGradientMap | None = None,
    e_x: float = 0.0,
    e_y: float = 0.0,
    seed: int = 0,
    restarts: int = 8,
    warm_start: bool = True,
    constants: PhysicalConstants = CONSTANTS,
) -> list:
    """Resonator shift and cluster mode frequencies along one electrode sweep.

    Warm-start mode re-minimizes from the previous point's configuration
    (restarts collapse to 1 after the first voltage); with warm_start=False
    every point runs the full seeded multi-start independently.
    """
    if electrode not in maps.electrodes:
        raise DomainError(f"unknown sweep electrode {electrode!r}")
    if gradient_map is None:
        gradient_map = maps.resonator_gradient
    if gradient_map is None:
        raise DomainError("no resonator gradient map available for coupling")
    rows = []
    prev_positions = None
    for i, volt in enumerate(voltages):
        volts = dict(base_voltages)
        volts[electrode] = float(volt)
        field_ = compose(maps, volts, e_x=e_x, e_y=e_y)
        use_warm = warm_start and prev_positions is not None
        config = minimize(
            field_, n_electrons, seed=seed,
            restarts=1 if use_warm else restarts,
            init=prev_positions if use_warm else None,
            constants=constants,
        )
        modes = normal_modes(field_, config, constants)
        coupled = coupled_spectrum(modes, config, res, gradient_map, constants)
        rows.append(
            ShiftSweepRow(
                electrode=electrode,
                voltage=float(volt),
                shift=coupled.shift,
                mode_frequencies=tuple(float(f) for f in modes.frequencies),
                converged=config.converged and not modes.is_saddle,
            )
        )
        prev_positions = config.positions if warm_start else None
    return rows
