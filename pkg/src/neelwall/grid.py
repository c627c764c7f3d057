"""Uniform periodic grid, Fourier multipliers, and the norms of the model.

Everything downstream (energy, profiles, operators, dynamics) is built on the
primitives here: the grid on [-L, L), the half-Laplacian multiplier |k|, the
nonlocal operator T = 1 + (-Delta)^{1/2}, spectral derivatives, and the inner
products (L2, H1, homogeneous H^{1/2}, the profile-dependent a-form and the
Z product on H1 x L2).

Phases that connect -pi/2 to +pi/2 are not periodic, so a Field may carry a
fixed wall background phi_bg(x) = arcsin(tanh x) and store only the decaying
remainder w = theta - phi_bg.  The background and its derivatives are handled
analytically; Fourier transforms only ever touch decaying quantities.

Inner products conjugate the *second* argument throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

BACKGROUND_NONE = "none"
BACKGROUND_WALL = "wall"


def wall_background(x):
    """Reference wall phase phi_bg(x) = arcsin(tanh x)."""
    return np.arcsin(np.tanh(x))


def wall_background_d1(x):
    """phi_bg'(x) = sech x."""
    return 1.0 / np.cosh(x)


def wall_background_d2(x):
    """phi_bg''(x) = -sech x tanh x."""
    return -np.tanh(x) / np.cosh(x)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-L, L) with n points (n a power of two)."""

    L: float
    n: int

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"grid half-length must be positive, got {self.L}")
        if self.n < 16 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"grid size must be a power of two >= 16, got {self.n}")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.L + self.dx * np.arange(self.n)
        x.setflags(write=False)
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Wavenumbers k_j = pi j / L in FFT ordering."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
        k.setflags(write=False)
        return k

    @cached_property
    def k_deriv(self) -> np.ndarray:
        """ik with the Nyquist mode zeroed (odd-derivative convention)."""
        kd = 1j * self.k.copy()
        kd[self.n // 2] = 0.0
        kd.setflags(write=False)
        return kd


@dataclass(frozen=True)
class Field:
    """Real function on a Grid, optionally split over the wall background.

    With ``background == "wall"`` the stored values are the remainder
    w(x) = theta(x) - arcsin(tanh x); reconstruct() returns theta itself.
    """

    grid: Grid
    values: np.ndarray
    background: str = BACKGROUND_NONE

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field samples must be finite")
        if self.background not in (BACKGROUND_NONE, BACKGROUND_WALL):
            raise ValueError(f"unknown background {self.background!r}")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.background == BACKGROUND_WALL:
            theta = self.reconstruct()
            edge = max(abs(abs(theta[0]) - np.pi / 2), abs(abs(theta[-1]) - np.pi / 2))
            if edge > 0.1:
                raise ValueError(
                    f"wall-background field does not saturate at the ends "
                    f"(edge deviation {edge:.3g} > 0.1); domain too short?"
                )

    def reconstruct(self) -> np.ndarray:
        """Full samples: remainder plus background (if any)."""
        if self.background == BACKGROUND_WALL:
            return self.values + wall_background(self.grid.x)
        return self.values

    def with_values(self, values, background=None) -> "Field":
        return Field(self.grid, values, self.background if background is None else background)


@dataclass(frozen=True)
class StateVector:
    """Pair (u, v) in H1 x L2; both components on the same grid."""

    u: Field
    v: Field

    def __post_init__(self):
        if self.u.grid != self.v.grid:
            raise ValueError("state components must share a grid")

    @property
    def grid(self) -> Grid:
        return self.u.grid


def _require_decaying(f: Field, opname: str):
    if f.background != BACKGROUND_NONE:
        raise ValueError(
            f"{opname} acts on decaying fields only; operate on the remainder "
            "or on decaying quantities like cos(theta)"
        )


def apply_multiplier(grid: Grid, values: np.ndarray, mult: np.ndarray) -> np.ndarray:
    """Apply a Fourier multiplier to real samples; returns real samples."""
    return np.real(np.fft.ifft(mult * np.fft.fft(values)))


def half_laplacian(f: Field) -> Field:
    """(-Delta)^{1/2} f via the multiplier |k|; the mean mode maps to 0."""
    _require_decaying(f, "half_laplacian")
    out = apply_multiplier(f.grid, f.values, np.abs(f.grid.k))
    return Field(f.grid, out)


def apply_T(f: Field) -> Field:
    """T f = f + (-Delta)^{1/2} f  (multiplier 1 + |k|)."""
    _require_decaying(f, "apply_T")
    out = apply_multiplier(f.grid, f.values, 1.0 + np.abs(f.grid.k))
    return Field(f.grid, out)


def derivative(f: Field, order: int = 1) -> Field:
    """Spectral derivative; wall-background derivatives enter analytically."""
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    g = f.grid
    # order 2 composes the first-derivative multiplier with itself, so the
    # Nyquist mode stays zeroed and d^2 = d o d exactly
    mult = g.k_deriv if order == 1 else np.real(g.k_deriv**2)
    out = apply_multiplier(g, f.values, mult)
    if f.background == BACKGROUND_WALL:
        out = out + (wall_background_d1(g.x) if order == 1 else wall_background_d2(g.x))
    return Field(g, out)


def shift(f: Field, s: float) -> Field:
    """Translate f(.) -> f(. + s): phase shift on the remainder, exact on the
    background."""
    if abs(s) >= f.grid.L / 2:
        raise ValueError(f"|shift| must be < L/2 = {f.grid.L / 2}, got {s}")
    g = f.grid
    shifted = np.real(np.fft.ifft(np.exp(1j * g.k * s) * np.fft.fft(f.values)))
    if f.background == BACKGROUND_WALL:
        shifted = shifted + wall_background(g.x + s) - wall_background(g.x)
    return Field(g, shifted, f.background)


# ---------------------------------------------------------------------------
# inner products / norms (second argument conjugated)


def l2_inner(grid: Grid, f, g) -> complex:
    val = grid.dx * np.sum(np.asarray(f) * np.conj(np.asarray(g)))
    return val if np.iscomplexobj(f) or np.iscomplexobj(g) else float(np.real(val))


def l2_norm(grid: Grid, f) -> float:
    return float(np.sqrt(grid.dx) * np.linalg.norm(np.asarray(f)))


def hhalf_seminorm_sq(grid: Grid, f) -> float:
    """Homogeneous H^{1/2} seminorm squared: sum |k| |fhat|^2 (Parseval
    normalized so it matches the grid quadrature)."""
    fhat = np.fft.fft(np.asarray(f))
    return float(grid.dx / grid.n * np.sum(np.abs(grid.k) * np.abs(fhat) ** 2))


def h1_inner(grid: Grid, f, g) -> complex:
    """H1 product <f,g> + <f',g'> evaluated Fourier-side with weight 1+k^2."""
    fhat = np.fft.fft(np.asarray(f))
    ghat = np.fft.fft(np.asarray(g))
    val = grid.dx / grid.n * np.sum((1.0 + grid.k**2) * fhat * np.conj(ghat))
    return val if np.iscomplexobj(f) or np.iscomplexobj(g) else float(np.real(val))


def h1_norm(grid: Grid, f) -> float:
    return float(np.sqrt(np.real(h1_inner(grid, f, f))))


def _profile_coeffs(theta_values: np.ndarray, grid: Grid):
    """s_theta = sin(theta) and c_theta = cos(theta) T(cos(theta))."""
    c = np.cos(theta_values)
    s = np.sin(theta_values)
    Tc = apply_multiplier(grid, c, 1.0 + np.abs(grid.k))
    return s, c * Tc


def a_form(grid: Grid, theta_values: np.ndarray, u, v) -> complex:
    """Profile-dependent sesquilinear form
    a[u,v] = <u',v'> + <s T(s u), v> - <c_theta u, v>."""
    u = np.asarray(u)
    v = np.asarray(v)
    s, c_th = _profile_coeffs(theta_values, grid)
    mult = 1.0 + np.abs(grid.k)
    du = np.fft.ifft(grid.k_deriv * np.fft.fft(u))
    dv = np.fft.ifft(grid.k_deriv * np.fft.fft(v))
    Tsu = np.fft.ifft(mult * np.fft.fft(s * u))
    val = grid.dx * np.sum(du * np.conj(dv) + (s * Tsu - c_th * u) * np.conj(v))
    return val if np.iscomplexobj(u) or np.iscomplexobj(v) else float(np.real(val))


def z_inner(grid: Grid, theta_values: np.ndarray, U, V) -> complex:
    """<U,V>_Z = a[u, w] + <v, z> for U = (u, v), V = (w, z)."""
    u, v = U
    w, z = V
    return a_form(grid, theta_values, u, w) + l2_inner(grid, v, z)


def state_norm(grid: Grid, u, v) -> float:
    """H1 x L2 norm of the pair (u, v)."""
    return float(np.sqrt(np.real(h1_inner(grid, u, u)) + np.real(l2_inner(grid, v, v))))


def norm(obj, kind: str, profile=None) -> float:
    """Named-norm dispatcher.

    kind in {"L2", "H1", "Hhalf_semi", "a_form", "Z"}; the last two need a
    profile (anything exposing reconstruct() or raw theta samples).
    """
    if kind in ("a_form", "Z") and profile is None:
        raise ValueError(f"kind {kind!r} requires a profile")
    if isinstance(obj, StateVector):
        g = obj.grid
        u, v = obj.u.values, obj.v.values
        if kind == "Z":
            theta = profile.reconstruct() if hasattr(profile, "reconstruct") else np.asarray(profile)
            return float(np.sqrt(np.real(z_inner(g, theta, (u, v), (u, v)))))
        if kind == "H1xL2":
            return state_norm(g, u, v)
        raise ValueError(f"kind {kind!r} not defined for StateVector")
    f = obj
    g = f.grid
    if kind == "L2":
        return l2_norm(g, f.values)
    if kind == "H1":
        return h1_norm(g, f.values)
    if kind == "Hhalf_semi":
        return float(np.sqrt(hhalf_seminorm_sq(g, f.values)))
    if kind == "a_form":
        _require_decaying(f, "a_form")
        theta = profile.reconstruct() if hasattr(profile, "reconstruct") else np.asarray(profile)
        return float(np.sqrt(np.real(a_form(g, theta, f.values, f.values))))
    raise ValueError(f"unknown norm kind {kind!r}")


# ---------------------------------------------------------------------------
# dense multiplier matrices (shared by operator assembly and solvers)


def multiplier_matrix(grid: Grid, mult: np.ndarray) -> np.ndarray:
    """Dense real matrix of a real-symmetric Fourier multiplier, built by
    applying it to the identity columns with FFTs."""
    eye = np.eye(grid.n)
    return np.real(np.fft.ifft(mult[:, None] * np.fft.fft(eye, axis=0), axis=0))


def derivative_matrix(grid: Grid) -> np.ndarray:
    return multiplier_matrix(grid, grid.k_deriv)


def second_derivative_matrix(grid: Grid) -> np.ndarray:
    return multiplier_matrix(grid, np.real(grid.k_deriv**2))


def t_matrix(grid: Grid) -> np.ndarray:
    return multiplier_matrix(grid, 1.0 + np.abs(grid.k))
