"""Linearized operators: assembly, weighted geometry, zero modes, projectors.

Oracles:
  * L equals the Jacobian of the discrete energy gradient (central
    finite differences of grad_energy).
  * B_c = A_c - A equals the directly assembled difference operator S.
  * The weighted operator norm matches a dense SVD of the conjugated
    matrix.
"""
from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg as sla

from neelwall.energy import grad_energy
from neelwall.grid import Grid, derivative, h1_norm, l2_norm
from neelwall.linops import (
    DiscretizedOperator, a_perp_inverse_factory, build_Bc, build_L, build_Lc,
    build_block, lperp_inverse_factory, null_pair, operator_norm,
    projector_matrix, s_matrix_direct, static_projector_matrix,
    translation_mode, weighted_state_norm,
)
from conftest import smooth_random


def test_L_is_gradient_jacobian(static256, L_op256):
    g = static256.grid
    u = smooth_random(g, seed=1)
    eps = 1e-6
    gp = grad_energy(static256.theta.with_values(static256.theta.values + eps * u)).values
    gm = grad_energy(static256.theta.with_values(static256.theta.values - eps * u)).values
    fd = (gp - gm) / (2 * eps)
    lin = L_op256.matrix @ u
    assert l2_norm(g, fd - lin) / l2_norm(g, lin) <= 1e-6


def test_L_symmetric(L_op256):
    M = L_op256.matrix
    assert np.max(np.abs(M - M.T)) <= 1e-10


def test_Lc_reduces_to_L(static256, L_op256):
    Lc = build_Lc(static256)       # c = 0, H = 0
    assert np.allclose(Lc.matrix, L_op256.matrix, atol=1e-12)


def test_build_L_requires_static(traveling256):
    with pytest.raises(ValueError):
        build_L(traveling256)


def test_operator_shapes_and_validation(static256, A_op256):
    g = static256.grid
    assert A_op256.matrix.shape == (2 * g.n, 2 * g.n)
    with pytest.raises(ValueError):
        DiscretizedOperator("bogus", np.eye(4), g, 1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        DiscretizedOperator("A", np.eye(g.n), g, 1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        build_block(static256, nu=-1.0)


def test_block_structure(static256, A_op256):
    n = static256.grid.n
    M = A_op256.matrix
    assert np.allclose(M[:n, :n], 0.0)
    assert np.allclose(M[:n, n:], np.eye(n))
    assert np.allclose(M[n:, n:], -A_op256.nu * np.eye(n))


def test_Bc_matches_direct_assembly(traveling256, static256):
    Bc = build_Bc(traveling256, static256)
    n = static256.grid.n
    S = s_matrix_direct(traveling256, static256)
    # bottom-left block of B_c is -S; top row vanishes except 2c d_z
    assert np.max(np.abs(Bc.matrix[n:, :n] + S)) <= 1e-12
    assert np.max(np.abs(Bc.matrix[:n, :])) == 0.0
    assert operator_norm(Bc) <= 100 * abs(traveling256.c)


def test_weighted_norm_matches_state_norm(grid256):
    u = smooth_random(grid256, seed=2)
    v = smooth_random(grid256, seed=3)
    U = np.concatenate([u, v])
    assert weighted_state_norm(grid256, U) == pytest.approx(
        np.hypot(h1_norm(grid256, u), l2_norm(grid256, v)), rel=1e-12)


def test_operator_norm_matches_dense_svd(static256, A_op256):
    # weighted operator norm = largest singular value of the conjugated
    # matrix, which in turn bounds the Rayleigh quotient on random states
    sigma = operator_norm(A_op256)
    dense = sla.svdvals(A_op256.weighted_matrix)[0]
    # power iteration stagnates on the clustered top of the spectrum;
    # per-mille agreement is all it promises
    assert sigma == pytest.approx(dense, rel=5e-3)
    g = static256.grid
    U = np.concatenate([smooth_random(g, seed=4), smooth_random(g, seed=5)])
    assert weighted_state_norm(g, A_op256.matrix @ U) <= \
        sigma * weighted_state_norm(g, U) * (1 + 1e-10)


def test_translation_mode_near_null(static256, L_op256):
    v = translation_mode(L_op256)
    g = static256.grid
    # near-null: relative defect equals the near-zero eigenvalue, which is
    # set by the domain truncation (~2e-6 at n = 256, ~1e-8 at n = 2048)
    assert l2_norm(g, L_op256.matrix @ v) / l2_norm(g, v) <= 1e-5
    # aligned with the profile derivative
    dth = derivative(static256.theta, 1).values
    cosine = np.dot(v, dth) / (np.linalg.norm(v) * np.linalg.norm(dth))
    assert cosine >= 1 - 1e-4


def test_null_pair_and_projector(Ac_op256):
    pair = null_pair(Ac_op256)
    g = pair.grid
    assert abs(pair.lambda0) <= 1e-5
    assert abs(pair.lambda_next) > 10 * abs(pair.lambda0)
    assert pair.overlap != 0.0
    # weighted defect of the right eigenvector equals |lambda0|
    defect = weighted_state_norm(g, Ac_op256.matrix @ pair.right)
    assert defect / weighted_state_norm(g, pair.right) <= 1e-5
    P = projector_matrix(pair)
    # complement projector: annihilates the zero mode, idempotent,
    # commutes with A_c
    assert np.max(np.abs(P @ pair.right)) <= 1e-10
    assert np.max(np.abs(P @ P - P)) <= 1e-10
    comm = P @ Ac_op256.matrix - Ac_op256.matrix @ P
    assert np.max(np.abs(comm)) <= 1e-8


def test_static_projector(static256):
    P = static_projector_matrix(static256, nu=1.0)
    g = static256.grid
    dth = derivative(static256.theta, 1).values
    theta0 = np.concatenate([dth, np.zeros(g.n)])
    assert np.max(np.abs(P @ theta0)) <= 1e-12
    assert np.max(np.abs(P @ P - P)) <= 1e-10


def test_lperp_inverse(static256, L_op256):
    apply_inv, zero_vec = lperp_inverse_factory(L_op256)
    g = static256.grid
    f = smooth_random(g, seed=6)
    f = f - np.dot(f, zero_vec) * zero_vec
    u = apply_inv(f)
    back = L_op256.matrix @ u
    back = back - np.dot(back, zero_vec) * zero_vec
    assert l2_norm(g, back - f) / l2_norm(g, f) <= 1e-6


def test_a_perp_inverse_right_inverse(static256, L_op256, A_op256):
    # right inverse only on the range of the translation-mode projector;
    # accuracy is limited by the angle between the discrete zero mode and
    # the profile derivative (~1e-3 at n = 256)
    g = static256.grid
    apply_inv = a_perp_inverse_factory(L_op256, static256)
    P = static_projector_matrix(static256, nu=1.0)
    U = P @ np.concatenate([smooth_random(g, seed=7), smooth_random(g, seed=8)])
    back = A_op256.matrix @ apply_inv(U)
    assert weighted_state_norm(g, back - U) / weighted_state_norm(g, U) <= 5e-3


def test_null_pair_requires_block(L_op256):
    with pytest.raises(ValueError):
        null_pair(L_op256)
