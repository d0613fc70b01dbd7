"""First derivatives of the received signal with respect to the unknowns.

Analytic Jacobians are provided for both propagation models. Each one is
first formed per antenna pair (``K x N_U x N_B``) and then contracted with
the precoded symbols ``F_t x``, which keeps a T-transmission stack cheap.

:func:`finite_difference_jacobian` is the independent check; it only ever
calls a signal evaluator on perturbed scenarios.
"""

from __future__ import annotations

import enum
from dataclasses import replace
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidArgumentError
from .geometry import direction_info, rotation_derivatives
from .signal import Regime, Scenario, farfield_channel, pair_distances


class ParamBlock(enum.Enum):
    """Unknown parameter blocks, declared in their fixed global order."""

    POS_U = "p_U"
    POS_B = "p_B"
    ORI_U = "Phi_U"
    ORI_B = "Phi_B"
    GAIN_R = "beta_R"
    GAIN_I = "beta_I"

    @property
    def dimension(self) -> int:
        return 1 if self in (ParamBlock.GAIN_R, ParamBlock.GAIN_I) else 3

    @property
    def order(self) -> int:
        return list(ParamBlock).index(self)


GAIN_BLOCKS = (ParamBlock.GAIN_R, ParamBlock.GAIN_I)


def ordered_blocks(blocks: Sequence[ParamBlock]) -> list[ParamBlock]:
    """Deduplicate and sort blocks into the global order."""
    return sorted(set(blocks), key=lambda b: b.order)


def block_slices(blocks: Sequence[ParamBlock]) -> dict[ParamBlock, slice]:
    """Column range of each block when laid out in the given order."""
    out, start = {}, 0
    for b in blocks:
        out[b] = slice(start, start + b.dimension)
        start += b.dimension
    return out


def total_dimension(blocks: Sequence[ParamBlock]) -> int:
    return sum(b.dimension for b in blocks)


def _check_blocks(blocks):
    blocks = list(blocks)
    if len(set(blocks)) != len(blocks):
        raise InvalidArgumentError("duplicate parameter blocks")
    return blocks


def _rotated_derivs(node) -> np.ndarray:
    """``dQ/dangle @ S~`` for the three angles, shape 3(angle) x 3 x N."""
    return np.stack([dq @ node.array.local_coords for dq in rotation_derivatives(node.pose.angles)])


def nearfield_pair_jacobian(scenario: Scenario, blocks: Sequence[ParamBlock]) -> np.ndarray:
    """Derivative of ``beta * H`` per antenna pair, shape K x N_U x N_B."""
    blocks = _check_blocks(blocks)
    lam = scenario.channel.wavelength
    beta = scenario.channel.gain
    diff, dist = pair_distances(scenario)
    unit = diff / dist  # gradient of d_bu w.r.t. p_u
    h0 = np.exp(-2j * np.pi * dist / lam)
    dphase = (-2j * np.pi / lam) * beta * h0

    cols = []
    for blk in blocks:
        if blk is ParamBlock.POS_U:
            cols.extend(dphase * unit[k] for k in range(3))
        elif blk is ParamBlock.POS_B:
            cols.extend(-dphase * unit[k] for k in range(3))
        elif blk is ParamBlock.ORI_U:
            ds_u = _rotated_derivs(scenario.destination)  # 3 x 3 x N_U
            for i in range(3):
                dd = np.einsum("kub,ku->ub", unit, ds_u[i])
                cols.append(dphase * dd)
        elif blk is ParamBlock.ORI_B:
            ds_b = _rotated_derivs(scenario.source)  # 3 x 3 x N_B
            for i in range(3):
                dd = -np.einsum("kub,kb->ub", unit, ds_b[i])
                cols.append(dphase * dd)
        elif blk is ParamBlock.GAIN_R:
            cols.append(h0)
        elif blk is ParamBlock.GAIN_I:
            cols.append(1j * h0)
    return np.stack(cols) if cols else np.zeros((0,) + dist.shape, dtype=complex)


def farfield_pair_jacobian(scenario: Scenario, blocks: Sequence[ParamBlock]) -> np.ndarray:
    """Derivative of the plane-wave ``beta * H`` per antenna pair, K x N_U x N_B.

    The phase of pair (u, b) is ``-k (s_u^T D - s_b^T D + d)`` with D the
    unit direction from source to destination and d the centroid distance.
    """
    blocks = _check_blocks(blocks)
    src, dst = scenario.source, scenario.destination
    lam = scenario.channel.wavelength
    k = 2.0 * np.pi / lam
    beta = scenario.channel.gain
    info = direction_info(src.pose.position, dst.pose.position)
    delta, d = info.unit_vector, info.distance
    s_b = src.pose.rotation @ src.array.local_coords
    s_u = dst.pose.rotation @ dst.array.local_coords
    h0 = farfield_channel(scenario)
    dphase = -1j * k * beta * h0

    # d(Delta)/d(p_U) as a 3x3 Jacobian; the p_B version is its negative
    jac_delta = (np.eye(3) - np.outer(delta, delta)) / d

    cols = []
    for blk in blocks:
        if blk in (ParamBlock.POS_U, ParamBlock.POS_B):
            sign = 1.0 if blk is ParamBlock.POS_U else -1.0
            for c in range(3):
                ddelta = sign * jac_delta[:, c]
                dd = sign * delta[c]
                rate = (s_u.T @ ddelta)[:, None] - (s_b.T @ ddelta)[None, :] + dd
                cols.append(dphase * rate)
        elif blk is ParamBlock.ORI_U:
            ds_u = _rotated_derivs(dst)
            for i in range(3):
                cols.append(dphase * (ds_u[i].T @ delta)[:, None])
        elif blk is ParamBlock.ORI_B:
            ds_b = _rotated_derivs(src)
            for i in range(3):
                cols.append(-dphase * (ds_b[i].T @ delta)[None, :])
        elif blk is ParamBlock.GAIN_R:
            cols.append(h0)
        elif blk is ParamBlock.GAIN_I:
            cols.append(1j * h0)
    return np.stack(cols) if cols else np.zeros((0,) + h0.shape, dtype=complex)


def pair_jacobian(scenario: Scenario, blocks: Sequence[ParamBlock]) -> np.ndarray:
    if scenario.regime is Regime.NEAR:
        return nearfield_pair_jacobian(scenario, blocks)
    return farfield_pair_jacobian(scenario, blocks)


def _contract(pair_jac: np.ndarray, scenario: Scenario, t: int) -> np.ndarray:
    # K x N_U x N_B against N_B -> N_U x K
    return (pair_jac @ scenario.plan.precoded(t)).T


def nearfield_jacobian(scenario: Scenario, blocks: Sequence[ParamBlock], t: int) -> np.ndarray:
    """N_U x K Jacobian of the near-field signal at transmission ``t``."""
    if scenario.regime is not Regime.NEAR:
        raise InvalidArgumentError("scenario regime is not near-field")
    return _contract(nearfield_pair_jacobian(scenario, blocks), scenario, t)


def farfield_jacobian(scenario: Scenario, blocks: Sequence[ParamBlock], t: int) -> np.ndarray:
    """N_U x K Jacobian of the far-field signal at transmission ``t``."""
    if scenario.regime is not Regime.FAR:
        raise InvalidArgumentError("scenario regime is not far-field")
    return _contract(farfield_pair_jacobian(scenario, blocks), scenario, t)


def jacobian_stack(scenario: Scenario, blocks: Sequence[ParamBlock]) -> np.ndarray:
    """Jacobians for every transmission, shape T x N_U x K."""
    pj = pair_jacobian(scenario, blocks)
    w = np.stack([scenario.plan.precoded(t) for t in range(scenario.plan.num_transmissions)])
    return np.einsum("kub,tb->tuk", pj, w)


# ---------------------------------------------------------------------------
# finite-difference oracle


def default_steps(scenario: Scenario) -> dict[ParamBlock, float]:
    """Central-difference steps per block.

    Positions use ``1e-6 * max(1, d_BU)`` meters and angles 1e-5 rad; at
    centimeter wavelengths smaller steps are dominated by roundoff in the
    element distances. The signal is linear in the gain, so any gain step
    is exact and a large one keeps cancellation error down.
    """
    d_bu = float(np.linalg.norm(scenario.destination.pose.position - scenario.source.pose.position))
    pos = 1e-6 * max(1.0, d_bu)
    return {
        ParamBlock.POS_U: pos,
        ParamBlock.POS_B: pos,
        ParamBlock.ORI_U: 1e-5,
        ParamBlock.ORI_B: 1e-5,
        ParamBlock.GAIN_R: 1e-4,
        ParamBlock.GAIN_I: 1e-4,
    }


def _get_param(scenario: Scenario, blk: ParamBlock) -> np.ndarray:
    if blk is ParamBlock.POS_U:
        return scenario.destination.pose.position.copy()
    if blk is ParamBlock.POS_B:
        return scenario.source.pose.position.copy()
    if blk is ParamBlock.ORI_U:
        return scenario.destination.pose.angles.as_array()
    if blk is ParamBlock.ORI_B:
        return scenario.source.pose.angles.as_array()
    if blk is ParamBlock.GAIN_R:
        return np.array([scenario.channel.gain_real])
    return np.array([scenario.channel.gain_imag])


def perturbed(scenario: Scenario, blk: ParamBlock, value: np.ndarray) -> Scenario:
    """Return a copy of ``scenario`` with one parameter block replaced."""
    if blk is ParamBlock.POS_U:
        return replace(scenario, destination=scenario.destination.with_position(value))
    if blk is ParamBlock.POS_B:
        return replace(scenario, source=scenario.source.with_position(value))
    if blk is ParamBlock.ORI_U:
        return replace(scenario, destination=scenario.destination.with_angles(value))
    if blk is ParamBlock.ORI_B:
        return replace(scenario, source=scenario.source.with_angles(value))
    if blk is ParamBlock.GAIN_R:
        return scenario.with_gain(complex(float(value[0]), scenario.channel.gain_imag))
    return scenario.with_gain(complex(scenario.channel.gain_real, float(value[0])))


def finite_difference_jacobian(
    mu_evaluator: Callable[[Scenario, int], np.ndarray],
    scenario: Scenario,
    blocks: Sequence[ParamBlock],
    t: int,
    steps: dict[ParamBlock, float] | None = None,
) -> np.ndarray:
    """Central-difference Jacobian of ``mu_evaluator(scenario, t)``.

    Every scalar unknown is perturbed by +/- its block step and the signal is
    re-evaluated from scratch, so angles go back through the rotation matrix
    and positions through the antenna placement.

    Args:
        mu_evaluator: callable ``(scenario, t) -> complex N_U vector``.
        scenario: linearization point.
        blocks: ordered parameter blocks (columns of the result).
        t: transmission index.
        steps: per-block step; defaults to :func:`default_steps`.

    Returns:
        Complex N_U x K matrix.
    """
    blocks = _check_blocks(blocks)
    all_steps = default_steps(scenario)
    if steps:
        all_steps.update(steps)
    cols = []
    for blk in blocks:
        h = all_steps[blk]
        if not h > 0:
            raise InvalidArgumentError(f"step for {blk.value} must be positive")
        base = _get_param(scenario, blk)
        for i in range(blk.dimension):
            up, dn = base.copy(), base.copy()
            up[i] += h
            dn[i] -= h
            if up[i] == base[i] or dn[i] == base[i]:
                raise InvalidArgumentError(f"step {h} underflows for {blk.value}[{i}]")
            span = up[i] - dn[i]
            f_up = mu_evaluator(perturbed(scenario, blk, up), t)
            f_dn = mu_evaluator(perturbed(scenario, blk, dn), t)
            cols.append((f_up - f_dn) / span)
    return np.stack(cols, axis=1)
