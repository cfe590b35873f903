"""Pointwise Laplacian via the matrix field and the IBP defect.

On the gasket part the Laplacian of a C^2 field is the trace of its
Hessian against the normalized cylinder density tau/kappa; on a cable it
is the second derivative along the cable direction, the trace against
the rank-one projection.  Both densities have unit trace, so the
Laplacian is bounded by twice the Hessian sup.

The integration-by-parts defect pairs the assembled depth form with the
discretized integral of (Laplacian of phi) times v against the depth
measure.  Both sides carry the same depth-window weights: the cable
integrals then cancel edge by edge and every interior vertex boundary
term vanishes by harmonicity, leaving only the within-cell variation of
the gasket integrand.  That defect decays geometrically with depth and
vanishes to rounding for affine phi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import _tableau, energy_total, get_quadrature
from .geometry import (
    HARMONIC_RATIO,
    EdgeId,
    barycenter,
    cable_prefactor,
    cable_segments,
    compose,
    word_point,
    word_table,
)
from .kusuoka import CableMass, cable_mass, gibbs_tau, tau_table
from .params import DEFAULT_CONSTANTS, Constants, ParamSeq
from .scalarfield import Poly2, corner_values, eval_full, hess_batch, vanishes_at_corners


@dataclass(frozen=True, eq=False)
class LaplacianSample:
    """Laplacian value at one carrier with its unit-trace density matrix."""

    location: np.ndarray
    carrier: object
    t_tilde: np.ndarray
    value: float


def _hessian_trace(t_tilde: np.ndarray, phi: Poly2, at: np.ndarray) -> float:
    ev = eval_full(phi, at)
    h = ev.hessian
    return float(
        t_tilde[0, 0] * h[0, 0] + 2.0 * t_tilde[0, 1] * h[0, 1] + t_tilde[1, 1] * h[1, 1]
    )


def teplyaev(
    phi: Poly2,
    carrier,
    seq: ParamSeq,
    constants: Constants = DEFAULT_CONSTANTS,
    beta_over_alpha: float = HARMONIC_RATIO,
) -> LaplacianSample:
    """Laplacian sample tr(T~ . Hessian phi) at a carrier's representative.

    A word tuple names a gasket cylinder (density tau/kappa at the cell
    barycenter image); a CableMass or a cable EdgeId names a cable
    (density: projection onto the cable direction, at the midpoint).
    """
    if isinstance(carrier, tuple) and all(isinstance(i, int) for i in carrier):
        cm = gibbs_tau(seq, carrier, beta_over_alpha)
        if cm.kappa < 1e-300:
            raise ArithmeticError(f"cylinder mass underflow at word {carrier}")
        t_tilde = cm.tau / cm.kappa
        location = word_point(seq, carrier, beta_over_alpha)
    else:
        if isinstance(carrier, EdgeId):
            if carrier.kind != "cable":
                raise ValueError("triangle edges are not measure carriers")
            carrier = cable_mass(
                seq, carrier.word, carrier.generation, carrier.slot, constants, beta_over_alpha
            )
        if not isinstance(carrier, CableMass):
            raise TypeError(f"carrier must be a word tuple, CableMass, or cable EdgeId, got {carrier!r}")
        t_tilde = carrier.projection
        seg = cable_segments(seq, carrier.generation, beta_over_alpha)[carrier.slot - 1]
        location = compose(seq, carrier.prefix, beta_over_alpha)(seg.point(0.5))
    return LaplacianSample(location, carrier, t_tilde, _hessian_trace(t_tilde, phi, location))


def _gasket_hessian_sum(seq, depth, phi, v, constants, beta_over_alpha) -> list[float]:
    """Per-word <Hessian phi(x_w), tau_w> v(x_w), scaled to the form constant.

    The triangle-edge measure of one cell totals 3a tau_w (three unit
    side-projections sum to (3/2) Id), so pairing Hessians directly with
    3a tau avoids dividing by small kappa.
    """
    lin, off = word_table(seq, depth, beta_over_alpha)
    centers = np.einsum("wab,b->wa", lin, barycenter()) + off
    xs, ys = centers[:, 0], centers[:, 1]
    hxx, hxy, hyy = hess_batch(phi, xs, ys)
    taus = tau_table(seq, depth, beta_over_alpha)
    pair = taus[:, 0, 0] * hxx + 2.0 * taus[:, 0, 1] * hxy + taus[:, 1, 1] * hyy
    vals = 3.0 * constants.a * pair * v.eval_batch(xs, ys)
    return vals.tolist()


def _cable_second_derivative_sum(seq, depth, phi, v, quad, constants, beta_over_alpha) -> list[float]:
    """Per-generation integrals of (phi o z)'' (v o z) with depth-window weights."""
    tab = _tableau(seq, depth, beta_over_alpha)
    out: list[float] = []
    ts = quad.nodes
    for s in range(1, depth + 1):
        p0, dv = tab.cab_p0[s - 1], tab.cab_dv[s - 1]
        xs = p0[:, 0][:, None] + dv[:, 0][:, None] * ts[None, :]
        ys = p0[:, 1][:, None] + dv[:, 1][:, None] * ts[None, :]
        hxx, hxy, hyy = hess_batch(phi, xs, ys)
        dx = dv[:, 0][:, None]
        dy = dv[:, 1][:, None]
        dd = hxx * dx * dx + 2.0 * hxy * dx * dy + hyy * dy * dy
        vals = (dd * v.eval_batch(xs, ys)) @ quad.weights
        pf = cable_prefactor(seq, s, depth, constants)
        out.extend((pf * vals).tolist())
    return out


def ibp_residual(
    seq: ParamSeq,
    phi: Poly2,
    v: Poly2,
    depth: int,
    quad=None,
    constants: Constants = DEFAULT_CONSTANTS,
    beta_over_alpha: float = HARMONIC_RATIO,
) -> float:
    """| E_depth(phi, v) + integral of (Laplacian phi) v d(mu_depth) |.

    v must vanish at the three base corners.  The measure side sums the
    Hessian-cylinder pairings at cell barycenters and the exact cable
    line integrals, both under the depth-window weights of the form on
    the energy side, so the two sides share one resolution.
    """
    if not vanishes_at_corners(v):
        raise ValueError(f"test function must vanish at A, B, C; corner values {corner_values(v)}")
    quad = quad or get_quadrature()
    lhs = energy_total(seq, depth, phi, v, quad, constants, beta_over_alpha=beta_over_alpha).total
    rhs = math.fsum(
        _gasket_hessian_sum(seq, depth, phi, v, constants, beta_over_alpha)
        + _cable_second_derivative_sum(seq, depth, phi, v, quad, constants, beta_over_alpha)
    )
    return abs(lhs + rhs)


def ibp_table(
    seq: ParamSeq,
    phi: Poly2,
    v: Poly2,
    depths=range(3, 9),
    quad=None,
    constants: Constants = DEFAULT_CONSTANTS,
    beta_over_alpha: float = HARMONIC_RATIO,
) -> list[dict]:
    """Rows (depth, energy_lhs, integral_rhs, residual) over a depth sweep."""
    if not vanishes_at_corners(v):
        raise ValueError(f"test function must vanish at A, B, C; corner values {corner_values(v)}")
    quad = quad or get_quadrature()
    rows = []
    for depth in depths:
        lhs = energy_total(seq, depth, phi, v, quad, constants, beta_over_alpha=beta_over_alpha).total
        rhs = math.fsum(
            _gasket_hessian_sum(seq, depth, phi, v, constants, beta_over_alpha)
            + _cable_second_derivative_sum(seq, depth, phi, v, quad, constants, beta_over_alpha)
        )
        rows.append(
            {"depth": depth, "energy_lhs": lhs, "integral_rhs": rhs, "residual": abs(lhs + rhs)}
        )
    return rows


def laplacian_samples(
    seq: ParamSeq,
    phi: Poly2,
    depth: int,
    constants: Constants = DEFAULT_CONSTANTS,
    beta_over_alpha: float = HARMONIC_RATIO,
) -> list[LaplacianSample]:
    """Samples on every depth-level cylinder and all cables up to depth."""
    from .geometry import iter_words

    out = [teplyaev(phi, w, seq, constants, beta_over_alpha) for w in iter_words(depth)]
    for s in range(1, depth + 1):
        for prefix in iter_words(s - 1):
            for slot in (1, 2, 3):
                cm = cable_mass(seq, prefix, s, slot, constants, beta_over_alpha)
                out.append(teplyaev(phi, cm, seq, constants, beta_over_alpha))
    return out
