"""Dirichlet energy forms on the pre-fractals and their limits.

The depth-l form is a weighted sum of line energies over all edges of the
depth-l pre-fractal:

  * every triangle edge of the 3^l cells carries a / lam_tilde(l);
  * every generation-s cable carries b / (lam_tilde(s-1) * eps_tilde(s,l)
    * (1 - eps_s)).

Integrands are derivatives along mapped segments of polynomial fields, so
each line integral is a polynomial in the curve parameter and the default
order-8 Gauss rule is exact up to total degree 8 inputs.  Edge sums are
accumulated in canonical enumeration order with exact compensated
summation (math.fsum).

The limit cable form replaces the finite window product eps_tilde(s, l)
with the infinite one and is reported together with a rigorous tail bound.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCable
from .geometry import (
    HARMONIC_RATIO,
    AffineMap2,
    EdgeId,
    Segment,
    cable_prefactor,
    cable_prefactor_limit,
    cable_segments,
    iter_cables,
    prefractal_edges,
    triangle_edge_prefactor,
    triple,
    word_table,
    SIDE_NAMES,
    _SIDE_ENDPOINTS,
)
from .params import DEFAULT_CONSTANTS, Constants, ParamSeq
from .scalarfield import Poly2, compose_with_segment, grad_batch, poly1_derivative, poly1_eval, sup_bounds

DEFAULT_QUAD_ORDER = 8


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Legendre rule on [0,1], exact for degree <= 2n-1."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss(cls, order: int = DEFAULT_QUAD_ORDER) -> "QuadratureRule":
        if order < 1:
            raise ValueError(f"quadrature order must be >= 1, got {order}")
        x, w = np.polynomial.legendre.leggauss(order)
        nodes = 0.5 * (x + 1.0)
        weights = 0.5 * w
        rule = cls(order, nodes, weights)
        rule._verify()
        nodes.flags.writeable = False
        weights.flags.writeable = False
        return rule

    def _verify(self):
        # Monomial exactness check on every degree the rule claims.
        for k in range(2 * self.order):
            got = float(self.weights @ self.nodes**k)
            want = 1.0 / (k + 1)
            if abs(got - want) > 5e-14:
                raise ValueError(
                    f"quadrature self-check failed at degree {k}: {got} vs {want}"
                )

    def integrate_values(self, values: np.ndarray) -> float:
        return float(values @ self.weights)


@functools.lru_cache(maxsize=16)
def get_quadrature(order: int = DEFAULT_QUAD_ORDER) -> QuadratureRule:
    return QuadratureRule.gauss(order)


@dataclass(frozen=True)
class EnergyReport:
    """Assembled depth-l energy: triangle part, cable part, their sum."""

    depth: int
    e1: float
    e2: float
    total: float
    per_edge: tuple[tuple[EdgeId, float], ...] | None = None


def segment_pairing(
    u: Poly2,
    v: Poly2,
    amap: AffineMap2,
    seg: Segment,
    quad: QuadratureRule | None = None,
) -> float:
    """Line energy of one edge: integral over [0,1] of (u o z)' (v o z)'.

    z is the mapped segment t -> amap(seg(t)).  This is the reference
    per-edge path; the assembled forms use an equivalent batched
    evaluation and tests cross-check the two.
    """
    quad = quad or get_quadrature()
    du = poly1_derivative(compose_with_segment(u, amap, seg))
    dv = poly1_derivative(compose_with_segment(v, amap, seg))
    return quad.integrate_values(poly1_eval(du, quad.nodes) * poly1_eval(dv, quad.nodes))


# -- batched edge tableaus -------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Tableau:
    """Start points and velocities of all edges of a depth-l pre-fractal."""

    depth: int
    tri_p0: np.ndarray  # (3*3^l, 2) word-major, sides AB, BC, AC
    tri_dv: np.ndarray
    cab_p0: tuple[np.ndarray, ...]  # per generation s=1..l: (3*3^(s-1), 2)
    cab_dv: tuple[np.ndarray, ...]


@functools.lru_cache(maxsize=64)
def _tableau(seq: ParamSeq, l: int, beta_over_alpha: float) -> _Tableau:
    lin, off = word_table(seq, l, beta_over_alpha)
    side_p = np.stack([_SIDE_ENDPOINTS[name][0] for name in SIDE_NAMES])  # (3,2)
    side_q = np.stack([_SIDE_ENDPOINTS[name][1] for name in SIDE_NAMES])
    tri_p0 = (np.einsum("wab,sb->wsa", lin, side_p) + off[:, None, :]).reshape(-1, 2)
    tri_dv = np.einsum("wab,sb->wsa", lin, side_q - side_p).reshape(-1, 2)
    cab_p0, cab_dv = [], []
    for s in range(1, l + 1):
        plin, poff = word_table(seq, s - 1, beta_over_alpha)
        segs = cable_segments(seq, s, beta_over_alpha)
        sp = np.stack([sg.p for sg in segs])
        sv = np.stack([sg.velocity for sg in segs])
        cab_p0.append((np.einsum("wab,sb->wsa", plin, sp) + poff[:, None, :]).reshape(-1, 2))
        cab_dv.append(np.einsum("wab,sb->wsa", plin, sv).reshape(-1, 2))
    for arr in (tri_p0, tri_dv, *cab_p0, *cab_dv):
        arr.flags.writeable = False
    return _Tableau(l, tri_p0, tri_dv, tuple(cab_p0), tuple(cab_dv))


def _transform(p0: np.ndarray, dv: np.ndarray, outer: AffineMap2 | None):
    if outer is None:
        return p0, dv
    lt = outer.linear.T
    return p0 @ lt + outer.offset, dv @ lt


def _pairings(u: Poly2, v: Poly2, p0: np.ndarray, dv: np.ndarray, quad: QuadratureRule) -> np.ndarray:
    """Per-edge line energies for a block of edges, in block order."""
    ts = quad.nodes
    xs = p0[:, 0][:, None] + dv[:, 0][:, None] * ts[None, :]
    ys = p0[:, 1][:, None] + dv[:, 1][:, None] * ts[None, :]
    gux, guy = grad_batch(u, xs, ys)
    du = gux * dv[:, 0][:, None] + guy * dv[:, 1][:, None]
    if v is u:
        dvv = du
    else:
        gvx, gvy = grad_batch(v, xs, ys)
        dvv = gvx * dv[:, 0][:, None] + gvy * dv[:, 1][:, None]
    return (du * dvv) @ quad.weights


def _tri_contributions(seq, l, u, v, quad, constants, outer, beta_over_alpha) -> np.ndarray:
    tab = _tableau(seq, l, beta_over_alpha)
    p0, dv = _transform(tab.tri_p0, tab.tri_dv, outer)
    return triangle_edge_prefactor(seq, l, constants) * _pairings(u, v, p0, dv, quad)


def _cable_contributions(seq, l, u, v, quad, constants, outer, beta_over_alpha, *, limit: bool) -> list[np.ndarray]:
    tab = _tableau(seq, l, beta_over_alpha)
    blocks = []
    for s in range(1, l + 1):
        pf = (
            cable_prefactor_limit(seq, s, constants)
            if limit
            else cable_prefactor(seq, s, l, constants)
        )
        p0, dv = _transform(tab.cab_p0[s - 1], tab.cab_dv[s - 1], outer)
        blocks.append(pf * _pairings(u, v, p0, dv, quad))
    return blocks


def energy1(
    seq: ParamSeq,
    l: int,
    u: Poly2,
    v: Poly2,
    quad: QuadratureRule | None = None,
    constants: Constants = DEFAULT_CONSTANTS,
    outer: AffineMap2 | None = None,
    beta_over_alpha: float = HARMONIC_RATIO,
) -> float:
    """Triangle-edge part of the depth-l form.

    ``outer`` precomposes the fields with an affine map (the integrand
    becomes the derivative of u o outer o F_w o side), which is how pulled
    back fields enter the recurrence without materializing compositions.
    """
    quad = quad or get_quadrature()
    contrib = _tri_contributions(seq, l, u, v, quad, constants, outer, beta_over_alpha)
    return math.fsum(contrib.tolist())


def cable_energy(
    seq: ParamSeq,
    s: int,
    u: Poly2,
    v: Poly2,
    quad: QuadratureRule | None = None,
    constants: Constants = DEFAULT_CONSTANTS,
    prefix_map: AffineMap2 | None = None,
    beta_over_alpha: float = HARMONIC_RATIO,
) -> float:
    """Unrenormalized cable-sum of one generation: b/(1-eps_s) times the
    line energies of the three generation-s cables under an explicit
    prefix map (default: identity, the cables of the top-level cell).
    """
    quad = quad or get_quadrature()
    if seq.one_minus_eps(s) == 0.0:
        raise DegenerateCable(f"eps_{s} = 1: cables have length zero")
    segs = cable_segments(seq, s, beta_over_alpha)
    amap = prefix_map or AffineMap2.identity()
    vals = [segment_pairing(u, v, amap, sg, quad) for sg in segs]
    return constants.b / seq.one_minus_eps(s) * math.fsum(vals)


def energy2(
    seq: ParamSeq,
    l: int,
    u: Poly2,
    v: Poly2,
    quad: QuadratureRule | None = None,
    constants: Constants = DEFAULT_CONSTANTS,
    outer: AffineMap2 | None = None,
    beta_over_alpha: float = HARMONIC_RATIO,
) -> float:
    """Cable part of the depth-l form: generations 1..l, finite window weights."""
    quad = quad or get_quadrature()
    blocks = _cable_contributions(seq, l, u, v, quad, constants, outer, beta_over_alpha, limit=False)
    return math.fsum(x for b in blocks for x in b.tolist())


def energy_total(
    seq: ParamSeq,
    l: int,
    u: Poly2,
    v: Poly2,
    quad: QuadratureRule | None = None,
    constants: Constants = DEFAULT_CONSTANTS,
    outer: AffineMap2 | None = None,
    beta_over_alpha: float = HARMONIC_RATIO,
    per_edge: bool = False,
) -> EnergyReport:
    """Full depth-l form, triangle and cable parts assembled separately.

    The grand total is one compensated sum over all edges in canonical
    order (triangle edges first, then cables by generation).
    """
    quad = quad or get_quadrature()
    tri = _tri_contributions(seq, l, u, v, quad, constants, outer, beta_over_alpha)
    blocks = _cable_contributions(seq, l, u, v, quad, constants, outer, beta_over_alpha, limit=False)
    tri_list = tri.tolist()
    cab_list = [x for b in blocks for x in b.tolist()]
    e1 = math.fsum(tri_list)
    e2 = math.fsum(cab_list)
    total = math.fsum(tri_list + cab_list)
    edges = None
    if per_edge:
        ids = [eid for eid, _, _ in prefractal_edges(seq, l, constants, beta_over_alpha)]
        edges = tuple(zip(ids, tri_list + cab_list))
    return EnergyReport(l, e1, e2, total, edges)


def cable_tail_bound(seq: ParamSeq, s_max: int, gu: float, gv: float, constants: Constants = DEFAULT_CONSTANTS) -> float:
    """Bound for the dropped generations s > s_max of the limit cable form.

    Each generation is bounded by 6 b Gu Gv (1-eps_s) / eps_tilde_inf(s)
    using the Frobenius-norm identity (the squared norms of the depth
    products sum to 2 lam_tilde); eps_tilde_inf(s) >= delta gives a
    summable envelope.  gu, gv are sup bounds of the gradients on the hull.
    """
    delta = seq.delta()
    return 6.0 * constants.b * gu * gv / delta * seq.sum_one_minus_eps_from(s_max + 1)


def energy2_limit(
    seq: ParamSeq,
    u: Poly2,
    v: Poly2,
    s_max: int,
    quad: QuadratureRule | None = None,
    constants: Constants = DEFAULT_CONSTANTS,
    outer: AffineMap2 | None = None,
    beta_over_alpha: float = HARMONIC_RATIO,
    grad_bounds: tuple[float, float] | None = None,
) -> tuple[float, float]:
    """Limit cable form truncated at generation s_max, with a tail bound.

    Returns (value, tail).  ``grad_bounds`` optionally overrides the
    sup-gradient bounds of (u, v) used in the tail (callers pass shrunken
    bounds for pulled-back fields).
    """
    quad = quad or get_quadrature()
    blocks = _cable_contributions(seq, s_max, u, v, quad, constants, outer, beta_over_alpha, limit=True)
    value = math.fsum(x for b in blocks for x in b.tolist())
    if grad_bounds is None:
        gu, gv = sup_bounds(u)[0], sup_bounds(v)[0]
    else:
        gu, gv = grad_bounds
    return value, cable_tail_bound(seq, s_max, gu, gv, constants)


def recurrence_residual(
    seq: ParamSeq,
    l: int,
    u: Poly2,
    v: Poly2,
    quad: QuadratureRule | None = None,
    constants: Constants = DEFAULT_CONSTANTS,
    beta_over_alpha: float = HARMONIC_RATIO,
) -> float:
    """Defect of the one-step decomposition of the depth-(l+1) form.

    The depth-(l+1) form equals 1/lam_1 times the sum over i of the
    depth-l form of the shifted sequence applied to the pullbacks through
    F^1_i, plus the generation-1 cable sum weighted by the depth-(l+1)
    window.  Returns the absolute defect.
    """
    quad = quad or get_quadrature()
    lhs = energy_total(seq, l + 1, u, v, quad, constants, beta_over_alpha=beta_over_alpha).total
    shifted = seq.shift()
    maps = triple(seq.eps(1), beta_over_alpha)
    parts = [
        energy_total(shifted, l, u, v, quad, constants, outer=f, beta_over_alpha=beta_over_alpha).total
        for f in maps
    ]
    rhs = math.fsum(parts) / seq.lam(1) + cable_energy(
        seq, 1, u, v, quad, constants, beta_over_alpha=beta_over_alpha
    ) / seq.eps_tilde(1, l + 1)
    return abs(lhs - rhs)


def selfsimilar_residual(
    seq: ParamSeq,
    u: Poly2,
    v: Poly2,
    depth: int,
    quad: QuadratureRule | None = None,
    constants: Constants = DEFAULT_CONSTANTS,
) -> tuple[float, float]:
    """Defect of the self-similar identity for the limit form, plus bound.

    Both sides are approximated at matched geometric resolution: the left
    side is the depth-``depth`` approximant (triangle form at depth plus
    limit cable form truncated at depth), the right side composes the
    depth-(depth-1) approximants of the shifted sequence with the level-1
    maps, so both resolve words of length ``depth``.  Returns
    (residual, truncation bound), the bound being the sum of the tail
    bounds of every limit truncation involved.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    quad = quad or get_quadrature()
    e2l, tail_l = energy2_limit(seq, u, v, depth, quad, constants)
    lhs = energy1(seq, depth, u, v, quad, constants) + e2l
    shifted = seq.shift()
    gu, gv = sup_bounds(u)[0], sup_bounds(v)[0]
    parts = []
    tails = [tail_l]
    for f in triple(seq.eps(1)):
        opn = float(np.linalg.norm(f.linear, 2))
        e2i, tail_i = energy2_limit(
            shifted, u, v, depth - 1, quad, constants, outer=f,
            grad_bounds=(gu * opn, gv * opn),
        )
        parts.append(energy1(shifted, depth - 1, u, v, quad, constants, outer=f) + e2i)
        tails.append(tail_i / seq.lam(1))
    rhs = math.fsum(parts) / seq.lam(1) + cable_energy(seq, 1, u, v, quad, constants) / seq.eps_tilde_inf(1)
    return abs(lhs - rhs), math.fsum(tails)


def convergence_rows(
    seq: ParamSeq,
    u: Poly2,
    v: Poly2,
    l_max: int,
    quad: QuadratureRule | None = None,
    constants: Constants = DEFAULT_CONSTANTS,
) -> list[dict]:
    """Depth sweep of the full form with increment envelopes.

    Row l reports E_l and delta = E_l - E_{l-1}; the envelope column
    bounds |E_{l+1} - E_l| by the cell-oscillation term (Hessian and
    gradient sup bounds times the largest cell diameter) plus the exact
    cable reweighting and one new cable generation.
    """
    quad = quad or get_quadrature()
    gu, hu = sup_bounds(u)
    gv, hv = sup_bounds(v)
    rows = []
    prev = None
    for l in range(l_max + 1):
        rep = energy_total(seq, l, u, v, quad, constants)
        diam = 0.6**l * (seq.eps_tilde(1, l) if l >= 1 else 1.0)
        om = seq.one_minus_eps(l + 1)
        eps_next = seq.eps(l + 1)
        envelope = (
            6.0 * constants.a * (hu * gv + gu * hv) * diam
            + abs(rep.e2) * om / eps_next
            + 6.0 * constants.b * gu * gv * om / eps_next
        )
        rows.append(
            {
                "l": l,
                "e1": rep.e1,
                "e2": rep.e2,
                "total": rep.total,
                "delta": None if prev is None else rep.total - prev,
                "envelope": envelope,
            }
        )
        prev = rep.total
    return rows
