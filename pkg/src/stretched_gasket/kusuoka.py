"""Transfer operator on symmetric matrices and the induced measures.

The level operator at stretch eps sends a symmetric 2x2 matrix A to
sum_i T_i^t A T_i over the three contraction linear parts.  Its dominant
eigenpair is (lam, Q) with lam = (3/5) eps^2 and Q proportional to the
identity; trace normalization tr Q = 2 fixes the eigenmatrix.  The
adjoint conjugates the other way round, T_i M T_i^t, and pushes matrix
measures forward branch by branch.

Cylinder matrices tau([w]) = DF_w (Id/2) DF_w^t / lam_tilde(l) define
the gasket-part matrix measure; their traces kappa([w]) form a
probability vector on each level, consistent under refinement.  Cables
carry rank-one matrix masses aligned with their mapped tangents; the
combined measure evaluates energies of scalar fields without assembling
edge sums, which cross-checks the assembled forms.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .energy import _cable_contributions, cable_tail_bound, get_quadrature
from .errors import DegenerateCable
from .geometry import (
    HARMONIC_RATIO,
    barycenter,
    cable_prefactor_limit,
    cable_segments,
    compose,
    iter_words,
    triple,
    word_index,
    word_table,
)
from .params import DEFAULT_CONSTANTS, Constants, ParamSeq
from .scalarfield import Poly2, grad_batch

#: Orthonormal basis of symmetric 2x2 matrices under the Frobenius inner product.
SYM_BASIS = (
    np.array([[1.0, 0.0], [0.0, 0.0]]),
    np.array([[0.0, 1.0], [1.0, 0.0]]) / math.sqrt(2.0),
    np.array([[0.0, 0.0], [0.0, 1.0]]),
)
for _m in SYM_BASIS:
    _m.flags.writeable = False


def sym3(mat: np.ndarray) -> np.ndarray:
    """Coordinates of a symmetric matrix in SYM_BASIS."""
    return np.array([mat[0, 0], math.sqrt(2.0) * mat[0, 1], mat[1, 1]])


def unsym3(vec: np.ndarray) -> np.ndarray:
    off = vec[1] / math.sqrt(2.0)
    return np.array([[vec[0], off], [off, vec[2]]])


def _require_symmetric(mat: np.ndarray, tol: float = 1e-12):
    if mat.shape != (2, 2) or abs(mat[0, 1] - mat[1, 0]) > tol * (1.0 + abs(mat[0, 1])):
        raise ValueError("operator input must be a symmetric 2x2 matrix")


def ruelle_apply(eps: float, mat: np.ndarray, beta_over_alpha: float = HARMONIC_RATIO) -> np.ndarray:
    """One application of the level operator: sum of T_i^t mat T_i."""
    _require_symmetric(mat)
    out = np.zeros((2, 2))
    for f in triple(eps, beta_over_alpha):
        t = f.linear
        out += t.T @ mat @ t
    return 0.5 * (out + out.T)


def adjoint_apply(eps: float, mat: np.ndarray, beta_over_alpha: float = HARMONIC_RATIO) -> np.ndarray:
    """One application of the adjoint: sum of T_i mat T_i^t.

    Conjugation runs the opposite way from ruelle_apply.  The two happen
    to coincide for the harmonic family, whose linear parts are
    symmetric; the code keeps them distinct because composed products
    DF_w are not symmetric.
    """
    _require_symmetric(mat)
    out = np.zeros((2, 2))
    for f in triple(eps, beta_over_alpha):
        t = f.linear
        out += t @ mat @ t.T
    return 0.5 * (out + out.T)


def sym_operator3(eps: float, beta_over_alpha: float = HARMONIC_RATIO, adjoint: bool = False) -> np.ndarray:
    """3x3 matrix of the (adjoint) level operator in SYM_BASIS."""
    apply_ = adjoint_apply if adjoint else ruelle_apply
    cols = [sym3(apply_(eps, b, beta_over_alpha)) for b in SYM_BASIS]
    return np.stack(cols, axis=1)


def _perron_iteration(eps, beta_over_alpha, rtol, max_iter):
    q = np.eye(2)  # trace 2 is maintained by the renormalization below
    for it in range(1, max_iter + 1):
        nxt = ruelle_apply(eps, q, beta_over_alpha)
        tr = float(np.trace(nxt))
        if tr <= 0.0:
            raise ArithmeticError("power iteration collapsed to a trace-zero matrix")
        lam = tr / 2.0
        nxt = nxt * (2.0 / tr)
        if float(np.max(np.abs(nxt - q))) <= rtol * float(np.max(np.abs(nxt))):
            return lam, nxt, it
        q = nxt
    raise ArithmeticError(f"no eigenpair convergence within {max_iter} iterations")


def perron(
    eps: float,
    beta_over_alpha: float = HARMONIC_RATIO,
    rtol: float = 1e-14,
    max_iter: int = 10_000,
) -> tuple[float, np.ndarray]:
    """Dominant eigenpair (lam, Q) of the level operator, tr Q = 2.

    Power iteration on symmetric matrices starting from the identity;
    converged when the relative change of the normalized iterate drops
    below rtol.  Raises past the iteration cap.
    """
    lam, q, _ = _perron_iteration(eps, beta_over_alpha, rtol, max_iter)
    return lam, q


def perron_report(eps: float, beta_over_alpha: float = HARMONIC_RATIO) -> dict:
    """Eigenpair plus diagnostics: eigen-residual and iteration count."""
    lam, q, iters = _perron_iteration(eps, beta_over_alpha, 1e-14, 10_000)
    resid = ruelle_apply(eps, q, beta_over_alpha) - lam * q
    return {
        "eps": eps,
        "lambda": lam,
        "q": [[q[0, 0], q[0, 1]], [q[1, 0], q[1, 1]]],
        "residual": float(np.sqrt(np.sum(resid * resid))),
        "iterations": iters,
    }


# -- cylinder matrices and masses ------------------------------------------


@dataclass(frozen=True)
class CylinderMass:
    """Matrix mass of one word cell: tau symmetric PSD, kappa = tr tau."""

    word: tuple[int, ...]
    tau: np.ndarray
    kappa: float


@dataclass(frozen=True)
class CableMass:
    """Rank-one matrix mass of one cable of the limit measure.

    ``direction`` is the unit tangent of the mapped cable, ``projection``
    the rank-one projector onto it, ``mass`` the total (trace) mass.
    """

    prefix: tuple[int, ...]
    generation: int
    slot: int
    mass: float
    direction: np.ndarray
    projection: np.ndarray


@functools.lru_cache(maxsize=64)
def _scaled_linears(seq: ParamSeq, l: int, beta_over_alpha: float) -> np.ndarray:
    """Products of T_i / sqrt(lam_i) for all length-l words, lexicographic.

    Scaling each factor keeps every intermediate O(1), so cylinder
    matrices stay well conditioned at any depth the cap allows.
    """
    out = np.eye(2)[None, :, :]
    for k in range(1, l + 1):
        scale = 1.0 / math.sqrt(seq.lam(k))
        mats = np.stack([f.linear * scale for f in triple(seq.eps(k), beta_over_alpha)])
        out = np.einsum("wab,jbc->wjac", out, mats).reshape(-1, 2, 2)
    out.flags.writeable = False
    return out


def gibbs_tau(seq: ParamSeq, word: tuple[int, ...], beta_over_alpha: float = HARMONIC_RATIO) -> CylinderMass:
    """Cylinder mass from the closed form: renormalized DF (Id/2) DF^t.

    The empty word returns tau = Id/2 with kappa = 1, the normalization
    that makes each level a probability vector.
    """
    mats = _scaled_linears(seq, len(word), beta_over_alpha)
    m = mats[word_index(word)]
    tau = 0.5 * (m @ m.T)
    return CylinderMass(word, tau, float(np.trace(tau)))


def kappa(seq: ParamSeq, word: tuple[int, ...], beta_over_alpha: float = HARMONIC_RATIO) -> float:
    """Cylinder mass kappa([word]) = tr tau([word])."""
    return gibbs_tau(seq, word, beta_over_alpha).kappa


@functools.lru_cache(maxsize=64)
def kappa_table(seq: ParamSeq, l: int, beta_over_alpha: float = HARMONIC_RATIO) -> np.ndarray:
    """All level-l cylinder masses, lexicographic.  Sums to 1."""
    mats = _scaled_linears(seq, l, beta_over_alpha)
    out = 0.5 * np.einsum("wab,wab->w", mats, mats)
    out.flags.writeable = False
    return out


def tau_table(seq: ParamSeq, l: int, beta_over_alpha: float = HARMONIC_RATIO) -> np.ndarray:
    """All level-l cylinder matrices, (3^l, 2, 2), lexicographic."""
    mats = _scaled_linears(seq, l, beta_over_alpha)
    return 0.5 * np.einsum("wab,wcb->wac", mats, mats)


def cylinder_masses(seq: ParamSeq, l: int, beta_over_alpha: float = HARMONIC_RATIO) -> tuple[CylinderMass, ...]:
    """Level-l cylinder masses in lexicographic word order."""
    taus = tau_table(seq, l, beta_over_alpha)
    return tuple(
        CylinderMass(w, taus[i], float(np.trace(taus[i]))) for i, w in enumerate(iter_words(l))
    )


def _side_projection_sum() -> np.ndarray:
    """Projections onto the three base side directions, summed.

    The mutual 120 degree angles make the sum (3/2) Id.
    """
    from .geometry import base_vertices

    a, b, c = base_vertices()
    dirs = (b - a, c - b, c - a)
    acc = np.zeros((2, 2))
    for d in dirs:
        acc += np.outer(d, d) / float(d @ d)
    return acc


def adjoint_aggregate(seq: ParamSeq, l: int, constants: Constants = DEFAULT_CONSTANTS, beta_over_alpha: float = HARMONIC_RATIO) -> dict[tuple[int, ...], np.ndarray]:
    """Per-word cylinder matrices through the iterated adjoint route.

    Seeds with a times the side-projection sum (equal to Id/2 at the
    default a), applies the level adjoints branch by branch from the
    innermost level outward, and renormalizes by lam_tilde(l).  Agrees
    with the gibbs_tau closed form; the two routes share no code path
    beyond the raw map triples.
    """
    seed = constants.a * _side_projection_sum()
    arr = seed[None, :, :]
    for s in range(l, 0, -1):
        mats = np.stack([f.linear for f in triple(seq.eps(s), beta_over_alpha)])
        arr = np.einsum("jab,wbc,jdc->jwad", mats, arr, mats).reshape(-1, 2, 2)
    arr = arr / seq.lam_tilde(l)
    return {w: arr[i] for i, w in enumerate(iter_words(l))}


def hs_norm_sq_sum(seq: ParamSeq, l: int, beta_over_alpha: float = HARMONIC_RATIO) -> float:
    """Sum of squared Frobenius norms of all depth-l derivative products.

    Equals 2 lam_tilde(l); the cable tail bounds rest on this identity.
    """
    lin, _ = word_table(seq, l, beta_over_alpha)
    return float(np.einsum("wab,wab->", lin, lin))


def cable_mass(
    seq: ParamSeq,
    prefix: tuple[int, ...],
    s: int,
    slot: int,
    constants: Constants = DEFAULT_CONSTANTS,
    beta_over_alpha: float = HARMONIC_RATIO,
) -> CableMass:
    """Limit-measure matrix mass of the generation-s cable at (prefix, slot)."""
    if len(prefix) != s - 1:
        raise ValueError(f"prefix length {len(prefix)} does not match generation {s}")
    if seq.one_minus_eps(s) == 0.0:
        raise DegenerateCable(f"eps_{s} = 1: cable has zero length")
    seg = cable_segments(seq, s, beta_over_alpha)[slot - 1]
    vel = compose(seq, prefix, beta_over_alpha).linear @ seg.velocity
    nrm2 = float(vel @ vel)
    mass = cable_prefactor_limit(seq, s, constants) * nrm2
    direction = vel / math.sqrt(nrm2)
    return CableMass(prefix, s, slot, mass, direction, np.outer(direction, direction))


def cable_masses(
    seq: ParamSeq,
    s: int,
    constants: Constants = DEFAULT_CONSTANTS,
    beta_over_alpha: float = HARMONIC_RATIO,
) -> tuple[CableMass, ...]:
    """All generation-s cable masses, lexicographic in (prefix, slot)."""
    lin, _ = word_table(seq, s - 1, beta_over_alpha)
    if seq.one_minus_eps(s) == 0.0:
        raise DegenerateCable(f"eps_{s} = 1: cables have zero length")
    vel = np.stack([sg.velocity for sg in cable_segments(seq, s, beta_over_alpha)])
    world = np.einsum("wab,sb->wsa", lin, vel)
    pf = cable_prefactor_limit(seq, s, constants)
    out = []
    for i, prefix in enumerate(iter_words(s - 1)):
        for slot in (1, 2, 3):
            v = world[i, slot - 1]
            nrm2 = float(v @ v)
            d = v / math.sqrt(nrm2)
            out.append(CableMass(prefix, s, slot, pf * nrm2, d, np.outer(d, d)))
    return tuple(out)


def total_cable_mass(seq: ParamSeq, s_max: int, constants: Constants = DEFAULT_CONSTANTS, beta_over_alpha: float = HARMONIC_RATIO) -> float:
    """Mass of all cables of generations 1..s_max."""
    return math.fsum(
        cm.mass for s in range(1, s_max + 1) for cm in cable_masses(seq, s, constants, beta_over_alpha)
    )


def energy_via_measure(
    seq: ParamSeq,
    u: Poly2,
    v: Poly2,
    depth: int,
    quad=None,
    constants: Constants = DEFAULT_CONSTANTS,
    beta_over_alpha: float = HARMONIC_RATIO,
) -> float:
    """Energy straight from the measure data at one resolution.

    Gasket part: cylinder matrices paired with the gradients at cell
    barycenters, over all depth-level words.  Cable part: exact line
    quadrature of the rank-one masses against the gradients, generations
    up to the depth, limit window weights.  For affine fields the gasket
    part is exactly (grad u, (Id/2) grad v), independent of depth.
    """
    quad = quad or get_quadrature()
    lin, off = word_table(seq, depth, beta_over_alpha)
    centers = np.einsum("wab,b->wa", lin, barycenter()) + off
    gux, guy = grad_batch(u, centers[:, 0], centers[:, 1])
    gvx, gvy = grad_batch(v, centers[:, 0], centers[:, 1])
    taus = tau_table(seq, depth, beta_over_alpha)
    gasket = (
        taus[:, 0, 0] * gux * gvx
        + taus[:, 0, 1] * (gux * gvy + guy * gvx)
        + taus[:, 1, 1] * guy * gvy
    )
    blocks = _cable_contributions(
        seq, depth, u, v, quad, constants, None, beta_over_alpha, limit=True
    )
    return math.fsum(gasket.tolist() + [x for b in blocks for x in b.tolist()])
