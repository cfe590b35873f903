"""Affine geometry of the stretched Sierpinski gasket pre-fractals.

The depth-l pre-fractal is the union of 3^l image triangles and the cables
joining them.  Images are produced by words over the alphabet {1,2,3}: the
map at word position k is built from eps_k, so the composition for a word
w = (i_1, ..., i_l) is F_{i_1} of level 1 applied last:

    F_w = F^1_{i_1} o F^2_{i_2} o ... o F^l_{i_l}.

Each level's triple (F_1, F_2, F_3) fixes the corners A, B, C of the unit
equilateral base triangle and contracts by the diagonal pair
(alpha, beta) = eps * (3/5, 1/5); F_2 and F_3 are the conjugates of F_1 by
the rotations through -2*pi/3 and +2*pi/3 about the barycenter direction.
Cables of generation s join the images F^s_i of the corner points inside a
cell of depth s-1 and have length 1 - eps_s.

The beta/alpha ratio is exposed (default 1/3, the harmonic family) so the
harmonicity module can probe perturbed families; perturbations break the
vertex balance and are rejected by operations that require harmonicity.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import DepthCapExceeded
from .params import DEFAULT_CONSTANTS, Constants, ParamSeq

SQRT3 = math.sqrt(3.0)

# Corners of the unit equilateral base triangle.
_A = np.array([0.0, 0.0])
_B = np.array([SQRT3 / 2.0, 0.5])
_C = np.array([SQRT3 / 2.0, -0.5])
_BARYCENTER = np.array([SQRT3 / 3.0, 0.0])

for _v in (_A, _B, _C, _BARYCENTER):
    _v.flags.writeable = False

#: Ratio beta/alpha of the harmonic map family.
HARMONIC_RATIO = 1.0 / 3.0

#: Default cap on enumeration depth (3^12 triangles).
DEFAULT_DEPTH_CAP = 12

#: Canonical side parametrizations of the base triangle, each run over t in [0,1].
SIDE_NAMES = ("AB", "BC", "AC")
_SIDE_ENDPOINTS = {"AB": (_A, _B), "BC": (_B, _C), "AC": (_A, _C)}

#: Letter of the map fixing each corner.
LETTER_OF_CORNER = {"A": 1, "B": 2, "C": 3}
CORNER_OF_LETTER = {1: "A", 2: "B", 3: "C"}


def base_vertices() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return _A, _B, _C


def barycenter() -> np.ndarray:
    return _BARYCENTER


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    m = np.array([[c, -s], [s, c]])
    return m


@dataclass(frozen=True, eq=False)
class AffineMap2:
    """Affine map x -> linear @ x + offset on the plane."""

    linear: np.ndarray
    offset: np.ndarray

    def __call__(self, pt: np.ndarray) -> np.ndarray:
        return self.linear @ pt + self.offset

    def compose(self, inner: "AffineMap2") -> "AffineMap2":
        """self o inner."""
        return AffineMap2(self.linear @ inner.linear, self.linear @ inner.offset + self.offset)

    @staticmethod
    def identity() -> "AffineMap2":
        return AffineMap2(np.eye(2), np.zeros(2))


@dataclass(frozen=True, eq=False)
class Segment:
    """Straight segment parametrized affinely over t in [0,1].

    ``vel`` optionally pins the exact tangent; endpoint subtraction loses
    low bits when the segment is much shorter than its distance from the
    origin, which matters for near-degenerate cables.
    """

    p: np.ndarray
    q: np.ndarray
    vel: np.ndarray | None = None

    @property
    def velocity(self) -> np.ndarray:
        return self.vel if self.vel is not None else self.q - self.p

    def point(self, t: float) -> np.ndarray:
        return self.p + t * (self.q - self.p)

    @property
    def length(self) -> float:
        return float(np.hypot(*(self.q - self.p)))


@dataclass(frozen=True)
class EdgeId:
    """Identity and energy prefactor of one pre-fractal edge.

    Triangle edges carry the full word and a side name; cables carry the
    prefix word (length s-1), the slot index 1..3 and the generation s.
    ``prefactor`` is the coefficient the edge carries inside the depth-l
    energy form.
    """

    kind: str  # "tri" | "cable"
    word: tuple[int, ...]
    side: str | None = None
    slot: int | None = None
    generation: int | None = None
    prefactor: float = 0.0


def _alpha_beta(eps: float, beta_over_alpha: float) -> tuple[float, float]:
    if not (0.0 < eps <= 1.0):
        raise ValueError(f"eps must lie in (0,1], got {eps}")
    alpha = 0.6 * eps
    return alpha, alpha * beta_over_alpha


@functools.lru_cache(maxsize=4096)
def _triple_cached(eps: float, beta_over_alpha: float):
    alpha, beta = _alpha_beta(eps, beta_over_alpha)
    t1 = np.array([[alpha, 0.0], [0.0, beta]])
    # Closed-form rotation conjugates; building them entrywise keeps the
    # matrices exactly symmetric in floating point.
    d = SQRT3 * (alpha - beta) / 4.0
    m11 = (alpha + 3.0 * beta) / 4.0
    m22 = (3.0 * alpha + beta) / 4.0
    t2 = np.array([[m11, d], [d, m22]])
    t3 = np.array([[m11, -d], [-d, m22]])
    f1 = AffineMap2(t1, np.zeros(2))
    f2 = AffineMap2(t2, _B - t2 @ _B)
    f3 = AffineMap2(t3, _C - t3 @ _C)
    for f in (f1, f2, f3):
        f.linear.flags.writeable = False
        f.offset.flags.writeable = False
    return f1, f2, f3


def triple(eps: float, beta_over_alpha: float = HARMONIC_RATIO) -> tuple[AffineMap2, AffineMap2, AffineMap2]:
    """The level maps (F_1, F_2, F_3) for one stretching value.

    eps = 1 is accepted: it gives the harmonic-gasket maps, where cables
    degenerate to points and neighbouring cells touch.
    """
    return _triple_cached(float(eps), float(beta_over_alpha))


def iter_words(l: int) -> Iterator[tuple[int, ...]]:
    """All words of length l in lexicographic order."""
    return itertools.product((1, 2, 3), repeat=l)


def word_index(word: tuple[int, ...]) -> int:
    """Position of a word in the lexicographic enumeration of its length."""
    idx = 0
    for ch in word:
        idx = idx * 3 + (ch - 1)
    return idx


def compose(seq: ParamSeq, word: tuple[int, ...], beta_over_alpha: float = HARMONIC_RATIO) -> AffineMap2:
    """F_w for a word w, position k using the level-k triple."""
    out = AffineMap2.identity()
    for k, letter in enumerate(word, start=1):
        out = out.compose(triple(seq.eps(k), beta_over_alpha)[letter - 1])
    return out


def word_point(seq: ParamSeq, word: tuple[int, ...], beta_over_alpha: float = HARMONIC_RATIO) -> np.ndarray:
    """Representative point of a cylinder cell: image of the barycenter."""
    return compose(seq, word, beta_over_alpha)(_BARYCENTER)


@functools.lru_cache(maxsize=64)
def word_table(seq: ParamSeq, l: int, beta_over_alpha: float = HARMONIC_RATIO):
    """Batched affine parts of all depth-l compositions, in word order.

    Returns (lin, off): arrays of shape (3^l, 2, 2) and (3^l, 2) such that
    row word_index(w) holds the linear part and offset of F_w.  Arrays are
    read-only; callers must copy before mutating.
    """
    if l < 0:
        raise ValueError(f"depth must be >= 0, got {l}")
    if l > DEFAULT_DEPTH_CAP:
        raise DepthCapExceeded(f"depth {l} exceeds cap {DEFAULT_DEPTH_CAP}")
    lin = np.eye(2)[None, :, :].copy()
    off = np.zeros((1, 2))
    for k in range(1, l + 1):
        maps = triple(seq.eps(k), beta_over_alpha)
        tk = np.stack([m.linear for m in maps])  # (3,2,2)
        ok = np.stack([m.offset for m in maps])  # (3,2)
        new_lin = np.einsum("wab,jbc->wjac", lin, tk).reshape(-1, 2, 2)
        new_off = (np.einsum("wab,jb->wja", lin, ok) + off[:, None, :]).reshape(-1, 2)
        lin, off = new_lin, new_off
    lin.flags.writeable = False
    off.flags.writeable = False
    return lin, off


def _cable_scale_seq(seq: ParamSeq, s: int, beta_over_alpha: float) -> float:
    """The common factor 2 - 3*alpha - beta; every cable has length half of it.

    For the harmonic family this collapses to 2*(1 - eps_s) exactly, and the
    expm1-based 1 - eps_s keeps cable tangents relatively accurate deep in
    the tail where eps_s is close to 1.
    """
    if beta_over_alpha == HARMONIC_RATIO:
        return 2.0 * seq.one_minus_eps(s)
    return 2.0 * seq.one_minus_eps(s) + seq.eps(s) * (0.2 - 0.6 * beta_over_alpha)


#: Unit-scale direction of each cable slot (scaled by the common factor).
_SLOT_DIRS = (
    np.array([SQRT3 / 4.0, 0.25]),
    np.array([SQRT3 / 4.0, -0.25]),
    np.array([0.0, -0.5]),
)
for _v in _SLOT_DIRS:
    _v.flags.writeable = False


def _cable_segments_ab(alpha: float, beta: float, scale: float) -> tuple[Segment, Segment, Segment]:
    # Slot starts: F_1(B), F_1(C), F_2(C); ends follow from the common direction.
    p1 = np.array([alpha * SQRT3 / 2.0, beta / 2.0])
    p2 = np.array([alpha * SQRT3 / 2.0, -beta / 2.0])
    p3 = np.array([SQRT3 * (2.0 - alpha + beta) / 4.0, scale / 4.0])
    return tuple(
        Segment(p, p + scale * d, vel=scale * d) for p, d in zip((p1, p2, p3), _SLOT_DIRS)
    )


def cable_segments(seq: ParamSeq, s: int, beta_over_alpha: float = HARMONIC_RATIO) -> tuple[Segment, Segment, Segment]:
    """The three generation-s cables in local cell coordinates.

    Slot 1 runs from F^s_1(B) to F^s_2(A), slot 2 from F^s_1(C) to
    F^s_3(A), slot 3 from F^s_2(C) to F^s_3(B); each has length
    1 - eps_s for the harmonic family.  A depth-(s-1) prefix map carries
    them into the pre-fractal.
    """
    alpha, beta = _alpha_beta(seq.eps(s), beta_over_alpha)
    scale = _cable_scale_seq(seq, s, beta_over_alpha)
    return _cable_segments_ab(alpha, beta, scale)


def word_maps(seq: ParamSeq, l: int, beta_over_alpha: float = HARMONIC_RATIO) -> Iterator[tuple[tuple[int, ...], AffineMap2]]:
    """Stream (word, F_w) for all words of length l, lexicographically."""

    def rec(k: int, word: tuple[int, ...], amap: AffineMap2):
        if k > l:
            yield word, amap
            return
        for j, f in enumerate(triple(seq.eps(k), beta_over_alpha), start=1):
            yield from rec(k + 1, word + (j,), amap.compose(f))

    return rec(1, (), AffineMap2.identity())


def triangle_edge_prefactor(seq: ParamSeq, l: int, constants: Constants = DEFAULT_CONSTANTS) -> float:
    """Weight a / lam_tilde(l) carried by every depth-l triangle edge."""
    return constants.a / seq.lam_tilde(l)


def cable_prefactor(seq: ParamSeq, s: int, l: int, constants: Constants = DEFAULT_CONSTANTS) -> float:
    """Weight of a generation-s cable inside the depth-l energy form.

    Combines the cell renormalization lam_tilde(s-1), the window product
    eps_tilde(s, l) and the cable length 1 - eps_s.
    """
    return constants.b / (seq.lam_tilde(s - 1) * seq.eps_tilde(s, l) * seq.one_minus_eps(s))


def cable_prefactor_limit(seq: ParamSeq, s: int, constants: Constants = DEFAULT_CONSTANTS) -> float:
    """Limit weight of a generation-s cable: window product taken to infinity."""
    return constants.b / (seq.lam_tilde(s - 1) * seq.eps_tilde_inf(s) * seq.one_minus_eps(s))


def iter_cables(seq: ParamSeq, s: int, beta_over_alpha: float = HARMONIC_RATIO) -> Iterator[tuple[tuple[int, ...], int, Segment, AffineMap2]]:
    """Stream (prefix, slot, local segment, prefix map) for generation s."""
    segs = cable_segments(seq, s, beta_over_alpha)
    for prefix, amap in word_maps(seq, s - 1, beta_over_alpha):
        for slot in (1, 2, 3):
            yield prefix, slot, segs[slot - 1], amap


def prefractal_edges(
    seq: ParamSeq,
    l: int,
    constants: Constants = DEFAULT_CONSTANTS,
    beta_over_alpha: float = HARMONIC_RATIO,
    depth_cap: int = DEFAULT_DEPTH_CAP,
) -> Iterator[tuple[EdgeId, Segment, AffineMap2]]:
    """All edges of the depth-l pre-fractal with their energy prefactors.

    Yields 3 * 3^l triangle edges followed by the cables of generations
    1..l (3 * (3^l - 1) / 2 of them), in canonical order: triangle edges
    lexicographic in (word, side), then generations in increasing order,
    lexicographic in (prefix, slot).  The segment is in local coordinates;
    the world edge is the affine map applied to it.
    """
    if l < 0:
        raise ValueError(f"depth must be >= 0, got {l}")
    if l > depth_cap:
        raise DepthCapExceeded(f"depth {l} exceeds cap {depth_cap}")
    tri_pf = triangle_edge_prefactor(seq, l, constants)
    sides = {name: Segment(pq[0], pq[1]) for name, pq in _SIDE_ENDPOINTS.items()}
    for word, amap in word_maps(seq, l, beta_over_alpha):
        for name in SIDE_NAMES:
            yield EdgeId("tri", word, side=name, prefactor=tri_pf), sides[name], amap
    for s in range(1, l + 1):
        pf = cable_prefactor(seq, s, l, constants)
        for prefix, slot, seg, amap in iter_cables(seq, s, beta_over_alpha):
            yield EdgeId("cable", prefix, slot=slot, generation=s, prefactor=pf), seg, amap


def count_edges(l: int) -> tuple[int, int]:
    """(triangle edges, cables) of the depth-l pre-fractal."""
    return 3 * 3**l, 3 * (3**l - 1) // 2


# -- elementary planar predicates, used by the disjointness checks ---------


def triangle_contains(tri: np.ndarray, pt: np.ndarray, tol: float = 1e-12) -> bool:
    """Point-in-triangle via signed areas, tolerant to tol on the boundary."""
    signs = []
    for i in range(3):
        p, q = tri[i], tri[(i + 1) % 3]
        cross = (q[0] - p[0]) * (pt[1] - p[1]) - (q[1] - p[1]) * (pt[0] - p[0])
        signs.append(cross)
    return all(s >= -tol for s in signs) or all(s <= tol for s in signs)


def triangles_disjoint(t1: np.ndarray, t2: np.ndarray, gap: float = 0.0) -> bool:
    """Separating-axis test for two (closed) triangles.

    Returns True when some edge normal separates them by more than ``gap``.
    """
    for tri_a, tri_b in ((t1, t2), (t2, t1)):
        for i in range(3):
            p, q = tri_a[i], tri_a[(i + 1) % 3]
            axis = np.array([-(q[1] - p[1]), q[0] - p[0]])
            n = np.hypot(axis[0], axis[1])
            if n == 0.0:
                continue
            axis = axis / n
            a_lo, a_hi = (t1 @ axis).min(), (t1 @ axis).max()
            b_lo, b_hi = (t2 @ axis).min(), (t2 @ axis).max()
            if a_hi < b_lo - gap or b_hi < a_lo - gap:
                return True
    return False


def cell_triangle(amap: AffineMap2) -> np.ndarray:
    """Corner images of one cell, rows (A, B, C) mapped."""
    return np.stack([amap(_A), amap(_B), amap(_C)])
