"""
Piecewise-linear interpolation of nodal data on a five-tetrahedra cube split.

Every cube Q_alpha of side h is cut into the same five tetrahedra (pure
translation from cube to cube). With the unit-cube vertices

    O=(0,0,0)  A=(1,0,0)  B=(0,1,0)  C=(0,0,1)
    AB=(1,1,0) AC=(1,0,1) BC=(0,1,1) ABC=(1,1,1)

the tetrahedra, listed as (v1, v2, v3, v4) with v4 the reference vertex, are

    T1 = (A, B, C, O)        corner at O,   volume h^3/6
    T2 = (A, B, C, ABC)      central,       volume h^3/3
    T3 = (A, B, AB, ABC)     corner at AB,  volume h^3/6
    T4 = (A, C, AC, ABC)     corner at AC,  volume h^3/6
    T5 = (B, C, BC, ABC)     corner at BC,  volume h^3/6

Tetra types are indexed 0..4 in arrays (T1..T5). Inside T_i the gradient of
the interpolant is the constant matrix D M_i, where D holds the edge
difference quotients of the data and M_i maps the unit edge directions back
onto the Cartesian axes. Because the split is not mirrored between
neighbouring cubes, the face diagonals disagree across cube faces; all H^1
quantities here are broken (cell-by-cell) seminorms and
:func:`face_jump` reports the size of the inter-cube discontinuity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .observers import NodalData
from .spectral_core import SpectralField, evaluate_tensor

CUBE_VERTICES = {
    "O": (0, 0, 0),
    "A": (1, 0, 0),
    "B": (0, 1, 0),
    "C": (0, 0, 1),
    "AB": (1, 1, 0),
    "AC": (1, 0, 1),
    "BC": (0, 1, 1),
    "ABC": (1, 1, 1),
}

FIVE_TETRA = (
    ("A", "B", "C", "O"),
    ("A", "B", "C", "ABC"),
    ("A", "B", "AB", "ABC"),
    ("A", "C", "AC", "ABC"),
    ("B", "C", "BC", "ABC"),
)

FACE_TOL = 1e-12


class MalformedTopologyError(ValueError):
    pass


@dataclass(frozen=True)
class TetraTopology:
    tetra: tuple[tuple[str, str, str, str], ...] = FIVE_TETRA

    @property
    def offsets(self) -> np.ndarray:
        """Vertex offsets in the unit cube, shape (n_tetra, 4, 3)."""
        return np.array([[CUBE_VERTICES[v] for v in t] for t in self.tetra], dtype=np.int64)

    def volumes(self) -> np.ndarray:
        """Tetra volumes as fractions of the cube volume."""
        off = self.offsets.astype(np.float64)
        edges = off[:, :3] - off[:, 3:4]
        return np.abs(np.linalg.det(edges)) / 6.0


@dataclass(frozen=True, eq=False)
class TetraBasis:
    """Edge geometry of each tetra type, in unit-cube coordinates.

    ``edges[i][:, j]`` is w_j = v_j - v4 for a unit cube (multiply by h for
    physical lengths); ``unit[i]`` has the unit edges as columns and
    ``M[i]`` solves [e1, e2, e3] = unit[i] @ M[i].
    """

    topology: TetraTopology
    edges: np.ndarray  # (5, 3, 3)
    lengths: np.ndarray  # (5, 3)
    unit: np.ndarray  # (5, 3, 3)
    M: np.ndarray  # (5, 3, 3)
    edges_inv: np.ndarray  # (5, 3, 3)
    volumes: np.ndarray  # (5,)

    @property
    def n_types(self) -> int:
        return len(self.volumes)

    @property
    def norm_M(self) -> float:
        """max_i ||M_i||_2."""
        return float(max(np.linalg.norm(m, 2) for m in self.M))

    @property
    def norm_M_inv(self) -> float:
        """max_i ||M_i^{-1}||_2."""
        return float(max(np.linalg.norm(u, 2) for u in self.unit))


def build_basis(topology: TetraTopology | None = None) -> TetraBasis:
    topology = TetraTopology() if topology is None else topology
    off = topology.offsets.astype(np.float64)
    edges = np.transpose(off[:, :3] - off[:, 3:4], (0, 2, 1))
    lengths = np.linalg.norm(edges, axis=1)
    if np.any(lengths == 0) or np.any(np.linalg.cond(edges) > 1e12):
        raise MalformedTopologyError("tetra edge vectors are not linearly independent")
    unit = edges / lengths[:, None, :]
    M = np.linalg.inv(unit)
    vols = topology.volumes()
    if abs(vols.sum() - 1.0) > 1e-14:
        raise MalformedTopologyError(f"tetra volumes sum to {vols.sum()} of the cube, expected 1")
    return TetraBasis(topology, edges, lengths, unit, M, np.linalg.inv(edges), vols)


_DEFAULT_BASIS: TetraBasis | None = None


def default_basis() -> TetraBasis:
    global _DEFAULT_BASIS
    if _DEFAULT_BASIS is None:
        _DEFAULT_BASIS = build_basis()
    return _DEFAULT_BASIS


# -- point location ----------------------------------------------------------


def barycentric_local(xi: np.ndarray, basis: TetraBasis | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Tetra type and barycentric coordinates of unit-cube points.

    xi has shape (m, 3). Types are tried in order 0..4 and the first with all
    coordinates >= -FACE_TOL wins, which fixes the owner of shared faces.
    """
    basis = default_basis() if basis is None else basis
    xi = np.atleast_2d(np.asarray(xi, dtype=np.float64))
    off = basis.topology.offsets.astype(np.float64)
    m = len(xi)
    tet = np.full(m, -1, dtype=np.int64)
    bary = np.zeros((m, 4))
    for i in range(basis.n_types):
        b = (xi - off[i, 3]) @ basis.edges_inv[i].T
        a = np.column_stack([b, 1.0 - b.sum(axis=1)])
        hit = (tet < 0) & np.all(a >= -FACE_TOL, axis=1)
        tet[hit] = i
        bary[hit] = a[hit]
    if np.any(tet < 0):
        raise RuntimeError("point outside every tetra of the unit cube")
    return tet, bary


def locate_points(x, h: float, n_cubes: int, wrap: bool = True, basis: TetraBasis | None = None):
    """Vectorized :func:`locate`: returns (alpha (m,3), type (m,), bary (m,4))."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    s = x / h
    if wrap:
        s = np.mod(s, n_cubes)
    alpha = np.clip(np.floor(s), 0, n_cubes - 1).astype(np.int64)
    tet, bary = barycentric_local(s - alpha, basis)
    return alpha, tet, bary


def locate(x, h: float, L: float | None = None, basis: TetraBasis | None = None):
    """Containing cube, tetra type and barycentric coordinates of one point.

    The barycentric vector is ordered (v1, v2, v3, v4). Points are wrapped
    into [0, L)^3 when L is given.
    """
    n = 1 << 62 if L is None else int(round(L / h))
    alpha, tet, bary = locate_points(np.asarray(x)[None], h, n, wrap=L is not None, basis=basis)
    return tuple(int(a) for a in alpha[0]), int(tet[0]), bary[0]


# -- interpolant -------------------------------------------------------------


def _vertex_view(padded: np.ndarray, offset, n: int) -> np.ndarray:
    o0, o1, o2 = offset
    return padded[o0 : o0 + n, o1 : o1 + n, o2 : o2 + n]


@dataclass(frozen=True, eq=False)
class Interpolant:
    nodal: NodalData
    basis: TetraBasis
    mean_offset: np.ndarray

    @property
    def h(self) -> float:
        return self.nodal.h


def raw_integral(nodal: NodalData, basis: TetraBasis | None = None) -> np.ndarray:
    """Exact integral of the uncorrected interpolant over the domain."""
    basis = default_basis() if basis is None else basis
    n, P = nodal.n_cubes, nodal.padded()
    off = basis.topology.offsets
    total = np.zeros(3)
    for i in range(basis.n_types):
        vsum = sum(_vertex_view(P, off[i, k], n).sum(axis=(0, 1, 2)) for k in range(4))
        total += basis.volumes[i] * nodal.h**3 * vsum / 4.0
    return total


def mean_correct(nodal: NodalData, basis: TetraBasis | None = None) -> Interpolant:
    basis = default_basis() if basis is None else basis
    mean = raw_integral(nodal, basis) / nodal.L**3
    return Interpolant(nodal, basis, mean)


def evaluate(interp: Interpolant, x, corrected: bool = True) -> np.ndarray:
    """Interpolant at one point (shape (3,)) or many (shape (m, 3))."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    nodal, basis = interp.nodal, interp.basis
    alpha, tet, bary = locate_points(x, nodal.h, nodal.n_cubes, wrap=nodal.periodic, basis=basis)
    P = nodal.padded()
    vidx = alpha[:, None, :] + basis.topology.offsets[tet]  # (m, 4, 3)
    vals = P[vidx[..., 0], vidx[..., 1], vidx[..., 2]]  # (m, 4, 3)
    out = np.einsum("mk,mkd->md", bary, vals)
    if corrected:
        out = out - interp.mean_offset
    return out[0] if single else out


# -- directional data and gradients -----------------------------------------


@dataclass(frozen=True, eq=False)
class DirectionalData:
    """D[a, b, c, i] is the 3x3 matrix of edge difference quotients of cube (a, b, c), tetra type i."""

    D: np.ndarray  # (n, n, n, 5, 3, 3)
    h: float
    L: float

    def __getitem__(self, key):
        alpha, i = key
        return self.D[tuple(alpha) + (i,)]


def directional_data(nodal: NodalData, basis: TetraBasis | None = None) -> DirectionalData:
    """D_{l,k} = (u_l(v_k) - u_l(v4)) / |v_k - v4| for every cube and tetra type."""
    basis = default_basis() if basis is None else basis
    n, h, P = nodal.n_cubes, nodal.h, nodal.padded()
    off = basis.topology.offsets
    D = np.empty((n, n, n, basis.n_types, 3, 3))
    for i in range(basis.n_types):
        ref = _vertex_view(P, off[i, 3], n)
        for k in range(3):
            D[..., i, :, k] = (_vertex_view(P, off[i, k], n) - ref) / (h * basis.lengths[i, k])
    return DirectionalData(D, h, nodal.L)


def gradient(interp: Interpolant, alpha, i: int, data: DirectionalData | None = None) -> np.ndarray:
    """Constant gradient (row l = grad of component l) of the interpolant on T_i^alpha."""
    data = directional_data(interp.nodal, interp.basis) if data is None else data
    return data[alpha, i] @ interp.basis.M[i]


def gradients(interp: Interpolant, data: DirectionalData | None = None) -> np.ndarray:
    """All cell gradients, shape (n, n, n, 5, 3, 3)."""
    data = directional_data(interp.nodal, interp.basis) if data is None else data
    return data.D @ interp.basis.M


class H1Norms(NamedTuple):
    exact: float
    data: float
    lower: float
    upper: float


def h1_data_norms(nodal: NodalData, basis: TetraBasis | None = None) -> H1Norms:
    """Broken H^1 seminorm of the interpolant and its observable equivalent.

    exact^2 = sum vol(T) |D M|_F^2 and data^2 = sum vol(T) |D|_F^2; the
    bounds lower = data / max|M^-1| and upper = max|M| * data bracket exact.
    """
    basis = default_basis() if basis is None else basis
    dd = directional_data(nodal, basis)
    vol = basis.volumes * nodal.h**3
    grads = dd.D @ basis.M
    exact2 = np.einsum("i,abcilk->", vol, grads**2)
    data2 = np.einsum("i,abcilk->", vol, dd.D**2)
    exact, data = float(np.sqrt(exact2)), float(np.sqrt(data2))
    return H1Norms(exact, data, data / basis.norm_M_inv, data * basis.norm_M)


def face_jump(nodal: NodalData) -> float:
    """Largest jump of the interpolant across a cube face.

    Neighbouring cubes split their shared face along different diagonals,
    so the traces differ by a tent whose peak, at the face centre, is half
    the face twist |p00 - p10 - p01 + p11|.
    """
    n, P = nodal.n_cubes, nodal.padded()
    normal = slice(1, n + 1) if nodal.periodic else slice(1, n)
    worst = 0.0
    for axis in range(3):
        a, b = [d for d in range(3) if d != axis]

        def corner(da, db):
            s = [normal] * 3
            s[a] = slice(da, da + n)
            s[b] = slice(db, db + n)
            return P[tuple(s)]

        twist = corner(0, 0) - corner(1, 0) - corner(0, 1) + corner(1, 1)
        if twist.size:
            worst = max(worst, float(np.linalg.norm(twist, axis=-1).max()) / 2.0)
    return worst


# -- approximation error -----------------------------------------------------


def l2_error(interp: Interpolant, u: SpectralField, q: int = 4, corrected: bool = True) -> float:
    """|u - Iu|_{L^2} by uniform midpoint sampling with q^3 points per cube."""
    nodal = interp.nodal
    if not nodal.periodic:
        raise ValueError("l2_error needs periodic nodal data")
    if abs(nodal.L - u.config.L) > 1e-12 * nodal.L:
        raise ValueError("interpolant and field live on different tori")
    n, h = nodal.n_cubes, nodal.h
    s = (np.arange(q) + 0.5) / q
    xi = np.stack(np.meshgrid(s, s, s, indexing="ij"), axis=-1).reshape(-1, 3)
    tet, bary = barycentric_local(xi, interp.basis)
    P = nodal.padded()
    off = interp.basis.topology.offsets

    coords = (np.arange(n)[:, None] + s[None, :]).ravel() * h
    err2 = 0.0
    chunk = max(1, 8 // q) if n * q > 64 else n
    for j0 in range(0, n, chunk):
        j1 = min(n, j0 + chunk)
        exact = evaluate_tensor(u, coords[j0 * q : j1 * q], coords, coords)
        exact = exact.reshape(3, j1 - j0, q, n, q, n, q)
        Pj = P[j0 : j1 + 1]
        for p, (ti, a) in enumerate(zip(tet, bary)):
            i0, i1, i2 = np.unravel_index(p, (q, q, q))
            approx = sum(a[k] * _vertex_view(Pj, off[ti, k], n)[: j1 - j0] for k in range(4))
            if corrected:
                approx = approx - interp.mean_offset
            diff = exact[:, :, i0, :, i1, :, i2] - np.moveaxis(approx, -1, 0)
            err2 += float(np.sum(diff**2))
    return float(np.sqrt(err2 * nodal.L**3 / (n * q) ** 3))
