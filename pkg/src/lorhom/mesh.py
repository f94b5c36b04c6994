"""Icosphere graph discretising g*-distances (Dijkstra on chord lengths)."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import dijkstra, connected_components

from .factor import FactorSpec
from .lengths import gauss_nodes, point_table, sqrt_excess
from .sphere import NORTH, SOUTH, arc, equator_point, from_angles, normalize, slerp

MAX_LEVEL = 9
EDGE_ORDER = 8


def icosahedron():
    """Icosahedron with vertices at both poles; the first upper-ring vertex sits on phi = 0."""
    lat = math.atan(0.5)
    verts = [NORTH]
    verts += [from_angles(math.pi / 2 - lat, 2 * math.pi * k / 5) for k in range(5)]
    verts += [from_angles(math.pi / 2 + lat, 2 * math.pi * k / 5 + math.pi / 5) for k in range(5)]
    verts.append(SOUTH)
    faces = []
    for k in range(5):
        u0, u1 = 1 + k, 1 + (k + 1) % 5
        l0, l1 = 6 + k, 6 + (k + 1) % 5
        faces += [(0, u0, u1), (u0, l0, u1), (l0, l1, u1), (11, l1, l0)]
    return np.array(verts), np.array(faces)


def subdivide(verts, faces):
    e = np.sort(np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1)
    uniq, inv = np.unique(e, axis=0, return_inverse=True)
    inv = inv.ravel()
    mids = normalize(verts[uniq[:, 0]] + verts[uniq[:, 1]])
    base = len(verts)
    m = base + inv.reshape(3, -1)
    a, b, c = faces.T
    ab, bc, ca = m
    new = np.concatenate([
        np.stack([a, ab, ca], 1), np.stack([ab, b, bc], 1),
        np.stack([ca, bc, c], 1), np.stack([ab, bc, ca], 1)])
    return np.concatenate([verts, mids]), new


def _containing_face(verts, faces, x):
    centers = normalize(verts[faces].sum(axis=1))
    order = np.argsort(-(centers @ x))[:12]
    for f in order:
        tri = verts[faces[f]]
        lam = np.linalg.solve(tri.T, x)
        if np.all(lam >= -1e-12):
            return int(f)
    return int(order[0])


def insert_points(verts, faces, points, tol=1e-12):
    """Insert exact vertices by splitting their containing triangle in three."""
    verts = list(verts)
    faces = [tuple(f) for f in faces]
    ids = []
    V = np.array(verts)
    for x in points:
        d = V @ x
        j = int(np.argmax(d))
        if arc(V[j], x) < tol:
            ids.append(j)
            continue
        F = np.array(faces)
        f = _containing_face(V, F, x)
        a, b, c = faces[f]
        k = len(verts)
        verts.append(np.asarray(x, dtype=float))
        faces[f] = (a, b, k)
        faces += [(b, c, k), (c, a, k)]
        V = np.array(verts)
        ids.append(k)
    return np.array(verts), np.array(faces), ids


def chord_lengths(spec: FactorSpec, a, b, order=EDGE_ORDER, batch=1 << 18):
    """g*-length of the short great-circle arc between each row of a and b."""
    u, w = gauss_nodes(order)
    out = np.empty(len(a))
    for i in range(0, len(a), batch):
        aa, bb = a[i:i + batch], b[i:i + batch]
        g = arc(aa, bb)
        if spec.has_bumps or spec.dips or spec.scale != 1.0:
            F = spec.excess(slerp(aa, bb, u))
            out[i:i + batch] = g + g * (sqrt_excess(F) @ w)
        else:
            out[i:i + batch] = g
    return out


@dataclass
class GeodesicMesh:
    level: int
    spec: FactorSpec
    vertices: np.ndarray
    faces: np.ndarray
    edges: np.ndarray
    weights: np.ndarray
    special: dict
    graph: csr_matrix = field(repr=False)
    _trees: dict = field(default_factory=dict, repr=False)

    @property
    def resolution(self) -> float:
        """Longest 1-ring edge (g0), the snapping scale."""
        e = np.sort(np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]],
                                    self.faces[:, [2, 0]]]), axis=1)
        return float(arc(self.vertices[e[:, 0]], self.vertices[e[:, 1]]).max())

    def snap(self, p) -> int:
        x = np.asarray(getattr(p, "position", p), dtype=float)
        j = int(np.argmax(self.vertices @ x))
        if arc(self.vertices[j], x) > self.resolution:
            raise ValueError("point cannot be snapped to the mesh")
        return j

    def write_csv(self, path) -> None:
        """One vertex per row with its factor value."""
        table = point_table(self.spec, self.vertices)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["vertex", "x", "y", "z", "theta", "phi", "omega", "omega_minus_1"])
            for k, row in enumerate(table):
                w.writerow([k, *(repr(float(v)) for v in row)])

    def distances_from(self, i: int) -> np.ndarray:
        if i not in self._trees:
            self._trees[i] = dijkstra(self.graph, directed=False, indices=i)
        return self._trees[i]


def build_mesh(spec: FactorSpec, level: int, shortcuts: bool = True,
               extra_points=()) -> GeodesicMesh:
    if not 0 <= level <= MAX_LEVEL:
        raise MemoryError(f"mesh level {level} outside [0, {MAX_LEVEL}]")
    verts, faces = icosahedron()
    for _ in range(level):
        verts, faces = subdivide(verts, faces)
    named = {"N": NORTH, "S": SOUTH}
    for n in range(1, spec.max_index + 1):
        named[f"q{n}"] = equator_point(1.0 / (n * math.pi)).position
        if n < spec.max_index:
            named[f"p{n}"] = equator_point((1.0 / n + 1.0 / (n + 1)) / (2 * math.pi)).position
    for k, x in enumerate(extra_points):
        named[f"x{k}"] = np.asarray(getattr(x, "position", x), dtype=float)
    keys = list(named)
    verts, faces, ids = insert_points(verts, faces, [named[k] for k in keys])
    special = dict(zip(keys, ids))

    e = np.sort(np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1)
    e = np.unique(e, axis=0)
    nv = len(verts)
    if shortcuts:
        A = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(nv, nv)).tocsr()
        A = ((A + A.T) > 0).astype(np.int8)
        A2 = (A @ A).tocoo()
        two = np.stack([A2.row, A2.col], 1)
        two = two[two[:, 0] < two[:, 1]]
        e = np.unique(np.concatenate([e, two]), axis=0)
        # drop shortcuts that are not 2-ring chords of a planar-ish neighbourhood
        e = e[arc(verts[e[:, 0]], verts[e[:, 1]]) < math.pi / 2]
    w = chord_lengths(spec, verts[e[:, 0]], verts[e[:, 1]])
    G = coo_matrix((w, (e[:, 0], e[:, 1])), shape=(nv, nv)).tocsr()
    ncomp, _ = connected_components(G, directed=False)
    if ncomp != 1:
        raise RuntimeError("mesh graph is disconnected")
    return GeodesicMesh(level, spec, verts, faces, e, w, special, G)


def mesh_distance(mesh: GeodesicMesh, p, q) -> float:
    """Shortest-path g*-distance between the vertices nearest to p and q."""
    i = mesh.snap(p)
    j = mesh.snap(q)
    if i == j:
        return 0.0
    a, b = min(i, j), max(i, j)
    return float(mesh.distances_from(a)[b])
