"""Quadrilateral meshes: construction, text serialization, normalization.

A QuadMesh is the geometric substrate for the stress solver and for the
coordinate normalization feeding the spatial network.  Meshes are immutable
after construction apart from the per-element modulus assignment, which the
data-generation step fills in from a modulus field.

Mesh text format (plain text, whitespace separated)::

    quadmesh 1
    NODES <count>
    <index> <x_mm> <y_mm>
    ...
    ELEMENTS <count>
    <index> <n1> <n2> <n3> <n4>
    ...
    NODESET <name> <count>
    <indices ...>
    end quadmesh

Node ordering within an element is counter-clockwise.  Coordinates are
written with full float precision so a save/load round trip is bit-exact.
"""

import importlib.resources

import numpy as np

from .errors import (InvalidGeometryError, InvalidParameterError,
                     MeshFormatError, OutOfDomainError)

# 2x2 Gauss quadrature abscissa for the unit square [-1, 1]^2
GAUSS_1D = (-1.0 / np.sqrt(3.0), 1.0 / np.sqrt(3.0))


def q4_shape_gradients(xi, eta):
    """Natural-coordinate gradients of the four bilinear shape functions.

    Returns a (2, 4) array: row 0 is dN/dxi, row 1 is dN/deta, for local
    nodes ordered counter-clockwise from (-1, -1).
    """
    return 0.25 * np.array(
        [[-(1 - eta), (1 - eta), (1 + eta), -(1 + eta)],
         [-(1 - xi), -(1 + xi), (1 + xi), (1 - xi)]])


class QuadMesh:
    """A 2-D mesh of 4-node quadrilaterals.

    Attributes
    ----------
    nodes : (N, 2) float array of coordinates in mm.
    elements : (E, 4) int array of node indices, counter-clockwise.
    bottom_nodes, top_nodes : int arrays naming the loaded/supported edges.
    element_modulus : (E,) float array of Young's moduli in Pa, or None
        until a modulus field has been sampled onto the mesh.
    """

    def __init__(self, nodes, elements, bottom_nodes, top_nodes,
                 element_modulus=None):
        self.nodes = np.asarray(nodes, dtype=float)
        self.elements = np.asarray(elements, dtype=int)
        self.bottom_nodes = np.asarray(bottom_nodes, dtype=int)
        self.top_nodes = np.asarray(top_nodes, dtype=int)
        self.element_modulus = (None if element_modulus is None
                                else np.asarray(element_modulus, dtype=float))
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 2:
            raise MeshFormatError("nodes must be an (N, 2) array")
        if self.elements.ndim != 2 or self.elements.shape[1] != 4:
            raise MeshFormatError("elements must be an (E, 4) array")
        if np.intersect1d(self.bottom_nodes, self.top_nodes).size:
            raise MeshFormatError("bottom and top node sets overlap")

    # -- geometry ----------------------------------------------------------

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_elements(self):
        return self.elements.shape[0]

    @property
    def bbox(self):
        lo = self.nodes.min(axis=0)
        hi = self.nodes.max(axis=0)
        return lo, hi

    @property
    def center(self):
        lo, hi = self.bbox
        return 0.5 * (lo + hi)

    @property
    def half_extent(self):
        lo, hi = self.bbox
        return 0.5 * (hi - lo)

    def element_coords(self):
        """Node coordinates per element, shape (E, 4, 2)."""
        return self.nodes[self.elements]

    def element_centroids(self):
        return self.element_coords().mean(axis=1)

    def element_areas(self):
        """Areas via the shoelace formula, shape (E,)."""
        xy = self.element_coords()
        x, y = xy[:, :, 0], xy[:, :, 1]
        xn, yn = np.roll(x, -1, axis=1), np.roll(y, -1, axis=1)
        return 0.5 * np.abs(np.sum(x * yn - xn * y, axis=1))

    def validate(self):
        """Check element references and Jacobian positivity.

        Raises MeshFormatError naming the first offending element.
        """
        if self.elements.size and (self.elements.min() < 0
                                   or self.elements.max() >= self.n_nodes):
            bad = np.argwhere((self.elements < 0)
                              | (self.elements >= self.n_nodes))[0][0]
            raise MeshFormatError(
                f"element {bad} references a node outside 0..{self.n_nodes - 1}")
        for e, conn in enumerate(self.elements):
            if len(set(int(c) for c in conn)) != 4:
                raise MeshFormatError(f"element {e} is degenerate: {conn}")
        coords = self.element_coords()
        for xi in GAUSS_1D:
            for eta in GAUSS_1D:
                grad = q4_shape_gradients(xi, eta)   # (2, 4)
                jac = np.einsum("gk,ekc->egc", grad, coords)  # (E, 2, 2)
                det = (jac[:, 0, 0] * jac[:, 1, 1]
                       - jac[:, 0, 1] * jac[:, 1, 0])
                if (det <= 0).any():
                    e = int(np.argmax(det <= 0))
                    raise MeshFormatError(
                        f"element {e} has non-positive Jacobian "
                        f"({det[e]:.3e}) at gauss point ({xi:.3f}, {eta:.3f})")
        return self

    def with_moduli(self, field):
        """Return a copy with element_modulus sampled from a modulus field
        at the element centroids."""
        cent = self.element_centroids()
        e = np.asarray(field.eval(cent[:, 0], cent[:, 1]), dtype=float)
        return QuadMesh(self.nodes, self.elements, self.bottom_nodes,
                        self.top_nodes, e)


def make_rectilinear(width_mm, height_mm, nodes_per_edge):
    """Uniform rectilinear mesh with `nodes_per_edge` nodes along each edge.

    The bottom node set is the y = 0 row; the top set is the y = height row.
    """
    n = int(nodes_per_edge)
    if n < 2:
        raise InvalidParameterError("nodes_per_edge must be >= 2")
    if width_mm <= 0 or height_mm <= 0:
        raise InvalidParameterError("mesh dimensions must be positive")
    xs = np.linspace(0.0, width_mm, n)
    ys = np.linspace(0.0, height_mm, n)
    xx, yy = np.meshgrid(xs, ys)
    nodes = np.column_stack([xx.ravel(), yy.ravel()])
    ix, iy = np.meshgrid(np.arange(n - 1), np.arange(n - 1))
    n00 = (iy * n + ix).ravel()
    elements = np.column_stack([n00, n00 + 1, n00 + n + 1, n00 + n])
    bottom = np.arange(n)
    top = np.arange((n - 1) * n, n * n)
    return QuadMesh(nodes, elements, bottom, top)


def normalize_coord(mesh, p):
    """Map a point (or an (N, 2) batch) to the centered [-1, 1]^2 square.

    Affine map: subtract the mesh center, divide by the half extent.  Points
    outside the bounding box (tolerance 1e-9 mm) raise OutOfDomainError.
    """
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    pts = p[None, :] if single else p
    lo, hi = mesh.bbox
    tol = 1e-9
    if ((pts < lo - tol) | (pts > hi + tol)).any():
        bad = pts[((pts < lo - tol) | (pts > hi + tol)).any(axis=1)][0]
        raise OutOfDomainError(
            f"point ({bad[0]}, {bad[1]}) outside mesh box {lo}..{hi}")
    out = (pts - mesh.center) / mesh.half_extent
    return out[0] if single else out


def denormalize_coord(mesh, q):
    """Inverse of normalize_coord."""
    q = np.asarray(q, dtype=float)
    return q * mesh.half_extent + mesh.center


# ---------------------------------------------------------------------------
# text serialization
# ---------------------------------------------------------------------------

def save_mesh(mesh, path):
    with open(path, "w") as fh:
        fh.write("quadmesh 1\n")
        fh.write(f"NODES {mesh.n_nodes}\n")
        for i, (x, y) in enumerate(mesh.nodes):
            fh.write(f"{i} {float(x)!r} {float(y)!r}\n")
        fh.write(f"ELEMENTS {mesh.n_elements}\n")
        for i, conn in enumerate(mesh.elements):
            fh.write(f"{i} {conn[0]} {conn[1]} {conn[2]} {conn[3]}\n")
        for name, idx in (("bottom", mesh.bottom_nodes),
                          ("top", mesh.top_nodes)):
            fh.write(f"NODESET {name} {len(idx)}\n")
            fh.write(" ".join(str(int(v)) for v in idx) + "\n")
        fh.write("end quadmesh\n")


def load_conforming(path):
    """Load a mesh from the text format and validate it.

    Rejects dangling node references, degenerate connectivity, and inverted
    elements (non-positive Jacobians).
    """
    with open(path) as fh:
        tokens = fh.read().split()
    pos = 0

    def take(n=1):
        nonlocal pos
        if pos + n > len(tokens):
            raise MeshFormatError(f"unexpected end of mesh file {path}")
        out = tokens[pos:pos + n]
        pos += n
        return out

    magic = take(2)
    if magic != ["quadmesh", "1"]:
        raise MeshFormatError(f"bad mesh header {magic} in {path}")
    tag, count = take(2)
    if tag != "NODES":
        raise MeshFormatError(f"expected NODES, found {tag}")
    n_nodes = int(count)
    nodes = np.empty((n_nodes, 2))
    for k in range(n_nodes):
        i, x, y = take(3)
        nodes[int(i)] = (float(x), float(y))
    tag, count = take(2)
    if tag != "ELEMENTS":
        raise MeshFormatError(f"expected ELEMENTS, found {tag}")
    n_el = int(count)
    elements = np.empty((n_el, 4), dtype=int)
    for k in range(n_el):
        vals = take(5)
        elements[int(vals[0])] = [int(v) for v in vals[1:]]
    sets = {}
    while True:
        tag = take(1)[0]
        if tag == "end":
            break
        if tag != "NODESET":
            raise MeshFormatError(f"expected NODESET or end, found {tag}")
        name, cnt = take(2)
        sets[name] = np.array([int(v) for v in take(int(cnt))], dtype=int)
    for required in ("bottom", "top"):
        if required not in sets:
            raise MeshFormatError(f"mesh file lacks NODESET {required}")
    mesh = QuadMesh(nodes, elements, sets["bottom"], sets["top"])
    return mesh.validate()


def fixture_mesh_path():
    """Path of the bundled 235-element conforming fixture mesh."""
    return importlib.resources.files("elastonet.data") / "mesh2.txt"


def load_fixture_mesh():
    """The bundled conforming mesh around the three-disc phantom."""
    return load_conforming(str(fixture_mesh_path()))


# ---------------------------------------------------------------------------
# conforming fixture construction (three-disc geometry)
# ---------------------------------------------------------------------------

def _square_loop(center, half, per_side):
    """Perimeter nodes of an axis-aligned square, counter-clockwise starting
    at the bottom-right corner, `per_side` segments per side (4*per_side
    nodes in total)."""
    cx, cy = center
    t = np.linspace(-half, half, per_side + 1)
    right = np.column_stack([np.full(per_side, cx + half), cy + t[:-1]])
    top = np.column_stack([cx - t[:-1], np.full(per_side, cy + half)])
    left = np.column_stack([np.full(per_side, cx - half), cy - t[:-1]])
    bottom = np.column_stack([cx + t[:-1], np.full(per_side, cy - half)])
    return np.vstack([right, top, left, bottom])


def _circle_loop(center, radius, square_loop):
    """Circle nodes at the angular positions of an existing square loop."""
    ang = np.arctan2(square_loop[:, 1] - center[1],
                     square_loop[:, 0] - center[0])
    return np.column_stack([center[0] + radius * np.cos(ang),
                            center[1] + radius * np.sin(ang)])


def build_disc_fixture():
    """Construct the 235-element conforming mesh for the three-disc phantom.

    A 9x19 graded background grid covers the 50x50 mm domain with two square
    openings; each opening receives a structured patch that conforms to the
    embedded disc boundaries (nested discs of radii 2.2 and 6 mm around
    (12.5, 37.5); a single disc of radius 4.5 mm around (38, 14)).
    """
    xs = np.concatenate([[0.0, 5.0], np.linspace(5.0, 20.0, 5)[1:],
                         [32.0, 38.0, 44.0, 50.0]])
    ys = np.concatenate([np.linspace(0.0, 8.0, 5),
                         [14.0, 20.0],
                         np.linspace(20.0, 30.0, 7)[1:],
                         np.linspace(30.0, 45.0, 5)[1:],
                         np.linspace(45.0, 50.0, 4)[1:]])
    nx, ny = len(xs), len(ys)
    nodes = []
    index = {}

    def node_id(x, y):
        key = (round(float(x), 9), round(float(y), 9))
        if key not in index:
            index[key] = len(nodes)
            nodes.append((float(x), float(y)))
        return index[key]

    hole1 = (5.0, 20.0, 30.0, 45.0)     # x0, x1, y0, y1 of patch squares
    hole2 = (32.0, 44.0, 8.0, 20.0)

    def in_hole(cx, cy):
        for (x0, x1, y0, y1) in (hole1, hole2):
            if x0 < cx < x1 and y0 < cy < y1:
                return True
        return False

    elements = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            cx = 0.5 * (xs[i] + xs[i + 1])
            cy = 0.5 * (ys[j] + ys[j + 1])
            if in_hole(cx, cy):
                continue
            elements.append([node_id(xs[i], ys[j]),
                             node_id(xs[i + 1], ys[j]),
                             node_id(xs[i + 1], ys[j + 1]),
                             node_id(xs[i], ys[j + 1])])

    def add_patch(center, square_half, circle_radii, core_half, per_side,
                  core_div):
        """Structured disc patch: square core, then rings out to the square
        opening whose perimeter nodes coincide with the background grid."""
        cx, cy = center
        # core grid (core_div x core_div elements)
        t = np.linspace(-core_half, core_half, core_div + 1)
        for j in range(core_div):
            for i in range(core_div):
                elements.append([node_id(cx + t[i], cy + t[j]),
                                 node_id(cx + t[i + 1], cy + t[j]),
                                 node_id(cx + t[i + 1], cy + t[j + 1]),
                                 node_id(cx + t[i], cy + t[j + 1])])
        outer_sq = _square_loop(center, square_half, per_side)
        loops = [_square_loop(center, core_half, per_side)]
        for r in circle_radii:
            loops.append(_circle_loop(center, r, outer_sq))
        loops.append(outer_sq)
        for la, lb in zip(loops[:-1], loops[1:]):
            # counter-clockwise ring quads: inner node, outer node, next
            # outer node, next inner node
            m = len(la)
            for k in range(m):
                kn = (k + 1) % m
                elements.append([node_id(*la[k]), node_id(*lb[k]),
                                 node_id(*lb[kn]), node_id(*la[kn])])

    add_patch((12.5, 37.5), 7.5, (2.2, 6.0), 1.2, 4, 4)
    add_patch((38.0, 14.0), 6.0, (4.5,), 2.0, 2, 2)

    nodes = np.array(nodes)
    elements = np.array(elements, dtype=int)
    bottom = np.where(np.abs(nodes[:, 1]) < 1e-9)[0]
    top = np.where(np.abs(nodes[:, 1] - 50.0) < 1e-9)[0]
    mesh = QuadMesh(nodes, elements, bottom, top)
    return mesh.validate()
