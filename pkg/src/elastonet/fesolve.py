"""Plane-stress, small-strain, linear-elastic finite-element solver.

Produces the spatially varying stress/strain dataset for a meshed block
compressed from the top by a flat probe.  Internally the solver works in an
N/mm/MPa unit system (so stiffness entries stay O(1)); all public stresses
are Pa and all lengths are mm.

The dataset convention downstream of the solver: one record per element per
load step, coordinates at the element centroid, strain as the 2x2
Gauss-point average of B.u, stress as C_element times that strain.
"""

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .errors import (DataFormatError, InvalidGeometryError,
                     InvalidParameterError, SolverError, UnitMismatchError)
from .femesh import GAUSS_1D, q4_shape_gradients

# stress values this many Pa map to 1.0 in network training units
STRESS_UNIT_PA = 1.0e4

DEFAULT_POISSON = 0.5
DEFAULT_TOTAL_FORCE_N = 0.01357
# Probe width trades corner observability against block displacement: a
# narrow probe leaves the top corners nearly stress-free, so the descent
# stage has no signal there and the reconstruction falls back to the
# reference modulus (visible as corner bias on phantoms whose background
# differs from the reference).  30 mm keeps every phantom's probe
# displacement inside the published window while giving the corners
# enough stress to calibrate against.
DEFAULT_PROBE_WIDTH_MM = 30.0

_GAUSS_POINTS = [(xi, eta) for eta in GAUSS_1D for xi in GAUSS_1D]

_DATASET_HEADER = "x_mm,y_mm,step,s11,s22,s12,e11,e22,e12,aug"


def elasticity_matrix(young_pa, poisson=DEFAULT_POISSON):
    """Plane-stress elasticity matrix in Pa for Young's modulus E and
    Poisson ratio nu: C = E/(1-nu^2) [[1, nu, 0], [nu, 1, 0],
    [0, 0, (1-nu)/2]]."""
    if young_pa <= 0:
        raise InvalidParameterError("Young's modulus must be positive")
    if not -1.0 < poisson < 1.0:
        raise InvalidParameterError("Poisson ratio must lie in (-1, 1)")
    nu = float(poisson)
    return float(young_pa) / (1.0 - nu * nu) * np.array(
        [[1.0, nu, 0.0],
         [nu, 1.0, 0.0],
         [0.0, 0.0, (1.0 - nu) / 2.0]])


class ElasticityMatrix:
    """Plane-stress constitutive matrix for one (E, nu) pair."""

    def __init__(self, young_pa, poisson=DEFAULT_POISSON):
        self.young_pa = float(young_pa)
        self.poisson = float(poisson)
        self.matrix_pa = elasticity_matrix(young_pa, poisson)

    def stress_pa(self, strain):
        """sigma = C . epsilon for one strain vector or a batch."""
        strain = np.asarray(strain, dtype=float)
        return strain @ self.matrix_pa.T


class LoadProgram:
    """Incremental compression program applied by a flat frictionless probe.

    The total force is reached in `n_steps` equal increments.  The probe is
    modeled as equal vertical point loads on the top-edge nodes lying within
    `probe_width_mm` centered on the top edge; lateral DOFs stay free.  The
    `uniform_pressure` load kind replaces the probe with consistent nodal
    loads for a uniform full-width pressure (used for closed-form checks).
    """

    def __init__(self, total_force_n=DEFAULT_TOTAL_FORCE_N, n_steps=4,
                 probe_width_mm=DEFAULT_PROBE_WIDTH_MM,
                 load_kind="probe_points", bottom_bc="pinned",
                 thickness_mm=1.0):
        if total_force_n < 0:
            raise InvalidParameterError("total force must be non-negative")
        if n_steps < 1:
            raise InvalidParameterError("need at least one load step")
        if probe_width_mm <= 0:
            raise InvalidParameterError("probe width must be positive")
        if thickness_mm <= 0:
            raise InvalidParameterError("thickness must be positive")
        if load_kind not in ("probe_points", "uniform_pressure"):
            raise InvalidParameterError(f"unknown load kind {load_kind!r}")
        if bottom_bc not in ("pinned", "roller"):
            raise InvalidParameterError(f"unknown bottom BC {bottom_bc!r}")
        self.total_force_n = float(total_force_n)
        self.n_steps = int(n_steps)
        self.probe_width_mm = float(probe_width_mm)
        self.load_kind = load_kind
        self.bottom_bc = bottom_bc
        self.thickness_mm = float(thickness_mm)

    def step_fractions(self):
        """Cumulative load fractions, e.g. [0.25, 0.5, 0.75, 1.0]."""
        return np.arange(1, self.n_steps + 1) / self.n_steps


def _element_b_matrices(mesh):
    """B matrices and Jacobian determinants at the four Gauss points.

    Returns (b, det_j) with b of shape (4, n_elements, 3, 8) and det_j of
    shape (4, n_elements).
    """
    coords = mesh.element_coords()
    n_el = coords.shape[0]
    b_all = np.empty((4, n_el, 3, 8))
    det_all = np.empty((4, n_el))
    for g, (xi, eta) in enumerate(_GAUSS_POINTS):
        dn = q4_shape_gradients(xi, eta)                    # (2, 4)
        jac = np.einsum("ak,ekb->eab", dn, coords)          # (E, 2, 2)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        inv = np.empty_like(jac)
        inv[:, 0, 0] = jac[:, 1, 1]
        inv[:, 0, 1] = -jac[:, 0, 1]
        inv[:, 1, 0] = -jac[:, 1, 0]
        inv[:, 1, 1] = jac[:, 0, 0]
        inv /= det[:, None, None]
        dn_xy = np.einsum("eab,bk->eak", inv, dn)           # (E, 2, 4)
        b = np.zeros((n_el, 3, 8))
        b[:, 0, 0::2] = dn_xy[:, 0, :]
        b[:, 1, 1::2] = dn_xy[:, 1, :]
        b[:, 2, 0::2] = dn_xy[:, 1, :]
        b[:, 2, 1::2] = dn_xy[:, 0, :]
        b_all[g] = b
        det_all[g] = det
    return b_all, det_all


def _element_c_internal(mesh, poisson):
    """(E, 3, 3) constitutive matrices in MPa (internal solver units)."""
    if mesh.element_modulus is None:
        raise InvalidParameterError(
            "mesh carries no element moduli; attach a field via with_moduli")
    nu = float(poisson)
    c_unit = np.array([[1.0, nu, 0.0],
                       [nu, 1.0, 0.0],
                       [0.0, 0.0, (1.0 - nu) / 2.0]]) / (1.0 - nu * nu)
    e_mpa = np.asarray(mesh.element_modulus, dtype=float) * 1e-6
    if np.any(e_mpa <= 0):
        raise InvalidParameterError("element moduli must be positive")
    return c_unit[None, :, :] * e_mpa[:, None, None]


def contact_nodes(mesh, program):
    """Top-edge nodes the probe touches, sorted by x coordinate."""
    top = np.asarray(mesh.top_nodes, dtype=int)
    if program.load_kind == "uniform_pressure":
        sel = top
    else:
        cx = mesh.center[0]
        half = program.probe_width_mm / 2.0
        xs = mesh.nodes[top, 0]
        sel = top[np.abs(xs - cx) <= half + 1e-9]
        if sel.size == 0:
            raise InvalidGeometryError(
                "no top-edge nodes under the probe; widen probe_width_mm")
    return sel[np.argsort(mesh.nodes[sel, 0], kind="stable")]


def _load_vector(mesh, program):
    """Full-load nodal force vector (N), downward on the top edge."""
    n_dof = 2 * mesh.nodes.shape[0]
    f = np.zeros(n_dof)
    nodes = contact_nodes(mesh, program)
    if program.load_kind == "probe_points":
        f[2 * nodes + 1] = -program.total_force_n / nodes.size
    else:
        xs = mesh.nodes[nodes, 0]
        width = xs[-1] - xs[0]
        if width <= 0:
            raise InvalidGeometryError("top edge has zero width")
        # consistent loads for uniform pressure on a chain of linear edges
        line_load = program.total_force_n / width      # N per mm of edge
        seg = np.diff(xs)
        f[2 * nodes[:-1] + 1] -= 0.5 * line_load * seg
        f[2 * nodes[1:] + 1] -= 0.5 * line_load * seg
    return f


def _fixed_dof_mask(mesh, program):
    n_dof = 2 * mesh.nodes.shape[0]
    fixed = np.zeros(n_dof, dtype=bool)
    bottom = np.asarray(mesh.bottom_nodes, dtype=int)
    fixed[2 * bottom + 1] = True
    if program.bottom_bc == "pinned":
        fixed[2 * bottom] = True
    else:
        # roller: one lateral pin (node nearest center x) kills translation
        pin = bottom[np.argmin(np.abs(mesh.nodes[bottom, 0]
                                      - mesh.center[0]))]
        fixed[2 * pin] = True
    return fixed


class FeaSolution:
    """Displacements and reactions for every load step of one program."""

    def __init__(self, mesh, program, poisson, displacements, reactions,
                 contact, fixed_mask):
        self.mesh = mesh
        self.program = program
        self.poisson = float(poisson)
        self.displacements = displacements        # (n_steps, n_nodes, 2) mm
        self.reactions = reactions                # (n_steps, n_nodes, 2) N
        self.contact_nodes = contact
        self.fixed_mask = fixed_mask

    def probe_displacements_mm(self):
        """Mean vertical displacement of the contact nodes per step
        (negative = downward)."""
        return self.displacements[:, self.contact_nodes, 1].mean(axis=1)


def assemble_and_solve(mesh, program=None, poisson=DEFAULT_POISSON):
    """Assemble the global stiffness and solve every load step.

    The mesh must carry per-element Young's moduli.  Returns a FeaSolution;
    raises SolverError if the reduced system is singular or the residual
    exceeds tolerance.
    """
    if program is None:
        program = LoadProgram()
    n_nodes = mesh.nodes.shape[0]
    n_dof = 2 * n_nodes

    b_all, det_all = _element_b_matrices(mesh)
    c_el = _element_c_internal(mesh, poisson)
    ke = np.zeros((mesh.elements.shape[0], 8, 8))
    for g in range(4):
        ke += np.einsum("eja,ejk,ekb->eab", b_all[g], c_el, b_all[g]) \
            * det_all[g][:, None, None]
    ke *= program.thickness_mm

    dof = np.empty((mesh.elements.shape[0], 8), dtype=int)
    dof[:, 0::2] = 2 * mesh.elements
    dof[:, 1::2] = 2 * mesh.elements + 1
    rows = np.repeat(dof, 8, axis=1).ravel()
    cols = np.tile(dof, (1, 8)).ravel()
    k_full = scipy.sparse.coo_matrix((ke.ravel(), (rows, cols)),
                                     shape=(n_dof, n_dof)).tocsc()

    f_full = _load_vector(mesh, program)
    fixed = _fixed_dof_mask(mesh, program)
    free = ~fixed
    k_ff = k_full[free][:, free]

    try:
        factor = scipy.sparse.linalg.splu(k_ff.tocsc())
    except RuntimeError as exc:
        raise SolverError(f"stiffness factorization failed: {exc}") from None

    fractions = program.step_fractions()
    disp = np.zeros((program.n_steps, n_nodes, 2))
    reac = np.zeros((program.n_steps, n_nodes, 2))
    for s, frac in enumerate(fractions):
        f_s = frac * f_full
        u = np.zeros(n_dof)
        if np.any(f_s[free] != 0.0):
            u_f = factor.solve(f_s[free])
            if not np.all(np.isfinite(u_f)):
                raise SolverError("singular system: add boundary conditions")
            residual = np.linalg.norm(k_ff @ u_f - f_s[free]) \
                / np.linalg.norm(f_s[free])
            if residual > 1e-10:
                u_f, info = scipy.sparse.linalg.cg(k_ff, f_s[free], x0=u_f,
                                                   rtol=1e-12, maxiter=2000)
                residual = np.linalg.norm(k_ff @ u_f - f_s[free]) \
                    / np.linalg.norm(f_s[free])
                if info != 0 or residual > 1e-10:
                    raise SolverError(
                        f"linear solve residual {residual:.3e} exceeds 1e-10")
            u[free] = u_f
        r = k_full @ u - f_s
        r[free] = 0.0
        disp[s] = u.reshape(n_nodes, 2)
        reac[s] = r.reshape(n_nodes, 2)
    return FeaSolution(mesh, program, poisson, disp, reac,
                       contact_nodes(mesh, program), fixed)


class SampleSet:
    """Flat table of (coordinate, load step, stress, strain, augmented)
    records; stresses in Pa, strains dimensionless.  `stress_unit_pa`
    declares how many Pa map to 1.0 in network training units.
    """

    def __init__(self, xy_mm, step, stress_pa, strain, aug=None,
                 stress_unit_pa=STRESS_UNIT_PA):
        self.xy_mm = np.asarray(xy_mm, dtype=float).reshape(-1, 2)
        n = self.xy_mm.shape[0]
        self.step = np.asarray(step, dtype=int).reshape(n)
        self.stress_pa = np.asarray(stress_pa, dtype=float).reshape(n, 3)
        self.strain = np.asarray(strain, dtype=float).reshape(n, 3)
        if aug is None:
            aug = np.zeros(n, dtype=int)
        self.aug = np.asarray(aug, dtype=int).reshape(n)
        self.stress_unit_pa = float(stress_unit_pa)

    @property
    def n_samples(self):
        return self.xy_mm.shape[0]

    def scaled_stress(self):
        """Stresses in network training units (Pa / stress_unit_pa)."""
        return self.stress_pa / self.stress_unit_pa

    def save_csv(self, path):
        with open(path, "w") as fh:
            fh.write("# sampleset 1\n")
            fh.write(f"# stress_unit_pa {self.stress_unit_pa!r}\n")
            fh.write(_DATASET_HEADER + "\n")
            for i in range(self.n_samples):
                vals = [repr(float(self.xy_mm[i, 0])),
                        repr(float(self.xy_mm[i, 1])),
                        str(int(self.step[i]))]
                vals += [repr(float(v)) for v in self.stress_pa[i]]
                vals += [repr(float(v)) for v in self.strain[i]]
                vals.append(str(int(self.aug[i])))
                fh.write(",".join(vals) + "\n")

    @classmethod
    def load_csv(cls, path, expect_stress_unit_pa=None):
        unit = None
        rows = []
        header_seen = False
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    tokens = line[1:].replace(":", " ").split()
                    if len(tokens) >= 2 and tokens[0] == "stress_unit_pa":
                        unit = float(tokens[1])
                    continue
                if not header_seen:
                    if line != _DATASET_HEADER:
                        raise DataFormatError(
                            f"{path}: unexpected dataset header {line!r}")
                    header_seen = True
                    continue
                parts = line.split(",")
                if len(parts) != 10:
                    raise DataFormatError(
                        f"{path}: expected 10 columns, got {len(parts)}")
                rows.append([float(v) for v in parts])
        if not header_seen:
            raise DataFormatError(f"{path}: missing dataset header")
        if unit is None:
            raise DataFormatError(f"{path}: missing stress_unit_pa metadata")
        if expect_stress_unit_pa is not None \
                and not np.isclose(unit, expect_stress_unit_pa):
            raise UnitMismatchError(
                f"{path}: stress unit {unit} Pa does not match expected "
                f"{expect_stress_unit_pa} Pa")
        data = np.asarray(rows, dtype=float).reshape(-1, 10)
        return cls(data[:, 0:2], data[:, 2].astype(int), data[:, 3:6],
                   data[:, 6:9], data[:, 9].astype(int), unit)


def extract_samples(solution):
    """Element-centroid stress/strain records for every load step.

    Strain is the average of B.u over the 2x2 Gauss points; stress is
    C_element times that strain (converted to Pa).
    """
    mesh = solution.mesh
    b_all, _ = _element_b_matrices(mesh)
    c_el = _element_c_internal(mesh, solution.poisson)
    cents = mesh.element_centroids()
    n_el = mesh.elements.shape[0]
    n_steps = solution.displacements.shape[0]

    xy = np.tile(cents, (n_steps, 1))
    step = np.repeat(np.arange(1, n_steps + 1), n_el)
    strain = np.empty((n_steps, n_el, 3))
    stress = np.empty((n_steps, n_el, 3))
    for s in range(n_steps):
        u_el = solution.displacements[s][mesh.elements]    # (E, 4, 2)
        u_flat = u_el.reshape(n_el, 8)
        eps = np.zeros((n_el, 3))
        for g in range(4):
            eps += np.einsum("eab,eb->ea", b_all[g], u_flat)
        eps /= 4.0
        strain[s] = eps
        stress[s] = np.einsum("eab,eb->ea", c_el, eps) * 1e6   # MPa -> Pa
    return SampleSet(xy, step, stress.reshape(-1, 3), strain.reshape(-1, 3))


def augment_frame_invariance(samples, rotation_shear_sign=False):
    """Append axis-swapped copies of every record (augmented flag = 1).

    The swap exchanges the axial and lateral components of both stress and
    strain.  With `rotation_shear_sign` the shear components also flip sign
    (the exact 90-degree-rotation transformation); by default they are kept
    as-is (plain component swap).
    """
    sign = -1.0 if rotation_shear_sign else 1.0
    swap = np.array([[0.0, 1.0, 0.0],
                     [1.0, 0.0, 0.0],
                     [0.0, 0.0, sign]])
    xy = np.vstack([samples.xy_mm, samples.xy_mm])
    step = np.concatenate([samples.step, samples.step])
    stress = np.vstack([samples.stress_pa, samples.stress_pa @ swap.T])
    strain = np.vstack([samples.strain, samples.strain @ swap.T])
    aug = np.concatenate([samples.aug, np.ones(samples.n_samples, int)])
    return SampleSet(xy, step, stress, strain, aug, samples.stress_unit_pa)


def make_dataset(mesh, field, program=None, poisson=DEFAULT_POISSON,
                 augment=True, rotation_shear_sign=False):
    """Solve the forward problem for `field` on `mesh` and extract the
    stress/strain dataset.  Returns (samples, solution)."""
    if program is None:
        program = LoadProgram()
    solved = assemble_and_solve(mesh.with_moduli(field), program, poisson)
    samples = extract_samples(solved)
    if augment:
        samples = augment_frame_invariance(samples, rotation_shear_sign)
    return samples, solved


def make_noisy_dataset(mesh, field, noise_magnitude, rng_seed=0,
                       program=None, poisson=DEFAULT_POISSON, augment=True,
                       rotation_shear_sign=False):
    """Dataset from two independently corrupted copies of the target field.

    The forward problem is solved twice with independent multiplicative
    noise draws; stresses are taken from the first solve and strains from
    the second, so the two channels carry independent corruption.  Returns
    (samples, stress_solution, strain_solution).
    """
    from .phantom import NoiseSpec, apply_noise

    if program is None:
        program = LoadProgram()
    spec1 = NoiseSpec(noise_magnitude, rng_seed, independent_draw_id=1)
    spec2 = NoiseSpec(noise_magnitude, rng_seed, independent_draw_id=2)
    sol1 = assemble_and_solve(mesh.with_moduli(apply_noise(field, spec1)),
                              program, poisson)
    sol2 = assemble_and_solve(mesh.with_moduli(apply_noise(field, spec2)),
                              program, poisson)
    s1 = extract_samples(sol1)
    s2 = extract_samples(sol2)
    samples = SampleSet(s1.xy_mm, s1.step, s1.stress_pa, s2.strain,
                        stress_unit_pa=s1.stress_unit_pa)
    if augment:
        samples = augment_frame_invariance(samples, rotation_shear_sign)
    return samples, sol1, sol2
