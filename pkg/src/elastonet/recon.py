"""Modulus-image reconstruction from the combined constitutive model.

The combined model pairs the material network (scaled strain to scaled
stress at reference stiffness) with the spatial network (coordinate to
strain scale).  Probing it with one fixed strain vector at every pixel
and inverting the plane-stress relation for the axial stress component
yields a Young's-modulus image:

    E(x, y) = sigma_22(x, y) * (1 - nu^2) / (nu * eps_11 + eps_22)

with sigma_22 in Pa and nu = 0.5.  The probe strain is arbitrary within
the material network's training range; the default mirrors the data
magnitudes the networks saw (axial 0.005, lateral 0.003, near-zero
shear).  Scoring compares the image against a ground-truth field on the
target's native pixel grid via the relative error |E_t - E| / E_t.
"""

import os

import numpy as np

from .errors import (DataFormatError, InvalidParameterError, NumericError,
                     OutOfDomainError, UnitMismatchError)
from .fesolve import DEFAULT_POISSON
from .mpn import MaterialPropertyNet
from .sn import SpatialNet, predict_scale

DEFAULT_PROBE_STRAIN = (0.003, 0.005, 0.0001)
DEFAULT_GRID_ROWS = 101
DEFAULT_GRID_COLS = 101
PROBE_STRAIN_LIMIT = 0.2
MPN_FILENAME = "material.mpnfile"
SN_FILENAME = "spatial.snfile"


def _check_probe_strain(probe_strain, poisson):
    probe = np.asarray(probe_strain, dtype=float)
    if probe.shape != (3,):
        raise InvalidParameterError("probe strain must be a 3-vector")
    if np.any(np.abs(probe) > PROBE_STRAIN_LIMIT):
        raise InvalidParameterError(
            f"probe strain components must stay within "
            f"+-{PROBE_STRAIN_LIMIT} (the material training range)")
    denom = poisson * probe[0] + probe[1]
    if abs(denom) < 1e-12:
        raise InvalidParameterError(
            "probe strain makes the plane-stress inversion denominator "
            f"nu*e11 + e22 = {denom!r}; choose a probe with "
            "nu*e11 + e22 != 0")
    return probe


def modulus_from_axial_stress(stress22_pa, probe_strain,
                              poisson=DEFAULT_POISSON):
    """Invert plane stress for Young's modulus.

    E = sigma_22 (1 - nu^2) / (nu e11 + e22), elementwise over any
    array of axial stresses, with the probe strain held fixed.
    """
    probe = _check_probe_strain(probe_strain, poisson)
    denom = poisson * probe[0] + probe[1]
    return np.asarray(stress22_pa, dtype=float) \
        * (1.0 - poisson ** 2) / denom


class Cann:
    """Combined constitutive model: material network + spatial network.

    ``mesh_norm`` is the (center, half_extent) pair normalizing mm
    coordinates; it must agree with the normalization stored in the
    spatial network, and ``stress_unit_pa`` must agree with the material
    network's unit, so the two networks are guaranteed to have been
    trained against the same mesh and the same stress convention.
    """

    def __init__(self, mpn, sn, mesh_norm=None, stress_unit_pa=None):
        if not isinstance(mpn, MaterialPropertyNet):
            raise InvalidParameterError(
                "first component must be a MaterialPropertyNet")
        if not isinstance(sn, SpatialNet):
            raise InvalidParameterError(
                "second component must be a SpatialNet")
        if mesh_norm is None:
            center, half_extent = sn.center, sn.half_extent
        else:
            center = np.asarray(mesh_norm[0], dtype=float)
            half_extent = np.asarray(mesh_norm[1], dtype=float)
            if not (np.allclose(center, sn.center)
                    and np.allclose(half_extent, sn.half_extent)):
                raise InvalidParameterError(
                    "mesh normalization does not match the spatial "
                    f"network's ({sn.center}, {sn.half_extent})")
        if stress_unit_pa is None:
            stress_unit_pa = mpn.stress_unit_pa
        elif not np.isclose(stress_unit_pa, mpn.stress_unit_pa):
            raise UnitMismatchError(
                f"combined-model stress unit {stress_unit_pa} Pa does not "
                f"match the material network's {mpn.stress_unit_pa} Pa")
        self.mpn = mpn
        self.sn = sn
        self.center = center
        self.half_extent = half_extent
        self.stress_unit_pa = float(stress_unit_pa)

    @property
    def extent_mm(self):
        """(x_lo, x_hi, y_lo, y_hi) of the modeled domain."""
        lo = self.center - self.half_extent
        hi = self.center + self.half_extent
        return (float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1]))

    def save(self, dirpath):
        """Write both networks into a directory."""
        os.makedirs(dirpath, exist_ok=True)
        self.mpn.save(os.path.join(dirpath, MPN_FILENAME))
        self.sn.save(os.path.join(dirpath, SN_FILENAME))

    @classmethod
    def load(cls, dirpath, expect_stress_unit_pa=None):
        mpn_path = os.path.join(dirpath, MPN_FILENAME)
        sn_path = os.path.join(dirpath, SN_FILENAME)
        for path in (mpn_path, sn_path):
            if not os.path.exists(path):
                raise DataFormatError(
                    f"combined-model directory lacks {os.path.basename(path)}")
        mpn = MaterialPropertyNet.load(mpn_path, expect_stress_unit_pa)
        sn = SpatialNet.load(sn_path)
        return cls(mpn, sn)


class ModulusImage:
    """A rows x cols Young's-modulus grid (Pa) over a mm rectangle.

    The grid uses the node convention: entry [0, 0] sits at the top-left
    corner (x_lo, y_hi) and entry [-1, -1] at the bottom-right corner
    (x_hi, y_lo), so linspace endpoints touch the extent exactly.  All
    entries must be finite; nonpositive entries are legal but counted in
    ``n_nonpositive`` as a quality diagnostic rather than clamped.
    """

    def __init__(self, grid, extent_mm, probe_strain=DEFAULT_PROBE_STRAIN):
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 2 or grid.shape[0] < 2 or grid.shape[1] < 2:
            raise InvalidParameterError(
                "modulus image needs an at least 2 x 2 grid")
        if not np.all(np.isfinite(grid)):
            raise NumericError("modulus image contains non-finite entries")
        extent = tuple(float(v) for v in extent_mm)
        if len(extent) != 4 or extent[0] >= extent[1] \
                or extent[2] >= extent[3]:
            raise InvalidParameterError(
                "extent must be (x_lo, x_hi, y_lo, y_hi) with lo < hi")
        self.grid = grid
        self.extent_mm = extent
        self.probe_strain = np.asarray(probe_strain, dtype=float)
        self.n_nonpositive = int(np.count_nonzero(grid <= 0.0))

    @property
    def shape(self):
        return self.grid.shape

    def at(self, x, y):
        """Bilinear sample of the image at mm coordinates (clamped)."""
        x_lo, x_hi, y_lo, y_hi = self.extent_mm
        rows, cols = self.grid.shape
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        fc = np.clip((x - x_lo) / (x_hi - x_lo), 0.0, 1.0) * (cols - 1)
        fr = np.clip((y_hi - y) / (y_hi - y_lo), 0.0, 1.0) * (rows - 1)
        c0 = np.clip(np.floor(fc).astype(int), 0, cols - 2)
        r0 = np.clip(np.floor(fr).astype(int), 0, rows - 2)
        tc = fc - c0
        tr = fr - r0
        g = self.grid
        return ((1 - tr) * ((1 - tc) * g[r0, c0] + tc * g[r0, c0 + 1])
                + tr * ((1 - tc) * g[r0 + 1, c0] + tc * g[r0 + 1, c0 + 1]))

    # -- serialization ----------------------------------------------------
    def save_csv(self, path):
        x_lo, x_hi, y_lo, y_hi = self.extent_mm
        p = self.probe_strain
        with open(path, "w") as fh:
            fh.write("# modulusimage 1\n")
            fh.write("# unit Pa\n")
            fh.write(f"# extent_mm {x_lo!r} {x_hi!r} {y_lo!r} {y_hi!r}\n")
            fh.write(f"# probe_strain {float(p[0])!r} {float(p[1])!r} "
                     f"{float(p[2])!r}\n")
            fh.write(f"{self.grid.shape[0]} {self.grid.shape[1]}\n")
            for row in self.grid:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def load_csv(cls, path):
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if not lines or lines[0].split() != ["#", "modulusimage", "1"]:
            raise DataFormatError(f"{path} is not a version-1 modulus image")
        meta = {}
        i = 1
        while i < len(lines) and lines[i].startswith("#"):
            parts = lines[i].split()
            if len(parts) >= 2:
                meta[parts[1]] = parts[2:]
            i += 1
        for key in ("unit", "extent_mm", "probe_strain"):
            if key not in meta:
                raise DataFormatError(f"modulus image lacks {key} metadata")
        if meta["unit"] != ["Pa"]:
            raise UnitMismatchError(
                f"modulus image unit {' '.join(meta['unit'])!r} is not Pa")
        extent = [float(v) for v in meta["extent_mm"]]
        probe = [float(v) for v in meta["probe_strain"]]
        if i >= len(lines):
            raise DataFormatError("modulus image lacks a grid header")
        rows, cols = (int(v) for v in lines[i].split())
        body = lines[i + 1:]
        if len(body) != rows:
            raise DataFormatError(
                f"modulus image: expected {rows} grid rows, "
                f"found {len(body)}")
        grid = np.array([[float(v) for v in ln.split(",")] for ln in body])
        if grid.shape != (rows, cols):
            raise DataFormatError("modulus image grid width mismatch")
        return cls(grid, extent, probe)


def reconstruct(cann, grid_rows=DEFAULT_GRID_ROWS,
                grid_cols=DEFAULT_GRID_COLS,
                probe_strain=DEFAULT_PROBE_STRAIN,
                poisson=DEFAULT_POISSON):
    """Render the combined model as a Young's-modulus image.

    One fixed probe strain is pushed through the model at every grid
    point: the spatial network supplies the local strain scale, the
    material network the stress, and the plane-stress inversion the
    modulus.  Returns a ModulusImage over the model's domain.
    """
    probe = _check_probe_strain(probe_strain, poisson)
    if grid_rows < 2 or grid_cols < 2:
        raise InvalidParameterError("reconstruction grid must be >= 2 x 2")
    x_lo, x_hi, y_lo, y_hi = cann.extent_mm
    xs = np.linspace(x_lo, x_hi, grid_cols)
    ys = np.linspace(y_hi, y_lo, grid_rows)
    xx, yy = np.meshgrid(xs, ys)
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    scales = predict_scale(cann.sn, None, pts)
    stress_pa = cann.mpn.predict_stress(probe[None, :] / scales)
    young = modulus_from_axial_stress(stress_pa[:, 1], probe, poisson)
    return ModulusImage(young.reshape(grid_rows, grid_cols),
                        (x_lo, x_hi, y_lo, y_hi), probe)


def score(image, target, grid_rows=None, grid_cols=None):
    """Relative-error score of an image against a ground-truth field.

    Both are resampled to a common pixel-center grid — the target's
    native grid when it has one, else 101 x 101 — and compared through
    e = |E_target - E_image| / E_target.  Returns (mean, population
    std, error map).
    """
    x_lo, x_hi, y_lo, y_hi = image.extent_mm
    tol = 1e-9
    if x_lo < -tol or y_lo < -tol or x_hi > target.width_mm + tol \
            or y_hi > target.height_mm + tol:
        raise OutOfDomainError(
            f"image extent {image.extent_mm} exceeds the target domain "
            f"{target.width_mm} x {target.height_mm} mm")
    if grid_rows is None or grid_cols is None:
        native = target.native_shape
        if native is not None:
            grid_rows, grid_cols = native
        else:
            grid_rows, grid_cols = DEFAULT_GRID_ROWS, DEFAULT_GRID_COLS
    target_grid = target.eval_grid(grid_rows, grid_cols)
    x = (np.arange(grid_cols) + 0.5) * target.width_mm / grid_cols
    y = target.height_mm \
        - (np.arange(grid_rows) + 0.5) * target.height_mm / grid_rows
    xx, yy = np.meshgrid(x, y)
    image_grid = image.at(xx, yy)
    error_map = np.abs(target_grid - image_grid) / target_grid
    return float(error_map.mean()), float(error_map.std()), error_map


def render(image, out_base, window=None):
    """Write an image as CSV + 8-bit PGM + window sidecar.

    The PGM maps the modulus linearly to gray over `window` (min, max),
    defaulting to the image's own range; the window used is recorded in
    `<out_base>.window.txt`.  Returns the three paths written.
    """
    from .phantom import write_pgm

    csv_path = out_base + ".csv"
    pgm_path = out_base + ".pgm"
    sidecar_path = out_base + ".window.txt"
    image.save_csv(csv_path)
    used = write_pgm(image.grid, pgm_path, window)
    with open(sidecar_path, "w") as fh:
        fh.write(f"window_pa {used[0]!r} {used[1]!r}\n")
    return csv_path, pgm_path, sidecar_path
