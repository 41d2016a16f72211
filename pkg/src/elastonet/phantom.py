"""Target Young's-modulus fields and the multiplicative noise protocol.

Four field families cover the simulation studies:

* a stiff Gaussian bump in a soft background,
* piecewise-constant discs (with nesting) in a uniform background,
* a labeled region map (e.g. an organ cross-section in a gel block),
* a grayscale image mapped linearly onto a modulus range.

Noise is multiplicative and site-local: E'(x, y) = E(x, y) * (1 + p) with
p ~ U(-m, +m) drawn from a counter-based stream keyed on (seed, draw id,
coordinate bits), so evaluation order never changes the field and two draw
ids give statistically independent corruptions of the same target.
"""

import json
import pathlib

import numpy as np

from .errors import (DataFormatError, InvalidGeometryError,
                     InvalidParameterError)


class ModulusField:
    """Base class: a positive Young's-modulus function over a rectangle."""

    model_tag = "abstract"

    def __init__(self, width_mm=50.0, height_mm=50.0):
        if width_mm <= 0 or height_mm <= 0:
            raise InvalidParameterError("field dimensions must be positive")
        self.width_mm = float(width_mm)
        self.height_mm = float(height_mm)

    def eval(self, x, y):
        """Young's modulus in Pa at (x, y); accepts scalars or arrays."""
        raise NotImplementedError

    @property
    def native_shape(self):
        """(rows, cols) of an underlying pixel grid, or None if analytic."""
        return None

    def eval_grid(self, rows, cols):
        """Sample the field at the centers of a rows x cols pixel grid
        (row 0 at the top of the domain).  Returns a (rows, cols) array."""
        x = (np.arange(cols) + 0.5) * self.width_mm / cols
        y = self.height_mm - (np.arange(rows) + 0.5) * self.height_mm / rows
        xx, yy = np.meshgrid(x, y)
        return np.asarray(self.eval(xx, yy), dtype=float)


class GaussianInclusionField(ModulusField):
    model_tag = "gaussian_inclusion"

    def __init__(self, peak_pa, background_pa, center_mm, sigma_mm,
                 width_mm=50.0, height_mm=50.0):
        super().__init__(width_mm, height_mm)
        if not (peak_pa > background_pa > 0):
            raise InvalidParameterError(
                "need peak > background > 0 for the Gaussian inclusion")
        if sigma_mm <= 0:
            raise InvalidParameterError("sigma must be positive")
        self.peak_pa = float(peak_pa)
        self.background_pa = float(background_pa)
        self.center_mm = (float(center_mm[0]), float(center_mm[1]))
        self.sigma_mm = float(sigma_mm)

    def eval(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r2 = (x - self.center_mm[0]) ** 2 + (y - self.center_mm[1]) ** 2
        return self.background_pa + (self.peak_pa - self.background_pa) \
            * np.exp(-r2 / (2.0 * self.sigma_mm ** 2))


def make_gaussian_inclusion(peak_pa=30e3, background_pa=10e3, center_mm=None,
                            sigma_mm=6.0, width_mm=50.0, height_mm=50.0):
    """Stiff Gaussian-shaped inclusion in a soft background.

    Defaults: 30 kPa peak at the domain center, 10 kPa background,
    sigma = 6 mm.
    """
    if center_mm is None:
        center_mm = (width_mm / 2.0, height_mm / 2.0)
    return GaussianInclusionField(peak_pa, background_pa, center_mm, sigma_mm,
                                  width_mm, height_mm)


# default three-disc layout: nested stiff pair upper-left, single disc
# lower-right -- (cx, cy, radius, modulus)
DEFAULT_DISCS = ((12.5, 37.5, 6.0, 15e3),
                 (12.5, 37.5, 2.2, 30e3),
                 (38.0, 14.0, 4.5, 15e3))


class DiscInclusionField(ModulusField):
    model_tag = "three_inclusion"

    def __init__(self, background_pa, discs, width_mm=50.0, height_mm=50.0):
        super().__init__(width_mm, height_mm)
        if background_pa <= 0:
            raise InvalidParameterError("background modulus must be positive")
        discs = [tuple(float(v) for v in d) for d in discs]
        for (cx, cy, r, e) in discs:
            if r <= 0 or e <= 0:
                raise InvalidParameterError(
                    f"disc ({cx}, {cy}) needs positive radius and modulus")
            if (cx - r < 0 or cx + r > width_mm
                    or cy - r < 0 or cy + r > height_mm):
                raise InvalidGeometryError(
                    f"disc at ({cx}, {cy}) radius {r} exceeds the domain")
        self.background_pa = float(background_pa)
        # sort by descending radius so smaller (innermost) discs override
        self.discs = sorted(discs, key=lambda d: -d[2])

    def eval(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.full(np.broadcast(x, y).shape, self.background_pa)
        for (cx, cy, r, e) in self.discs:
            inside = (x - cx) ** 2 + (y - cy) ** 2 <= r * r
            out = np.where(inside, e, out)
        return out


def make_three_inclusion(background_pa=8e3, discs=DEFAULT_DISCS,
                         width_mm=50.0, height_mm=50.0):
    """Piecewise-constant disc inclusions; the innermost disc wins where
    discs nest.  An empty disc list yields the uniform background."""
    return DiscInclusionField(background_pa, discs, width_mm, height_mm)


class RegionLabeledField(ModulusField):
    model_tag = "region_labeled"

    def __init__(self, label_grid, region_moduli, width_mm=50.0,
                 height_mm=50.0):
        super().__init__(width_mm, height_mm)
        grid = np.asarray(label_grid, dtype=int)
        if grid.ndim != 2 or grid.size == 0:
            raise InvalidParameterError("label grid must be 2-D and nonempty")
        moduli = {int(k): float(v) for k, v in region_moduli.items()}
        for lab in np.unique(grid):
            if int(lab) not in moduli:
                raise InvalidParameterError(
                    f"label {int(lab)} has no modulus entry")
        if any(v <= 0 for v in moduli.values()):
            raise InvalidParameterError("all region moduli must be positive")
        self.label_grid = grid
        self.region_moduli = moduli
        lut_size = int(grid.max()) + 1
        self._lut = np.zeros(lut_size)
        for k, v in moduli.items():
            if 0 <= k < lut_size:
                self._lut[k] = v

    def _pixel_index(self, x, y):
        rows, cols = self.label_grid.shape
        c = np.clip((np.asarray(x) / self.width_mm * cols).astype(int),
                    0, cols - 1)
        r = np.clip(((self.height_mm - np.asarray(y)) / self.height_mm
                     * rows).astype(int), 0, rows - 1)
        return r, c

    def eval(self, x, y):
        r, c = self._pixel_index(x, y)
        return self._lut[self.label_grid[r, c]]

    def label_at(self, x, y):
        r, c = self._pixel_index(x, y)
        return self.label_grid[r, c]

    @property
    def native_shape(self):
        return self.label_grid.shape


def make_region_labeled(label_grid, region_moduli, width_mm=50.0,
                        height_mm=50.0):
    """Piecewise-constant field from an integer label map (nearest pixel);
    every label present in the grid must have a modulus entry."""
    return RegionLabeledField(label_grid, region_moduli, width_mm, height_mm)


class ImageDerivedField(ModulusField):
    model_tag = "image_derived"

    def __init__(self, grid, e_min_pa, e_max_pa, width_mm=50.0,
                 height_mm=50.0):
        super().__init__(width_mm, height_mm)
        if not (e_max_pa > e_min_pa > 0):
            raise InvalidParameterError("need e_max > e_min > 0")
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 2 or grid.size == 0:
            raise InvalidParameterError("image grid must be 2-D and nonempty")
        lo, hi = float(grid.min()), float(grid.max())
        if hi > lo:
            norm = (grid - lo) / (hi - lo)
        else:
            # constant image: map to the midpoint of the modulus range
            norm = np.full_like(grid, 0.5)
        self.e_grid = e_min_pa + norm * (e_max_pa - e_min_pa)
        self.e_min_pa = float(e_min_pa)
        self.e_max_pa = float(e_max_pa)

    def eval(self, x, y):
        """Bilinear interpolation between pixel centers (clamped edges)."""
        rows, cols = self.e_grid.shape
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        # fractional pixel coordinates of the sample point
        fc = x / self.width_mm * cols - 0.5
        fr = (self.height_mm - y) / self.height_mm * rows - 0.5
        c0 = np.clip(np.floor(fc).astype(int), 0, cols - 2)
        r0 = np.clip(np.floor(fr).astype(int), 0, rows - 2)
        tc = np.clip(fc - c0, 0.0, 1.0)
        tr = np.clip(fr - r0, 0.0, 1.0)
        g = self.e_grid
        return ((1 - tr) * ((1 - tc) * g[r0, c0] + tc * g[r0, c0 + 1])
                + tr * ((1 - tc) * g[r0 + 1, c0] + tc * g[r0 + 1, c0 + 1]))

    @property
    def native_shape(self):
        return self.e_grid.shape


def make_image_derived(grid, e_min_pa=8e3, e_max_pa=30e3, width_mm=50.0,
                       height_mm=50.0):
    """Grayscale image linearly rescaled onto [e_min, e_max] with bilinear
    interpolation between pixel centers."""
    return ImageDerivedField(grid, e_min_pa, e_max_pa, width_mm, height_mm)


# ---------------------------------------------------------------------------
# noise protocol
# ---------------------------------------------------------------------------

class NoiseSpec:
    """Multiplicative uniform noise description.

    relative_magnitude m gives E' = E (1 + p), p ~ U(-m, +m); draws are
    keyed on (rng_seed, independent_draw_id, site), so two draw ids yield
    independent corruptions of the same field.
    """

    def __init__(self, relative_magnitude, rng_seed=0, independent_draw_id=1):
        if not 0.0 <= relative_magnitude < 1.0:
            raise InvalidParameterError(
                "relative noise magnitude must lie in [0, 1)")
        self.relative_magnitude = float(relative_magnitude)
        self.rng_seed = int(rng_seed)
        self.independent_draw_id = int(independent_draw_id)


class NoisyField(ModulusField):
    """A modulus field with site-local multiplicative noise applied."""

    def __init__(self, base, spec):
        super().__init__(base.width_mm, base.height_mm)
        self.base = base
        self.spec = spec
        self.model_tag = base.model_tag

    def eval(self, x, y):
        clean = np.asarray(self.base.eval(x, y), dtype=float)
        m = self.spec.relative_magnitude
        if m == 0.0:
            return clean
        x = np.broadcast_to(np.asarray(x, dtype=float), clean.shape)
        y = np.broadcast_to(np.asarray(y, dtype=float), clean.shape)
        p = np.empty(clean.shape)
        flat_x = np.ravel(x)
        flat_y = np.ravel(y)
        flat_p = np.ravel(p)
        for i in range(flat_x.size):
            flat_p[i] = _site_uniform(self.spec.rng_seed,
                                      self.spec.independent_draw_id,
                                      flat_x[i], flat_y[i])
        return clean * (1.0 + m * p.reshape(clean.shape))

    @property
    def native_shape(self):
        return self.base.native_shape


def _site_uniform(seed, draw_id, x, y):
    """Deterministic U(-1, 1) draw keyed on (seed, draw id, coordinates)."""
    xb = int(np.float64(x).view(np.uint64))
    yb = int(np.float64(y).view(np.uint64))
    ss = np.random.SeedSequence([seed, draw_id, xb, yb])
    return 2.0 * np.random.default_rng(ss).random() - 1.0


def apply_noise(field, spec):
    """Return the noise-corrupted version of `field` under `spec`."""
    return NoisyField(field, spec)


def measure_psnr(field, spec, sites_xy):
    """Empirical peak signal-to-noise ratio of the corruption at the given
    sample sites: 20 log10(peak clean modulus / RMS noise amplitude)."""
    sites_xy = np.asarray(sites_xy, dtype=float)
    clean = np.asarray(field.eval(sites_xy[:, 0], sites_xy[:, 1]))
    noisy = apply_noise(field, spec).eval(sites_xy[:, 0], sites_xy[:, 1])
    rms = float(np.sqrt(np.mean((noisy - clean) ** 2)))
    return 20.0 * np.log10(float(clean.max()) / rms)


# ---------------------------------------------------------------------------
# procedural inputs for the labeled and image-derived models
# ---------------------------------------------------------------------------

# region moduli in Pa for the kidney-in-gelatin layout, labels 0..6:
# gelatin, cortex, medulla, pyramids, pelvis, capsule, vessels
DEFAULT_REGION_MODULI = {0: 23e3, 1: 26e3, 2: 18e3, 3: 15e3, 4: 12e3,
                         5: 30e3, 6: 24e3}

_KIDNEY_CENTER = (25.0, 27.0)
_KIDNEY_ANGLE_DEG = 20.0
_BODY_AXES = (14.0, 9.0)
_CAPSULE_INNER = (12.8, 7.8)
_CORTEX_INNER = (10.5, 6.2)
_PELVIS_CENTER_UV = (-4.0, 0.0)
_PELVIS_AXES = (5.5, 3.2)
_NOTCH_CENTER_UV = (-13.0, 0.0)
_NOTCH_R = 4.0
_PYRAMIDS_UV = ((3.5, 3.4), (5.5, -0.5), (3.0, -3.6))
_PYRAMID_R = 1.9
_VESSELS_UV = ((-11.0, 0.0, 1.6), (-8.0, -1.5, 1.1))


def make_kidney_label_grid(rows=100, cols=100, width_mm=50.0,
                           height_mm=50.0):
    """Seven-label kidney-in-gelatin map (labels 0..6, row 0 at the top).

    Deterministic geometry: a rotated elliptical organ with capsule rim,
    cortex, medulla, pelvis, three pyramids, and two vessels, embedded in a
    gelatin background.
    """
    x = (np.arange(cols) + 0.5) * width_mm / cols
    y = height_mm - (np.arange(rows) + 0.5) * height_mm / rows
    xx, yy = np.meshgrid(x, y)
    ca = np.cos(np.deg2rad(_KIDNEY_ANGLE_DEG))
    sa = np.sin(np.deg2rad(_KIDNEY_ANGLE_DEG))
    dx, dy = xx - _KIDNEY_CENTER[0], yy - _KIDNEY_CENTER[1]
    u = ca * dx + sa * dy
    v = -sa * dx + ca * dy

    def in_ellipse(ax, ay):
        return (u / ax) ** 2 + (v / ay) ** 2 <= 1.0

    notch = ((u - _NOTCH_CENTER_UV[0]) ** 2
             + (v - _NOTCH_CENTER_UV[1]) ** 2) <= _NOTCH_R ** 2
    body = in_ellipse(*_BODY_AXES) & ~notch

    lab = np.zeros((rows, cols), dtype=int)
    lab[body] = 1                                        # cortex
    lab[body & in_ellipse(*_CORTEX_INNER)] = 2           # medulla
    lab[body & ~in_ellipse(*_CAPSULE_INNER)] = 5         # capsule rim
    pel = (((u - _PELVIS_CENTER_UV[0]) / _PELVIS_AXES[0]) ** 2
           + ((v - _PELVIS_CENTER_UV[1]) / _PELVIS_AXES[1]) ** 2) <= 1.0
    lab[body & pel] = 4                                  # pelvis
    for (uc, vc) in _PYRAMIDS_UV:
        lab[body & ((u - uc) ** 2 + (v - vc) ** 2 <= _PYRAMID_R ** 2)] = 3
    for (uc, vc, r) in _VESSELS_UV:
        lab[body & ((u - uc) ** 2 + (v - vc) ** 2 <= r ** 2)] = 6
    return lab


def _soft_ellipse(xx, yy, cx, cy, ax, ay, angle_deg, core=0.7):
    """Smooth-edged ellipse membership in [0, 1] (1 inside the core)."""
    ca = np.cos(np.deg2rad(angle_deg))
    sa = np.sin(np.deg2rad(angle_deg))
    u = ca * (xx - cx) + sa * (yy - cy)
    v = -sa * (xx - cx) + ca * (yy - cy)
    rho = np.sqrt((u / ax) ** 2 + (v / ay) ** 2)
    w = np.clip((1.0 - rho) / (1.0 - core), 0.0, 1.0)
    return w * w * (3.0 - 2.0 * w)


def make_synthetic_scan(rows=64, cols=64, width_mm=50.0, height_mm=50.0):
    """Deterministic grayscale stand-in for an anatomical scan.

    Composition: vignetted mid-gray base, smooth texture waves, two bright
    organ-like blobs, two dark pockets.  The darkest pocket carries an exact
    4x4 zero-intensity core and a single anchor pixel holds intensity 1.0,
    so the mapped modulus range is attained exactly and dark/bright plateaus
    survive bilinear resampling.
    """
    x = (np.arange(cols) + 0.5) * width_mm / cols
    y = height_mm - (np.arange(rows) + 0.5) * height_mm / rows
    xx, yy = np.meshgrid(x, y)
    img = np.full((rows, cols), 0.45)
    img -= 0.12 * (((xx - 25.0) ** 2 + (yy - 25.0) ** 2) / 35.0 ** 2)
    img += 0.06 * np.sin(2 * np.pi * xx / 17.3) * np.cos(2 * np.pi * yy / 13.1)
    img += 0.04 * np.sin(2 * np.pi * (xx + yy) / 23.7)
    img += 0.48 * _soft_ellipse(xx, yy, 25.0, 15.0, 9.0, 5.5, -10.0)
    img += 0.34 * _soft_ellipse(xx, yy, 11.5, 31.0, 5.5, 4.0, 0.0)
    img -= 0.60 * _soft_ellipse(xx, yy, 25.5, 33.0, 7.0, 4.5, 15.0)
    img -= 0.33 * _soft_ellipse(xx, yy, 39.0, 25.0, 4.5, 6.5, 0.0)
    img = np.clip(img, 0.02, 0.93)

    # exact dark core (4x4 pixels) inside the first pocket
    r0 = int((height_mm - 33.0) / height_mm * rows)
    c0 = int(25.5 / width_mm * cols)
    img[r0 - 1:r0 + 3, c0 - 1:c0 + 3] = 0.0
    # single full-intensity anchor at the bright organ center
    ra = int((height_mm - 15.0) / height_mm * rows)
    ca_ = int(25.0 / width_mm * cols)
    img[ra, ca_] = 1.0
    return img


# ---------------------------------------------------------------------------
# grid / image file formats and declarative configs
# ---------------------------------------------------------------------------

def write_grid_text(grid, path):
    """Plain-text grid: header 'rows cols', then row-major values."""
    grid = np.asarray(grid)
    with open(path, "w") as fh:
        fh.write(f"{grid.shape[0]} {grid.shape[1]}\n")
        for row in grid:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_grid_text(path):
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise DataFormatError(f"grid file {path} lacks a header")
    rows, cols = int(tokens[0]), int(tokens[1])
    vals = tokens[2:]
    if len(vals) != rows * cols:
        raise DataFormatError(
            f"grid file {path}: expected {rows * cols} values, "
            f"found {len(vals)}")
    return np.array([float(v) for v in vals]).reshape(rows, cols)


def write_pgm(grid, path, window=None):
    """8-bit binary PGM with a linear gray map over `window` (min, max)."""
    grid = np.asarray(grid, dtype=float)
    if window is None:
        window = (float(grid.min()), float(grid.max()))
    lo, hi = window
    span = hi - lo if hi > lo else 1.0
    pix = np.clip((grid - lo) / span * 255.0, 0.0, 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{grid.shape[1]} {grid.shape[0]}\n255\n".encode())
        fh.write(pix.tobytes())
    return window


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise DataFormatError(f"{path} is not a binary PGM file")
    cols, rows, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise DataFormatError("only 8-bit PGM images are supported")
    pix = np.frombuffer(parts[4][:rows * cols], dtype=np.uint8)
    return pix.reshape(rows, cols).astype(float) / 255.0


def save_phantom_config(field_cfg, path):
    """Write a declarative phantom config (JSON) to disk."""
    with open(path, "w") as fh:
        json.dump(field_cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_phantom_config(path):
    """Build a ModulusField from a declarative JSON config file.

    Referenced grid/image files are resolved relative to the config file.
    """
    path = pathlib.Path(path)
    with open(path) as fh:
        cfg = json.load(fh)
    return field_from_config(cfg, base_dir=path.parent)


def field_from_config(cfg, base_dir="."):
    """Build a ModulusField from a config dictionary."""
    base_dir = pathlib.Path(base_dir)
    kind = cfg.get("kind")
    w = float(cfg.get("width_mm", 50.0))
    h = float(cfg.get("height_mm", 50.0))
    if kind == "gaussian_inclusion":
        return make_gaussian_inclusion(
            cfg.get("peak_pa", 30e3), cfg.get("background_pa", 10e3),
            cfg.get("center_mm"), cfg.get("sigma_mm", 6.0), w, h)
    if kind == "three_inclusion":
        discs = cfg.get("discs", DEFAULT_DISCS)
        return make_three_inclusion(cfg.get("background_pa", 8e3), discs,
                                    w, h)
    if kind == "region_labeled":
        if "label_file" in cfg:
            grid = read_grid_text(base_dir / cfg["label_file"]).astype(int)
        elif "label_grid" in cfg:
            grid = np.asarray(cfg["label_grid"], dtype=int)
        else:
            grid = make_kidney_label_grid(width_mm=w, height_mm=h)
        moduli = cfg.get("moduli", DEFAULT_REGION_MODULI)
        return make_region_labeled(grid, moduli, w, h)
    if kind == "image_derived":
        if "image_file" in cfg:
            name = str(cfg["image_file"])
            if name.endswith(".pgm"):
                grid = read_pgm(base_dir / name)
            else:
                grid = read_grid_text(base_dir / name)
        elif "image_grid" in cfg:
            grid = np.asarray(cfg["image_grid"], dtype=float)
        else:
            grid = make_synthetic_scan(width_mm=w, height_mm=h)
        return make_image_derived(grid, cfg.get("e_min_pa", 8e3),
                                  cfg.get("e_max_pa", 30e3), w, h)
    raise InvalidParameterError(f"unknown phantom kind {kind!r}")
