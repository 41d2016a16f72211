"""Phantoms: analytic fields, label maps, noise model, file IO.

Frozen region-map statistics come from tools/oracles/o09_psnr_region_map.py
(standalone 800x800 rasterization of the same geometry constants).
"""

import numpy as np
import pytest

from elastonet import phantom
from elastonet.errors import (DataFormatError, InvalidGeometryError,
                              InvalidParameterError)


def test_gaussian_inclusion_values():
    f = phantom.make_gaussian_inclusion()
    assert f.eval(25.0, 25.0) == pytest.approx(30e3)
    # one sigma (6 mm) from center: bg + 20e3 * exp(-1/2)
    assert f.eval(31.0, 25.0) == pytest.approx(10e3 + 20e3 * np.exp(-0.5))
    assert f.eval(0.0, 0.0) == pytest.approx(10e3, rel=1e-6)
    grid = f.eval_grid(5, 5)
    assert grid.shape == (5, 5)
    assert grid[2, 2] == grid.max()          # center pixel is the peak


def test_three_inclusion_priority():
    f = phantom.make_three_inclusion()
    # nested discs at (12.5, 37.5): inner r=2.2 at 30 kPa wins over the
    # outer r=6 disc at 15 kPa; background is 8 kPa
    assert f.eval(12.5, 37.5) == pytest.approx(30e3)
    assert f.eval(12.5, 37.5 - 4.0) == pytest.approx(15e3)
    assert f.eval(38.0, 14.0) == pytest.approx(15e3)
    assert f.eval(2.0, 2.0) == pytest.approx(8e3)


def test_disc_outside_domain_rejected():
    with pytest.raises(InvalidGeometryError):
        phantom.make_three_inclusion(
            8e3, ((49.0, 25.0, 5.0, 15e3),))


def test_kidney_region_fractions():
    # tools/oracles/o09_psnr_region_map.py (800x800 raster):
    # fractions [0.8534, 0.0378, 0.0442, 0.0136, 0.0206, 0.0288, 0.0015]
    grid = phantom.make_kidney_label_grid(rows=800, cols=800)
    frac = np.bincount(grid.ravel(), minlength=7) / grid.size
    # oracle prints 4 decimals; match at that precision
    assert np.allclose(
        frac, [0.8534, 0.0378, 0.0442, 0.0136, 0.0206, 0.0288, 0.0015],
        atol=5e-5)


def test_region_labeled_lookup_and_errors():
    grid = np.array([[0, 1], [2, 0]])
    f = phantom.make_region_labeled(grid, {0: 1e3, 1: 2e3, 2: 3e3},
                                    width_mm=10.0, height_mm=10.0)
    assert f.eval(2.0, 8.0) == pytest.approx(1e3)      # top-left pixel
    assert f.eval(8.0, 8.0) == pytest.approx(2e3)
    assert f.eval(2.0, 2.0) == pytest.approx(3e3)
    assert f.label_at(8.0, 8.0) == 1
    with pytest.raises(InvalidParameterError):
        phantom.make_region_labeled(grid, {0: 1e3, 1: 2e3})  # missing 2
    with pytest.raises(InvalidParameterError):
        phantom.make_region_labeled(grid, {0: -1.0, 1: 2e3, 2: 3e3})


def test_default_kidney_field_moduli():
    f = phantom.make_region_labeled(
        phantom.make_kidney_label_grid(),
        phantom.DEFAULT_REGION_MODULI)
    vals = np.unique(f.eval_grid(100, 100))
    assert set(np.round(vals).astype(int)) <= {
        12000, 15000, 18000, 23000, 24000, 26000, 30000}


def test_image_derived_interpolation_and_constant():
    grid = np.array([[0.0, 1.0], [0.0, 1.0]])
    f = phantom.make_image_derived(grid, 1e3, 3e3, width_mm=10.0,
                                   height_mm=10.0)
    assert f.eval(2.5, 5.0) == pytest.approx(1e3)     # left pixel centers
    assert f.eval(7.5, 5.0) == pytest.approx(3e3)
    assert f.eval(5.0, 5.0) == pytest.approx(2e3)     # midway: mean
    const = phantom.make_image_derived(np.full((3, 3), 0.4), 1e3, 3e3)
    assert const.eval(25.0, 25.0) == pytest.approx(2e3)   # midpoint


def test_synthetic_scan_structure():
    scan = phantom.make_synthetic_scan()
    assert scan.shape == (64, 64)
    assert scan.min() == 0.0 and scan.max() == 1.0
    f = phantom.make_image_derived(scan)
    # the exact-zero block pins the modulus floor at e_min
    assert f.eval_grid(101, 101).min() == pytest.approx(8e3)


def test_model4_centroid_extrema_in_feasibility_bands(mesh1):
    # tools/oracles/o06_fixed_point.py: the published scale extrema imply
    # sampled E_max in [22348.1, 30235.7] and E_min in [6205.0, 8395.0] Pa.
    f = phantom.make_image_derived(phantom.make_synthetic_scan())
    cent = mesh1.element_centroids()
    e = np.asarray(f.eval(cent[:, 0], cent[:, 1]))
    assert 22348.1 < e.max() < 30235.7
    assert 6205.0 < e.min() < 8395.0


def test_noise_spec_validation():
    with pytest.raises(InvalidParameterError):
        phantom.NoiseSpec(relative_magnitude=1.0)
    with pytest.raises(InvalidParameterError):
        phantom.NoiseSpec(relative_magnitude=-0.1)


def test_noise_determinism_and_independence():
    f = phantom.make_gaussian_inclusion()
    a = phantom.apply_noise(f, phantom.NoiseSpec(0.1, rng_seed=3,
                                                 independent_draw_id=1))
    b = phantom.apply_noise(f, phantom.NoiseSpec(0.1, rng_seed=3,
                                                 independent_draw_id=1))
    c = phantom.apply_noise(f, phantom.NoiseSpec(0.1, rng_seed=3,
                                                 independent_draw_id=2))
    x = np.array([5.0, 25.0, 40.0])
    y = np.array([10.0, 25.0, 45.0])
    assert np.array_equal(a.eval(x, y), b.eval(x, y))
    assert not np.array_equal(a.eval(x, y), c.eval(x, y))
    # bounded multiplicative corruption
    clean = f.eval(x, y)
    assert np.all(np.abs(a.eval(x, y) / clean - 1.0) <= 0.1 + 1e-12)


def test_noise_psnr_bands(mesh1):
    # tools/oracles/o09_psnr_region_map.py: theoretical PSNR for the
    # kidney field is 27.119 dB at 10% and 17.576 dB at 30% noise.
    f = phantom.make_region_labeled(phantom.make_kidney_label_grid(),
                                    phantom.DEFAULT_REGION_MODULI)
    sites = mesh1.element_centroids()
    p10 = phantom.measure_psnr(f, phantom.NoiseSpec(0.1, 1, 1), sites)
    p30 = phantom.measure_psnr(f, phantom.NoiseSpec(0.3, 1, 1), sites)
    assert p10 == pytest.approx(27.119, abs=1.0)
    assert p30 == pytest.approx(17.576, abs=1.0)


def test_grid_text_roundtrip(tmp_path):
    grid = np.array([[1.5, 2.25], [3.125, 4.0625]])
    path = tmp_path / "g.txt"
    phantom.write_grid_text(grid, path)
    assert np.array_equal(phantom.read_grid_text(path), grid)
    path.write_text("2 2\n1.0 2.0 3.0\n")
    with pytest.raises(DataFormatError):
        phantom.read_grid_text(path)


def test_pgm_roundtrip(tmp_path):
    grid = np.linspace(0.0, 1.0, 16).reshape(4, 4)
    path = tmp_path / "g.pgm"
    window = phantom.write_pgm(grid, path)
    assert window == (0.0, 1.0)
    back = phantom.read_pgm(path)
    assert back.shape == (4, 4)
    assert np.all(np.abs(back - grid) <= 0.5 / 255 + 1e-9)
    assert np.all(np.diff(back.ravel()) >= 0)   # ramp stays monotone


def test_phantom_config_roundtrip(tmp_path):
    cfgs = [
        {"kind": "gaussian_inclusion"},
        {"kind": "three_inclusion"},
        {"kind": "region_labeled"},
        {"kind": "image_derived"},
    ]
    for cfg in cfgs:
        path = tmp_path / "p.cfg"
        phantom.save_phantom_config(cfg, path)
        f = phantom.load_phantom_config(path)
        g = phantom.field_from_config(cfg)
        assert np.array_equal(f.eval_grid(11, 11), g.eval_grid(11, 11))
    with pytest.raises(InvalidParameterError):
        phantom.field_from_config({"kind": "fractal"})


def test_config_file_reference(tmp_path):
    grid = np.array([[0, 0], [1, 1]])
    phantom.write_grid_text(grid, tmp_path / "labels.txt")
    cfg = {"kind": "region_labeled", "label_file": "labels.txt",
           "moduli": {"0": 1e3, "1": 2e3}}
    phantom.save_phantom_config(cfg, tmp_path / "p.cfg")
    f = phantom.load_phantom_config(tmp_path / "p.cfg")
    assert f.eval(25.0, 40.0) == pytest.approx(1e3)
    assert f.eval(25.0, 10.0) == pytest.approx(2e3)
