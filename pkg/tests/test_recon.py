"""Modulus-image reconstruction: the plane-stress inversion identity,
image container semantics, combined-model checks, scoring arithmetic, and
rendering."""

import numpy as np
import pytest

from elastonet import mpn, phantom, recon, sn
from elastonet.errors import (DataFormatError, InvalidParameterError,
                              NumericError, OutOfDomainError,
                              UnitMismatchError)
from elastonet.fesolve import STRESS_UNIT_PA, elasticity_matrix
from elastonet.mlpcore import make_net


def test_inversion_identity():
    # [DERIVED] tools/oracles/o07_eq14_identity.py: pushing C(E, 0.5).eps
    # through the axial-stress inversion recovers E to machine precision
    # (worst over 100 random moduli: 2.36e-16), and the recovery is
    # invariant to scaling the probe strain
    probe = np.asarray(recon.DEFAULT_PROBE_STRAIN)
    rng = np.random.default_rng(0)
    moduli = rng.uniform(1e3, 100e3, size=100)
    for young in moduli:
        c = elasticity_matrix(young, 0.5)
        s22 = (c @ probe)[1]
        got = recon.modulus_from_axial_stress(s22, probe)
        assert abs(got - young) / young < 1e-12
    c = elasticity_matrix(17300.0, 0.5)
    for f in (1.0, 0.5):
        s22 = (c @ (probe * f))[1]
        assert recon.modulus_from_axial_stress(
            s22, probe * f) == pytest.approx(17300.0, rel=1e-12)


def test_probe_strain_validation():
    with pytest.raises(InvalidParameterError):
        recon.modulus_from_axial_stress(1.0, np.ones(2))
    with pytest.raises(InvalidParameterError):
        recon.modulus_from_axial_stress(1.0, [0.3, 0.1, 0.0])
    # nu*e11 + e22 = 0 makes the inversion singular
    with pytest.raises(InvalidParameterError):
        recon.modulus_from_axial_stress(1.0, [0.01, -0.005, 0.0])


def test_image_validation():
    with pytest.raises(InvalidParameterError):
        recon.ModulusImage(np.ones((1, 5)), (0, 1, 0, 1))
    with pytest.raises(NumericError):
        recon.ModulusImage(np.full((2, 2), np.nan), (0, 1, 0, 1))
    with pytest.raises(InvalidParameterError):
        recon.ModulusImage(np.ones((2, 2)), (1, 0, 0, 1))
    img = recon.ModulusImage([[1.0, -2.0], [0.0, 4.0]], (0, 1, 0, 1))
    assert img.n_nonpositive == 2


def test_image_bilinear_sampling():
    # node convention: [0, 0] is the top-left corner (x_lo, y_hi)
    img = recon.ModulusImage([[1.0, 2.0], [3.0, 4.0]], (0, 1, 0, 1))
    assert img.at(0.0, 1.0) == 1.0
    assert img.at(1.0, 1.0) == 2.0
    assert img.at(0.0, 0.0) == 3.0
    assert img.at(1.0, 0.0) == 4.0
    assert img.at(0.5, 0.5) == pytest.approx(2.5)
    # clamping outside the extent
    assert img.at(-5.0, 2.0) == 1.0
    xs = np.array([0.0, 1.0])
    ys = np.array([1.0, 0.0])
    assert np.allclose(img.at(xs, ys), [1.0, 4.0])


def test_image_csv_roundtrip(tmp_path):
    grid = np.array([[10000.0, 1.0 / 3.0], [25000.5, 30000.0]])
    img = recon.ModulusImage(grid, (0.0, 50.0, 0.0, 50.0),
                             probe_strain=(0.003, 0.005, 1e-4))
    path = tmp_path / "image.csv"
    img.save_csv(path)
    loaded = recon.ModulusImage.load_csv(path)
    assert np.array_equal(loaded.grid, grid)
    assert loaded.extent_mm == img.extent_mm
    assert np.array_equal(loaded.probe_strain, img.probe_strain)


def test_image_csv_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# wrong 1\n")
    with pytest.raises(DataFormatError):
        recon.ModulusImage.load_csv(path)
    path.write_text("# modulusimage 1\n# unit kPa\n"
                    "# extent_mm 0 1 0 1\n# probe_strain 0.003 0.005 0.0001\n"
                    "2 2\n1.0,2.0\n3.0,4.0\n")
    with pytest.raises(UnitMismatchError):
        recon.ModulusImage.load_csv(path)
    path.write_text("# modulusimage 1\n# unit Pa\n"
                    "# extent_mm 0 1 0 1\n# probe_strain 0.003 0.005 0.0001\n"
                    "3 2\n1.0,2.0\n3.0,4.0\n")
    with pytest.raises(DataFormatError):
        recon.ModulusImage.load_csv(path)


@pytest.fixture(scope="module")
def untrained_cann(reference_mpn):
    net = make_net(sn.SN_LAYERS, sn.SN_ACTIVATIONS, seed=1)
    snet = sn.SpatialNet(net, gain=np.full(3, 0.2),
                         offset=np.full(3, 0.9),
                         center=np.array([25.0, 25.0]),
                         half_extent=np.array([25.0, 25.0]))
    return recon.Cann(reference_mpn, snet)


def test_cann_validation(reference_mpn, untrained_cann):
    snet = untrained_cann.sn
    with pytest.raises(InvalidParameterError):
        recon.Cann(reference_mpn, reference_mpn)
    with pytest.raises(InvalidParameterError):
        recon.Cann(snet, snet)
    with pytest.raises(InvalidParameterError):
        recon.Cann(reference_mpn, snet,
                   mesh_norm=(np.zeros(2), np.ones(2)))
    with pytest.raises(UnitMismatchError):
        recon.Cann(reference_mpn, snet, stress_unit_pa=2e4)
    assert untrained_cann.extent_mm == (0.0, 50.0, 0.0, 50.0)


def test_cann_directory_roundtrip(tmp_path, untrained_cann):
    d = tmp_path / "cann"
    untrained_cann.save(d)
    loaded = recon.Cann.load(d, expect_stress_unit_pa=STRESS_UNIT_PA)
    p = np.array([[10.0, 10.0], [40.0, 30.0]])
    assert np.array_equal(sn.predict_scale(loaded.sn, None, p),
                          sn.predict_scale(untrained_cann.sn, None, p))
    (d / recon.SN_FILENAME).unlink()
    with pytest.raises(DataFormatError):
        recon.Cann.load(d)


def test_reconstruct_produces_finite_grid(untrained_cann):
    img = recon.reconstruct(untrained_cann, grid_rows=21, grid_cols=17)
    assert img.shape == (21, 17)
    assert np.all(np.isfinite(img.grid))
    assert img.extent_mm == untrained_cann.extent_mm
    # scales near 1 put the image near the reference modulus
    assert 5e3 < np.median(img.grid) < 20e3
    with pytest.raises(InvalidParameterError):
        recon.reconstruct(untrained_cann, grid_rows=1)


def test_score_arithmetic():
    # [DERIVED] tools/oracles/o08_score_arith.py: a uniform 9 kPa image
    # against a uniform 10 kPa target scores mean 0.1, std 0; the
    # [0.1, 0.2] error pair scores mean 0.15, std 0.05
    target = phantom.make_three_inclusion(10e3, discs=())
    img = recon.ModulusImage(np.full((4, 4), 9e3), (0, 50.0, 0, 50.0))
    mean, std, emap = recon.score(img, target)
    assert mean == pytest.approx(0.1, abs=1e-12)
    assert std == pytest.approx(0.0, abs=1e-12)
    assert emap.shape == (101, 101)

    # comparison samples pixel centers (x = 12.5, 37.5) bilinearly, so
    # node columns [7500, 13500] are seen as exactly [9000, 12000]
    grid = np.column_stack([np.full(2, 7.5e3), np.full(2, 13.5e3)])
    img = recon.ModulusImage(grid, (0, 50.0, 0, 50.0))
    mean, std, _ = recon.score(img, target, grid_rows=1, grid_cols=2)
    assert mean == pytest.approx(0.15, abs=1e-12)
    assert std == pytest.approx(0.05, abs=1e-12)


def test_score_domain_check():
    target = phantom.make_three_inclusion(10e3, discs=())
    img = recon.ModulusImage(np.full((2, 2), 9e3), (0, 60.0, 0, 50.0))
    with pytest.raises(OutOfDomainError):
        recon.score(img, target)


def test_render_writes_three_files(tmp_path):
    img = recon.ModulusImage([[8e3, 30e3], [10e3, 12e3]], (0, 1, 0, 1))
    base = str(tmp_path / "image")
    csv_path, pgm_path, sidecar = recon.render(img, base)
    assert recon.ModulusImage.load_csv(csv_path).grid.shape == (2, 2)
    header = open(pgm_path, "rb").read(2)
    assert header == b"P5"
    text = open(sidecar).read()
    assert text.startswith("window_pa ")
    lo, hi = (float(v) for v in text.split()[1:3])
    assert (lo, hi) == (8e3, 30e3)
