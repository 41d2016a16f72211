"""Material property network: pretraining data, scaling conventions,
masked predictions, tangent stiffness, and the text format."""

import numpy as np
import pytest

from elastonet import mpn
from elastonet.errors import (InvalidParameterError, InvalidScaleError,
                              UnitMismatchError, DataFormatError)
from elastonet.fesolve import STRESS_UNIT_PA, elasticity_matrix
from elastonet.mlpcore import TrainConfig, jacobian, make_net


def test_pretraining_pairs_targets_and_symmetry():
    strains, targets = mpn.pretraining_pairs(n_samples=50, seed=3)
    assert strains.shape == (100, 3) and targets.shape == (100, 3)
    c_ref = elasticity_matrix(10e3, 0.5)
    assert np.allclose(targets[:50], strains[:50] @ c_ref.T / STRESS_UNIT_PA)
    # isotropy: swapping the 11/22 strain components swaps the 11/22
    # stress components and leaves the shear untouched
    assert np.array_equal(strains[50:], strains[:50][:, [1, 0, 2]])
    assert np.array_equal(targets[50:], targets[:50][:, [1, 0, 2]])
    # every pretraining target stays inside the tanh range with margin
    assert np.abs(targets).max() < 0.8


def test_pretraining_pairs_validation():
    with pytest.raises(InvalidParameterError):
        mpn.pretraining_pairs(n_samples=0)
    with pytest.raises(InvalidParameterError):
        mpn.pretraining_pairs(strain_range=0.0)


def test_pretrain_auto_stress_scale():
    # strain range 0.5 pushes peak targets to ~1.0, beyond the 0.8
    # threshold, so the stress scale is raised to 1.25x the peak
    _, targets = mpn.pretraining_pairs(strain_range=0.5, seed=0)
    peak = float(np.abs(targets).max())
    assert peak >= 0.8
    cfg = TrainConfig(optimizer="rprop", epochs=0)
    model = mpn.pretrain(strain_range=0.5, seed=0, cfg=cfg)
    assert model.stress_scale == pytest.approx(1.25 * peak)
    # at the default range no rescaling is needed
    model = mpn.pretrain(seed=0, cfg=cfg)
    assert model.stress_scale == 1.0


def test_pretrain_explicit_scale_saturates():
    with pytest.raises(InvalidParameterError):
        mpn.pretrain(strain_range=0.5, stress_scale=0.5,
                     cfg=TrainConfig(epochs=0))
    with pytest.raises(InvalidParameterError):
        mpn.pretrain(stress_scale=-1.0, cfg=TrainConfig(epochs=0))


def test_reference_fidelity(reference_mpn):
    # the trained network reproduces the reference elasticity relation
    # to within 5% of full scale over the data magnitudes it will see,
    # and to within 5% pointwise wherever the stress is not tiny
    c_ref = elasticity_matrix(10e3, 0.5)
    rng = np.random.default_rng(7)
    strains = rng.uniform(-0.05, 0.05, size=(200, 3))
    want = strains @ c_ref.T
    got = reference_mpn.predict_stress(strains)
    assert np.abs(got - want).max() < 0.05 * np.abs(want).max()
    solid = np.abs(want) > 200.0
    assert np.max(np.abs(got - want)[solid] / np.abs(want)[solid]) < 0.05


def test_reference_tangent_matches_reference_matrix(reference_mpn):
    c_units = elasticity_matrix(10e3, 0.5) / STRESS_UNIT_PA
    d = reference_mpn.tangent_stiffness(np.zeros(3))
    assert np.max(np.abs(d - c_units) / np.abs(c_units).max()) < 0.05


def test_strain_scale_changes_prediction(reference_mpn):
    strain = np.array([0.01, -0.02, 0.005])
    base = reference_mpn.predict_scaled(strain)
    halved = reference_mpn.predict_scaled(strain, np.array([2.0, 2.0, 2.0]))
    # scaling the strain down scales the (near-linear) response down
    assert np.allclose(halved, base / 2.0, rtol=0.05)


def test_scale_validation(reference_mpn):
    strain = np.zeros(3)
    with pytest.raises(InvalidScaleError):
        reference_mpn.predict_scaled(strain, np.ones(2))
    with pytest.raises(InvalidScaleError):
        reference_mpn.predict_scaled(strain, np.array([1.0, 0.0, 1.0]))
    with pytest.raises(InvalidScaleError):
        reference_mpn.predict_scaled(strain, np.array([1.0, -2.0, 1.0]))
    with pytest.raises(InvalidScaleError):
        reference_mpn.predict_scaled(strain, np.array([1.0, np.inf, 1.0]))


def test_masked_predict(reference_mpn):
    from elastonet.mlpcore import forward
    strain = np.array([0.01, -0.02, 0.005])
    scale = np.array([1.0, 2.0, 1.0])
    for k in (1, 2, 3):
        masked_in = np.zeros(3)
        masked_in[k - 1] = (strain / scale)[k - 1]
        want = forward(reference_mpn.net, masked_in)
        got = reference_mpn.masked_predict(strain, scale, k)
        assert np.array_equal(got, want)
    with pytest.raises(InvalidParameterError):
        reference_mpn.masked_predict(strain, scale, 0)
    with pytest.raises(InvalidParameterError):
        reference_mpn.masked_predict(strain, scale, 4)


def test_tangent_stiffness_finite_difference(reference_mpn):
    strain = np.array([0.02, -0.01, 0.004])
    scale = np.array([0.8, 1.3, 1.1])
    d = reference_mpn.tangent_stiffness(strain, scale)
    h = 1e-6
    for j in range(3):
        dv = np.zeros(3)
        dv[j] = h
        fd = (reference_mpn.predict_scaled(strain + dv, scale)
              - reference_mpn.predict_scaled(strain - dv, scale)) / (2 * h)
        assert np.allclose(d[:, j], fd, rtol=1e-5, atol=1e-9)
    with pytest.raises(InvalidParameterError):
        reference_mpn.tangent_stiffness(np.zeros((2, 3)))


def test_constructor_guards():
    wrong = make_net((3, 4, 3), ("tanh", "tanh"), seed=0)
    with pytest.raises(InvalidParameterError):
        mpn.MaterialPropertyNet(wrong)
    right = make_net(mpn.MPN_LAYERS, mpn.MPN_ACTIVATIONS, seed=0)
    with pytest.raises(InvalidParameterError):
        mpn.MaterialPropertyNet(right, stress_scale=0.0)


def test_copy_is_independent(reference_mpn):
    strain = np.array([0.01, 0.01, 0.0])
    before = reference_mpn.predict_scaled(strain)
    clone = reference_mpn.copy()
    clone.net.weights[0][:] = 0.0
    assert np.array_equal(reference_mpn.predict_scaled(strain), before)
    assert not np.array_equal(clone.predict_scaled(strain), before)


def test_text_roundtrip(tmp_path, reference_mpn):
    path = tmp_path / "ref.mpnfile"
    reference_mpn.save(path)
    loaded = mpn.MaterialPropertyNet.load(
        path, expect_stress_unit_pa=STRESS_UNIT_PA)
    assert loaded.stress_scale == reference_mpn.stress_scale
    assert loaded.stress_unit_pa == reference_mpn.stress_unit_pa
    probe = np.array([[0.01, -0.02, 0.005], [0.0, 0.03, -0.001]])
    # repr-based serialization preserves predictions bit-exactly
    assert np.array_equal(loaded.predict_scaled(probe),
                          reference_mpn.predict_scaled(probe))


def test_text_errors(reference_mpn):
    text = reference_mpn.to_text()
    with pytest.raises(UnitMismatchError):
        mpn.MaterialPropertyNet.from_text(text, expect_stress_unit_pa=2e4)
    with pytest.raises(DataFormatError):
        mpn.MaterialPropertyNet.from_text("mpnfile 2\n" + text)
    with pytest.raises(DataFormatError):
        mpn.MaterialPropertyNet.from_text(
            "\n".join(text.splitlines()[:-1]) + "\n")  # no end marker
    no_meta = "mpnfile 1\n" + "\n".join(text.splitlines()[3:]) + "\n"
    with pytest.raises(DataFormatError):
        mpn.MaterialPropertyNet.from_text(no_meta)
