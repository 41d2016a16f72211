"""Shared expensive artifacts, built once per session.

The chain mesh -> dataset -> material network -> scaling field is the
substrate for the scaling/spatial/reconstruction unit tests; building it
once keeps the suite fast without weakening any assertion.
"""

import numpy as np
import pytest

from elastonet import femesh, fesolve, mpn, phantom, scaling


@pytest.fixture(scope="session")
def mesh1():
    """The standard 35-nodes-per-edge rectilinear mesh (1156 elements)."""
    return femesh.make_rectilinear(50.0, 50.0, 35)


@pytest.fixture(scope="session")
def reference_mpn():
    """The pretrained reference material network, seed 0."""
    return mpn.pretrain(seed=0)


@pytest.fixture(scope="session")
def model1_samples(mesh1):
    """Axis-swap-augmented dataset for the Gaussian-inclusion phantom."""
    field = phantom.make_gaussian_inclusion()
    samples, _sol = fesolve.make_dataset(mesh1, field, augment=True)
    return samples


@pytest.fixture(scope="session")
def model1_field(reference_mpn, model1_samples):
    """Converged scaling field for the Gaussian-inclusion phantom."""
    from elastonet.pipeline import DEFAULT_ETA
    cfg = scaling.GdConfig(n_iterations=150, eta=DEFAULT_ETA)
    return scaling.compute_field(reference_mpn, model1_samples, cfg)


@pytest.fixture(scope="session")
def model1_true_field():
    return phantom.make_gaussian_inclusion()


@pytest.fixture(scope="session")
def centroid_moduli(mesh1, model1_true_field):
    cent = mesh1.element_centroids()
    return np.asarray(model1_true_field.eval(cent[:, 0], cent[:, 1]))
