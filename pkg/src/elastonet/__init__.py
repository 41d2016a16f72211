"""Data-driven elasticity imaging from simulated quasi-static compression.

The package builds a full pipeline: plane-stress finite-element forward
solves over stiffness phantoms produce stress-strain samples; a small
material network learns a reference constitutive response; per-point
descent recovers a strain-scaling field encoding stiffness contrast; a
spatial network smooths that field; and the combined model renders a
Young's-modulus image that is scored against the ground-truth phantom.

Modules:
    errors    shared exception hierarchy
    mlpcore   minimal dense-network engine (forward, backprop, Rprop/Adam)
    femesh    quadrilateral meshes, fixture geometry, coordinate maps
    phantom   ground-truth stiffness fields and noise models
    fesolve   plane-stress solver, load programs, sample extraction
    mpn       material property network and its pretraining
    scaling   per-point gradient-descent strain-scale recovery
    sn        spatial network generalizing the scaling field
    recon     modulus-image reconstruction and scoring
    pipeline  experiment presets and staged artifact runs
    cli       command-line entry point
"""

__version__ = "0.1.0"

from . import errors  # noqa: F401
from .errors import (ConfigError, DataFormatError,  # noqa: F401
                     DimensionMismatchError, ElastonetError,
                     InvalidGeometryError, InvalidParameterError,
                     InvalidScaleError, MeshFormatError, NumericError,
                     OutOfDomainError, SolverError, TrainingDivergedError,
                     UnitMismatchError)
