"""Orbit-space analysis of Landau potentials for compact linear groups.

The pipeline runs from a group presentation and a minimal integrity basis
to the P-hat matrix, its active polynomials, the stratification of the
orbit space, allowed second-order transitions and stable phases of
polynomial potentials.
"""

from types import ModuleType as _ModuleType

from .active import ActivePolynomial, ActiveSet, IncompleteCover, NotActive, find_active, verify_master
from .config import AnalysisConfig, ConfigError
from .estimator import InvarianceError, LandauPhaseClassifier, OrbitSpace, example_config_path, load_config
from .group import (
    FixedSubspace,
    GroupElement,
    GroupPresentation,
    IsotropySignature,
    IsotropySubgroup,
    RotationFamily,
    finite_closure,
    fixed_subspaces,
    isotropy_signature,
    isotropy_subgroup,
    verify_invariance,
)
from .pmatrix import (
    MIBSpec,
    NotExpressible,
    PHatMatrix,
    Syzygy,
    compute_phat,
    det_phat,
    express_in_mib,
    find_syzygies,
)
from .poly import NotDivisible, Polynomial, PolynomialMap, WeightSystem, parse_polynomial
from .potential import (
    AllUnbounded,
    Empty,
    NegativeDiscriminant,
    PhasePoint,
    PotentialSpec,
    Unbounded,
    boundedness_screen,
    minimize_on_stratum,
    observables,
    phase_sweep,
    stable_phase,
)
from .strata import (
    NoMatch,
    StratumCatalog,
    StratumDescriptor,
    StratumGraph,
    allowed_transitions,
    bordering,
    enumerate_strata,
    identify_stratum,
    membership,
    section,
)

__version__ = "0.1.0"

__all__ = [name for name, obj in globals().items() if not name.startswith("_") and not isinstance(obj, _ModuleType)]
