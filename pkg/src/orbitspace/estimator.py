"""Estimator-style front end: fit the orbit-space structure once, then transform and label points."""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .active import find_active
from .config import AnalysisConfig
from .group import (
    finite_closure,
    fixed_subspaces,
    isotropy_signature,
    isotropy_subgroup,
    verify_invariance,
)
from .pmatrix import compute_phat, det_phat, find_syzygies
from .potential import PotentialSpec, phase_sweep, stable_phase
from .strata import allowed_transitions, bordering, enumerate_strata, section

__all__ = ["InvarianceError", "OrbitSpace", "LandauPhaseClassifier", "example_config_path", "load_config"]

UNLABELED = "unlabeled"


class InvarianceError(ValueError):
    """A configured basic invariant is not invariant under the group."""

    def __init__(self, message: str, reports=None):
        super().__init__(message)
        self.reports = reports or []


def example_config_path() -> Path:
    """Path of the bundled two-component superconductor configuration."""
    return Path(str(resources.files("orbitspace") / "data" / "c3v_superconductor.json"))


def load_config(config=None) -> AnalysisConfig:
    if config is None:
        return AnalysisConfig.from_json(example_config_path())
    if isinstance(config, AnalysisConfig):
        return config
    if isinstance(config, Mapping):
        return AnalysisConfig.from_dict(dict(config))
    return AnalysisConfig.from_json(config)


class OrbitSpace(TransformerMixin, BaseEstimator):
    """Orbit space of a compact linear group described by a configuration.

    ``fit`` builds the finite coset closure, fixed subspaces, the P-hat matrix,
    its determinant, syzygies, active polynomials, the stratum catalog, the
    bordering graph and the allowed transitions. ``transform`` is the orbit
    map and ``predict`` returns stratum labels.

    Parameters
    ----------
    config : path, dict or AnalysisConfig, default=None
        Analysis configuration; ``None`` loads the bundled example.
    seed : int or None, default=None
        Overrides the seed stored in the configuration.
    check_invariance : bool, default=True
        Spot-check invariance of every basic invariant during ``fit``.
    """

    def __init__(self, config=None, seed: int | None = None, check_invariance: bool = True):
        self.config = config
        self.seed = seed
        self.check_invariance = check_invariance

    def _rng(self, stream: int) -> np.random.Generator:
        return np.random.default_rng([self.config_.seed if self.seed is None else self.seed, stream])

    def fit(self, X=None, y=None):
        cfg = load_config(self.config)
        self.config_ = cfg
        tol, smp = cfg.tolerances, cfg.sampling
        gp, mib = cfg.group, cfg.mib
        if X is not None:
            check_array(X, ensure_min_features=mib.n)
        self.closure_ = finite_closure(gp, int(smp["max_closure"]))
        self.invariance_ = []
        if self.check_invariance:
            for a, f in enumerate(mib.polynomials):
                rep = verify_invariance(f, gp, int(smp["invariance_samples"]), tol["invariance"], self.closure_,
                                        int(smp["invariance_angles"]), self._rng(a))
                self.invariance_.append(rep)
            bad = [f"p{a + 1}: {r}" for a, r in enumerate(self.invariance_) if not r.passed]
            if bad:
                raise InvarianceError("; ".join(bad), self.invariance_)
        self.subspaces_ = fixed_subspaces(gp, self.closure_, int(smp["angle_grid"]))
        self.phat_ = compute_phat(mib)
        self.det_ = det_phat(self.phat_)
        self.syzygies_ = find_syzygies(mib)
        self.active_ = find_active(self.phat_, mib, self.subspaces_, int(smp["per_subspace"]), self._rng(100),
                                   tol["rank_rtol"], tol["kernel_rtol"], int(smp["max_denominator"]), tol["vanish"])
        self.catalog_ = enumerate_strata(self.phat_, self.active_.polynomials, mib, gp, self.closure_,
                                         self.subspaces_, self._rng(200), int(smp["per_subspace"]),
                                         int(smp["principal_samples"]), tol["rank_rtol"], tol["vanish"],
                                         tol["relation"], cfg.stratum_labels or None)
        self.graph_ = bordering(self.catalog_, self._rng(300), int(smp["bordering_samples"]), tol["membership"])
        self.transitions_ = allowed_transitions(self.graph_)
        self.n_features_in_ = mib.n
        return self

    def _check_X(self, X) -> np.ndarray:
        check_is_fitted(self, "catalog_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, but {type(self).__name__} expects {self.n_features_in_}")
        return X

    def transform(self, X) -> np.ndarray:
        """Orbit map: rows of ``X`` to their basic-invariant values."""
        X = self._check_X(X)
        return self.config_.mib.orbit_map(X)

    def predict(self, X) -> np.ndarray:
        """Stratum label of each row (``"unlabeled"`` when no unique stratum matches)."""
        P = self.transform(X)
        return np.array([lab or UNLABELED for lab in self.catalog_.classify_p(P)], dtype=object)

    def predict_rank(self, X) -> np.ndarray:
        """Numeric rank of P-hat at each row's image, i.e. the stratum dimension."""
        return self.phat_.rank_many(self.transform(X), self.config_.tolerances["rank_rtol"])

    def isotropy(self, x):
        """Isotropy subgroup of a single point."""
        check_is_fitted(self, "catalog_")
        x = np.asarray(x, dtype=float)
        return isotropy_subgroup(x, self.config_.group, self.closure_, self.config_.tolerances["membership"])

    def signature(self, x):
        return isotropy_signature(self.isotropy(x))

    def section(self, r2: float | None = None, grid: int | None = None):
        check_is_fitted(self, "catalog_")
        sec = self.config_.section
        r2 = float(sec["r2"] if r2 is None else r2)
        grid = int(sec["grid"] if grid is None else grid)
        return section(self.phat_, self.catalog_, r2, grid, self._rng(400), tol=self.config_.tolerances["membership"])

    def potential_spec(self, potential: Mapping | PotentialSpec | None = None) -> PotentialSpec:
        if isinstance(potential, PotentialSpec):
            return potential
        data = potential if potential is not None else self.config_.potential
        if data is None:
            raise ValueError("no potential configured")
        return PotentialSpec.from_dict(data, self.config_.mib.weights)

    def _phase_kwargs(self) -> dict:
        smp, tol = self.config_.sampling, self.config_.tolerances
        return dict(multistarts=int(smp["multistarts"]), start_radius=float(smp["start_radius"]),
                    escape_radius=float(smp["escape_radius"]), gtol=tol["stationarity"],
                    degeneracy_tol=tol["degeneracy"], subspaces=self.subspaces_)

    def stable_phase(self, potential=None, parameters: Mapping | None = None, **kwargs):
        check_is_fitted(self, "catalog_")
        opts = {**self._phase_kwargs(), **kwargs}
        return stable_phase(self.potential_spec(potential), self.catalog_, self.graph_, parameters,
                            rng=self._rng(500), **opts)

    def phase_sweep(self, potential=None, grid: Mapping | None = None, **kwargs):
        check_is_fitted(self, "catalog_")
        grid = grid if grid is not None else _sweep_grid(self.config_.sweep)
        opts = {**self._phase_kwargs(), **kwargs}
        seed = self.config_.seed if self.seed is None else self.seed
        return phase_sweep(self.potential_spec(potential), grid, self.catalog_, self.graph_, seed=seed, **opts)


def _sweep_grid(sweep: Mapping | None) -> dict:
    if not sweep:
        raise ValueError("no parameter sweep configured")
    if "grid" in sweep:
        return dict(sweep["grid"])
    return {sweep["parameter"]: {k: v for k, v in sweep.items() if k != "parameter"}}


class LandauPhaseClassifier(BaseEstimator):
    """Maps rows of potential parameters to the stable stratum label.

    Parameters
    ----------
    orbit_space : OrbitSpace, default=None
        Fitted or unfitted orbit space; ``None`` uses the bundled example.
    potential : dict or PotentialSpec, default=None
        Potential family; ``None`` uses the one in the orbit space configuration.
    parameter_names : sequence of str, default=None
        Column order of ``X`` in ``predict``; defaults to the sorted parameter names.
    """

    def __init__(self, orbit_space: OrbitSpace | None = None, potential=None,
                 parameter_names: Sequence[str] | None = None):
        self.orbit_space = orbit_space
        self.potential = potential
        self.parameter_names = parameter_names

    def fit(self, X=None, y=None):
        space = self.orbit_space if self.orbit_space is not None else OrbitSpace()
        try:
            check_is_fitted(space, "catalog_")
        except Exception:
            space = space.fit()
        self.orbit_space_ = space
        self.spec_ = space.potential_spec(self.potential)
        names = tuple(self.parameter_names or self.spec_.parameter_names)
        unknown = set(names) - set(self.spec_.parameters)
        if unknown:
            raise ValueError(f"unknown parameters {sorted(unknown)}")
        self.parameter_names_ = names
        self.n_features_in_ = len(names)
        return self

    def predict_phase(self, X) -> list:
        check_is_fitted(self, "spec_")
        X = check_array(X, dtype=None)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        return [self.orbit_space_.stable_phase(self.spec_, dict(zip(self.parameter_names_, row))) for row in X]

    def predict(self, X) -> np.ndarray:
        return np.array([pt.label for pt in self.predict_phase(X)], dtype=object)
