"""Scaled ordered-logit likelihood: systematic utility, category
probabilities, log-likelihood and its analytic gradient.

The latent quantity preference for an alternative is exp(mu) * (W + eps)
with W = ASC + beta.x + gamma.z and eps standard logistic.  Observing
quantity j means the latent value falls between cut-specific thresholds
tau_j and tau_{j+1}, so

    P(y = j) = L(tau_{j+1}/lambda - W) - L(tau_j/lambda - W)

with lambda = exp(mu), L the logistic CDF, tau_0 = -inf, tau_1 = 0 and
tau_{J} = +inf.  Probabilities and the gradient are evaluated through
stable sigmoid ratios so that deep-tail categories keep strictly positive
mass instead of cancelling to zero.

Estimation works on an unconstrained vector: thresholds are parameterized
as cumulative exponentials of increments (tau_1 = 0 fixed), scales as
log-scales with a reference cell fixed at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .dataset import COVARIATE_COLUMNS, Dataset, default_coder
from .errors import DataError, NumericalError, SchemaError
from .schema import AttributeSchema, DesignRow, UNIT_COLUMN

N_CATEGORIES = 11

GENERIC = "generic"
CUT = "cut"
CUT_SEASON = "cut_season"
EXCLUDED = "excluded"
BINDINGS = (GENERIC, CUT, CUT_SEASON, EXCLUDED)

_LOG_HALF = math.log(0.5)


# -- numerics --------------------------------------------------------------


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -x)


def _log1mexp(u: np.ndarray) -> np.ndarray:
    """log(1 - exp(u)) for u <= 0, stable at both ends."""
    out = np.empty_like(u)
    near = u > _LOG_HALF
    with np.errstate(divide="ignore"):
        out[near] = np.log(-np.expm1(u[near]))
        out[~near] = np.log1p(-np.exp(u[~near]))
    return out


def _interval_log_prob(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """log[L(b) - L(a)] for a < b, allowing a = -inf / b = +inf."""
    return _log_sigmoid(b) + _log_sigmoid(-a) + _log1mexp(a - b)


def _interval_ratios(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stable (phi(a)/p, phi(b)/p) for p = L(b) - L(a); phi = logistic pdf."""
    t = -np.expm1(a - b)
    r_a = _sigmoid(a) / (_sigmoid(b) * t)
    r_b = _sigmoid(-b) / (_sigmoid(-a) * t)
    return r_a, r_b


def category_probs(w: float, tau: Sequence[float], lam: float) -> np.ndarray:
    """Probability vector over quantities 0..len(tau) at utility index ``w``.

    ``tau`` must be strictly increasing and ``lam`` (the scale) positive.
    The probabilities are strictly positive and sum to one.
    """
    tau = np.asarray(tau, dtype=float)
    if tau.ndim != 1 or tau.size < 1:
        raise NumericalError("tau must be a non-empty vector of thresholds")
    if not np.all(np.isfinite(tau)) or np.any(np.diff(tau) <= 0):
        raise NumericalError("thresholds must be finite and strictly increasing")
    if not np.isfinite(lam) or lam <= 0:
        raise NumericalError(f"scale must be positive, got {lam}")
    if not np.isfinite(w):
        raise NumericalError(f"utility index must be finite, got {w}")
    bounds = np.concatenate(([-np.inf], tau / lam, [np.inf])) - w
    return np.exp(_interval_log_prob(bounds[:-1], bounds[1:]))


# -- model specification ----------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    """Binding of attributes, covariates, thresholds and scales to parameters.

    ``bindings`` maps each attribute to how its coefficient is shared:
    ``generic`` (one parameter everywhere), ``cut`` (one per cut),
    ``cut_season`` (one per cut and season), or ``excluded``.  Fine-grained
    removals go through ``exclusions`` patterns (attribute, column, cut,
    season), any element of which may be None to match everything.
    """

    schema: AttributeSchema
    bindings: Mapping[str, str]
    covariates: tuple[str, ...] = ()
    asc: str = CUT_SEASON  # "cut_season" | "cut" | "none"
    free_scales: tuple[tuple[str, str], ...] = ()
    reference_scale: tuple[str, str] | None = None
    exclusions: frozenset = frozenset()
    seasons: tuple[str, ...] | None = None
    n_categories: int = N_CATEGORIES

    def __post_init__(self):
        for attr, rule in self.bindings.items():
            if rule not in BINDINGS:
                raise SchemaError(f"unknown binding {rule!r} for attribute {attr!r}")
            self.schema.attribute(attr)
        for cov in self.covariates:
            if cov not in COVARIATE_COLUMNS:
                raise SchemaError(f"unknown covariate column {cov!r}")
        if self.asc not in (CUT_SEASON, CUT, "none"):
            raise SchemaError(f"unknown asc binding {self.asc!r}")
        for cut, season in self.free_scales:
            self.schema.check_cut_season(cut, season)
        if self.n_categories < 2:
            raise SchemaError("need at least two quantity categories")

    @property
    def effective_seasons(self) -> tuple[str, ...]:
        return self.seasons if self.seasons is not None else self.schema.seasons

    def _excluded(self, attr: str, column: str, cut: str, season: str) -> bool:
        for p_attr, p_col, p_cut, p_season in self.exclusions:
            if (
                p_attr == attr
                and p_col in (None, column)
                and p_cut in (None, cut)
                and p_season in (None, season)
            ):
                return True
        return False

    def beta_id(self, attr: str, column: str, cut: str, season: str) -> str | None:
        """Parameter id bound to one coded column in one (cut, season) cell."""
        rule = self.bindings.get(attr, EXCLUDED)
        if rule == EXCLUDED or not self.schema.applies(attr, cut):
            return None
        if self._excluded(attr, column, cut, season):
            return None
        if rule == GENERIC:
            return f"b:{attr}:{column}"
        if rule == CUT:
            return f"b:{attr}:{column}:{cut}"
        return f"b:{attr}:{column}:{cut}:{season}"

    def asc_id(self, cut: str, season: str) -> str | None:
        if self.asc == "none":
            return None
        if self.asc == CUT:
            return f"asc:{cut}"
        return f"asc:{cut}:{season}"

    def for_single_season(self, season: str) -> "ModelSpec":
        """Restriction used by the per-season fits of the pooling test."""
        if season not in self.schema.seasons:
            raise SchemaError(f"unknown season {season!r}")
        return replace(self, seasons=(season,), free_scales=(), reference_scale=None)

    def with_free_season_scales(self, free_season: str) -> "ModelSpec":
        """Pooled layout: one free scale per cut for ``free_season``.

        The other season's scale is the per-cut reference (fixed at one);
        the per-cut thresholds absorb any common rescaling, so exactly one
        scale per cut is identifiable.
        """
        other = [s for s in self.schema.seasons if s != free_season]
        if len(other) != 1:
            raise SchemaError("pooled scale layout expects exactly two seasons")
        return replace(
            self,
            seasons=None,
            free_scales=tuple((cut, free_season) for cut in self.schema.cuts),
            reference_scale=(self.schema.cuts[0], other[0]),
        )

    # -- serialization ----------------------------------------------------

    @classmethod
    def load(cls, path, schema: AttributeSchema) -> "ModelSpec":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.loads(fh.read(), schema)

    @classmethod
    def loads(cls, text: str, schema: AttributeSchema) -> "ModelSpec":
        bindings: dict[str, str] = {}
        covariates: list[str] = []
        asc = CUT_SEASON
        free_scales: list[tuple[str, str]] = []
        reference = None
        exclusions: set[tuple] = set()
        seasons: tuple[str, ...] | None = None
        n_categories = N_CATEGORIES
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            try:
                if tok[0] == "asc":
                    asc = tok[1]
                elif tok[0] == "categories":
                    n_categories = int(tok[1])
                elif tok[0] == "bind":
                    bindings[tok[1]] = tok[2]
                elif tok[0] == "covariate":
                    if tok[1] == "all":
                        covariates = list(COVARIATE_COLUMNS)
                    else:
                        covariates.append(tok[1])
                elif tok[0] == "scale_free":
                    free_scales.append((tok[1], tok[2]))
                elif tok[0] == "scale_ref":
                    reference = (tok[1], tok[2])
                elif tok[0] == "exclude":
                    parts = [None if t == "*" else t for t in tok[2:5]]
                    parts += [None] * (3 - len(parts))
                    exclusions.add((tok[1], *parts))
                elif tok[0] == "seasons":
                    seasons = tuple(tok[1:])
                else:
                    raise DataError(f"unknown directive {tok[0]!r}")
            except (IndexError, ValueError, DataError) as exc:
                raise DataError(f"model spec line {lineno}: {raw.strip()!r} ({exc})") from exc
        return cls(
            schema=schema,
            bindings=bindings,
            covariates=tuple(covariates),
            asc=asc,
            free_scales=tuple(free_scales),
            reference_scale=reference,
            exclusions=frozenset(exclusions),
            seasons=seasons,
            n_categories=n_categories,
        )

    def dumps(self) -> str:
        lines = [f"asc {self.asc}", f"categories {self.n_categories}"]
        if self.seasons is not None:
            lines.append("seasons " + " ".join(self.seasons))
        for attr in self.schema.attributes:
            if attr.name in self.bindings:
                lines.append(f"bind {attr.name} {self.bindings[attr.name]}")
        for cov in self.covariates:
            lines.append(f"covariate {cov}")
        for cut, season in self.free_scales:
            lines.append(f"scale_free {cut} {season}")
        if self.reference_scale is not None:
            lines.append(f"scale_ref {self.reference_scale[0]} {self.reference_scale[1]}")
        for attr, column, cut, season in sorted(
            self.exclusions, key=lambda p: tuple(str(x) for x in p)
        ):
            lines.append(
                f"exclude {attr} {column or '*'} {cut or '*'} {season or '*'}"
            )
        return "\n".join(lines) + "\n"

    def drop_parameter(self, pid: str) -> "ModelSpec":
        """Spec without the named beta/gamma parameter (used by pruning)."""
        parts = pid.split(":")
        if parts[0] == "g":
            if parts[1] not in self.covariates:
                raise SchemaError(f"unknown covariate parameter {pid!r}")
            return replace(self, covariates=tuple(c for c in self.covariates if c != parts[1]))
        if parts[0] != "b":
            raise SchemaError(f"only beta/gamma parameters can be dropped, got {pid!r}")
        attr, column = parts[1], parts[2]
        cut = parts[3] if len(parts) > 3 else None
        season = parts[4] if len(parts) > 4 else None
        pattern = (attr, column, cut, season)
        return replace(self, exclusions=frozenset(set(self.exclusions) | {pattern}))


def published_model_spec(schema: AttributeSchema) -> ModelSpec:
    """The published model's shape: sharing rules visible in the estimates."""
    bindings = {
        "fat_colour": GENERIC,
        "meat_colour": GENERIC,
        "hormone_added": GENERIC,
        "non_gmo": GENERIC,
        "marbling": CUT,
        "feed": CUT,
        "traceable": CUT,
        "antibiotic_free": CUT,
        "organic": CUT,
        "angus": CUT,
        "pasture_raised": CUT,
        "natural": CUT,
        "brand": CUT,
        "price": CUT,
        "packaging": CUT_SEASON,
        "certified_logo": CUT_SEASON,
        "use_by": CUT_SEASON,
        "weight": CUT_SEASON,
    }
    return ModelSpec(
        schema=schema,
        bindings=bindings,
        covariates=COVARIATE_COLUMNS,
        asc=CUT_SEASON,
        free_scales=(("ground", "winter"), ("diced", "winter"), ("roast", "winter")),
        reference_scale=("cowboy", "summer"),
    )


# -- parameter sets ----------------------------------------------------------


@dataclass
class ParameterSet:
    """Complete parameter home: ASCs, betas, gammas, thresholds, log-scales.

    ``beta`` is keyed by (attribute, column, cut-or-None, season-or-None);
    None marks a generic dimension.  ``tau`` holds the full threshold vector
    per cut with tau[0] = 0.  ``mu`` holds log-scales; absent cells are 0
    (scale one), and ``reference_scale`` designates the normalized cell.
    """

    schema: AttributeSchema
    asc: dict = field(default_factory=dict)
    beta: dict = field(default_factory=dict)
    gamma: dict = field(default_factory=dict)
    tau: dict = field(default_factory=dict)
    mu: dict = field(default_factory=dict)
    reference_scale: tuple[str, str] | None = None
    n_categories: int = N_CATEGORIES

    def validate(self) -> None:
        for cut, tau in self.tau.items():
            tau = np.asarray(tau, dtype=float)
            if tau.size != self.n_categories - 1:
                raise NumericalError(f"cut {cut!r}: expected {self.n_categories - 1} thresholds")
            if tau[0] != 0.0:
                raise NumericalError(f"cut {cut!r}: first threshold must be 0")
            if np.any(np.diff(tau) <= 0):
                raise NumericalError(f"cut {cut!r}: thresholds must be strictly increasing")
        if self.reference_scale is not None:
            if self.mu.get(self.reference_scale, 0.0) != 0.0:
                raise NumericalError("reference scale cell must have log-scale 0")

    def scale(self, cut: str, season: str) -> float:
        return math.exp(self.mu.get((cut, season), 0.0))

    def column_beta(self, attr: str, column: str, cut: str, season: str) -> float | None:
        """Most specific coefficient bound to a coded column, or None.

        Resolution order: cut+season, cut, season, fully generic.
        """
        for key in (
            (attr, column, cut, season),
            (attr, column, cut, None),
            (attr, column, None, season),
            (attr, column, None, None),
        ):
            if key in self.beta:
                return self.beta[key]
        return None

    def level_effect(self, cut: str, season: str, attr_name: str, level: str | None) -> float:
        """Utility effect of one level (categorical) or one unit (continuous).

        Excluded columns contribute zero; the base level of an effects-coded
        attribute gets minus the sum of the non-base effects.
        """
        attr = self.schema.attribute(attr_name)
        if not self.schema.applies(attr_name, cut):
            return 0.0
        if attr.is_continuous:
            return self.column_beta(attr_name, UNIT_COLUMN, cut, season) or 0.0
        if level not in attr.levels:
            raise SchemaError(f"unknown level {level!r} for attribute {attr_name!r}")
        if level == attr.base:
            return -sum(
                self.column_beta(attr_name, col, cut, season) or 0.0 for col in attr.columns()
            )
        return self.column_beta(attr_name, level, cut, season) or 0.0

    def includes(self, cut: str, season: str, attr_name: str) -> bool:
        """True when at least one column of the attribute carries a coefficient."""
        attr = self.schema.attribute(attr_name)
        if not self.schema.applies(attr_name, cut):
            return False
        return any(self.column_beta(attr_name, col, cut, season) is not None for col in attr.columns())

    # -- serialization ----------------------------------------------------

    @classmethod
    def load(cls, path, schema: AttributeSchema) -> "ParameterSet":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.loads(fh.read(), schema)

    @classmethod
    def loads(cls, text: str, schema: AttributeSchema) -> "ParameterSet":
        params = cls(schema=schema)
        tau_rows: dict[str, dict[int, float]] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            try:
                kind = tok[0]
                if kind == "categories":
                    params.n_categories = int(tok[1])
                elif kind == "ref_scale":
                    params.reference_scale = (tok[1], tok[2])
                elif kind == "scale":
                    params.mu[(tok[1], tok[2])] = math.log(float(tok[3]))
                elif kind == "asc":
                    params.asc[(tok[1], tok[2])] = float(tok[3])
                elif kind == "beta":
                    attr, column = tok[1], tok[2]
                    cut = None if tok[3] == "*" else tok[3]
                    season = None if tok[4] == "*" else tok[4]
                    params.beta[(attr, column, cut, season)] = float(tok[5])
                elif kind == "gamma":
                    params.gamma[tok[1]] = float(tok[2])
                elif kind == "tau":
                    tau_rows.setdefault(tok[1], {})[int(tok[2])] = float(tok[3])
                else:
                    raise DataError(f"unknown directive {kind!r}")
            except (IndexError, ValueError, DataError) as exc:
                raise DataError(f"parameter file line {lineno}: {raw.strip()!r} ({exc})") from exc
        for cut, rows in tau_rows.items():
            n = max(rows)
            params.tau[cut] = np.array([rows[j] for j in range(1, n + 1)], dtype=float)
        if params.tau:
            params.n_categories = len(next(iter(params.tau.values()))) + 1
        params.validate()
        return params

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    def dumps(self) -> str:
        lines = [f"categories {self.n_categories}"]
        if self.reference_scale is not None:
            lines.append(f"ref_scale {self.reference_scale[0]} {self.reference_scale[1]}")
        for (cut, season), mu in sorted(self.mu.items()):
            lines.append(f"scale {cut} {season} {math.exp(mu)!r}")
        for (cut, season), v in sorted(self.asc.items()):
            lines.append(f"asc {cut} {season} {v!r}")
        for (attr, column, cut, season), v in sorted(
            self.beta.items(), key=lambda kv: tuple(str(x) for x in kv[0])
        ):
            lines.append(f"beta {attr} {column} {cut or '*'} {season or '*'} {v!r}")
        for name, v in sorted(self.gamma.items()):
            lines.append(f"gamma {name} {v!r}")
        for cut in sorted(self.tau):
            for j, v in enumerate(np.asarray(self.tau[cut]), start=1):
                lines.append(f"tau {cut} {j} {float(v)!r}")
        return "\n".join(lines) + "\n"


def systematic_utility(params: ParameterSet, row: DesignRow, z=None) -> float:
    """W = ASC(cut, season) + sum(beta * x) + sum(gamma * z)."""
    w = params.asc.get((row.cut, row.season), 0.0)
    for (attr, column), value in row.coded.items():
        if not np.isfinite(value):
            raise NumericalError(f"non-finite coded value for ({attr}, {column})")
        beta = params.column_beta(attr, column, row.cut, row.season)
        if beta is not None:
            w += beta * value
    if z is not None:
        z = np.asarray(z, dtype=float)
        if not np.all(np.isfinite(z)):
            raise NumericalError("non-finite covariate value")
        for name, value in zip(COVARIATE_COLUMNS[: len(z)], z):
            g = params.gamma.get(name)
            if g is not None:
                w += g * value
    if not np.isfinite(w):
        raise NumericalError("systematic utility is not finite")
    return float(w)


# -- compiled likelihood -----------------------------------------------------


class LikelihoodProblem:
    """Dataset + ModelSpec compiled to arrays with an unconstrained theta.

    theta layout: linear block (ASCs, betas, gammas as design-matrix
    columns), then per-cut threshold increments (tau_j = sum of exp of the
    first j-1 increments), then free log-scales.
    """

    def __init__(self, dataset: Dataset, spec: ModelSpec, coder=None):
        if dataset.schema is not spec.schema and dataset.schema != spec.schema:
            raise DataError("dataset and spec use different schemas")
        self.spec = spec
        schema = spec.schema
        obs = dataset.observations
        if not obs:
            raise DataError("dataset has no observations")

        seen_cells = {(o.row.cut, o.row.season) for o in obs}
        self.cuts = tuple(c for c in schema.cuts if any(cc == c for cc, _ in seen_cells))
        self.cells = tuple(
            (c, s)
            for c in schema.cuts
            for s in spec.effective_seasons
            if (c, s) in seen_cells
        )
        if not self.cells:
            raise DataError("no observations fall inside the spec's seasons")
        for cell in seen_cells:
            if cell not in self.cells:
                raise DataError(f"observation cell {cell} outside spec seasons {spec.effective_seasons}")

        # linear parameter enumeration (deterministic: schema order)
        keys: list[tuple] = []
        if spec.asc != "none":
            for cut, season in self.cells:
                key = ("asc", cut, season if spec.asc == CUT_SEASON else None)
                if key not in keys:
                    keys.append(key)
        for attr in schema.attributes:
            for column in attr.columns():
                for cut, season in self.cells:
                    pid = spec.beta_id(attr.name, column, cut, season)
                    if pid is None:
                        continue
                    key = _beta_key_from_id(pid)
                    if key not in keys:
                        keys.append(key)
        for cov in spec.covariates:
            keys.append(("gamma", cov))
        self.lin_keys = tuple(keys)
        self.lin_names = tuple(_key_to_name(k) for k in keys)
        index = {k: i for i, k in enumerate(keys)}

        n_obs = len(obs)
        self.n_lin = len(keys)
        self.n_delta = spec.n_categories - 2
        self.n_free_mu = 0
        self.free_cells: tuple[tuple[str, str], ...] = tuple(
            cell for cell in spec.free_scales if cell in self.cells
        )
        self.n_free_mu = len(self.free_cells)

        need_z = bool(spec.covariates)
        if need_z and not dataset.profiles:
            raise DataError("spec includes covariates but the dataset has no profiles")
        coder = coder or default_coder()
        z_cache: dict[str, np.ndarray] = {}
        cov_idx = [COVARIATE_COLUMNS.index(c) for c in spec.covariates]

        X = np.zeros((n_obs, self.n_lin))
        y = np.empty(n_obs, dtype=np.int64)
        cut_idx = np.empty(n_obs, dtype=np.int64)
        cell_idx = np.empty(n_obs, dtype=np.int64)
        cut_pos = {c: i for i, c in enumerate(self.cuts)}
        cell_pos = {cs: i for i, cs in enumerate(self.cells)}
        for i, o in enumerate(obs):
            row = o.row
            if o.quantity >= spec.n_categories:
                raise DataError(
                    f"quantity {o.quantity} outside the spec's {spec.n_categories} categories"
                )
            y[i] = o.quantity
            cut_idx[i] = cut_pos[row.cut]
            cell_idx[i] = cell_pos[(row.cut, row.season)]
            aid = spec.asc_id(row.cut, row.season)
            if aid is not None:
                X[i, index[_asc_key_from_id(aid)]] = 1.0
            for (attr, column), value in row.coded.items():
                pid = spec.beta_id(attr, column, row.cut, row.season)
                if pid is not None:
                    X[i, index[_beta_key_from_id(pid)]] += value
            if need_z:
                z = z_cache.get(o.respondent_id)
                if z is None:
                    profile = dataset.profiles.get(o.respondent_id)
                    if profile is None:
                        raise DataError(f"no profile for respondent {o.respondent_id}")
                    z = coder.covariate_row(profile)
                    z_cache[o.respondent_id] = z
                for j, ci in enumerate(cov_idx):
                    X[i, self.n_lin - len(cov_idx) + j] = z[ci]
        self.X = X
        self.XT = np.ascontiguousarray(X.T)
        self.y = y
        self.cut_idx = cut_idx
        self.cell_idx = cell_idx
        self.n_obs = n_obs
        # map each cell to its free-mu slot (-1 when fixed at zero)
        self.cell_mu_slot = np.full(len(self.cells), -1, dtype=np.int64)
        for slot, cell in enumerate(self.free_cells):
            self.cell_mu_slot[self.cells.index(cell)] = slot

    # -- theta bookkeeping -------------------------------------------------

    @property
    def n_parameters(self) -> int:
        return self.n_lin + len(self.cuts) * self.n_delta + self.n_free_mu

    def parameter_names(self) -> tuple[str, ...]:
        names = list(self.lin_names)
        for cut in self.cuts:
            names.extend(f"delta:{cut}:{j}" for j in range(2, self.spec.n_categories))
        names.extend(f"mu:{cut}:{season}" for cut, season in self.free_cells)
        return tuple(names)

    def natural_names(self) -> tuple[str, ...]:
        """Like parameter_names but with thresholds in natural tau space."""
        names = list(self.lin_names)
        for cut in self.cuts:
            names.extend(f"tau:{cut}:{j}" for j in range(2, self.spec.n_categories))
        names.extend(f"mu:{cut}:{season}" for cut, season in self.free_cells)
        return tuple(names)

    def _split(self, theta: np.ndarray):
        lin = theta[: self.n_lin]
        k = self.n_lin + len(self.cuts) * self.n_delta
        delta = theta[self.n_lin : k].reshape(len(self.cuts), self.n_delta)
        mu = theta[k:]
        return lin, delta, mu

    def _boundaries(self, delta: np.ndarray) -> np.ndarray:
        """(n_cuts, n_categories + 1) matrix [-inf, 0, tau_2.., +inf]."""
        n_cuts = len(self.cuts)
        bounds = np.empty((n_cuts, self.spec.n_categories + 1))
        bounds[:, 0] = -np.inf
        bounds[:, 1] = 0.0
        if self.n_delta:
            bounds[:, 2:-1] = np.cumsum(np.exp(delta), axis=1)
        bounds[:, -1] = np.inf
        return bounds

    def _mu_per_cell(self, mu_free: np.ndarray) -> np.ndarray:
        mu = np.zeros(len(self.cells))
        if self.n_free_mu:
            free = self.cell_mu_slot >= 0
            mu[free] = mu_free[self.cell_mu_slot[free]]
        return mu

    def _intervals(self, theta: np.ndarray):
        lin, delta, mu_free = self._split(theta)
        w = self.X @ lin
        bounds = self._boundaries(delta)
        lam = np.exp(self._mu_per_cell(mu_free))[self.cell_idx]
        lo = bounds[self.cut_idx, self.y]
        hi = bounds[self.cut_idx, self.y + 1]
        a = lo / lam - w
        b = hi / lam - w
        return lin, delta, mu_free, bounds, lam, lo, hi, a, b

    # -- objective ----------------------------------------------------------

    def loglik(self, theta: np.ndarray) -> float:
        *_, a, b = self._intervals(theta)
        return float(np.sum(_interval_log_prob(a, b)))

    def loglik_grad(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        lin, delta, mu_free, bounds, lam, lo, hi, a, b = self._intervals(theta)
        ll = float(np.sum(_interval_log_prob(a, b)))
        r_a, r_b = _interval_ratios(a, b)

        grad = np.empty(self.n_parameters)
        grad[: self.n_lin] = self.XT @ (r_a - r_b)

        # scatter threshold contributions by boundary index, then chain to deltas
        n_bounds = self.spec.n_categories + 1
        acc = np.zeros((len(self.cuts), n_bounds))
        low_ok = self.y >= 1
        np.add.at(acc, (self.cut_idx[low_ok], self.y[low_ok]), (-r_a / lam)[low_ok])
        high_ok = self.y + 1 <= self.spec.n_categories - 1
        np.add.at(acc, (self.cut_idx[high_ok], self.y[high_ok] + 1), (r_b / lam)[high_ok])
        if self.n_delta:
            tail = acc[:, 2 : self.spec.n_categories]
            suffix = np.cumsum(tail[:, ::-1], axis=1)[:, ::-1]
            grad[self.n_lin : self.n_lin + len(self.cuts) * self.n_delta] = (
                np.exp(delta) * suffix
            ).ravel()

        if self.n_free_mu:
            lo_safe = np.where(np.isfinite(lo), lo, 0.0)
            hi_safe = np.where(np.isfinite(hi), hi, 0.0)
            per_obs = (r_a * lo_safe - r_b * hi_safe) / lam
            per_cell = np.zeros(len(self.cells))
            np.add.at(per_cell, self.cell_idx, per_obs)
            free = self.cell_mu_slot >= 0
            grad[self.n_lin + len(self.cuts) * self.n_delta :] = per_cell[free][
                np.argsort(self.cell_mu_slot[free])
            ]
        return ll, grad

    # -- parameter conversion ------------------------------------------------

    def params_to_theta(self, params: ParameterSet) -> np.ndarray:
        theta = np.zeros(self.n_parameters)
        for i, key in enumerate(self.lin_keys):
            if key[0] == "asc":
                _, cut, season = key
                if season is None:
                    values = [params.asc.get((cut, s)) for s in self.spec.effective_seasons]
                    values = [v for v in values if v is not None]
                    theta[i] = values[0] if values else 0.0
                else:
                    theta[i] = params.asc.get((cut, season), 0.0)
            elif key[0] == "beta":
                _, attr, column, cut, season = key
                value = params.beta.get((attr, column, cut, season))
                if value is None and season is not None:
                    value = params.beta.get((attr, column, cut, None))
                if value is None and cut is not None:
                    value = params.beta.get((attr, column, None, None))
                theta[i] = 0.0 if value is None else value
            else:
                theta[i] = params.gamma.get(key[1], 0.0)
        k = self.n_lin
        for c, cut in enumerate(self.cuts):
            tau = np.asarray(params.tau.get(cut), dtype=float)
            if tau is None or tau.size != self.spec.n_categories - 1:
                raise NumericalError(f"params missing thresholds for cut {cut!r}")
            inc = np.diff(tau)
            if tau[0] != 0.0 or np.any(inc <= 0):
                raise NumericalError(f"infeasible thresholds for cut {cut!r}")
            theta[k + c * self.n_delta : k + (c + 1) * self.n_delta] = np.log(inc)
        base = k + len(self.cuts) * self.n_delta
        for s, cell in enumerate(self.free_cells):
            theta[base + s] = params.mu.get(cell, 0.0)
        return theta

    def theta_to_params(self, theta: np.ndarray) -> ParameterSet:
        lin, delta, mu_free = self._split(theta)
        params = ParameterSet(
            schema=self.spec.schema,
            n_categories=self.spec.n_categories,
            reference_scale=self.spec.reference_scale,
        )
        for value, key in zip(lin, self.lin_keys):
            if key[0] == "asc":
                _, cut, season = key
                seasons = [season] if season is not None else [
                    s for s in self.spec.effective_seasons if (cut, s) in self.cells
                ]
                for s in seasons:
                    params.asc[(cut, s)] = float(value)
            elif key[0] == "beta":
                _, attr, column, cut, season = key
                params.beta[(attr, column, cut, season)] = float(value)
            else:
                params.gamma[key[1]] = float(value)
        bounds = self._boundaries(delta)
        for c, cut in enumerate(self.cuts):
            params.tau[cut] = bounds[c, 1 : self.spec.n_categories].copy()
        for s, cell in enumerate(self.free_cells):
            params.mu[cell] = float(mu_free[s])
        return params


def _beta_key_from_id(pid: str) -> tuple:
    parts = pid.split(":")
    attr, column = parts[1], parts[2]
    cut = parts[3] if len(parts) > 3 else None
    season = parts[4] if len(parts) > 4 else None
    return ("beta", attr, column, cut, season)


def _asc_key_from_id(pid: str) -> tuple:
    parts = pid.split(":")
    return ("asc", parts[1], parts[2] if len(parts) > 2 else None)


def _key_to_name(key: tuple) -> str:
    if key[0] == "asc":
        _, cut, season = key
        return f"asc:{cut}" + (f":{season}" if season else "")
    if key[0] == "beta":
        _, attr, column, cut, season = key
        name = f"b:{attr}:{column}"
        if cut:
            name += f":{cut}"
        if season:
            name += f":{season}"
        return name
    return f"g:{key[1]}"


# -- public operations -------------------------------------------------------


def log_likelihood(params: ParameterSet, dataset: Dataset, spec: ModelSpec) -> float:
    """Sum over observations of log P(observed quantity)."""
    problem = LikelihoodProblem(dataset, spec)
    return problem.loglik(problem.params_to_theta(params))


def gradient(params: ParameterSet, dataset: Dataset, spec: ModelSpec) -> np.ndarray:
    """Analytic gradient of the log-likelihood in the unconstrained space."""
    problem = LikelihoodProblem(dataset, spec)
    return problem.loglik_grad(problem.params_to_theta(params))[1]
