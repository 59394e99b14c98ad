"""Blocked slice-Gibbs sampler for beta-product dependent mixtures.

The augmented state holds allocations ``D``, slice variables ``U``, stick factor
vectors ``V_k``, common atoms ``phi_k`` and concentration parameters ``alpha``.
One sweep runs, in order:

1. random-walk MH on the factors of occupied sticks (one coordinate at a
   time by default), then a gamma random-walk
   MH on ``alpha``;
2. the same MH on instantiated but empty sticks ``k <= D*``;
3. ``U_ij ~ Uniform(0, W_i,D_ij)``;
4. prior draws of further sticks until every slice is covered;
5. atom updates for all instantiated components;
6. allocation draws restricted to components with ``W_id > U_ij``.

Factor moves target ``Q_k(v) = prior(v | alpha, k) * prod_i S_ik^A_ik (1 - S_ik)^B_ik``,
which covers both schemes and any number of series through the construction's
incidence matrix. Everything is evaluated in log space.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .distributions import NumericalError, ParameterError, gamma_logpdf, sample_gamma
from .prior import StickConstruction, log_weights, sample_factors

__all__ = [
    "SeriesData",
    "MhTuning",
    "Schedule",
    "GibbsState",
    "OccupancyStats",
    "PosteriorArchive",
    "SliceGibbsSampler",
    "run_chain",
]

log = logging.getLogger(__name__)

WEIGHT_FLOOR = 1e-300
_TINY_U = 2.0**-60


@dataclass
class SeriesData:
    """Observations of ``r`` series, flattened with a series index per value."""

    y: np.ndarray
    series: np.ndarray
    sizes: tuple

    @classmethod
    def from_series(cls, *values):
        if len(values) == 1 and not np.isscalar(values[0][0]):
            values = tuple(values[0])
        arrays = [np.asarray(v, dtype=float).ravel() for v in values]
        if len(arrays) < 2:
            raise ParameterError("need at least two series")
        if any(a.size == 0 for a in arrays):
            raise ParameterError("every series needs at least one observation")
        y = np.concatenate(arrays)
        series = np.concatenate([np.full(a.size, i, dtype=np.int64) for i, a in enumerate(arrays)])
        return cls(y, series, tuple(a.size for a in arrays))

    @property
    def r(self) -> int:
        return len(self.sizes)

    @property
    def n(self) -> int:
        return self.y.size

    def split(self, flat):
        """Split a flat per-observation array into one array per series."""
        return np.split(np.asarray(flat), np.cumsum(self.sizes)[:-1])


@dataclass
class MhTuning:
    tau2: float = 0.05
    kappa: float = 2.0
    adapt_kappa: bool = True
    alpha_target: float = 0.5
    adapt_every: int = 50
    v_move: str = "componentwise"  # or "joint"

    def __post_init__(self):
        if self.tau2 <= 0 or self.kappa <= 0:
            raise ParameterError("tau2 and kappa must be positive")
        if self.v_move not in ("componentwise", "joint"):
            raise ParameterError(f"v_move must be 'componentwise' or 'joint', got {self.v_move!r}")


@dataclass
class Schedule:
    sweeps: int = 20000
    burn_in: int = 10000
    thin: int = 1
    seed: int = 0
    predictive: bool = True
    log_every: int = 1000

    def __post_init__(self):
        if self.seed is None:
            raise ParameterError("a seed is required")
        if not (self.sweeps > self.burn_in >= 0):
            raise ParameterError("need sweeps > burn_in >= 0")
        if self.thin < 1:
            raise ParameterError("thin must be >= 1")


@dataclass
class GibbsState:
    D: np.ndarray  # (N,) 1-based allocations
    U: np.ndarray  # (N,)
    V: np.ndarray  # (K, n_factors)
    atoms: np.ndarray  # (K, atom_dim)
    alpha: np.ndarray
    nstar: Optional[np.ndarray] = None

    @property
    def K_current(self) -> int:
        return self.V.shape[0]

    @property
    def d_star(self) -> int:
        return int(self.D.max())

    def copy(self):
        return GibbsState(
            self.D.copy(), self.U.copy(), self.V.copy(), self.atoms.copy(), self.alpha.copy(),
            None if self.nstar is None else self.nstar.copy(),
        )


@dataclass
class OccupancyStats:
    A: np.ndarray  # (r, K) counts at k
    B: np.ndarray  # (r, K) counts beyond k

    @property
    def occupied(self) -> np.ndarray:
        return self.A.sum(axis=0) > 0


def occupancy_stats(d, series, r, K) -> OccupancyStats:
    if d.size and int(d.max()) > K:
        raise ParameterError(f"allocation {int(d.max())} exceeds the {K} tracked components")
    A = np.zeros((r, K), dtype=np.int64)
    B = np.zeros((r, K), dtype=np.int64)
    kernels.occupancy(np.ascontiguousarray(d, dtype=np.int64), np.ascontiguousarray(series, dtype=np.int64), A, B)
    return OccupancyStats(A, B)


@dataclass
class PosteriorArchive:
    """Thinned chain records plus run metadata.

    Each record is a plain dict (see ``betaddp.io`` for the on-disk schema).
    """

    meta: dict
    records: list = field(default_factory=list)

    def after_burn_in(self):
        b = self.meta.get("burn_in", 0)
        return [rec for rec in self.records if rec["sweep"] > b]

    def __len__(self):
        return len(self.records)


class SliceGibbsSampler:
    """Slice-Gibbs sampler over ``[phi, V, U, alpha, D]``.

    Parameters
    ----------
    construction : StickConstruction
        Stick scheme; its ``alphas`` give the initial concentration values.
    model : object
        Kernel/base-measure model (``GaussianModel`` or ``VarMixtureModel``).
    data : SeriesData
    tuning : MhTuning
    truncation : int, optional
        Fixed number of components, with the last stick set to one. ``None``
        runs the exact infinite-dimensional slice sampler.
    update_alpha, update_atoms : bool
        Freeze these blocks when False (used by oracle tests).
    alpha_conditioning : {"instantiated", "occupied"}
        Sticks entering the alpha update: all ``k <= D*`` (exact) or only
        occupied ones.
    """

    def __init__(
        self,
        construction: StickConstruction,
        model,
        data: SeriesData,
        tuning: Optional[MhTuning] = None,
        truncation: Optional[int] = None,
        update_alpha: bool = True,
        update_atoms: bool = True,
        alpha_conditioning: str = "instantiated",
    ):
        if construction.r != data.r:
            raise ParameterError(f"construction has r={construction.r} but data has {data.r} series")
        if not hasattr(model, "update_atoms"):
            raise NotImplementedError(f"{type(model).__name__} has no conjugate atom update")
        if truncation is not None and truncation < 2:
            raise ParameterError("truncation must be at least 2")
        if alpha_conditioning not in ("instantiated", "occupied"):
            raise ParameterError(f"unknown alpha_conditioning {alpha_conditioning!r}")
        self.construction = construction
        self.model = model
        self.data = data
        self.tuning = tuning or MhTuning()
        self.truncation = truncation
        self.update_alpha = update_alpha
        self.update_atoms_flag = update_atoms
        self.alpha_conditioning = alpha_conditioning
        self.alpha_prior = getattr(model, "alpha_prior", None)
        if update_alpha:
            if self.alpha_prior is None or len(self.alpha_prior) != len(construction.alphas):
                raise ParameterError("alpha updates need one gamma hyperprior per concentration parameter")
        self.incidence = construction.incidence.astype(float)
        self.kappa = self.tuning.kappa
        self.counters = {"v_star": [0, 0], "v_2star": [0, 0], "alpha": [0, 0]}
        self._window = [0, 0]
        self._adapt_batches = 0

    # -- initialisation -------------------------------------------------
    def initial_state(self, rng, alpha=None) -> GibbsState:
        """All observations in component 1, alpha at its prior mean, V from the prior."""
        if alpha is None:
            if self.update_alpha:
                alpha = np.array([p.mean for p in self.alpha_prior])
            else:
                alpha = np.array(self.construction.alphas)
        alpha = np.asarray(alpha, dtype=float)
        N = self.data.n
        K = 1 if self.truncation is None else self.truncation - 1
        V = np.atleast_2d(sample_factors(self.construction, np.arange(1, K + 1), rng, alpha))
        atoms = self.model.sample_prior_atoms(rng, K if self.truncation is None else self.truncation)
        D = np.ones(N, dtype=np.int64)
        state = GibbsState(D=D, U=np.zeros(N), V=V, atoms=atoms, alpha=alpha)
        w, _ = self.weights(state.V)
        state.U = self._draw_slices(w, state.D, rng)
        return state

    # -- weights --------------------------------------------------------
    def sticks(self, V):
        with np.errstate(divide="ignore"):
            return np.exp(np.log(V) @ self.incidence.T)

    def weights(self, V):
        """Linear weights ``(r, K)``, cumulative weights and log remainder.

        Under truncation the component after the last factor row takes the
        leftover mass.
        """
        S = self.sticks(V)
        if self.truncation is not None:
            S = np.vstack([S, np.ones((1, S.shape[1]))])
        logw, logrem = log_weights(S)
        if self.truncation is not None:
            logrem = np.full_like(logrem, -np.inf)
        w = np.exp(logw.T)
        w[w < WEIGHT_FLOOR] = 0.0
        return np.ascontiguousarray(w), logrem

    def _draw_slices(self, w, d, rng):
        wd = w[self.data.series, d - 1]
        if np.any(wd <= 0.0):
            j = int(np.argmax(wd <= 0.0))
            raise NumericalError(
                f"weight of allocated component {d[j]} underflowed for observation {j}; "
                "stick products fell below the numerical floor"
            )
        return wd * np.maximum(rng.random(wd.size), _TINY_U)

    # -- factor / alpha moves --------------------------------------------
    def log_q(self, V, ks, A, B, alpha):
        """``log Q_k`` for factor rows ``V`` at (1-based) stick indices ``ks``."""
        prior = self.construction.factor_logpdf(V, ks, alpha)
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.log(V) @ self.incidence.T
            log1m = np.log1p(-np.exp(logs))
            lik = np.sum(np.where(A > 0, A * logs, 0.0) + np.where(B > 0, B * log1m, 0.0), axis=1)
        out = prior + lik
        return np.where(np.isnan(out), -np.inf, out)

    def _mh_factors(self, V, rows, ks, A, B, alpha, rng, counter):
        """Gaussian random-walk MH on the factor rows ``rows``.

        Componentwise mode sweeps the coordinates one at a time; joint mode
        perturbs the whole row. Proposals leaving (0, 1) are rejected.
        """
        if rows.size == 0:
            return V
        V = V.copy()
        sd = np.sqrt(self.tuning.tau2)
        blocks = [None] if self.tuning.v_move == "joint" else range(V.shape[1])
        for j in blocks:
            cur = V[rows]
            prop = cur.copy()
            if j is None:
                prop += sd * rng.standard_normal(cur.shape)
            else:
                prop[:, j] += sd * rng.standard_normal(rows.size)
            logu = np.log(rng.random(rows.size))
            inside = np.all((prop > 0.0) & (prop < 1.0), axis=1)
            safe = np.where(inside[:, None], prop, cur)
            lq_new = self.log_q(safe, ks, A, B, alpha)
            lq_old = self.log_q(cur, ks, A, B, alpha)
            accept = inside & (logu < lq_new - lq_old)
            V[rows[accept]] = prop[accept]
            self.counters[counter][0] += int(accept.sum())
            self.counters[counter][1] += rows.size
        return V

    def log_alpha_target(self, alpha, V, ks):
        lp = sum(gamma_logpdf(a, p.shape, p.rate) for a, p in zip(alpha, self.alpha_prior))
        if V.shape[0]:
            lp += float(np.sum(self.construction.factor_logpdf(V, ks, alpha)))
        return lp

    def _mh_alpha(self, alpha, V, ks, rng):
        kappa = self.kappa
        shape = kappa * alpha**2
        prop = sample_gamma(shape, kappa * alpha, rng)
        logu = np.log(rng.random())
        if np.any(prop <= 0.0) or not np.all(np.isfinite(prop)):
            accept = False
        else:
            fwd = np.sum(gamma_logpdf(prop, kappa * alpha**2, kappa * alpha))
            bwd = np.sum(gamma_logpdf(alpha, kappa * prop**2, kappa * prop))
            ratio = self.log_alpha_target(prop, V, ks) - self.log_alpha_target(alpha, V, ks) + bwd - fwd
            accept = bool(logu < ratio)
        self.counters["alpha"][1] += 1
        self._window[1] += 1
        if accept:
            self.counters["alpha"][0] += 1
            self._window[0] += 1
            return prop
        return alpha

    def _adapt(self):
        t = self.tuning
        if self._window[1] < t.adapt_every:
            return
        rate = self._window[0] / self._window[1]
        self._adapt_batches += 1
        step = min(0.5, 2.0 / np.sqrt(self._adapt_batches))
        # larger kappa means smaller proposal steps
        self.kappa = float(self.kappa * np.exp(step * (t.alpha_target - rate)))
        self._window = [0, 0]

    # -- one sweep -------------------------------------------------------
    def sweep(self, state: GibbsState, rng, adapt=False) -> GibbsState:
        data = self.data
        c = self.construction
        r = data.r
        y = self.model.observations(data)
        trunc = self.truncation

        # 1-2: factor and alpha moves on k <= D* (all K-1 rows under truncation)
        K_inst = trunc - 1 if trunc is not None else state.d_star
        occ = occupancy_stats(state.D, data.series, r, max(K_inst, state.d_star))
        A = occ.A[:, :K_inst].T.astype(float)
        B = occ.B[:, :K_inst].T.astype(float)
        ks = np.arange(1, K_inst + 1)
        V = state.V[:K_inst]
        occupied = occ.A.sum(axis=0)[:K_inst] > 0
        rows = np.flatnonzero(occupied)
        V = self._mh_factors(V, rows, ks[rows], A[rows], B[rows], state.alpha, rng, "v_star")
        alpha = state.alpha
        if self.update_alpha:
            cond = rows if self.alpha_conditioning == "occupied" else np.arange(K_inst)
            alpha = self._mh_alpha(alpha, V[cond], ks[cond], rng)
            if adapt and self.tuning.adapt_kappa:
                self._adapt()
        empty = np.flatnonzero(~occupied)
        V = self._mh_factors(V, empty, ks[empty], A[empty], B[empty], alpha, rng, "v_2star")

        # 3: slices
        w, _ = self.weights(V)
        U = self._draw_slices(w, state.D, rng)

        # 4: extend with prior sticks until every slice is covered
        if trunc is None:
            V, w, cumw = self._extend(V, U, alpha, rng)
        else:
            cumw = np.cumsum(w, axis=1)
        K = w.shape[1]

        # 5: atoms
        atoms = state.atoms
        if atoms.shape[0] < K:
            atoms = np.vstack([atoms, self.model.sample_prior_atoms(rng, K - atoms.shape[0])])
        atoms = atoms[:K]
        if self.update_atoms_flag:
            atoms = self.model.update_atoms(y, state.D, atoms, rng)

        # 6: allocations
        mu, lognorm, prec = self.model.kernel_params(atoms)
        draws = 1.0 - rng.random(data.n)
        d_new = np.empty(data.n, dtype=np.int64)
        nstar = np.empty(data.n, dtype=np.int64)
        fail = kernels.allocate_gaussian(
            np.ascontiguousarray(y, dtype=float), data.series, U, w, np.ascontiguousarray(cumw),
            mu, np.ascontiguousarray(lognorm), np.ascontiguousarray(prec), draws, d_new, nstar, np.empty(K),
        )
        if fail >= 0:
            raise NumericalError(f"empty candidate set for observation {fail}")

        new = GibbsState(D=d_new, U=U, V=V, atoms=atoms, alpha=np.asarray(alpha, dtype=float), nstar=nstar)
        self.model.after_sweep(new, data, rng)
        return new

    def _extend(self, V, U, alpha, rng):
        c = self.construction
        data = self.data
        umin = np.full(data.r, np.inf)
        np.minimum.at(umin, data.series, U)
        log_umin = np.log(umin)
        while True:
            w, logrem = self.weights(V)
            if np.all(logrem < log_umin):
                break
            K = V.shape[0]
            extra = max(4, K // 2)
            new = sample_factors(c, np.arange(K + 1, K + extra + 1), rng, alpha)
            V = np.vstack([V, np.atleast_2d(new)])
        cumw = np.cumsum(w, axis=1)
        # keep only the sticks the slices can reach: N* = max_ij N*_ij
        reach = cumw[data.series] > (1.0 - U)[:, None]
        need = int(np.max(np.argmax(reach, axis=1))) + 1 if reach.any(axis=1).all() else V.shape[0]
        V = V[:need]
        return V, np.ascontiguousarray(w[:, :need]), np.ascontiguousarray(cumw[:, :need])

    # -- driver ----------------------------------------------------------
    def record(self, sweep, state, rng, predictive):
        data = self.data
        D_parts = [d.tolist() for d in data.split(state.D)]
        occupied = np.unique(state.D)
        w, _ = self.weights(state.V)
        rec = {
            "sweep": sweep,
            "alpha": [float(a) for a in state.alpha],
            "n_clusters": [int(np.unique(d).size) for d in data.split(state.D)],
            "D": D_parts,
            "occupied": occupied.tolist(),
            "atoms": {
                name: [float(v) for v in state.atoms[occupied - 1, j]]
                for j, name in enumerate(self.model.atom_names)
            },
            "weights": [[float(x) for x in w[i, occupied - 1]] for i in range(data.r)],
            "K": int(state.K_current),
            "nstar_max": int(state.nstar.max()) if state.nstar is not None else None,
            "kappa": self.kappa,
            "accept": {k: list(v) for k, v in self.counters.items()},
        }
        extra = getattr(self.model, "record_extra", None)
        if extra is not None:
            rec.update(extra())
        if predictive:
            from .analysis import predictive_sample

            rec["y_pred"] = [float(v) for v in predictive_sample(state, self, rng)]
        return rec

    def run(self, schedule: Schedule, state: Optional[GibbsState] = None, meta=None) -> PosteriorArchive:
        rng = np.random.default_rng(schedule.seed)
        if state is None:
            state = self.initial_state(rng)
        archive = PosteriorArchive(
            meta=dict(
                meta or {},
                scheme=self.construction.scheme.value,
                r=self.construction.r,
                discount=self.construction.discount,
                sizes=list(self.data.sizes),
                sweeps=schedule.sweeps,
                burn_in=schedule.burn_in,
                thin=schedule.thin,
                seed=schedule.seed,
                tau2=self.tuning.tau2,
                v_move=self.tuning.v_move,
                kappa0=self.tuning.kappa,
                truncation=self.truncation,
                atom_names=list(self.model.atom_names),
            )
        )
        for s in range(1, schedule.sweeps + 1):
            burning = s <= schedule.burn_in
            try:
                state = self.sweep(state, rng, adapt=burning)
            except (NumericalError, ParameterError) as exc:
                # the caller may dump the last good state
                exc.sweep = s
                exc.state = state
                raise
            if s == schedule.burn_in:
                # acceptance after burn-in is reported separately from tuning
                self.burn_in_counters = {k: list(v) for k, v in self.counters.items()}
            if s % schedule.thin == 0:
                archive.records.append(
                    self.record(s, state, rng, schedule.predictive and not burning)
                )
            if schedule.log_every and s % schedule.log_every == 0:
                log.info("sweep %d  alpha=%s  clusters=%s", s, np.round(state.alpha, 4), archive.records[-1]["n_clusters"] if archive.records else None)
        self.state = state
        archive.meta["final_kappa"] = self.kappa
        archive.meta["acceptance"] = self.acceptance_rates(after_burn_in=True)
        return archive

    def acceptance_rates(self, after_burn_in=False):
        base = getattr(self, "burn_in_counters", None) if after_burn_in else None
        out = {}
        for k, (acc, tot) in self.counters.items():
            if base is not None:
                acc, tot = acc - base[k][0], tot - base[k][1]
            out[k] = acc / tot if tot else None
        return out


def run_chain(construction, model, data, schedule: Schedule, tuning=None, **options) -> PosteriorArchive:
    """Build a sampler and run it for ``schedule.sweeps`` sweeps."""
    sampler = SliceGibbsSampler(construction, model, data, tuning, **options)
    return sampler.run(schedule)
