"""
Experiment runner
One method per subcommand. Each builds a table (CSV) and a summary payload
(JSON) and stamps both with the run metadata: config hash, seed, engine
version, scheme, chunk size and the C2/L values in force.

Orchestration is single-threaded; simulation parallelism lives in
``iter_batches``. Worker counts never reach the outputs.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from lsv.conf import engine_version, get_setting
from lsv.exceptions import ConfigError, EstimationError, HypothesisViolationError, ThresholdError
from lsv.services import curves as curves_mod
from lsv.services import heston_oracle as oracle
from lsv.services import pricing, variational
from lsv.services.estimate import (
    MCEstimate,
    exp_moment,
    fit_log_slope,
    increment_scaling,
    kde_log_density,
    small_ball,
    tail_slope,
    terminal_tail,
    tube_hits,
)
from lsv.services.model import HypothesisReport, ModelSpec, spec_hash, validate_hypotheses
from lsv.services.simulate import (
    KEEP_FULL,
    KEEP_TERMINAL,
    BatchWriter,
    PathBatch,
    concatenate,
    default_steps,
    iter_batches,
)

from .config import ExperimentConfig
from .writers import write_csv, write_json

logger = logging.getLogger(__name__)

SUBCOMMANDS = (
    "constants",
    "curves",
    "variational",
    "tube",
    "tails",
    "smallballs",
    "wings",
    "moments",
    "scaling",
    "density",
)

LEE_BAND = 0.10
ORACLE_WING_STRIKES = tuple(sign * (2.0 + 0.25 * i) for sign in (-1.0, 1.0) for i in range(9))
SCALING_BAND = (0.8, 1.2)


@dataclass
class Table:
    header: List[str]
    rows: List[List[Any]] = field(default_factory=list)

    def add(self, *values: Any) -> None:
        self.rows.append(list(values))


@dataclass
class ExperimentResult:
    subcommand: str
    meta: Dict[str, Any]
    summary: Dict[str, Any]
    artifacts: List[Path] = field(default_factory=list)

    @property
    def hypotheses_passed(self) -> bool:
        return bool(self.meta.get("hypotheses", {}).get("passed", True))

    def as_dict(self) -> Dict[str, Any]:
        return {
            "subcommand": self.subcommand,
            "meta": self.meta,
            "summary": self.summary,
            "artifacts": [str(p) for p in self.artifacts],
        }


def _bound_holds(estimate: MCEstimate, bound: curves_mod.LogMagnitude) -> Optional[bool]:
    """ci_low > exp(-M), decided in log space; None when the interval reaches zero."""
    if estimate.ci_low <= 0.0:
        return None
    return math.log(estimate.ci_low) > bound.log_probability


def constants_summary(spec: ModelSpec, consts: curves_mod.BoundConstants, seed: int = 0) -> Dict[str, Any]:
    """Constant chain, thresholds, moment ceiling, wing floors and the ellipticity audit."""
    first, second = curves_mod.y_threshold(spec)
    ceiling = curves_mod.moment_ceiling(spec, consts)
    return {
        "spec": spec.describe(),
        "constants": consts.as_dict(),
        "thresholds": {
            "y_threshold": first,
            "y_threshold_cdf": second,
            "small_ball": curves_mod.small_ball_threshold(spec),
        },
        "moment_ceiling": ceiling.as_dict(),
        "wing_floors": pricing.wing_floors(ceiling).as_dict(),
        "ellipticity": curves_mod.ellipticity_report(spec, consts, seed=seed).as_dict(),
        "density": curves_mod.density_constants(spec, consts).as_dict(),
    }


def _terminal_view(chunk: PathBatch) -> PathBatch:
    if chunk.keep == KEEP_TERMINAL:
        return chunk
    return replace(
        chunk,
        keep=KEEP_TERMINAL,
        grid=np.array([chunk.grid[0], chunk.grid[-1]]),
        x_paths=chunk.x_paths[:, [0, -1]],
        v_paths=chunk.v_paths[:, [0, -1]],
    )


class ExperimentRunner:
    """
    Runs subcommands for one validated config.

    ``allow_unverified`` lets a run proceed when the hypothesis audit fails; the
    violations are then embedded in the output metadata.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        *,
        out_dir: Optional[str] = None,
        allow_unverified: bool = False,
        workers: Optional[int] = None,
        save_paths: Optional[str] = None,
    ):
        self.config = config
        self.spec = config.build_spec()
        self.out_dir = config.output_dir(out_dir)
        self.allow_unverified = allow_unverified
        self.workers = workers
        self.save_paths = Path(save_paths) if save_paths else None
        self.report: Optional[HypothesisReport] = None
        self._artifacts: List[Path] = []

    # -----------------------------
    # Setup
    # -----------------------------

    def audit(self) -> HypothesisReport:
        if self.report is None:
            self.report = validate_hypotheses(self.spec, seed=self.config.seed)
            if not self.report.passed:
                if not self.allow_unverified:
                    raise HypothesisViolationError(
                        f"Model fails the coefficient audit: {self.report.summary()}", report=self.report
                    )
                logger.warning("Proceeding without verified hypotheses: %s", self.report.summary())
            else:
                logger.info(self.report.summary())
        return self.report

    @cached_property
    def consts(self) -> curves_mod.BoundConstants:
        return curves_mod.bound_constants(self.spec, C2=self.config.C2, L=self.config.L)

    @cached_property
    def oracle_params(self) -> Optional[oracle.HestonParams]:
        if self.spec.family != "heston":
            return None
        return oracle.HestonParams.from_spec(self.spec)

    @property
    def n_paths(self) -> int:
        return int(self.config.run["n_paths"])

    @property
    def n_steps(self) -> int:
        n_steps = self.config.run.get("n_steps")
        return int(n_steps) if n_steps else default_steps(self.spec.T)

    def meta(self, subcommand: str) -> Dict[str, Any]:
        report = self.audit()
        hypotheses: Dict[str, Any] = {"passed": report.passed, "summary": report.summary()}
        if not report.passed:
            hypotheses["violations"] = report.as_dict()
        return {
            "subcommand": subcommand,
            "config_hash": self.config.config_hash,
            "spec_hash": spec_hash(self.spec).hex(),
            "family": self.spec.family,
            "seed": self.config.seed,
            "version": engine_version(),
            "scheme": self.config.scheme.value,
            "n_paths": self.n_paths,
            "n_steps": self.n_steps,
            "estimator": self.config.run["estimator"],
            "chunk_paths": int(get_setting("CHUNK_PATHS")),
            "C2": self.config.C2,
            "L": self.config.custom_bounds.get("L"),
            "L_effective": self.consts.L,
            "K": self.spec.K,
            "hypotheses": hypotheses,
        }

    # -----------------------------
    # Orchestration
    # -----------------------------

    def run(self, subcommand: str) -> ExperimentResult:
        if subcommand not in SUBCOMMANDS:
            raise ConfigError(f"Unknown subcommand '{subcommand}'. Known: {', '.join(SUBCOMMANDS)}")
        meta = self.meta(subcommand)
        self._artifacts = []
        logger.info("Running %s (config %s, seed %s)", subcommand, meta["config_hash"][:12], meta["seed"])

        handler: Callable[[], Tuple[Optional[Table], Dict[str, Any]]] = getattr(self, f"run_{subcommand}")
        table, summary = handler()

        formats = self.config.output["formats"]
        if table is not None and "csv" in formats:
            self._artifacts.append(write_csv(self.out_dir / f"{subcommand}.csv", table.header, table.rows, meta))
        if table is None or "json" in formats:
            self._artifacts.append(write_json(self.out_dir / f"{subcommand}.json", summary, meta))

        for path in self._artifacts:
            logger.info("Wrote %s", path)
        return ExperimentResult(subcommand=subcommand, meta=meta, summary=summary, artifacts=list(self._artifacts))

    def _targets(self, name: str, minimum: int = 1) -> List[Any]:
        values = list(self.config.targets.get(name) or [])
        if len(values) < minimum:
            raise ConfigError(f"targets.{name} needs at least {minimum} value(s)")
        return values

    def _stream(self, keep: str) -> Iterator[PathBatch]:
        """Chunks in order; with --save-paths the full paths are also written as VTB1."""
        if self.save_paths is not None:
            keep = KEEP_FULL
        chunks = iter_batches(
            self.spec, self.n_paths, self.n_steps, self.config.seed, self.config.scheme,
            keep=keep, workers=self.workers,
        )
        if self.save_paths is None:
            yield from chunks
            return
        with BatchWriter(self.save_paths, self.spec, self.n_paths, self.n_steps,
                         self.config.seed, self.config.scheme) as writer:
            for chunk in chunks:
                writer.write(chunk)
                yield chunk
        self._artifacts.append(self.save_paths)

    def _terminal_batch(self) -> PathBatch:
        return concatenate([_terminal_view(chunk) for chunk in self._stream(KEEP_TERMINAL)])

    # -----------------------------
    # Subcommands
    # -----------------------------

    def run_constants(self):
        return None, constants_summary(self.spec, self.consts, seed=self.config.seed)

    def run_curves(self):
        steps = int(self.config.targets["curve_steps"])
        table = Table(["y", "t", "u", "u_prime", "x_tilde", "v_tilde", "r_tilde"])
        built, skipped = [], []
        for y in self._targets("y_list"):
            try:
                curve = curves_mod.optimal_curves(y, self.spec, steps=steps)
            except ThresholdError as exc:
                skipped.append({"y": y, "reason": str(exc)})
                continue
            for row in curve.to_rows():
                table.add(y, row["t"], row["u"], row["u_prime"], row["x_tilde"], row["v_tilde"], row["r_tilde"])
            h = float(curve.grid[1] - curve.grid[0])
            u_residual = (curve.u[2:] - 2.0 * curve.u[1:-1] + curve.u[:-2]) / h ** 2 - curve.u[1:-1] / 4.0
            built.append({
                "y": y,
                "y_bar": curve.y_bar,
                "u_T": float(curve.u[-1]),
                "el_residual": curve.euler_lagrange_residual(),
                "u_fd_residual": float(np.max(np.abs(u_residual))),
                "regularity_window": curve.h,
                "class_violations": len(curves_mod.class_membership_violations(curve)),
            })
        if skipped:
            logger.warning("curves skipped %d target(s) below the threshold", len(skipped))
        return table, {"curves": built, "skipped": skipped, "steps": steps}

    def run_variational(self):
        V0, T = self.spec.V0, self.spec.T
        N = int(self.config.targets["knots"])
        table = Table([
            "y", "y_bar", "knots", "action_analytic", "action_closed_form", "action_from_line",
            "action_from_analytic", "iterations_from_line", "iterations_from_analytic", "max_abs_diff",
            "relative_gap",
        ])
        cases = []
        for y in self._targets("y_list"):
            y_bar = abs(y) + V0
            analytic = variational.analytic_curve(V0, y_bar, T, N)
            from_line = variational.minimize_action(V0, y_bar, T, N, init=variational.straight_line(V0, y_bar, T, N))
            from_analytic = variational.minimize_action(V0, y_bar, T, N, init=analytic)
            a_analytic = variational.action(analytic)
            a_line = variational.action(from_line)
            gap = (a_line - a_analytic) / a_analytic
            diff = float(np.max(np.abs(from_line.values - analytic.values)))
            closed = variational.closed_form_action(V0, y_bar, T)
            extrapolated = variational.extrapolated_minimizer(V0, y_bar, T, N)
            table.add(y, y_bar, N, a_analytic, closed, a_line, variational.action(from_analytic),
                      from_line.iterations, from_analytic.iterations, diff, gap)
            cases.append({
                "y": y,
                "y_bar": y_bar,
                "action_analytic": a_analytic,
                "action_closed_form": closed,
                "action_from_line": a_line,
                "relative_gap": gap,
                "newton_history": list(from_line.newton_history),
                "iterations_from_analytic": from_analytic.iterations,
                "el_residual": variational.el_residual(from_line),
                "u_residual": variational.to_u_residual(from_line, V0),
                "u_residual_extrapolated": variational.to_u_residual(extrapolated, V0),
                "u_residual_analytic": variational.to_u_residual(analytic, V0),
            })
        return table, {"cases": cases, "knots": N}

    def run_tube(self):
        estimator = self.config.run["estimator"]
        targets = []
        skipped = []
        for y in self._targets("y_list"):
            try:
                curve = curves_mod.optimal_curves(y, self.spec, steps=self.n_steps)
            except ThresholdError as exc:
                skipped.append({"y": y, "reason": str(exc)})
                continue
            targets.append((y, curve))
        if not targets:
            raise ConfigError("tube: no target y above the threshold")

        hits = [0.0] * len(targets)
        n = 0
        for chunk in self._stream(KEEP_FULL):
            for i, (_, curve) in enumerate(targets):
                hits[i] += tube_hits(chunk, curve, estimator)
            n += chunk.n_paths

        table = Table([
            "y", "p_hat", "ci_low", "ci_high", "hits", "theorem_log_bound", "theorem_log_exponent",
            "raw_log_bound", "raw_log_exponent", "bound_ok",
        ])
        rows = []
        for (y, curve), h in zip(targets, hits):
            estimate = MCEstimate.from_counts(h, n, estimator)
            theorem = curves_mod.theorem_log_bound(y, self.spec, self.consts)
            consts_y = curves_mod.bound_constants(self.spec, y, C2=self.config.C2, L=self.config.L)
            raw = curves_mod.raw_tube_log_bound(curve, self.spec, consts_y)
            ok = _bound_holds(estimate, theorem)
            table.add(y, estimate.p_hat, estimate.ci_low, estimate.ci_high, estimate.hits,
                      theorem.log_probability, theorem.log_value, raw.log_probability, raw.log_value, ok)
            rows.append({"y": y, "estimate": estimate.as_dict(), "theorem": theorem.as_dict(),
                         "raw": raw.as_dict(), "bound_ok": ok})
        return table, {"tubes": rows, "skipped": skipped}

    def run_tails(self):
        ys = sorted(y for y in self._targets("y_list", minimum=1) if y > 0)
        if not ys:
            raise ConfigError("tails: targets.y_list needs positive values")
        batch = self._terminal_batch()
        params = self.oracle_params

        right_tails, left_tails = [], []
        table = Table([
            "y", "right_p_hat", "right_ci_low", "right_ci_high", "left_p_hat", "left_ci_low", "left_ci_high",
            "cdf_log_bound", "cdf_log_exponent", "bound_ok", "oracle_right", "oracle_left",
        ])
        for y in ys:
            right, left = terminal_tail(batch, y)
            right_tails.append((y, right))
            left_tails.append((y, left))
            try:
                bound = curves_mod.cdf_tail_log_bound(y, self.spec, self.consts)
                log_bound, log_exponent = bound.log_probability, bound.log_value
                ok = _bound_holds(right, bound)
            except ThresholdError:
                log_bound = log_exponent = ok = None
            o_right = oracle.tail(params, y) if params else None
            o_left = oracle.left_tail(params, y) if params else None
            table.add(y, right.p_hat, right.ci_low, right.ci_high, left.p_hat, left.ci_low, left.ci_high,
                      log_bound, log_exponent, ok, o_right, o_left)

        fits: Dict[str, Any] = {}
        for side, tails, oracle_fn in (
            ("right", right_tails, oracle.tail),
            ("left", left_tails, oracle.left_tail),
        ):
            try:
                fit = tail_slope(tails)
            except EstimationError as exc:
                fits[side] = {"error": str(exc)}
                continue
            entry: Dict[str, Any] = {"mc": fit.as_dict(), "y_range": list(fit.y_range)}
            if params:
                fit_ys = [p[0] for p in fit.points]
                ofit = fit_log_slope(fit_ys, [oracle_fn(params, y) for y in fit_ys])
                entry["oracle"] = ofit.as_dict()
                entry["relative_difference"] = abs(fit.slope - ofit.slope) / abs(ofit.slope)
            fits[side] = entry
        return table, {"slopes": fits, "n": batch.n_paths}

    def run_smallballs(self):
        ys = self._targets("y_list")
        js = self._targets("j_list")
        batch = self._terminal_batch()
        table = Table(["y", "j", "radius", "p_hat", "ci_low", "ci_high", "log_bound", "log_exponent", "bound_ok"])
        chains = []
        for y in ys:
            for j in js:
                radius = curves_mod.small_ball_radius(y, j)
                estimate = small_ball(batch, y, radius)
                try:
                    bound, _ = curves_mod.small_ball_log_bound(y, j, self.spec, self.consts)
                except ThresholdError:
                    table.add(y, j, radius, estimate.p_hat, estimate.ci_low, estimate.ci_high, None, None, None)
                    continue
                ok = _bound_holds(estimate, bound)
                table.add(y, j, radius, estimate.p_hat, estimate.ci_low, estimate.ci_high,
                          bound.log_probability, bound.log_value, ok)
                chains.append(curves_mod.small_ball_chain(y, j, self.spec, self.consts).as_dict())
        return table, {"chains": chains, "threshold": curves_mod.small_ball_threshold(self.spec)}

    def run_wings(self):
        strikes = sorted(self._targets("strikes", minimum=2))
        k_min = float(self.config.targets["wing_k_min"])
        batch = self._terminal_batch()
        smile = pricing.smile_from_mc(batch, strikes)
        ceiling = curves_mod.moment_ceiling(self.spec, self.consts)

        summary: Dict[str, Any] = {"smile": smile.as_dict(), "k_min_abs": k_min}
        try:
            summary["mc_slopes"] = pricing.wing_slopes(smile.points, k_min, ceiling).as_dict()
        except EstimationError as exc:
            summary["mc_slopes"] = {"error": str(exc)}
            summary["wing_floors"] = pricing.wing_floors(ceiling).as_dict()

        oracle_vols: Dict[float, float] = {}
        params = self.oracle_params
        if params:
            cm = oracle.critical_moment(params)
            osmile = oracle.oracle_smile(params, strikes)
            oracle_vols = {p.k: p.implied_vol for p in osmile.points}
            wing_ks = sorted(self.config.targets.get("oracle_wing_strikes") or ORACLE_WING_STRIKES)
            wing_smile = oracle.oracle_smile(params, wing_ks)
            entry: Dict[str, Any] = {
                "critical_moments": cm.as_dict(),
                "strikes": wing_ks,
                "dropped": [{"k": k, "reason": r} for k, r in osmile.dropped + wing_smile.dropped],
            }
            try:
                slopes = pricing.wing_slopes(wing_smile.points, min(abs(k) for k in wing_ks))
                entry["slopes"] = slopes.as_dict()
                entry.update(pricing.compare_to_moment_formula(slopes, cm.p_star, cm.q_star, LEE_BAND).as_dict())
            except EstimationError as exc:
                entry["slopes"] = {"error": str(exc)}
            summary["oracle"] = entry

        mc_points = {p.k: p for p in smile.points}
        dropped = dict(smile.dropped)
        table = Table(["k", "mc_vol", "mc_std_error", "oracle_vol", "dropped"])
        for k in strikes:
            point = mc_points.get(k)
            table.add(k, point.implied_vol if point else None, point.std_error if point else None,
                      oracle_vols.get(k), dropped.get(k))
        return table, summary

    def run_moments(self):
        ps = self._targets("p_list")
        batch = self._terminal_batch()
        params = self.oracle_params
        cm = oracle.critical_moment(params) if params else None
        ceiling = curves_mod.moment_ceiling(self.spec, self.consts)

        table = Table(["p", "estimate", "std_error", "max_share", "unreliable", "oracle_moment"])
        for p in ps:
            estimate = exp_moment(batch, p)
            exact = None
            if cm is not None and -cm.q_star < p < cm.p_star:
                exact = oracle.moment(params, p)
            table.add(p, estimate.estimate, estimate.std_error, estimate.max_share, estimate.unreliable, exact)

        summary: Dict[str, Any] = {"moment_ceiling": ceiling.as_dict()}
        if cm is not None:
            summary["critical_moments"] = cm.as_dict()
            summary["below_ceiling"] = math.log(max(cm.p_star, cm.q_star)) <= ceiling.log_value
        return table, summary

    def run_scaling(self):
        dts = self._targets("dt_list", minimum=3)
        table = Table(["p", "dt", "moment"])
        fits = []
        for p in self.config.targets["scaling_p"]:
            fit = increment_scaling(
                self.spec, int(p), dts, self.n_paths, self.config.seed,
                scheme=self.config.scheme, workers=self.workers,
            )
            for dt, m in zip(fit.dts, fit.moments):
                table.add(fit.p, dt, m)
            entry = fit.as_dict()
            entry["within_band"] = SCALING_BAND[0] * fit.p <= fit.slope <= SCALING_BAND[1] * fit.p
            fits.append(entry)
        return table, {"fits": fits}

    def run_density(self):
        grid = sorted(self._targets("y_grid", minimum=3))
        batch = self._terminal_batch()
        kde = kde_log_density(batch, grid)
        params = self.oracle_params
        points = oracle.density(params, grid) if params else None

        table = Table(["y", "kde_log_density", "oracle_density", "oracle_clipped"])
        for i, (y, log_d) in enumerate(kde):
            table.add(y, log_d, points[i].density if points else None, points[i].clipped if points else None)

        fit_min = float(self.config.targets["density_fit_min"])
        fit_points = [(y, math.exp(d)) for y, d in kde if y >= fit_min and math.isfinite(d)]
        summary: Dict[str, Any] = {"fit_min": fit_min}
        try:
            fit = fit_log_slope([p[0] for p in fit_points], [p[1] for p in fit_points])
            summary["kde_slope"] = fit.as_dict()
            if points:
                used = {p[0] for p in fit.points}
                ofit = fit_log_slope([p.y for p in points if p.y in used],
                                     [p.density for p in points if p.y in used])
                summary["oracle_slope"] = ofit.as_dict()
        except EstimationError as exc:
            summary["kde_slope"] = {"error": str(exc)}
        return table, summary


def run_experiment(config: ExperimentConfig, subcommand: str, **options: Any) -> ExperimentResult:
    """Audit the model and run one subcommand."""
    runner = ExperimentRunner(config, **options)
    runner.audit()
    return runner.run(subcommand)

