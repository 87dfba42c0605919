import logging
import os
from contextlib import contextmanager
from typing import Any, Dict, List, Optional

import yaml

from robust_topopt.adversary.barrier import BarrierConfig
from robust_topopt.adversary.probe import concavity_probe
from robust_topopt.analyzers.analyzer import RobustRunAnalyzer, RobustRunAnalyzerConfig
from robust_topopt.analyzers.exporters import export_field, export_report
from robust_topopt.config import RunConfig
from robust_topopt.fe.mesh import Mesh, build_mesh
from robust_topopt.fe.solver import build_cantilever_model
from robust_topopt.filtering import build_filter
from robust_topopt.material import MaterialParams, uniform_spread_increase, whole_domain_ratio
from robust_topopt.models import DesignField, RunResult
from robust_topopt.optimizer.mma import MmaOptimizer
from robust_topopt.optimizer.nominal import NominalResult, NominalSolver, OuterSettings
from robust_topopt.optimizer.problem import TopologyProblem
from robust_topopt.optimizer.report import evaluate_report
from robust_topopt.optimizer.robust import StageError, optimize
from robust_topopt.uncertainty.sets import UncertaintySet, make_uncertainty_set

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3

PROBE_DIRECTIONS = 20


def material_params(config: RunConfig) -> MaterialParams:
    m = config.material
    return MaterialParams(E0=m.E0, E_D=m.E_D, nu=m.nu, p=m.p)


def barrier_config(config: RunConfig) -> BarrierConfig:
    b = config.barrier
    return BarrierConfig(mu_init=b.mu_init, mu_target=b.mu_target, mu_factor=b.mu_factor, tol=b.tol,
                         constr_viol_tol=b.constr_viol_tol, compl_inf_tol=b.compl_inf_tol,
                         acceptable_tol=b.acceptable_tol, accept_acceptable=b.accept_acceptable,
                         max_iter=b.max_iter)


def outer_settings(config: RunConfig) -> OuterSettings:
    o = config.optimizer
    return OuterSettings(max_iter=o.max_iter, change_tol=o.change_tol, move=o.move)


def build_problem(config: RunConfig) -> TopologyProblem:
    params = material_params(config)
    mesh = build_mesh(config.mesh.nx, config.mesh.ny, config.mesh.width, config.mesh.height)
    model = build_cantilever_model(mesh, params.nu, config.load.start, config.load.end, config.load.magnitude,
                                   config.load.direction)
    filter_spec = build_filter(mesh, config.filter.radius)
    return TopologyProblem(model, filter_spec, params, config.optimizer.volume_fraction, config.optimizer.rho_min)


def build_uncertainty_set(config: RunConfig, mesh: Mesh, budget: float) -> UncertaintySet:
    u = config.uncertainty
    return make_uncertainty_set(u.kind, mesh, config.material.p, budget, mean_budget=u.mean_budget,
                                anchor=u.anchor, weighting=u.weighting)


def budget_directory(root: str, budget: float) -> str:
    return os.path.join(root, f"D={budget:g}")


def design_decisions(config: RunConfig) -> Dict[str, Any]:
    return {
        "convergence": f"max|rho_new - rho| < {config.optimizer.change_tol:g} or {config.optimizer.max_iter} iterations",
        "objective_scaling": "divided by the first objective value of each loop",
        "mma": {
            "asymptote_init": MmaOptimizer.ASYINIT,
            "asymptote_increase": MmaOptimizer.ASYINCR,
            "asymptote_decrease": MmaOptimizer.ASYDECR,
            "albefa": MmaOptimizer.ALBEFA,
            "move": config.optimizer.move,
            "dual": "single volume multiplier, bracketed root search",
        },
        "volume_constraint": "on the unfiltered density",
        "element": "bilinear quadrilateral, 2x2 Gauss quadrature, plane strain",
        "dirichlet": "clamped dofs eliminated from the system",
        "material_law": "inverse interpolation 1/E = (1 - delta)/E0 + delta/E_D",
        "multipliers": "L = J_mu - lambda^T g, lambda_inequality >= 0",
        "reference_delta": "mean anchor for average-quadratic sets, zero otherwise",
        "pgm": "0 -> white, 1 -> black, top row first, effective modulus divided by E0",
    }


def analytic_bounds(config: RunConfig, budgets: List[float]) -> Dict[str, Any]:
    params = material_params(config)
    bounds: Dict[str, Any] = {"whole_domain_percent": 100.0 * (whole_domain_ratio(params) - 1.0)}
    if config.uncertainty.kind != "average-quadratic":
        bounds["uniform_spread_percent"] = {
            f"{budget:g}": 100.0 * uniform_spread_increase(budget, config.optimizer.volume_fraction, params)
            for budget in budgets if budget <= config.optimizer.volume_fraction
        }
    return bounds


def write_meta(path: str, config: RunConfig, status: str, extra: Optional[Dict[str, Any]] = None):
    meta = {
        "status": status,
        "config": config.to_dict(),
        "decisions": design_decisions(config),
    }
    if extra:
        meta.update(extra)
    with open(path, "w") as f:
        yaml.safe_dump(meta, f, sort_keys=False)


def export_design(directory: str, name: str, design: DesignField, mesh: Mesh):
    export_field(design.rho_filtered, mesh.nx, mesh.ny, "density", os.path.join(directory, f"{name}.pgm"))


def export_result(directory: str, result: RunResult, problem: TopologyProblem):
    mesh = problem.mesh
    export_design(directory, "rho", result.design, mesh)
    if result.inner is not None:
        export_field(result.inner.delta, mesh.nx, mesh.ny, "delta", os.path.join(directory, "delta.pgm"))
        moduli = problem.moduli(result.design.rho_filtered, result.inner.delta, result.inner.law)
        export_field(moduli, mesh.nx, mesh.ny, "effective-modulus", os.path.join(directory, "modulus.pgm"),
                     e0=problem.params.E0)


def optimize_config(config: RunConfig, budget: Optional[float] = None, nominal: Optional[NominalResult] = None,
                    listeners=None) -> RunResult:
    """
    Worst-case optimization for one budget of a resolved configuration (the first budget by default)
    """
    problem = build_problem(config)
    budget = config.uncertainty.budgets[0] if budget is None else budget
    uncertainty_set = build_uncertainty_set(config, problem.mesh, budget)
    return optimize(problem, uncertainty_set, barrier_config(config), outer_settings(config),
                    config.continuation.mode, config.continuation.steps, config.optimizer.tikhonov,
                    nominal=nominal, listeners=listeners)


@contextmanager
def export_stage(design: Optional[DesignField]):
    """
    Report a failed artifact write as a failure of the export stage
    """
    try:
        yield
    except OSError as e:
        raise StageError("export", design, e) from e


def run(config: RunConfig) -> int:
    """
    Nominal solve, one worst-case optimization per budget and the report

    Returns
    -------
    Exit status: 0 on success, 3 when a stage failed (artifacts written so far are kept)
    """
    root = config.output.directory
    meta_path = os.path.join(root, "meta.txt")
    budgets = sorted(set(config.uncertainty.budgets))
    try:
        os.makedirs(root, exist_ok=True)
        write_meta(meta_path, config, "running")
    except OSError as e:
        log.error(f"Stage 'export' failed: cannot write to {root}: {e}")
        return EXIT_STAGE

    try:
        problem = build_problem(config)
        barrier = barrier_config(config)
        settings = outer_settings(config)
        try:
            nominal: NominalResult = NominalSolver(problem, settings).solve()
        except Exception as e:
            raise StageError("nominal", None, e) from e
        with export_stage(nominal.design):
            export_design(root, "rho_nominal", nominal.design, problem.mesh)

        continuation = config.continuation
        pairs = []
        probes = {}
        for budget in budgets:
            directory = budget_directory(root, budget)
            with export_stage(nominal.design):
                os.makedirs(directory, exist_ok=True)
            uncertainty_set = build_uncertainty_set(config, problem.mesh, budget)
            analyzer = RobustRunAnalyzer(
                RobustRunAnalyzerConfig(
                    save_plots_dir=directory if config.output.plot else None,
                    dump_results_path=os.path.join(directory, "results") if config.output.dump_results else None,
                ),
                problem.mesh,
                budget,
            )
            for record in nominal.history:
                analyzer.on_nominal_iteration(record)
            log.info(f"Budget D={budget:g}")
            try:
                result = optimize(problem, uncertainty_set, barrier, settings, continuation.mode, continuation.steps,
                                  config.optimizer.tikhonov, nominal=nominal, listeners=[analyzer])
            except StageError as e:
                try:
                    analyzer.write_iteration_log(os.path.join(directory, "iterations.log"))
                    if e.design is not None:
                        export_design(directory, "rho_last_good", e.design, problem.mesh)
                except OSError as write_error:
                    log.error(f"Could not keep the last good design: {write_error}")
                raise

            analyzer.attach_result(result)
            with export_stage(result.design):
                analyzer.write_iteration_log(os.path.join(directory, "iterations.log"))
                with open(os.path.join(directory, "summary.txt"), "w") as f:
                    analyzer.save(f)
                export_result(directory, result, problem)
            pairs.append((uncertainty_set, result.design))

            if result.inner is not None:
                probe = concavity_probe(problem.model, result.design.rho_filtered, result.inner.delta, result.inner.u,
                                        problem.params, PROBE_DIRECTIONS, epsilon=result.inner.epsilon,
                                        seed=config.seed)
                probes[f"{budget:g}"] = {"max_value": probe.max_value, "identity_error": probe.identity_error,
                                         "directions": probe.n_dirs}

        steps = continuation.steps if continuation.mode != "off" else None
        last_design = pairs[-1][1] if pairs else nominal.design
        try:
            rows = evaluate_report(problem, nominal.design, pairs, barrier, steps)
        except Exception as e:
            raise StageError("report", last_design, e) from e
        with export_stage(last_design):
            export_report(rows, os.path.join(root, "report.csv"), continuation=steps is not None)
            write_meta(meta_path, config, "completed", {
                "nominal_compliance": nominal.compliance,
                "analytic_bounds": analytic_bounds(config, budgets),
                "concavity_probe": probes,
            })

    except StageError as e:
        log.error(f"Stage '{e.stage}' failed: {e}")
        try:
            write_meta(meta_path, config, f"failed at stage {e.stage}")
        except OSError as write_error:
            log.error(f"Could not record the failure in {meta_path}: {write_error}")
        return EXIT_STAGE

    log.info(f"Artifacts written to {root}")
    return EXIT_OK
