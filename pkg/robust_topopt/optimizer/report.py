import logging
from typing import Dict, List, Optional, Sequence, Tuple

from robust_topopt.adversary.barrier import BarrierConfig, solve_worst_case
from robust_topopt.adversary.continuation import direct_linear_worst_case, ramp_continuation
from robust_topopt.models import DesignField, ReportRow
from robust_topopt.optimizer.problem import TopologyProblem
from robust_topopt.uncertainty.sets import UncertaintySet

log = logging.getLogger(__name__)


def relative_increase(value: float, reference: float) -> float:
    """Compliance increase over the reference in percent"""
    return 100.0 * (value / reference - 1.0)


def continuation_triple(problem: TopologyProblem, design: DesignField, uncertainty_set: UncertaintySet,
                        barrier: BarrierConfig, steps: int) -> Tuple[float, float, float]:
    """
    Worst-case compliances (contin, direct, inverse) of one topology: the linear-law end of the
    ramp continuation, a single linear-law solve from the interior start and the inverse-law value
    """
    result = ramp_continuation(problem.model, design.rho_filtered, uncertainty_set, problem.params, steps, barrier)
    direct = direct_linear_worst_case(problem.model, design.rho_filtered, uncertainty_set, problem.params, barrier)
    return result.lower_bound, direct.compliance, result.upper_bound


def evaluate_report(problem: TopologyProblem, nominal: DesignField,
                    robust: Sequence[Tuple[UncertaintySet, DesignField]], barrier: BarrierConfig,
                    continuation_steps: Optional[int] = None) -> List[ReportRow]:
    """
    One report row per uncertainty set, sorted by budget

    Parameters
    ----------
    nominal:
        The nominal topology, shared by all rows
    robust:
        Pairs of uncertainty set and the robust topology optimized for it
    continuation_steps:
        Also evaluate the ramp continuation columns when given

    Returns
    -------
    Rows with the reference compliance of the nominal topology and the relative increases
    (percent) of the robust topology at the reference degradation and of both topologies at
    their worst case
    """
    rows = []
    references: Dict[bytes, float] = {}
    for uncertainty_set, design in sorted(robust, key=lambda pair: pair[0].budget):
        reference_delta = uncertainty_set.reference_delta()
        key = reference_delta.tobytes()
        if key not in references:
            references[key] = problem.compliance(nominal.rho_filtered, reference_delta)
        reference = references[key]

        robust_reference = problem.compliance(design.rho_filtered, reference_delta)
        nominal_worst = solve_worst_case(problem.model, nominal.rho_filtered, uncertainty_set, problem.params, barrier)
        robust_worst = solve_worst_case(problem.model, design.rho_filtered, uncertainty_set, problem.params, barrier)

        row = ReportRow(
            budget=uncertainty_set.budget,
            compliance_reference=reference,
            wc_topo_reference_delta=relative_increase(robust_reference, reference),
            nom_topo_worst_delta=relative_increase(nominal_worst.compliance, reference),
            wc_topo_worst_delta=relative_increase(robust_worst.compliance, reference),
        )
        if continuation_steps is not None:
            nom = continuation_triple(problem, nominal, uncertainty_set, barrier, continuation_steps)
            wc = continuation_triple(problem, design, uncertainty_set, barrier, continuation_steps)
            row.nom_contin, row.nom_direct, row.nom_inverse = (relative_increase(c, reference) for c in nom)
            row.wc_contin, row.wc_direct, row.wc_inverse = (relative_increase(c, reference) for c in wc)

        log.info(f"D={row.budget:g}: reference {reference:.6e}, robust@reference {row.wc_topo_reference_delta:+.4f}%, "
                 f"nominal@worst {row.nom_topo_worst_delta:+.4f}%, robust@worst {row.wc_topo_worst_delta:+.4f}%")
        rows.append(row)
    return rows
