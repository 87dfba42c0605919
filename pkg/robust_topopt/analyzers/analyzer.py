import json
import logging
import os
from abc import ABC, abstractmethod
from typing import List, Optional, TextIO

import matplotlib.pyplot as plt
import numpy as np

from robust_topopt.fe.mesh import Mesh
from robust_topopt.models import InnerSolution, OuterIteration, RunResult
from robust_topopt.optimizer.events import OptimizationEventListener


class RunAnalyzer(ABC):
    @abstractmethod
    def save(self, output: TextIO) -> None:
        """
        Save results to output
        """


class RobustRunAnalyzerConfig:
    def __init__(self, save_plots_dir=None, dump_results_path=None):
        self.save_plots_dir = save_plots_dir
        self.dump_results_path = dump_results_path


class RobustRunAnalyzer(RunAnalyzer, OptimizationEventListener):
    """
    Collects the nominal and worst-case iteration histories of one run
    """

    log = logging.getLogger("RobustRunAnalyzer")

    def __init__(self, config: RobustRunAnalyzerConfig, mesh: Mesh, budget: Optional[float] = None):
        self.config = config
        self.mesh = mesh
        self.budget = budget
        self._nominal: List[OuterIteration] = []
        self._outer: List[OuterIteration] = []
        self._inner_iterations: List[int] = []
        self._inner_residuals: List[float] = []
        self._acceptable_solves = 0
        self._result: Optional[RunResult] = None

    def on_nominal_iteration(self, record: OuterIteration):
        self._nominal.append(record)

    def on_outer_iteration(self, record: OuterIteration):
        self._outer.append(record)

    def on_inner_solve(self, inner: InnerSolution):
        self._inner_iterations.append(inner.iterations)
        self._inner_residuals.append(max(inner.residuals.stationarity, inner.residuals.primal))
        if inner.acceptable:
            self._acceptable_solves += 1

    def attach_result(self, result: RunResult):
        self._result = result

    def write_iteration_log(self, path: str):
        """
        One line per worst-case iteration: k, objective, volume, max|drho|, inner iterations
        """
        with open(path, "w") as f:
            for record in self._outer:
                f.write(f"{record.iteration} {record.objective:.12e} {record.volume:.12e} "
                        f"{record.change:.6e} {record.inner_iterations}\n")
        self.log.info(f"Wrote {len(self._outer)} iterations to {path}")

    def save(self, output: TextIO) -> None:
        headers = ("Iteration", "Objective", "Volume", "Change", "Inner")
        output.write("%-10s%-16s%-10s%-12s%-10s\n" % headers)
        for record in self._outer:
            output.write("%-10d%-16.8e%-10.4f%-12.4e%-10d\n" % (
                record.iteration, record.objective, record.volume, record.change, record.inner_iterations))
        output.write("\n")

        output.write(f"Nominal iterations: {len(self._nominal)}\n")
        output.write(f"Worst-case iterations: {len(self._outer)}\n")
        if self._inner_iterations:
            output.write(f"Average inner iterations: {np.mean(self._inner_iterations):.1f}\n")
            output.write(f"Largest inner residual: {max(self._inner_residuals):.3e}\n")
            output.write(f"Inner solves at the acceptable level: {self._acceptable_solves}\n")
        if self._result is not None:
            result = self._result
            output.write(f"Nominal compliance: {result.nominal_compliance:.8e}\n")
            if result.inner is not None:
                output.write(f"Worst-case compliance: {result.inner.compliance:.8e}\n")
            output.write(f"Converged: {result.converged}\n")
        output.write("\n")

        if self.config.save_plots_dir is not None:
            self.save_plot()

        if self.config.dump_results_path is not None:
            self.dump_results(self.config.dump_results_path, self.budget, self._nominal, self._outer,
                              self._inner_residuals, self._acceptable_solves, self._result)

    @staticmethod
    def dump_results(path, budget: Optional[float], nominal: List[OuterIteration], outer: List[OuterIteration],
                     inner_residuals: List[float], acceptable_solves: int, result: Optional[RunResult]):
        def records(history):
            return [{
                "iteration": r.iteration,
                "objective": r.objective,
                "volume": r.volume,
                "change": r.change,
                "inner_iterations": r.inner_iterations,
            } for r in history]

        data = {
            "budget": budget,
            "nominal": records(nominal),
            "worst_case": records(outer),
            "inner_residuals": inner_residuals,
            "acceptable_inner_solves": acceptable_solves,
        }
        if result is not None:
            data["nominal_compliance"] = result.nominal_compliance
            data["converged"] = result.converged
            if result.inner is not None:
                data["worst_case_compliance"] = result.inner.compliance
                data["worst_case_delta"] = result.inner.delta.tolist()
            data["rho"] = result.design.rho.tolist()

        extra_index = 1
        final_path = f"{path}-{extra_index}.json"
        while os.path.exists(final_path):
            extra_index += 1
            final_path = f"{path}-{extra_index}.json"

        logging.getLogger("RobustRunAnalyzer").info(f"Dumping results to {final_path}")
        with open(final_path, "w") as f:
            f.write(json.dumps(data))

    def save_plot(self):
        def plot_objective(ax: plt.Axes):
            xs = [r.iteration for r in self._outer]
            ys = [r.objective for r in self._outer]
            lines1 = ax.plot(xs, ys, color="red", label="Worst-case compliance")
            ax.set_xlabel("Outer iteration")
            ax.set_ylabel("Compliance", color="red")
            return (*lines1,)

        def plot_volume(ax: plt.Axes):
            xs = [r.iteration for r in self._outer]
            ys = [r.volume for r in self._outer]
            line1 = ax.plot(xs, ys, color="blue", label="Volume")
            ax.set_ylim(0, 1)
            ax.set_ylabel("Volume fraction", color="blue")
            return (*line1,)

        os.makedirs(self.config.save_plots_dir, exist_ok=True)
        output_file = os.path.join(self.config.save_plots_dir, "history.pdf")
        fig: plt.Figure
        ax1: plt.Axes
        fig, ax1 = plt.subplots()
        ax2: plt.Axes = ax1.twinx()
        lines = plot_objective(ax1) + plot_volume(ax2)
        labels = [line.get_label() for line in lines]
        fig.legend(lines, labels)
        fig.savefig(output_file)
        plt.close(fig)

        if self._result is not None and self._result.inner is not None:
            shape = (self.mesh.ny, self.mesh.nx)
            fig, (ax_rho, ax_delta) = plt.subplots(2, 1)
            ax_rho.imshow(self._result.design.rho_filtered.reshape(shape), cmap="gray_r", origin="lower",
                          vmin=0, vmax=1)
            ax_rho.set_title("Filtered density")
            ax_delta.imshow(self._result.inner.delta.reshape(shape), cmap="gray_r", origin="lower", vmin=0, vmax=1)
            ax_delta.set_title("Worst-case degradation")
            for ax in (ax_rho, ax_delta):
                ax.set_axis_off()
            fig.savefig(os.path.join(self.config.save_plots_dir, "fields.pdf"))
            plt.close(fig)
