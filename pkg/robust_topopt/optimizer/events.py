from abc import ABC, abstractmethod

from robust_topopt.models import InnerSolution, OuterIteration


class OptimizationEventListener(ABC):
    @abstractmethod
    def on_nominal_iteration(self, record: OuterIteration):
        """
        Called after every design update of the nominal SIMP solve
        """

    @abstractmethod
    def on_outer_iteration(self, record: OuterIteration):
        """
        Called after every design update of the worst-case loop

        Parameters
        ----------
        record:
            Worst-case compliance of the design before the update, its volume, the update size
            and the adversary iteration count
        """

    @abstractmethod
    def on_inner_solve(self, inner: InnerSolution):
        """
        Called with every adversary solution of the worst-case loop
        """
