from __future__ import annotations

from typing import Optional, Tuple


class QuadtuneError(Exception):
    """Base class for every error raised by this package."""


class DomainError(QuadtuneError, ValueError):
    """A mathematical precondition does not hold."""


class ConfigurationError(QuadtuneError, ValueError):
    """Settings that validate individually but do not fit together."""


class ConvergenceError(QuadtuneError):

    def __init__(self, residual: float, iterations: int, omega: float, v_inf: float):
        self.residual = residual
        self.iterations = iterations
        self.omega = omega
        self.v_inf = v_inf
        super().__init__(
            f'BEMT did not converge at omega={omega:.3f} RPM, v_inf={v_inf:.3f} m/s '
            f'after {iterations} iterations (residual {residual:.3e}).')


class SurrogateBuildError(ConvergenceError):

    def __init__(self, cause: ConvergenceError, cell: Tuple[int, int]):
        self.cell = cell
        super().__init__(cause.residual, cause.iterations, cause.omega, cause.v_inf)
        self.args = (f'Surrogate cell {cell}: {cause}', )


class SimulationDiverged(QuadtuneError):

    def __init__(self, step: int, detail: Optional[str] = None):
        self.step = step
        msg = f'Non-finite state at step {step}.'
        if detail:
            msg = f'{msg} {detail}'
        super().__init__(msg)


class BudgetExhausted(QuadtuneError):
    """The optimizer budget did not allow a single evaluation."""
