"""
Validated run configuration: the problem, its scales and the per-command
task blocks. Built by RunConfigSerializer.save().
"""
from dataclasses import dataclass, field

from apps.averaging.invariant import AveragingConfig
from apps.hjb.solver import GridConfig
from apps.ldp.montecarlo import MonteCarloConfig
from apps.ldp.optimize import OptimizerConfig, TestFunction
from apps.simulate.system import ScaleParams, SimConfig, SystemSpec


@dataclass(frozen=True)
class RateTask:
    t: float
    targets: list
    optimizer: OptimizerConfig


@dataclass(frozen=True)
class LaplaceTask:
    h: TestFunction
    t: float
    montecarlo: MonteCarloConfig
    thresholds: list = field(default_factory=list)
    tightness_t: float = None
    limit: bool = False


@dataclass(frozen=True)
class HjbTask:
    h: TestFunction
    grid: GridConfig
    every: int = 1


@dataclass(frozen=True)
class LyapunovTask:
    zeta: object              # scalar CoeffField in (x, y)
    L1: float
    L2: float
    center: list
    radius: float
    grid: list                # [low, high, count]
    x_points: list = None


@dataclass(frozen=True)
class CheckTask:
    samples: int = 1000
    radius: float = 5.0
    vi_paths: int = 100
    lyapunov: LyapunovTask = None


@dataclass(frozen=True)
class RunConfig:
    name: str
    seed: int
    spec: SystemSpec
    scales: list                          # ScaleParams, one per epsilon
    raw: dict = field(repr=False)
    sim: SimConfig = None
    averaging: AveragingConfig = field(default_factory=AveragingConfig)
    x_grid: list = None
    rate: RateTask = None
    laplace: LaplaceTask = None
    hjb: HjbTask = None
    check: CheckTask = field(default_factory=CheckTask)

    @property
    def scale(self) -> ScaleParams:
        """The single (epsilon, gamma) pair; the first one of a schedule."""
        return self.scales[0] if self.scales else None
