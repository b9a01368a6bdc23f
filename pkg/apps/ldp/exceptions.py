class LdpError(Exception):
    pass


class UnreachableTargetError(LdpError):
    """The averaged diffusion vanishes, so no control can move the state to the target."""

    def __init__(self, target, reachable):
        self.target = target
        self.reachable = reachable
        super().__init__(
            f"target {target} is unreachable: sigma_bar vanishes along the free path ending at {reachable}"
        )


class TargetOutsideDomainError(LdpError):
    def __init__(self, target, distance):
        self.target = target
        self.distance = distance
        super().__init__(f"target {target} lies {distance:.3e} outside the closure of D(A)")


class WeightDegeneracyError(LdpError):
    """The Laplace weights collapsed onto too few paths for the Monte Carlo budget."""

    def __init__(self, ess, paths, epsilon):
        self.ess = ess
        self.paths = paths
        self.epsilon = epsilon
        super().__init__(
            f"effective sample size {ess:.3g} of {paths} paths at epsilon={epsilon:g}; "
            "increase the path count or epsilon"
        )


class InvalidTestFunctionError(LdpError):
    pass
