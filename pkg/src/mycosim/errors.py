"""Exception types raised across the toolkit."""


class MycoError(Exception):
    """Base class for all toolkit errors."""


class ImageDecodeError(MycoError):
    pass


class GridFormatError(MycoError):
    pass


class EmptyDomainError(MycoError):
    pass


class IntegrationDiverged(MycoError):
    def __init__(self, iteration):
        super().__init__(f"integration diverged: non-finite value at iteration {iteration}")
        self.iteration = iteration


class ElectrodeError(MycoError):
    pass


class SpikeInputError(MycoError):
    pass


class LoggerCSVError(MycoError):
    pass


class ConfigError(MycoError):
    """Raised with every validation problem found, not just the first."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
