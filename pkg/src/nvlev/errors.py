"""Exception hierarchy, mapped to CLI exit codes by nvlev.cli."""


class NvlevError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(NvlevError):
    """Invalid configuration or scenario file (exit code 2).

    Carries the full list of problems so a user can fix a scenario file
    in one pass.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class InfeasibleError(NvlevError):
    """Physically infeasible request, e.g. no stable levitation (exit code 3)."""


class AnalysisError(NvlevError):
    """Analysis failure: non-convergence or insufficient statistics (exit code 4)."""
