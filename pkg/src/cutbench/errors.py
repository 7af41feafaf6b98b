class InvalidInput(ValueError):
    pass


class ContractViolation(RuntimeError):
    """An input broke a precondition that the algorithm only detects while running."""


class AmplificationExhausted(RuntimeError):
    pass


class StreamExhausted(RuntimeError):
    pass


class ClockExpired(Exception):
    def __init__(self, clock):
        super().__init__("query clock expired")
        self.clock = clock


class _Fail:
    """Sentinel returned by Monte Carlo routines that gave up."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "FAIL"

    def __bool__(self):
        return False


FAIL = _Fail()
